def square(x: int):
    return x * x

s = square(7)
assert s == 49
