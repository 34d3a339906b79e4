def scale(x: int, k: int = 3) -> int:
    return x * k


def twice(x: int) -> int:
    return scale(scale(x, 1), 2)


a: int = scale(4)
b: int = twice(5)
assert a == 12
assert b == 10
