x: int = 1
x = x + 1
x = x * 5
assert x == 11
