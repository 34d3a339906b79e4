x: float = 1.5
y: float = x * 4.0 - 2.0
assert y == 4.0
assert y > 3.9 and y < 4.1
