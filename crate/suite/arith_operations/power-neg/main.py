b: int = 3
p: int = b ** 4
n: int = -p
assert n == -81
assert abs(n) == 81
