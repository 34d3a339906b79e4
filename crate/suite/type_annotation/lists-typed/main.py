xs: list[int] = [1, 2, 3]
ys = [4, 5, 6]
total: int = 0
for i in range(3):
    total = total + xs[i] * ys[i]
assert total == 32
