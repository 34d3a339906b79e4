xs: list[int] = [3, 1, 4, 1, 5]
best: int = 0
for v in xs:
    if v > best:
        best = v
assert best == 5
