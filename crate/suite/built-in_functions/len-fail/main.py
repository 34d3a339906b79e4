xs: list[int] = [1, 2, 3]
assert len(xs) == 4
