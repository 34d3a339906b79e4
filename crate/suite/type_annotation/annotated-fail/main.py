def inc(x: int) -> int:
    return x + 1

v: int = inc(41)
w: bool = v == 42
assert not w
