def inc(x: int) -> int:
    return x + 1
