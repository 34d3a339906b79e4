def h(x: int) -> int:
    return x + 2
