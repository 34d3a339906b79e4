def safe_div(a: int, b: int) -> int:
    if b == 0:
        return 0
    return a // b


def half(x: int) -> int:
    return 100 // x
