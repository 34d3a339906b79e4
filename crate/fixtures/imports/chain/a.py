import b


def f(x: int) -> int:
    return b.g(x) + 1
