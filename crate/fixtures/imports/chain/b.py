from c import h


def g(x: int) -> int:
    return h(x) * 2
