import base


def triple_inc(x: int) -> int:
    return base.inc(x) * 3
