def f(a: int) -> bool:
    return a + 1
