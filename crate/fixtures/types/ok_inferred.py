def f(a: int):
    return a + 1

v = f(2)
w = v * 2
assert w == 6
