import a

r: int = a.f(1)
assert r == 7
