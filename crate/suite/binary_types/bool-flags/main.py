p: bool = nondet_bool()
q: bool = nondet_bool()
r: bool = (p and q) or (not p and not q)
assert r == (p == q)
