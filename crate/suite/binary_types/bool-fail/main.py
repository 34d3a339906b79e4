p: bool = nondet_bool()
q: bool = nondet_bool()
assert p or q
