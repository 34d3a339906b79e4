x: int = nondet_int()
assert x != 1
assert x != 2
