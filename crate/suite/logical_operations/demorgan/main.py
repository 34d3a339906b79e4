a: bool = nondet_bool()
b: bool = nondet_bool()
assert (not (a and b)) == ((not a) or (not b))
assert (not (a or b)) == ((not a) and (not b))
