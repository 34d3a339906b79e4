b: bool = nondet_bool()
n: int = int(b)
assert n == 0 or n == 1
assert bool(n) == b
