x: int = nondet_int()
__ESBMC_assume(x >= 0 and x <= 20)
assert not (3 < x < 7) or x != 5
