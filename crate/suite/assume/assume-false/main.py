x: int = nondet_int()
__ESBMC_assume(x > 5 and x < 3)
assert False
