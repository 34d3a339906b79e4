x: int = nondet_int()
__ESBMC_assume(x > 10 and x < 20)
assert x != 5
