x: int = nondet_int()
__ESBMC_assume(x >= 0 and x < 100)
assert x < 99
