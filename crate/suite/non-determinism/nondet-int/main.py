x: int = nondet_int()
__ESBMC_assume(x >= 0 and x < 1000)
assert x * x != 625
