x: int = nondet_int()
__ESBMC_assume(x >= 0 and x <= 3)
y: int = 10 // x
assert y >= 0
