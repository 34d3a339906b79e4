x: int = nondet_int()
__ESBMC_assume(x > 0)
y: int = x + 1
assert y > 0
