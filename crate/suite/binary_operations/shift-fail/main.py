x: int = nondet_int()
__ESBMC_assume(x >= 0 and x < 16)
y: int = x << 2
assert y >> 2 == x
assert y != 36
