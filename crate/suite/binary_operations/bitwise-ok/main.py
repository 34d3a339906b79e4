x: int = nondet_int()
__ESBMC_assume(x >= 0 and x < 256)
assert (x & 255) == x
assert (x | 0) == x
assert (x ^ x) == 0
