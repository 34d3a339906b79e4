from helper import clamp

v: int = nondet_int()
__ESBMC_assume(v >= -20 and v <= 20)
c: int = clamp(v)
assert c < 10
