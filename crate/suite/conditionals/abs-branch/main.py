x: int = nondet_int()
__ESBMC_assume(x > -1000 and x < 1000)
a: int = x
if x < 0:
    a = -x
assert a >= 0
assert a == abs(x)
