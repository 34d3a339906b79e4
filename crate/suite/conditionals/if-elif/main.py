x: int = nondet_int()
__ESBMC_assume(x >= -10 and x <= 10)
s: int = 0
if x < 0:
    s = -1
elif x == 0:
    s = 0
else:
    s = 1
assert s * x >= 0
assert s == 0 or s * x > 0 or x == 0
