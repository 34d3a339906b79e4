x: int = nondet_int()
y: int = nondet_int()
__ESBMC_assume(x >= 0 and x < 10 and y >= 0 and y < 10)
z: int = 0
if x > 5:
    if y > 5:
        z = x + y
    else:
        z = x - y
else:
    z = y
assert z != 13
