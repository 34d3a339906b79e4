a: int = nondet_int()
b: int = nondet_int()
__ESBMC_assume(a >= 0 and a < 64 and b >= 0 and b < 64)
x: int = a
y: int = b
x = x ^ y
y = x ^ y
x = x ^ y
assert x == b and y == a
