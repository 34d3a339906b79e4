x: int = nondet_int()
__ESBMC_assume(x >= -50 and x <= 50)
y: int = 7
q: int = x // y
r: int = x % y
assert q * y + r == x
assert r >= 0 and r < y
