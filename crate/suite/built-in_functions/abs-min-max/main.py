x: int = nondet_int()
y: int = nondet_int()
__ESBMC_assume(x > -100 and x < 100 and y > -100 and y < 100)
assert abs(x) >= 0
assert min(x, y) <= max(x, y)
assert min(x, y) == x or min(x, y) == y
