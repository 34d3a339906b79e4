x: int = nondet_int()
__ESBMC_assume(x >= 0 and x <= 10)
f: float = float(x) / 2.0
assert int(f) * 2 == x
