x: int = nondet_int()
__ESBMC_assume(x >= -5 and x <= 5)
ok: bool = x != 0 and 10 // x != 0 or x == 0
assert ok or x > 5 or x < -5 or (x != 0 and 10 // x == 0)
