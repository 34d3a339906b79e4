n: int = nondet_int()
__ESBMC_assume(n >= 0 and n <= 4)
total: int = 0
for k in range(n):
    total = total + 2
assert total != 8
