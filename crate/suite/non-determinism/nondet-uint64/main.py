x: uint64 = nondet_uint64()
y: uint64 = x + uint64(1)
assert y > x
