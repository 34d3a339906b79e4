a: uint256 = nondet_uint256()
b: uint256 = a ^ a
assert b == uint256(0)
