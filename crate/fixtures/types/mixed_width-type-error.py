a: uint64 = uint64(3)
b: int = 4
c = a + b
