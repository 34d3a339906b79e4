a: int = 7
b: int = 3
c: int = a + b - 2
assert c == 9
