b: bool = nondet_bool()
x: int = 0
if b:
    x = 1
else:
    x = 2
assert x == 1 or x == 2
