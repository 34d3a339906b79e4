x: int = 10
x += 5
x -= 3
x *= 2
x //= 4
assert x == 6
