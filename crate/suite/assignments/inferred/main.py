a = 4
b = a * 2
c = b > a
assert c
assert b == 8
