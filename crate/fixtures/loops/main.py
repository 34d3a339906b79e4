i: int = 0
while i < 10:
    i = i + 1
assert i == 10
