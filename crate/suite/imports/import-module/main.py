import helper

x: int = helper.double(21)
assert x == 42
