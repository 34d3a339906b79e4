x: int = 3
y: float = x * 2.5
z: bool = y > 1.0
assert z
