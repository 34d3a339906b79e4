a: int = 7
b: int = a / 2
