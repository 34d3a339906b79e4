x: int = 1
x: bool = True
