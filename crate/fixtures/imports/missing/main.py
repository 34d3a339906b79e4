import nowhere

x: int = 1
