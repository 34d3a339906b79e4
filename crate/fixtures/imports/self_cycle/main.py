import main

x: int = 1
