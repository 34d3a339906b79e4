class Shape:
    def __init__(self, side: int) -> None:
        self.side: int = side

    def area(self) -> int:
        return 0


class Square(Shape):
    def area(self) -> int:
        return self.side * self.side


class Rect(Square):
    def __init__(self, side: int, other: int) -> None:
        self.side = side
        self.other: int = other

    def area(self) -> int:
        return self.side * self.other


s: Square = Square(4)
r: Rect = Rect(2, 3)
assert s.area() == 16
assert r.area() == 5
