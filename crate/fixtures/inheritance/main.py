class A:
    def __init__(self) -> None:
        self.a: int = 1

    def m(self) -> int:
        return 10

    def only_a(self) -> int:
        return self.a


class B(A):
    def m(self) -> int:
        return 20


class C(A):
    def m(self) -> int:
        return 30

    def c_only(self, k: int) -> int:
        return k // self.a


class D(B, C):
    pass


d: D = D()
assert d.m() == 20
assert d.only_a() == 1
