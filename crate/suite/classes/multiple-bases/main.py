class A:
    def who(self) -> int:
        return 1


class B:
    def who(self) -> int:
        return 2


class C(A, B):
    pass


class D(B, A):
    pass


c: C = C()
d: D = D()
assert c.who() == 1
assert d.who() == 2
