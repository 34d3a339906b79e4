class Counter:
    step: int = 2

    def __init__(self, start: int) -> None:
        self.value: int = start

    def tick(self) -> None:
        self.value = self.value + self.step


c: Counter = Counter(5)
c.tick()
c.tick()
assert c.value == 9
