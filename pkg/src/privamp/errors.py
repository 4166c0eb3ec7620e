"""Exception types shared across the package."""


class UsageError(ValueError):
    """Operands of incompatible shape, field or alphabet."""


class ModelError(ValueError):
    """A probabilistic model violates a structural assumption."""


class EnumerationCapError(RuntimeError):
    """An exhaustive enumeration would exceed the configured state cap.

    Attributes
    ----------
    size : int
        Number of states the enumeration would have visited.
    cap : int
        The cap that was in force.
    """

    def __init__(self, what, size, cap):
        self.what = what
        self.size = int(size)
        self.cap = int(cap)
        super().__init__(
            f"{what}: {self.size} states exceeds enumeration cap {self.cap}"
        )
