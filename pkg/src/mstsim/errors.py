"""Error types shared across the package."""


class SimError(Exception):
    """An error carrying a short machine-readable code."""

    def __init__(self, code: str, message: str = ""):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)
