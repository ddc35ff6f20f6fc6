"""Exception hierarchy shared by all subsystems."""


class DomainError(ValueError):
    """An input violates an operation's mathematical contract."""


class ResourceCapError(RuntimeError):
    """A configured size or depth cap would be exceeded."""


class ConfigError(ValueError):
    """An experiment config is malformed; carries the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")
