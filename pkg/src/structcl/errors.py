"""Exception hierarchy shared by every module."""


class StructCLError(Exception):
    pass


class ParseError(StructCLError, ValueError):
    def __init__(self, path, lineno, msg):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {msg}")


class DimensionError(StructCLError, ValueError):
    pass


class ConfigError(StructCLError, ValueError):
    pass


class TrainingError(StructCLError, RuntimeError):
    pass


class DegenerateInputError(StructCLError, ValueError):
    pass
