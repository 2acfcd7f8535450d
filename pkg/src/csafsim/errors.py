class CsafsimError(Exception):
    pass


class ConfigError(CsafsimError, ValueError):
    """Invalid experiment, predictor or workload configuration."""


class BoundsError(CsafsimError, IndexError):
    pass


class ShapeError(CsafsimError, ValueError):
    """Two structures that must agree in size do not."""


class TraceStructureError(CsafsimError, ValueError):
    pass


class TraceParseError(TraceStructureError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno
