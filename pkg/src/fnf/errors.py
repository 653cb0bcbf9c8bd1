"""Exception hierarchy shared by the whole package."""


class FnfError(Exception):
    """Base class; ``code`` is the machine-parsable tag printed by the CLI."""

    code = "FnfError"


class DimensionError(FnfError, ValueError):
    code = "DimensionError"


class ContractError(FnfError, ValueError):
    code = "ContractError"


class NonFiniteError(FnfError, ArithmeticError):
    code = "NonFiniteError"


class TapeError(FnfError, RuntimeError):
    code = "TapeError"


class CapabilityError(FnfError, TypeError):
    code = "CapabilityError"


class LoadError(FnfError, ValueError):
    code = "LoadError"


class ConfigError(FnfError, ValueError):
    code = "ConfigError"


class CheckpointError(FnfError, ValueError):
    code = "CheckpointError"
