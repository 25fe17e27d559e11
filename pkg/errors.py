from typing import Optional


class EMAformerError(Exception):
    pass


class DimensionError(EMAformerError, ValueError):
    pass


class LookupIndexError(EMAformerError, IndexError):
    pass


class ContractError(EMAformerError):
    pass


class ConfigurationError(EMAformerError):
    pass


class CheckpointError(ConfigurationError):
    pass


class ParseError(EMAformerError):
    def __init__(self, message: str, row: Optional[int] = None) -> None:
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class DivergenceError(EMAformerError):
    def __init__(self, message: str, checkpoint: Optional[str] = None) -> None:
        if checkpoint is not None:
            message = f"{message} (last good checkpoint: {checkpoint})"
        super().__init__(message)
        self.checkpoint = checkpoint
