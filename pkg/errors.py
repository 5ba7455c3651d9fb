class SeparationToolkitError(Exception):
    pass
class SignalError(SeparationToolkitError):
    pass
class ShapeError(SeparationToolkitError):
    pass
class NonFiniteError(SeparationToolkitError):
    pass
class LossError(SeparationToolkitError):
    pass
class ConfigError(SeparationToolkitError):
    pass
class CheckpointError(SeparationToolkitError):
    pass
class AudioFormatError(SeparationToolkitError):
    pass
class StrategyError(SeparationToolkitError):
    pass
class StorageError(SeparationToolkitError):
    pass
class StorageFileNotFoundError(StorageError):
    pass
class StoragePermissionError(StorageError):
    pass
