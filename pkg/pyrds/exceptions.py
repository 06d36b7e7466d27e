class PyRDSError(Exception):
    pass

class GraphError(PyRDSError):
    pass

class GraphFormatError(GraphError):
    def __init__(self, message: str, line_number: int = None, path: str = None):
        self.line_number = line_number
        self.path = path
        if line_number is not None:
            where = f'{path}:{line_number}' if path is not None else f'line {line_number}'
            message = f'{where}: {message}'
        super().__init__(message)

class NetworkGenerationError(PyRDSError):
    pass

class HomophilyError(NetworkGenerationError):
    def __init__(self, message: str, attribute: str = None):
        self.attribute = attribute
        super().__init__(message)

class NetworkTransformError(PyRDSError):
    pass

class SamplingConfigError(PyRDSError):
    pass

class ChainDeathError(PyRDSError):
    def __init__(self, message: str, sample_size: int = 0):
        self.sample_size = sample_size
        super().__init__(message)

class EstimationError(PyRDSError):
    pass

class ConvergenceError(EstimationError):
    def __init__(self, message: str, residual: float = None):
        self.residual = residual
        super().__init__(message)

class MetricsError(PyRDSError):
    pass

class ExperimentError(PyRDSError):
    pass

class ConfigError(PyRDSError):
    pass

class ClampWarning(Warning):
    pass

class RewireSkipWarning(Warning):
    pass

class RelabelWarning(Warning):
    pass
