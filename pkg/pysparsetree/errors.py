class SparseTreeError(Exception):
    """Base class for every error raised by pysparsetree."""


class DataError(SparseTreeError):
    """The input data cannot be used (CLI exit code 3)."""


class ParameterError(SparseTreeError):
    """A parameter is outside its domain (CLI exit code 2)."""


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NonBinaryLabel(DataError):
    def __init__(self, value):
        self.value = value
        super().__init__(f"label value {value!r} is not binary")


class EmptyFeatureSet(DataError):
    def __init__(self, message="no binary features remain after preprocessing"):
        super().__init__(message)


class SchemaMismatch(DataError):
    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__(f"columns required by the model are absent: {', '.join(self.missing)}")


class DegenerateClass(DataError):
    def __init__(self, message="objective needs at least one positive and one negative sample"):
        super().__init__(message)


class BadParameters(ParameterError):
    pass


class ZeroRegularizer(ParameterError):
    def __init__(self, message="leaf cap from the regularizer is undefined for lambda = 0"):
        super().__init__(message)


class FeatureOutOfRange(ParameterError):
    def __init__(self, feature, count):
        self.feature = feature
        super().__init__(f"feature index {feature} outside [0, {count})")


class InstanceTooLarge(ParameterError):
    pass


class MissingChild(SparseTreeError):
    """A support set is absent from the dependency graph."""


class SearchTimeout(SparseTreeError):
    """The time limit expired; ``result`` holds the best tree found and its gap."""

    def __init__(self, result):
        self.result = result
        super().__init__(f"time limit reached with optimality gap {result.gap:.6g}")


class InvalidModel(DataError):
    """A model document is malformed or does not match its own schema."""
