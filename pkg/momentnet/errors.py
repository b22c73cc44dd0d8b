# Copyright 2024 The momentnet Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
#

from .config import ExitCode

__all__ = [
    "AlignmentError",
    "CentralityError",
    "ConditioningError",
    "ConfigError",
    "DataError",
    "DegenerateDensityError",
    "DimensionError",
    "DomainError",
    "EstimationError",
    "FilterDivergenceError",
    "FitError",
    "IdentificationError",
    "MissingInputError",
    "MomentNetError",
    "NumericalError",
    "RankError",
    "SampleSizeError",
    "UnstableConfigError",
]


def _rebuild(cls, args, state):
    error = cls.__new__(cls)
    Exception.__init__(error, *args)
    error.__dict__.update(state)
    return error


class MomentNetError(Exception):
    """Base class of every error raised on purpose by momentnet."""

    exit_code = ExitCode.NUMERICAL_ERROR

    # Subclasses take structured constructor arguments, so errors raised
    # in worker processes are rebuilt from their message and attributes
    def __reduce__(self):
        return (_rebuild, (self.__class__, self.args, self.__dict__))

    def prefix(self, context):
        """Prepend ``context`` to the message, keeping the type."""
        self.args = (f"{context}: {self.args[0]}",) + self.args[1:]
        return self


# Configuration


class ConfigError(MomentNetError, ValueError):
    exit_code = ExitCode.CONFIG_ERROR

    def __init__(self, message, path=None, field=None):
        self.path = path
        self.field = field
        where = []
        if path is not None:
            where.append(str(path))
        if field is not None:
            where.append(str(field))
        prefix = ": ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


# Data


class DataError(MomentNetError, ValueError):
    exit_code = ExitCode.DATA_ERROR


class AlignmentError(DataError):
    pass


class MissingInputError(DataError):
    def __init__(self, path, stage=None):
        self.path = path
        self.stage = stage
        msg = f"missing input file '{path}'"
        if stage is not None:
            msg += f" (run the '{stage}' stage first)"
        super().__init__(msg)


class SampleSizeError(DataError):
    pass


class DimensionError(DataError):
    pass


# Numerical


class NumericalError(MomentNetError, ArithmeticError):
    exit_code = ExitCode.NUMERICAL_ERROR


class DomainError(NumericalError):
    pass


class FilterDivergenceError(NumericalError):
    def __init__(self, index, message="non-finite score"):
        self.index = index
        super().__init__(f"{message} at t={index}")


class FitError(NumericalError):
    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics
        super().__init__(message)


class ConditioningError(NumericalError):
    def __init__(self, index, condition):
        self.index = index
        self.condition = condition
        super().__init__(
            f"innovation covariance is ill-conditioned at t={index} "
            f"(condition number {condition:.3e})"
        )


class EstimationError(NumericalError):
    pass


class IdentificationError(NumericalError):
    pass


class RankError(NumericalError):
    def __init__(self, columns):
        self.columns = tuple(columns)
        super().__init__(
            "collinear regressors: " + ", ".join(str(c) for c in columns)
        )


class DegenerateDensityError(NumericalError):
    pass


class CentralityError(NumericalError):
    pass


class UnstableConfigError(ConfigError):
    def __init__(self, radius):
        self.radius = radius
        super().__init__(
            f"simulated VAR is not stable: "
            f"spectral radius {radius:.6f} >= 1",
            field="synthetic",
        )
