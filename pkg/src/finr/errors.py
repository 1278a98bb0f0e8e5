# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""
Exception hierarchy for finr.

Every error raised by the engine derives from FinrError and carries the
process exit code the CLI should use when the error escapes a command.
"""


class FinrError(Exception):
    """Base class for all finr errors."""

    exit_code: int = 2


class ShapeError(FinrError):
    """Raised when tensor extents or ranks do not agree."""

    pass


class ContractError(FinrError):
    """Raised when an API precondition is violated (e.g. non-scalar loss)."""

    pass


class InputError(FinrError):
    """Raised for non-finite or out-of-domain inputs."""

    pass


class ConfigError(FinrError):
    """Raised when a configuration file is unreadable or invalid."""

    exit_code = 2


class CapabilityError(FinrError):
    """Raised when a backend cannot provide what a task requires."""

    exit_code = 3


class CheckpointError(FinrError):
    """Raised for corrupt, truncated, or version-mismatched checkpoints."""

    pass


class NumericFailure(FinrError):
    """Raised when training produces a non-finite loss or an assertion fails."""

    exit_code = 4
