"""Exception hierarchy for BridgeShift.

Library code raises these; the CLI maps ``exit_code`` to the process exit status
(0 success, 2 config error, 3 data error, 4 numerical failure).
"""

from __future__ import annotations


class BridgeShiftError(Exception):
    """Base class for all BridgeShift errors."""

    exit_code: int = 1


class ConfigError(BridgeShiftError, ValueError):
    """Invalid configuration or CLI option combination."""

    exit_code = 2


class DataError(BridgeShiftError, ValueError):
    """Inputs that cannot be used: wrong shapes, non-finite values, empty or degenerate batches."""

    exit_code = 3


class KernelMismatchError(DataError):
    """Two fitted components were built with incompatible kernels."""


class ModelFileError(DataError):
    """Model file is corrupted, not a BridgeShift model file, or has an unsupported version."""


class NumericalError(BridgeShiftError, RuntimeError):
    """A factorization failed even at the maximum diagonal jitter."""

    exit_code = 4
