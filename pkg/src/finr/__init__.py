# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""
finr - factorized implicit neural representations.

Per-axis univariate networks composed through CP, tensor-train or Tucker
decompositions, with forward jets for input derivatives, a small reverse-mode
autodiff engine, image/SDF/PINN tasks and a benchmark harness.
"""
from importlib.metadata import version, PackageNotFoundError

_DIST_NAME = "finr"

try:
    __version__ = version(_DIST_NAME)
except PackageNotFoundError:
    __version__ = "0.0.0"
