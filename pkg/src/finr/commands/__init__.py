# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""Command implementations for the finr CLI."""

from .bench import bench
from .evaluate import eval_checkpoint
from .fit_image import fit_image
from .fit_pinn import fit_pinn
from .fit_sdf import fit_sdf

__all__ = [
    "bench",
    "eval_checkpoint",
    "fit_image",
    "fit_pinn",
    "fit_sdf",
]
