# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""Dense tensors and decomposition-composition kernels."""

from .dense import DenseTensor, read_ftnr
from .factors import (
    MODES,
    FactorSet,
    compose,
    compose_grid,
    compose_points,
    contract_point,
    cp_compose,
    factor_ranks,
    factor_rows,
    reference_compose,
    tt_compose,
    tucker_compose,
)

__all__ = [
    "DenseTensor",
    "read_ftnr",
    "MODES",
    "FactorSet",
    "compose",
    "compose_grid",
    "compose_points",
    "contract_point",
    "cp_compose",
    "factor_ranks",
    "factor_rows",
    "reference_compose",
    "tt_compose",
    "tucker_compose",
]
