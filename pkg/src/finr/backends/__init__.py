# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""Per-axis sub-network backends."""

from .activations import ActivationKind, resolve_activation
from .encodings import encode
from .subnetwork import (
    ActivationSpec,
    EncodingSpec,
    SubNetworkParams,
    SubNetworkSpec,
    check_capability,
    forward_axis,
    init_subnetwork,
)

__all__ = [
    "ActivationKind",
    "resolve_activation",
    "encode",
    "ActivationSpec",
    "EncodingSpec",
    "SubNetworkParams",
    "SubNetworkSpec",
    "check_capability",
    "forward_axis",
    "init_subnetwork",
]
