# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""Reverse-mode autodiff with forward second-order jets."""

from .gradcheck import grad_check
from .jet import Jet2, activate, linear
from .tape import Node, Param, Tape

__all__ = ["grad_check", "Jet2", "activate", "linear", "Node", "Param", "Tape"]
