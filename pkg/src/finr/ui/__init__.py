# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""UI helper exports for the finr CLI."""

from .components import (
    console,
    format_report,
    render_card,
    render_status,
    render_table,
    Spinner,
    TrainingProgress,
)
from .theme import THEME, style

__all__ = [
    "console",
    "format_report",
    "render_card",
    "render_status",
    "render_table",
    "Spinner",
    "TrainingProgress",
    "THEME",
    "style",
]
