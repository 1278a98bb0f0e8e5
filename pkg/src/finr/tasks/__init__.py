# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""Training tasks and fidelity metrics."""

from .image import ImageTask, image_loss, synthetic_image
from .metrics import METRIC_COLUMNS, MetricReport, iou, mse, psnr, ssim
from .pinn import PinnTask, ns_residual, pinn_loss, sample_collocation, taylor_green_reference
from .sdf import SdfTask, sdf_loss, truncate_sdf

__all__ = [
    "ImageTask",
    "image_loss",
    "synthetic_image",
    "METRIC_COLUMNS",
    "MetricReport",
    "iou",
    "mse",
    "psnr",
    "ssim",
    "PinnTask",
    "ns_residual",
    "pinn_loss",
    "sample_collocation",
    "taylor_green_reference",
    "SdfTask",
    "sdf_loss",
    "truncate_sdf",
]
