# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""
finr Command Line Interface.

Every command takes a TOML run configuration and an output directory, and
writes a manifest, metric CSVs, checkpoints and rendered results there.

Main Commands:
    fit-image: fit a PNG or synthetic image
    fit-sdf: fit an analytic shape's signed distance field
    fit-pinn: Taylor-Green vorticity super-resolution with a PDE loss
    bench: full-grid timing of factorized models against a coordinate MLP
    eval: render a checkpoint on an arbitrary grid
"""

from typing import Optional

import typer
from typer.core import TyperGroup

from finr import __version__
from finr.commands import bench, eval_checkpoint, fit_image, fit_pinn, fit_sdf


class OrderedGroup(TyperGroup):
    def list_commands(self, ctx):
        return ["fit-image", "fit-sdf", "fit-pinn", "bench", "eval"]


app = typer.Typer(cls=OrderedGroup, no_args_is_help=True)


def _version_callback(value: bool):
    if value:
        typer.echo(f"finr {__version__}")
        raise typer.Exit()


@app.callback()
def main(
    version: Optional[bool] = typer.Option(
        None, "--version", callback=_version_callback, is_eager=True, help="Show the version and exit"
    ),
):
    """
    finr: factorized implicit neural representations.
    """


app.command(name="fit-image")(fit_image)
app.command(name="fit-sdf")(fit_sdf)
app.command(name="fit-pinn")(fit_pinn)
app.command(name="bench")(bench)
app.command(name="eval")(eval_checkpoint)


if __name__ == "__main__":
    app()
