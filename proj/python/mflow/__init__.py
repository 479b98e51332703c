"""Python interface to the mflow solver."""

import json

from ._mflow import (
    EntropyGenerator,
    InvalidInput,
    NumericalError,
    cli,
    default_box_radius,
    fit_decay_rate,
    gibbs_mass_bound,
    lambda_rate,
    nonconvex_probe,
    ou_oracle,
    shannon,
    tsallis,
)
from . import _mflow

__all__ = [
    "EntropyGenerator",
    "InvalidInput",
    "NumericalError",
    "cli",
    "default_box_radius",
    "fit_decay_rate",
    "gibbs_mass_bound",
    "lambda_rate",
    "nonconvex_probe",
    "ou_oracle",
    "shannon",
    "simulate",
    "tsallis",
    "verify",
]


def simulate(config_path):
    """Run the flow described by a config file.

    Returns a dict with the energy records, the run summary, the grid nodes
    and the final relative density.
    """
    records, summary, nodes, final_w = _mflow._simulate(str(config_path))
    return {
        "records": records,
        "summary": json.loads(summary),
        "nodes": nodes,
        "w": final_w,
    }


def verify(config_path):
    """Run every invariant check; returns the parsed report."""
    return json.loads(_mflow._verify(str(config_path)))
