"""Weight-normalized diagonal linear networks: flows, invariants, bounds and the l1 oracle."""

import json

from ._core import (
    ConfigError,
    ParseError,
    WnlabError,
    cli,
    gen_instance,
    grad_loss,
    h0,
    integrate,
    kernel_orthant_probability,
    loss,
    min_l1_signed,
    min_weighted_l1_nonneg,
    positive_kernel_witness,
    rho,
)
from ._core import _run_campaign


def run_campaign(spec):
    """Runs an experiment spec (dict or JSON string); returns one dict per trial."""
    if not isinstance(spec, str):
        spec = json.dumps(spec)
    return _run_campaign(spec)


__all__ = [
    "ConfigError",
    "ParseError",
    "WnlabError",
    "cli",
    "gen_instance",
    "grad_loss",
    "h0",
    "integrate",
    "kernel_orthant_probability",
    "loss",
    "min_l1_signed",
    "min_weighted_l1_nonneg",
    "positive_kernel_witness",
    "rho",
    "run_campaign",
]
