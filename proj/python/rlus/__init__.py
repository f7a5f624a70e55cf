"""Python bindings for the rlus solver library.

Matrices are NumPy arrays. Permutations are dicts of the form
``{"r": r, "blocks": [[...], ...]}``; block k maps local row i to
``blocks[k][i]``.
"""

import json

import numpy as np

from . import _rlus
from ._rlus import NumericalFailure, covariance_error, relative_error

__all__ = [
    "NumericalFailure",
    "apply",
    "covariance_error",
    "default_options",
    "depermute",
    "fractional_hamming",
    "generate",
    "gw_match",
    "levsort",
    "relative_error",
    "run_trial",
    "solve_for_permutation",
]


def _dump(obj):
    return "" if obj is None else json.dumps(obj)


def default_options():
    return json.loads(_rlus.default_options())


def generate(n, d, m, r, seed, snr_db=None):
    """Draw an instance; returns a dict with B, X_star, Y, Y_clean, pi_star, sigma2."""
    cfg = {"n": n, "d": d, "m": m, "r": r, "seed": seed, "snr_db": snr_db}
    inst = _rlus.generate(json.dumps(cfg))
    inst["config"] = json.loads(inst["config"])
    inst["pi_star"] = json.loads(inst["pi_star"])
    return inst


def depermute(B, Y, r, options=None):
    """Two-stage solver. Returns pi_hat, X_hat, Y_hat and diagnostics."""
    out = _rlus.depermute(np.asarray(B, float), np.asarray(Y, float), r, _dump(options))
    out["pi_hat"] = json.loads(out["pi_hat"])
    out["diagnostics"] = json.loads(out["diagnostics"])
    return out


def levsort(B, Y, r, variant="score"):
    return json.loads(_rlus.levsort(np.asarray(B, float), np.asarray(Y, float), r, variant))


def solve_for_permutation(B, Y, pi):
    return _rlus.solve_for_permutation(np.asarray(B, float), np.asarray(Y, float), json.dumps(pi))


def apply(pi, M):
    return _rlus.apply(json.dumps(pi), np.asarray(M, float))


def fractional_hamming(a, b):
    return _rlus.fractional_hamming(json.dumps(a), json.dumps(b))


def gw_match(c_src, c_tgt, epsilon=None, polish=True):
    """Returns (assignment, cost, coupling) for two s x s cost matrices."""
    kwargs = {} if epsilon is None else {"epsilon": epsilon}
    return _rlus.gw_match(np.asarray(c_src, float), np.asarray(c_tgt, float), polish=polish, **kwargs)


def run_trial(n, d, m, r, seed, method="depermute", snr_db=None, options=None):
    cfg = {"n": n, "d": d, "m": m, "r": r, "seed": seed, "snr_db": snr_db}
    return _rlus.run_trial(json.dumps(cfg), method, _dump(options))
