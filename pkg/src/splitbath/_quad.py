"""Adaptive quadrature over piecewise-smooth integrands (thin layer over QUADPACK)."""

import warnings

import numpy as np
from scipy import integrate as _si

from .errors import NumericError


def _pieces(a, b, points):
    inner = sorted({float(p) for p in points if a < p < b and np.isfinite(p)})
    edges = [a, *inner, b]
    return list(zip(edges[:-1], edges[1:]))


def adaptive(f, a, b, points=(), rtol=1e-9, atol=0.0, limit=500):
    """Integrate scalar ``f`` over ``(a, b)``; ``a``/``b`` may be infinite.

    The interval is split at ``points`` so that kinks, peaks and removable
    singularities sit on subinterval edges.  Returns ``(value, abserr)`` and
    raises :class:`NumericError` if the combined error estimate misses
    ``max(atol, rtol * |value|)`` by more than a factor of ten.
    """
    total = 0.0
    err = 0.0
    failed = False
    for lo, hi in _pieces(a, b, points):
        if lo == hi:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", _si.IntegrationWarning)
            out = _si.quad(f, lo, hi, epsabs=atol, epsrel=rtol, limit=limit, full_output=1)
        total += out[0]
        err += out[1]
        failed |= len(out) > 3
    target = max(atol, rtol * abs(total))
    if failed and err > 10 * target:
        raise NumericError(
            f"quadrature over ({a}, {b}) did not converge: error estimate {err:.3g} "
            f"for value {total:.6g} (requested {target:.3g})",
            achieved=err,
        )
    return total, err
