"""Closed-form and numerical optima for the linear network, plus log-log
scaling fits.

On the chain with ``N`` links of capacity ``c``, flow 0 crosses all links
and flow ``i`` uses link ``i`` alone.  At the optimum every link is
saturated, short flows get ``c - x0`` each and their multiplier
``q = U'(c - x0)`` is the per-hop differential of flow 0's multipliers, so
flow 0's source multiplier is ``N q`` and the end-to-end sum is
``q N (N + 1) / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import optimize, stats


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class LinearNetOptimum:
    x0_star: float
    xi_star: float
    q_diff_star: float
    total_backlog_star: float


def linear_optimum_log(N, c) -> LinearNetOptimum:
    if N < 1 or not c > 0:
        raise ValueError("need N >= 1 and c > 0")
    return LinearNetOptimum(
        x0_star=c / (N + 1),
        xi_star=N * c / (N + 1),
        q_diff_star=(N + 1) / (N * c),
        total_backlog_star=(N + 1) ** 2 / (2 * c),
    )


def linear_optimum_alpha(N, c, alpha, tol=1e-13) -> LinearNetOptimum:
    """Optimum for ``U(x) = x**(1-alpha) / (1-alpha)`` on the chain.

    Solves ``U'(x0) = N U'(c - x0)`` for ``x0`` in ``(0, c)`` by bracketing
    root-finding in log space.
    """
    if N < 1 or not c > 0:
        raise ValueError("need N >= 1 and c > 0")
    if not alpha > 0 or alpha == 1:
        raise ValueError("alpha must be positive and differ from 1")

    # log U'(x0) - log(N U'(c - x0)); increasing-to-decreasing sign change
    def g(x0):
        return -alpha * np.log(x0) - np.log(N) + alpha * np.log(c - x0)

    lo, hi = c * 1e-15, c * (1 - 1e-15)
    try:
        x0, info = optimize.brentq(g, lo, hi, xtol=tol * c, rtol=4 * np.finfo(float).eps,
                                   maxiter=500, full_output=True)
    except ValueError as exc:
        raise OracleError(f"no sign change on (0, c): {exc}") from exc
    if not info.converged:
        raise OracleError(f"root-finding did not converge, residual {g(info.root):.3e}")
    xi = c - x0
    q = xi ** (-alpha)
    return LinearNetOptimum(x0_star=x0, xi_star=xi, q_diff_star=q,
                            total_backlog_star=q * N * (N + 1) / 2)


def kkt_residuals(opt: LinearNetOptimum, N, c, alpha=1.0):
    """Capacity and stationarity residuals of a chain optimum."""
    def marginal(x):
        return 1.0 / x if alpha == 1 else x ** (-alpha)
    return {
        "capacity": abs(opt.x0_star + opt.xi_star - c),
        "short_flow": abs(marginal(opt.xi_star) - opt.q_diff_star),
        "long_flow": abs(marginal(opt.x0_star) - N * opt.q_diff_star),
        "total": abs(opt.total_backlog_star - opt.q_diff_star * N * (N + 1) / 2),
    }


class ScalingFit(NamedTuple):
    exponent: float
    low: float
    high: float
    r_squared: float


def backlog_scaling_fit(points, confidence=0.95) -> ScalingFit:
    """Exponent ``p`` of ``backlog ~ N**p`` by log-log least squares."""
    pts = [(float(n), float(b)) for n, b in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    ns = np.array([p[0] for p in pts])
    bs = np.array([p[1] for p in pts])
    if np.any(ns <= 0) or np.any(bs <= 0):
        raise ValueError("sizes and backlogs must be positive")
    if ns.max() < 4 * ns.min():
        raise ValueError("sizes must span at least a factor of 4")
    res = stats.linregress(np.log(ns), np.log(bs))
    if len(pts) > 2 and res.stderr > 0:
        half = stats.t.ppf(0.5 + confidence / 2, len(pts) - 2) * res.stderr
    else:
        half = 0.0
    return ScalingFit(float(res.slope), float(res.slope - half), float(res.slope + half),
                      float(res.rvalue ** 2))
