"""Convergence-rate constants for online heavy-ball Kaczmarz.

The rate is governed by the normalized second moment
``W = E[phi phi^T / ||phi||^2]`` of the measurement distribution. For a
momentum ``beta`` the squared error obeys the two-term recurrence

    e_{t+1} <= a1 * e_t + a2 * e_{t-1}
    a1 = 1 + 2 beta^2 + 3 beta - (1 + beta) sigma_min(W)
    a2 = 2 beta^2 + beta + beta sigma_max(W)

and whenever ``a1 + a2 < 1`` this gives ``E||x_t - x*||^2 <= q^t (1 + delta) ||x_0 - x*||^2``
with ``q = (a1 + sqrt(a1^2 + 4 a2)) / 2`` and ``delta = q - a1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import SymMatrix, sym_eigenvalues
from .solver import DEGENERATE_NORM_SQ
from .sources import MeasurementSource

SPECTRUM_SLACK = 1e-10
DEFAULT_MC_SAMPLES = 100_000
JACOBI_MAX_ORDER = 256


class EstimationError(RuntimeError):
    pass


@dataclass
class WEstimate:
    matrix: SymMatrix
    sample_count: int | None  # None marks the exact closed form
    sigma_min: float
    sigma_max: float

    @property
    def exact(self):
        return self.sample_count is None


def _extremes(matrix):
    method = "jacobi" if matrix.order <= JACOBI_MAX_ORDER else "lapack"
    eig = sym_eigenvalues(matrix, method=method)
    return float(eig[0]), float(eig[-1])


def estimate_W(spec, N=DEFAULT_MC_SAMPLES, seed=None):
    """Monte Carlo estimate of ``W`` from ``N`` fresh draws of ``spec``.

    Draws with ``||phi||^2 < 1e-24`` are discarded and not counted. ``seed``
    overrides ``spec.seed``.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    if seed is not None:
        spec = spec.with_seed(seed)
    source = MeasurementSource(spec)
    n = spec.n
    acc = np.zeros((n, n))
    used = 0
    drawn = 0
    while drawn < N:
        phis, _ = source.take(min(8192, N - drawn))
        if len(phis) == 0:
            break
        drawn += len(phis)
        nsq = np.einsum("ij,ij->i", phis, phis)
        ok = nsq >= DEGENERATE_NORM_SQ
        u = phis[ok] / np.sqrt(nsq[ok])[:, None]
        acc += u.T @ u
        used += int(ok.sum())
    if used == 0:
        raise EstimationError(f"all {drawn} samples were degenerate")
    W = SymMatrix.from_array(acc / used)
    smin, smax = _extremes(W)
    return WEstimate(W, used, smin, smax)


def closed_form_W_isotropic(n):
    """Exact ``W = I/n`` for sphere or Gaussian measurement vectors."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return WEstimate(SymMatrix.identity(n, 1.0 / n), None, 1.0 / n, 1.0 / n)


@dataclass(frozen=True)
class RateReport:
    beta: float
    sigma_min: float
    sigma_max: float
    a1: float
    a2: float
    q: float
    delta: float
    admissible: bool

    @property
    def condition_value(self):
        return condition_value(self.beta, self.sigma_min, self.sigma_max)


def condition_value(beta, sigma_min, sigma_max):
    """Left-hand side of the admissibility test; negative means linear convergence is guaranteed."""
    return 4.0 * beta + 4.0 * beta * beta - (1.0 + beta) * sigma_min + beta * sigma_max


def lemma_rate(a1, a2):
    """``(q, delta)`` for the recurrence ``F_{t+1} <= a1 F_t + a2 F_{t-1}``."""
    q = 0.5 * (a1 + math.sqrt(a1 * a1 + 4.0 * a2))
    return q, q - a1


def _check_spectrum(sigma_min, sigma_max):
    if not (-SPECTRUM_SLACK <= sigma_min <= sigma_max <= 1.0 + SPECTRUM_SLACK):
        raise ValueError(
            f"need 0 <= sigma_min <= sigma_max <= 1, got sigma_min={sigma_min}, sigma_max={sigma_max}")
    return min(max(sigma_min, 0.0), 1.0), min(max(sigma_max, 0.0), 1.0)


def rate_constants(beta, sigma_min, sigma_max):
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    sigma_min, sigma_max = _check_spectrum(sigma_min, sigma_max)
    b2 = beta * beta
    a1 = 1.0 + 2.0 * b2 + 3.0 * beta - (1.0 + beta) * sigma_min
    a2 = 2.0 * b2 + beta + beta * sigma_max
    q, delta = lemma_rate(a1, a2)
    admissible = condition_value(beta, sigma_min, sigma_max) < 0.0
    return RateReport(beta, sigma_min, sigma_max, a1, a2, q, delta, admissible)


def check_condition(beta, W):
    return condition_value(beta, W.sigma_min, W.sigma_max) < 0.0


def max_beta_isotropic(n):
    """Positive root of ``beta^2 + beta = 1/(4n)``, the admissibility edge for ``W = I/n``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    c = 1.0 / (4.0 * n)
    # (-1 + sqrt(1 + 4c)) / 2 without cancellation
    return 2.0 * c / (1.0 + math.sqrt(1.0 + 4.0 * c))


@dataclass
class RecurrenceCheck:
    F: np.ndarray  # F_0 .. F_{T+1}
    bound: np.ndarray  # bound[t] = q^t (1 + delta) F_0, compared against F[t+1]
    q: float
    delta: float
    violations: list

    @property
    def ok(self):
        return not self.violations


def recurrence_oracle(a1, a2, F0, T):
    """Iterate ``F_{t+1} = a1 F_t + a2 F_{t-1}`` from ``F_1 = F_0`` and test the geometric bound.

    The equality case is the worst sequence the inequality allows, so a bound
    that holds here holds for every admissible sequence.
    """
    if not a2 > 0.0:
        raise ValueError(f"need a2 > 0, got {a2}")
    if not a1 + a2 < 1.0:
        raise ValueError(f"need a1 + a2 < 1, got {a1 + a2}")
    if F0 < 0.0:
        raise ValueError("F0 must be non-negative")
    if T < 1:
        raise ValueError("T must be at least 1")
    q, delta = lemma_rate(a1, a2)
    F = np.empty(T + 2)
    F[0] = F[1] = F0
    for t in range(1, T + 1):
        F[t + 1] = a1 * F[t] + a2 * F[t - 1]
    t_idx = np.arange(1, T + 1)
    bound = np.empty(T + 1)
    bound[0] = (1.0 + delta) * F0
    bound[1:] = theorem_bound(t_idx, q, delta, F0)

    # Compare on the rescaled sequence G_t = F_t / q^t, which obeys
    # G_{t+1} = (a1/q) G_t + (a2/q^2) G_{t-1} and stays O(F0), so the test
    # is not swamped by underflow once F_t reaches the subnormal range.
    G = np.empty(T + 2)
    G[0] = F0
    G[1] = F0 / q
    c1, c2 = a1 / q, a2 / (q * q)
    for t in range(1, T + 1):
        G[t + 1] = c1 * G[t] + c2 * G[t - 1]
    limit = (1.0 + delta) * F0 / q
    violations = [int(t) for t in t_idx if G[t + 1] > limit]
    return RecurrenceCheck(F, bound, q, delta, violations)


def theorem_bound(t, q, delta, e0_sq):
    """``q^t (1 + delta) e0_sq``; ``t`` may be an array."""
    return np.power(q, t) * (1.0 + delta) * e0_sq
