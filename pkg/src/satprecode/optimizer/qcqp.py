"""Quadratic forms of the QoS-constrained power-minimisation problem.

The stacked precoder is ``w = [w_1; ...; w_K]`` (length N*K, beam-major).
User i of beam k meets its SINR target iff ``w^H R w >= 1`` with::

    R = (diag(e_k) (x) h h^H - gamma_k (I - diag(e_k)) (x) h h^H) / (sigma^2 gamma_k)

where h is the conjugate of the user's channel row, so that
``h^H w_j = row @ w_j``.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatchError, InvalidArgumentError


@dataclass(frozen=True)
class QosTargets:
    """Per-beam linear SINR thresholds and the receiver noise variance."""

    gamma: np.ndarray
    noise_variance: float = 1.0

    def __post_init__(self):
        gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float)).copy()
        if gamma.ndim != 1 or np.any(~(gamma > 0)) or not np.all(np.isfinite(gamma)):
            raise InvalidArgumentError(f"gamma must be finite and > 0, got {self.gamma!r}")
        if not self.noise_variance > 0:
            raise InvalidArgumentError(f"noise_variance must be > 0, got {self.noise_variance!r}")
        gamma.setflags(write=False)
        object.__setattr__(self, "gamma", gamma)

    @classmethod
    def uniform(cls, value, n_beams, noise_variance=1.0):
        return cls(np.full(n_beams, float(value)), noise_variance)

    def for_beams(self, n_beams):
        if self.gamma.size == 1:
            return np.full(n_beams, self.gamma[0])
        if self.gamma.size != n_beams:
            raise DimensionMismatchError(f"{self.gamma.size} targets for {n_beams} beams")
        return self.gamma


@dataclass(frozen=True)
class QuadraticConstraint:
    """``w^H R w >= 1`` for the user ``owner = (beam, user)``."""

    R: np.ndarray
    owner: tuple

    def value(self, w):
        return float(np.real(np.vdot(w, self.R @ w)))

    def satisfied(self, w, tol=0.0):
        return self.value(w) >= 1.0 - tol


def stack(W):
    """N x K precoder -> beam-major stacked vector."""
    return np.asarray(W).T.reshape(-1)


def unstack(w, n_feeds):
    return np.asarray(w).reshape(-1, n_feeds).T


def build_qcqp(channels, targets):
    """One indefinite quadratic constraint per (beam, user).

    Returned in beam-major order, ``owner = (k, i)``.
    """
    H = channels.matrices
    n_users, n_beams, n_feeds = H.shape
    gamma = targets.for_beams(n_beams)
    sigma2 = targets.noise_variance
    constraints = []
    for k in range(n_beams):
        selector = np.zeros(n_beams)
        selector[k] = 1.0
        own = np.diag(selector)
        others = np.eye(n_beams) - own
        for i in range(n_users):
            h = H[i, k].conj()
            hh = np.outer(h, h.conj())
            R = (np.kron(own, hh) - gamma[k] * np.kron(others, hh)) / (sigma2 * gamma[k])
            constraints.append(QuadraticConstraint(R, (k, i)))
    return constraints
