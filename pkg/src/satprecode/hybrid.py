"""Hybrid analog/digital factorisation ``W ~ F_RF F_BB``.

``F_RF`` (N x N_rf) is a phase-shifter network with unit-modulus entries and
``F_BB`` (N_rf x K) a small digital precoder.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .precoding import PrecodingMatrix, feed_powers


@dataclass(frozen=True)
class HybridFactors:
    """Analog and digital stages and the fit they achieve.

    ``reconstruction_error`` is ``||W - F_RF F_BB|| / ||W||`` (Frobenius)
    before the cap rescaling, and ``errors`` holds that quantity after the
    initial fit and after every iteration.  ``scale`` is the factor already
    folded into ``F_BB`` to bring the cascade under the per-feed cap (1 when
    the cap already held).
    """

    F_RF: np.ndarray
    F_BB: np.ndarray
    reconstruction_error: float
    errors: np.ndarray = field(default_factory=lambda: np.zeros(0))
    scale: float = 1.0

    @property
    def cascade(self):
        return self.F_RF @ self.F_BB


def dft_matrix(n):
    """Unit-modulus DFT matrix; its inverse is its conjugate transpose over n."""
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n)


def _fit_digital(F_RF, W):
    return np.linalg.lstsq(F_RF, W, rcond=None)[0]


def _phase(A):
    return np.exp(1j * np.angle(A))


def _coordinate_sweep(F_RF, F_BB, W):
    """Exact phase update of each analog column in turn, F_BB fixed.

    Rows of F_RF decouple, so every column update is a closed-form
    minimiser for all rows at once and the error can only go down.
    """
    F_RF = F_RF.copy()
    R = W - F_RF @ F_BB
    for m in range(F_RF.shape[1]):
        R += np.outer(F_RF[:, m], F_BB[m])
        corr = R @ F_BB[m].conj()
        F_RF[:, m] = np.where(np.abs(corr) > 0, _phase(corr), F_RF[:, m])
        R -= np.outer(F_RF[:, m], F_BB[m])
    return F_RF


def hybrid_decompose(W, n_rf, iters=50, P=None):
    """Alternating least-squares fit of a unit-modulus analog stage.

    Parameters
    ----------
    W : PrecodingMatrix or ndarray (N, K)
    n_rf : int
        Number of RF chains, ``K <= n_rf <= N``.
    iters : int
        Number of alternating iterations.
    P : float, optional
        Per-feed cap of the cascade; taken from ``W`` when it is a
        PrecodingMatrix, otherwise from the largest feed power of ``W``.

    Notes
    -----
    With ``n_rf = N`` the analog stage is the DFT matrix and ``F_BB`` is
    solved exactly.  Otherwise ``F_RF`` starts from the phases of the
    leading left singular vectors of ``W``.  Each iteration tries the
    phase-only projection of the unconstrained least-squares analog factor
    (kept only if it lowers the error), then updates each analog column
    exactly, then refits ``F_BB``.  Every step is non-increasing in error.
    """
    if isinstance(W, PrecodingMatrix):
        P = W.per_feed_limit if P is None else P
        W = W.W
    W = np.asarray(W, dtype=complex)
    n_feeds, n_beams = W.shape
    if int(n_rf) != n_rf or not n_beams <= n_rf <= n_feeds:
        raise InvalidArgumentError(f"n_rf must satisfy K={n_beams} <= n_rf <= N={n_feeds}, got {n_rf!r}")
    if iters < 1:
        raise InvalidArgumentError(f"iters must be >= 1, got {iters!r}")
    n_rf = int(n_rf)
    norm = np.linalg.norm(W)
    if not norm > 0:
        raise InvalidArgumentError("cannot decompose an all-zero precoder")
    P = float(feed_powers(W).max()) if P is None else float(P)

    def error(F_RF, F_BB):
        return float(np.linalg.norm(W - F_RF @ F_BB) / norm)

    if n_rf == n_feeds:
        F_RF = dft_matrix(n_feeds)
        F_BB = F_RF.conj().T @ W / n_feeds
        errors = [error(F_RF, F_BB)]
    else:
        U = np.linalg.svd(W)[0]
        F_RF = _phase(U[:, :n_rf])
        F_BB = _fit_digital(F_RF, W)
        errors = [error(F_RF, F_BB)]
        for _ in range(iters):
            candidate = _phase(W @ np.linalg.pinv(F_BB))
            if error(candidate, F_BB) < error(F_RF, F_BB):
                F_RF = candidate
            F_RF = _coordinate_sweep(F_RF, F_BB, W)
            F_BB = _fit_digital(F_RF, W)
            errors.append(error(F_RF, F_BB))

    peak = feed_powers(F_RF @ F_BB).max()
    scale = float(np.sqrt(P / peak)) if peak > P else 1.0
    return HybridFactors(F_RF, F_BB * scale, errors[-1], np.array(errors), scale)
