"""Linear multigroup-multicast precoders and SINR evaluation.

All precoders are designed on the channel set of one frame and scaled by a
single factor so that the most loaded feed meets the per-feed power limit
with equality.  Noise variance is one throughout (it is folded into the
channel normalisation).
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateChannelError,
    DimensionMismatchError,
    InsufficientFeedsError,
    InvalidArgumentError,
    SingularChannelError,
)

FEASIBILITY_SLACK = 1e-9


@dataclass(frozen=True)
class PrecodingMatrix:
    """Precoder ``W`` (N x K, column k feeds beam k) with per-feed limit ``P``."""

    W: np.ndarray
    per_feed_limit: float

    def __post_init__(self):
        W = np.array(self.W, dtype=complex)
        if W.ndim != 2:
            raise InvalidArgumentError(f"W must be a matrix, got shape {W.shape}")
        if self.per_feed_limit < 0:
            raise InvalidArgumentError(f"per_feed_limit must be >= 0, got {self.per_feed_limit!r}")
        powers = feed_powers(W)
        if powers.size and powers.max() > self.per_feed_limit * (1 + FEASIBILITY_SLACK):
            raise InvalidArgumentError(
                f"feed power {powers.max():.6g} exceeds per-feed limit {self.per_feed_limit:.6g}"
            )
        W.setflags(write=False)
        object.__setattr__(self, "W", W)

    @property
    def n_feeds(self):
        return self.W.shape[0]

    @property
    def n_beams(self):
        return self.W.shape[1]

    def feed_powers(self):
        return feed_powers(self.W)

    @property
    def total_power(self):
        return float(np.sum(np.abs(self.W) ** 2))


@dataclass(frozen=True)
class SinrReport:
    sinr: np.ndarray  # (K, N_u), linear
    beam_rate: np.ndarray  # (K,), bit/s/Hz
    sum_rate: float

    @property
    def min_sinr(self):
        return self.sinr.min(axis=1)


def feed_powers(W):
    """Diagonal of W W^H: transmit power of each feed."""
    return np.sum(np.abs(np.asarray(W)) ** 2, axis=1)


def _as_matrix(W):
    return W.W if isinstance(W, PrecodingMatrix) else np.asarray(W, dtype=complex)


def evaluate_sinr(channels, W):
    """Per-user SINR and min-user multicast rates.

    ``sinr[k, i]`` is the SINR of user i of beam k; beam rates use the
    weakest user of each beam.
    """
    W = _as_matrix(W)
    H = channels.matrices
    n_users, n_beams, n_feeds = H.shape
    if W.shape != (n_feeds, n_beams):
        raise DimensionMismatchError(
            f"W has shape {W.shape}, channels need ({n_feeds}, {n_beams})"
        )
    # G[i, k, j] = |h_k^[i] w_j|^2
    G = np.abs(np.einsum("ikn,nj->ikj", H, W)) ** 2
    signal = np.einsum("ikk->ik", G)
    interference = G.sum(axis=2) - signal
    sinr = (signal / (interference + 1.0)).T
    beam_rate = np.log2(1.0 + sinr.min(axis=1))
    return SinrReport(sinr=sinr, beam_rate=beam_rate, sum_rate=float(beam_rate.sum()))


def rescale_per_feed(W, P):
    """Scale ``W`` so its most loaded feed transmits exactly ``P``."""
    W = _as_matrix(W)
    peak = feed_powers(W).max() if W.size else 0.0
    if not peak > 0:
        raise InvalidArgumentError("cannot rescale an all-zero precoder")
    if P < 0:
        raise InvalidArgumentError(f"P must be >= 0, got {P!r}")
    return PrecodingMatrix(W * np.sqrt(P / peak), float(P))


def _check_power(P):
    if not P > 0 or not np.isfinite(P):
        raise InvalidArgumentError(f"per-feed power must be finite and > 0, got {P!r}")


def mmse_multicast(channels, P):
    """Regularised inverse of the user-averaged channel.

    ``W ~ (Hh^H Hh + I/P)^-1 Hh^H`` with Hh the average over the frame's
    users, then scaled to the per-feed limit.
    """
    _check_power(P)
    Hh = channels.average
    if not np.any(Hh):
        raise DegenerateChannelError("average channel is identically zero")
    n_feeds = Hh.shape[1]
    Hh_H = Hh.conj().T
    W = np.linalg.solve(Hh_H @ Hh + np.eye(n_feeds) / P, Hh_H)
    return rescale_per_feed(W, P)


def zero_forcing(channels, P):
    """Pseudo-inverse of the average channel, scaled to the per-feed limit."""
    _check_power(P)
    Hh = channels.average
    n_beams, n_feeds = Hh.shape
    if n_feeds < n_beams:
        raise SingularChannelError(f"zero forcing needs N >= K, got N={n_feeds}, K={n_beams}")
    s = np.linalg.svd(Hh, compute_uv=False)
    if not s[-1] > s[0] * max(Hh.shape) * np.finfo(float).eps:
        raise SingularChannelError("average channel is rank deficient")
    W = Hh.conj().T @ np.linalg.inv(Hh @ Hh.conj().T)
    return rescale_per_feed(W, P)


def beam_effective_channels(channels):
    """One representative row per beam from its block of user channels.

    The dominant right singular vector of the N_u x N block of beam k, scaled
    by ``sigma_1 / sqrt(N_u)`` and phase-aligned with the average row.  It
    is the direction that maximises the summed gain toward the beam's users
    and reduces to the user's own row when N_u = 1.
    """
    blocks = np.swapaxes(channels.matrices, 0, 1)  # (K, N_u, N)
    _, s, Vh = np.linalg.svd(blocks, full_matrices=False)
    rows = (s[:, :1] / np.sqrt(blocks.shape[1])) * Vh[:, 0, :]
    align = np.sum(rows.conj() * channels.average, axis=1)
    phase = np.where(np.abs(align) > 0, align / np.where(align == 0, 1, np.abs(align)), 1.0)
    return rows * phase[:, None]


def _null_space(A, rtol=1e-12):
    """Orthonormal basis (columns) of {w : A w = 0}."""
    if A.shape[0] == 0:
        return np.eye(A.shape[1], dtype=complex)
    _, s, Vh = np.linalg.svd(A)
    rank = int(np.sum(s > rtol * max(s[0], np.finfo(float).tiny) * max(A.shape)))
    return Vh[rank:].conj().T


REPRESENTATIVES = ("dominant", "average")


def block_svd(channels, P, representative="dominant"):
    """Block-SVD multicast precoder.

    Every beam is represented by one row: by default the dominant right
    singular vector of its users' channel block (see
    :func:`beam_effective_channels`), or with ``representative="average"``
    the beam's row of the user-averaged channel.  Column k of W is the
    projection of beam k's representative onto the null space of the other
    beams' representatives, normalised to unit norm, and the assembled
    matrix is scaled to the per-feed limit.  Both choices coincide when
    N_u = 1.

    When the representative matrix has full row rank all K null spaces come
    out of one SVD of it: the null space of the other rows is
    null(Hr) plus the direction of column k of the pseudo-inverse, and the
    beam's own row is orthogonal to null(Hr), so the projection is that
    pseudo-inverse column.  Otherwise each null space is factorised
    separately.
    """
    _check_power(P)
    if representative not in REPRESENTATIVES:
        raise InvalidArgumentError(f"representative must be one of {REPRESENTATIVES}, got {representative!r}")
    n_beams, n_feeds = channels.n_beams, channels.n_feeds
    if n_feeds < n_beams:
        raise InsufficientFeedsError(f"block-SVD needs N >= K, got N={n_feeds}, K={n_beams}")
    Hr = beam_effective_channels(channels) if representative == "dominant" else channels.average
    U, s, Vh = np.linalg.svd(Hr, full_matrices=False)
    if s[-1] > s[0] * max(Hr.shape) * np.finfo(float).eps * 1e3:
        W = Vh.conj().T @ (U.conj().T / s[:, None])
    else:
        W = np.zeros((n_feeds, n_beams), dtype=complex)
        for k in range(n_beams):
            V = _null_space(np.delete(Hr, k, axis=0))
            W[:, k] = V @ (V.conj().T @ Hr[k].conj())
    norms = np.linalg.norm(W, axis=0)
    # a beam inside the span of the others gets no power, not a noise direction
    served = norms > 1e-10 * np.linalg.norm(Hr, axis=1)
    if not np.any(served):
        raise DegenerateChannelError("every beam lies in the span of the others")
    W = np.where(served, W / np.where(served, norms, 1.0), 0.0)
    return rescale_per_feed(W, P)


PRECODERS = {
    "mmse": mmse_multicast,
    "zf": zero_forcing,
    "block_svd": block_svd,
}


def get_precoder(name):
    try:
        return PRECODERS[name]
    except KeyError:
        raise InvalidArgumentError(
            f"unknown precoder {name!r}; expected one of {sorted(PRECODERS)}"
        ) from None
