"""CSI phase noise, transponder non-linearity and clipping.

Everything here measures how a fixed precoder degrades; nothing redesigns
the precoder.  Phase noise perturbs the *true* channel that a precoder
designed on clean CSI is evaluated against.
"""

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .errors import InvalidArgumentError
from .precoding import PrecodingMatrix

PHASE_DISTRIBUTIONS = ("gaussian", "uniform", "tikhonov")

# trials per independently seeded chunk in the Monte Carlo estimators
CHUNK = 1000


@dataclass(frozen=True)
class PhaseNoiseModel:
    """Distribution of the per-feed phase error.

    ``parameter`` is the standard deviation (gaussian), the half-width
    (uniform) or the von Mises concentration kappa (tikhonov), all in
    radians where applicable.  Zero means no error for gaussian and uniform.
    A Tikhonov error vanishes as kappa grows, so ``inf`` is its identity and
    ``kappa = 0`` is uniform on the circle.
    """

    distribution: str = "gaussian"
    parameter: float = 0.0

    def __post_init__(self):
        if self.distribution not in PHASE_DISTRIBUTIONS:
            raise InvalidArgumentError(
                f"distribution must be one of {PHASE_DISTRIBUTIONS}, got {self.distribution!r}"
            )
        if not self.parameter >= 0:
            raise InvalidArgumentError(f"phase-noise parameter must be >= 0, got {self.parameter!r}")

    @property
    def is_identity(self):
        if self.distribution == "tikhonov":
            return np.isinf(self.parameter)
        return self.parameter == 0

    def draw(self, shape, rng):
        """Phase errors in radians."""
        if self.is_identity:
            return np.zeros(shape)
        if self.distribution == "gaussian":
            return rng.normal(0.0, self.parameter, size=shape)
        if self.distribution == "uniform":
            return rng.uniform(-self.parameter, self.parameter, size=shape)
        return rng.vonmises(0.0, self.parameter, size=shape)


@dataclass(frozen=True)
class VolterraModel:
    """Memoryless third-order transponder: ``g1 x + g3 x |x|^2`` per feed."""

    g1: complex = 1.0
    g3: complex = 0.0

    def __post_init__(self):
        if self.g1 == 0:
            raise InvalidArgumentError("g1 must be nonzero")

    def apply(self, x):
        x = np.asarray(x)
        return self.g1 * x + self.g3 * x * np.abs(x) ** 2


def perturb_csi(channels, model, seed=None):
    """Multiply every channel entry by ``exp(j theta)``.

    One theta per (user, beam, feed): each feed has its own transponder and
    every user row sees an independent draw.  Magnitudes are untouched.
    """
    if model.is_identity:
        return channels
    rng = np.random.default_rng(seed)
    theta = model.draw(channels.los.shape, rng)
    return ChannelSet(channels.los * np.exp(1j * theta), channels.fading)


def volterra_receive(h, W, s, model, noise=0.0):
    """Received sample(s) through the cubic transponder model.

    ``y = g1 h^H x + g3 h^H (x . x . conj(x)) + n`` with ``x = W s``.  ``h``
    is the receive vector in column form, i.e. the conjugate of the
    channel row, so ``h^H x`` equals ``row @ x``.  ``s`` may be a K-vector
    or a K x T block of symbol vectors.
    """
    W = W.W if isinstance(W, PrecodingMatrix) else np.asarray(W)
    h = np.asarray(h)
    s = np.asarray(s)
    if W.shape[0] != h.shape[0] or W.shape[1] != s.shape[0]:
        raise InvalidArgumentError(f"shapes do not agree: h {h.shape}, W {W.shape}, s {s.shape}")
    x = W @ s
    return model.g1 * (h.conj() @ x) + model.g3 * (h.conj() @ (x * x * x.conj())) + noise


def crest_factor_clip(x, max_amp):
    """Radially clip entries above ``max_amp``, keeping their phase."""
    if not max_amp > 0:
        raise InvalidArgumentError(f"max_amp must be > 0, got {max_amp!r}")
    x = np.asarray(x, dtype=complex)
    mag = np.abs(x)
    over = mag > max_amp
    out = x.copy()
    out[over] = x[over] * (max_amp / mag[over])
    return out


def _sinr_batch(H, W):
    """SINR for a batch of channel sets, H of shape (T, N_u, K, N) -> (T, K, N_u)."""
    G = np.abs(np.einsum("tikn,nj->tikj", H, W)) ** 2
    signal = np.einsum("tikk->tik", G)
    sinr = signal / (G.sum(axis=3) - signal + 1.0)
    return np.swapaxes(sinr, 1, 2)


def _chunks(trials, seed):
    sizes = [CHUNK] * (trials // CHUNK) + ([trials % CHUNK] if trials % CHUNK else [])
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    return zip(sizes, children)


def sample_perturbed_sinr(channels, W, model, trials, seed=None):
    """SINR of every user over ``trials`` phase-noise draws, shape (T, K, N_u).

    Draws are made in chunks with their own child seeds, so the result only
    depends on ``seed`` and ``trials``.
    """
    if trials < 1:
        raise InvalidArgumentError(f"trials must be >= 1, got {trials!r}")
    W = W.W if isinstance(W, PrecodingMatrix) else np.asarray(W, dtype=complex)
    H = channels.matrices
    out = []
    for size, child in _chunks(trials, seed):
        rng = np.random.default_rng(child)
        theta = model.draw((size,) + H.shape, rng)
        out.append(_sinr_batch(H[None] * np.exp(1j * theta), W))
    return np.concatenate(out)


@dataclass(frozen=True)
class OutageEstimate:
    """Per-user ``Prob(SINR <= threshold)`` as violations / trials."""

    violations: np.ndarray  # (K, N_u) counts
    trials: int
    threshold: float

    @property
    def probability(self):
        return self.violations / self.trials

    @property
    def standard_error(self):
        p = self.probability
        return np.sqrt(p * (1.0 - p) / self.trials)

    def merge(self, other):
        """Pool two estimates of the same threshold."""
        if other.threshold != self.threshold:
            raise InvalidArgumentError("cannot merge estimates with different thresholds")
        return OutageEstimate(self.violations + other.violations, self.trials + other.trials, self.threshold)


def estimate_outage(channels, W, model, threshold, trials, seed=None):
    """Monte Carlo outage of a fixed precoder under CSI phase noise."""
    sinr = sample_perturbed_sinr(channels, W, model, trials, seed)
    violations = np.sum(sinr <= threshold, axis=0)
    return OutageEstimate(violations, int(trials), float(threshold))


QPSK = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2.0)


@dataclass(frozen=True)
class NonlinearReport:
    """Effective SINR split into its measured parts, each of shape (K, N_u).

    ``residual`` is distortion plus interference; ``sinr`` divides the
    reference power by ``residual + 1`` (unit noise).  ``distortion`` is
    the power of the cubic term alone after removing its projection on the
    intended stream, so it scales exactly with ``|g3|^2``.
    """

    sinr: np.ndarray
    reference: np.ndarray
    residual: np.ndarray
    distortion: np.ndarray


def nonlinear_sinr(channels, W, model, symbol_trials=10000, seed=None):
    """Effective SINR through the transponder, measured with QPSK symbols.

    Each user's noiseless received samples are projected (least squares) on
    its beam's symbol stream.  The projection is the reference signal and
    what is left over counts as distortion plus interference.
    """
    if symbol_trials < 100:
        raise InvalidArgumentError(f"symbol_trials must be >= 100, got {symbol_trials!r}")
    W = W.W if isinstance(W, PrecodingMatrix) else np.asarray(W, dtype=complex)
    H = channels.matrices
    n_users, n_beams, _ = H.shape
    rng = np.random.default_rng(seed)
    S = QPSK[rng.integers(0, 4, size=(n_beams, symbol_trials))]
    X = W @ S
    energy = np.sum(np.abs(S) ** 2, axis=1)  # (K,)

    def split(y):
        a = np.einsum("ikt,kt->ik", y, S.conj()) / energy
        return a, np.mean(np.abs(y - a[:, :, None] * S[None]) ** 2, axis=2)

    y = np.einsum("ikn,nt->ikt", H, model.apply(X))  # (N_u, K, T)
    a, residual = split(y)
    reference = np.abs(a) ** 2 * (energy / symbol_trials)
    _, distortion = split(np.einsum("ikn,nt->ikt", H, model.g3 * X * np.abs(X) ** 2))
    return NonlinearReport((reference / (residual + 1.0)).T, reference.T, residual.T, distortion.T)
