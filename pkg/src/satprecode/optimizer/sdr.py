"""Semidefinite relaxation of the QoS and max-min precoding problems.

Each beamformer ``w_k`` is lifted to ``W_k = w_k w_k^H`` and the rank-one
condition is dropped.  The relaxation is solved with the barrier method in
:mod:`.sdp`, which gives a certified lower bound on the rank-one optimum.
Beamformers are recovered from the principal eigenvectors and from
Gaussian randomisation.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from ..errors import InstanceTooLargeError, InvalidArgumentError, SolverFailureError
from ..precoding import PrecodingMatrix, evaluate_sinr, feed_powers, rescale_per_feed
from .admm import certify, interference_free_sinr
from .qcqp import QosTargets
from .sdp import BarrierProblem, from_coordinates, to_coordinates, trace_coefficients

MAX_BEAMS = 6
MAX_FEEDS = 12
MAX_USERS = 3


def _check_size(channels):
    if channels.n_beams > MAX_BEAMS or channels.n_feeds > MAX_FEEDS or channels.n_users > MAX_USERS:
        raise InstanceTooLargeError(
            f"SDR is limited to K <= {MAX_BEAMS}, N <= {MAX_FEEDS}, N_u <= {MAX_USERS}; "
            f"got K={channels.n_beams}, N={channels.n_feeds}, N_u={channels.n_users}"
        )


class _Relaxation:
    """Constraint data of the lifted problem for fixed SINR targets.

    Rows of ``G x <= h``: first one per (beam, user) SINR constraint
    normalised to ``>= 1``, then one per feed cap.
    """

    def __init__(self, channels, gamma, noise_variance, P):
        H = channels.matrices
        n_users, n_beams, n_feeds = H.shape
        self.n_beams, self.n_feeds = n_beams, n_feeds
        self.size = n_feeds * n_feeds
        self.blocks = [(k * self.size, n_feeds) for k in range(n_beams)]
        m = n_beams * self.size
        rows, rhs = [], []
        for k in range(n_beams):
            for i in range(n_users):
                row = H[i, k]
                q = trace_coefficients(np.outer(row.conj(), row))
                g = np.zeros(m)
                for j in range(n_beams):
                    sl = slice(j * self.size, (j + 1) * self.size)
                    g[sl] = q if j == k else -gamma[k] * q
                rows.append(-g / (gamma[k] * noise_variance))
                rhs.append(-1.0)
        self.n_sinr = len(rows)
        for n in range(n_feeds):
            g = np.zeros(m)
            g[[k * self.size + n for k in range(n_beams)]] = 1.0
            rows.append(g)
            rhs.append(float(P))
        self.G = np.array(rows)
        self.h = np.array(rhs)
        self.trace = np.zeros(m)
        for k in range(n_beams):
            self.trace[k * self.size : k * self.size + n_feeds] = 1.0

    def matrices(self, x):
        return [from_coordinates(x[o : o + self.size], n) for o, n in self.blocks]

    def interior_start(self, P):
        # W_k = alpha I leaves every feed cap half loaded
        alpha = 0.5 * P / self.n_beams
        one = to_coordinates(alpha * np.eye(self.n_feeds))
        return np.concatenate([one] * self.n_beams)

    def find_interior(self, P):
        """Phase I: a strictly feasible point, or None if the relaxation is infeasible.

        Minimises ``s`` subject to ``G x - s <= h`` and ``s >= -1``.
        """
        m = self.G.shape[1]
        c = np.zeros(m + 1)
        c[-1] = 1.0
        G = np.vstack([
            np.hstack([self.G, -np.ones((self.G.shape[0], 1))]),
            np.concatenate([np.zeros(m), [-1.0]])[None, :],
        ])
        h = np.concatenate([self.h, [1.0]])
        problem = BarrierProblem(c, G, h, self.blocks)
        x0 = self.interior_start(P)
        s0 = max(float(np.max(self.G @ x0 - self.h)), -0.5) + 1.0
        start = np.concatenate([x0, [s0]])

        def stop(z, mu):
            return z[-1] < 0 or z[-1] - problem.nu * mu > 0

        result = problem.solve(start, stop=stop)
        if result.x[-1] < 0:
            return result.x[:-1]
        return None

    def power_min(self, x0):
        problem = BarrierProblem(self.trace, self.G, self.h, self.blocks)
        return problem.solve(x0)


@dataclass
class SdrPowerMinResult:
    """Relaxed power minimisation and its rank-one recovery.

    ``lower_bound`` is a certified lower bound on the minimum total power
    of any beamformer meeting the targets.  ``W`` is the best recovered
    feasible precoder (``None`` if no candidate was feasible).
    """

    feasible: bool
    lower_bound: float = float("nan")
    relaxed_power: float = float("nan")
    W: PrecodingMatrix = None
    extracted_power: float = float("nan")
    lifted: list = None


def _candidates(mats, samples, rng):
    """Principal-eigenvector beamformers followed by Gaussian randomisations."""
    n_beams = len(mats)
    n_feeds = mats[0].shape[0]
    roots, principal = [], np.zeros((n_feeds, n_beams), dtype=complex)
    for k, M in enumerate(mats):
        lam, U = np.linalg.eigh(M)
        lam = np.maximum(lam, 0.0)
        principal[:, k] = U[:, -1] * np.sqrt(max(np.real(np.trace(M)), 0.0))
        roots.append(U * np.sqrt(lam))
    yield principal
    for _ in range(samples):
        e = (rng.standard_normal((n_feeds, n_beams)) + 1j * rng.standard_normal((n_feeds, n_beams))) / np.sqrt(2.0)
        yield np.stack([roots[k] @ e[:, k] for k in range(n_beams)], axis=1)


def power_control(channels, V, gamma, noise_variance, P):
    """Cheapest per-beam powers ``p`` making ``V * sqrt(p)`` feasible.

    A linear program in ``p``.  Returns the precoder or ``None``.
    """
    H = channels.matrices
    n_users, n_beams, _ = H.shape
    G = np.abs(np.einsum("ikn,nj->ikj", H, V)) ** 2  # (N_u, K, K)
    A, b = [], []
    for k in range(n_beams):
        for i in range(n_users):
            row = gamma[k] * G[i, k].copy()
            row[k] = -G[i, k, k]
            A.append(row)
            b.append(-gamma[k] * noise_variance)
    A.extend((np.abs(V) ** 2).tolist())
    b.extend([P] * V.shape[0])
    cost = np.sum(np.abs(V) ** 2, axis=0)
    res = linprog(cost, A_ub=np.array(A), b_ub=np.array(b), bounds=(0, None), method="highs")
    if res.status != 0:
        return None
    W = V * np.sqrt(np.maximum(res.x, 0.0))
    peak = feed_powers(W).max()
    if peak > P:
        W = W * np.sqrt(P / peak)
    return W


def _certified(channels, W, gamma, noise_variance, P):
    return certify(channels, QosTargets(gamma, noise_variance), W, P)


def sdr_power_min(channels, targets, P, samples=100, seed=0):
    """Relaxed QoS power minimisation with rank-one recovery."""
    _check_size(channels)
    if not P > 0:
        raise InvalidArgumentError(f"P must be > 0, got {P!r}")
    if not isinstance(targets, QosTargets):
        targets = QosTargets(targets)
    gamma = targets.for_beams(channels.n_beams)
    sigma2 = targets.noise_variance
    relax = _Relaxation(channels, gamma, sigma2, P)
    start = relax.find_interior(P)
    if start is None:
        return SdrPowerMinResult(False)
    result = relax.power_min(start)
    mats = relax.matrices(result.x)
    rng = np.random.default_rng(seed)
    best = None
    for V in _candidates(mats, samples, rng):
        if not np.all(np.linalg.norm(V, axis=0) > 0):
            continue
        W = power_control(channels, V, gamma, sigma2, P)
        if W is None or not _certified(channels, W, gamma, sigma2, P):
            continue
        power = float(np.sum(np.abs(W) ** 2))
        if best is None or power < best[0]:
            best = (power, W)
    out = SdrPowerMinResult(True, result.lower_bound, result.objective, lifted=mats)
    if best is not None:
        out.extracted_power = best[0]
        out.W = PrecodingMatrix(best[1], float(P))
    return out


@dataclass
class SdrMaxMinResult:
    """Relaxed max-min SINR and its rank-one recovery.

    ``t_relax`` is the largest target at which the relaxation was found
    feasible (an upper bound on the rank-one optimum up to ``tol``).
    ``t_extracted`` is the minimum SINR actually achieved by ``W``.
    """

    t_relax: float
    W: PrecodingMatrix
    t_extracted: float
    channels: object
    P: float
    noise_variance: float

    def lower_bound_power(self, t):
        """Certified lower bound on the power needed for uniform target ``t``.

        ``inf`` when the relaxation at ``t`` is infeasible.
        """
        result = sdr_power_min(self.channels, QosTargets.uniform(t, self.channels.n_beams, self.noise_variance),
                               self.P, samples=0)
        return result.lower_bound if result.feasible else float("inf")

    def __iter__(self):
        yield self.t_relax
        yield self.W
        yield self.lower_bound_power


def sdr_maxmin_small(channels, P, noise_variance=1.0, tol=1e-3, samples=100, seed=0):
    """Max-min fair SINR of the relaxation by bisection, with rank-one recovery."""
    _check_size(channels)
    if not P > 0:
        raise InvalidArgumentError(f"P must be > 0, got {P!r}")
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be > 0, got {tol!r}")
    n_beams = channels.n_beams
    lo, hi = 0.0, float(interference_free_sinr(channels, P, noise_variance).min()) * (1.0 + 1e-9)
    point = None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        relax = _Relaxation(channels, np.full(n_beams, mid), noise_variance, P)
        x = relax.find_interior(P)
        if x is None:
            hi = mid
        else:
            lo, point = mid, relax.matrices(x)
    if point is None:
        relax = _Relaxation(channels, np.full(n_beams, max(lo, tol) * 0.5), noise_variance, P)
        x = relax.find_interior(P)
        if x is None:
            raise SolverFailureError("relaxation infeasible at every positive target", {"hi": hi})
        point = relax.matrices(x)
    rng = np.random.default_rng(seed)
    scaled = channels.scaled(1.0 / np.sqrt(noise_variance))
    best = None
    for V in _candidates(point, samples, rng):
        if not np.any(V):
            continue
        W = rescale_per_feed(V, P)
        t = float(evaluate_sinr(scaled, W).min_sinr.min())
        if best is None or t > best[0]:
            best = (t, W)
    return SdrMaxMinResult(lo, best[1], best[0], channels, float(P), float(noise_variance))
