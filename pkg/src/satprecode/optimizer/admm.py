"""Consensus ADMM for the QoS-constrained power-minimisation QCQP.

The problem ``min ||w||^2`` subject to every ``w^H R_j w >= 1`` and to the
per-feed caps is split into one local copy ``z_j`` per constraint.  Each
iteration

1. averages the copies into ``w`` in closed form,
2. projects ``w + u_j`` onto each constraint set,
3. updates the scaled duals ``u_j``.

The SINR sets are non-convex; their projection is exact and costs one
scalar root-find per constraint once the eigendecomposition of ``R_j`` is
cached.  A feed cap couples the K entries that feed ``n`` emits, and its
projection shrinks that group radially.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgumentError
from ..precoding import FEASIBILITY_SLACK, PrecodingMatrix, evaluate_sinr, feed_powers
from .qcqp import QosTargets, build_qcqp, unstack

SINR_SLACK = 1e-4

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
MAX_ITER = "max_iter"


@dataclass(frozen=True)
class AdmmConfig:
    """ADMM knobs.

    Restart ``r`` runs from a fresh random point with penalty
    ``rho * rho_growth ** r``.
    """

    rho: float = 10.0
    max_iter: int = 2000
    primal_tol: float = 1e-6
    dual_tol: float = 1e-6
    restarts: int = 5
    rho_growth: float = 2.0

    def __post_init__(self):
        for name in ("rho", "primal_tol", "dual_tol", "rho_growth"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"{name} must be > 0")
        if self.max_iter < 1 or self.restarts < 1:
            raise InvalidArgumentError("max_iter and restarts must be >= 1")


@dataclass
class SolveOutcome:
    status: str
    W: PrecodingMatrix = None
    objective: float = float("nan")
    iterations: int = 0
    residuals: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    restarts_used: int = 0

    @property
    def feasible(self):
        """True when a certified precoder was returned."""
        return self.W is not None


def _secular_roots(lam, c, mu0=None, max_iter=200):
    """Solve sum_i lam_i c_i / (1 - mu lam_i)^2 = 1 for mu in [0, 1/lam_max).

    Vectorised over rows.  The left side is increasing in mu on that
    interval, so a bracketed Newton iteration is safe.  ``mu0`` is an
    optional starting guess (clipped into the bracket).
    """
    lam_max = lam[:, -1]
    lo = np.zeros(lam.shape[0])
    hi = 1.0 / lam_max
    mu = lo.copy() if mu0 is None else np.clip(mu0, 0.0, hi * (1 - 1e-12))
    lc = lam * c
    for _ in range(max_iter):
        den = 1.0 - mu[:, None] * lam
        # terms without weight stay zero even at the pole
        inv = np.where(lc != 0, 1.0 / np.where(den != 0, den, 1.0), 0.0)
        t = lc * inv * inv
        f = t.sum(axis=1)
        fp = 2.0 * (t * lam * inv).sum(axis=1)
        below = f < 1.0
        lo = np.where(below, mu, lo)
        hi = np.where(below, hi, mu)
        done = (np.abs(f - 1.0) <= 1e-13) | (hi - lo <= 1e-16 * hi)
        if done.all():
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            step = mu + (1.0 - f) / fp
        bad = ~np.isfinite(step) | (step <= lo) | (step >= hi)
        mu = np.where(done, mu, np.where(bad, 0.5 * (lo + hi), step))
    return mu


def project_quadratic(lam, Q, V, mu0=None):
    """Euclidean projection of each row of ``V`` onto {z : z^H R z >= 1}.

    Parameters
    ----------
    lam : ndarray (J, d)
        Ascending eigenvalues of each R_j; the largest must be positive.
    Q : ndarray (J, d, d)
        Matching eigenvectors (columns).
    V : ndarray (J, d)
        Points to project.
    mu0 : ndarray (J,), optional
        Warm start for the multipliers, e.g. from the previous call.

    Returns
    -------
    Z : ndarray (J, d)
    mu : ndarray (J,)
        Multipliers, zero for rows already inside the set.

    Notes
    -----
    Stationarity gives ``z = (I - mu R)^-1 v``.  ``mu`` is the root in
    ``[0, 1/lam_max)`` of the secular equation in the eigenbasis.  When
    ``v`` has no component on the top eigenvector the root sits at the
    pole and the missing magnitude is put on that eigenvector.
    """
    vt = np.einsum("jdi,jd->ji", Q.conj(), V)
    c = np.abs(vt) ** 2
    value = np.sum(lam * c, axis=1)
    Z = np.array(V, dtype=complex)
    mu_all = np.zeros(V.shape[0])
    active = value < 1.0
    if not np.any(active):
        return Z, mu_all
    la, ca, va, Qa = lam[active], c[active], vt[active], Q[active]
    mu = _secular_roots(la, ca, None if mu0 is None else mu0[active])
    mu_all[active] = mu
    den = 1.0 - mu[:, None] * la
    zt = np.where(den != 0, va / np.where(den != 0, den, 1.0), 0.0)
    reached = np.sum(la * np.abs(zt) ** 2, axis=1)
    hard = reached < 1.0 - 1e-9
    if np.any(hard):
        lam_max = la[hard, -1]
        den_h = 1.0 - la[hard] / lam_max[:, None]
        rest = np.where(den_h[:, :-1] > 0, va[hard, :-1] / np.where(den_h[:, :-1] > 0, den_h[:, :-1], 1.0), 0.0)
        missing = 1.0 - np.sum(la[hard, :-1] * np.abs(rest) ** 2, axis=1)
        top = va[hard, -1]
        phase = np.where(np.abs(top) > 0, top / np.where(np.abs(top) > 0, np.abs(top), 1.0), 1.0)
        zh = np.concatenate([rest, (np.sqrt(np.maximum(missing, 0.0) / lam_max) * phase)[:, None]], axis=1)
        zt[hard] = zh
    Za = np.einsum("jdi,ji->jd", Qa, zt)
    # round-off can leave the value a hair below one
    val = np.sum(la * np.abs(zt) ** 2, axis=1)
    fix = (val < 1.0) & (val > 0)
    Za[fix] *= np.sqrt(1.0 / val[fix])[:, None]
    Z[active] = Za
    return Z, mu_all


def _project_caps(V, cap_index, P):
    """Shrink the entries of feed n (row n of V) onto the ball of power P."""
    rows = np.arange(V.shape[0])[:, None]
    group = V[rows, cap_index]
    power = np.sum(np.abs(group) ** 2, axis=1)
    scale = np.sqrt(np.minimum(1.0, P / np.where(power > 0, power, 1.0)))
    Z = V.copy()
    Z[rows, cap_index] = group * scale[:, None]
    return Z


def certify(channels, targets, W, P):
    """Independent feasibility check via :func:`evaluate_sinr`.

    SINR with noise variance sigma^2 on H equals SINR with unit noise on
    H / sigma.
    """
    scaled = channels.scaled(1.0 / np.sqrt(targets.noise_variance))
    report = evaluate_sinr(scaled, W)
    gamma = targets.for_beams(channels.n_beams)
    sinr_ok = bool(np.all(report.min_sinr >= gamma - SINR_SLACK))
    power_ok = bool(feed_powers(W).max() <= P * (1 + FEASIBILITY_SLACK))
    return sinr_ok and power_ok


def _repair(x, R, channels, targets, P):
    """Scale a near-feasible ADMM iterate to exact feasibility, if possible."""
    q = np.real(np.einsum("d,jde,e->j", x.conj(), R, x))
    if not np.all(q > 0):
        return None
    x = x * np.sqrt(max(1.0, 1.0 / q.min()))
    W = unstack(x, channels.n_feeds)
    peak = feed_powers(W).max()
    if peak > P:
        W = W * np.sqrt(P / peak)
    if certify(channels, targets, W, P):
        return PrecodingMatrix(W, float(P))
    return None


def _initial_point(channels, targets, rng, inflate=100.0):
    """Random start well outside the feasible region.

    Its power is ``inflate`` times the sum of the single-user minimum
    powers; runs started near the origin tend to stall in limit cycles.
    """
    H = channels.matrices
    gamma = targets.for_beams(channels.n_beams)
    gains = np.sum(np.abs(H) ** 2, axis=2)  # (N_u, K)
    need = gamma * targets.noise_variance / np.maximum(gains.min(axis=0), np.finfo(float).tiny)
    d = channels.n_beams * channels.n_feeds
    x = (rng.standard_normal(d) + 1j * rng.standard_normal(d)) / np.sqrt(2.0)
    return x * np.sqrt(inflate * np.sum(need) / np.vdot(x, x).real)


def interference_free_sinr(channels, P, noise_variance=1.0):
    """Per-beam ceiling on the weakest user's SINR under per-feed caps.

    Without interference the best gain toward a row ``h`` with every feed
    at power ``P`` is ``P (sum_n |h_n|)^2``.  No target above the returned
    value is attainable for that beam.
    """
    amp = np.sum(np.abs(channels.matrices), axis=2)  # (N_u, K)
    return P * amp.min(axis=0) ** 2 / noise_variance


def power_min_admm(channels, targets, P, cfg=None, seed=None):
    """Minimum total power meeting every user's SINR target under feed caps.

    Returns a :class:`SolveOutcome`; infeasibility is a status, not an
    exception.  ``feasible`` means an ADMM run reached consensus and its
    scaled iterate passed :func:`certify`.  ``max_iter`` means no run
    converged but one still produced a certified precoder.
    """
    cfg = AdmmConfig() if cfg is None else cfg
    if not isinstance(targets, QosTargets):
        targets = QosTargets(targets)
    if P < 0:
        raise InvalidArgumentError(f"P must be >= 0, got {P!r}")
    n_beams, n_feeds = channels.n_beams, channels.n_feeds
    if np.any(targets.for_beams(n_beams) > interference_free_sinr(channels, P, targets.noise_variance)):
        return SolveOutcome(INFEASIBLE)
    constraints = build_qcqp(channels, targets)
    R = np.stack([con.R for con in constraints])
    lam, Q = np.linalg.eigh(R)
    if np.any(lam[:, -1] <= 0):
        return SolveOutcome(INFEASIBLE)  # a user with an all-zero channel
    n_sinr = len(constraints)
    n_copies = n_sinr + n_feeds
    cap_index = np.arange(n_beams)[None, :] * n_feeds + np.arange(n_feeds)[:, None]

    best = None
    total_iterations = 0
    children = np.random.SeedSequence(seed).spawn(cfg.restarts)
    for restart, child in enumerate(children):
        rng = np.random.default_rng(child)
        rho = cfg.rho * cfg.rho_growth**restart
        x = _initial_point(channels, targets, rng)
        Z = np.tile(x, (n_copies, 1))
        U = np.zeros_like(Z)
        history = []
        mu = None
        converged = False
        for it in range(1, cfg.max_iter + 1):
            x = rho * np.sum(Z - U, axis=0) / (2.0 + rho * n_copies)
            V = x + U
            Z_old = Z
            Z = np.empty_like(V)
            Z[:n_sinr], mu = project_quadratic(lam, Q, V[:n_sinr], mu)
            Z[n_sinr:] = _project_caps(V[n_sinr:], cap_index, P)
            U = U + x - Z
            scale = np.sqrt(n_copies) * max(np.linalg.norm(x), np.finfo(float).tiny)
            primal = np.linalg.norm(x - Z) / scale
            dual = np.linalg.norm(Z - Z_old) / scale
            history.append((primal, dual))
            if primal < cfg.primal_tol and dual < cfg.dual_tol:
                converged = True
                break
        total_iterations += it
        W = _repair(x, R, channels, targets, P)
        if W is not None:
            candidate = SolveOutcome(
                FEASIBLE if converged else MAX_ITER,
                W,
                W.total_power,
                total_iterations,
                np.array(history),
                restart + 1,
            )
            if converged:
                return candidate
            if best is None or candidate.objective < best.objective:
                best = candidate
    if best is not None:
        best.iterations = total_iterations
        best.restarts_used = cfg.restarts
        return best
    return SolveOutcome(INFEASIBLE, iterations=total_iterations, residuals=np.array(history),
                        restarts_used=cfg.restarts)


@dataclass
class MaxMinResult:
    """Outcome of the max-min bisection.

    ``t`` is the largest uniform target found feasible and ``t_infeasible``
    the smallest probed target found infeasible, with
    ``t_infeasible <= t + tol``.
    """

    t: float
    W: PrecodingMatrix
    t_infeasible: float
    probes: int

    def __iter__(self):
        yield self.t
        yield self.W


def maxmin_bisection(channels, P, tol=1e-3, cfg=None, noise_variance=1.0, seed=0, max_doublings=64):
    """Max-min fair SINR under per-feed caps via bisection on power-min feasibility.

    The upper end starts at 1 and doubles until ADMM reports the uniform
    target infeasible.  Bisection then shrinks the bracket to ``tol``.  As
    a last step ``t + tol`` is probed directly and the search restarts
    above ``t`` if the probe succeeds, so the returned ``t`` is feasible and
    ``t + tol`` infeasible according to the same oracle.
    """
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be > 0, got {tol!r}")
    cfg = AdmmConfig() if cfg is None else cfg
    n_beams, n_feeds = channels.n_beams, channels.n_feeds
    zero = PrecodingMatrix(np.zeros((n_feeds, n_beams), dtype=complex), max(float(P), 0.0))
    if not P > 0:
        return MaxMinResult(0.0, zero, 0.0, 0)

    probes = 0

    def probe(t):
        nonlocal probes
        probes += 1
        targets = QosTargets.uniform(t, n_beams, noise_variance)
        return power_min_admm(channels, targets, P, cfg, seed)

    lo, W_lo = 0.0, zero
    hi = 1.0
    for _ in range(max_doublings):
        outcome = probe(hi)
        if not outcome.feasible:
            break
        lo, W_lo = hi, outcome.W
        hi *= 2.0
    while True:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            outcome = probe(mid)
            if outcome.feasible:
                lo, W_lo = mid, outcome.W
            else:
                hi = mid
        outcome = probe(lo + tol)
        if not outcome.feasible:
            hi = lo + tol
            break
        # the oracle is not monotone in t; step past the accepted point
        lo, W_lo = lo + tol, outcome.W
        hi = lo + tol
    return MaxMinResult(lo, W_lo, hi, probes)
