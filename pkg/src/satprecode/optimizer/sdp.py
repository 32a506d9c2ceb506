"""Log-barrier interior-point method for small dense SDPs.

Problems have the form::

    minimize    c @ x
    subject to  G @ x <= h
                M_b(x) >= 0   (PSD) for every Hermitian block b

where each block matrix is parameterised directly by a contiguous slice of
``x`` in an orthonormal basis of Hermitian matrices.  Centering uses damped
Newton steps; the barrier weight starts at ``mu0`` and is multiplied by
``mu_factor`` after each centering until the duality gap bound
``nu * mu`` falls below the requested tolerance.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import SolverFailureError

MU0 = 10.0
MU_FACTOR = 0.2
NEWTON_TOL = 1e-9


_BASIS_CACHE = {}


def hermitian_basis(n):
    """Orthonormal basis of n x n Hermitian matrices, shape (n*n, n, n).

    Orthonormal under ``<A, B> = Tr(A B)``.  The first ``n`` elements are the
    diagonal units, so ``x[:n]`` of a block are its diagonal entries.
    """
    if n in _BASIS_CACHE:
        return _BASIS_CACHE[n]
    B = np.zeros((n * n, n, n), dtype=complex)
    s = 1.0 / np.sqrt(2.0)
    a = 0
    for i in range(n):
        B[a, i, i] = 1.0
        a += 1
    for i in range(n):
        for j in range(i + 1, n):
            B[a, i, j] = B[a, j, i] = s
            a += 1
    for i in range(n):
        for j in range(i + 1, n):
            B[a, i, j] = -1j * s
            B[a, j, i] = 1j * s
            a += 1
    B.setflags(write=False)
    _BASIS_CACHE[n] = B
    return B


def to_coordinates(M):
    """Hermitian matrix -> real coordinates in :func:`hermitian_basis`."""
    n = M.shape[0]
    B = hermitian_basis(n)
    return np.real(np.einsum("aij,ji->a", B, M))


def from_coordinates(x, n):
    return np.einsum("a,aij->ij", x, hermitian_basis(n))


def trace_coefficients(Q):
    """Coefficients q with ``Tr(Q M) = q @ coords(M)`` for Hermitian Q."""
    n = Q.shape[0]
    B = hermitian_basis(n)
    return np.real(B.reshape(n * n, -1) @ Q.T.reshape(-1))


@dataclass
class BarrierResult:
    x: np.ndarray
    objective: float
    gap: float
    newton_steps: int
    centerings: int
    stopped_early: bool = False
    history: list = field(default_factory=list)

    @property
    def lower_bound(self):
        """Certified lower bound on the optimal value (central-path duality)."""
        return self.objective - self.gap


class BarrierProblem:
    """A small SDP in the form described in the module docstring.

    Parameters
    ----------
    c : ndarray (m,)
    G : ndarray (p, m)
    h : ndarray (p,)
    blocks : list of (offset, n)
        Block ``b`` is built from ``x[offset : offset + n*n]``.
    """

    def __init__(self, c, G, h, blocks):
        self.c = np.asarray(c, dtype=float)
        self.G = np.asarray(G, dtype=float).reshape(-1, self.c.size)
        self.h = np.asarray(h, dtype=float)
        self.blocks = list(blocks)
        self.nu = self.G.shape[0] + sum(n for _, n in self.blocks)

    def _matrices(self, x):
        return [from_coordinates(x[o : o + n * n], n) for o, n in self.blocks]

    def strictly_feasible(self, x):
        return bool(np.isfinite(self.barrier(x)))

    def barrier(self, x):
        slack = self.h - self.G @ x
        if np.any(slack <= 0):
            return np.inf
        value = -np.sum(np.log(slack))
        for M in self._matrices(x):
            try:
                L = np.linalg.cholesky(M)
            except np.linalg.LinAlgError:
                return np.inf
            value -= 2.0 * np.sum(np.log(np.real(np.diag(L))))
        return float(value)

    def _derivatives(self, x):
        slack = self.h - self.G @ x
        inv = 1.0 / slack
        grad = self.G.T @ inv
        hess = (self.G.T * inv**2) @ self.G
        for (o, n), M in zip(self.blocks, self._matrices(x)):
            B = hermitian_basis(n)
            F = np.linalg.inv(M)
            F = 0.5 * (F + F.conj().T)
            sl = slice(o, o + n * n)
            grad[sl] -= np.real(B.reshape(n * n, -1) @ F.T.reshape(-1))
            FB = (F @ B).reshape(n * n, -1)
            FBt = np.swapaxes(F @ B, 1, 2).reshape(n * n, -1)
            hess[sl, sl] += np.real(FB @ FBt.T)
        return grad, hess

    def solve(self, x0, gap_tol=1e-9, mu0=MU0, mu_factor=MU_FACTOR, newton_tol=NEWTON_TOL,
              max_newton=200, max_centerings=200, stop=None):
        """Follow the central path from a strictly feasible ``x0``.

        ``stop(x, mu)`` may end the path early (used by phase I); the result
        then has ``stopped_early=True``.
        """
        x = np.array(x0, dtype=float)
        if not self.strictly_feasible(x):
            raise SolverFailureError("barrier start point is not strictly feasible")
        mu = mu0
        steps = 0
        history = []
        for centering in range(1, max_centerings + 1):
            for inner in range(max_newton):
                grad, hess = self._derivatives(x)
                g = self.c / mu + grad
                try:
                    dx = -np.linalg.solve(hess, g)
                except np.linalg.LinAlgError:
                    dx = -np.linalg.lstsq(hess, g, rcond=None)[0]
                decrement = float(-g @ dx)
                if decrement / 2.0 <= newton_tol:
                    break
                # compare changes, not totals: c @ x / mu dwarfs the barrier at small mu
                b0 = self.barrier(x)
                slope = self.c @ dx / mu
                alpha = 1.0
                while alpha > 1e-14:
                    trial = x + alpha * dx
                    change = alpha * slope + (self.barrier(trial) - b0)
                    if np.isfinite(change) and change <= -0.25 * alpha * decrement:
                        break
                    alpha *= 0.5
                else:
                    break
                x = trial
                steps += 1
            else:
                raise SolverFailureError(
                    "Newton centering did not converge",
                    {"centering": centering, "mu": mu, "decrement": decrement, "steps": steps},
                )
            objective = float(self.c @ x)
            history.append((mu, objective))
            if stop is not None and stop(x, mu):
                return BarrierResult(x, objective, self.nu * mu, steps, centering, True, history)
            if self.nu * mu <= gap_tol * max(1.0, abs(objective)):
                return BarrierResult(x, objective, self.nu * mu, steps, centering, False, history)
            mu *= mu_factor
        raise SolverFailureError(
            "barrier method exceeded its centering budget",
            {"mu": mu, "gap": self.nu * mu, "steps": steps},
        )
