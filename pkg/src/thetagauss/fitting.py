"""Moment matching on the real parameter slice.

For real (u, B) the discrete Gaussian is a minimal regular exponential
family with sufficient statistic T(n) = 2*pi*(n, -1/2 n n^T) and
log-partition A(u, B) = log theta(u, B).  Matching a target mean mu and
covariance Sigma is therefore the strictly convex problem

    minimize  F(u, B) = log theta(u, B) - 2*pi u.mu + pi <B, Sigma + mu mu^T>

whose gradient vanishes exactly on the moment equations, and whose Hessian
is the covariance of T under the current iterate (assembled from theta
derivatives up to order four).  A damped Newton iteration with positive
definiteness safeguarding solves it; B0 = Sigma^-1/(2*pi), u0 = B0 mu (the
continuous-Gaussian kernel) starts essentially converged for well-scaled
targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import TWO_PI, ThetaPoint, theta_du_many
from .errors import DegenerateSample, NoConvergence, NotPD
from .multiindex import indices_up_to

EPS_FLOOR = 1e-14
MAX_ITERATIONS = 200


def _check_real_spd(M, name: str, tol: float = 1e-10):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotPD(f"{name} must be a square matrix")
    if np.max(np.abs(M - M.T)) > tol * max(1.0, np.max(np.abs(M))):
        raise NotPD(f"{name} must be symmetric")
    M = 0.5 * (M + M.T)
    if np.linalg.eigvalsh(M)[0] <= 0:
        raise NotPD(f"{name} must be positive definite")
    return M


@dataclass(frozen=True)
class MomentData:
    """Fitting target: real mean vector and SPD covariance."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        sigma = _check_real_spd(self.sigma, "sigma")
        if mu.shape != (sigma.shape[0],):
            raise ValueError("mu and sigma dimensions disagree")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def g(self) -> int:
        return len(self.mu)


@dataclass(frozen=True)
class CanonicalPoint:
    """Real canonical parameters: u in R^g, B real symmetric positive
    definite (the real slice of the Siegel right half-space)."""

    u: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        u = np.atleast_1d(np.asarray(self.u, dtype=float))
        B = _check_real_spd(self.B, "B")
        if u.shape != (B.shape[0],):
            raise ValueError("u and B dimensions disagree")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "B", B)

    @property
    def g(self) -> int:
        return len(self.u)

    def to_theta_point(self) -> ThetaPoint:
        return ThetaPoint(self.u.astype(complex), self.B.astype(complex))


@dataclass(frozen=True)
class FitReport:
    params: CanonicalPoint
    iterations: int
    grad_norm: float  # sup-norm of the moment residual at the solution
    objective: float
    converged: bool


def _real_moments(p: ThetaPoint, order: int, eps: float) -> tuple[float, dict]:
    """theta and the raw moment table mu_a (real slice) up to `order`."""
    table = theta_du_many(indices_up_to(p.g, order), p, eps)
    t = table[(0,) * p.g].real
    mus = {a: v.real / t / TWO_PI ** sum(a) for a, v in table.items()}
    return t, mus


def forward_moments(p: CanonicalPoint, eps: float = 1e-12) -> MomentData:
    """Mean and covariance of the discrete Gaussian at real parameters."""
    tp = p.to_theta_point()
    _, mus = _real_moments(tp, 2, eps)
    g = p.g
    mu = np.array([mus[_unit(g, i)] for i in range(g)])
    cov = np.empty((g, g))
    for i in range(g):
        for j in range(i, g):
            cov[i, j] = cov[j, i] = mus[_unit(g, i, j)] - mu[i] * mu[j]
    return MomentData(mu, 0.5 * (cov + cov.T))


def _unit(g: int, *idx: int) -> tuple:
    a = [0] * g
    for i in idx:
        a[i] += 1
    return tuple(a)


def _triu_pairs(g: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(g) for j in range(i, g)]


def _pack(u: np.ndarray, B: np.ndarray, pairs) -> np.ndarray:
    return np.concatenate([u, [B[i, j] for i, j in pairs]])


def _unpack(x: np.ndarray, g: int, pairs):
    u = x[:g]
    B = np.zeros((g, g))
    for k, (i, j) in enumerate(pairs):
        B[i, j] = B[j, i] = x[g + k]
    return u, B


def _objective(t_log: float, u, B, mu_t, S_t) -> float:
    return t_log - TWO_PI * float(u @ mu_t) + math.pi * float(np.sum(B * S_t))


def _grad_resid(mus: dict, g: int, pairs, mu_t, S_t):
    """Gradient of F in packed coordinates and the (mu, Sigma) residual."""
    mu = np.array([mus[_unit(g, i)] for i in range(g)])
    m2 = np.empty((g, g))
    for i in range(g):
        for j in range(i, g):
            m2[i, j] = m2[j, i] = mus[_unit(g, i, j)]
    grad = np.empty(g + len(pairs))
    grad[:g] = TWO_PI * (mu - mu_t)
    for k, (i, j) in enumerate(pairs):
        scale = math.pi if i == j else TWO_PI
        grad[g + k] = scale * (S_t[i, j] - m2[i, j])
    sigma = m2 - np.outer(mu, mu)
    resid = max(
        float(np.max(np.abs(mu - mu_t))),
        float(np.max(np.abs(sigma - (S_t - np.outer(mu_t, mu_t))))),
    )
    return grad, resid


def _hessian(mus: dict, g: int, pairs) -> np.ndarray:
    """Covariance of the sufficient statistic in packed coordinates.

    Component (u, i) has weight 2*pi and exponent e_i; component (B, ij)
    has weight -pi (diagonal) or -2*pi (off-diagonal, symmetric pair) and
    exponent e_i + e_j.  Entries need raw moments up to order four.
    """
    comps = [(TWO_PI, _unit(g, i)) for i in range(g)]
    comps += [
        ((-math.pi if i == j else -TWO_PI), _unit(g, i, j)) for i, j in pairs
    ]
    d = len(comps)
    H = np.empty((d, d))
    for p in range(d):
        cp, ap = comps[p]
        for q in range(p, d):
            cq, aq = comps[q]
            joint = tuple(x + y for x, y in zip(ap, aq))
            H[p, q] = H[q, p] = cp * cq * (mus[joint] - mus[ap] * mus[aq])
    return H


def _is_pd(B: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(B - 1e-12 * np.eye(len(B)))
        return True
    except np.linalg.LinAlgError:
        return False


def fit(
    target: MomentData,
    tol: float = 1e-9,
    eps: float | None = None,
    max_iterations: int = MAX_ITERATIONS,
) -> FitReport:
    """Real canonical parameters (u, B) whose discrete Gaussian has the
    target mean and covariance, to sup-norm residual below tol.

    Damped Newton on the convex objective F; a trial step is rejected when
    it leaves the positive definite cone or fails the Armijo test.
    Convergence requires both the moment residual below tol and the squared
    Newton decrement below tol^2.

    Raises NoConvergence after max_iterations, NotPD for an invalid target
    (normally caught at MomentData construction).
    """
    if not isinstance(target, MomentData):
        target = MomentData(*target)
    if tol < 1e-10:
        raise ValueError("tol must be at least 1e-10")
    if eps is None:
        eps = max(EPS_FLOOR, 1e-4 * tol)
    g = target.g
    pairs = _triu_pairs(g)
    mu_t = target.mu
    S_t = target.sigma + np.outer(mu_t, mu_t)

    B = np.linalg.inv(target.sigma) / TWO_PI
    B = 0.5 * (B + B.T)
    u = B @ mu_t
    x = _pack(u, B, pairs)

    t, mus = _real_moments(ThetaPoint(u, B), 4, eps)
    F = _objective(math.log(t), u, B, mu_t, S_t)

    for iteration in range(1, max_iterations + 1):
        grad, resid = _grad_resid(mus, g, pairs, mu_t, S_t)
        H = _hessian(mus, g, pairs)
        # the Hessian is PD on the real slice but can be numerically rank
        # deficient when the mass concentrates on few points; ridge it just
        # enough for a stable factorization
        ridge = 0.0
        scale = max(1.0, float(np.trace(H)) / len(H))
        while True:
            try:
                L = np.linalg.cholesky(H + ridge * np.eye(len(H)))
                break
            except np.linalg.LinAlgError:
                ridge = max(1e-14 * scale, ridge * 100.0)
        dx = -np.linalg.solve(L.T, np.linalg.solve(L, grad))
        decrement_sq = float(-grad @ dx)

        if resid < tol and decrement_sq < tol * tol:
            return FitReport(
                params=CanonicalPoint(x[:g], _unpack(x, g, pairs)[1]),
                iterations=iteration - 1,
                grad_norm=resid,
                objective=F,
                converged=True,
            )

        # backtracking line search with PD safeguarding
        step = 1.0
        slope = float(grad @ dx)
        for _ in range(60):
            x_try = x + step * dx
            u_try, B_try = _unpack(x_try, g, pairs)
            if _is_pd(B_try):
                t_try, mus_try = _real_moments(ThetaPoint(u_try, B_try), 4, eps)
                F_try = _objective(math.log(t_try), u_try, B_try, mu_t, S_t)
                if F_try <= F + 1e-4 * step * slope:
                    break
            step *= 0.5
        else:
            raise NoConvergence(
                f"line search stalled at iteration {iteration}; residual {resid:.3e}"
            )
        x, F, mus = x_try, F_try, mus_try

    grad, resid = _grad_resid(mus, g, pairs, mu_t, S_t)
    raise NoConvergence(
        f"no convergence after {max_iterations} iterations; residual {resid:.3e}, "
        f"gradient sup-norm {np.max(np.abs(grad)):.3e}"
    )


def fit_from_sample(data, tol: float = 1e-9, ddof: int = 1) -> FitReport:
    """Maximum-likelihood parameters for a sample of lattice vectors.

    Computes the sample mean and sample covariance (ddof=1, matching the
    reference numerics) and delegates to :func:`fit`.  Raises
    DegenerateSample when the sample covariance is singular.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:  # flat list of scalars is a univariate sample
        data = data.reshape(-1, 1)
    if data.ndim != 2:
        raise ValueError("data must be a sequence of lattice vectors")
    n, g = data.shape
    if n <= ddof:
        raise DegenerateSample(f"need more than {ddof} observations, got {n}")
    mu = data.mean(axis=0)
    centered = data - mu
    sigma = centered.T @ centered / (n - ddof)
    sigma = 0.5 * (sigma + sigma.T)
    if np.linalg.eigvalsh(sigma)[0] <= 1e-12 * max(1.0, float(np.trace(sigma))):
        raise DegenerateSample("sample covariance is singular")
    return fit(MomentData(mu, sigma), tol)
