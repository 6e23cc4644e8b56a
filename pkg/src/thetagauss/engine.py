"""Certified evaluation of the Riemann theta function and its derivatives.

The series is

    theta(u, B) = sum_{n in Z^g} e(-1/2 n^T B n + n^T u),    e(x) = exp(2*pi*x)

over the right half-space of symmetric complex B with Re(B) positive
definite.  Note the convention: there is no imaginary unit in the exponent.
The classical upper half-space theta is recovered by z = -i*u, tau = i*B.

Every evaluation truncates the lattice sum to the Euclidean ball
||n|| <= R, where R carries a certified bound on the dropped tail: the
summand modulus is at most

    |(2*pi*n)^a| * exp(2*pi*(-1/2*lmin*||n||^2 + rho*||n||))

with lmin the smallest eigenvalue of Re(B) and rho = ||Re u||, and the tail
is bounded shell by shell in the sup norm, (2k+1)^g - (2k-1)^g points per
shell.  Lattice points are enumerated by increasing ||n||^2, lexicographic
within shells, so every sum has a fixed deterministic order.

All functions are pure; cached lattice enumerations are immutable.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NonPositiveDefinite, ToleranceUnreachable
from .multiindex import exponents, indices_up_to

TWO_PI = 2.0 * math.pi

# Double-precision lattice sums cannot certify tails below this.
EPS_FLOOR = 1e-14

# Smallest admissible eigenvalue of Re(B); below this the sum is treated
# as divergent for practical purposes.
LAMBDA_MIN_FLOOR = 1e-12

DEFAULT_MAX_RADIUS = 10_000
MAX_RADIUS_ENV = "THETA_GAUSS_MAX_RADIUS"


class SiegelMatrix:
    """Symmetric complex g x g matrix with positive definite real part.

    The smallest eigenvalue of Re(B) is computed once at construction and
    cached; it drives every truncation certificate.
    """

    __slots__ = ("entries", "g", "lambda_min")

    def __init__(self, entries):
        B = np.array(entries, dtype=complex)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise ValueError("B must be a square matrix")
        if not np.array_equal(B, B.T):
            raise ValueError("B must be symmetric: B[i][j] == B[j][i] exactly")
        lam = float(np.linalg.eigvalsh(B.real)[0])
        if lam <= LAMBDA_MIN_FLOOR:
            raise NonPositiveDefinite(
                f"smallest eigenvalue of Re(B) is {lam:.3e}; must exceed "
                f"{LAMBDA_MIN_FLOOR:.0e}"
            )
        B.setflags(write=False)
        self.entries = B
        self.g = B.shape[0]
        self.lambda_min = lam

    def __repr__(self):
        return f"SiegelMatrix(g={self.g}, lambda_min={self.lambda_min:.6g})"


def as_siegel(B) -> SiegelMatrix:
    return B if isinstance(B, SiegelMatrix) else SiegelMatrix(B)


class ThetaPoint:
    """Argument pair (u, B) in C^g x H_g."""

    __slots__ = ("u", "B")

    def __init__(self, u, B):
        B = as_siegel(B)
        u = np.atleast_1d(np.array(u, dtype=complex))
        if u.ndim != 1 or u.shape[0] != B.g:
            raise ValueError(f"u must be a vector of length g={B.g}")
        u.setflags(write=False)
        self.u = u
        self.B = B

    @property
    def g(self) -> int:
        return self.B.g

    def __repr__(self):
        return f"ThetaPoint(g={self.g})"


@dataclass(frozen=True)
class TruncationBudget:
    """Certified Euclidean cutoff: the tail beyond ||n|| <= radius is < eps.

    shell_count is the number of sup-norm shells inside the cutoff
    (diagnostic only).
    """

    eps: float
    radius: float
    shell_count: int


def _max_radius() -> float:
    raw = os.environ.get(MAX_RADIUS_ENV)
    if raw is None:
        return float(DEFAULT_MAX_RADIUS)
    return float(raw)


def _log_gauss(lam: float, rho: float, x: float) -> float:
    # log of exp(2*pi*(-lam*x^2/2 + rho*x))
    return TWO_PI * (-0.5 * lam * x * x + rho * x)


def _tail_bound(g: int, lam: float, rho: float, q: int, R: int) -> float:
    """Upper bound on sum_{||n||_2 > R} |(2*pi*n)^a| |e(-1/2 n^T B n + n^T u)|
    for any multi-index a of order q.

    Points are grouped by m = ||n||_inf.  For m <= R the exponential factor
    is at most its value at ||n||_2 = R (every tail point has ||n||_2 > R)
    and |n^a| <= m^q <= R^q; for m > R the shell bound N(m) m^q E(m) applies.
    Requires R at or beyond the peak of the shell-term profile so that the
    series is decreasing; the caller guarantees that.
    """
    M = int(math.ceil(R))
    logc = q * math.log(TWO_PI) if q else 0.0

    # head: every sup-norm shell m <= M, exponential pinned at x = R
    log_head = (
        logc
        + g * math.log(2 * M + 1)
        + (q * math.log(M) if q else 0.0)
        + _log_gauss(lam, rho, float(R))
    )
    total = math.exp(log_head) if log_head < 700.0 else math.inf

    # shells beyond the cutoff, with geometric closure
    prev = math.inf
    m = M + 1
    for _ in range(100_000):
        n_shell = float((2 * m + 1) ** g - (2 * m - 1) ** g)
        log_t = logc + math.log(n_shell) + q * math.log(m) + _log_gauss(lam, rho, float(m))
        term = math.exp(log_t) if log_t < 700.0 else math.inf
        total += term
        ratio = term / prev if prev > 0 else 0.0
        if term == 0.0:
            return total
        if ratio < 0.5 and term < total * 1e-17 + 1e-300:
            # ratios are decreasing, so the remainder is geometric
            return total + term * ratio / (1.0 - ratio)
        prev = term
        m += 1
    return math.inf


def truncation_radius(B, u, a=None, eps: float = 1e-12) -> TruncationBudget:
    """Smallest integer radius whose certified tail bound is below eps.

    The bound covers the derivative summand (2*pi*n)^a for the given
    multi-index (a = None or zeros for plain theta).

    Raises ToleranceUnreachable if eps is below the double-precision floor
    or the radius would exceed the hard cap (default 1e4, overridable via
    the THETA_GAUSS_MAX_RADIUS environment variable).
    """
    B = as_siegel(B)
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    q = 0 if a is None else sum(exponents(a, B.g))
    if not eps > 0:
        raise ValueError("eps must be positive")
    if eps < EPS_FLOOR:
        raise ToleranceUnreachable(
            f"eps={eps:.3e} is below the double-precision floor {EPS_FLOOR:.0e}"
        )
    lam = B.lambda_min
    rho = float(np.linalg.norm(u.real))
    cap = _max_radius()

    # start past the peak of the shell-term profile so shell terms decrease;
    # the sup-norm shell count contributes an extra x^(g-1) factor
    q_eff = q + B.g - 1
    peak = (rho + math.sqrt(rho * rho + 2.0 * lam * q_eff / math.pi)) / (2.0 * lam)
    lo = max(1, int(math.ceil(rho / lam)), int(math.ceil(peak)))

    if _tail_bound(B.g, lam, rho, q, lo) < eps:
        R = lo
    else:
        # exponential then binary search for the minimal admissible radius
        hi = lo
        while _tail_bound(B.g, lam, rho, q, hi) >= eps:
            hi *= 2
            if hi > cap:
                raise ToleranceUnreachable(
                    f"radius needed for eps={eps:.3e} exceeds the cap {cap:.0f}"
                )
        lo_search = hi // 2
        while lo_search + 1 < hi:
            mid = (lo_search + hi) // 2
            if _tail_bound(B.g, lam, rho, q, mid) < eps:
                hi = mid
            else:
                lo_search = mid
        R = max(hi, lo)
    if R > cap:
        raise ToleranceUnreachable(
            f"radius {R} for eps={eps:.3e} exceeds the cap {cap:.0f}"
        )
    return TruncationBudget(eps=eps, radius=float(R), shell_count=int(R) + 1)


@lru_cache(maxsize=128)
def _lattice_points_cached(g: int, r2: int) -> np.ndarray:
    K = int(math.isqrt(r2))
    ax = np.arange(-K, K + 1)
    if g == 1:
        pts = ax.reshape(-1, 1)
    elif g == 2:
        pts = np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1).reshape(-1, 2)
    else:
        # chunk over the first coordinate to keep peak memory at (2K+1)^(g-1)
        rest = np.stack(
            np.meshgrid(*([ax] * (g - 1)), indexing="ij"), axis=-1
        ).reshape(-1, g - 1)
        rest_n2 = np.einsum("pi,pi->p", rest, rest)
        chunks = []
        for x0 in ax:
            keep = rest[rest_n2 <= r2 - x0 * x0]
            col = np.full((len(keep), 1), x0)
            chunks.append(np.hstack([col, keep]))
        pts = np.vstack(chunks)
    n2 = np.einsum("pi,pi->p", pts, pts)
    mask = n2 <= r2
    pts, n2 = pts[mask], n2[mask]
    # increasing ||n||^2, lexicographic within shells (primary key last)
    keys = tuple(pts[:, i] for i in reversed(range(g))) + (n2,)
    order = np.lexsort(keys)
    pts = np.ascontiguousarray(pts[order])
    pts.setflags(write=False)
    return pts


def lattice_points(g: int, radius: float) -> np.ndarray:
    """All n in Z^g with ||n||_2 <= radius, sorted by (||n||^2, lex).

    Returned array is read-only and cached.
    """
    r2 = int(math.floor(radius * radius + 1e-9))
    return _lattice_points_cached(int(g), r2)


def _summands(p: ThetaPoint, radius: float):
    pts = lattice_points(p.g, radius)
    quad = np.einsum("pi,ij,pj->p", pts, p.B.entries, pts)
    vals = np.exp(TWO_PI * (-0.5 * quad + pts @ p.u))
    return pts, vals


def theta(p: ThetaPoint, eps: float = 1e-12) -> complex:
    """theta(u, B) to certified absolute error < eps."""
    budget = truncation_radius(p.B, p.u, None, eps)
    _, vals = _summands(p, budget.radius)
    return complex(vals.sum())


def theta_du(a, p: ThetaPoint, eps: float = 1e-12) -> complex:
    """Mixed partial D^a_u theta = (2*pi)^|a| sum n^a e(...), error < eps.

    a is a multi-index over the g coordinates of u.
    """
    a = exponents(a, p.g)
    budget = truncation_radius(p.B, p.u, a, eps)
    pts, vals = _summands(p, budget.radius)
    mono = _monomial(pts, a)
    return complex(TWO_PI ** sum(a) * (mono * vals).sum())


def theta_du_many(indices, p: ThetaPoint, eps: float = 1e-12) -> dict:
    """D^a_u theta for every multi-index in `indices`, one lattice pass.

    A single radius certified for the highest derivative order covers the
    lower orders as well (their summand bounds are smaller shellwise).
    """
    idx = [exponents(a, p.g) for a in indices]
    worst = max(idx, key=sum) if idx else (0,) * p.g
    budget = truncation_radius(p.B, p.u, worst, eps)
    pts, vals = _summands(p, budget.radius)
    out = {}
    for a in idx:
        mono = _monomial(pts, a)
        out[a] = complex(TWO_PI ** sum(a) * (mono * vals).sum())
    return out


def theta_derivatives(p: ThetaPoint, max_order: int, eps: float = 1e-12) -> dict:
    """All D^a_u theta with |a| <= max_order, keyed by exponent tuple."""
    return theta_du_many(indices_up_to(p.g, max_order), p, eps)


def _monomial(pts: np.ndarray, a) -> np.ndarray:
    mono = np.ones(len(pts))
    for i, ai in enumerate(a):
        if ai:
            mono = mono * pts[:, i].astype(float) ** ai
    return mono


def theta_dB(i: int, j: int, p: ThetaPoint, eps: float = 1e-12) -> complex:
    """Derivative of theta in the symmetric entry pair B_ij = B_ji, via the
    heat equation:

        d theta / d B_ii = -(1/4pi) D^2_{u_i} theta
        d theta / d B_ij = -(1/2pi) D_{u_i} D_{u_j} theta   (i < j)

    Indices are 0-based with 0 <= i <= j < g.
    """
    if not (0 <= i <= j < p.g):
        raise ValueError("need 0 <= i <= j < g")
    a = [0] * p.g
    a[i] += 1
    a[j] += 1
    if i == j:
        return -theta_du(a, p, eps) / (4.0 * math.pi)
    return -theta_du(a, p, eps) / TWO_PI
