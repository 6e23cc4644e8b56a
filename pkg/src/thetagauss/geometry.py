"""Projective moment maps of theta parameters and their algebraic identities.

For fixed B the degree-d map sends u to the projective vector

    [theta^d * kappa_a]_{|a| <= d, |a| != 1}

(theta^d itself is the a = 0 coordinate).  Translation invariance of the
cumulants of order >= 2 makes the map well defined modulo the period
lattice; its image satisfies polynomial identities that this module
evaluates and fits:

  * g = 1: the cubic  kappa_3^2 = -4 kappa_2^3 + a kappa_2^2 + b kappa_2 + c
    with coefficients from the second log-derivatives e_1, e_2, e_3 at the
    half-periods 0, i/2, B/2, plus the derived quartic and determinant
    relations in the nu_k = (2*pi)^k kappa_k normalization.
  * g = 2, d = 2: the image lies on a unique quartic surface in P^3.

Coordinates on the theta divisor itself degenerate to the Gauss map
direction: the grade-d coordinates limit to a common multiple of
(D_u theta)^a and everything of lower grade vanishes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import pi

import numpy as np

from .distribution import moments_to_cumulants
from .engine import TWO_PI, ThetaPoint, as_siegel, theta, theta_du_many
from .errors import (
    DivisorHit,
    IndeterminatePoint,
    NoZeroFound,
    RankDeficientInput,
    SingularDivisorPoint,
)
from .multiindex import indices_up_to, moment_map_indices

DIVISOR_TOL = 1e-8
PROJECTIVE_TOL = 1e-8


class ProjectivePoint:
    """Homogeneous coordinate vector, not all zero."""

    __slots__ = ("coords",)

    def __init__(self, coords):
        coords = np.atleast_1d(np.asarray(coords, dtype=complex))
        if coords.ndim != 1 or len(coords) < 1:
            raise ValueError("coords must be a nonempty vector")
        if not np.any(coords != 0):
            raise ValueError("projective coordinates cannot all vanish")
        coords.setflags(write=False)
        self.coords = coords

    @property
    def dim(self) -> int:
        return len(self.coords) - 1

    def normalized(self) -> np.ndarray:
        """Representative scaled so the max-modulus coordinate equals 1."""
        k = int(np.argmax(np.abs(self.coords)))
        return self.coords / self.coords[k]

    def distance(self, other: "ProjectivePoint") -> float:
        """Scale-free sup-norm distance: both points are rescaled to make
        this point's max-modulus coordinate equal to 1."""
        k = int(np.argmax(np.abs(self.coords)))
        if other.coords[k] == 0:
            return float("inf")
        return float(
            np.max(np.abs(self.coords / self.coords[k] - other.coords / other.coords[k]))
        )

    def __repr__(self):
        return f"ProjectivePoint(dim={self.dim})"


def statistical_map(d: int, p: ThetaPoint, eps: float = 1e-12) -> ProjectivePoint:
    """Degree-d projective moment map at (u, B).

    Off the divisor the coordinates are theta^d * kappa_a in the graded-lex
    ordering of :func:`multiindex.moment_map_indices`.  On the (smooth part
    of the) divisor they continue to the limit values: zero below grade d,
    (D_u theta)^a at grade d, a common nonzero constant dropped projectively.

    Raises IndeterminatePoint when every coordinate vanishes (singular
    divisor point).
    """
    if d < 2:
        raise ValueError("the map needs degree d >= 2")
    g = p.g
    labels = moment_map_indices(g, d)
    table = theta_du_many(indices_up_to(g, d), p, eps)
    t = table[(0,) * g]
    firsts = [table[tuple(int(i == k) for k in range(g))] for i in range(g)]

    if abs(t) >= DIVISOR_TOL:
        mus = {a: v / t / TWO_PI ** sum(a) for a, v in table.items()}
        kappa = moments_to_cumulants(mus, g)
        coords = np.array(
            [t**d if sum(a) == 0 else t**d * kappa[a] for a in labels]
        )
    else:
        coords = np.array(
            [
                np.prod([f**ai for f, ai in zip(firsts, a)]) if sum(a) == d else 0.0j
                for a in labels
            ]
        )
    if np.max(np.abs(coords)) < 1e-12:
        raise IndeterminatePoint(
            "all map coordinates vanish; singular point of the theta divisor"
        )
    return ProjectivePoint(coords)


def log_derivatives(p: ThetaPoint, max_order: int, eps: float = 1e-12) -> dict:
    """nu_a = D^a_u log theta = (2*pi)^|a| kappa_a for all |a| <= max_order."""
    table = theta_du_many(indices_up_to(p.g, max_order), p, eps)
    t = table[(0,) * p.g]
    if abs(t) <= 10.0 * eps:
        raise DivisorHit("log-derivatives undefined on the theta divisor")
    mus = {a: v / t / TWO_PI ** sum(a) for a, v in table.items()}
    kappa = moments_to_cumulants(mus, p.g)
    return {a: TWO_PI ** sum(a) * v for a, v in kappa.items()}


@dataclass(frozen=True)
class CubicCoefficients:
    """Coefficients of the g = 1 cubic in the kappa normalization, with the
    second log-derivatives at the three even half-periods they come from:

        a = (e1+e2+e3)/pi^2,  b = -(e1 e2 + e1 e3 + e2 e3)/(4 pi^4),
        c = e1 e2 e3 / (16 pi^6).

    In the nu normalization (Vieta form, roots e1, e2, e3 of
    -4x^3 + a_nu x^2 + b_nu x + c_nu):  a_nu = 4*sum, b_nu = -4*sum of
    pair products, c_nu = 4*product.
    """

    a: complex
    b: complex
    c: complex
    e1: complex
    e2: complex
    e3: complex

    @property
    def a_nu(self) -> complex:
        return 4.0 * (self.e1 + self.e2 + self.e3)

    @property
    def b_nu(self) -> complex:
        return -4.0 * (self.e1 * self.e2 + self.e1 * self.e3 + self.e2 * self.e3)

    @property
    def c_nu(self) -> complex:
        return 4.0 * self.e1 * self.e2 * self.e3


@dataclass(frozen=True)
class CubicResiduals:
    r_cubic: float
    r_quartic: float
    r_det: float


def cubic_coefficients(B, eps: float = 1e-12) -> CubicCoefficients:
    """Cubic coefficients for a scalar B in the right half-plane."""
    B = as_siegel(np.atleast_2d(np.asarray(B, dtype=complex)))
    if B.g != 1:
        raise ValueError("cubic coefficients are a g = 1 construction")
    b_scalar = complex(B.entries[0, 0])
    es = []
    for point in (0.0, 0.5j, b_scalar / 2.0):
        nu = log_derivatives(ThetaPoint([point], B), 2, eps)
        es.append(nu[(2,)])
    e1, e2, e3 = es
    a = (e1 + e2 + e3) / pi**2
    b = -(e1 * e2 + e1 * e3 + e2 * e3) / (4.0 * pi**4)
    c = e1 * e2 * e3 / (16.0 * pi**6)
    return CubicCoefficients(a=a, b=b, c=c, e1=e1, e2=e2, e3=e3)


def verify_cubic(u, B, eps: float = 1e-12) -> CubicResiduals:
    """Residuals of the three g = 1 identities at (u, B), all ~0 off the
    divisor:

        r_cubic   = |kappa_3^2 + 4 kappa_2^3 - a kappa_2^2 - b kappa_2 - c|
        r_quartic = |nu_4 + 6 nu_2^2 - a_nu nu_2 - b_nu/2|
        r_det     = |nu_2 nu_4 + 2 nu_2^3 - nu_3^2 + (b_nu/2) nu_2 + c_nu|

    (r_det is the determinant identity for the mean/variance map; the sign
    of the constant term follows from the cubic and quartic relations.)
    """
    coef = cubic_coefficients(B, eps)
    B = as_siegel(np.atleast_2d(np.asarray(B, dtype=complex)))
    nus = log_derivatives(ThetaPoint([u], B), 4, eps)
    n2, n3, n4 = nus[(2,)], nus[(3,)], nus[(4,)]
    k2, k3 = n2 / TWO_PI**2, n3 / TWO_PI**3
    r_cubic = abs(k3**2 + 4.0 * k2**3 - coef.a * k2**2 - coef.b * k2 - coef.c)
    r_quartic = abs(n4 + 6.0 * n2**2 - coef.a_nu * n2 - coef.b_nu / 2.0)
    r_det = abs(n2 * n4 + 2.0 * n2**3 - n3**2 + coef.b_nu / 2.0 * n2 + coef.c_nu)
    return CubicResiduals(r_cubic=r_cubic, r_quartic=r_quartic, r_det=r_det)


def find_theta_zero(
    line,
    B,
    t_window=((-2.0, 2.0), (-2.0, 2.0)),
    grid: int = 41,
    tol: float = 1e-10,
    eps: float = 1e-12,
) -> np.ndarray:
    """A point u* = base + t*direction with |theta(u*, B)| < tol, found by a
    coarse scan of the complex t rectangle followed by Newton refinement on
    t -> theta(base + t*direction, B).

    Raises NoZeroFound when no candidate in the window refines to a zero.
    """
    B = as_siegel(B)
    base = np.atleast_1d(np.asarray(line[0], dtype=complex))
    direction = np.atleast_1d(np.asarray(line[1], dtype=complex))
    if base.shape != (B.g,) or direction.shape != (B.g,):
        raise ValueError("line must be a (base, direction) pair of g-vectors")
    if not np.any(direction != 0):
        raise ValueError("direction must be nonzero")

    (re_lo, re_hi), (im_lo, im_hi) = t_window
    res = np.linspace(re_lo, re_hi, grid)
    ims = np.linspace(im_lo, im_hi, grid)
    cands = []
    for x in res:
        for y in ims:
            t = complex(x, y)
            val = abs(theta(ThetaPoint(base + t * direction, B), 1e-8))
            cands.append((val, t))
    cands.sort(key=lambda c: c[0])

    grad_idx = [tuple(int(i == k) for k in range(B.g)) for i in range(B.g)]
    span = max(re_hi - re_lo, im_hi - im_lo)
    margin = 2.0 * span / max(grid - 1, 1)

    def inside(t: complex) -> bool:
        return (
            re_lo - margin <= t.real <= re_hi + margin
            and im_lo - margin <= t.imag <= im_hi + margin
        )

    for _, t0 in cands[:5]:
        t = t0
        for _ in range(60):
            point = ThetaPoint(base + t * direction, B)
            table = theta_du_many([(0,) * B.g] + grad_idx, point, eps)
            f = table[(0,) * B.g]
            if abs(f) < tol:
                if inside(t):
                    return base + t * direction
                break  # converged to a zero outside the window
            fp = sum(direction[i] * table[grad_idx[i]] for i in range(B.g))
            if fp == 0:
                break
            t = t - f / fp
            if abs(t - t0) > 2.0 * span:  # drifted far out of the window
                break
    raise NoZeroFound("no theta zero located on the line inside the window")


def gauss_map(u, B, eps: float = 1e-12) -> ProjectivePoint:
    """Gauss map [d theta/d u_1 : ... : d theta/d u_g] at a divisor point.

    Requires |theta(u, B)| < 1e-8; raises SingularDivisorPoint when all
    first partials vanish (modulus below 1e-10).
    """
    B = as_siegel(B)
    point = ThetaPoint(u, B)
    grad_idx = [tuple(int(i == k) for k in range(B.g)) for i in range(B.g)]
    table = theta_du_many([(0,) * B.g] + grad_idx, point, eps)
    if abs(table[(0,) * B.g]) >= DIVISOR_TOL:
        raise ValueError("the Gauss map is defined on the theta divisor only")
    partials = np.array([table[a] for a in grad_idx])
    if np.max(np.abs(partials)) < 1e-10:
        raise SingularDivisorPoint("all first partials vanish at this point")
    return ProjectivePoint(partials)


@dataclass(frozen=True)
class FormFit:
    """Least-squares vanishing form: coefficients of the smallest singular
    vector of the monomial matrix, its singular value as residual, and the
    full spectrum for uniqueness diagnostics."""

    coeffs: np.ndarray
    residual: float
    singular_values: np.ndarray
    monomials: list


def fit_vanishing_form(points, degree: int) -> FormFit:
    """Degree-`degree` form in the homogeneous coordinates of `points` that
    minimizes the vanishing residual, via SVD of the monomial matrix with
    every point normalized to unit max modulus.

    Raises RankDeficientInput with fewer points than monomials or when the
    points span too small a subspace (two-dimensional nullspace).
    """
    points = list(points)
    if not points:
        raise RankDeficientInput("no points given")
    nvars = len(points[0].coords)
    monomials = [
        a for a in itertools.product(range(degree + 1), repeat=nvars) if sum(a) == degree
    ]
    monomials.sort(reverse=True)
    if len(points) < len(monomials):
        raise RankDeficientInput(
            f"need at least {len(monomials)} points for a degree-{degree} form "
            f"in {nvars} variables, got {len(points)}"
        )
    rows = []
    for pt in points:
        z = pt.normalized()
        if len(z) != nvars:
            raise ValueError("points live in different projective spaces")
        rows.append([np.prod(z ** np.array(a)) for a in monomials])
    M = np.array(rows, dtype=complex)
    _, s, vh = np.linalg.svd(M)
    if s[-2] < 1e-12:
        raise RankDeficientInput(
            "points span too small a subspace; vanishing form not unique"
        )
    return FormFit(
        coeffs=vh[-1].conj(),
        residual=float(s[-1]),
        singular_values=s,
        monomials=monomials,
    )


def kummer_quartic_fit(B, points) -> FormFit:
    """Quartic surface through d = 2 map images of a g = 2 parameter.

    `points` should be at least 40 pairwise distinct projective points in
    P^3 produced by statistical_map(2, .); the fit certifies the Kummer
    quartic when the residual is ~0 and the second-smallest singular value
    is bounded away from it.
    """
    B = as_siegel(B)
    if B.g != 2:
        raise ValueError("the Kummer quartic lives over g = 2")
    points = list(points)
    if any(len(pt.coords) != 4 for pt in points):
        raise ValueError("expected points in P^3 from the degree-2 map")
    return fit_vanishing_form(points, 4)


@dataclass(frozen=True)
class ProbeReport:
    trials: int
    collisions: int
    min_separation: float


def identifiability_probe(
    B, trials: int, seed: int = 0, separation: float = 1e-6
) -> ProbeReport:
    """Random search for order-<=3 moment collisions at fixed B (g <= 2).

    Draws pairs (u, u') uniformly on the parameter torus, rejecting points
    near the divisor, pairs whose canonical forms nearly coincide and pairs
    differing by a period lattice vector (the same point of the abelian
    variety).  For each surviving pair the sup-norm distance between the
    moment vectors (mu_a for 1 <= |a| <= 3) is recorded; a collision is a
    distance at or below `separation`.
    """
    B = as_siegel(B)
    if B.g not in (1, 2):
        raise ValueError("the probe is implemented for g in {1, 2}")
    g = B.g
    rng = np.random.Generator(np.random.Philox(seed))
    idx3 = [a for a in indices_up_to(g, 3) if sum(a) >= 1]

    from .distribution import DiscreteGaussian

    def sample_point():
        while True:
            x = rng.uniform(0.0, 1.0, g)
            y = rng.uniform(0.0, 1.0, g)
            u = 1j * x + B.entries @ y
            if abs(theta(ThetaPoint(u, B), 1e-10)) > 0.05:
                return u

    def lattice_related(w):
        # w = i*m + B n with integer m, n?
        n = np.linalg.solve(B.entries.real, w.real)
        if np.max(np.abs(n - np.round(n))) > 1e-6:
            return False
        m = w.imag - B.entries.imag @ np.round(n)
        return bool(np.max(np.abs(m - np.round(m))) < 1e-6)

    def moment_vector(u):
        table = theta_du_many(indices_up_to(g, 3), ThetaPoint(u, B), 1e-12)
        t = table[(0,) * g]
        return np.array([table[a] / t / TWO_PI ** sum(a) for a in idx3])

    collisions = 0
    min_sep = float("inf")
    done = 0
    while done < trials:
        u = sample_point()
        v = sample_point()
        if lattice_related(v - u):
            continue
        d1 = DiscreteGaussian(u, B.entries, 1e-12)
        d2 = DiscreteGaussian(v, B.entries, 1e-12)
        c1, _ = d1.canonicalize()
        c2, _ = d2.canonicalize()
        if max(np.max(np.abs(c1.u - c2.u)), np.max(np.abs(c1.B - c2.B))) <= 1e-3:
            continue
        sep = float(np.max(np.abs(moment_vector(u) - moment_vector(v))))
        min_sep = min(min_sep, sep)
        if sep <= separation:
            collisions += 1
        done += 1
    return ProbeReport(trials=trials, collisions=collisions, min_separation=min_sep)
