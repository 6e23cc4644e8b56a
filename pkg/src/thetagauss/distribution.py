"""Discrete Gaussian distributions on Z^g parametrized by theta.

The probability mass function with parameters (u, B) off the theta divisor
is

    p(n) = e(-1/2 n^T B n + n^T u) / theta(u, B)

which is a genuine positive density for real parameters and a complex-valued
distribution otherwise.  Expectations of complex-valued distributions are
plain lattice sums weighted by the complex pmf; no positivity is assumed.

Moments come from theta derivatives (mu_a = (2*pi)^-|a| D^a_u theta / theta),
cumulants from the exact multivariate moment-cumulant recursion, central
moments from the binomial expansion in first partials.  All operations are
pure; instances are immutable apart from an internal derivative memo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import engine
from .engine import TWO_PI, ThetaPoint, as_siegel, theta, theta_du_many
from .errors import DivisorHit, NotUnimodular
from .multiindex import (
    MultiIndex,
    exponents,
    indices_up_to,
    mi_binomial,
    sub_indices,
)

SAME_DISTRIBUTION_TOL = 1e-10


@dataclass(frozen=True)
class SplitSpec:
    """Coordinate split Z^g = Z^g1 x Z^g2, g1 the leading block."""

    g1: int
    g2: int

    def __post_init__(self):
        if self.g1 < 1 or self.g2 < 1:
            raise ValueError("both blocks of a split must be nonempty")


@dataclass(frozen=True)
class MomentKey:
    """A multi-index together with the statistic family it indexes."""

    a: MultiIndex
    kind: str  # one of "moment", "central", "cumulant"

    def __post_init__(self):
        if self.kind not in ("moment", "central", "cumulant"):
            raise ValueError(f"unknown statistic kind {self.kind!r}")
        if not isinstance(self.a, MultiIndex):
            object.__setattr__(self, "a", MultiIndex(tuple(self.a)))


def moments_to_cumulants(moments: dict, g: int) -> dict:
    """Cumulants kappa_a from raw moments mu_a = E[X^a], for every a with
    1 <= |a| and all componentwise-smaller moments present.

    Standard recursion from M'(v) = M(v) K'(v) for the generating functions:
    with i the first coordinate where a_i > 0 and a' = a - e_i,

        kappa_a = mu_a - sum_{b < a'} C(a', b) kappa_{b + e_i} mu_{a' - b}.
    """
    kappa = {}
    for a in sorted((k for k in moments if sum(k) >= 1), key=sum):
        i = next(k for k in range(g) if a[k] > 0)
        ap = tuple(a[k] - (1 if k == i else 0) for k in range(g))
        acc = moments[a]
        for b in sub_indices(ap):
            if b == ap:
                continue
            bi = tuple(b[k] + (1 if k == i else 0) for k in range(g))
            rest = tuple(ap[k] - b[k] for k in range(g))
            acc -= mi_binomial(ap, b) * kappa[bi] * moments[rest]
        kappa[a] = acc
    return kappa


class DiscreteGaussian:
    """A discrete Gaussian on Z^g with cached normalizer theta(u, B).

    Construction fails with DivisorHit when |theta| <= 10*eps: every
    statistic divides by theta, so points on (or numerically at) the theta
    divisor are invalid parameters.
    """

    __slots__ = ("point", "theta_value", "eps", "_derivs", "_derivs_order")

    def __init__(self, u, B, eps: float = 1e-12):
        point = u if isinstance(u, ThetaPoint) and B is None else None
        if point is None:
            point = ThetaPoint(u, B)
        value = theta(point, eps)
        if abs(value) <= 10.0 * eps:
            raise DivisorHit(
                f"|theta(u,B)| = {abs(value):.3e} <= 10*eps; parameters lie on "
                "the theta divisor"
            )
        self.point = point
        self.theta_value = value
        self.eps = eps
        self._derivs = {}
        self._derivs_order = -1

    @classmethod
    def from_point(cls, point: ThetaPoint, eps: float = 1e-12) -> "DiscreteGaussian":
        return cls(point, None, eps)

    @property
    def g(self) -> int:
        return self.point.g

    @property
    def u(self) -> np.ndarray:
        return self.point.u

    @property
    def B(self) -> np.ndarray:
        return self.point.B.entries

    def __repr__(self):
        return f"DiscreteGaussian(g={self.g}, theta={self.theta_value:.6g})"

    # -- internal -------------------------------------------------------

    def _deriv_table(self, order: int) -> dict:
        # memo of D^a_u theta for |a| <= order; a benign race only recomputes
        if order > self._derivs_order:
            table = theta_du_many(indices_up_to(self.g, order), self.point, self.eps)
            self._derivs = table
            self._derivs_order = order
        return self._derivs

    def _moment_table(self, order: int) -> dict:
        t = self._deriv_table(order)
        return {
            a: v / self.theta_value / TWO_PI ** sum(a)
            for a, v in t.items()
            if sum(a) <= order
        }

    # -- pointwise ------------------------------------------------------

    def pmf(self, n) -> complex:
        """Mass at the lattice point n; real and in (0,1) for real (u, B)."""
        n = np.asarray(n, dtype=float)
        if n.shape != (self.g,):
            raise ValueError(f"n must be an integer vector of length {self.g}")
        expo = -0.5 * n @ self.B @ n + n @ self.u
        return complex(np.exp(TWO_PI * expo) / self.theta_value)

    def char_fn(self, v) -> complex:
        """Characteristic function E[e^{i v.X}] = theta(u + iv/2pi, B)/theta."""
        v = np.asarray(v, dtype=float)
        shifted = ThetaPoint(self.u + 1j * v / TWO_PI, self.point.B)
        return theta(shifted, self.eps) / self.theta_value

    # -- moments ----------------------------------------------------------

    def moment(self, a) -> complex:
        """Raw moment E[X^a] = (2*pi)^-|a| D^a_u theta / theta."""
        a = exponents(a, self.g)
        return self._moment_table(sum(a))[a]

    def central_moment(self, a) -> complex:
        """Central moment m_a = E[(X-mu)^a], by the binomial expansion

            m_a = (2*pi)^-|a| (1/theta) sum_{0<=b<=a} C(a,b) (-1)^|b|
                  theta^-|b| (D_u theta)^b D^{a-b}_u theta

        with (D_u theta)^b the product of powered first partials.
        """
        a = exponents(a, self.g)
        table = self._deriv_table(max(sum(a), 1))  # the expansion uses first partials
        firsts = [table[tuple(int(i == k) for k in range(self.g))] for i in range(self.g)]
        acc = 0.0 + 0.0j
        for b in sub_indices(a):
            db = math.prod(f ** bi for f, bi in zip(firsts, b))
            rest = tuple(a[k] - b[k] for k in range(self.g))
            acc += (
                mi_binomial(a, b)
                * (-1.0) ** sum(b)
                * self.theta_value ** (-sum(b))
                * db
                * table[rest]
            )
        return acc / self.theta_value / TWO_PI ** sum(a)

    def cumulant(self, a) -> complex:
        """Cumulant kappa_a = (2*pi)^-|a| D^a_u log theta, via the exact
        moment-cumulant recursion on certified moments."""
        a = exponents(a, self.g)
        if sum(a) < 1:
            raise ValueError("cumulants are defined for |a| >= 1")
        kappa = moments_to_cumulants(self._moment_table(sum(a)), self.g)
        return kappa[a]

    def statistic(self, key: MomentKey) -> complex:
        fn = {
            "moment": self.moment,
            "central": self.central_moment,
            "cumulant": self.cumulant,
        }[key.kind]
        return fn(key.a)

    def mean_cov(self):
        """Mean vector and covariance matrix (complex in general; real SPD
        on the real parameter slice)."""
        table = self._moment_table(2)
        mean = np.array(
            [table[tuple(int(i == k) for k in range(self.g))] for i in range(self.g)]
        )
        cov = np.empty((self.g, self.g), dtype=complex)
        for i in range(self.g):
            for j in range(i, self.g):
                a = [0] * self.g
                a[i] += 1
                a[j] += 1
                cov[i, j] = cov[j, i] = table[tuple(a)] - mean[i] * mean[j]
        return mean, cov

    def entropy(self) -> complex:
        """H = log theta - 2*pi <u, mu> + pi <B, Sigma + mu mu^T>, with the
        entrywise (Frobenius) matrix pairing.

        For non-real parameters the principal branch of log theta is used
        (branch ambiguity is inherent there; on the real slice theta > 0 and
        the value is the genuine Shannon entropy).
        """
        mean, cov = self.mean_cov()
        second = cov + np.outer(mean, mean)
        return (
            np.log(self.theta_value)
            - TWO_PI * np.dot(self.u, mean)
            + math.pi * np.sum(self.B * second)
        )

    # -- marginals and group actions -------------------------------------

    def marginal_pmf(self, s: SplitSpec, n1) -> complex:
        """Mass of the leading-block marginal at n1:

            P(X_1 = n1) = theta(u1, B11) * theta(u2 - B12^T n1, B22) / theta
                          * pmf_{(u1, B11)}(n1)
        """
        if s.g1 + s.g2 != self.g:
            raise ValueError(f"split {s} does not match g={self.g}")
        n1 = np.asarray(n1, dtype=float)
        if n1.shape != (s.g1,):
            raise ValueError(f"n1 must have length {s.g1}")
        g1 = s.g1
        B = self.B
        B11, B12, B22 = B[:g1, :g1], B[:g1, g1:], B[g1:, g1:]
        u1, u2 = self.u[:g1], self.u[g1:]
        t1 = theta(ThetaPoint(u1, B11), self.eps)
        t2 = theta(ThetaPoint(u2 - B12.T @ n1, B22), self.eps)
        block_mass = np.exp(TWO_PI * (-0.5 * n1 @ B11 @ n1 + n1 @ u1)) / t1
        return complex(t1 * t2 / self.theta_value * block_mass)

    def translate(self, m, n) -> "DiscreteGaussian":
        """Distribution of X + n, realized as the parameter shift
        (u + i*m + B*n, B); the i*m shift alone changes nothing."""
        m = _int_vector(m, self.g)
        n = _int_vector(n, self.g)
        new_u = self.u + 1j * m + self.B @ n
        return DiscreteGaussian(new_u, self.point.B, self.eps)

    def unimodular(self, alpha) -> "DiscreteGaussian":
        """Distribution of alpha @ X for alpha in GL(g, Z): parameters map to
        (alpha^-T u, alpha^-T B alpha^-1)."""
        alpha = np.asarray(alpha)
        if alpha.shape != (self.g, self.g) or not np.all(alpha == np.round(alpha)):
            raise NotUnimodular("alpha must be an integer g x g matrix")
        alpha = np.round(alpha).astype(np.int64)
        det = int(round(float(np.linalg.det(alpha.astype(float)))))
        if det not in (-1, 1):
            raise NotUnimodular(f"det(alpha) = {det}; must be +-1")
        inv = np.round(np.linalg.inv(alpha.astype(float))).astype(np.int64)
        if not np.array_equal(alpha @ inv, np.eye(self.g, dtype=np.int64)):
            raise NotUnimodular("alpha is not invertible over the integers")
        new_u = inv.T @ self.u
        new_B = inv.T @ self.B @ inv
        new_B = 0.5 * (new_B + new_B.T)  # restore exact symmetry
        return DiscreteGaussian(new_u, new_B, self.eps)

    def canonicalize(self):
        """Unique representative of the distribution under the integer-shift
        action (a, beta).(u, B) = (u + i*a + i/2*diag(beta), B - i*beta):
        canonical Im(B) and Im(u) entries lie in [0, 1).

        Returns (canonical distribution, witness (a, beta)); boundary values
        floor downward.  The pmf is unchanged pointwise.
        """
        # the action subtracts i*beta, so beta = floor(Im B) lands Im in [0,1)
        beta = np.floor(self.B.imag).astype(np.int64)
        new_B = self.B - 1j * beta
        shift = 0.5 * np.diag(beta).astype(float)
        a = -np.floor(self.u.imag + shift).astype(np.int64)
        new_u = self.u + 1j * a + 1j * shift
        return DiscreteGaussian(new_u, new_B, self.eps), (a, beta)

    def same_distribution(self, other: "DiscreteGaussian") -> bool:
        """Equality of distributions: canonical forms agree to 1e-10."""
        if self.g != other.g:
            raise ValueError("dimensions differ")
        c1, _ = self.canonicalize()
        c2, _ = other.canonicalize()
        du = np.max(np.abs(c1.u - c2.u))
        dB = np.max(np.abs(c1.B - c2.B))
        return bool(max(du, dB) < SAME_DISTRIBUTION_TOL)

    def is_independent_split(self, s: SplitSpec) -> bool:
        """True when the two blocks are independent: the off-diagonal block
        of B has entries in i*Z (zero after canonicalization), equivalently
        the pmf factorizes."""
        if s.g1 + s.g2 != self.g:
            raise ValueError(f"split {s} does not match g={self.g}")
        B12 = self.B[: s.g1, s.g1 :]
        re_ok = np.all(np.abs(B12.real) < SAME_DISTRIBUTION_TOL)
        im_ok = np.all(
            np.abs(B12.imag - np.round(B12.imag)) < SAME_DISTRIBUTION_TOL
        )
        return bool(re_ok and im_ok)


def _int_vector(v, g: int) -> np.ndarray:
    v = np.asarray(v)
    if v.shape != (g,):
        raise ValueError(f"expected an integer vector of length {g}")
    if not np.all(v == np.round(v)):
        raise ValueError("expected integer entries")
    return np.round(v).astype(np.int64)
