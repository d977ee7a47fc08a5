"""Induced-metric geometry of the worldsheet.

In conformal gauge the induced metric is ``g = g_ss (-dtau^2 + dsigma^2)``
with ``g_ss = sum_I (dX^I/dsigma)^2``. Everything curvature-related follows
from ``g_ss`` and its first and second partials, which are assembled here in
closed form from the chiral wave sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq, least_squares

from .config import TWO_PI, Chirality, StringConfiguration
from .errors import SingularPointError
from .trig import ChiralSeries

SINGULAR_RTOL = 1e-12
LOCUS_GRID = 256

Jet = Callable[[np.ndarray, np.ndarray], tuple]


@dataclass(frozen=True)
class ConformalFactorField:
    """g_ss with exact partials up to second order.

    ``jet(tau, sigma)`` returns ``(g, g_tau, g_sigma, g_tautau, g_sigmasigma)``.
    ``scale`` sets the singular cutoff; for configuration fields it is
    ``2 a' sum omega r^2``.
    """

    jet: Jet
    scale: float = 1.0
    config: StringConfiguration | None = None

    @classmethod
    def from_functions(cls, g, g_tau, g_sigma, g_tau2, g_sigma2, scale: float = 1.0) -> "ConformalFactorField":
        def jet(tau, sigma):
            tau, sigma = np.broadcast_arrays(np.asarray(tau, float), np.asarray(sigma, float))
            return tuple(np.broadcast_to(np.asarray(f(tau, sigma), float), tau.shape) for f in (g, g_tau, g_sigma, g_tau2, g_sigma2))

        return cls(jet, scale)

    @property
    def singular_tolerance(self) -> float:
        return SINGULAR_RTOL * self.scale

    def value(self, tau, sigma):
        return self.jet(tau, sigma)[0]

    def d_tau(self, tau, sigma):
        return self.jet(tau, sigma)[1]

    def d_sigma(self, tau, sigma):
        return self.jet(tau, sigma)[2]

    def d_tau2(self, tau, sigma):
        return self.jet(tau, sigma)[3]

    def d_sigma2(self, tau, sigma):
        return self.jet(tau, sigma)[4]


def sigma_series(cfg: StringConfiguration) -> ChiralSeries:
    """dX^I/dsigma as a chiral series (the linear terms drop out)."""
    base = cfg.series
    return ChiralSeries(base.harmonic, base.sign, base.coefficients(0, 1), base.row, base.n_rows)


def conformal_factor(cfg: StringConfiguration) -> ConformalFactorField:
    v = sigma_series(cfg)
    orders = [(0, 0), (1, 0), (0, 1), (2, 0), (0, 2)]

    def jet(tau, sigma):
        V, Vt, Vs, Vtt, Vss = v.evaluate_many(tau, sigma, orders)
        g = np.sum(V * V, axis=0)
        g_t = 2.0 * np.sum(V * Vt, axis=0)
        g_s = 2.0 * np.sum(V * Vs, axis=0)
        g_tt = 2.0 * np.sum(Vt * Vt + V * Vtt, axis=0)
        g_ss = 2.0 * np.sum(Vs * Vs + V * Vss, axis=0)
        return g, g_t, g_s, g_tt, g_ss

    scale = 2.0 * cfg.alpha_prime * cfg.mode_power()
    return ConformalFactorField(jet, scale if scale > 0 else 1.0, cfg)


def conformal_factor_series(cfg: StringConfiguration, tau, sigma) -> np.ndarray:
    """g_ss from the explicit double sum over pairs of modes.

    Right movers enter as ``+sqrt(w) r sin w(tau - sigma + phase)`` and left
    movers as ``-sqrt(w) r sin w(tau + sigma + phase)``; only pairs sharing a
    transverse direction contribute.
    """
    tau, sigma = np.broadcast_arrays(np.asarray(tau, float), np.asarray(sigma, float))
    terms = []
    for m in cfg.modes:
        w = m.omega
        if m.chirality is Chirality.RIGHT:
            terms.append((m.direction, math.sqrt(w) * m.amplitude * np.sin(w * (tau - sigma + m.phase))))
        else:
            terms.append((m.direction, -math.sqrt(w) * m.amplitude * np.sin(w * (tau + sigma + m.phase))))
    total = np.zeros(tau.shape)
    for d1, a in terms:
        for d2, b in terms:
            if d1 == d2:
                total = total + a * b
    return 2.0 * cfg.alpha_prime * total


def density_from_jet(g, g_t, g_s, g_tt, g_ss):
    """Euler density without the singular check (nan/inf where g == 0)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return -((g * g_tt - g_t * g_t) - (g * g_ss - g_s * g_s)) / (4.0 * math.pi * g * g)


def _check_regular(field: ConformalFactorField, g, tau, sigma):
    bad = np.asarray(g) <= field.singular_tolerance
    if np.any(bad):
        idx = np.argwhere(np.atleast_1d(bad))[0]
        t = np.atleast_1d(np.broadcast_to(tau, np.shape(g)))[tuple(idx)]
        s = np.atleast_1d(np.broadcast_to(sigma, np.shape(g)))[tuple(idx)]
        raise SingularPointError(f"g_ss vanishes at (tau, sigma) = ({t:.12g}, {s:.12g})")


def euler_density(field: ConformalFactorField, tau, sigma):
    """Coefficient of dtau^dsigma in the Euler form.

    -(1/4 pi) [d_tau(g_tau/g) - d_sigma(g_sigma/g)], expanded so only the
    jet of g is needed.
    """
    jet = field.jet(tau, sigma)
    _check_regular(field, jet[0], tau, sigma)
    return density_from_jet(*jet)


def spin_connection(field: ConformalFactorField, tau, sigma):
    """Components (w_tau, w_sigma) of the so(1,1) connection one-form.

    For the coframe ``sqrt(g) dtau, sqrt(g) dsigma`` Cartan's structure
    equations give ``w = (g_sigma dtau + g_tau dsigma) / 2g``; its exterior
    derivative is the curvature ``R = -2 pi e``.
    """
    g, g_t, g_s, _, _ = field.jet(tau, sigma)
    _check_regular(field, g, tau, sigma)
    return g_s / (2.0 * g), g_t / (2.0 * g)


def connection_from_jet(g, g_t, g_s):
    with np.errstate(divide="ignore", invalid="ignore"):
        return g_s / (2.0 * g), g_t / (2.0 * g)


# --------------------------------------------------------------------------
# Singular locus


@dataclass(frozen=True)
class SingularLocus:
    """Zeros of g_ss on the fundamental domain.

    ``kind`` is ``none``, ``points``, ``curves``, ``degenerate`` (g == 0
    identically) or ``non-isolated`` (zero sets this package cannot excise).
    For curve loci ``profile`` holds a scalar series F with g = c F^2.
    """

    kind: str
    points: tuple[tuple[float, float], ...] = ()
    curves: tuple[np.ndarray, ...] = ()
    profile: ChiralSeries | None = None
    tolerance: float = 0.0
    rank: int = 0
    notes: tuple[str, ...] = field(default=())

    def summary(self) -> str:
        if self.kind == "points":
            return f"{len(self.points)} isolated zero(s) of g_ss"
        if self.kind == "curves":
            n = sum(len(c) for c in self.curves)
            return f"{len(self.curves)} zero curve(s) of g_ss ({n} chain points)"
        if self.kind == "degenerate":
            return "g_ss vanishes identically"
        if self.kind == "none":
            return "g_ss has no zeros"
        return "zeros of g_ss are not isolated: " + "; ".join(self.notes)


def _profile_matrix(v: ChiralSeries) -> tuple[np.ndarray, list[tuple[int, int]]]:
    keys = sorted({(int(k), int(s)) for k, s in zip(v.harmonic, v.sign)})
    index = {key: j for j, key in enumerate(keys)}
    mat = np.zeros((v.n_rows, len(keys)), dtype=complex)
    for k, s, z, r in zip(v.harmonic, v.sign, v.weight, v.row):
        mat[r, index[(int(k), int(s))]] += z
    return np.hstack([mat.real, mat.imag]), keys


def profile_rank(cfg: StringConfiguration) -> tuple[int, np.ndarray | None]:
    """Rank of the map direction -> dX/dsigma and, if one, the row weights."""
    v = sigma_series(cfg)
    if not v.n_terms:
        return 0, None
    mat, _ = _profile_matrix(v)
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    if s[0] == 0.0:
        return 0, None
    rank = int(np.sum(s > 1e-10 * s[0]))
    return rank, (u[:, 0] if rank == 1 else None)


def scalar_profile(cfg: StringConfiguration) -> ChiralSeries:
    """F with dX^I/dsigma proportional to F for every I (rank-one configs)."""
    rank, weights = profile_rank(cfg)
    if rank != 1:
        raise ValueError(f"configuration has profile rank {rank}, expected 1")
    return sigma_series(cfg).combine_rows(weights)


def profile_roots(profile: ChiralSeries, tau: float, n_samples: int | None = None) -> np.ndarray:
    """Simple zeros of F(tau, .) on [0, 2 pi), sorted."""
    kmax = max(profile.max_harmonic(), 1)
    n = n_samples or max(256, 64 * kmax)
    s = np.linspace(0.0, TWO_PI, n + 1)
    f = profile.evaluate(tau, s)[0]
    # values at rounding level are zeros sitting on a sample point
    f = np.where(np.abs(f) <= 1e-13 * np.max(np.abs(f)), 0.0, f)
    roots = []

    def fun(x):
        return float(profile.evaluate(tau, x)[0])

    for i in range(n):
        a, b = f[i], f[i + 1]
        if a == 0.0:
            roots.append(s[i])
            continue
        if a * b < 0.0:
            roots.append(brentq(fun, s[i], s[i + 1], xtol=1e-15, rtol=1e-15))
    out: list[float] = []
    for r in sorted(r % TWO_PI for r in roots):
        if out and r - out[-1] < 1e-12:
            continue
        out.append(r)
    if len(out) > 1 and out[0] + TWO_PI - out[-1] < 1e-12:
        out.pop()
    return np.array(out)


def _link_chains(rows: list[tuple[float, np.ndarray]]) -> tuple[np.ndarray, ...]:
    chains: list[list[tuple[float, float]]] = []
    open_ends: list[int] = []
    for tau, roots in rows:
        taken = set()
        next_ends = []
        for ci in open_ends:
            last = chains[ci][-1][1]
            if roots.size == 0:
                continue
            d = np.abs((roots - last + math.pi) % TWO_PI - math.pi)
            for j in np.argsort(d):
                if j not in taken and d[j] < 0.25:
                    taken.add(int(j))
                    chains[ci].append((tau, float(roots[j])))
                    next_ends.append(ci)
                    break
        for j, r in enumerate(roots):
            if j not in taken:
                chains.append([(tau, float(r))])
                next_ends.append(len(chains) - 1)
        open_ends = next_ends
    return tuple(np.array(c) for c in chains)


def find_singular_locus(field: ConformalFactorField, grid: int = LOCUS_GRID) -> SingularLocus:
    """Locate zeros of g_ss on the torus [0, 2 pi]^2.

    Rank-one configurations (all dX^I/dsigma proportional to one scalar F)
    vanish on curves; these are traced by sign changes of F along sigma grid
    lines polished with Brent's method. Otherwise zeros are isolated points,
    found as grid minima of g_ss and polished by least squares on dX/dsigma.
    """
    cfg = field.config
    if cfg is None:
        raise ValueError("locus detection needs a configuration-backed field")
    tol = field.singular_tolerance
    rank, _ = profile_rank(cfg)
    if rank == 0:
        return SingularLocus("degenerate", tolerance=tol, rank=0)
    if rank == 1:
        profile = scalar_profile(cfg)
        taus = np.linspace(0.0, TWO_PI, grid, endpoint=False)
        rows = [(float(t), profile_roots(profile, t, grid)) for t in taus]
        return SingularLocus("curves", curves=_link_chains(rows), profile=profile, tolerance=tol, rank=1)
    return _point_locus(field, cfg, grid, tol, rank)


def _point_locus(field, cfg, grid, tol, rank) -> SingularLocus:
    v = sigma_series(cfg)
    active = sorted({int(r) for r in v.row})
    h = TWO_PI / grid
    axis = np.arange(grid) * h
    T, S = np.meshgrid(axis, axis, indexing="ij")
    g = field.value(T, S)
    is_min = np.ones_like(g, dtype=bool)
    for dt in (-1, 0, 1):
        for ds in (-1, 0, 1):
            if dt or ds:
                is_min &= g <= np.roll(np.roll(g, dt, axis=0), ds, axis=1)
    candidates = np.argwhere(is_min)

    def residual(p):
        return v.evaluate(p[0], p[1])[active].ravel()

    def jacobian(p):
        vt, vs = v.evaluate_many(p[0], p[1], [(1, 0), (0, 1)])
        return np.column_stack([vt[active].ravel(), vs[active].ravel()])

    points: list[tuple[float, float]] = []
    notes = []
    for i, j in candidates:
        start = np.array([T[i, j], S[i, j]])
        sol = least_squares(residual, start, jac=jacobian, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
        p = sol.x % TWO_PI
        if field.value(p[0], p[1]) > tol:
            continue
        if any(_torus_distance(p, q) < 1e-7 for q in points):
            continue
        if np.linalg.svd(jacobian(p), compute_uv=False)[-1] <= 1e-8 * math.sqrt(field.scale):
            notes.append(f"zero at ({p[0]:.6g}, {p[1]:.6g}) is not isolated")
            continue
        points.append((float(p[0]), float(p[1])))
    if notes:
        return SingularLocus("non-isolated", tuple(points), tolerance=tol, rank=rank, notes=tuple(notes[:3]))
    if not points:
        return SingularLocus("none", tolerance=tol, rank=rank)
    return SingularLocus("points", tuple(sorted(points)), tolerance=tol, rank=rank)


def _torus_distance(p, q) -> float:
    d = (np.asarray(p) - np.asarray(q) + math.pi) % TWO_PI - math.pi
    return float(np.hypot(d[0], d[1]))


# --------------------------------------------------------------------------
# Null patches

_PATCH_SIGNS = {"I": (1, 1), "II": (1, -1), "III": (-1, 1), "IV": (-1, -1)}
PATCH_KINDS = tuple(_PATCH_SIGNS)


@dataclass(frozen=True)
class NullPatch:
    """One chart x = +/- sin k(tau - sigma + gamma), y = +/- sin l(tau + sigma + gamma~)."""

    kind: str
    k: int
    l: int
    gamma: float = 0.0
    gamma_tilde: float = 0.0
    directions: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in _PATCH_SIGNS:
            raise ValueError(f"patch kind must be one of {PATCH_KINDS}, got {self.kind!r}")
        if self.k < 1 or self.l < 1:
            raise ValueError("harmonics must be positive")

    @property
    def signs(self) -> tuple[int, int]:
        return _PATCH_SIGNS[self.kind]

    @property
    def multiplicity(self) -> int:
        """Copies of this chart needed to tile [0, 2 pi]^2."""
        return 2 * self.k * self.l

    def phases(self, tau, sigma):
        u = self.k * (np.asarray(tau, float) - np.asarray(sigma, float) + self.gamma)
        v = self.l * (np.asarray(tau, float) + np.asarray(sigma, float) + self.gamma_tilde)
        return u, v


def null_patch_map(patch: NullPatch, tau, sigma):
    sx, sy = patch.signs
    u, v = patch.phases(tau, sigma)
    return sx * np.sin(u), sy * np.sin(v)


def null_patch_jacobian(patch: NullPatch, tau, sigma):
    """det d(x, y)/d(tau, sigma)."""
    sx, sy = patch.signs
    u, v = patch.phases(tau, sigma)
    return sx * sy * 2.0 * patch.k * patch.l * np.cos(u) * np.cos(v)


def euler_density_null(patch: NullPatch, amplitudes: Sequence[float], x, y, family: str = "parallel"):
    """Euler density as the coefficient of dx^dy in a null patch.

    ``amplitudes`` is ``(r, r~)`` for the right k-mode and the left l-mode.
    ``family='parallel'`` puts both modes in one direction; ``perpendicular``
    puts them in different directions. The density is the exact pullback,
    so multiplying by :func:`null_patch_jacobian` recovers the conformal one.
    """
    r, rt = amplitudes
    k, l = patch.k, patch.l
    sx, sy = patch.signs
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if family == "parallel":
        a = math.sqrt(k) * r
        b = math.sqrt(l) * rt
        f = sx * a * x - sy * b * y
        if np.any(f * f <= SINGULAR_RTOL * (a * a + b * b)):
            raise SingularPointError("patch density is singular on the line sqrt(k) r x = +/- sqrt(l) r~ y")
        return -sx * sy * a * b / (math.pi * f * f)
    if family == "perpendicular":
        den = k * r * r * x * x + l * rt * rt * y * y
        if np.any(den <= SINGULAR_RTOL * (k * r * r + l * rt * rt)):
            raise SingularPointError("patch density is singular at the origin")
        return (2.0 / math.pi) * k * l * (r * rt) ** 2 * x * y / (den * den)
    raise ValueError(f"unknown patch family {family!r}")
