"""Adaptive Gauss-Legendre rules and Richardson extrapolation.

Cells are refined when a rule on the cell and the same rule on its children
disagree by more than the cell tolerance. Reductions are ordered (cells are
summed in a fixed traversal order) so results are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

CELL_TOL = 1e-8
ORDER = 16
MAX_DEPTH = 14


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def fixed_gl(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, n: int = ORDER) -> np.ndarray:
    """Gauss-Legendre rule on [a, b]; ``f`` maps nodes (n,) to values (..., n)."""
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    vals = np.asarray(f(0.5 * (a + b) + half * x))
    return half * (vals @ w)


@dataclass(frozen=True)
class QuadEstimate:
    value: np.ndarray | float
    error: float
    cells: int
    converged: bool


def adaptive_gl(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = CELL_TOL,
    order: int = ORDER,
    max_depth: int = MAX_DEPTH,
    breakpoints: Sequence[float] = (),
) -> QuadEstimate:
    """Adaptive 1-D quadrature of a (possibly vector-valued) integrand."""
    edges = [a] + sorted(p for p in breakpoints if a < p < b) + [b]
    total = 0.0
    err = 0.0
    cells = 0
    ok = True
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e, c, good = _adapt1(f, lo, hi, fixed_gl(f, lo, hi, order), tol, order, max_depth)
        total = total + v
        err += e
        cells += c
        ok &= good
    # cells stuck at max depth are acceptable if the summed error still meets tol
    return QuadEstimate(total, err, cells, ok or err <= tol)


def _adapt1(f, a, b, whole, tol, order, depth):
    m = 0.5 * (a + b)
    left = fixed_gl(f, a, m, order)
    right = fixed_gl(f, m, b, order)
    diff = float(np.max(np.abs(left + right - whole)))
    if diff <= tol or depth == 0:
        return left + right, diff, 1, diff <= tol
    vl, el, cl, gl = _adapt1(f, a, m, left, 0.5 * tol, order, depth - 1)
    vr, er, cr, gr = _adapt1(f, m, b, right, 0.5 * tol, order, depth - 1)
    return vl + vr, el + er, cl + cr, gl and gr


def _tensor_rule(f, ta, tb, sa, sb, order):
    x, w = gauss_legendre(order)
    ht, hs = 0.5 * (tb - ta), 0.5 * (sb - sa)
    t = 0.5 * (ta + tb) + ht * x
    s = 0.5 * (sa + sb) + hs * x
    T, S = np.meshgrid(t, s, indexing="ij")
    return ht * hs * float(w @ np.asarray(f(T, S)) @ w)


def adaptive_gl_2d(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    box: tuple[float, float, float, float],
    tol: float = CELL_TOL,
    order: int = ORDER,
    max_depth: int = 10,
    initial: int = 1,
) -> QuadEstimate:
    """Adaptive tensor-product Gauss-Legendre over ``(t0, t1, s0, s1)``.

    The box is first split into ``initial x initial`` cells. A cell is
    accepted when its rule agrees with the sum over its four children to
    within ``tol`` (absolute).
    """
    t0, t1, s0, s1 = box
    tg = np.linspace(t0, t1, initial + 1)
    sg = np.linspace(s0, s1, initial + 1)
    total, err, cells, ok = 0.0, 0.0, 0, True
    for i in range(initial):
        for j in range(initial):
            cell = (tg[i], tg[i + 1], sg[j], sg[j + 1])
            v, e, c, good = _adapt2(f, cell, _tensor_rule(f, *cell, order), tol, order, max_depth)
            total += v
            err += e
            cells += c
            ok &= good
    return QuadEstimate(total, err, cells, ok or err <= tol)


def _adapt2(f, cell, whole, tol, order, depth):
    ta, tb, sa, sb = cell
    tm, sm = 0.5 * (ta + tb), 0.5 * (sa + sb)
    kids = [(ta, tm, sa, sm), (ta, tm, sm, sb), (tm, tb, sa, sm), (tm, tb, sm, sb)]
    parts = [_tensor_rule(f, *k, order) for k in kids]
    diff = abs(sum(parts) - whole)
    if diff <= tol or depth == 0:
        return sum(parts), diff, 1, diff <= tol
    total, err, cells, ok = 0.0, 0.0, 0, True
    for k, p in zip(kids, parts):
        v, e, c, good = _adapt2(f, k, p, 0.25 * tol, order, depth - 1)
        total += v
        err += e
        cells += c
        ok &= good
    return total, err, cells, ok


@dataclass(frozen=True)
class Extrapolation:
    value: float
    error: float
    converged: bool
    table: tuple[tuple[float, ...], ...]


def richardson(
    hs: Sequence[float], values: Sequence[float], powers: Sequence[int], ratio: float = 2.0, noise: float = 1e-10
) -> Extrapolation:
    """Eliminate error terms ``h^p`` for ``p`` in ``powers`` from a halving sequence.

    ``hs`` must shrink by ``ratio`` at each step. Column ``j`` of the table
    removes ``powers[j]``; the error estimate is the gap between the last two
    entries of the deepest column (or the final value change when only one
    column is available). Convergence means the successive differences in
    the first column shrink (or are already below ``noise``, relative).
    """
    hs = list(map(float, hs))
    vals = np.asarray(values, float)
    if len(hs) != len(vals) or len(vals) < 2:
        raise ValueError("need at least two matching (h, value) pairs")
    for h0, h1 in zip(hs[:-1], hs[1:]):
        if not math.isclose(h0 / h1, ratio, rel_tol=1e-9):
            raise ValueError("exclusion widths must form a geometric sequence")
    table = [tuple(vals)]
    col = vals
    for p in powers[: len(vals) - 1]:
        f = ratio**p
        col = (f * col[1:] - col[:-1]) / (f - 1.0)
        table.append(tuple(col))
    best = col[-1]
    prev = table[-2]
    error = abs(best - prev[-1]) if len(col) == 1 else abs(col[-1] - col[-2])
    diffs = np.abs(np.diff(vals))
    # changes at rounding level carry no trend information
    floor = noise * (1.0 + float(np.max(np.abs(vals))))
    settling = len(diffs) < 2 or bool(np.all((diffs[1:] <= diffs[:-1] * 1.01) | (diffs[1:] <= floor)))
    converged = bool(np.all(np.isfinite(vals))) and settling
    return Extrapolation(float(best), float(error), converged, tuple(table))
