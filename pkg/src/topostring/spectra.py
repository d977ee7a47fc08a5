"""Closed-form topological spectra and their inversion.

Each family relates mode amplitudes to an integer n through

    n = (4/pi) * prod(w_k w_l) * ln( P / M )

where P and M are sums over transverse directions of the squared sum and
squared difference of the right and left amplitude combinations
``sqrt(w) r``. All families are evaluated by one routine so that the
reductions between them hold bit for bit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .config import Chirality, StringConfiguration
from .errors import DegenerateSpectrumError


class Family(str, enum.Enum):
    TWO_PARALLEL = "two-parallel"
    THREE_MODES = "three-modes"
    FOUR_MODES = "four-modes"
    GENERAL = "general"


class Branch(str, enum.Enum):
    """Which root of the two-parallel relation: sqrt(w_l) r~ above or below sqrt(w_k) r."""

    GREATER = "greater"
    SMALLER = "smaller"


@dataclass(frozen=True)
class SpectrumRelation:
    family: Family
    harmonics: tuple[int, ...]
    amplitudes: tuple[float, ...]
    lhs_value: float
    conjectured: bool = False

    def __post_init__(self):
        if not math.isfinite(self.lhs_value):
            raise DegenerateSpectrumError(f"{self.family.value} spectrum is not finite for amplitudes {self.amplitudes}")

    @property
    def nearest_n(self) -> int:
        return int(round(self.lhs_value))


def _core(prefactor: float, right: Sequence[float], left: Sequence[float]) -> float:
    """(4/pi) * prefactor * ln(sum (a+b)^2 / sum (a-b)^2), direction by direction."""
    plus = 0.0
    minus = 0.0
    for a, b in zip(right, left):
        plus += (a + b) ** 2
        minus += (a - b) ** 2
    if minus == 0.0:
        raise DegenerateSpectrumError("right and left amplitude combinations coincide; the logarithm diverges")
    if plus == 0.0:
        raise DegenerateSpectrumError("all amplitude combinations vanish")
    return 4.0 / math.pi * prefactor * math.log(plus / minus)


def _check_harmonic(w: float, name: str) -> None:
    if not w > 0:
        raise ValueError(f"{name} must be positive, got {w}")


def spectrum_two_parallel(w_k: float, w_l: float, r_k: float, r_tilde_l: float) -> float:
    """Right mode k and left mode l in the same direction.

    Amplitudes may carry a sign; a negative amplitude is the same mode with
    its phase shifted by pi/w.
    """
    _check_harmonic(w_k, "w_k")
    _check_harmonic(w_l, "w_l")
    return _core(w_k * w_l, [math.sqrt(w_k) * r_k], [math.sqrt(w_l) * r_tilde_l])


def spectrum_three_modes(w_k: float, w_l: float, r_k1: float, r_tilde_l1: float, r_k2: float) -> float:
    """Two-parallel pair in J1 plus a second right mode k in J2."""
    _check_harmonic(w_k, "w_k")
    _check_harmonic(w_l, "w_l")
    sk, sl = math.sqrt(w_k), math.sqrt(w_l)
    return _core(w_k * w_l, [sk * r_k1, sk * r_k2], [sl * r_tilde_l1, 0.0])


def spectrum_four_modes(
    w_k: float, w_l: float, r_k1: float, r_tilde_l1: float, r_k2: float, r_tilde_l2: float
) -> float:
    """Right mode k and left mode l in each of two directions."""
    _check_harmonic(w_k, "w_k")
    _check_harmonic(w_l, "w_l")
    sk, sl = math.sqrt(w_k), math.sqrt(w_l)
    return _core(w_k * w_l, [sk * r_k1, sk * r_k2], [sl * r_tilde_l1, sl * r_tilde_l2])


def general_prefactor(right_harmonics: Iterable[int], left_harmonics: Iterable[int]) -> float:
    """Product of w_k w_l over every (distinct right, distinct left) harmonic pair."""
    lefts = sorted(set(left_harmonics))
    out = 1.0
    for k in sorted(set(right_harmonics)):
        for l in lefts:
            out *= k * l
    return out


def spectrum_general(cfg: StringConfiguration) -> SpectrumRelation:
    """Inferred spectrum for an arbitrary mode set (tagged conjectured).

    Sums run over the modes present in each transverse direction; with no
    left or no right modes the log argument is exactly one and the value 0.
    """
    if not cfg.modes:
        raise DegenerateSpectrumError("the general spectrum needs at least one mode")
    right = {I: 0.0 for I in cfg.transverse_directions}
    left = dict(right)
    for m in cfg.modes:
        term = math.sqrt(m.omega) * m.amplitude
        if m.chirality is Chirality.RIGHT:
            right[m.direction] += term
        else:
            left[m.direction] += term
    used = sorted({m.direction for m in cfg.modes})
    pref = general_prefactor(
        (m.harmonic for m in cfg.modes if m.chirality is Chirality.RIGHT),
        (m.harmonic for m in cfg.modes if m.chirality is Chirality.LEFT),
    )
    value = _core(pref, [right[I] for I in used], [left[I] for I in used])
    return SpectrumRelation(
        Family.GENERAL,
        tuple(m.harmonic for m in cfg.modes),
        tuple(m.amplitude for m in cfg.modes),
        value,
        conjectured=True,
    )


def invert_two_parallel(w_k: float, w_l: float, r_k: float, n: float, branch: Branch | str = Branch.GREATER) -> float:
    """Amplitude r~_l that puts the two-parallel relation at ``n``.

    With E = exp(n / (2 w_kl)), w_kl = (4/pi) w_k w_l and A = sqrt(w_k) r_k,
    the roots are B = A (E+1)/(E-1) and B = A (E-1)/(E+1); r~ = B / sqrt(w_l).
    Negative n yields a negative amplitude.
    """
    _check_harmonic(w_k, "w_k")
    _check_harmonic(w_l, "w_l")
    if not r_k > 0:
        raise ValueError("r_k must be positive")
    if n == 0:
        raise DegenerateSpectrumError("n = 0 has no finite two-parallel solution")
    branch = Branch(branch)
    w_kl = 4.0 / math.pi * w_k * w_l
    x = n / (2.0 * w_kl)
    a = math.sqrt(w_k) * r_k
    # (E+1)/(E-1) = coth(x/2); expm1 keeps small n accurate
    em1 = math.expm1(x)
    ratio = (em1 + 2.0) / em1
    b = a * ratio if branch is Branch.GREATER else a / ratio
    return b / math.sqrt(w_l)


@dataclass(frozen=True)
class SurfaceRow:
    n: int
    r_k: float
    r_tilde_l: float
    branch: Branch


@dataclass(frozen=True)
class SpectrumSurface:
    w_k: float
    w_l: float
    rows: tuple[SurfaceRow, ...]
    notes: tuple[str, ...] = ()

    def to_csv(self) -> str:
        lines = [
            f"# two-parallel spectrum surface, w_k={self.w_k:g}, w_l={self.w_l:g}",
            *(f"# {note}" for note in self.notes),
            "n,r_k,r_tilde_l,branch",
        ]
        lines += [f"{r.n},{r.r_k:.17g},{r.r_tilde_l:.17g},{r.branch.value}" for r in self.rows]
        return "\n".join(lines) + "\n"


def spectrum_surface(w_k: float, w_l: float, n_set: Iterable[int], r_grid: Iterable[float]) -> SpectrumSurface:
    """Both branch solutions for every (n, r_k) pair."""
    rows = []
    notes = []
    r_grid = list(r_grid)
    for n in n_set:
        if n == 0:
            notes.append("n=0 omitted: degenerate spectrum")
            continue
        for r in r_grid:
            if not r > 0:
                notes.append(f"r_k={r:g} omitted: amplitude must be positive")
                continue
            for br in Branch:
                rows.append(SurfaceRow(int(n), float(r), invert_two_parallel(w_k, w_l, r, n, br), br))
    return SpectrumSurface(w_k, w_l, tuple(rows), tuple(dict.fromkeys(notes)))
