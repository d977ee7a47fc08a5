"""Worldsheet energy and its topologically discretized spectrum."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import quadrature as quad
from .config import TWO_PI, StringConfiguration, partial_derivative
from .errors import DegenerateSpectrumError
from .spectra import Branch


def zero_mode_energy(cfg: StringConfiguration) -> float:
    return float(sum(v * v for _, v in cfg.zero_modes))


def hamiltonian(cfg: StringConfiguration) -> float:
    """H = sum alpha_0^2 + sum w r^2 over every mode, either chirality."""
    return zero_mode_energy(cfg) + sum(m.omega * m.amplitude**2 for m in cfg.modes)


def hamiltonian_density_quadrature(cfg: StringConfiguration, tau: float = 0.0) -> float:
    """(1/4 pi a') * integral over sigma of (dX/dtau)^2 + (dX/dsigma)^2.

    Composite Gauss-Legendre, 64 nodes per panel and one panel per unit of
    the highest harmonic; exact for the trigonometric integrand up to
    rounding.
    """
    panels = max(cfg.max_harmonic(), 1) * 2
    x, w = quad.gauss_legendre(64)
    edges = np.linspace(0.0, TWO_PI, panels + 1)
    half = 0.5 * np.diff(edges)
    sig = (0.5 * (edges[:-1] + edges[1:]))[:, None] + half[:, None] * x
    dt = partial_derivative(cfg, tau, sig, 1, 0)
    ds = partial_derivative(cfg, tau, sig, 0, 1)
    dens = np.sum(dt * dt + ds * ds, axis=0)
    return float(np.sum(half * (dens @ w))) / (4.0 * math.pi * cfg.alpha_prime)


def _w_kl(w_k: float, w_l: float) -> float:
    return 4.0 / math.pi * w_k * w_l


def hamiltonian_discrete(w_k: float, w_l: float, r_k: float, H0: float, n: int, branch: Branch | str) -> float:
    """H_n with r~_l eliminated through the two-parallel spectrum.

    ``smaller`` (sqrt(w_k) r_k above sqrt(w_l) r~_l):
        H0 + w_k r^2 [1 + ((1 - E)/(1 + E))^2]
    ``greater``:
        H0 + w_k r^2 [1 + ((1 + E)/(1 - E))^2]
    with E = exp(n / (2 w_kl)).
    """
    if n == 0:
        raise DegenerateSpectrumError("n = 0: the discrete Hamiltonian is undefined")
    if not r_k > 0:
        raise ValueError("r_k must be positive")
    branch = Branch(branch)
    em1 = math.expm1(n / (2.0 * _w_kl(w_k, w_l)))
    q = em1 / (em1 + 2.0)  # (E - 1)/(E + 1)
    if branch is Branch.GREATER:
        q = 1.0 / q
    return H0 + w_k * r_k**2 * (1.0 + q * q)


def hamiltonian_intermediate(w_k: float, w_l: float, r_k: float, r_tilde_l: float, H0: float, n: int) -> float:
    """H with both amplitudes kept, using the spectrum to trade the r~^2 term.

    H = H0 - 2 sqrt(w_k w_l) r r~ (1 + E^2)/(1 - E^2). Holds on both
    branches; the energy tests use it as a consistency identity.
    """
    if n == 0:
        raise DegenerateSpectrumError("n = 0: the intermediate form is undefined")
    e2 = math.exp(n / _w_kl(w_k, w_l))
    return H0 - 2.0 * math.sqrt(w_k * w_l) * r_k * r_tilde_l * (1.0 + e2) / (1.0 - e2)


def asymptote(w_k: float, r_k: float, H0: float) -> float:
    return H0 + 2.0 * w_k * r_k**2


@dataclass(frozen=True)
class EnergySpectrum:
    H0: float
    entries: tuple[tuple[int, float], ...]
    H_inf: float
    branch: Branch
    w_k: float = 1.0
    w_l: float = 1.0
    r_k: float = 1.0
    undefined: tuple[int, ...] = ()

    def csv_rows(self) -> list[str]:
        rows = []
        values = dict(self.entries)
        for n in sorted(set(values) | set(self.undefined)):
            if n in values:
                rows.append(f"{n},{values[n]:.17g},{self.branch.value}")
            else:
                rows.append(f"{n},undefined (degenerate spectrum),{self.branch.value}")
        return rows

    def header(self) -> list[str]:
        return [
            "# H_n from the two-parallel spectrum (dimensionless units, H0 = sum alpha_0^2)",
            f"# H0={self.H0:.17g}",
            f"# H_inf={self.H_inf:.17g}",
            f"# w_k={self.w_k:g}",
            f"# w_l={self.w_l:g}",
            f"# r_k={self.r_k:.17g}",
        ]

    def to_csv(self, header: bool = True) -> str:
        lines = (self.header() if header else []) + ["n,H_n,branch"] + self.csv_rows()
        return "\n".join(lines) + "\n"


def energy_table(
    w_k: float, w_l: float, r_k: float, H0: float, n_range: Iterable[int], branch: Branch | str = Branch.GREATER
) -> EnergySpectrum:
    branch = Branch(branch)
    entries = []
    undefined = []
    for n in sorted(set(int(n) for n in n_range)):
        if n == 0:
            undefined.append(0)
            continue
        entries.append((n, hamiltonian_discrete(w_k, w_l, r_k, H0, n, branch)))
    return EnergySpectrum(H0, tuple(entries), asymptote(w_k, r_k, H0), branch, w_k, w_l, r_k, tuple(undefined))
