"""Finite sums of chiral waves and their exact partial derivatives.

Every field in this package is a finite sum of terms

    Re( z * exp(i k (tau + s sigma)) )

with integer harmonic ``k >= 1``, chirality sign ``s`` (-1 for right movers,
which depend on ``tau - sigma``; +1 for left movers) and complex weight ``z``.
A derivative ``d^a/dtau^a d^b/dsigma^b`` multiplies ``z`` by
``(i k)^(a+b) s^b``, so all derivatives are closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RIGHT = -1
LEFT = 1

# (i)^n for n mod 4, kept exact so that d2/dtau2 and d2/dsigma2 agree bitwise.
_I_POWERS = (1.0 + 0.0j, 0.0 + 1.0j, -1.0 + 0.0j, 0.0 - 1.0j)


@dataclass(frozen=True)
class ChiralSeries:
    """Vector-valued chiral wave sum.

    ``row[j]`` selects which output component term ``j`` contributes to, so a
    single series can hold every transverse direction at once.
    """

    harmonic: np.ndarray
    sign: np.ndarray
    weight: np.ndarray
    row: np.ndarray
    n_rows: int

    @classmethod
    def empty(cls, n_rows: int) -> "ChiralSeries":
        return cls(
            np.zeros(0, dtype=int),
            np.zeros(0, dtype=int),
            np.zeros(0, dtype=complex),
            np.zeros(0, dtype=int),
            n_rows,
        )

    @property
    def n_terms(self) -> int:
        return int(self.harmonic.size)

    def max_harmonic(self) -> int:
        return int(self.harmonic.max()) if self.n_terms else 0

    def coefficients(self, n_tau: int, n_sigma: int) -> np.ndarray:
        k = self.harmonic.astype(float)
        factor = _I_POWERS[(n_tau + n_sigma) % 4] * k ** (n_tau + n_sigma)
        if n_sigma % 2:
            factor = factor * self.sign
        return self.weight * factor

    def evaluate(self, tau, sigma, n_tau: int = 0, n_sigma: int = 0) -> np.ndarray:
        """Return shape ``(n_rows, *broadcast(tau, sigma).shape)``."""
        return self.evaluate_many(tau, sigma, [(n_tau, n_sigma)])[0]

    def evaluate_many(self, tau, sigma, orders) -> list[np.ndarray]:
        """Evaluate several derivative orders sharing one set of exponentials."""
        tau, sigma = np.broadcast_arrays(np.asarray(tau, float), np.asarray(sigma, float))
        shape = tau.shape
        outs = [np.zeros((self.n_rows,) + shape) for _ in orders]
        if not self.n_terms:
            return outs
        phase = self.harmonic[:, None] * (tau.reshape(1, -1) + self.sign[:, None] * sigma.reshape(1, -1))
        wave = np.exp(1j * phase)
        for out, (n_tau, n_sigma) in zip(outs, orders):
            terms = (self.coefficients(n_tau, n_sigma)[:, None] * wave).real
            flat = out.reshape(self.n_rows, -1)
            for j in range(self.n_terms):
                flat[self.row[j]] += terms[j]
        return outs

    def combine_rows(self, weights: np.ndarray) -> "ChiralSeries":
        """Collapse rows into one scalar series: sum_I weights[I] * row_I."""
        weights = np.asarray(weights, float)
        keep = weights[self.row] != 0.0
        return ChiralSeries(
            self.harmonic[keep],
            self.sign[keep],
            self.weight[keep] * weights[self.row[keep]],
            np.zeros(int(keep.sum()), dtype=int),
            1,
        )
