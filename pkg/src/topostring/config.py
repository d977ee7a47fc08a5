"""String configurations: parsing, embedding, and constraint checks.

A configuration is a closed bosonic string in light-cone gauge on flat
space. Only the transverse fields ``X^I`` (``I = 2 .. D-1``) are dynamical:

    X^I = x0^I + sqrt(2 a') a0^I tau
          + sqrt(2 a') sum_modes (r / sqrt(k)) cos k(tau -/+ sigma + phase)

with the minus sign for right movers and the plus sign for left movers.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np
import yaml

from .errors import ConfigurationError, InvariantError, SchemaError
from .trig import LEFT, RIGHT, ChiralSeries

DEFAULT_ALPHA_PRIME = 0.5
DEFAULT_P_PLUS = 1.0
LEVEL_MATCH_TOL = 1e-8
TWO_PI = 2.0 * math.pi


class Chirality(str, enum.Enum):
    RIGHT = "right"
    LEFT = "left"

    @property
    def sign(self) -> int:
        """Coefficient of sigma in the wave argument."""
        return RIGHT if self is Chirality.RIGHT else LEFT


@dataclass(frozen=True)
class ModeSpec:
    direction: int
    harmonic: int
    amplitude: float
    phase: float = 0.0
    chirality: Chirality = Chirality.RIGHT

    def __post_init__(self):
        if isinstance(self.chirality, str) and not isinstance(self.chirality, Chirality):
            object.__setattr__(self, "chirality", Chirality(self.chirality.lower()))
        if int(self.harmonic) != self.harmonic or self.harmonic < 1:
            raise InvariantError(f"harmonic must be a positive integer, got {self.harmonic!r}")
        if not math.isfinite(self.amplitude) or self.amplitude < 0:
            raise InvariantError(f"amplitude must be finite and >= 0, got {self.amplitude!r}")
        if not math.isfinite(self.phase):
            raise InvariantError(f"phase must be finite, got {self.phase!r}")

    @property
    def omega(self) -> float:
        return float(self.harmonic)

    @property
    def key(self) -> tuple[int, int, Chirality]:
        return (self.direction, self.harmonic, self.chirality)


@dataclass(frozen=True)
class StringConfiguration:
    """Closed string (beta = 1, sigma in [0, 2 pi]) on a Minkowski background."""

    dimension: int
    alpha_prime: float = DEFAULT_ALPHA_PRIME
    p_plus: float = DEFAULT_P_PLUS
    zero_modes: tuple[tuple[int, float], ...] = ()
    centers: tuple[tuple[int, float], ...] = ()
    modes: tuple[ModeSpec, ...] = ()
    boundary: str = field(default="closed")

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "zero_modes", _as_table(self.zero_modes))
        object.__setattr__(self, "centers", _as_table(self.centers))
        if self.boundary != "closed":
            raise InvariantError("only closed strings are supported", field="boundary")
        if int(self.dimension) != self.dimension or self.dimension < 4:
            raise InvariantError(f"dimension must be an integer >= 4, got {self.dimension!r}", field="dimension")
        if not (self.alpha_prime > 0 and math.isfinite(self.alpha_prime)):
            raise InvariantError("alpha_prime must be positive", field="alpha_prime")
        if not (self.p_plus > 0 and math.isfinite(self.p_plus)):
            raise InvariantError("p_plus must be positive", field="p_plus")
        lo, hi = 2, self.dimension - 1
        for name, table in (("zero_modes", self.zero_modes), ("centers", self.centers)):
            seen = set()
            for i, (direction, value) in enumerate(table):
                if not lo <= direction <= hi:
                    raise InvariantError(
                        f"direction {direction} outside transverse range {lo}..{hi}",
                        field=f"{name}[{i}].direction",
                    )
                if direction in seen:
                    raise InvariantError(f"direction {direction} listed twice", field=f"{name}[{i}]")
                if not math.isfinite(value):
                    raise InvariantError("value must be finite", field=f"{name}[{i}].value")
                seen.add(direction)
        keys = set()
        for i, mode in enumerate(self.modes):
            if not lo <= mode.direction <= hi:
                raise InvariantError(
                    f"direction {mode.direction} outside transverse range {lo}..{hi}",
                    field=f"modes[{i}].direction",
                )
            if mode.key in keys:
                raise InvariantError(
                    f"duplicate mode (direction={mode.direction}, harmonic={mode.harmonic}, "
                    f"chirality={mode.chirality.value})",
                    field=f"modes[{i}]",
                )
            keys.add(mode.key)

    @property
    def transverse_directions(self) -> range:
        return range(2, self.dimension)

    @property
    def n_transverse(self) -> int:
        return self.dimension - 2

    @property
    def prefactor(self) -> float:
        """sqrt(2 alpha'), the common mode normalisation."""
        return math.sqrt(2.0 * self.alpha_prime)

    def zero_mode(self, direction: int) -> float:
        return dict(self.zero_modes).get(direction, 0.0)

    def center(self, direction: int) -> float:
        return dict(self.centers).get(direction, 0.0)

    def max_harmonic(self) -> int:
        return max((m.harmonic for m in self.modes), default=0)

    def mode_power(self) -> float:
        """sum over modes of omega * r^2."""
        return sum(m.omega * m.amplitude**2 for m in self.modes)

    @cached_property
    def series(self) -> ChiralSeries:
        """Oscillator part of X^I, rows indexed by ``I - 2``."""
        if not self.modes:
            return ChiralSeries.empty(self.n_transverse)
        k = np.array([m.harmonic for m in self.modes], dtype=int)
        sign = np.array([m.chirality.sign for m in self.modes], dtype=int)
        amp = np.array([m.amplitude for m in self.modes], dtype=float)
        phase = np.array([m.phase for m in self.modes], dtype=float)
        weight = self.prefactor * amp / np.sqrt(k) * np.exp(1j * k * phase)
        row = np.array([m.direction - 2 for m in self.modes], dtype=int)
        return ChiralSeries(k, sign, weight, row, self.n_transverse)

    @cached_property
    def _linear(self) -> tuple[np.ndarray, np.ndarray]:
        x0 = np.array([self.center(i) for i in self.transverse_directions])
        v0 = np.array([self.prefactor * self.zero_mode(i) for i in self.transverse_directions])
        return x0, v0

    def with_modes(self, modes: Sequence[ModeSpec]) -> "StringConfiguration":
        return StringConfiguration(
            self.dimension, self.alpha_prime, self.p_plus, self.zero_modes, self.centers, tuple(modes)
        )


def _as_table(table) -> tuple[tuple[int, float], ...]:
    if isinstance(table, dict):
        table = table.items()
    return tuple(sorted((int(d), float(v)) for d, v in table))


# --------------------------------------------------------------------------
# Parsing

_TOP_KEYS = {"dimension", "alpha_prime", "p_plus", "zero_modes", "centers", "modes"}
_MODE_KEYS = {"direction", "harmonic", "amplitude", "phase", "chirality"}


def parse_configuration(text: str, *, format: str = "auto") -> StringConfiguration:
    """Parse a JSON or YAML configuration document.

    YAML is a superset of JSON, so ``auto`` tries JSON first (for its
    precise error positions) and falls back to YAML.
    """
    data = _load_document(text, format)
    if not isinstance(data, dict):
        raise SchemaError("top level must be a mapping")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise SchemaError(f"unknown keys {sorted(unknown)}", field=sorted(unknown)[0])
    if "dimension" not in data:
        raise SchemaError("missing required field", field="dimension")
    dimension = _integer(data["dimension"], "dimension")
    alpha_prime = _real(data.get("alpha_prime", DEFAULT_ALPHA_PRIME), "alpha_prime")
    p_plus = _real(data.get("p_plus", DEFAULT_P_PLUS), "p_plus")
    zero_modes = _direction_table(data.get("zero_modes", []), "zero_modes")
    centers = _direction_table(data.get("centers", []), "centers")
    raw_modes = data.get("modes", [])
    if not isinstance(raw_modes, list):
        raise SchemaError("must be a list", field="modes")
    modes = []
    for i, entry in enumerate(raw_modes):
        where = f"modes[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError("must be a mapping", field=where)
        unknown = set(entry) - _MODE_KEYS
        if unknown:
            raise SchemaError(f"unknown keys {sorted(unknown)}", field=where)
        for key in ("direction", "harmonic", "amplitude", "chirality"):
            if key not in entry:
                raise SchemaError("missing required field", field=f"{where}.{key}")
        chirality = entry["chirality"]
        if not isinstance(chirality, str) or chirality.lower() not in ("right", "left"):
            raise SchemaError("must be 'right' or 'left'", field=f"{where}.chirality")
        try:
            modes.append(
                ModeSpec(
                    direction=_integer(entry["direction"], f"{where}.direction"),
                    harmonic=_integer(entry["harmonic"], f"{where}.harmonic"),
                    amplitude=_real(entry["amplitude"], f"{where}.amplitude"),
                    phase=_real(entry.get("phase", 0.0), f"{where}.phase"),
                    chirality=Chirality(chirality.lower()),
                )
            )
        except InvariantError as exc:
            raise InvariantError(str(exc), field=where) from None
    return StringConfiguration(
        dimension=dimension,
        alpha_prime=alpha_prime,
        p_plus=p_plus,
        zero_modes=zero_modes,
        centers=centers,
        modes=tuple(modes),
    )


def load_configuration(path: str | Path) -> StringConfiguration:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from None
    fmt = "yaml" if path.suffix.lower() in (".yaml", ".yml") else "auto"
    return parse_configuration(text, format=fmt)


def _load_document(text: str, format: str) -> Any:
    if format in ("auto", "json"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            if format == "json" or text.lstrip().startswith(("{", "[")):
                raise SchemaError(f"invalid JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from None
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(exc, "problem", None) or str(exc)
        raise SchemaError(f"invalid YAML: {problem}", line=line) from None


def _integer(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"expected an integer, got {type(value).__name__}", field=where)
    return value


def _real(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"expected a real number, got {type(value).__name__}", field=where)
    return float(value)


def _direction_table(entries, where: str) -> tuple[tuple[int, float], ...]:
    if not isinstance(entries, list):
        raise SchemaError("must be a list of {direction, value}", field=where)
    table = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or set(entry) != {"direction", "value"}:
            raise SchemaError("entries need exactly 'direction' and 'value'", field=f"{where}[{i}]")
        table.append(
            (_integer(entry["direction"], f"{where}[{i}].direction"), _real(entry["value"], f"{where}[{i}].value"))
        )
    return tuple(table)


def configuration_to_dict(cfg: StringConfiguration) -> dict:
    return {
        "dimension": cfg.dimension,
        "alpha_prime": cfg.alpha_prime,
        "p_plus": cfg.p_plus,
        "zero_modes": [{"direction": d, "value": v} for d, v in cfg.zero_modes],
        "centers": [{"direction": d, "value": v} for d, v in cfg.centers],
        "modes": [
            {
                "direction": m.direction,
                "harmonic": m.harmonic,
                "amplitude": m.amplitude,
                "phase": m.phase,
                "chirality": m.chirality.value,
            }
            for m in cfg.modes
        ],
    }


# --------------------------------------------------------------------------
# Embedding


class EmbeddingDerivatives(NamedTuple):
    d_tau: np.ndarray
    d_sigma: np.ndarray
    d_tau2: np.ndarray
    d_sigma2: np.ndarray
    d_tau_sigma: np.ndarray


def partial_derivative(cfg: StringConfiguration, tau, sigma, n_tau: int = 0, n_sigma: int = 0) -> np.ndarray:
    """d^(n_tau + n_sigma) X^I / dtau^n_tau dsigma^n_sigma for every transverse I.

    The result has shape ``(D - 2, *broadcast_shape)``.
    """
    out = cfg.series.evaluate(tau, sigma, n_tau, n_sigma)
    if n_sigma == 0 and n_tau <= 1:
        x0, v0 = cfg._linear
        grid = out.shape[1:]
        x0 = x0.reshape((-1,) + (1,) * len(grid))
        v0 = v0.reshape((-1,) + (1,) * len(grid))
        if n_tau == 0:
            out = out + x0 + v0 * np.broadcast_to(np.asarray(tau, float), grid)
        else:
            out = out + v0
    return out


def embedding(cfg: StringConfiguration, tau, sigma) -> np.ndarray:
    return partial_derivative(cfg, tau, sigma)


def embedding_derivatives(cfg: StringConfiguration, tau, sigma) -> EmbeddingDerivatives:
    return EmbeddingDerivatives(
        partial_derivative(cfg, tau, sigma, 1, 0),
        partial_derivative(cfg, tau, sigma, 0, 1),
        partial_derivative(cfg, tau, sigma, 2, 0),
        partial_derivative(cfg, tau, sigma, 0, 2),
        partial_derivative(cfg, tau, sigma, 1, 1),
    )


Evaluator = Callable[..., np.ndarray]


def wave_residual(cfg: StringConfiguration, tau, sigma, evaluator: Evaluator = partial_derivative) -> np.ndarray:
    """(-d2/dtau2 + d2/dsigma2) X^I; ``evaluator`` exists for negative controls."""
    return -evaluator(cfg, tau, sigma, 2, 0) + evaluator(cfg, tau, sigma, 0, 2)


def x_minus_derivatives(cfg: StringConfiguration, tau, sigma) -> tuple[np.ndarray, np.ndarray]:
    """Derivatives of X^- fixed by the light-cone constraints."""
    dt = partial_derivative(cfg, tau, sigma, 1, 0)
    ds = partial_derivative(cfg, tau, sigma, 0, 1)
    ap = cfg.alpha_prime * cfg.p_plus
    d_tau = (np.sum(dt * dt, axis=0) + np.sum(ds * ds, axis=0)) / (2.0 * ap)
    d_sigma = np.sum(dt * ds, axis=0) / ap
    return d_tau, d_sigma


def level_match_residual(cfg: StringConfiguration, tau: float = 0.0) -> float:
    """|closed-loop integral of dX^-/dsigma| over one period of sigma.

    Zero iff X^- is periodic, i.e. left and right movers carry equal power.
    """
    if not cfg.modes:
        return 0.0
    panels = max(1, cfg.max_harmonic())
    x, w = np.polynomial.legendre.leggauss(64)
    edges = np.linspace(0.0, TWO_PI, panels + 1)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        s = 0.5 * (a + b) + 0.5 * (b - a) * x
        _, d_sigma = x_minus_derivatives(cfg, tau, s)
        total += 0.5 * (b - a) * float(np.dot(w, d_sigma))
    return abs(total)


@dataclass(frozen=True)
class ConstraintReport:
    wave_residual_max: float
    level_match_residual: float
    samples: tuple[tuple[float, float, tuple[float, ...]], ...]
    level_matched: bool
    level_match_tolerance: float = LEVEL_MATCH_TOL

    @property
    def warnings(self) -> tuple[str, ...]:
        if self.level_matched:
            return ()
        return (
            f"level matching violated: |loop integral of dX-/dsigma| = {self.level_match_residual:.6g} "
            f"> {self.level_match_tolerance:g} (X^- not periodic)",
        )


def constraint_report(cfg: StringConfiguration, n_points: int = 50, seed: int = 0) -> ConstraintReport:
    """Sweep the wave residual at random points and check level matching.

    The wave residual is reported relative to the largest second derivative.
    """
    rng = np.random.default_rng(seed)
    tau = rng.uniform(0.0, TWO_PI, n_points)
    sigma = rng.uniform(0.0, TWO_PI, n_points)
    res = wave_residual(cfg, tau, sigma)
    scale = max(
        float(np.max(np.abs(partial_derivative(cfg, tau, sigma, 2, 0)), initial=0.0)),
        float(np.max(np.abs(partial_derivative(cfg, tau, sigma, 0, 2)), initial=0.0)),
    )
    worst = float(np.max(np.abs(res), initial=0.0))
    relative = worst / scale if scale > 0 else worst
    samples = tuple((float(t), float(s), tuple(float(v) for v in res[:, i])) for i, (t, s) in enumerate(zip(tau, sigma)))
    lm = max(level_match_residual(cfg, t) for t in (0.0, 1.0, 2.5))
    return ConstraintReport(relative, lm, samples, lm <= LEVEL_MATCH_TOL)
