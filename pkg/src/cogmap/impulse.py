"""Impulse propagation, system weights, edge efficiency and forecasting.

The system weight of indicator i is the total signal that arrives anywhere
in the graph, summed over every step k >= 1, after a unit impulse at i:

    w_i = sum_{k>=1} sum_j (e_i A^k)_j = [A (I - A)^{-1} 1]_i

The initial impulse itself is not counted.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .data import PathOrStream, _open
from .errors import (
    DimensionError,
    NotContractiveError,
    ScenarioError,
    SolveError,
    UnknownEdgeError,
)
from .model import CognitiveModel, SpectralReport, contraction_check

RESIDUAL_TOLERANCE = 1e-9
SERIES_TOLERANCE = 1e-12
DEFAULT_HORIZON = 20


@dataclass(frozen=True, eq=False)
class ImpulseTrajectory:
    """States s_0..s_T. ``steps`` holds s_1..s_T (shape T x n)."""

    indicators: tuple[str, ...]
    initial: np.ndarray
    steps: np.ndarray
    cumulative: np.ndarray

    @property
    def horizon(self) -> int:
        return self.steps.shape[0]

    def states(self) -> np.ndarray:
        """s_0..s_T stacked, shape (T + 1) x n."""
        return np.vstack([self.initial, self.steps])


def _freeze(*arrays):
    for a in arrays:
        a.flags.writeable = False


def _as_impulse(model: CognitiveModel, impulse) -> np.ndarray:
    v = np.asarray(impulse, dtype=float)
    if v.shape != (model.size,):
        raise DimensionError(f"impulse has shape {v.shape}, model has {model.size} indicators")
    return v


def unit_impulse(model: CognitiveModel, name: str, magnitude: float = 1.0) -> np.ndarray:
    v = np.zeros(model.size)
    v[model.index(name)] = magnitude
    return v


def propagate(model: CognitiveModel, impulse, horizon: int) -> ImpulseTrajectory:
    """Push `impulse` through the graph for `horizon` steps (s_{k+1} = s_k A)."""
    if horizon < 1:
        raise DimensionError("horizon must be at least 1")
    s = _as_impulse(model, impulse).copy()
    a = model.adjacency
    steps = np.empty((horizon, model.size))
    for k in range(horizon):
        s = s @ a
        steps[k] = s
    cumulative = steps.sum(axis=0)
    initial = _as_impulse(model, impulse).copy()
    _freeze(initial, steps, cumulative)
    return ImpulseTrajectory(model.indicators, initial, steps, cumulative)


def forecast(model: CognitiveModel, scenario: Sequence[tuple[int, object]], horizon: int) -> ImpulseTrajectory:
    """Propagate a schedule of impulses.

    Each ``(step, vector)`` is added to the state at that step, then the sum
    keeps propagating: ``s_k = s_{k-1} A + u_k``. Steps run from 0 (the
    initial state) to `horizon`. By linearity the result is the sum of the
    individually propagated, time-shifted impulses.
    """
    if horizon < 1:
        raise DimensionError("horizon must be at least 1")
    inject = np.zeros((horizon + 1, model.size))
    for step, vec in scenario:
        if not isinstance(step, (int, np.integer)) or not 0 <= step <= horizon:
            raise ScenarioError(f"scenario step {step!r} is outside 0..{horizon}")
        inject[step] += _as_impulse(model, vec)
    a = model.adjacency
    states = np.empty_like(inject)
    states[0] = inject[0]
    for k in range(1, horizon + 1):
        states[k] = states[k - 1] @ a + inject[k]
    initial = states[0].copy()
    steps = states[1:].copy()
    cumulative = steps.sum(axis=0)
    _freeze(initial, steps, cumulative)
    return ImpulseTrajectory(model.indicators, initial, steps, cumulative)


class WeightMethod(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    TRUNCATED_SERIES = "truncated_series"
    # weights entered from outside (e.g. published values), not computed here
    SUPPLIED = "supplied"


@dataclass(frozen=True, eq=False)
class SystemWeightReport:
    indicators: tuple[str, ...]
    weights: np.ndarray
    ranking: tuple[str, ...]
    method: WeightMethod
    truncation_error_bound: float = 0.0
    residual: float | None = None
    spectral: SpectralReport | None = None
    steps: int | None = None

    def weight(self, name: str) -> float:
        return float(self.weights[self.indicators.index(name)])

    def rank(self, name: str) -> int:
        """1-based rank (1 = largest weight)."""
        return self.ranking.index(name) + 1

    def sign(self, name: str) -> int:
        """+1 / -1 / 0: positive or negative influence on development."""
        return int(np.sign(self.weight(name)))

    def as_dict(self) -> dict[str, float]:
        return {n: float(w) for n, w in zip(self.indicators, self.weights)}


def rank_indicators(indicators: Sequence[str], weights) -> tuple[str, ...]:
    """Names by weight descending, ties broken by name."""
    return tuple(n for n, _ in sorted(zip(indicators, weights), key=lambda p: (-p[1], p[0])))


def report_from_weights(
    indicators: Sequence[str],
    weights,
    method: WeightMethod = WeightMethod.SUPPLIED,
    **extra,
) -> SystemWeightReport:
    names = tuple(indicators)
    w = np.asarray(weights, dtype=float).reshape(len(names))
    if len(set(names)) != len(names):
        raise DimensionError("indicator names must be unique")
    w = w.copy()
    _freeze(w)
    return SystemWeightReport(names, w, rank_indicators(names, w), WeightMethod(method), **extra)


def _require_contraction(model: CognitiveModel, spectral: SpectralReport | None, **check_kw) -> SpectralReport:
    if spectral is None:
        spectral = contraction_check(model, **check_kw)
    if not spectral.is_contraction:
        raise NotContractiveError(
            f"model is not a contraction (spectral radius ~ {spectral.spectral_radius:.6g}); "
            "closed-form weights are undefined, use a finite horizon",
            spectral.spectral_radius,
        )
    return spectral


def _closed_form(a: np.ndarray) -> tuple[np.ndarray, float]:
    n = a.shape[0]
    if n == 0:
        return np.zeros(0), 0.0
    m = np.eye(n) - a
    ones = np.ones(n)
    with np.errstate(all="ignore"):
        lu, piv = lu_factor(m, check_finite=True)
        x = lu_solve((lu, piv), ones)
    residual = float(np.abs(m @ x - ones).max())
    if not np.all(np.isfinite(x)) or residual > RESIDUAL_TOLERANCE:
        raise SolveError(f"(I - A) x = 1 solved with residual {residual:.3g} > {RESIDUAL_TOLERANCE:g}")
    return a @ x, residual


def system_weights(
    model: CognitiveModel,
    method: WeightMethod | str = WeightMethod.CLOSED_FORM,
    horizon: int | None = None,
    spectral: SpectralReport | None = None,
    tolerance: float = 1e-9,
    seed: int = 0,
) -> SystemWeightReport:
    """System weight of every indicator, with ranking.

    ``closed_form`` requires a certified contraction and solves
    ``(I - A) x = 1`` once by LU with partial pivoting. ``truncated_series``
    sums the propagated signal for `horizon` steps (or until the step
    max-norm drops below 1e-12 when no horizon is given) and works for any
    model; its `truncation_error_bound` is infinite when the model is not
    known to contract.
    """
    method = WeightMethod(method)
    if method is WeightMethod.CLOSED_FORM:
        spectral = _require_contraction(model, spectral, tolerance=tolerance, seed=seed)
        w, residual = _closed_form(model.adjacency)
        return report_from_weights(model.indicators, w, method, residual=residual, spectral=spectral)
    if method is WeightMethod.TRUNCATED_SERIES:
        if spectral is None and horizon is None:
            spectral = contraction_check(model, tolerance=tolerance, seed=seed)
        w, bound, steps = truncated_series_weights(model, horizon=horizon, spectral=spectral)
        return report_from_weights(
            model.indicators, w, method, truncation_error_bound=bound, spectral=spectral, steps=steps
        )
    raise ValueError(f"cannot compute weights with method {method.value!r}")


def system_weight(model: CognitiveModel, indicator: str, **kw) -> float:
    model.index(indicator)
    return system_weights(model, **kw).weight(indicator)


def truncated_series_weights(
    model: CognitiveModel,
    horizon: int | None = None,
    tol: float = SERIES_TOLERANCE,
    max_steps: int = 1_000_000,
    spectral: SpectralReport | None = None,
) -> tuple[np.ndarray, float, int]:
    """Sum the impulse series term by term for all unit impulses at once.

    Returns ``(weights, error_bound, steps)``. Without a horizon, summation
    stops at the first step whose max-norm is below `tol`; if the model is
    not known to contract and no horizon is given, `NotContractiveError`.
    """
    a = model.adjacency
    n = a.shape[0]
    if horizon is None and spectral is not None and not spectral.is_contraction:
        raise NotContractiveError("series does not converge; pass an explicit horizon", spectral.spectral_radius)
    limit = horizon if horizon is not None else max_steps
    s = np.eye(n)
    total = np.zeros(n)
    k = 0
    while k < limit:
        s = s @ a
        k += 1
        total += s.sum(axis=1)
        if horizon is None and np.abs(s).max(initial=0.0) < tol:
            break
    else:
        if horizon is None:
            raise NotContractiveError(f"series did not fall below {tol:g} in {max_steps} steps")
    bound = _tail_bound(a, s, spectral)
    return total, bound, k


def _tail_bound(a: np.ndarray, last: np.ndarray, spectral: SpectralReport | None) -> float:
    """Bound on |sum_{k>K} row sums of A^k| from the last computed power."""
    if not last.any():
        return 0.0
    n = a.shape[0]
    norm_inf = float(np.abs(a).sum(axis=1).max())
    if norm_inf < 1:
        # ||A^{K+1} 1 + ...||_inf <= ||A^K||_inf * q / (1 - q) * 1
        return float(np.abs(last).sum(axis=1).max() * norm_inf / (1 - norm_inf))
    if spectral is not None and spectral.is_contraction:
        rho = spectral.spectral_radius
        # asymptotic estimate, not a rigorous bound for non-normal A
        return float(n * np.abs(last).max() * rho / (1 - rho))
    return math.inf


def edge_efficiency(model: CognitiveModel, source: str, target: str, **kw) -> float:
    """Drop in total system weight when edge source -> target is removed."""
    i, j = model.index(source), model.index(target)
    if model.adjacency[i, j] == 0:
        raise UnknownEdgeError(f"no edge {source!r} -> {target!r}")
    base = system_weights(model, **kw).weights.sum()
    reduced = system_weights(model.without_edge(source, target), **kw).weights.sum()
    return float(base - reduced)


def edge_efficiencies(model: CognitiveModel, **kw) -> list[tuple[str, str, float]]:
    """All edges with their efficiency, most efficient first."""
    out = [(s, t, edge_efficiency(model, s, t, **kw)) for s, t, _ in model.edges()]
    out.sort(key=lambda e: (-e[2], e[0], e[1]))
    return out


def load_scenario(source: PathOrStream, model: CognitiveModel, delimiter: str = ",") -> list[tuple[int, np.ndarray]]:
    """Read ``step,indicator,magnitude`` rows into a forecast scenario."""
    fh, close = _open(source)
    try:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if r and any(c.strip() for c in r)]
    finally:
        if close:
            fh.close()
    if rows and [c.strip().lower() for c in rows[0][:3]] == ["step", "indicator", "magnitude"]:
        rows = rows[1:]
    by_step: dict[int, np.ndarray] = {}
    for lineno, row in enumerate(rows, start=1):
        if len(row) != 3:
            raise ScenarioError(f"scenario row {lineno} needs step,indicator,magnitude")
        try:
            step = int(row[0])
            mag = float(row[2])
        except ValueError:
            raise ScenarioError(f"scenario row {lineno} is not numeric") from None
        vec = by_step.setdefault(step, np.zeros(model.size))
        vec[model.index(row[1].strip())] += mag
    return sorted(by_step.items(), key=lambda p: p[0])


def write_trajectory(traj: ImpulseTrajectory, dest: PathOrStream, delimiter: str = ","):
    """One row per step (0..T), one column per indicator, 12 significant digits."""
    fh, close = _open(dest, "w")
    try:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(["step", *traj.indicators])
        for k, row in enumerate(traj.states()):
            w.writerow([k, *(_g12(v) for v in row)])
    finally:
        if close:
            fh.close()


def _g12(v: float) -> str:
    v = float(v)
    if v == 0:
        return "0"
    return format(v, ".12g")
