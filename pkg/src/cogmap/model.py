"""Signed weighted digraph of indicators.

``adjacency[i, j]`` is the effect of a unit standardized change of indicator
i on indicator j. Signals are row vectors: ``s_next = s @ adjacency``.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .data import PathOrStream, _open
from .errors import (
    DuplicateEdgeError,
    EdgeConflictError,
    FormatError,
    SpectralEstimateError,
    UnknownEdgeError,
    UnknownIndicatorError,
)
from .stats import EdgeCandidate

logger = logging.getLogger(__name__)

FORMAT_NAME = "cogmap-model"
FORMAT_VERSION = 1

NATIVE = "native"
INJECTED = "injected"


@dataclass(frozen=True)
class Provenance:
    kind: str = NATIVE
    r: float | None = None
    r_err: float | None = None
    weight_err: float | None = None
    n: int | None = None
    source_note: str = ""

    def __post_init__(self):
        if self.kind not in (NATIVE, INJECTED):
            raise ValueError(f"unknown provenance kind {self.kind!r}")


@dataclass(frozen=True, eq=False)
class CognitiveModel:
    indicators: tuple[str, ...]
    adjacency: np.ndarray
    provenance: Mapping[tuple[str, str], Provenance] = field(default_factory=dict)

    def __post_init__(self):
        names = tuple(self.indicators)
        if len(set(names)) != len(names):
            raise DuplicateEdgeError("indicator names must be unique")
        a = np.array(self.adjacency, dtype=float, copy=True).reshape(len(names), len(names))
        if np.any(np.diag(a) != 0):
            raise ValueError("adjacency diagonal must be zero")
        if not np.all(np.isfinite(a)):
            raise ValueError("adjacency must be finite")
        a[a == 0] = 0.0  # no negative zeros
        a.flags.writeable = False
        prov = dict(self.provenance)
        nonzero = {(names[i], names[j]) for i, j in zip(*np.nonzero(a))}
        if set(prov) != nonzero:
            raise ValueError("provenance records must match the nonzero adjacency entries")
        object.__setattr__(self, "indicators", names)
        object.__setattr__(self, "adjacency", a)
        object.__setattr__(self, "provenance", {k: prov[k] for k in sorted(prov)})

    @classmethod
    def from_matrix(cls, indicators: Sequence[str], adjacency, kind: str = NATIVE) -> "CognitiveModel":
        """Model from a dense matrix; every nonzero entry gets a bare provenance record."""
        names = tuple(indicators)
        a = np.asarray(adjacency, dtype=float)
        prov = {(names[i], names[j]): Provenance(kind) for i, j in zip(*np.nonzero(a))}
        return cls(names, a, prov)

    @property
    def size(self) -> int:
        return len(self.indicators)

    def index(self, name: str) -> int:
        try:
            return self.indicators.index(name)
        except ValueError:
            raise UnknownIndicatorError(f"unknown indicator {name!r}") from None

    def weight(self, source: str, target: str) -> float:
        return float(self.adjacency[self.index(source), self.index(target)])

    def edges(self) -> list[tuple[str, str, float]]:
        """Nonzero edges in row-major order."""
        a = self.adjacency
        return [(self.indicators[i], self.indicators[j], float(a[i, j])) for i, j in zip(*np.nonzero(a))]

    def without_edge(self, source: str, target: str) -> "CognitiveModel":
        i, j = self.index(source), self.index(target)
        if self.adjacency[i, j] == 0:
            raise UnknownEdgeError(f"no edge {source!r} -> {target!r}")
        a = self.adjacency.copy()
        a[i, j] = 0.0
        prov = dict(self.provenance)
        del prov[(source, target)]
        return CognitiveModel(self.indicators, a, prov)

    def permuted(self, order: Sequence[str]) -> "CognitiveModel":
        idx = [self.index(n) for n in order]
        return CognitiveModel(tuple(order), self.adjacency[np.ix_(idx, idx)], self.provenance)

    def __eq__(self, other):
        if not isinstance(other, CognitiveModel):
            return NotImplemented
        return (
            self.indicators == other.indicators
            and self.adjacency.shape == other.adjacency.shape
            and self.adjacency.tobytes() == other.adjacency.tobytes()
            and dict(self.provenance) == dict(other.provenance)
        )


def build_model(indicators: Sequence[str], edges: Iterable[EdgeCandidate]) -> CognitiveModel:
    """Place every candidate's weight at ``A[source, target]``."""
    names = tuple(indicators)
    if len(set(names)) != len(names):
        raise DuplicateEdgeError("indicator names must be unique")
    pos = {n: i for i, n in enumerate(names)}
    a = np.zeros((len(names), len(names)))
    prov = {}
    for e in edges:
        for endpoint in (e.source, e.target):
            if endpoint not in pos:
                raise UnknownIndicatorError(f"edge endpoint {endpoint!r} is not an indicator")
        key = (e.source, e.target)
        if key in prov:
            raise DuplicateEdgeError(f"duplicate edge {e.source!r} -> {e.target!r}")
        if e.weight == 0:
            continue
        a[pos[e.source], pos[e.target]] = e.weight
        prov[key] = Provenance(NATIVE, e.r, e.r_err, e.weight_err, e.n)
    return CognitiveModel(names, a, prov)


@dataclass(frozen=True)
class SpectralReport:
    spectral_radius: float
    is_contraction: bool
    iterations: int
    tolerance: float
    series_converged: bool = True


def _arnoldi_radius(a: np.ndarray, v: np.ndarray, dim: int) -> tuple[float, float]:
    """Largest |Ritz value| of `a` on the Krylov space of unit `v`, and its residual.

    The residual ||A y - theta y|| of the dominant Ritz pair comes for free
    from the Hessenberg matrix; it is 0 when the Krylov space is invariant.
    """
    n = a.shape[0]
    q = np.zeros((n, dim + 1))
    h = np.zeros((dim + 1, dim))
    q[:, 0] = v
    scale = max(np.abs(a).max(), 1e-300)
    m = dim
    beta = 0.0
    for j in range(dim):
        w = a @ q[:, j]
        for _ in range(2):
            coeffs = q[:, : j + 1].T @ w
            w = w - q[:, : j + 1] @ coeffs
            h[: j + 1, j] += coeffs
        beta = np.linalg.norm(w)
        if beta <= 1e-13 * scale:
            m, beta = j + 1, 0.0
            break
        h[j + 1, j] = beta
        q[:, j + 1] = w / beta
    vals, vecs = np.linalg.eig(h[:m, :m])
    k = int(np.argmax(np.abs(vals)))
    y = vecs[:, k]
    resid = beta * abs(y[-1]) / max(np.linalg.norm(y), 1e-300)
    return float(abs(vals[k])), float(resid)


def _series_converges(a: np.ndarray, max_iterations: int, window: int = 10) -> bool:
    """Whether the terms ||A^k|| of the Neumann series are shrinking.

    Converged if a term drops below 1e-12 of the first; otherwise each of the
    last `window` terms must be smaller than the term `window` steps earlier.
    Terms are renormalized as they go so large powers never overflow.
    """
    first = np.linalg.norm(a)
    if first == 0:
        return True
    p = a / first
    log_norm = 0.0  # log of the true norm of the current power, relative to `first`
    logs = [0.0]
    for _ in range(max_iterations):
        p = p @ a
        nrm = np.linalg.norm(p)
        if nrm == 0:
            return True
        log_norm += math.log(nrm)
        p = p / nrm
        logs.append(log_norm)
        if log_norm < math.log(1e-12):
            return True
    tail = logs[-window:]
    before = logs[-2 * window : -window]
    if len(before) < window:
        return False
    return all(t < b for t, b in zip(tail, before))


_RITZ_EVERY = 4


def contraction_check(
    model: CognitiveModel,
    tolerance: float = 1e-9,
    max_iterations: int = 10000,
    restarts: int = 5,
    seed: int = 0,
) -> SpectralReport:
    """Estimate rho(A) and decide whether the impulse series converges.

    Each restart runs power iteration from a random start; after every step a
    small Arnoldi projection of the current iterate gives a Ritz estimate, so
    dominant eigenvalues that come in +/- or complex pairs (where the plain
    Rayleigh quotient oscillates) are still resolved. The largest estimate
    over restarts is reported. A model is a contraction when the estimate is
    below ``1 - tolerance`` and the series terms are observed to shrink.
    """
    a = model.adjacency
    n = a.shape[0]
    bound = float(min(np.abs(a).sum(axis=0).max(initial=0.0), np.abs(a).sum(axis=1).max(initial=0.0)))
    if n == 0 or not a.any():
        return SpectralReport(0.0, True, 0, tolerance)
    dim = min(n, 8)
    rng = np.random.default_rng(seed)
    best = 0.0
    used = 0
    for _ in range(restarts):
        x = rng.standard_normal(n)
        x /= np.linalg.norm(x)
        prev = None
        est = None
        for it in range(1, max_iterations + 1):
            y = a @ x
            ny = np.linalg.norm(y)
            if ny == 0:
                # the start vector is annihilated by a power of A
                est = 0.0
                break
            x = y / ny
            if it > 2 and it % _RITZ_EVERY:
                continue
            est, resid = _arnoldi_radius(a, x, dim)
            tol = tolerance * max(1.0, est)
            if resid <= tol and prev is not None and abs(est - prev) <= tol:
                break
            prev = est
        else:
            raise SpectralEstimateError(
                f"power iteration did not settle in {max_iterations} iterations",
                bound=bound,
                estimate=est,
            )
        used = max(used, it)
        best = max(best, est)
    rho = min(best, bound) if bound > 0 else 0.0
    contractive = rho < 1.0 - tolerance
    series_ok = _series_converges(a, max_iterations) if contractive else False
    if contractive and not series_ok:
        logger.warning("rho estimate %.6g < 1 but series terms did not shrink", rho)
    return SpectralReport(float(rho), bool(contractive and series_ok), used, tolerance, series_ok)


@dataclass(frozen=True)
class ExternalEdge:
    source: str
    target: str
    weight: float
    source_note: str = ""

    def __post_init__(self):
        if self.source == self.target:
            raise ValueError(f"self-loop on {self.source!r}")
        if not math.isfinite(self.weight):
            raise ValueError("external edge weight must be finite")


def augment(
    model: CognitiveModel,
    edge: ExternalEdge,
    add_vertices: bool = False,
    override: bool = False,
) -> CognitiveModel:
    """Return a copy of `model` with `edge` injected.

    Missing endpoints are appended as isolated vertices only when
    `add_vertices` is set. Replacing an existing edge requires `override`;
    a weight of 0 with `override` removes the edge.
    """
    names = list(model.indicators)
    a = model.adjacency
    for endpoint in (edge.source, edge.target):
        if endpoint not in names:
            if not add_vertices:
                raise UnknownIndicatorError(f"{endpoint!r} is not in the model")
            names.append(endpoint)
    if len(names) > model.size:
        grown = np.zeros((len(names), len(names)))
        grown[: model.size, : model.size] = a
        a = grown
    else:
        a = a.copy()
    i, j = names.index(edge.source), names.index(edge.target)
    key = (edge.source, edge.target)
    prov = dict(model.provenance)
    if a[i, j] != 0 and not override:
        kind = prov[key].kind
        raise EdgeConflictError(f"{kind} edge {edge.source!r} -> {edge.target!r} exists; pass override")
    a[i, j] = edge.weight
    if edge.weight == 0:
        prov.pop(key, None)
    else:
        prov[key] = Provenance(INJECTED, source_note=edge.source_note)
    return CognitiveModel(tuple(names), a, prov)


def transfer_edge(donor: CognitiveModel, source: str, target: str, note: str = "") -> ExternalEdge:
    """Lift the weight of an existing donor-model edge into an `ExternalEdge`."""
    w = donor.weight(source, target)
    if w == 0:
        raise UnknownEdgeError(f"donor model has no edge {source!r} -> {target!r}")
    return ExternalEdge(source, target, w, note or f"transferred from donor model ({source} -> {target})")


def model_to_dict(model: CognitiveModel) -> dict:
    edges = []
    for (s, t), p in model.provenance.items():
        rec = {"from": s, "to": t, "weight": model.weight(s, t), "provenance": p.kind}
        for key in ("r", "r_err", "weight_err", "n"):
            val = getattr(p, key)
            if val is not None:
                rec[key] = val
        if p.source_note:
            rec["source_note"] = p.source_note
        edges.append(rec)
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "indicators": list(model.indicators),
        "edges": edges,
    }


def dumps_model(model: CognitiveModel) -> str:
    return json.dumps(model_to_dict(model), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def save_model(model: CognitiveModel, dest: PathOrStream):
    fh, close = _open(dest, "w")
    try:
        fh.write(dumps_model(model))
    finally:
        if close:
            fh.close()


def _require(cond, msg, pos):
    if not cond:
        raise FormatError(msg, pos)


def model_from_dict(doc) -> CognitiveModel:
    _require(isinstance(doc, dict), "model document must be an object", "$")
    _require(doc.get("format") == FORMAT_NAME, f"not a {FORMAT_NAME} document", "$.format")
    version = doc.get("version")
    _require(isinstance(version, int) and not isinstance(version, bool), "missing integer version", "$.version")
    if version > FORMAT_VERSION:
        raise FormatError(f"model format version {version} is newer than supported {FORMAT_VERSION}", "$.version")
    _require(version >= 1, f"bad model format version {version}", "$.version")
    names = doc.get("indicators")
    _require(isinstance(names, list) and all(isinstance(n, str) for n in names), "indicators must be a list of names", "$.indicators")
    edges = doc.get("edges")
    _require(isinstance(edges, list), "edges must be a list", "$.edges")
    pos = {n: i for i, n in enumerate(names)}
    _require(len(pos) == len(names), "indicator names must be unique", "$.indicators")
    a = np.zeros((len(names), len(names)))
    prov = {}
    for k, rec in enumerate(edges):
        where = f"$.edges[{k}]"
        _require(isinstance(rec, dict), "edge must be an object", where)
        s, t, w = rec.get("from"), rec.get("to"), rec.get("weight")
        _require(s in pos and t in pos, "edge endpoint is not a listed indicator", where)
        _require(s != t, "self-loop", where)
        _require(isinstance(w, (int, float)) and not isinstance(w, bool) and math.isfinite(w) and w != 0,
                 "weight must be a finite nonzero number", where + ".weight")
        _require((s, t) not in prov, "duplicate edge", where)
        kind = rec.get("provenance")
        _require(kind in (NATIVE, INJECTED), "provenance must be native or injected", where + ".provenance")
        a[pos[s], pos[t]] = float(w)
        prov[(s, t)] = Provenance(
            kind,
            rec.get("r"),
            rec.get("r_err"),
            rec.get("weight_err"),
            rec.get("n"),
            rec.get("source_note", ""),
        )
    return CognitiveModel(tuple(names), a, prov)


def loads_model(text: str) -> CognitiveModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed model file: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from None
    return model_from_dict(doc)


def load_model(source: PathOrStream) -> CognitiveModel:
    fh, close = _open(source)
    try:
        text = fh.read()
    finally:
        if close:
            fh.close()
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError("model file is not UTF-8", f"byte {exc.start}") from None
    return loads_model(text)
