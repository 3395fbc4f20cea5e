"""Sloppiness analysis: ensemble observable vectors, mismatch loss,
log-parameter Jacobians, the Gauss-Newton Hessian spectrum, and
stiff-direction walks through parameter space.

All finite-difference machinery reuses one fixed seed list (common random
numbers), so differences measure parameter effects rather than noise, and
the loss of a point against itself is exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

from .economy import Trajectory, simulate
from .params import ClassifierThresholds, MarketParams, PolicyParams
from .phases import PhaseLabel, classify_phase, summarize
from .shocks import ShockSchedule
from .sweep import apply_axis

DEFAULT_LOG_STEP = 0.05      # finite-difference step in log-parameter space
DEFAULT_WALK_STEP = 0.25     # walk step in log-parameter space
DEFAULT_WALK_BOUND = 3.0     # max log-distance from the start, per parameter
DEFAULT_MIXED_EVERY = 4      # mixed policy: every m-th step along v2
DEFAULT_SENTINEL = 1e3       # cap for blown-up members, in normalized units

V1_POLICY = "v1"
MIXED_POLICY = "mixed"


class ProtocolMismatch(ValueError):
    """Loss evaluated against a reference from a different protocol."""


class SpectrumError(ValueError):
    """Eigen-decomposition failed its numerical quality checks."""


@dataclass(frozen=True)
class ObservableProtocol:
    """What to measure, over which window, and with which seed ensemble."""

    seeds: tuple[int, ...]
    window: tuple[int, int] = (500, 1500)
    channels: tuple[str, ...] = ("u", "pi")
    stride: int = 10
    scales: dict = field(default_factory=dict)
    sentinel: float = DEFAULT_SENTINEL

    def __post_init__(self) -> None:
        if len(self.seeds) < 1:
            raise ValueError("ensemble needs at least one seed")
        t0, t1 = self.window
        if not (0 <= t0 < t1):
            raise ValueError(f"bad window {self.window}")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        for ch in self.channels:
            if ch not in _CHANNELS:
                raise ValueError(
                    f"unknown channel {ch!r}; legal: {tuple(_CHANNELS)}")

    def scale(self, channel: str) -> float:
        return float(self.scales.get(channel, 1.0))

    def fingerprint(self) -> tuple:
        return (self.seeds, self.window, self.channels, self.stride,
                tuple(sorted((k, float(v)) for k, v in self.scales.items())),
                self.sentinel)

    def slots_per_channel(self) -> int:
        t0, t1 = self.window
        return len(range(t0, t1, self.stride))


def _chan_u(traj: Trajectory) -> np.ndarray:
    return traj.u


def _chan_pi(traj: Trajectory) -> np.ndarray:
    return traj.pi


def _chan_output(traj: Trajectory) -> np.ndarray:
    return traj.output


def _chan_bankruptcy_rate(traj: Trajectory) -> np.ndarray:
    return traj.bankruptcies / traj.manifest.get("n_firms", 1)


_CHANNELS = {
    "u": _chan_u,
    "pi": _chan_pi,
    "output": _chan_output,
    "bankruptcy_rate": _chan_bankruptcy_rate,
}


@dataclass(frozen=True)
class ObservableResult:
    values: np.ndarray
    blowup_frac: float
    fingerprint: tuple


def _member_vector(traj: Trajectory, protocol: ObservableProtocol,
                   ) -> np.ndarray:
    t0, t1 = protocol.window
    slots = protocol.slots_per_channel()
    sent = protocol.sentinel
    parts = []
    for ch in protocol.channels:
        series = _CHANNELS[ch](traj)[t0:t1:protocol.stride]
        v = np.asarray(series, dtype=float) / protocol.scale(ch)
        if v.shape[0] < slots:              # blown-up member: pad at the cap
            v = np.concatenate([v, np.full(slots - v.shape[0], sent)])
        v = np.nan_to_num(v, nan=sent, posinf=sent, neginf=-sent)
        parts.append(np.clip(v, -sent, sent))
    return np.concatenate(parts)


def observable_vector(
    market: MarketParams,
    policy: PolicyParams | None,
    protocol: ObservableProtocol,
    schedule: ShockSchedule | None = None,
) -> ObservableResult:
    """Ensemble-averaged, normalized, subsampled observable vector.

    Blown-up members keep the loss finite: their channels are capped at the
    sentinel ceiling and counted in ``blowup_frac``.
    """
    policy = policy or PolicyParams()
    t1 = protocol.window[1]
    total = None
    blowups = 0
    for seed in protocol.seeds:
        traj = simulate(market, policy, schedule, n_steps=t1, seed=seed)
        blowups += int(traj.blown_up)
        v = _member_vector(traj, protocol)
        total = v if total is None else total + v
    values = total / len(protocol.seeds)
    return ObservableResult(values, blowups / len(protocol.seeds),
                            protocol.fingerprint())


def loss(
    market: MarketParams,
    policy: PolicyParams | None,
    reference: ObservableResult,
    protocol: ObservableProtocol,
    schedule: ShockSchedule | None = None,
) -> float:
    """Mean squared mismatch against a reference observable vector."""
    if reference.fingerprint != protocol.fingerprint():
        raise ProtocolMismatch(
            "reference was produced under a different protocol")
    result = observable_vector(market, policy, protocol, schedule)
    return vector_mse(result.values, reference.values)


def vector_mse(values: np.ndarray, reference: np.ndarray) -> float:
    if values.shape != reference.shape:
        raise ProtocolMismatch(
            f"vector shapes differ: {values.shape} vs {reference.shape}")
    d = values - reference
    return float(np.mean(d * d))


# ---------------------------------------------------------------------------
# log-parameter derivatives and the spectrum
# ---------------------------------------------------------------------------

def log_jacobian(f, x_log: np.ndarray, h: float = DEFAULT_LOG_STEP,
                 ) -> np.ndarray:
    """Central-difference Jacobian of a vector map over log-parameters.

    f maps a log-parameter vector to an observable vector; every column
    uses the same two-sided step h.
    """
    if h <= 0.0:
        raise ValueError("h must be > 0")
    x = np.asarray(x_log, dtype=float)
    cols = []
    for j in range(x.shape[0]):
        e = np.zeros_like(x)
        e[j] = h
        cols.append((np.asarray(f(x + e), dtype=float)
                     - np.asarray(f(x - e), dtype=float)) / (2.0 * h))
    return np.column_stack(cols)


def gauss_newton_hessian(J: np.ndarray) -> np.ndarray:
    """Gauss-Newton Hessian of the MSE at the reference point: 2 JtJ / M.

    Symmetric positive semidefinite by construction and far more robust to
    simulation noise than direct second differences of a stochastic loss.
    """
    J = np.asarray(J, dtype=float)
    if not np.all(np.isfinite(J)):
        raise ValueError("Jacobian contains non-finite entries")
    return 2.0 * (J.T @ J) / J.shape[0]


@dataclass
class SpectrumReport:
    """Eigen-decomposition of the log-parameter Hessian, stiffest first."""

    eigenvalues: np.ndarray          # nonincreasing, >= 0
    eigenvectors: np.ndarray         # row k is the k-th eigenvector
    param_names: tuple[str, ...]
    decades: float                   # log10(lambda_1 / lambda_P)
    trace_fractions: np.ndarray      # cumulative share of the trace
    residual: float                  # max_k |H v_k - l_k v_k| / |H|

    @property
    def stiffest(self) -> np.ndarray:
        return self.eigenvectors[0]


NEG_EIG_TOL = 1e-10
RESIDUAL_TOL = 1e-8
ORTHO_TOL = 1e-10


def eigen_spectrum(H: np.ndarray,
                   param_names: tuple[str, ...] | None = None,
                   ) -> SpectrumReport:
    """Full descending spectrum of a symmetric PSD matrix, with residual
    and orthonormality guarantees checked."""
    H = np.asarray(H, dtype=float)
    if not np.all(np.isfinite(H)):
        raise SpectrumError("matrix contains non-finite entries")
    Hs = 0.5 * (H + H.T)
    vals, vecs = np.linalg.eigh(Hs)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order].T
    n = vals.shape[0]
    lam1 = vals[0] if n else 0.0
    if lam1 > 0.0 and np.any(vals < -NEG_EIG_TOL * lam1):
        raise SpectrumError("negative eigenvalues beyond round-off")
    vals = np.maximum(vals, 0.0)

    hnorm = lam1 if lam1 > 0.0 else 1.0
    residual = 0.0
    for k in range(n):
        r = float(np.linalg.norm(Hs @ vecs[k] - vals[k] * vecs[k]))
        residual = max(residual, r / hnorm)
    if residual > RESIDUAL_TOL:
        raise SpectrumError(f"eigen residual {residual:.3e} above tolerance")
    gram = vecs @ vecs.T
    if float(np.max(np.abs(gram - np.eye(n)))) > ORTHO_TOL:
        raise SpectrumError("eigenvectors not orthonormal to tolerance")

    if param_names is None:
        param_names = tuple(f"param_{k + 1}" for k in range(n))
    decades = (math.log10(vals[0] / vals[-1])
               if vals[0] > 0.0 and vals[-1] > 0.0 else math.inf)
    tr = float(np.sum(vals))
    fractions = (np.cumsum(vals) / tr if tr > 0.0
                 else np.zeros_like(vals))
    return SpectrumReport(vals, vecs, tuple(param_names), decades,
                          fractions, residual)


# ---------------------------------------------------------------------------
# point evaluators (simulator and plug-in test models share the interface)
# ---------------------------------------------------------------------------

class SimulatorEvaluator:
    """Maps log-parameter points to (observable vector, phase label).

    Parameter names use the sweep axis grammar ("market.x" / "policy.y");
    every named parameter must be strictly positive and finite so that its
    logarithm exists. Evaluations are memoized on the exact point.
    """

    def __init__(
        self,
        market: MarketParams,
        policy: PolicyParams,
        protocol: ObservableProtocol,
        names: tuple[str, ...],
        schedule: ShockSchedule | None = None,
        thresholds: ClassifierThresholds | None = None,
    ) -> None:
        self.market = market
        self.policy = policy
        self.protocol = protocol
        self.names = tuple(names)
        self.schedule = schedule
        self.thresholds = thresholds or ClassifierThresholds()
        values = []
        for name in self.names:
            v = self._read(name)
            if not (v > 0.0 and math.isfinite(v)):
                raise ValueError(
                    f"parameter {name} = {v!r} cannot be analyzed in log "
                    "space; exclude it or reparameterize to a positive value"
                )
            values.append(v)
        self.x0_log = np.log(np.array(values))
        self._cache: dict[tuple, tuple[np.ndarray, PhaseLabel, float]] = {}

    def _read(self, name: str) -> float:
        scope, _, fieldname = name.partition(".")
        obj = {"market": self.market, "policy": self.policy}.get(scope)
        if obj is None or not hasattr(obj, fieldname):
            raise ValueError(f"unknown parameter name {name!r}")
        return float(getattr(obj, fieldname))

    def params_at(self, x_log: np.ndarray,
                  ) -> tuple[MarketParams, PolicyParams]:
        market, policy = self.market, self.policy
        for name, xv in zip(self.names, x_log):
            market, policy = apply_axis(market, policy, {}, name,
                                        float(math.exp(xv)))
        return market, policy

    def evaluate(self, x_log: np.ndarray,
                 ) -> tuple[np.ndarray, PhaseLabel, float]:
        """(vector, modal label, blow-up fraction) at a log-point, cached."""
        key = tuple(float(v) for v in x_log)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        market, policy = self.params_at(np.asarray(x_log, dtype=float))
        t0, t1 = self.protocol.window
        total = None
        blowups = 0
        labels: dict[PhaseLabel, int] = {}
        for seed in self.protocol.seeds:
            traj = simulate(market, policy, self.schedule,
                            n_steps=t1, seed=seed)
            blowups += int(traj.blown_up)
            v = _member_vector(traj, self.protocol)
            total = v if total is None else total + v
            summ = summarize(traj, t0, self.thresholds)
            lb = classify_phase(summ, self.thresholds)
            labels[lb] = labels.get(lb, 0) + 1
        best = max(labels.values())
        modal = next(lb for lb in PhaseLabel if labels.get(lb, 0) == best)
        out = (total / len(self.protocol.seeds), modal,
               blowups / len(self.protocol.seeds))
        self._cache[key] = out
        return out

    def vector(self, x_log: np.ndarray) -> np.ndarray:
        return self.evaluate(x_log)[0]


class ToyEvaluator:
    """Plug-in analytic model for validating the walk and Jacobian
    machinery: a vector map plus a labeling of log-parameter space."""

    def __init__(self, fn, label_fn) -> None:
        self.fn = fn
        self.label_fn = label_fn

    def evaluate(self, x_log):
        x = np.asarray(x_log, dtype=float)
        return np.asarray(self.fn(x), dtype=float), self.label_fn(x), 0.0

    def vector(self, x_log):
        return self.evaluate(x_log)[0]


# ---------------------------------------------------------------------------
# walks
# ---------------------------------------------------------------------------

@dataclass
class WalkPoint:
    x_log: np.ndarray
    params: dict
    spectrum: SpectrumReport
    label: PhaseLabel
    loss_from_prev: float
    blowup_frac: float


@dataclass
class WalkPath:
    """A stiff-direction exploration path through log-parameter space."""

    points: list[WalkPoint]
    stop_reason: str
    step_size: float
    policy: str
    param_names: tuple[str, ...]

    def labels(self) -> list[PhaseLabel]:
        return [pt.label for pt in self.points]

    def first_transition(self) -> int | None:
        """Index of the first point whose label differs from the start."""
        start = self.points[0].label
        for k, pt in enumerate(self.points):
            if pt.label != start:
                return k
        return None


STOP_MAX_STEPS = "max_steps"
STOP_BOUND = "bound"
STOP_LABEL_CHANGE = "label_change"
STOP_DEGENERATE = "spectrum_degenerate"


def stiff_walk(
    evaluator,
    names: tuple[str, ...],
    x_start_log: np.ndarray,
    *,
    step_size: float = DEFAULT_WALK_STEP,
    max_steps: int = 20,
    walk_policy: str = V1_POLICY,
    mixed_every: int = DEFAULT_MIXED_EVERY,
    bound: float = DEFAULT_WALK_BOUND,
    h: float = DEFAULT_LOG_STEP,
    lambda_floor: float = 1e-12,
    stop_on_label_change: bool = False,
) -> WalkPath:
    """Walk along the top Hessian eigenvector toward maximal change.

    At each point the local spectrum is computed from a fresh reference;
    the step direction is the stiffest eigenvector (every ``mixed_every``-th
    step the second one, under the mixed policy), sign-oriented for
    continuity with the previous step and then resolved by whichever of the
    two candidate points changes the observables more.
    """
    if walk_policy not in (V1_POLICY, MIXED_POLICY):
        raise ValueError(f"unknown walk policy {walk_policy!r}")
    x = np.asarray(x_start_log, dtype=float).copy()
    x0 = x.copy()
    points: list[WalkPoint] = []
    prev_dir: np.ndarray | None = None
    loss_prev = 0.0
    stop = STOP_MAX_STEPS

    for k in range(max_steps + 1):
        ref, label, bf = evaluator.evaluate(x)
        J = log_jacobian(evaluator.vector, x, h)
        spectrum = eigen_spectrum(gauss_newton_hessian(J), names)
        points.append(WalkPoint(
            x_log=x.copy(),
            params=dict(zip(names, np.exp(x))),
            spectrum=spectrum, label=label,
            loss_from_prev=loss_prev, blowup_frac=bf,
        ))
        if stop_on_label_change and label != points[0].label:
            stop = STOP_LABEL_CHANGE
            break
        if k == max_steps:
            stop = STOP_MAX_STEPS
            break
        if spectrum.eigenvalues[0] < lambda_floor:
            stop = STOP_DEGENERATE
            break

        row = 0
        if (walk_policy == MIXED_POLICY and mixed_every > 0
                and (k + 1) % mixed_every == 0 and len(names) > 1):
            row = 1
        v = spectrum.eigenvectors[row].copy()
        if prev_dir is not None and float(v @ prev_dir) < 0.0:
            v = -v
        lp = vector_mse(evaluator.vector(x + step_size * v), ref)
        lm = vector_mse(evaluator.vector(x - step_size * v), ref)
        sigma = 1.0 if lp >= lm else -1.0
        x_new = x + sigma * step_size * v
        if np.any(np.abs(x_new - x0) > bound):
            stop = STOP_BOUND
            break
        prev_dir = sigma * v
        loss_prev = lp if sigma > 0 else lm
        x = x_new

    return WalkPath(points=points, stop_reason=stop, step_size=step_size,
                    policy=walk_policy, param_names=tuple(names))


def isotropic_walk(
    evaluator,
    names: tuple[str, ...],
    x_start_log: np.ndarray,
    *,
    step_size: float = DEFAULT_WALK_STEP,
    max_steps: int = 20,
    bound: float = DEFAULT_WALK_BOUND,
    direction_seed: int = 0,
) -> tuple[list[PhaseLabel], str]:
    """Random-direction walk of equal step size; the comparison baseline
    for walk-efficiency experiments. Returns visited labels and the stop
    reason."""
    x = np.asarray(x_start_log, dtype=float).copy()
    x0 = x.copy()
    rng = Generator(Philox(key=int(
        SeedSequence([int(direction_seed), 0xD19]).generate_state(1)[0])))
    labels: list[PhaseLabel] = []
    stop = STOP_MAX_STEPS
    for k in range(max_steps + 1):
        _, label, _ = evaluator.evaluate(x)
        labels.append(label)
        if label != labels[0]:
            stop = STOP_LABEL_CHANGE
            break
        if k == max_steps:
            break
        d = rng.normal(size=x.shape[0])
        norm = float(np.linalg.norm(d))
        if norm == 0.0:
            continue
        x_new = x + step_size * d / norm
        if np.any(np.abs(x_new - x0) > bound):
            stop = STOP_BOUND
            break
        x = x_new
    return labels, stop
