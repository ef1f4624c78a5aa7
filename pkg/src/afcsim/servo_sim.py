"""Episode orchestration: the per-sample adapt-and-cancel loop.

A loop configuration describes one or more actuator stages sharing a
single measured error signal.  Each stage owns a plant model, a harmonic
band, its own estimator and feedforward adapter, and (optionally) its own
exogenous excitation.  Per sample the loop:

1. forms each stage's feedforward value from the current coefficients,
2. steps each plant with excitation + feedforward and sums the outputs
   with the periodic runout and broadband noise into the error e(k),
3. computes each stage's prediction and prediction error,
4. runs the normalized-gradient parameter update,
5. runs the stage's feedforward coefficient update (inverse-based or
   swapped variant),

and the coefficients updated in (5) take effect from the next sample on,
honoring the plants' one-sample delay.  Everything is recorded; identical
configs and seeds give bit-identical traces.

Every stage's estimator carries residual slots for the union of all
targeted harmonics, not just the stage's own band: the residual relation
(numerator-filtered feedforward plus denominator-filtered runout) only
stays inside the regressor span when every runout frequency is present.
Restricting a stage's regressor to its own band would leave the other
band's periodic content as unmodeled noise, which biases its plant
estimate whenever the partner stage has not cancelled it.  The stage's
feedforward still spans only its own band; its update law reads only its
own band's residual slots.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .disturbance import NrroModel, RroProfile, random_profile
from .estimator import GainSchedule, ParameterVector, step_size_bound
from .feedforward import FeedforwardState, NumeratorEvaluator, ResponseSmoother
from .lti_core import RationalSystem
from .regressors import HarmonicSet, TappedDelayLine, regressor_table

__all__ = [
    "ConfigError",
    "SimulationDivergence",
    "ExcitationConfig",
    "EstimatorConfig",
    "FeedforwardConfig",
    "StageConfig",
    "RroSettings",
    "NrroSettings",
    "LoopConfig",
    "StageTrace",
    "SimulationTrace",
    "validate",
    "run_episode",
    "without_feedforward",
    "disturbance_only",
]


class ConfigError(ValueError):
    """Raised when a loop configuration fails validation."""


class SimulationDivergence(RuntimeError):
    """A signal went non-finite; names the step and sample index."""

    def __init__(self, step: str, sample: int):
        super().__init__(f"non-finite value at step '{step}', sample {sample}")
        self.step = step
        self.sample = sample


@dataclass(frozen=True)
class ExcitationConfig:
    """White excitation injected at a stage's actuator input.

    The excitation is active over [start_revolution, active_revolutions);
    None keeps it on to the end of the episode.  The random stream is
    drawn for the full episode either way, so changing the window never
    shifts any other seeded sequence.  Multi-stage runs stagger their
    windows: simultaneous broadband excitation at two inputs would let
    each stage's unmodeled view of the other's excitation bias its plant
    estimate.
    """

    sigma: float = 0.0
    seed: int = 0
    active_revolutions: float | None = None
    start_revolution: float = 0.0


@dataclass(frozen=True)
class EstimatorConfig:
    """Estimator orders, gain schedule, and activation.

    start_revolution delays adaptation: the gain is zero before it and
    follows the decreasing schedule (measured from activation) after.
    A stage identified in a later excitation window starts learning only
    when its own window opens, so it never ingests the earlier window's
    unmodeled broadband content at full gain.
    """

    n_a: int = 2
    n_b: int = 2
    k0: float = 1.0
    decay: float = 0.0
    floor: float = 0.0
    theta0: tuple[float, ...] | None = None
    start_revolution: float = 0.0


@dataclass(frozen=True)
class FeedforwardConfig:
    """Coefficient update law settings.

    adapt_revolutions, when set, stops coefficient updates after that many
    revolutions (adapt-then-hold).  A held feedforward is exactly periodic,
    which is what makes terminal-window spectra of u_a bin-pure.
    """

    variant: str = "improved"
    alpha: float = 0.01
    smoothing_beta: float = 0.95
    gain_scale: float = 1.0
    adapt_revolutions: float | None = None

    @property
    def magnitude_floor(self) -> float:
        return 1e-4 * self.gain_scale


@dataclass(frozen=True)
class StageConfig:
    name: str
    plant_b: tuple[float, ...]
    plant_a_star: tuple[float, ...]
    harmonic_indices: tuple[int, ...]
    estimator: EstimatorConfig = EstimatorConfig()
    feedforward: FeedforwardConfig = FeedforwardConfig()
    excitation: ExcitationConfig = ExcitationConfig()


@dataclass(frozen=True)
class RroSettings:
    """Periodic runout source: seeded random profile, CSV import, or none."""

    mode: str = "random"
    amplitude_scale: float = 1.0
    decay_exponent: float = 1.0
    seed: int = 1
    csv_path: str | None = None


@dataclass(frozen=True)
class NrroSettings:
    sigma: float = 0.0
    seed: int = 2
    shaping_b: tuple[float, ...] | None = None
    shaping_a_star: tuple[float, ...] | None = None


@dataclass(frozen=True)
class LoopConfig:
    samples_per_rev: int = 420
    spindle_hz: float = 120.0
    revolutions: int = 100
    stages: tuple[StageConfig, ...] = ()
    rro: RroSettings = RroSettings()
    nrro: NrroSettings = NrroSettings()
    snapshot_stride: int = 420
    check_update_bound: bool = False
    # reporting only: spectra are taken over this many terminal revolutions
    analysis_revolutions: int | None = None

    def effective_analysis_revolutions(self) -> int:
        if self.analysis_revolutions is not None:
            return min(self.analysis_revolutions, self.revolutions)
        return min(50, self.revolutions)

    def targeted_indices(self) -> tuple[int, ...]:
        out: set[int] = set()
        for st in self.stages:
            out.update(st.harmonic_indices)
        return tuple(sorted(out))

    def stage_harmonics(self, stage: StageConfig) -> HarmonicSet:
        return HarmonicSet(self.spindle_hz, self.samples_per_rev, stage.harmonic_indices)


def validate(cfg: LoopConfig) -> list[str]:
    """Structural checks; returns diagnostics (empty when well formed)."""
    diags: list[str] = []
    n = cfg.samples_per_rev
    if n < 2:
        diags.append(f"samples_per_rev must be >= 2, got {n}")
    if cfg.revolutions < 1:
        diags.append(f"revolutions must be >= 1, got {cfg.revolutions}")
    if cfg.snapshot_stride < 1:
        diags.append(f"snapshot_stride must be >= 1, got {cfg.snapshot_stride}")
    if cfg.analysis_revolutions is not None and cfg.analysis_revolutions < 1:
        diags.append(
            f"analysis_revolutions must be >= 1, got {cfg.analysis_revolutions}"
        )
    if not cfg.stages:
        diags.append("at least one stage is required")
    names = [st.name for st in cfg.stages]
    if len(set(names)) != len(names):
        diags.append(f"stage names are not unique: {names}")
    seen: dict[int, str] = {}
    for st in cfg.stages:
        prefix = f"stage '{st.name}':"
        if not st.plant_b:
            diags.append(f"{prefix} plant numerator is empty")
        for label, coeffs in (("numerator", st.plant_b), ("denominator", st.plant_a_star)):
            if any(not math.isfinite(c) for c in coeffs):
                diags.append(f"{prefix} non-finite plant {label} coefficient")
        if not st.harmonic_indices:
            diags.append(f"{prefix} harmonic index set is empty")
        for i in st.harmonic_indices:
            if i < 1:
                diags.append(f"{prefix} harmonic index {i} must be >= 1")
            elif 2 * i >= n:
                diags.append(f"{prefix} harmonic {i} above Nyquist for N={n}")
            elif i in seen:
                diags.append(
                    f"{prefix} harmonic sets overlap: {i} already targeted "
                    f"by stage '{seen[i]}'"
                )
            seen.setdefault(i, st.name)
        est = st.estimator
        if est.n_a < 0 or est.n_b < 1:
            diags.append(f"{prefix} estimator orders need n_a >= 0, n_b >= 1")
        if est.k0 < 0 or est.decay < 0 or est.floor < 0:
            diags.append(f"{prefix} gain schedule parameters must be >= 0")
        if est.start_revolution < 0:
            diags.append(f"{prefix} estimator start_revolution must be >= 0")
        if est.theta0 is not None:
            union = set()
            for other in cfg.stages:
                union.update(other.harmonic_indices)
            want = est.n_a + est.n_b + 2 * len(union)
            if len(est.theta0) != want:
                diags.append(
                    f"{prefix} theta0 has length {len(est.theta0)}, expected {want} "
                    f"(residual slots cover the union of all stage harmonics)"
                )
        ff = st.feedforward
        if ff.variant not in ("basic", "improved"):
            diags.append(f"{prefix} unknown feedforward variant {ff.variant!r}")
        if ff.alpha < 0:
            diags.append(f"{prefix} alpha must be >= 0")
        if not (0.0 <= ff.smoothing_beta < 1.0):
            diags.append(f"{prefix} smoothing_beta must lie in [0, 1)")
        if ff.gain_scale <= 0:
            diags.append(f"{prefix} gain_scale must be > 0")
        if ff.adapt_revolutions is not None and ff.adapt_revolutions < 0:
            diags.append(f"{prefix} adapt_revolutions must be >= 0")
        exc = st.excitation
        if exc.sigma < 0:
            diags.append(f"{prefix} excitation sigma must be >= 0")
        if exc.active_revolutions is not None and exc.active_revolutions < 0:
            diags.append(f"{prefix} active_revolutions must be >= 0")
        if exc.start_revolution < 0:
            diags.append(f"{prefix} excitation start_revolution must be >= 0")
    if cfg.rro.mode not in ("random", "csv", "none"):
        diags.append(f"unknown rro mode {cfg.rro.mode!r}")
    if cfg.rro.mode == "csv" and not cfg.rro.csv_path:
        diags.append("rro mode 'csv' requires csv_path")
    if cfg.rro.mode == "random" and cfg.rro.amplitude_scale < 0:
        diags.append("rro amplitude_scale must be >= 0")
    if cfg.nrro.sigma < 0:
        diags.append("nrro sigma must be >= 0")
    return diags


@dataclass
class StageTrace:
    name: str
    u_e: np.ndarray
    u_a: np.ndarray
    e_hat: np.ndarray
    e_tilde: np.ndarray
    theta_snapshots: np.ndarray
    ffwd_snapshots: np.ndarray
    final_theta: ParameterVector
    final_coeffs: np.ndarray
    freeze_samples: int


@dataclass
class SimulationTrace:
    samples_per_rev: int
    e: np.ndarray
    rro: np.ndarray
    nrro: np.ndarray
    snapshot_samples: np.ndarray
    stages: list[StageTrace]
    wall_seconds: float

    @property
    def n_samples(self) -> int:
        return self.e.size

    def terminal_window(self, revolutions: int) -> slice:
        """Index slice covering the last `revolutions` whole revolutions."""
        n = revolutions * self.samples_per_rev
        if n > self.e.size:
            raise ValueError("terminal window longer than the episode")
        return slice(self.e.size - n, self.e.size)

    def write_csv(self, path, decimation: int = 1) -> None:
        """One row per (decimated) sample; stable column order."""
        if decimation < 1:
            raise ValueError("decimation must be >= 1")
        header = ["sample", "e", "rro", "nrro"]
        for st in self.stages:
            header += [
                f"u_e_{st.name}",
                f"u_a_{st.name}",
                f"e_hat_{st.name}",
                f"e_tilde_{st.name}",
            ]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for k in range(0, self.e.size, decimation):
                row = [
                    k,
                    repr(float(self.e[k])),
                    repr(float(self.rro[k])),
                    repr(float(self.nrro[k])),
                ]
                for st in self.stages:
                    row += [
                        repr(float(st.u_e[k])),
                        repr(float(st.u_a[k])),
                        repr(float(st.e_hat[k])),
                        repr(float(st.e_tilde[k])),
                    ]
                writer.writerow(row)

    def write_ffwd_csv(self, path) -> None:
        """Feedforward coefficient snapshots in long (plot-ready) form."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sample", "stage", "coeff", "value"])
            for st in self.stages:
                for row, k in zip(st.ffwd_snapshots, self.snapshot_samples):
                    for j, v in enumerate(row):
                        writer.writerow([int(k), st.name, j, repr(float(v))])


class _StageRuntime:
    """Mutable per-stage machinery for one episode.

    The estimator's residual slots span the union of all targeted
    harmonics; `own_slots` maps the stage's own band into that union
    layout (interleaved cos/sin pairs).
    """

    def __init__(
        self,
        cfg: LoopConfig,
        stage: StageConfig,
        total: int,
        union_indices: tuple[int, ...],
    ):
        self.name = stage.name
        self.harmonics = cfg.stage_harmonics(stage)
        self.plant = RationalSystem(stage.plant_b, stage.plant_a_star)
        est = stage.estimator
        self.n_a, self.n_b = est.n_a, est.n_b
        dim_own = self.harmonics.dimension
        dim_union = 2 * len(union_indices)
        positions = {idx: p for p, idx in enumerate(union_indices)}
        slots = np.empty(dim_own, dtype=np.intp)
        for j, idx in enumerate(self.harmonics.indices):
            slots[2 * j] = 2 * positions[idx]
            slots[2 * j + 1] = 2 * positions[idx] + 1
        self.own_slots = slots

        if est.theta0 is not None:
            self.theta = ParameterVector(
                est.n_a, est.n_b, dim_union, np.asarray(est.theta0, dtype=float)
            )
        else:
            self.theta = ParameterVector(est.n_a, est.n_b, dim_union)
        self.gains = GainSchedule(est.k0, est.decay, est.floor)
        self.gain_start = int(round(est.start_revolution * cfg.samples_per_rev))
        self.phi_e = TappedDelayLine(max(est.n_a, 1))
        self.phi_ue = TappedDelayLine(max(est.n_b, 1))
        self.phi = np.empty(est.n_a + est.n_b + dim_union)
        ff = stage.feedforward
        self.variant = ff.variant
        self.alpha = ff.alpha
        n_taps = est.n_b if ff.variant == "improved" else 0
        self.ffwd = FeedforwardState(dim_own, ff.alpha, n_taps=n_taps)
        self.smoother = ResponseSmoother(ff.smoothing_beta, ff.magnitude_floor)
        self.evaluator = NumeratorEvaluator(self.harmonics.omegas, est.n_b)
        if ff.adapt_revolutions is None:
            self.hold_from: int | None = None
        else:
            self.hold_from = int(round(ff.adapt_revolutions * cfg.samples_per_rev))

        exc = stage.excitation
        rng = np.random.default_rng(exc.seed)
        seq = exc.sigma * rng.standard_normal(total) if exc.sigma > 0 else np.zeros(total)
        start = int(round(exc.start_revolution * cfg.samples_per_rev))
        seq[: min(start, total)] = 0.0
        if exc.active_revolutions is not None:
            cutoff = int(round(exc.active_revolutions * cfg.samples_per_rev))
            seq[min(cutoff, total):] = 0.0
        self.u_e_seq = seq

        self.tr_ua = np.empty(total)
        self.tr_ehat = np.empty(total)
        self.tr_etilde = np.empty(total)


def _build_rro(cfg: LoopConfig) -> tuple[RroProfile | None, np.ndarray]:
    n = cfg.samples_per_rev
    if cfg.rro.mode == "none":
        return None, np.zeros(n)
    indices = cfg.targeted_indices()
    union = HarmonicSet(cfg.spindle_hz, n, indices)
    if cfg.rro.mode == "csv":
        profile = RroProfile.from_csv(cfg.rro.csv_path, cfg.spindle_hz, n)
    else:
        profile = random_profile(
            union, cfg.rro.seed, cfg.rro.amplitude_scale, cfg.rro.decay_exponent
        )
    return profile, profile.revolution()


def _build_nrro(cfg: LoopConfig, total: int) -> np.ndarray:
    shaping = None
    if cfg.nrro.shaping_b is not None:
        shaping = RationalSystem(cfg.nrro.shaping_b, cfg.nrro.shaping_a_star or ())
    model = NrroModel(cfg.nrro.sigma, cfg.nrro.seed, shaping)
    return model.generate(total)


def run_episode(cfg: LoopConfig) -> SimulationTrace:
    """Run one episode; deterministic under fixed seeds.

    Raises ConfigError when validation fails and SimulationDivergence when
    any signal goes non-finite.
    """
    diags = validate(cfg)
    if diags:
        raise ConfigError("; ".join(diags))

    n = cfg.samples_per_rev
    total = n * cfg.revolutions
    profile, r_rev = _build_rro(cfg)
    nrro = _build_nrro(cfg, total)
    union_indices = cfg.targeted_indices()
    union_table = regressor_table(HarmonicSet(cfg.spindle_hz, n, union_indices))
    stages = [_StageRuntime(cfg, st, total, union_indices) for st in cfg.stages]

    e_tr = np.empty(total)
    snap_samples = list(range(0, total, cfg.snapshot_stride))
    if snap_samples[-1] != total - 1:
        snap_samples.append(total - 1)
    snap_at = {k: i for i, k in enumerate(snap_samples)}
    theta_snaps = [np.empty((len(snap_samples), st.phi.size)) for st in stages]
    ffwd_snaps = [
        np.empty((len(snap_samples), st.harmonics.dimension)) for st in stages
    ]

    check_bound = cfg.check_update_bound
    t0 = time.perf_counter()
    for k in range(total):
        km = k % n
        phi_union = union_table[km]
        e = r_rev[km] + nrro[k]
        for st in stages:
            st.phi_own = phi_union[st.own_slots]
            u_a = st.ffwd.control(st.phi_own)
            if not math.isfinite(u_a):
                raise SimulationDivergence(f"feedforward output ({st.name})", k)
            u_e = st.u_e_seq[k]
            e += st.plant.step(u_e + u_a)
            st.tr_ua[k] = u_a
        if not math.isfinite(e):
            raise SimulationDivergence("error summation", k)
        e_tr[k] = e

        for st in stages:
            phi = st.phi
            phi[: st.n_a] = st.phi_e.values[: st.n_a]
            phi[st.n_a : st.n_a + st.n_b] = st.phi_ue.values[: st.n_b]
            phi[st.n_a + st.n_b :] = phi_union
            e_hat = st.theta.predict(phi)
            e_tilde = e - e_hat
            st.tr_ehat[k] = e_hat
            st.tr_etilde[k] = e_tilde
            gain = 0.0 if k < st.gain_start else st.gains.gain(k - st.gain_start)
            if gain > 0.0:
                new_theta = st.theta.update(phi, e_tilde, gain)
                if check_bound:
                    moved = float(
                        np.linalg.norm(new_theta.stacked - st.theta.stacked)
                    )
                    bound = step_size_bound(gain, e_tilde)
                    if moved > bound * (1.0 + 1e-12) + 1e-300:
                        raise SimulationDivergence(
                            f"update step bound ({st.name})", k
                        )
                st.theta = new_theta

            if st.alpha > 0.0 and (st.hold_from is None or k < st.hold_from):
                theta_m_own = st.theta.theta_m[st.own_slots]
                if st.variant == "basic":
                    resp = st.evaluator.response(st.theta.theta_b)
                    blocks = st.smoother.update(np.abs(resp), np.angle(resp))
                    st.ffwd.update_basic(blocks, theta_m_own)
                else:
                    filtered = st.ffwd.filter_regressor(
                        st.theta.theta_b, st.phi_own
                    )
                    residual = float(np.dot(theta_m_own, st.phi_own))
                    st.ffwd.update_improved(filtered, residual)

            st.phi_e.push(e)
            st.phi_ue.push(st.u_e_seq[k])

        si = snap_at.get(k)
        if si is not None:
            for j, st in enumerate(stages):
                theta_snaps[j][si] = st.theta.stacked
                ffwd_snaps[j][si] = st.ffwd.coeffs
    wall = time.perf_counter() - t0

    rro_tr = np.tile(r_rev, cfg.revolutions)
    stage_traces = [
        StageTrace(
            name=st.name,
            u_e=st.u_e_seq,
            u_a=st.tr_ua,
            e_hat=st.tr_ehat,
            e_tilde=st.tr_etilde,
            theta_snapshots=theta_snaps[j],
            ffwd_snapshots=ffwd_snaps[j],
            final_theta=st.theta.copy(),
            final_coeffs=st.ffwd.coeffs.copy(),
            freeze_samples=st.smoother.freeze_events,
        )
        for j, st in enumerate(stages)
    ]
    return SimulationTrace(
        samples_per_rev=n,
        e=e_tr,
        rro=rro_tr,
        nrro=nrro,
        snapshot_samples=np.asarray(snap_samples),
        stages=stage_traces,
        wall_seconds=wall,
    )


def without_feedforward(cfg: LoopConfig) -> LoopConfig:
    """Same episode with all adaptation off: the u_a = 0 baseline."""
    stages = tuple(
        replace(
            st,
            estimator=replace(st.estimator, k0=0.0, floor=0.0),
            feedforward=replace(st.feedforward, alpha=0.0),
        )
        for st in cfg.stages
    )
    return replace(cfg, stages=stages, check_update_bound=False)


def disturbance_only(cfg: LoopConfig) -> LoopConfig:
    """Broadband noise alone: no runout, no excitation, no adaptation.

    Defines the per-bin noise floor for attenuation reports; seeds are
    untouched so the noise realization matches the adaptive run.
    """
    base = without_feedforward(cfg)
    stages = tuple(
        replace(st, excitation=replace(st.excitation, sigma=0.0))
        for st in base.stages
    )
    return replace(base, stages=stages, rro=replace(cfg.rro, mode="none"))
