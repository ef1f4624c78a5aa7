"""Structured config files: strict schema, explicit defaults, manifests.

One file describes one episode.  Sections mirror the runtime pieces:
[run], [rro], [nrro], and one or more [[stages]] tables with nested
estimator / feedforward / excitation tables.  Unknown keys are errors,
not warnings: silent config drift is the main reproducibility hazard.

The resolved form (every default materialized, index specs expanded) is
what run manifests store; loading a manifest reproduces the exact run.
"""

from __future__ import annotations

import json
from pathlib import Path

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .regressors import parse_index_spec
from .servo_sim import (
    ConfigError,
    EstimatorConfig,
    ExcitationConfig,
    FeedforwardConfig,
    LoopConfig,
    NrroSettings,
    RroSettings,
    StageConfig,
    validate,
)

__all__ = [
    "load_config",
    "config_from_dict",
    "config_to_dict",
    "apply_overrides",
]


def _require(data: dict, allowed: dict, section: str) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in [{section}]")


def _get(data: dict, key: str, kinds, default, section: str):
    if key not in data:
        if default is _REQUIRED:
            raise ConfigError(f"missing required key '{key}' in [{section}]")
        return default
    value = data[key]
    if kinds is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"key '{key}' in [{section}] must be a boolean")
        return value
    if kinds is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"key '{key}' in [{section}] must be an integer")
        return value
    if kinds is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"key '{key}' in [{section}] must be a number")
        return float(value)
    if kinds is str:
        if not isinstance(value, str):
            raise ConfigError(f"key '{key}' in [{section}] must be a string")
        return value
    if kinds is list:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"key '{key}' in [{section}] must be an array")
        return list(value)
    raise AssertionError(f"unhandled kind {kinds}")


_REQUIRED = object()


def _float_tuple(values, key: str, section: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in values)
    except (TypeError, ValueError):
        raise ConfigError(f"key '{key}' in [{section}] must be numbers") from None


def _parse_stage(data: dict, idx: int) -> StageConfig:
    section = f"stages[{idx}]"
    allowed = {
        "name": None,
        "plant_b": None,
        "plant_a_star": None,
        "harmonics": None,
        "estimator": None,
        "feedforward": None,
        "excitation": None,
    }
    _require(data, allowed, section)
    name = _get(data, "name", str, _REQUIRED, section)
    plant_b = _float_tuple(
        _get(data, "plant_b", list, _REQUIRED, section), "plant_b", section
    )
    plant_a_star = _float_tuple(
        _get(data, "plant_a_star", list, [], section), "plant_a_star", section
    )
    harmonics_raw = data.get("harmonics")
    if harmonics_raw is None:
        raise ConfigError(f"missing required key 'harmonics' in [{section}]")
    try:
        indices = parse_index_spec(harmonics_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad 'harmonics' in [{section}]: {exc}") from None

    est_data = data.get("estimator", {})
    est_section = f"{section}.estimator"
    if not isinstance(est_data, dict):
        raise ConfigError(f"[{est_section}] must be a table")
    _require(
        est_data,
        dict.fromkeys(
            ("n_a", "n_b", "k0", "decay", "floor", "theta0", "start_revolution")
        ),
        est_section,
    )
    theta0 = est_data.get("theta0")
    estimator = EstimatorConfig(
        n_a=_get(est_data, "n_a", int, 2, est_section),
        n_b=_get(est_data, "n_b", int, 2, est_section),
        k0=_get(est_data, "k0", float, 1.0, est_section),
        decay=_get(est_data, "decay", float, 0.0, est_section),
        floor=_get(est_data, "floor", float, 0.0, est_section),
        theta0=None
        if theta0 is None
        else _float_tuple(theta0, "theta0", est_section),
        start_revolution=_get(est_data, "start_revolution", float, 0.0, est_section),
    )

    ff_data = data.get("feedforward", {})
    ff_section = f"{section}.feedforward"
    if not isinstance(ff_data, dict):
        raise ConfigError(f"[{ff_section}] must be a table")
    _require(
        ff_data,
        dict.fromkeys(
            ("variant", "alpha", "smoothing_beta", "gain_scale", "adapt_revolutions")
        ),
        ff_section,
    )
    adapt = ff_data.get("adapt_revolutions")
    feedforward = FeedforwardConfig(
        variant=_get(ff_data, "variant", str, "improved", ff_section),
        alpha=_get(ff_data, "alpha", float, 0.01, ff_section),
        smoothing_beta=_get(ff_data, "smoothing_beta", float, 0.95, ff_section),
        gain_scale=_get(ff_data, "gain_scale", float, 1.0, ff_section),
        adapt_revolutions=None
        if adapt is None
        else _get(ff_data, "adapt_revolutions", float, None, ff_section),
    )

    exc_data = data.get("excitation", {})
    exc_section = f"{section}.excitation"
    if not isinstance(exc_data, dict):
        raise ConfigError(f"[{exc_section}] must be a table")
    _require(
        exc_data,
        dict.fromkeys(("sigma", "seed", "active_revolutions", "start_revolution")),
        exc_section,
    )
    active = exc_data.get("active_revolutions")
    excitation = ExcitationConfig(
        sigma=_get(exc_data, "sigma", float, 0.0, exc_section),
        seed=_get(exc_data, "seed", int, 0, exc_section),
        active_revolutions=None
        if active is None
        else _get(exc_data, "active_revolutions", float, None, exc_section),
        start_revolution=_get(exc_data, "start_revolution", float, 0.0, exc_section),
    )

    return StageConfig(
        name=name,
        plant_b=plant_b,
        plant_a_star=plant_a_star,
        harmonic_indices=indices,
        estimator=estimator,
        feedforward=feedforward,
        excitation=excitation,
    )


def config_from_dict(data: dict) -> LoopConfig:
    """Strictly parse a config dict; raises ConfigError naming bad fields."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a table")
    _require(data, dict.fromkeys(("run", "rro", "nrro", "stages")), "config root")

    run = data.get("run", {})
    if not isinstance(run, dict):
        raise ConfigError("[run] must be a table")
    _require(
        run,
        dict.fromkeys(
            (
                "samples_per_rev",
                "spindle_hz",
                "revolutions",
                "snapshot_stride",
                "analysis_revolutions",
                "check_update_bound",
            )
        ),
        "run",
    )

    rro = data.get("rro", {})
    if not isinstance(rro, dict):
        raise ConfigError("[rro] must be a table")
    _require(
        rro,
        dict.fromkeys(
            ("mode", "amplitude_scale", "decay_exponent", "seed", "csv_path")
        ),
        "rro",
    )
    rro_settings = RroSettings(
        mode=_get(rro, "mode", str, "random", "rro"),
        amplitude_scale=_get(rro, "amplitude_scale", float, 1.0, "rro"),
        decay_exponent=_get(rro, "decay_exponent", float, 1.0, "rro"),
        seed=_get(rro, "seed", int, 1, "rro"),
        csv_path=None
        if rro.get("csv_path") is None
        else _get(rro, "csv_path", str, None, "rro"),
    )

    nrro = data.get("nrro", {})
    if not isinstance(nrro, dict):
        raise ConfigError("[nrro] must be a table")
    _require(
        nrro,
        dict.fromkeys(("sigma", "seed", "shaping_b", "shaping_a_star")),
        "nrro",
    )
    shaping_b = nrro.get("shaping_b")
    shaping_a = nrro.get("shaping_a_star")
    nrro_settings = NrroSettings(
        sigma=_get(nrro, "sigma", float, 0.0, "nrro"),
        seed=_get(nrro, "seed", int, 2, "nrro"),
        shaping_b=None
        if shaping_b is None
        else _float_tuple(shaping_b, "shaping_b", "nrro"),
        shaping_a_star=None
        if shaping_a is None
        else _float_tuple(shaping_a, "shaping_a_star", "nrro"),
    )

    stages_data = data.get("stages", [])
    if not isinstance(stages_data, list) or not all(
        isinstance(s, dict) for s in stages_data
    ):
        raise ConfigError("[[stages]] must be an array of tables")
    stages = tuple(_parse_stage(s, i) for i, s in enumerate(stages_data))

    analysis_rev = run.get("analysis_revolutions")
    cfg = LoopConfig(
        samples_per_rev=_get(run, "samples_per_rev", int, 420, "run"),
        spindle_hz=_get(run, "spindle_hz", float, 120.0, "run"),
        revolutions=_get(run, "revolutions", int, 100, "run"),
        stages=stages,
        rro=rro_settings,
        nrro=nrro_settings,
        snapshot_stride=_get(run, "snapshot_stride", int, 420, "run"),
        check_update_bound=_get(run, "check_update_bound", bool, False, "run"),
        analysis_revolutions=None
        if analysis_rev is None
        else _get(run, "analysis_revolutions", int, None, "run"),
    )
    diags = validate(cfg)
    if diags:
        raise ConfigError("; ".join(diags))
    return cfg


def config_to_dict(cfg: LoopConfig) -> dict:
    """Fully resolved config (all defaults materialized), JSON-friendly."""
    return {
        "run": {
            "samples_per_rev": cfg.samples_per_rev,
            "spindle_hz": cfg.spindle_hz,
            "revolutions": cfg.revolutions,
            "snapshot_stride": cfg.snapshot_stride,
            "analysis_revolutions": cfg.analysis_revolutions,
            "check_update_bound": cfg.check_update_bound,
        },
        "rro": {
            "mode": cfg.rro.mode,
            "amplitude_scale": cfg.rro.amplitude_scale,
            "decay_exponent": cfg.rro.decay_exponent,
            "seed": cfg.rro.seed,
            "csv_path": cfg.rro.csv_path,
        },
        "nrro": {
            "sigma": cfg.nrro.sigma,
            "seed": cfg.nrro.seed,
            "shaping_b": None
            if cfg.nrro.shaping_b is None
            else list(cfg.nrro.shaping_b),
            "shaping_a_star": None
            if cfg.nrro.shaping_a_star is None
            else list(cfg.nrro.shaping_a_star),
        },
        "stages": [
            {
                "name": st.name,
                "plant_b": list(st.plant_b),
                "plant_a_star": list(st.plant_a_star),
                "harmonics": list(st.harmonic_indices),
                "estimator": {
                    "n_a": st.estimator.n_a,
                    "n_b": st.estimator.n_b,
                    "k0": st.estimator.k0,
                    "decay": st.estimator.decay,
                    "floor": st.estimator.floor,
                    "theta0": None
                    if st.estimator.theta0 is None
                    else list(st.estimator.theta0),
                },
                "feedforward": {
                    "variant": st.feedforward.variant,
                    "alpha": st.feedforward.alpha,
                    "smoothing_beta": st.feedforward.smoothing_beta,
                    "gain_scale": st.feedforward.gain_scale,
                    "adapt_revolutions": st.feedforward.adapt_revolutions,
                },
                "excitation": {
                    "sigma": st.excitation.sigma,
                    "seed": st.excitation.seed,
                    "active_revolutions": st.excitation.active_revolutions,
                },
            }
            for st in cfg.stages
        ],
    }


def load_config(path) -> LoopConfig:
    """Load a TOML config, a JSON config, or a run manifest."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    if p.suffix.lower() == ".json":
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"cannot parse JSON config {p}: {exc}") from None
        if isinstance(data, dict) and "config" in data and "run" not in data:
            data = data["config"]  # run manifest
    else:
        try:
            data = tomllib.loads(p.read_text())
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse TOML config {p}: {exc}") from None
    return config_from_dict(data)


def apply_overrides(
    cfg: LoopConfig,
    seed: int | None = None,
    revolutions: int | None = None,
    variant: str | None = None,
) -> LoopConfig:
    """Command-line overrides; seed reseeds every stream deterministically."""
    from dataclasses import replace

    if revolutions is not None:
        if revolutions < 1:
            raise ConfigError("revolutions override must be >= 1")
        cfg = replace(cfg, revolutions=revolutions)
    if variant is not None:
        if variant not in ("basic", "improved"):
            raise ConfigError(f"unknown variant {variant!r}")
        cfg = replace(
            cfg,
            stages=tuple(
                replace(st, feedforward=replace(st.feedforward, variant=variant))
                for st in cfg.stages
            ),
        )
    if seed is not None:
        cfg = replace(
            cfg,
            rro=replace(cfg.rro, seed=seed),
            nrro=replace(cfg.nrro, seed=seed + 1),
            stages=tuple(
                replace(st, excitation=replace(st.excitation, seed=seed + 10 + i))
                for i, st in enumerate(cfg.stages)
            ),
        )
    return cfg
