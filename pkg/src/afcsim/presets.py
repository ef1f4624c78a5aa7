"""Shipped scenario presets.

All presets run at 420 samples per revolution with a 120 Hz spindle, so
harmonic index i sits at 120*i Hz and index 173 stays below Nyquist.
Plant coefficient arrays are explicit, stable, and scaled so the in-band
gain stays within about one decade; they are synthetic stand-ins for a
measured actuator-input-to-error transfer, not models of any real drive.

Seeds are fixed: rerunning a preset reproduces its outputs byte for byte.
"""

from __future__ import annotations

from .servo_sim import (
    EstimatorConfig,
    ExcitationConfig,
    FeedforwardConfig,
    LoopConfig,
    NrroSettings,
    RroSettings,
    StageConfig,
)

__all__ = ["PRESETS", "preset", "preset_names"]

# coarse actuator: mild resonance near bin 40, |R| ~ 1.4..2.2 over bins 1-58
_VCM_B = (0.6, 0.25, 0.08)
_VCM_A_STAR = (0.826239, -0.25)

# fine actuator: lightly damped second-order near bin 115, |R| ~ 0.6..1.5
_MA_B = (0.9, 0.35)
_MA_A_STAR = (-0.178851, -0.36)

# small first-order-pole plant for the focused cancellation scenarios
_SMALL_B = (0.9, 0.4)
_SMALL_A_STAR = (0.4,)

# second-order plant with a known double pole, for identification checks
_IDENT_B = (1.0, 0.5)
_IDENT_A_STAR = (1.2, -0.36)


def estimator_soundness() -> LoopConfig:
    """Pure identification: known second-order plant, white excitation,
    no runout, no noise."""
    stage = StageConfig(
        name="vcm",
        plant_b=_IDENT_B,
        plant_a_star=_IDENT_A_STAR,
        harmonic_indices=tuple(range(1, 11)),
        estimator=EstimatorConfig(n_a=2, n_b=2, k0=1.0, decay=0.0, floor=0.0),
        feedforward=FeedforwardConfig(variant="improved", alpha=0.0),
        excitation=ExcitationConfig(sigma=1.0, seed=101),
    )
    return LoopConfig(
        revolutions=100,
        stages=(stage,),
        rro=RroSettings(mode="none"),
        nrro=NrroSettings(sigma=0.0, seed=102),
    )


def rro_identification() -> LoopConfig:
    """Runout present, feedforward held at zero: the residual coefficients
    should converge to the filtered profile coefficients."""
    stage = StageConfig(
        name="vcm",
        plant_b=_IDENT_B,
        plant_a_star=_IDENT_A_STAR,
        harmonic_indices=tuple(range(1, 11)),
        estimator=EstimatorConfig(n_a=2, n_b=2, k0=1.0, decay=0.0, floor=0.0),
        feedforward=FeedforwardConfig(variant="improved", alpha=0.0),
        excitation=ExcitationConfig(sigma=1.0, seed=111),
    )
    return LoopConfig(
        revolutions=80,
        stages=(stage,),
        rro=RroSettings(mode="random", amplitude_scale=1.0, decay_exponent=1.0, seed=112),
        nrro=NrroSettings(sigma=0.0, seed=113),
    )


def single_harmonic_demo() -> LoopConfig:
    """Smallest end-to-end scenario: one harmonic, light noise floor."""
    stage = StageConfig(
        name="vcm",
        plant_b=_SMALL_B,
        plant_a_star=_SMALL_A_STAR,
        harmonic_indices=(1,),
        estimator=EstimatorConfig(n_a=1, n_b=2, k0=1.0, decay=2e-4, floor=0.05),
        feedforward=FeedforwardConfig(variant="improved", alpha=2e-4),
        excitation=ExcitationConfig(sigma=0.3, seed=121, active_revolutions=60),
    )
    return LoopConfig(
        revolutions=100,
        analysis_revolutions=10,
        stages=(stage,),
        rro=RroSettings(mode="random", amplitude_scale=1.0, seed=122),
        nrro=NrroSettings(sigma=0.02, seed=123),
    )


def ten_harmonic_demo() -> LoopConfig:
    """Noise-free cancellation benchmark over ten harmonics."""
    stage = StageConfig(
        name="vcm",
        plant_b=_SMALL_B,
        plant_a_star=_SMALL_A_STAR,
        harmonic_indices=tuple(range(1, 11)),
        estimator=EstimatorConfig(n_a=1, n_b=2, k0=1.0, decay=0.0, floor=0.0),
        feedforward=FeedforwardConfig(variant="improved", alpha=2e-4),
        excitation=ExcitationConfig(sigma=0.3, seed=131),
    )
    return LoopConfig(
        revolutions=200,
        analysis_revolutions=10,
        stages=(stage,),
        rro=RroSettings(mode="random", amplitude_scale=1.0, seed=132),
        nrro=NrroSettings(sigma=0.0, seed=133),
    )


def ten_harmonic_nrro() -> LoopConfig:
    """Ten harmonics over a broadband noise floor; excitation and gain
    wind down so the terminal window measures the settled loop."""
    stage = StageConfig(
        name="vcm",
        plant_b=_SMALL_B,
        plant_a_star=_SMALL_A_STAR,
        harmonic_indices=tuple(range(1, 11)),
        estimator=EstimatorConfig(n_a=1, n_b=2, k0=1.0, decay=1e-3, floor=0.05),
        feedforward=FeedforwardConfig(variant="improved", alpha=1e-4),
        excitation=ExcitationConfig(sigma=0.3, seed=141, active_revolutions=90),
    )
    return LoopConfig(
        revolutions=150,
        analysis_revolutions=10,
        stages=(stage,),
        rro=RroSettings(mode="random", amplitude_scale=1.0, seed=142),
        nrro=NrroSettings(sigma=0.05, seed=143),
    )


def dual_stage_173() -> LoopConfig:
    """Full-band dual-stage scenario: coarse stage cancels harmonics 1-58,
    fine stage 59-173, shared error signal, broadband floor."""
    vcm = StageConfig(
        name="vcm",
        plant_b=_VCM_B,
        plant_a_star=_VCM_A_STAR,
        harmonic_indices=tuple(range(1, 59)),
        estimator=EstimatorConfig(n_a=3, n_b=3, k0=1.0, decay=1e-3, floor=0.05),
        feedforward=FeedforwardConfig(variant="improved", alpha=2e-4),
        excitation=ExcitationConfig(sigma=0.3, seed=151, active_revolutions=180),
    )
    ma = StageConfig(
        name="ma",
        plant_b=_MA_B,
        plant_a_star=_MA_A_STAR,
        harmonic_indices=tuple(range(59, 174)),
        estimator=EstimatorConfig(n_a=2, n_b=2, k0=1.0, decay=1e-3, floor=0.05),
        feedforward=FeedforwardConfig(variant="improved", alpha=2e-4),
        excitation=ExcitationConfig(sigma=0.3, seed=152, active_revolutions=180),
    )
    return LoopConfig(
        revolutions=300,
        analysis_revolutions=10,
        stages=(vcm, ma),
        rro=RroSettings(mode="random", amplitude_scale=1.0, decay_exponent=1.0, seed=153),
        nrro=NrroSettings(sigma=0.05, seed=154),
    )


PRESETS = {
    "estimator_soundness": estimator_soundness,
    "rro_identification": rro_identification,
    "single_harmonic_demo": single_harmonic_demo,
    "ten_harmonic_demo": ten_harmonic_demo,
    "ten_harmonic_nrro": ten_harmonic_nrro,
    "dual_stage_173": dual_stage_173,
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def preset(name: str) -> LoopConfig:
    try:
        builder = PRESETS[name]
    except KeyError:
        raise KeyError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}"
        ) from None
    return builder()
