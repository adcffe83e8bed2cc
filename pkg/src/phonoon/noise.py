"""Phenomenological imperfection models.

Trap-frequency fluctuation is quasi-static: each shot draws one Gaussian
detuning per mode and evolves the whole pulse sequence coherently with it.
The detuning enters a sideband pulse exactly, as the generalized Rabi
rotation of each 2x2 pair plus the accumulated Fock-level phases, so no
integrator is needed for noisy runs of ideal-shape pulses.

Arithmetic-operation imperfection is an absorbing success channel: k
operations retain a fraction F_op^k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .hamiltonians import PAPER_SYSTEM, SystemConfig, apply_env_overrides, load_config_file
from .hilbert import DOWN, DensityMatrix, HilbertSpace, StateVector, basis_state, space_for_noon
from .pulses import Carrier, Composite, PulseSequence, Sideband, noon_sequence

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class NoiseConfig:
    """Imperfection parameters; defaults follow the demonstrated system."""

    sigma_trap: float = TWO_PI * 10e3   # std of quasi-static trap-frequency offset (rad/s)
    f_op: float = 1.0                   # arithmetic-operation success probability
    lam: float = 0.0                    # motional decay rate (1/s) for signal synthesis
    decay_exponent: float = 0.7
    seed: int = 1234

    def __post_init__(self):
        if self.sigma_trap < 0:
            raise ValueError("sigma_trap must be >= 0")
        if not 0.0 < self.f_op <= 1.0:
            raise ValueError("f_op must be in (0, 1]")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown noise config keys: {sorted(unknown)}")
        if "seed" in d:
            d = dict(d, seed=int(d["seed"]))
        return replace(cls(), **d)


def noise_from_file(path: str, environ=None) -> NoiseConfig:
    cfg = load_config_file(path)
    section = cfg.get("noise", {})
    return NoiseConfig.from_dict(apply_env_overrides("noise", section, environ))


def sample_detuning(cfg: NoiseConfig, rng: np.random.Generator) -> tuple[float, float]:
    """One quasi-static (delta_x, delta_y) draw; the generator advances."""
    d = cfg.sigma_trap * rng.standard_normal(2)
    return float(d[0]), float(d[1])


def op_success_channel(f_op: float, k_ops: int) -> float:
    """Retained fraction after k arithmetic operations: F_op ** k."""
    if k_ops < 0:
        raise ValueError("operation count must be >= 0")
    if not 0.0 < f_op <= 1.0:
        raise ValueError("f_op must be in (0, 1]")
    return f_op ** k_ops


# ---------------------------------------------------------------------------
# detuned exact pulse application


def _detuned_carrier(amp, theta, phi, duration, delta_x, delta_y):
    """Carrier rotation with the per-component detuning phases of both modes."""
    c = math.cos(theta / 2.0)
    s = math.sin(theta / 2.0)
    e = np.exp(1j * phi)
    low, high = amp[0], amp[1]
    amp[0] = c * low - 1j * s / e * high
    amp[1] = -1j * s * e * low + c * high
    nx = np.arange(amp.shape[1])[:, None]
    ny = np.arange(amp.shape[2])[None, :]
    amp *= np.exp(-1j * duration * (delta_x * nx + delta_y * ny))[None, :, :]
    return amp


def _detuned_sideband(amp, mode, theta, phi, ref_n, g_base, delta_x, delta_y):
    """Exact generalized-Rabi rotation of every pair under static detunings.

    The pair |down,n>, |up,n+1> of the driven mode sees the splitting delta
    of that mode (a blue sideband changes its occupation by exactly one);
    the common Fock-level phases of both modes are applied exactly.
    """
    duration = theta / (g_base * math.sqrt(ref_n + 1.0))
    if mode == "x":
        work = amp
        delta, delta_other = delta_x, delta_y
    else:
        work = amp.transpose(0, 2, 1)
        delta, delta_other = delta_y, delta_x
    d = work.shape[1]
    n = np.arange(d - 1, dtype=float)
    g_n = g_base * np.sqrt(n + 1.0)
    omega_eff = np.hypot(g_n, delta)
    half = omega_eff * duration / 2.0
    cos_h = np.cos(half)
    sin_h = np.sin(half)
    with np.errstate(invalid="ignore", divide="ignore"):
        dz = np.where(omega_eff > 0, delta / omega_eff, 0.0)
        gz = np.where(omega_eff > 0, g_n / omega_eff, 0.0)
    alpha = np.exp(1j * (phi + math.pi / 2.0))
    # U = [[C + i dz S, -i gz e^{-ia} S], [-i gz e^{ia} S, C - i dz S]],
    # times the mean-level phase e^{-i(d_low + delta/2) t}
    u00 = (cos_h + 1j * dz * sin_h)[:, None]
    u01 = (-1j * gz * sin_h)[:, None] / alpha
    u10 = (-1j * gz * sin_h)[:, None] * alpha
    u11 = (cos_h - 1j * dz * sin_h)[:, None]
    low = work[0, :-1, :]
    high = work[1, 1:, :]
    new_low = u00 * low + u01 * high
    new_high = u10 * low + u11 * high
    low_phase = delta * n + delta / 2.0
    work[0, :-1, :] = new_low * np.exp(-1j * duration * low_phase)[:, None]
    work[1, 1:, :] = new_high * np.exp(-1j * duration * low_phase)[:, None]
    # untouched edges still dephase: |up, 0> and |down, d-1>
    work[1, 0, :] *= 1.0
    work[0, -1, :] *= np.exp(-1j * duration * delta * (d - 1))
    # spectator-mode phases for every component
    m = np.arange(work.shape[2])
    work *= np.exp(-1j * duration * delta_other * m)[None, None, :]
    return amp


def apply_sequence_detuned(state: StateVector, seq: PulseSequence, sys_cfg: SystemConfig,
                           delta_x: float, delta_y: float) -> StateVector:
    """Evolve a sequence of ideal-shape pulses under static mode detunings."""
    amp = state.tensor().copy()
    for op in seq:
        if isinstance(op, Carrier):
            amp = _detuned_carrier(amp, op.theta, op.phi, op.theta / sys_cfg.rabi_c,
                                   delta_x, delta_y)
        elif isinstance(op, Sideband):
            amp = _detuned_sideband(amp, op.mode, op.theta, op.phi, op.ref_n,
                                    sys_cfg.sideband_rabi(op.mode), delta_x, delta_y)
        elif isinstance(op, Composite):
            for sb in op.expand():
                amp = _detuned_sideband(amp, sb.mode, sb.theta, sb.phi, sb.ref_n,
                                        sys_cfg.sideband_rabi(sb.mode), delta_x, delta_y)
        else:
            raise TypeError(f"noisy evolution supports ideal-shape pulses only, got {op!r}")
    return StateVector(state.space, amp.reshape(-1))


def noisy_generation(n: int, cfg: NoiseConfig, shots: int,
                     sys_cfg: SystemConfig = PAPER_SYSTEM,
                     space: HilbertSpace | None = None) -> DensityMatrix:
    """Shot-averaged density matrix of the compiled NOON sequence under
    quasi-static trap-frequency noise.

    Each shot draws one (delta_x, delta_y) pair from independent Gaussians of
    std sigma_trap and evolves the full sequence exactly. Shots use split
    RNG streams, so the result is independent of evaluation order.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if space is None:
        space = space_for_noon(n)
    seq = noon_sequence(n)
    start = basis_state(space, DOWN, 0, 0)
    rho = np.zeros((space.total_dim, space.total_dim), dtype=complex)
    for child in np.random.SeedSequence(cfg.seed).spawn(shots):
        rng = np.random.default_rng(child)
        dx, dy = sample_detuning(cfg, rng)
        psi = apply_sequence_detuned(start, seq, sys_cfg, dx, dy)
        rho += np.outer(psi.amplitudes, psi.amplitudes.conj())
    return DensityMatrix(space, rho / shots)
