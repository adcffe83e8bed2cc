"""Interaction-frame Hamiltonians for the carrier and sideband drives.

Conventions (hbar = 1, all frequencies angular):

    H_C = (Omega_c / 2) (e^{i phi} s+ + e^{-i phi} s-)
    H_M = (i eta_M Omega_M / 2) (e^{i phi} s+ aM+  -  e^{-i phi} s- aM),  M = X, Y

with s+ = |up><down|. The blue sideband couples |down,n> <-> |up,n+1> of one
mode with matrix-element magnitude eta_M Omega_M sqrt(n+1) / 2. Red-sideband
terms never appear in the protocol; they exist only in the off-resonant model
used to study pulse shaping.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, fields, replace

import numpy as np

from .hilbert import HilbertSpace, Operator, embed_qubit, embed_mode, ladder

TWO_PI = 2.0 * math.pi

# s+ and s- in the (down, up) basis ordering.
SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.conj().T


@dataclass(frozen=True)
class SystemConfig:
    """Trap, qubit and drive parameters (angular frequencies, rad/s).

    Defaults are the demonstrated system: radial modes at 2pi x 3.2 MHz and
    2pi x 2.6 MHz, Lamb-Dicke parameters 0.0538 / 0.0597, qubit splitting
    2pi x 12.6428 GHz. The Rabi frequencies are chosen so that both sideband
    couplings eta_M * rabi_M equal 2pi x 100 kHz (the matching condition the
    two-mode output drive requires).
    """

    omega_x: float = TWO_PI * 3.2e6
    omega_y: float = TWO_PI * 2.6e6
    omega_hf: float = TWO_PI * 12.6428e9
    eta_x: float = 0.0538
    eta_y: float = 0.0597
    rabi_c: float = TWO_PI * 1.0e5 / 0.0538
    rabi_x: float = TWO_PI * 1.0e5 / 0.0538
    rabi_y: float = TWO_PI * 1.0e5 / 0.0597

    def __post_init__(self):
        for name in ("eta_x", "eta_y"):
            eta = getattr(self, name)
            if not 0.0 < eta < 0.3:
                raise ValueError(f"{name}={eta} outside the Lamb-Dicke regime (0, 0.3)")
        if self.omega_x == self.omega_y:
            raise ValueError("the two modes must have distinct trap frequencies")
        for name in ("omega_x", "omega_y", "omega_hf", "rabi_c", "rabi_x", "rabi_y"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def mode_freq(self, mode: str) -> float:
        return self.omega_x if mode.lower() == "x" else self.omega_y

    def eta(self, mode: str) -> float:
        return self.eta_x if mode.lower() == "x" else self.eta_y

    def rabi(self, mode: str) -> float:
        return self.rabi_x if mode.lower() == "x" else self.rabi_y

    def sideband_rabi(self, mode: str) -> float:
        """Base blue-sideband coupling eta_M * Omega_M (the n=0 pair rate)."""
        return self.eta(mode) * self.rabi(mode)

    @property
    def output_rabi(self) -> float:
        """Omega_O = sqrt(2) eta_X Omega_X of the balanced two-mode drive."""
        return math.sqrt(2.0) * self.sideband_rabi("x")

    @classmethod
    def from_dict(cls, d: dict) -> "SystemConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown system config keys: {sorted(unknown)}")
        return replace(cls(), **d)


PAPER_SYSTEM = SystemConfig()


def load_config_file(path: str) -> dict:
    """Read a JSON or TOML config file into a plain dict."""
    with open(path, "rb") as f:
        raw = f.read()
    if path.endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        return tomllib.loads(raw.decode("utf-8"))
    return json.loads(raw.decode("utf-8"))


def apply_env_overrides(section: str, d: dict, environ=None) -> dict:
    """Apply PHONOON_<SECTION>_<FIELD> environment overrides to a config dict."""
    environ = os.environ if environ is None else environ
    prefix = f"PHONOON_{section.upper()}_"
    out = dict(d)
    for key, val in environ.items():
        if key.startswith(prefix):
            out[key[len(prefix):].lower()] = float(val)
    return out


def system_from_file(path: str, environ=None) -> SystemConfig:
    cfg = load_config_file(path)
    section = cfg.get("system", cfg if "omega_x" in cfg else {})
    return SystemConfig.from_dict(apply_env_overrides("system", section, environ))


@dataclass(frozen=True)
class HamiltonianTerm:
    """One rotating term of the interaction-frame Hamiltonian.

    The materialized operator is  c * e^{i detuning t} R + h.c.  where R is
    the raising part for `kind` and c folds the amplitude, the drive phase
    and the sideband factor i.
    """

    kind: str           # carrier | bsb_x | bsb_y | rsb_x | rsb_y
    amplitude: float    # full coupling prefactor (rad/s): Omega or eta*Omega
    phase: float = 0.0
    detuning: float = 0.0

    def __post_init__(self):
        if self.kind not in ("carrier", "bsb_x", "bsb_y", "rsb_x", "rsb_y"):
            raise ValueError(f"unknown term kind {self.kind!r}")

    def raising_matrix(self, space: HilbertSpace) -> np.ndarray:
        """Coefficient-weighted raising part c * R on the full space."""
        if self.kind == "carrier":
            base = embed_qubit(space, SIGMA_PLUS)
            coeff = 0.5 * self.amplitude * np.exp(1j * self.phase)
        else:
            mode = self.kind[-1]
            a = ladder(space.dim_of(mode))
            m = a.conj().T if self.kind.startswith("bsb") else a
            base = embed_qubit(space, SIGMA_PLUS) @ embed_mode(space, m, mode)
            coeff = 0.5j * self.amplitude * np.exp(1j * self.phase)
        return coeff * base

    def matrix_at(self, space: HilbertSpace, t: float) -> np.ndarray:
        r = self.raising_matrix(space) * np.exp(1j * self.detuning * t)
        return r + r.conj().T


def carrier_h(space: HilbertSpace, cfg: SystemConfig, phi: float = 0.0) -> Operator:
    """Carrier drive: qubit rotation, both Fock factors untouched."""
    m = HamiltonianTerm("carrier", cfg.rabi_c, phi).matrix_at(space, 0.0)
    return Operator(space, m, hermitian=True)


def sideband_h(space: HilbertSpace, cfg: SystemConfig, mode: str, phi: float = 0.0) -> Operator:
    """Blue sideband of one mode: couples |down,n> <-> |up,n+1> only."""
    mode = mode.lower()
    term = HamiltonianTerm(f"bsb_{mode}", cfg.sideband_rabi(mode), phi)
    return Operator(space, term.matrix_at(space, 0.0), hermitian=True)


OUTPUT_MATCH_RTOL = 1e-9


def output_drive_h(space: HilbertSpace, cfg: SystemConfig, phi: float = 0.0) -> Operator:
    """Simultaneous blue sideband of both modes (output-mode excitation).

    Requires the balance condition eta_x Omega_x = eta_y Omega_y; the result
    is (i Omega_O / 2)(s+ aO+ - s- aO) with aO = (aX + e^{-i phi} aY)/sqrt(2).
    """
    gx, gy = cfg.sideband_rabi("x"), cfg.sideband_rabi("y")
    if abs(gx - gy) > OUTPUT_MATCH_RTOL * max(gx, gy):
        raise ValueError(
            f"output drive needs eta_x*rabi_x == eta_y*rabi_y "
            f"(got {gx:.6e} vs {gy:.6e})"
        )
    m = (HamiltonianTerm("bsb_x", gx, 0.0).matrix_at(space, 0.0)
         + HamiltonianTerm("bsb_y", gy, phi).matrix_at(space, 0.0))
    return Operator(space, m, hermitian=True)


def offresonant_terms(cfg: SystemConfig, drive_freq_offset: float,
                      phi: float = 0.0) -> list[HamiltonianTerm]:
    """All first-order terms kept by a single drive, with their frame phases.

    `drive_freq_offset` is the drive frequency minus the carrier resonance.
    Each term's raising part rotates as e^{i detuning t}; driving on the
    blue sideband of X (offset = omega_x) makes that term static while the
    carrier rotates at -omega_x, the X red sideband at -2 omega_x, and the
    Y sidebands at omega_y -+ omega_x.
    """
    d = drive_freq_offset
    return [
        HamiltonianTerm("carrier", cfg.rabi_c, phi, -d),
        HamiltonianTerm("bsb_x", cfg.sideband_rabi("x"), phi, cfg.omega_x - d),
        HamiltonianTerm("rsb_x", cfg.sideband_rabi("x"), phi, -cfg.omega_x - d),
        HamiltonianTerm("bsb_y", cfg.sideband_rabi("y"), phi, cfg.omega_y - d),
        HamiltonianTerm("rsb_y", cfg.sideband_rabi("y"), phi, -cfg.omega_y - d),
    ]


def offresonant_h(space: HilbertSpace, cfg: SystemConfig, drive_freq_offset: float,
                  t: float, phi: float = 0.0) -> Operator:
    """Instantaneous off-resonant Hamiltonian (all terms, frame phases at t)."""
    terms = offresonant_terms(cfg, drive_freq_offset, phi)
    m = sum(term.matrix_at(space, t) for term in terms)
    return Operator(space, m, hermitian=True)


def genlaguerre1(n, x):
    """Generalized Laguerre polynomial L_n^1(x) by the three-term recurrence.

    Vectorized over x; the upward recurrence is stable for the small
    positive arguments (x = eta^2) used here.
    """
    n = int(n)
    if n < 0:
        raise ValueError("polynomial degree must be >= 0")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = 2.0 - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 2 - x) * cur - (k + 1) * prev) / (k + 1)
    return cur if cur.ndim else float(cur)


def laguerre_rabi(n: int, eta: float) -> float:
    """Fluorescence-model Rabi factor L_n^1(eta^2) / sqrt(n+1).

    As eta -> 0 this tends to sqrt(n+1), the ideal Lamb-Dicke scaling.
    """
    if n < 0:
        raise ValueError("Fock index must be >= 0")
    return float(genlaguerre1(n, eta * eta)) / math.sqrt(n + 1.0)
