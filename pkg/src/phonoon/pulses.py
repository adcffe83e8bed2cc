"""Pulse instructions, exact pulse application and the NOON-state compiler.

Angle convention: a sideband pulse R_M(theta, phi, n) rotates the reference
pair |down, n> <-> |up, n+1> by exactly theta; every other pair (m, m+1) of
the same mode rotates by theta * sqrt((m+1)/(n+1)). Carrier pulses rotate
all (|down, nx, ny>, |up, nx, ny>) pairs by theta. Rotations are applied as
exact 2x2 blocks; no integrator is involved, and no phases are discarded.

The composite pulse C_M(a, b) = R_M(pi/2, 0, a), R_M(pi, pi/2, b),
R_M(pi/2, 0, a) performs simultaneous exact pi-transfers on the a- and
b-pairs for any ratio of their Rabi frequencies.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .hilbert import DOWN, HilbertSpace, StateVector, basis_state

PI = math.pi


# ---------------------------------------------------------------------------
# pulse instructions


def _check_mode(mode: str) -> str:
    mode = mode.lower()
    if mode not in ("x", "y"):
        raise ValueError(f"mode must be 'x' or 'y', got {mode!r}")
    return mode


@dataclass(frozen=True)
class Carrier:
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if self.theta < 0:
            raise ValueError("rotation angle must be >= 0")


@dataclass(frozen=True)
class Sideband:
    mode: str
    theta: float
    phi: float = 0.0
    ref_n: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", _check_mode(self.mode))
        if self.theta < 0:
            raise ValueError("rotation angle must be >= 0")
        if self.ref_n < 0:
            raise ValueError("reference Fock index must be >= 0")


@dataclass(frozen=True)
class Composite:
    """Simultaneous pi-transfer on the a- and b-pairs of one mode."""

    mode: str
    a: int
    b: int

    def __post_init__(self):
        object.__setattr__(self, "mode", _check_mode(self.mode))
        if self.a < 0 or self.b < 0:
            raise ValueError("Fock indices must be >= 0")
        if self.a == self.b:
            raise ValueError("composite pulse needs a != b")

    def expand(self) -> tuple[Sideband, Sideband, Sideband]:
        return (
            Sideband(self.mode, PI / 2, 0.0, self.a),
            Sideband(self.mode, PI, PI / 2, self.b),
            Sideband(self.mode, PI / 2, 0.0, self.a),
        )


@dataclass(frozen=True)
class ShapedSideband:
    """Sine-envelope blue-sideband pulse, integrated in time.

    `duration` is in seconds; `amplitude` scales the nominal sideband
    coupling (amplitude 1 and duration pi / (eta_M Omega_M sqrt(ref_n+1))
    give a pi-pulse on the reference pair, the envelope area theorem).
    `stark_delta` is the phase-modulation coefficient compensating the
    AC-Stark shift.
    """

    mode: str
    duration: float
    amplitude: float = 1.0
    stark_delta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mode", _check_mode(self.mode))
        if self.duration <= 0:
            raise ValueError("pulse duration must be positive")


PulseOp = Carrier | Sideband | Composite | ShapedSideband


def primitive_count(op: PulseOp) -> int:
    return 3 if isinstance(op, Composite) else 1


@dataclass(frozen=True)
class PulseSequence:
    ops: tuple
    target_n: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))

    def __len__(self):
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    @property
    def primitive_pulse_count(self) -> int:
        """Number of primitive pulses (a composite counts as 3)."""
        return sum(primitive_count(op) for op in self.ops)


# ---------------------------------------------------------------------------
# exact application

def _rotated_pair(low, high, half_theta, phi):
    """Exact 2x2 sideband/carrier rotation on an amplitude pair.

    In the (low, high) basis the propagator of a resonant drive with
    coupling phase alpha is [[c, -i e^{-i a} s], [-i e^{i a} s, c]].
    """
    c = np.cos(half_theta)
    s = np.sin(half_theta)
    ephase = np.exp(1j * phi)
    new_low = c * low - 1j * s / ephase * high
    new_high = -1j * s * ephase * low + c * high
    return new_low, new_high


def apply_carrier(state: StateVector, theta: float, phi: float = 0.0) -> StateVector:
    """Carrier rotation by theta on every (down, up) pair."""
    amp = state.tensor().copy()
    # <up|H_C|down> = (Omega/2) e^{i phi}: coupling phase is phi itself.
    amp[0], amp[1] = _rotated_pair(amp[0], amp[1], theta / 2.0, phi)
    return StateVector(state.space, amp.reshape(-1))


def _pair_slices(amp: np.ndarray, mode: str):
    """(low, high) slabs of the blue-sideband pairs and the broadcast shape."""
    if mode == "x":
        low = amp[0, :-1, :]
        high = amp[1, 1:, :]
        shape = (-1, 1)
    else:
        low = amp[0, :, :-1]
        high = amp[1, :, 1:]
        shape = (1, -1)
    return low, high, shape


def apply_sideband(state: StateVector, mode: str, theta: float, phi: float = 0.0,
                   ref_n: int = 0) -> StateVector:
    """Blue-sideband rotation, angle theta on the reference pair.

    Pair m rotates by theta * sqrt((m+1)/(ref_n+1)). The topmost down level
    |down, d-1> has no partner inside the truncation and is left untouched
    (it is dark in the truncated Hamiltonian as well); the leakage monitor
    guards against ever populating it.
    """
    mode = _check_mode(mode)
    d = state.space.dim_of(mode)
    if ref_n + 1 >= d:
        raise ValueError(
            f"reference pair ({ref_n}, {ref_n + 1}) exceeds mode {mode} truncation {d}"
        )
    amp = state.tensor().copy()
    low, high, bshape = _pair_slices(amp, mode)
    m = np.arange(d - 1, dtype=float)
    half = (theta / 2.0) * np.sqrt((m + 1.0) / (ref_n + 1.0))
    # <up,n+1|H_M|down,n> = (g_n/2) e^{i(phi + pi/2)}: sideband coupling
    # phase is offset by pi/2 relative to the drive phase.
    new_low, new_high = _rotated_pair(low, high, half.reshape(bshape), phi + PI / 2)
    low[...] = new_low
    high[...] = new_high
    return StateVector(state.space, amp.reshape(-1))


def composite(state: StateVector, mode: str, a: int, b: int) -> StateVector:
    """Apply C_M(a, b); exact pi-transfer on both targeted pairs."""
    op = Composite(mode, a, b)
    d = state.space.dim_of(op.mode)
    if max(a, b) + 1 >= d:
        raise ValueError(f"composite pair ({a}, {b}) exceeds mode {mode} truncation {d}")
    for sb in op.expand():
        state = apply_sideband(state, sb.mode, sb.theta, sb.phi, sb.ref_n)
    return state


def apply_op(state: StateVector, op: PulseOp, *, cfg=None, tol: float = 1e-10) -> StateVector:
    if isinstance(op, Carrier):
        return apply_carrier(state, op.theta, op.phi)
    if isinstance(op, Sideband):
        return apply_sideband(state, op.mode, op.theta, op.phi, op.ref_n)
    if isinstance(op, Composite):
        return composite(state, op.mode, op.a, op.b)
    if isinstance(op, ShapedSideband):
        return _apply_shaped(state, op, cfg, tol)
    raise TypeError(f"unknown pulse op {op!r}")


def _apply_shaped(state, op: ShapedSideband, cfg, tol):
    if cfg is None:
        raise ValueError("shaped pulses need a SystemConfig (pass cfg=...)")
    from .evolve import evolve_timedep          # deferred: avoid import cycle
    from .hamiltonians import HamiltonianTerm

    g = cfg.sideband_rabi(op.mode)
    term = HamiltonianTerm(f"bsb_{op.mode}", g * op.amplitude, op.phi)

    def env(t, T=op.duration, delta=op.stark_delta):
        mod = (PI * PI * delta / 8.0) * (2.0 * PI * t - T * math.sin(2.0 * PI * t / T))
        return (PI / 2.0) * math.sin(PI * t / T) * np.exp(1j * mod)

    result = evolve_timedep(state, [(term, env)], op.duration, tol=tol)
    return result.state


def apply_sequence(state: StateVector, seq, *, cfg=None, tol: float = 1e-10,
                   on_step=None) -> StateVector:
    """Apply a sequence left to right; errors carry the offending step index."""
    ops = seq.ops if isinstance(seq, PulseSequence) else tuple(seq)
    for i, op in enumerate(ops):
        try:
            state = apply_op(state, op, cfg=cfg, tol=tol)
        except ValueError as exc:
            raise ValueError(f"step {i + 1} ({op!r}): {exc}") from exc
        if on_step is not None:
            on_step(i, op, state)
    return state


# ---------------------------------------------------------------------------
# NOON compiler


def noon_sequence(n: int) -> PulseSequence:
    """Pulse schedule driving |down,0,0> to the N-phonon NOON state.

    Preparation walks to |down, kx, ky> with kx = floor((N-1)/2) and
    ky = floor(N/2) by alternating sideband and carrier pi-pulses (X ladder
    first), then the composite-pulse stage splits and grows the two branches,
    closing with the odd-N or even-N ending. Expands to exactly 5N - 2
    primitive pulses.
    """
    if n < 1:
        raise ValueError("NOON number must be >= 1")
    k_x = (n - 1) // 2
    k_y = n // 2
    ops: list[PulseOp] = []
    for m in range(k_x):
        ops.append(Sideband("x", PI, 0.0, m))
        ops.append(Carrier(PI, 0.0))
    for m in range(k_y):
        ops.append(Sideband("y", PI, 0.0, m))
        ops.append(Carrier(PI, 0.0))
    ops.append(Sideband("x", PI / 2, 0.0, k_x))
    for j in range(1, k_x + 1):
        ops.append(Composite("y", k_y - j, k_y + j - 1))
        ops.append(Composite("x", k_x + j, k_x - j))
    if n % 2 == 1:
        ops.append(Sideband("y", PI, 0.0, n - 1))
        ops.append(Carrier(PI, 0.0))
    else:
        ops.append(Composite("y", 0, n - 1))
        ops.append(Sideband("x", PI, 0.0, n - 1))
        ops.append(Carrier(PI, 0.0))
    seq = PulseSequence(tuple(ops), target_n=n, meta={"expected_pulses": 5 * n - 2})
    assert seq.primitive_pulse_count == 5 * n - 2
    return seq


def generate_noon(n: int, space: HilbertSpace | None = None,
                  check: bool = True) -> StateVector:
    """Run the compiled sequence from |down,0,0> and return the final state."""
    from .hilbert import check_leakage, space_for_noon

    if space is None:
        space = space_for_noon(n)
    state = apply_sequence(basis_state(space, DOWN, 0, 0), noon_sequence(n))
    if check:
        check_leakage(state)
    return state


def noon_fidelity(state: StateVector, n: int) -> float:
    """Best overlap with (|n,0> + e^{i n phi_s}|0,n>)/sqrt(2) over phi_s."""
    c1 = state.amplitude(DOWN, n, 0)
    c2 = state.amplitude(DOWN, 0, n)
    return (abs(c1) + abs(c2)) ** 2 / 2.0


def noon_phase(state: StateVector, n: int) -> float:
    """Generated-state phase phi_s, reduced to [0, 2 pi / n).

    phi_s only enters through e^{i n phi_s}, so it is defined modulo 2 pi/n.
    """
    c1 = state.amplitude(DOWN, n, 0)
    c2 = state.amplitude(DOWN, 0, n)
    if abs(c1) == 0 or abs(c2) == 0:
        raise ValueError("state has no support on both NOON components")
    period = 2.0 * PI / n
    return (np.angle(c2 / c1) / n) % period


# ---------------------------------------------------------------------------
# shaped envelope field


def shaped_envelope(t, T: float, A: float, delta: float, omega: float,
                    phi: float = 0.0):
    """Sine-envelope drive field at time t (zero outside [0, T]).

    E(t) = (pi A / 2) sin(pi t / T)
           * sin[omega t + (pi^2 delta / 8)(2 pi t - T sin(2 pi t / T)) + phi]

    The envelope area over [0, T] equals A * T, so a shaped pulse keeps the
    rotation angle of the rectangular pulse it replaces.
    """
    t = np.asarray(t, dtype=float)
    inside = (t >= 0.0) & (t <= T)
    envelope = (PI * A / 2.0) * np.sin(PI * t / T)
    phase = omega * t + (PI * PI * delta / 8.0) * (2.0 * PI * t - T * np.sin(2.0 * PI * t / T)) + phi
    out = np.where(inside, envelope * np.sin(phase), 0.0)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# sequence DSL
#
# Line-oriented grammar, one instruction per line, '#' comments:
#
#   car <theta> <phi>
#   bsb <X|Y> <theta> <phi> <ref_n>
#   comp <X|Y> <a> <b>
#   shaped <X|Y> <T> <A> <delta> <phi>
#
# Angles accept pi-literals: "pi", "0.5pi", "-1.5pi", or plain numbers
# (radians).


class SequenceError(ValueError):
    """Parse error with 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


_PI_LITERAL = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?pi$")


def parse_angle(token: str) -> float:
    """Parse an angle token: radians, or a pi-literal like '0.5pi'."""
    m = _PI_LITERAL.match(token)
    if m:
        factor = float(m.group(1)) if m.group(1) else 1.0
        return factor * PI
    return float(token)


def _format_angle(value: float) -> str:
    ratio = value / PI
    return f"{ratio:.6g}pi"


def _parse_int(token: str, what: str, line: int, col: int) -> int:
    try:
        val = int(token)
    except ValueError:
        raise SequenceError(f"{what} must be an integer, got {token!r}", line, col) from None
    return val


def _parse_float(token: str, what: str, line: int, col: int, angle: bool = False) -> float:
    try:
        return parse_angle(token) if angle else float(token)
    except ValueError:
        raise SequenceError(f"{what} must be a number, got {token!r}", line, col) from None


def parse_sequence(text: str) -> PulseSequence:
    """Parse the line-oriented pulse DSL into a validated sequence."""
    ops: list[PulseOp] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        tokens = [(m.group(0), m.start() + 1) for m in re.finditer(r"\S+", line)]
        (word, col0), args = tokens[0], tokens[1:]
        word = word.lower()

        def arity(n):
            if len(args) != n:
                at = args[n][1] if len(args) > n else len(raw) + 1
                raise SequenceError(
                    f"'{word}' takes {n} arguments, got {len(args)}", lineno, at
                )

        try:
            if word == "car":
                arity(2)
                theta = _parse_float(args[0][0], "theta", lineno, args[0][1], angle=True)
                phi = _parse_float(args[1][0], "phi", lineno, args[1][1], angle=True)
                ops.append(Carrier(theta, phi))
            elif word == "bsb":
                arity(4)
                mode = args[0][0]
                theta = _parse_float(args[1][0], "theta", lineno, args[1][1], angle=True)
                phi = _parse_float(args[2][0], "phi", lineno, args[2][1], angle=True)
                ref_n = _parse_int(args[3][0], "ref_n", lineno, args[3][1])
                ops.append(Sideband(mode, theta, phi, ref_n))
            elif word == "comp":
                arity(3)
                mode = args[0][0]
                a = _parse_int(args[1][0], "a", lineno, args[1][1])
                b = _parse_int(args[2][0], "b", lineno, args[2][1])
                ops.append(Composite(mode, a, b))
            elif word == "shaped":
                arity(5)
                mode = args[0][0]
                dur = _parse_float(args[1][0], "duration", lineno, args[1][1])
                amp = _parse_float(args[2][0], "amplitude", lineno, args[2][1])
                delta = _parse_float(args[3][0], "delta", lineno, args[3][1])
                phi = _parse_float(args[4][0], "phi", lineno, args[4][1], angle=True)
                ops.append(ShapedSideband(mode, dur, amp, delta, phi))
            else:
                raise SequenceError(f"unknown instruction {word!r}", lineno, col0)
        except SequenceError:
            raise
        except ValueError as exc:
            raise SequenceError(str(exc), lineno, col0) from exc
    return PulseSequence(tuple(ops))


def format_sequence(seq: PulseSequence) -> str:
    """Canonical text form: lowercase keywords, pi-literal angles."""
    lines = []
    for op in seq.ops:
        if isinstance(op, Carrier):
            lines.append(f"car {_format_angle(op.theta)} {_format_angle(op.phi)}")
        elif isinstance(op, Sideband):
            lines.append(
                f"bsb {op.mode} {_format_angle(op.theta)} {_format_angle(op.phi)} {op.ref_n}"
            )
        elif isinstance(op, Composite):
            lines.append(f"comp {op.mode} {op.a} {op.b}")
        elif isinstance(op, ShapedSideband):
            lines.append(
                f"shaped {op.mode} {op.duration:.17g} {op.amplitude:.17g} "
                f"{op.stark_delta:.17g} {_format_angle(op.phi)}"
            )
        else:
            raise TypeError(f"unknown pulse op {op!r}")
    return "\n".join(lines) + "\n"
