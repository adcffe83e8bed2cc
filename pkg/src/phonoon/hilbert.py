"""Composite Hilbert space of one qubit and two truncated harmonic modes.

Basis kets are |sigma, n_x, n_y> with sigma in {DOWN, UP}. The flat index
order is sigma-major, then n_x, then n_y:

    flat = sigma * (d_x * d_y) + n_x * d_y + n_y

and is fixed so that serialized states are portable bit-exactly. Everything
is dense complex128; the spaces stay small (total_dim <= ~10^3), so exact
linear algebra beats any sparse cleverness here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DOWN = 0
UP = 1

_SIGMA_NAMES = {"down": DOWN, "up": UP, "d": DOWN, "u": UP, "0": DOWN, "1": UP}


def _as_sigma(sigma) -> int:
    if isinstance(sigma, str):
        try:
            return _SIGMA_NAMES[sigma.lower()]
        except KeyError:
            raise ValueError(f"unknown qubit label {sigma!r}") from None
    sigma = int(sigma)
    if sigma not in (DOWN, UP):
        raise ValueError(f"qubit label must be 0 (down) or 1 (up), got {sigma}")
    return sigma


@dataclass(frozen=True)
class HilbertSpace:
    """Truncated qubit x Fock_X(d_x) x Fock_Y(d_y) space."""

    d_x: int
    d_y: int

    def __post_init__(self):
        if self.d_x < 1 or self.d_y < 1:
            raise ValueError(f"Fock truncations must be >= 1, got ({self.d_x}, {self.d_y})")

    @property
    def total_dim(self) -> int:
        return 2 * self.d_x * self.d_y

    @property
    def motional_dim(self) -> int:
        return self.d_x * self.d_y

    def index(self, sigma, n_x: int, n_y: int) -> int:
        """Flat index of |sigma, n_x, n_y> (sigma-major order)."""
        sigma = _as_sigma(sigma)
        if not (0 <= n_x < self.d_x and 0 <= n_y < self.d_y):
            raise ValueError(
                f"occupation ({n_x}, {n_y}) outside truncation ({self.d_x}, {self.d_y})"
            )
        return (sigma * self.d_x + n_x) * self.d_y + n_y

    def unindex(self, i: int) -> tuple[int, int, int]:
        """Inverse of :meth:`index`."""
        if not 0 <= i < self.total_dim:
            raise ValueError(f"flat index {i} outside dimension {self.total_dim}")
        i, n_y = divmod(i, self.d_y)
        sigma, n_x = divmod(i, self.d_x)
        return sigma, n_x, n_y

    def dim_of(self, mode: str) -> int:
        mode = mode.lower()
        if mode == "x":
            return self.d_x
        if mode == "y":
            return self.d_y
        raise ValueError(f"mode must be 'x' or 'y', got {mode!r}")


def make_space(d_x: int, d_y: int) -> HilbertSpace:
    """Build the composite space with the given Fock truncations."""
    return HilbertSpace(int(d_x), int(d_y))


def default_truncation(n: int) -> int:
    """Default Fock truncation for a target NOON number: n + 4.

    Intermediate generation states reach occupation n; the +4 margin covers
    shaped-pulse off-resonant leakage while keeping matrices small.
    """
    return int(n) + 4


def space_for_noon(n: int) -> HilbertSpace:
    d = default_truncation(n)
    return HilbertSpace(d, d)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StateVector:
    """Pure state: complex amplitudes in the fixed flat order."""

    space: HilbertSpace
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.space.total_dim,):
            raise ValueError(
                f"amplitude vector has shape {amps.shape}, expected ({self.space.total_dim},)"
            )
        object.__setattr__(self, "amplitudes", _readonly(amps.copy()))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        """Read-only view shaped (2, d_x, d_y)."""
        return self.amplitudes.reshape(2, self.space.d_x, self.space.d_y)

    def amplitude(self, sigma, n_x: int, n_y: int) -> complex:
        return complex(self.amplitudes[self.space.index(sigma, n_x, n_y)])

    def population(self, sigma, n_x: int, n_y: int) -> float:
        return abs(self.amplitude(sigma, n_x, n_y)) ** 2

    def overlap(self, other: "StateVector") -> complex:
        if other.space != self.space:
            raise ValueError("states live in different spaces")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.space, self.amplitudes / n)

    def to_json_dict(self) -> dict:
        return {
            "d_x": self.space.d_x,
            "d_y": self.space.d_y,
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "StateVector":
        space = make_space(d["d_x"], d["d_y"])
        amps = np.array([complex(re, im) for re, im in d["amplitudes"]])
        return cls(space, amps)


@dataclass(frozen=True)
class DensityMatrix:
    """Mixed state. Sub-normalized branches (trace < 1) are allowed."""

    space: HilbertSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        dim = self.space.total_dim
        if m.shape != (dim, dim):
            raise ValueError(f"density matrix has shape {m.shape}, expected ({dim}, {dim})")
        object.__setattr__(self, "matrix", _readonly(m.copy()))

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        return cls(state.space, np.outer(state.amplitudes, state.amplitudes.conj()))

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def validate(self, herm_tol: float = 1e-12, psd_tol: float = -1e-10) -> None:
        """Check hermiticity, trace in [0, 1] and positive semidefiniteness."""
        m = self.matrix
        scale = max(1.0, float(np.abs(m).max()))
        if np.abs(m - m.conj().T).max() > herm_tol * scale:
            raise ValueError("density matrix is not Hermitian")
        tr = self.trace
        if not -1e-10 <= tr <= 1.0 + 1e-10:
            raise ValueError(f"trace {tr} outside [0, 1]")
        ev = np.linalg.eigvalsh(m)
        if ev.min() < psd_tol:
            raise ValueError(f"negative eigenvalue {ev.min():.3e}")

    def qubit_block(self, sigma_row, sigma_col) -> np.ndarray:
        """Motional-space block <sigma_row| rho |sigma_col> (d_x*d_y square)."""
        md = self.space.motional_dim
        r, c = _as_sigma(sigma_row), _as_sigma(sigma_col)
        return self.matrix[r * md:(r + 1) * md, c * md:(c + 1) * md]


@dataclass(frozen=True)
class Operator:
    """Dense operator on the composite space."""

    space: HilbertSpace
    matrix: np.ndarray = field(repr=False)
    hermitian: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        dim = self.space.total_dim
        if m.shape != (dim, dim):
            raise ValueError(f"operator has shape {m.shape}, expected ({dim}, {dim})")
        object.__setattr__(self, "matrix", _readonly(m.copy()))

    def dagger(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T, hermitian=self.hermitian)

    def __matmul__(self, other: "Operator") -> "Operator":
        if other.space != self.space:
            raise ValueError("operators live in different spaces")
        return Operator(self.space, self.matrix @ other.matrix)

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max())


def basis_state(space: HilbertSpace, sigma, n_x: int, n_y: int) -> StateVector:
    """Computational basis ket |sigma, n_x, n_y>."""
    amps = np.zeros(space.total_dim, dtype=complex)
    amps[space.index(sigma, n_x, n_y)] = 1.0
    return StateVector(space, amps)


def noon_state(space: HilbertSpace, n: int, phi_s: float = 0.0, sigma=DOWN) -> StateVector:
    """(|n,0> + e^{i n phi_s} |0,n>)/sqrt(2) with the qubit in `sigma`."""
    if n < 1:
        raise ValueError("NOON number must be >= 1")
    amps = np.zeros(space.total_dim, dtype=complex)
    amps[space.index(sigma, n, 0)] = 1.0 / np.sqrt(2.0)
    amps[space.index(sigma, 0, n)] = np.exp(1j * n * phi_s) / np.sqrt(2.0)
    return StateVector(space, amps)


def ladder(d: int) -> np.ndarray:
    """Single-mode annihilation matrix, <n-1|a|n> = sqrt(n)."""
    return np.diag(np.sqrt(np.arange(1, d)), 1).astype(complex)


def embed_qubit(space: HilbertSpace, q: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(q, dtype=complex), np.eye(space.motional_dim))


def embed_mode(space: HilbertSpace, m: np.ndarray, mode: str) -> np.ndarray:
    mode = mode.lower()
    if mode == "x":
        mm = np.kron(m, np.eye(space.d_y))
    elif mode == "y":
        mm = np.kron(np.eye(space.d_x), m)
    else:
        raise ValueError(f"mode must be 'x' or 'y', got {mode!r}")
    return np.kron(np.eye(2), mm).astype(complex)


def embed_motional(space: HilbertSpace, m_xy: np.ndarray) -> np.ndarray:
    """Lift an operator on the Fock_X x Fock_Y factor to the full space."""
    md = space.motional_dim
    m_xy = np.asarray(m_xy, dtype=complex)
    if m_xy.shape != (md, md):
        raise ValueError(f"motional operator has shape {m_xy.shape}, expected ({md}, {md})")
    return np.kron(np.eye(2), m_xy)


def mode_operator(space: HilbertSpace, mode: str, kind: str) -> Operator:
    """Ladder or number operator of one motional mode on the full space."""
    d = space.dim_of(mode)
    a = ladder(d)
    kind = kind.lower()
    if kind == "lower":
        m, herm = a, False
    elif kind == "raise":
        m, herm = a.conj().T, False
    elif kind == "number":
        m, herm = np.diag(np.arange(d, dtype=float)).astype(complex), True
    else:
        raise ValueError(f"kind must be lower|raise|number, got {kind!r}")
    return Operator(space, embed_mode(space, m, mode), hermitian=herm)


def parity_operator(space: HilbertSpace, mode: str) -> Operator:
    """(-1)^n of one motional mode."""
    d = space.dim_of(mode)
    m = np.diag((-1.0) ** np.arange(d)).astype(complex)
    return Operator(space, embed_mode(space, m, mode), hermitian=True)


def expectation(state, op: Operator):
    """<psi|O|psi> or Tr[rho O].

    Returns a float when the operator is flagged Hermitian (the imaginary
    residual is checked against a 1e-10 tolerance), otherwise a complex.
    """
    if op.space != state.space:
        raise ValueError("state and operator live in different spaces")
    if isinstance(state, StateVector):
        val = complex(np.vdot(state.amplitudes, op.matrix @ state.amplitudes))
    elif isinstance(state, DensityMatrix):
        val = complex(np.sum(state.matrix * op.matrix.T))
    else:
        raise TypeError(f"expected StateVector or DensityMatrix, got {type(state)}")
    if op.hermitian:
        scale = max(1.0, abs(val))
        if abs(val.imag) > 1e-10 * scale:
            raise ValueError(
                f"imaginary residual {val.imag:.3e} too large for a Hermitian operator"
            )
        return val.real
    return val


def edge_population(state) -> float:
    """Total population on the two highest Fock levels of either mode.

    Truncation-leakage monitor: a NOON run is only trusted when this stays
    below 1e-8.
    """
    if isinstance(state, StateVector):
        p = np.abs(state.tensor()) ** 2
    elif isinstance(state, DensityMatrix):
        md = state.space.motional_dim
        diag = np.real(np.diagonal(state.matrix)).reshape(2, state.space.d_x, state.space.d_y)
        p = diag
    else:
        raise TypeError(f"expected StateVector or DensityMatrix, got {type(state)}")
    top_x = float(p[:, -2:, :].sum()) if state.space.d_x >= 2 else float(p.sum())
    top_y = float(p[:, :, -2:].sum()) if state.space.d_y >= 2 else float(p.sum())
    return max(top_x, top_y)


LEAKAGE_BOUND = 1e-8


def check_leakage(state, bound: float = LEAKAGE_BOUND) -> float:
    leak = edge_population(state)
    if leak >= bound:
        raise RuntimeError(
            f"truncation leakage {leak:.3e} exceeds {bound:.1e}; enlarge the Fock space"
        )
    return leak
