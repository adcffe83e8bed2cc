"""Fringe fitting, fidelity, quantum Fisher information and phase bounds.

The NOON fidelity witness is F = (C_P + P_N0 + P_0N) / 2 with C_P the parity
fringe contrast; F > 1/2 certifies genuine two-mode entanglement. The phase
sensitivity bound is the Cramer-Rao bound 1 / sqrt(F_Q) with

    F_Q = N^2 C_P^2 / (P_N0 + P_0N)

for the two-component density-matrix model, checked here against an exact
symmetric-logarithmic-derivative computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .hilbert import (
    DOWN,
    DensityMatrix,
    HilbertSpace,
    Operator,
    embed_motional,
    ladder,
    noon_state,
)
from .measure import ParityScan

PI = math.pi


# ---------------------------------------------------------------------------
# parity fringe fit


@dataclass(frozen=True)
class FringeFit:
    """A cos(k phi) + B sin(k phi) + C with contrast C_P = sqrt(A^2 + B^2)."""

    a: float
    b: float
    c: float
    k: float
    se_a: float = 0.0
    se_b: float = 0.0
    se_c: float = 0.0
    se_k: float = 0.0
    residual_norm: float = 0.0

    @property
    def c_p(self) -> float:
        return math.hypot(self.a, self.b)

    @property
    def se_c_p(self) -> float:
        cp = self.c_p
        if cp == 0.0:
            return math.hypot(self.se_a, self.se_b)
        return math.hypot(self.a * self.se_a, self.b * self.se_b) / cp


def fit_parity_fringe(scan: ParityScan, k_init: float) -> FringeFit:
    """Nonlinear least squares of the parity fringe over (A, B, C, k)."""
    phi, y = scan.phi, scan.values
    if phi.size < 8:
        raise ValueError(f"under-sampled scan: {phi.size} points (need >= 8)")
    if k_init <= 0:
        raise ValueError("k_init must be positive")
    span = float(phi.max() - phi.min())
    if span * k_init < 2.0 * PI * 0.99:
        raise ValueError(
            f"scan spans {span:.3f} rad, less than one expected period "
            f"{2 * PI / k_init:.3f} rad"
        )

    def linear_abc(k):
        design = np.column_stack([np.cos(k * phi), np.sin(k * phi), np.ones_like(phi)])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        return coef, design

    (a0, b0, c0), _ = linear_abc(k_init)

    def residuals(x):
        a, b, c, k = x
        return a * np.cos(k * phi) + b * np.sin(k * phi) + c - y

    sol = least_squares(residuals, [a0, b0, c0, k_init])
    if sol.status <= 0:
        raise RuntimeError(f"fringe fit did not converge: {sol.message}")
    a, b, c, k = sol.x
    if k < 0:  # cos is even: fold the sign into B
        k, b = -k, -b
    rnorm = float(np.linalg.norm(sol.fun))
    se = np.zeros(4)
    dof = phi.size - 4
    if dof > 0:
        try:
            cov = np.linalg.pinv(sol.jac.T @ sol.jac) * (rnorm ** 2 / dof)
            se = np.sqrt(np.maximum(np.diag(cov), 0.0))
        except np.linalg.LinAlgError:
            pass
    return FringeFit(float(a), float(b), float(c), float(k),
                     *(float(s) for s in se), residual_norm=rnorm)


# ---------------------------------------------------------------------------
# fidelity and QFI


def fidelity(c_p: float, p_n0: float, p_0n: float) -> float:
    """NOON fidelity F = (C_P + P_N0 + P_0N) / 2 from measured quantities."""
    for name, v in (("c_p", c_p), ("p_n0", p_n0), ("p_0n", p_0n)):
        if not 0.0 <= v <= 1.0 + 1e-9:
            raise ValueError(f"{name}={v} outside [0, 1]")
    return 0.5 * (c_p + p_n0 + p_0n)


def is_entangled_witness(f: float) -> bool:
    """F > 1/2 certifies genuine two-mode NOON-type entanglement."""
    return f > 0.5


def qfi_closed(n: int, c_p: float, p_sum: float) -> float:
    """Closed-form quantum Fisher information N^2 C_P^2 / (P_N0 + P_0N)."""
    if n < 1:
        raise ValueError("NOON number must be >= 1")
    if p_sum <= 0.0:
        raise ValueError("QFI undefined for vanishing NOON populations")
    return n * n * c_p * c_p / p_sum


def cramer_rao_bound(f_q: float) -> float:
    """Best possible phase precision 1 / sqrt(F_Q)."""
    if f_q <= 0.0:
        return math.inf
    return 1.0 / math.sqrt(f_q)


@dataclass(frozen=True)
class NoonDensityModel:
    """Two-population + single-coherence density-matrix model.

    rho = P_N0 |N,0><N,0| + P_0N |0,N><0,N|
        + coherence (e^{-i N phi} |N,0><0,N| + h.c.) + phi-independent rest.

    The eigendecomposition of the 2x2 block gives lambda_1 + lambda_2 =
    P_N0 + P_0N and |lambda_1 - lambda_2| sin(theta) = 2 coherence = C_P.
    """

    n: int
    p_n0: float
    p_0n: float
    coherence: float
    phi: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("NOON number must be >= 1")
        if self.p_n0 < 0 or self.p_0n < 0 or self.p_n0 + self.p_0n > 1.0 + 1e-12:
            raise ValueError("populations must be nonnegative with sum <= 1")
        if self.coherence < 0 or self.coherence > math.sqrt(self.p_n0 * self.p_0n) + 1e-12:
            raise ValueError("coherence violates positivity (|rho_off| <= sqrt(P1 P2))")

    @property
    def c_p(self) -> float:
        return 2.0 * self.coherence

    @property
    def p_sum(self) -> float:
        return self.p_n0 + self.p_0n

    @property
    def noise_weight(self) -> float:
        return 1.0 - self.p_sum

    def block_eigenvalues(self) -> tuple[float, float]:
        half_gap = math.hypot((self.p_n0 - self.p_0n) / 2.0, self.coherence)
        mean = self.p_sum / 2.0
        return mean + half_gap, mean - half_gap

    @property
    def mixing_angle(self) -> float:
        """theta of the block eigenvectors, sin(theta) = C_P / |l1 - l2|."""
        return math.atan2(2.0 * self.coherence, self.p_n0 - self.p_0n)

    def compact_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """(rho, d rho / d phi) on the basis {|N,0>, |0,N>, noise}."""
        z = self.coherence * np.exp(-1j * self.n * self.phi)
        rho = np.array([
            [self.p_n0, z, 0.0],
            [np.conj(z), self.p_0n, 0.0],
            [0.0, 0.0, self.noise_weight],
        ], dtype=complex)
        drho = np.zeros((3, 3), dtype=complex)
        drho[0, 1] = -1j * self.n * z
        drho[1, 0] = np.conj(drho[0, 1])
        return rho, drho

    def to_density_matrix(self, space: HilbertSpace) -> DensityMatrix:
        """Materialize on a full space; the noise weight sits on |down,0,0>."""
        dim = space.total_dim
        rho = np.zeros((dim, dim), dtype=complex)
        i = space.index(DOWN, self.n, 0)
        j = space.index(DOWN, 0, self.n)
        k = space.index(DOWN, 0, 0)
        z = self.coherence * np.exp(-1j * self.n * self.phi)
        rho[i, i] = self.p_n0
        rho[j, j] = self.p_0n
        rho[i, j] = z
        rho[j, i] = np.conj(z)
        rho[k, k] += self.noise_weight
        return DensityMatrix(space, rho)


def _qfi_from_spectral(rho: np.ndarray, drho: np.ndarray) -> float:
    """F_Q = Tr[rho A^2] with A_ij = 2 <i|drho|j> / (l_i + l_j) above cutoff."""
    w, v = np.linalg.eigh(rho)
    cutoff = 1e-12 * max(float(np.trace(rho).real), 1e-300)
    d = v.conj().T @ drho @ v
    lam_sum = w[:, None] + w[None, :]
    mask = lam_sum > cutoff
    terms = np.zeros_like(lam_sum)
    terms[mask] = 2.0 * (np.abs(d[mask]) ** 2) / lam_sum[mask]
    return float(terms.sum())


def qfi_sld(rho, n: int) -> float:
    """QFI via the symmetric logarithmic derivative.

    Accepts a NoonDensityModel or a DensityMatrix whose phase dependence is
    confined to the {|down,N,0>, |down,0,N>} coherence (the measurement
    model); d rho / d phi is built analytically with -+ i N factors on that
    coherence.
    """
    if isinstance(rho, NoonDensityModel):
        if rho.n != n:
            raise ValueError(f"model built for N={rho.n}, asked for N={n}")
        m, dm = rho.compact_matrices()
        return _qfi_from_spectral(m, dm)
    if isinstance(rho, DensityMatrix):
        space = rho.space
        i = space.index(DOWN, n, 0)
        j = space.index(DOWN, 0, n)
        m = rho.matrix
        dm = np.zeros_like(m)
        dm[i, j] = -1j * n * m[i, j]
        dm[j, i] = np.conj(dm[i, j])
        return _qfi_from_spectral(m, dm)
    raise TypeError(f"expected NoonDensityModel or DensityMatrix, got {type(rho)}")


# ---------------------------------------------------------------------------
# Schwinger angular momentum


def schwinger_ops(space: HilbertSpace) -> tuple[Operator, Operator, Operator]:
    """J_X, J_Y, J_Z of the two-mode Schwinger mapping (qubit untouched).

    On a fixed total-phonon subspace away from the truncation edge these
    satisfy [J_X, J_Y] = i J_Z; J_Z = (n_X - n_Y)/2 and |N,0> is the
    M = +N/2 extremal state.
    """
    ax = np.kron(ladder(space.d_x), np.eye(space.d_y))
    ay = np.kron(np.eye(space.d_x), ladder(space.d_y))
    cross = ax.conj().T @ ay
    jx = 0.5 * (cross + cross.conj().T)
    jy = (cross - cross.conj().T) / 2j
    jz = 0.5 * (ax.conj().T @ ax - ay.conj().T @ ay)
    return tuple(
        Operator(space, embed_motional(space, m), hermitian=True) for m in (jx, jy, jz)
    )


def fidelity_direct(rho: DensityMatrix, n: int, phi_s: float = 0.0) -> float:
    """<psi_NOON| rho |psi_NOON> evaluated on the materialized matrix."""
    psi = noon_state(rho.space, n, phi_s)
    return float(np.real(psi.amplitudes.conj() @ rho.matrix @ psi.amplitudes))


# ---------------------------------------------------------------------------
# report


@dataclass(frozen=True)
class MetrologyReport:
    n: int
    c_p: float
    c_p_err: float
    k: float
    k_err: float
    p_n0: float
    p_0n: float
    fidelity: float
    entangled: bool
    f_q: float
    cramer_rao_bound: float
    heisenberg_bound: float
    classical_bound: float
    classical_bound_renormalized: float

    @classmethod
    def build(cls, n: int, fringe: FringeFit, p_n0: float, p_0n: float) -> "MetrologyReport":
        c_p = min(fringe.c_p, 1.0)
        f = fidelity(c_p, p_n0, p_0n)
        p_sum = p_n0 + p_0n
        f_q = qfi_closed(n, c_p, p_sum) if p_sum > 0 else 0.0
        return cls(
            n=n,
            c_p=c_p,
            c_p_err=fringe.se_c_p,
            k=fringe.k,
            k_err=fringe.se_k,
            p_n0=p_n0,
            p_0n=p_0n,
            fidelity=f,
            entangled=is_entangled_witness(f),
            f_q=f_q,
            cramer_rao_bound=cramer_rao_bound(f_q),
            heisenberg_bound=1.0 / n,
            classical_bound=1.0 / math.sqrt(n),
            classical_bound_renormalized=(
                1.0 / math.sqrt(n * p_sum) if p_sum > 0 else math.inf
            ),
        )

    def to_json_dict(self) -> dict:
        return {
            "N": self.n,
            "C_P": self.c_p,
            "C_P_err": self.c_p_err,
            "k": self.k,
            "k_err": self.k_err,
            "P_N0": self.p_n0,
            "P_0N": self.p_0n,
            "fidelity": self.fidelity,
            "entangled": self.entangled,
            "F_Q": self.f_q,
            "cramer_rao_bound": self.cramer_rao_bound,
            "heisenberg_bound": self.heisenberg_bound,
            "classical_bound": self.classical_bound,
            "classical_bound_renormalized": self.classical_bound_renormalized,
        }
