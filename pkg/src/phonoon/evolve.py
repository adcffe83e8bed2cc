"""Propagators: exact constant-Hamiltonian evolution and an adaptive
integrator for time-dependent (shaped / off-resonant) dynamics.

The constant path uses a Hermitian eigendecomposition, so protocol-level
results carry no integrator error. The time-dependent path wraps an
embedded adaptive Runge-Kutta scheme (DOP853, order 8, PI step control);
the contract is the tolerance, not the scheme.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .hilbert import Operator, StateVector

NORM_DRIFT_BOUND = 1e-9


@dataclass(frozen=True)
class PropagatorResult:
    state: StateVector
    norm_drift: float
    step_count: int = 0
    error_estimate: float = 0.0


def _check_hermitian(h: Operator):
    scale = max(1.0, float(np.abs(h.matrix).max()))
    defect = h.hermiticity_defect()
    if defect > 1e-12 * scale:
        raise ValueError(f"Hamiltonian is not Hermitian (defect {defect:.3e})")


class HermitianPropagator:
    """Reusable exp(-i H t) for a fixed Hermitian H (eigendecomposed once)."""

    def __init__(self, h: Operator):
        _check_hermitian(h)
        self.space = h.space
        self._w, self._v = np.linalg.eigh(h.matrix)

    def matrix(self, t: float) -> np.ndarray:
        phases = np.exp(-1j * self._w * t)
        return (self._v * phases) @ self._v.conj().T

    def apply(self, state: StateVector, t: float) -> StateVector:
        if state.space != self.space:
            raise ValueError("state and propagator live in different spaces")
        coeffs = self._v.conj().T @ state.amplitudes
        coeffs *= np.exp(-1j * self._w * t)
        return StateVector(self.space, self._v @ coeffs)

    def apply_many(self, state: StateVector, times) -> np.ndarray:
        """Amplitudes for each t in `times`, shape (len(times), dim)."""
        coeffs = self._v.conj().T @ state.amplitudes
        phases = np.exp(-1j * np.outer(np.asarray(times, dtype=float), self._w))
        return (phases * coeffs) @ self._v.T


def evolve_const(state: StateVector, h: Operator, t: float) -> StateVector:
    """Exact evolution exp(-i H t)|psi> via eigendecomposition."""
    return HermitianPropagator(h).apply(state, t)


def evolve_timedep(state: StateVector, terms, total_time: float,
                   tol: float = 1e-10, max_step_count: int = 2_000_000) -> PropagatorResult:
    """Integrate the Schroedinger equation for a sum of rotating terms.

    `terms` is a list of (HamiltonianTerm, envelope) pairs; envelope is a
    callable of t (None means constant 1) and may be complex-valued, which
    phase-modulates the drive. The instantaneous Hamiltonian is

        H(t) = sum_k env_k(t) e^{i delta_k t} c_k R_k + h.c.

    Unitarity is restored by renormalization only when the norm drift stays
    below 1e-9; larger drift raises.
    """
    if total_time <= 0:
        raise ValueError("total_time must be positive")
    space = state.space
    raising = []
    lowering = []
    envelopes = []
    detunings = []
    for term, env in terms:
        r = term.raising_matrix(space)
        raising.append(r)
        lowering.append(r.conj().T)
        envelopes.append(env)
        detunings.append(term.detuning)
    raising = np.stack(raising)
    lowering = np.stack(lowering)
    detunings = np.asarray(detunings)

    def rhs(t, y):
        z = np.exp(1j * detunings * t)
        for k, env in enumerate(envelopes):
            if env is not None:
                z[k] *= env(t)
        h = np.tensordot(z, raising, axes=1) + np.tensordot(z.conj(), lowering, axes=1)
        return -1j * (h @ y)

    sol = solve_ivp(
        rhs, (0.0, total_time), state.amplitudes.astype(complex),
        method="DOP853", rtol=tol, atol=tol * 1e-2, dense_output=False,
    )
    if not sol.success:
        raise RuntimeError(f"integrator failed: {sol.message}")
    if sol.t.size > max_step_count:
        raise RuntimeError("step-size underflow: too many integrator steps")
    y = sol.y[:, -1]
    norm = float(np.linalg.norm(y))
    drift = abs(norm - state.norm)
    if drift > NORM_DRIFT_BOUND:
        raise RuntimeError(
            f"norm drift {drift:.3e} exceeds {NORM_DRIFT_BOUND:.1e}; tighten tol"
        )
    final = StateVector(space, y * (state.norm / norm))
    return PropagatorResult(final, drift, step_count=int(sol.t.size) - 1,
                            error_estimate=drift)
