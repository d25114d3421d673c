"""
Effective qutrit master equation after elimination of the cavity.

Populations follow relaxation rate equations. Each coherence ``rho_ab``
(a < b) obeys its own scalar linear ODE

    d rho_ab / dt = [i omega_ab - gamma_2,ab + i (chi_b - chi_a) alpha_a alpha_b^*] rho_ab

where the last term carries the measurement-induced dephasing
``Gamma_d,ab = (chi_b - chi_a) Im(alpha_a alpha_b^*)`` and a Stark-like shift.
``gamma_2,ab`` collects the relaxation and pure-dephasing channels exactly as
the corresponding Lindblad dissipators act on that matrix element.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm

from .coherent import amplitude_path, coherence_rates
from .params import PAIRS

__all__ = [
    "EffectiveQutritModel",
    "StepPropagator",
    "population_rate_matrix",
    "intrinsic_coherence_decay",
    "evolve_populations",
    "effective_step",
    "evolve_effective_state",
    "to_compact",
    "from_compact",
]

# sigma_z,ab eigenvalues on (g, e, f) for ab = ge, gf, ef
_Z = np.array([[1.0, -1.0, 0.0], [1.0, 0.0, -1.0], [0.0, 1.0, -1.0]])


def population_rate_matrix(p):
    """Rate matrix ``R`` with ``dp/dt = R p`` for ``p = (p_g, p_e, p_f)``."""
    g_ge, g_gf, g_ef = p.gamma_1
    return np.array([
        [0.0, g_ge, g_gf],
        [0.0, -g_ge, g_ef],
        [0.0, 0.0, -(g_gf + g_ef)],
    ])


def intrinsic_coherence_decay(p):
    """
    Decay rates of ``rho_ge, rho_gf, rho_ef`` from relaxation and pure dephasing.

    Relaxation contributes half the total outgoing rate of both levels. The
    channel ``(gamma_phi,cd / 2) D[sigma_z,cd]`` damps ``rho_ab`` at
    ``gamma_phi,cd (z_a - z_b)^2 / 4``.
    """
    g_ge, g_gf, g_ef = p.gamma_1
    out_rate = np.array([0.0, g_ge, g_gf + g_ef])
    relax = np.array([0.5 * (out_rate[i] + out_rate[j]) for i, j in PAIRS])
    deph = np.zeros(3)
    for rate, z in zip(p.gamma_phi, _Z):
        deph += 0.25 * rate * np.array([(z[i] - z[j]) ** 2 for i, j in PAIRS])
    return relax + deph


def _check_populations(pops):
    pops = np.asarray(pops, dtype=float)
    if pops.shape != (3,) or np.any(pops < -1e-12) or abs(pops.sum() - 1.0) > 1e-9:
        raise ValueError(f"invalid populations {pops!r}: need three nonnegative values summing to 1")
    return pops


def evolve_populations(p, rho0_diag, t_grid):
    """
    Solve the relaxation rate equations with the matrix exponential.

    Parameters
    ----------
    p : QutritCavityParams
    rho0_diag : sequence of 3 floats
        Initial ``(p_g, p_e, p_f)``.
    t_grid : array_like

    Returns
    -------
    ndarray
        Shape ``(len(t_grid), 3)``.
    """
    pops = _check_populations(rho0_diag)
    R = population_rate_matrix(p)
    t = np.asarray(t_grid, dtype=float)
    out = np.array([expm(R * tk) @ pops for tk in t.ravel()])
    # columns of expm(R t) sum to one up to roundoff; fold the residue into p_g
    out[:, 0] = 1.0 - out[:, 1] - out[:, 2]
    return out.reshape(t.shape + (3,))


class StepPropagator(NamedTuple):
    """One step of the effective ME: population map and coherence multipliers."""

    pop: np.ndarray
    coh: np.ndarray


def to_compact(rho):
    """Split ``(..., 3, 3)`` states into populations ``(..., 3)`` and coherences ``(..., 3)``."""
    rho = np.asarray(rho)
    pops = np.real(np.stack([rho[..., k, k] for k in range(3)], axis=-1))
    coh = np.stack([rho[..., i, j] for i, j in PAIRS], axis=-1)
    return pops, coh


def from_compact(pops, coh):
    """Inverse of :func:`to_compact`, producing Hermitian matrices."""
    pops = np.asarray(pops)
    coh = np.asarray(coh)
    rho = np.zeros(pops.shape[:-1] + (3, 3), dtype=complex)
    for k in range(3):
        rho[..., k, k] = pops[..., k]
    for m, (i, j) in enumerate(PAIRS):
        rho[..., i, j] = coh[..., m]
        rho[..., j, i] = np.conj(coh[..., m])
    return rho


def apply_compact(pops, coh, prop):
    """Apply a :class:`StepPropagator` to compact states (elementwise, batch-stable)."""
    P = prop.pop
    new = np.stack([P[i, 0] * pops[..., 0] + P[i, 1] * pops[..., 1] + P[i, 2] * pops[..., 2]
                    for i in range(3)], axis=-1)
    return new, coh * prop.coh


def effective_step(rho, prop):
    """
    Advance 3x3 state(s) by one step of the effective ME.

    Parameters
    ----------
    rho : array_like
        State of shape ``(..., 3, 3)``.
    prop : StepPropagator
        From :meth:`EffectiveQutritModel.propagator`.
    """
    pops, coh = to_compact(rho)
    pops, coh = apply_compact(pops, coh, prop)
    return from_compact(pops, coh)


@dataclass(frozen=True)
class EffectiveQutritModel:
    """
    Effective qutrit master equation.

    Parameters
    ----------
    params : QutritCavityParams
    dephasing_source : {"instantaneous", "steady"}
        Use the transient amplitude path (from `alpha0`) or the steady-state
        amplitudes in the measurement term.
    alpha0 : array_like, optional
        Initial cavity amplitudes for the transient path; empty cavity by default.
    """

    params: object
    dephasing_source: str = "instantaneous"
    alpha0: object = None

    def __post_init__(self):
        if self.dephasing_source not in ("instantaneous", "steady"):
            raise ValueError("dephasing_source must be 'instantaneous' or 'steady'")

    @property
    def steady(self):
        return self.dephasing_source == "steady"

    def amplitudes(self, t):
        """Amplitude array ``(..., 3)`` at times `t`."""
        return amplitude_path(self.params, self.alpha0, self.steady)(np.asarray(t, dtype=float))

    def bare_rates(self):
        E = self.params.level_energies
        omega = np.array([E[j] - E[i] for i, j in PAIRS])
        return 1j * omega - intrinsic_coherence_decay(self.params)

    def coherence_generator(self, t):
        """Complex rates ``K_ab(t)`` of shape ``(..., 3)``."""
        return self.bare_rates() + coherence_rates(self.params, self.amplitudes(t))

    def coherence_factors(self, t0, dt):
        """
        ``exp(int_{t0}^{t0+dt} K)`` for each start time in `t0`, by Simpson's rule.

        The bare part is constant and integrated exactly.
        """
        t0 = np.asarray(t0, dtype=float)
        a = self.amplitudes(np.stack([t0, t0 + 0.5 * dt, t0 + dt], axis=-1))
        m = coherence_rates(self.params, a)
        integral = dt / 6.0 * (m[..., 0, :] + 4.0 * m[..., 1, :] + m[..., 2, :])
        return np.exp(self.bare_rates() * dt + integral)

    def population_propagator(self, dt):
        return expm(population_rate_matrix(self.params) * dt)

    def propagator(self, t0, dt):
        """:class:`StepPropagator` for the step ``[t0, t0 + dt]``."""
        return StepPropagator(self.population_propagator(dt), self.coherence_factors(t0, dt))

    def default_step(self):
        k = self.params.kappa
        return 1.0 / (50.0 * k) if k > 0 else np.inf


def evolve_effective_state(model, rho0, t_grid, max_step=None):
    """
    Integrate the effective ME on `t_grid`.

    Populations use the exact rate-matrix exponential; each coherence is
    multiplied by Simpson-rule exponentials over substeps no longer than
    `max_step` (default ``1/(50 kappa)``).

    Returns
    -------
    ndarray
        States of shape ``(len(t_grid), 3, 3)``.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly ascending from 0")
    rho0 = np.asarray(rho0, dtype=complex)
    pops0, coh = to_compact(rho0)
    _check_populations(pops0)
    max_step = model.default_step() if max_step is None else max_step
    R = population_rate_matrix(model.params)
    pops_t = np.array([expm(R * tk) @ pops0 for tk in t])
    pops_t[:, 0] = 1.0 - pops_t[:, 1] - pops_t[:, 2]
    coh_t = np.empty((t.size, 3), dtype=complex)
    coh_t[0] = coh
    for k in range(1, t.size):
        span = t[k] - t[k - 1]
        n = max(1, int(np.ceil(span / max_step - 1e-12)))
        h = span / n
        starts = t[k - 1] + h * np.arange(n)
        coh = coh * np.prod(model.coherence_factors(starts, h), axis=0)
        coh_t[k] = coh
    return from_compact(pops_t, coh_t)
