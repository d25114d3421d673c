"""
Coherent-state reduction of the driven dispersive qutrit-cavity system.

Each qutrit level ``a`` drags a coherent cavity field ``alpha_a``. The fields
obey damped, driven linear ODEs that are solved exactly; the qutrit
coherences ``c_ab`` pick up the complex rate ``i (chi_b - chi_a) alpha_a alpha_b^*``
and are integrated by quadrature.
"""
from typing import NamedTuple

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.special import gammaln

from .errors import TruncationError
from .params import PAIRS

__all__ = [
    "CavityAmplitudes",
    "CoherenceEnvelopes",
    "DephasingRates",
    "steady_state_amplitudes",
    "evolve_amplitudes",
    "amplitude_path",
    "evolve_coherences",
    "coherence_rates",
    "dephasing_rates",
    "steady_state_dephasing",
    "thermal_variance",
    "coherent_state",
    "coherent_overlap",
    "reconstruct_composite_state",
]


class CavityAmplitudes(NamedTuple):
    """Coherent amplitudes attached to g, e, f (scalars or equal-shape arrays)."""

    alpha_g: complex
    alpha_e: complex
    alpha_f: complex

    def as_array(self):
        """Stack to shape ``(..., 3)``."""
        return np.stack(np.broadcast_arrays(*self), axis=-1).astype(complex)

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=complex)
        return cls(arr[..., 0], arr[..., 1], arr[..., 2])

    def beta(self):
        """Pairwise differences ``(alpha_g - alpha_e, alpha_g - alpha_f, alpha_e - alpha_f)``."""
        a = self.as_array()
        return np.stack([a[..., i] - a[..., j] for i, j in PAIRS], axis=-1)


class CoherenceEnvelopes(NamedTuple):
    """Qutrit coherences ``c_ge, c_gf, c_ef``; the conjugates are implied."""

    c_ge: complex
    c_gf: complex
    c_ef: complex

    def as_array(self):
        return np.stack(np.broadcast_arrays(*self), axis=-1).astype(complex)

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=complex)
        return cls(arr[..., 0], arr[..., 1], arr[..., 2])


class DephasingRates(NamedTuple):
    gamma_d_ge: float
    gamma_d_gf: float
    gamma_d_ef: float
    gamma_m_ge: float
    gamma_m_gf: float
    gamma_m_ef: float

    @property
    def gamma_d(self):
        return np.stack(np.broadcast_arrays(*self[:3]), axis=-1)

    @property
    def gamma_m(self):
        return np.stack(np.broadcast_arrays(*self[3:]), axis=-1)


def _denominators(p):
    """Complex frequencies ``delta_rd + chi_a - i kappa/2`` for a = g, e, f."""
    return p.delta_rd + p.shifts - 0.5j * p.kappa


def steady_state_amplitudes(p):
    """
    Steady cavity amplitudes ``alpha_a = eps / (delta_rd + chi_a - i kappa/2)``.

    Raises
    ------
    ZeroDivisionError
        For a lossless cavity driven on a dressed resonance.
    """
    den = _denominators(p)
    if np.any(den == 0):
        raise ZeroDivisionError("resonant drive of a lossless cavity has no steady state")
    return CavityAmplitudes.from_array(p.epsilon / den)


def _as_amp_array(alpha0):
    if alpha0 is None:
        return np.zeros(3, dtype=complex)
    if isinstance(alpha0, CavityAmplitudes):
        return alpha0.as_array()
    return np.asarray(alpha0, dtype=complex).reshape(3)


def evolve_amplitudes(p, alpha0, t_grid):
    """
    Exact solution of ``d alpha_a/dt = -i(delta_rd + chi_a - i kappa/2) alpha_a + i eps``.

    Parameters
    ----------
    p : QutritCavityParams
    alpha0 : CavityAmplitudes or array_like or None
        Initial amplitudes; None means an empty cavity.
    t_grid : array_like
        Ascending times.

    Returns
    -------
    CavityAmplitudes
        Fields are arrays over `t_grid`.
    """
    t = np.asarray(t_grid, dtype=float)
    a0 = _as_amp_array(alpha0)
    lam = _denominators(p)
    x = -1j * np.multiply.outer(t, lam)
    # alpha_ss (1 - e^x) written with expm1; its lam -> 0 limit is i eps t
    with np.errstate(divide="ignore", invalid="ignore"):
        drive = np.where(lam != 0, -p.epsilon * np.expm1(x) / lam, 1j * p.epsilon * t[..., None])
    return CavityAmplitudes.from_array(a0 * np.exp(x) + drive)


def amplitude_path(p, alpha0=None, steady_state=False):
    """Return a callable ``t -> (..., 3)`` amplitude array along the deterministic path."""
    if steady_state:
        ss = steady_state_amplitudes(p).as_array()
        return lambda t: np.broadcast_to(ss, np.shape(t) + (3,))
    return lambda t: evolve_amplitudes(p, alpha0, np.atleast_1d(t)).as_array().reshape(np.shape(t) + (3,))


def coherence_rates(p, amps):
    """
    Measurement part of the coherence generator, ``i (chi_b - chi_a) alpha_a alpha_b^*``.

    Returns an array ``(..., 3)`` ordered (ge, gf, ef).
    """
    a = amps.as_array() if isinstance(amps, CavityAmplitudes) else np.asarray(amps)
    chi = p.shifts
    return np.stack(
        [1j * (chi[j] - chi[i]) * a[..., i] * np.conj(a[..., j]) for i, j in PAIRS], axis=-1
    )


def _bare_coherence_rates(p):
    """``i omega_ab - gamma_2,ab`` with gamma_2 from the Lindblad channels."""
    from .effective import intrinsic_coherence_decay

    E = p.level_energies
    omega = np.array([E[j] - E[i] for i, j in PAIRS])
    return 1j * omega - intrinsic_coherence_decay(p)


def evolve_coherences(p, amps, c0, t_grid):
    """
    Integrate the coherence envelopes along a supplied amplitude path.

    ``dc_ab/dt = [i omega_ab - gamma_2,ab + i (chi_b - chi_a) alpha_a alpha_b^*] c_ab``.
    The ODE is scalar and linear, so ``c(t) = c(0) exp(int K)``; the integral
    is evaluated with cumulative Simpson quadrature on `t_grid`.

    Parameters
    ----------
    p : QutritCavityParams
    amps : CavityAmplitudes
        Amplitudes sampled on `t_grid`.
    c0 : CoherenceEnvelopes or array_like
    t_grid : array_like

    Returns
    -------
    CoherenceEnvelopes
        Fields are arrays over `t_grid`.
    """
    t = np.asarray(t_grid, dtype=float)
    a = amps.as_array() if isinstance(amps, CavityAmplitudes) else np.asarray(amps)
    if a.shape != (t.size, 3):
        raise ValueError(f"amplitudes of shape {a.shape} do not match grid of length {t.size}")
    c0 = c0.as_array() if isinstance(c0, CoherenceEnvelopes) else np.asarray(c0, dtype=complex)
    K = coherence_rates(p, a) + _bare_coherence_rates(p)
    if t.size == 1:
        return CoherenceEnvelopes.from_array(c0[None, :] * np.ones((1, 3)))
    integral = (cumulative_simpson(K.real, x=t, axis=0, initial=0.0)
                + 1j * cumulative_simpson(K.imag, x=t, axis=0, initial=0.0))
    return CoherenceEnvelopes.from_array(c0 * np.exp(integral))


def dephasing_rates(amps, p):
    """
    Instantaneous measurement-induced rates.

    ``Gamma_d,ab = (chi_b - chi_a) Im(alpha_a alpha_b^*)`` (may be transiently
    negative) and ``Gamma_m,ab = kappa |alpha_a - alpha_b|^2`` (never negative).
    """
    a = amps.as_array() if isinstance(amps, CavityAmplitudes) else np.asarray(amps)
    chi = p.shifts
    gd = [(chi[j] - chi[i]) * np.imag(a[..., i] * np.conj(a[..., j])) for i, j in PAIRS]
    gm = [p.kappa * np.abs(a[..., i] - a[..., j]) ** 2 for i, j in PAIRS]
    return DephasingRates(*gd, *gm)


def steady_state_dephasing(p):
    """
    Closed-form steady-state rates,
    ``Gamma_m,ab = 2 Gamma_d,ab = kappa |eps|^2 (chi_b - chi_a)^2 / (D_a D_b)``
    with ``D_a = (delta_rd + chi_a)^2 + kappa^2 / 4``.
    """
    D = (p.delta_rd + p.shifts) ** 2 + 0.25 * p.kappa ** 2
    if np.any(D == 0):
        raise ZeroDivisionError("resonant drive of a lossless cavity has no steady state")
    chi = p.shifts
    e2 = abs(p.epsilon) ** 2
    gm = [p.kappa * e2 * (chi[j] - chi[i]) ** 2 / (D[i] * D[j]) for i, j in PAIRS]
    return DephasingRates(*(0.5 * g for g in gm), *gm)


def thermal_variance(N_bar, kappa, N0, t):
    """Solution ``N(t) = N_bar + (N0 - N_bar) exp(-kappa t)`` of ``dN/dt = -kappa (N - N_bar)``."""
    if N_bar < 0 or N0 < 0:
        raise ValueError("N_bar and N0 must be >= 0")
    return N_bar + (N0 - N_bar) * np.exp(-kappa * np.asarray(t, dtype=float))


def coherent_state(alpha, n_max):
    """Truncated Fock-basis vector of the coherent state ``|alpha>``."""
    n = np.arange(n_max)
    log_mag = -0.5 * abs(alpha) ** 2 - 0.5 * gammaln(n + 1)
    if alpha == 0:
        v = np.zeros(n_max, dtype=complex)
        v[0] = 1.0
        return v
    return np.exp(log_mag + n * np.log(complex(alpha)))


def coherent_overlap(alpha_b, alpha_a):
    """``<alpha_b|alpha_a> = exp(-(|alpha_a|^2 + |alpha_b|^2)/2 + alpha_b^* alpha_a)``."""
    return np.exp(-0.5 * (abs(alpha_a) ** 2 + abs(alpha_b) ** 2) + np.conj(alpha_b) * alpha_a)


def reconstruct_composite_state(populations, amps, envs, cfg, norm_tol=1e-6):
    """
    Rebuild the qutrit (x) cavity state from the reduced variables.

    ``rho = sum_a p_a |a><a| (x) |alpha_a><alpha_a|
    + sum_{a != b} c_ab / <alpha_b|alpha_a> |a><b| (x) |alpha_a><alpha_b|``.

    Parameters
    ----------
    populations : sequence of 3 floats
    amps : CavityAmplitudes
        Scalar amplitudes at one time.
    envs : CoherenceEnvelopes
        Scalar envelopes at the same time.
    cfg : FockConfig
    norm_tol : float
        Largest tolerated norm deficit of the truncated coherent vectors.

    Raises
    ------
    TruncationError
        If some ``|| |alpha_a> ||^2 < 1 - norm_tol`` in the truncated space.
    """
    pops = np.asarray(populations, dtype=float)
    if abs(pops.sum() - 1.0) > 1e-9:
        raise ValueError("populations must sum to 1")
    a = amps.as_array()
    c = envs.as_array()
    n = cfg.n_max
    vecs = [coherent_state(a[k], n) for k in range(3)]
    for k, v in enumerate(vecs):
        deficit = 1.0 - float(np.vdot(v, v).real)
        if deficit > norm_tol:
            raise TruncationError(
                f"coherent state {a[k]:.3g} loses {deficit:.2e} of its norm at n_max={n}"
            )
    rho = np.zeros((3 * n, 3 * n), dtype=complex)
    for k in range(3):
        rho[k * n:(k + 1) * n, k * n:(k + 1) * n] = pops[k] * np.outer(vecs[k], vecs[k].conj())
    for m, (i, j) in enumerate(PAIRS):
        ov = coherent_overlap(a[j], a[i])
        if ov == 0:
            raise ValueError("coherent states are numerically orthogonal")
        block = (c[m] / ov) * np.outer(vecs[i], vecs[j].conj())
        rho[i * n:(i + 1) * n, j * n:(j + 1) * n] = block
        rho[j * n:(j + 1) * n, i * n:(i + 1) * n] = block.conj().T
    return rho
