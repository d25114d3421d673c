"""
Dispersive qubit readout with homodyne detection.

The qubit is measured along ``sigma_z = |g><g| - |e><e|`` at strength
``k_m = kappa n_bar sin^2(phi_chi)`` with ``phi_chi = arctan(kappa / 2 chi)``.
Efficiency is 1 throughout this module.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import StepGuardError
from .rng import trajectory_generator

__all__ = [
    "HomodyneConfig",
    "measurement_strength",
    "kraus_update",
    "outcome_density",
    "sme_step",
    "record_step",
    "bloch_step",
    "bloch_from_state",
    "state_from_bloch",
    "unconditioned_state",
    "run_kraus_chain",
    "run_sme",
]

SZ = np.diag([1.0, -1.0]).astype(complex)


def measurement_strength(chi, kappa, n_bar):
    """``k_m = kappa n_bar sin^2(arctan(kappa / 2 chi))``."""
    phi = np.arctan2(kappa, 2.0 * chi)
    return kappa * n_bar * np.sin(phi) ** 2


@dataclass(frozen=True)
class HomodyneConfig:
    """
    Parameters
    ----------
    chi, kappa : float
        Dispersive shift (rad/s) and cavity linewidth (1/s).
    n_bar : float
        Mean intracavity photon number.
    dt : float
        Time step; ``k_m dt <= 0.01`` is enforced.
    seed : int
    """

    chi: float
    kappa: float
    n_bar: float
    dt: float
    seed: int = 0

    def __post_init__(self):
        if self.kappa < 0 or self.n_bar < 0 or self.dt <= 0:
            raise ValueError("kappa, n_bar must be >= 0 and dt > 0")
        if self.k_m * self.dt > 0.01:
            raise StepGuardError(f"k_m dt = {self.k_m * self.dt:.3g} exceeds 0.01")

    @property
    def k_m(self):
        return measurement_strength(self.chi, self.kappa, self.n_bar)

    @property
    def q_bar(self):
        return np.sqrt(self.k_m * self.dt)


def outcome_density(rho, q, q_bar):
    """Probability density of quadrature outcome `q`: two Gaussians of variance 1/4 at ``+-q_bar``."""
    rho = np.asarray(rho)
    c = np.sqrt(2.0 / np.pi)
    return c * (rho[..., 0, 0].real * np.exp(-2.0 * (q_bar - q) ** 2)
                + rho[..., 1, 1].real * np.exp(-2.0 * (q_bar + q) ** 2))


def kraus_update(rho, q, q_bar):
    """
    Apply the finite-step measurement Kraus operator for outcome `q`.

    ``K_q ~ exp(-(q_bar - q)^2) |g><g| + exp(-(q_bar + q)^2) |e><e|``.

    Returns
    -------
    rho_new : ndarray
        Normalized post-measurement state.
    density : float or ndarray
        Outcome probability density at `q`.

    Raises
    ------
    FloatingPointError
        If the update cannot be normalized.
    """
    rho = np.asarray(rho, dtype=complex)
    q = np.asarray(q, dtype=float)
    # work with the ratio k_e / k_g = exp(-4 q q_bar) to stay finite for large |q|
    log_ratio = -4.0 * q * q_bar
    shift = np.maximum(log_ratio, 0.0)
    kg = np.exp(-shift)
    ke = np.exp(log_ratio - shift)
    out = np.empty(np.broadcast_shapes(rho.shape, q.shape + (2, 2)), dtype=complex)
    out[..., 0, 0] = kg * kg * rho[..., 0, 0]
    out[..., 1, 1] = ke * ke * rho[..., 1, 1]
    out[..., 0, 1] = kg * ke * rho[..., 0, 1]
    out[..., 1, 0] = kg * ke * rho[..., 1, 0]
    norm = out[..., 0, 0].real + out[..., 1, 1].real
    if np.any(~(norm > 0)):
        raise FloatingPointError("Kraus update has zero norm")
    return out / norm[..., None, None], outcome_density(rho, q, q_bar)


def sme_step(rho, dW, dt, k_m):
    """
    Euler-Maruyama step of
    ``d rho = k_m (sz rho sz - rho) dt + sqrt(k_m) M[sz] rho dW``, renormalized.
    """
    rho = np.asarray(rho, dtype=complex)
    dW = np.asarray(dW, dtype=float)[..., None, None]
    zr = SZ @ rho
    rz = rho @ SZ
    mean_z = np.real(np.trace(zr, axis1=-2, axis2=-1))[..., None, None]
    new = rho + k_m * (zr @ SZ - rho) * dt + np.sqrt(k_m) * (zr + rz - 2.0 * mean_z * rho) * dW
    new = 0.5 * (new + np.swapaxes(new, -1, -2).conj())
    return new / np.real(np.trace(new, axis1=-2, axis2=-1))[..., None, None]


def record_step(rho, dW, dt, k_m):
    """Record increment ``dy = 2 sqrt(k_m) Tr(sz rho) dt + dW``."""
    rho = np.asarray(rho)
    z = rho[..., 0, 0].real - rho[..., 1, 1].real
    return 2.0 * np.sqrt(k_m) * z * dt + np.asarray(dW)


def bloch_step(xyz, dW, dt, k_m):
    """
    Euler-Maruyama step of the Bloch-vector SDEs
    ``dx = -2 k_m x dt - 2 sqrt(k_m) x z dW`` (same for y) and
    ``dz = 2 sqrt(k_m) (1 - z^2) dW``.
    """
    xyz = np.asarray(xyz, dtype=float)
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    s = np.sqrt(k_m)
    return np.stack([
        x - 2.0 * k_m * x * dt - 2.0 * s * x * z * dW,
        y - 2.0 * k_m * y * dt - 2.0 * s * y * z * dW,
        z + 2.0 * s * (1.0 - z * z) * dW,
    ], axis=-1)


def bloch_from_state(rho):
    rho = np.asarray(rho)
    return np.stack([2.0 * rho[..., 0, 1].real, -2.0 * rho[..., 0, 1].imag,
                     rho[..., 0, 0].real - rho[..., 1, 1].real], axis=-1)


def state_from_bloch(xyz):
    xyz = np.asarray(xyz, dtype=float)
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    rho = np.empty(xyz.shape[:-1] + (2, 2), dtype=complex)
    rho[..., 0, 0] = 0.5 * (1 + z)
    rho[..., 1, 1] = 0.5 * (1 - z)
    rho[..., 0, 1] = 0.5 * (x - 1j * y)
    rho[..., 1, 0] = 0.5 * (x + 1j * y)
    return rho


def unconditioned_state(rho0, k_m, t):
    """Ensemble-average solution: populations fixed, coherence times ``exp(-2 k_m t)``."""
    rho0 = np.asarray(rho0, dtype=complex)
    t = np.asarray(t, dtype=float)
    out = np.broadcast_to(rho0, t.shape + (2, 2)).copy()
    f = np.exp(-2.0 * k_m * t)
    out[..., 0, 1] *= f
    out[..., 1, 0] *= f
    return out


def run_kraus_chain(cfg, rho0, n_traj, n_steps, seed=None):
    """
    Sample measurement outcomes exactly from the two-Gaussian density and
    apply :func:`kraus_update` for `n_steps` steps.

    Trajectory ``i`` draws from the stream keyed on ``(seed, i)``.

    Returns
    -------
    states : ndarray
        Final states ``(n_traj, 2, 2)``.
    records : ndarray
        Outcomes ``q`` of shape ``(n_traj, n_steps)``.
    """
    seed = cfg.seed if seed is None else seed
    draws = [trajectory_generator(seed, i).random((n_steps, 2)) for i in range(n_traj)]
    u = np.stack([d[:, 0] for d in draws])
    xi = ndtri(np.stack([d[:, 1] for d in draws]))
    rho = np.broadcast_to(np.asarray(rho0, dtype=complex), (n_traj, 2, 2)).copy()
    qs = np.empty((n_traj, n_steps))
    qb = cfg.q_bar
    for k in range(n_steps):
        branch = np.where(u[:, k] < rho[:, 0, 0].real, qb, -qb)
        q = branch + 0.5 * xi[:, k]
        rho, _ = kraus_update(rho, q, qb)
        qs[:, k] = q
    return rho, qs


def run_sme(cfg, rho0, n_traj, n_steps, seed=None, representation="density"):
    """
    Euler-Maruyama ensemble of the diffusive SME.

    Parameters
    ----------
    representation : {"density", "bloch"}
        Integrate :func:`sme_step` or :func:`bloch_step`.

    Returns
    -------
    states : ndarray
        Final states ``(n_traj, 2, 2)``.
    records : ndarray
        Record increments ``dy`` of shape ``(n_traj, n_steps)``.
    """
    if representation not in ("density", "bloch"):
        raise ValueError(f"unknown representation {representation!r}")
    seed = cfg.seed if seed is None else seed
    dW = np.stack([trajectory_generator(seed, i).standard_normal(n_steps)
                   for i in range(n_traj)]) * np.sqrt(cfg.dt)
    k_m = cfg.k_m
    rho = np.broadcast_to(np.asarray(rho0, dtype=complex), (n_traj, 2, 2)).copy()
    xyz = bloch_from_state(rho)
    dy = np.empty((n_traj, n_steps))
    for k in range(n_steps):
        if representation == "bloch":
            dy[:, k] = 2.0 * np.sqrt(k_m) * xyz[:, 2] * cfg.dt + dW[:, k]
            xyz = bloch_step(xyz, dW[:, k], cfg.dt, k_m)
        else:
            dy[:, k] = record_step(rho, dW[:, k], cfg.dt, k_m)
            rho = sme_step(rho, dW[:, k], cfg.dt, k_m)
    if representation == "bloch":
        rho = state_from_bloch(xyz)
    return rho, dy
