"""
Heterodyne stochastic master equation for dispersive qutrit readout.

The cavity is adiabatically eliminated: the deterministic amplitude path
``alpha_a(t)`` schedules the quadrature operators

    L_I = sum_a Re(alpha_a e^{-i phi}) |a><a|,  L_Q = sum_a Im(alpha_a e^{-i phi}) |a><a|

and the measurement-induced dephasing of the effective qutrit ME. The
conditional state obeys

    d rho = L_eff rho dt + sqrt(eta kappa) (M[L_I] rho dW_I + M[L_Q] rho dW_Q)

with voltage records ``V_X = 2 sqrt(eta kappa) Tr(rho L_X) + dW_X / dt``.

Because every measurement operator is diagonal, states are propagated in a
compact form: populations ``(p_g, p_e, p_f)`` and upper coherences
``(rho_ge, rho_gf, rho_ef)``.
"""
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .effective import EffectiveQutritModel, StepPropagator, from_compact, to_compact
from .errors import StepGuardError
from .operators import validate_density_matrix
from .params import PAIRS
from .rng import trajectory_generator

__all__ = [
    "HeterodyneConfig",
    "TrajectoryResult",
    "EnsembleResult",
    "quadrature_observables",
    "quadrature_means",
    "sme_step",
    "record_step",
    "run_ensemble",
    "von_neumann_entropy",
]

STEP_GUARD = 0.01
SCHEMES = ("kraus", "euler")


def quadrature_means(amps, phi_lo):
    """``(I_bar_a, Q_bar_a)`` arrays of shape ``(..., 3)`` for amplitude array `amps`."""
    rot = np.asarray(amps, dtype=complex) * np.exp(-1j * phi_lo)
    return rot.real, rot.imag


def quadrature_observables(amps, phi_lo):
    """
    Diagonal quadrature operators ``L_I`` and ``L_Q``.

    Parameters
    ----------
    amps : CavityAmplitudes or array_like
        Amplitudes ``(alpha_g, alpha_e, alpha_f)`` at one time.
    phi_lo : float
        Net demodulation phase.

    Returns
    -------
    L_I, L_Q : ndarray
        Real diagonal 3x3 matrices.
    """
    a = amps.as_array() if hasattr(amps, "as_array") else np.asarray(amps)
    i_bar, q_bar = quadrature_means(a, phi_lo)
    return np.diag(i_bar), np.diag(q_bar)


@dataclass(frozen=True)
class HeterodyneConfig:
    """
    Parameters
    ----------
    params : QutritCavityParams
    eta : float
        Total measurement efficiency in ``[0, 1]``. For heterodyne detection it
        already includes the factor 1/2 from splitting between quadratures,
        as well as any output-coupling and amplifier losses.
    dt : float
        Integrator and sampling step.
    n_traj : int
    t_final : float
    seed : int
    phi_lo : float
        Net local-oscillator phase.
    steady_state : bool
        Freeze the cavity amplitudes at their steady-state values.
    alpha0 : array_like, optional
        Initial cavity amplitudes for the transient path (empty by default).
    """

    params: object
    eta: float
    dt: float
    n_traj: int
    t_final: float
    seed: int = 0
    phi_lo: float = 0.0
    steady_state: bool = False
    alpha0: object = None

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta!r}")
        if not self.dt > 0 or not self.t_final > 0:
            raise ValueError("dt and t_final must be > 0")
        if int(self.n_traj) != self.n_traj or self.n_traj < 1:
            raise ValueError("n_traj must be a positive integer")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        n = self.t_final / self.dt
        if abs(n - round(n)) > 1e-6 * max(1.0, n):
            raise ValueError("t_final must be an integer multiple of dt")
        if self.eta > self.params.eta_geom + 1e-12 and self.params.kappa > 0:
            warnings.warn(f"eta={self.eta} exceeds the geometric efficiency "
                          f"kappa_out/kappa={self.params.eta_geom:.3g}", stacklevel=2)

    @property
    def n_steps(self):
        return int(round(self.t_final / self.dt))

    @cached_property
    def model(self):
        return EffectiveQutritModel(self.params, "steady" if self.steady_state else "instantaneous",
                                    self.alpha0)

    def step_times(self):
        return self.dt * np.arange(self.n_steps)

    def guard_value(self):
        """``eta kappa max |beta_ab|^2 dt`` over the scheduled path."""
        a = self.model.amplitudes(np.append(self.step_times(), self.t_final))
        beta2 = max(np.max(np.abs(a[..., i] - a[..., j]) ** 2) for i, j in PAIRS)
        return self.eta * self.params.kappa * beta2 * self.dt

    def check_step_guard(self):
        g = self.guard_value()
        if g > STEP_GUARD:
            raise StepGuardError(
                f"eta*kappa*max|beta|^2*dt = {g:.3g} exceeds {STEP_GUARD}; reduce dt")
        return g


def _compact_step(pops, coh, lI, lQ, pop_map, coh_mult, gain, dt, dWI, dWQ, scheme):
    """
    One conditional step on compact states.

    `gain` is ``sqrt(eta kappa)``. For the Kraus scheme `coh_mult` must already
    include the compensation for the dephasing the Kraus update supplies.
    """
    mI = lI[0] * pops[..., 0] + lI[1] * pops[..., 1] + lI[2] * pops[..., 2]
    mQ = lQ[0] * pops[..., 0] + lQ[1] * pops[..., 1] + lQ[2] * pops[..., 2]
    s = 2.0 * gain * dt
    dYI = s * mI + dWI
    dYQ = s * mQ + dWQ
    if scheme == "kraus":
        w = -((dYI[..., None] - s * lI) ** 2 + (dYQ[..., None] - s * lQ) ** 2) / (4.0 * dt)
        w = w - np.max(w, axis=-1, keepdims=True)
        k = np.exp(w)
        pops = pops * k * k
        coh = coh * np.stack([k[..., i] * k[..., j] for i, j in PAIRS], axis=-1)
        norm = pops[..., 0] + pops[..., 1] + pops[..., 2]
        pops = pops / norm[..., None]
        coh = coh / norm[..., None]
        new_p = np.stack([pop_map[i, 0] * pops[..., 0] + pop_map[i, 1] * pops[..., 1]
                          + pop_map[i, 2] * pops[..., 2] for i in range(3)], axis=-1)
        new_c = coh * coh_mult
    else:
        dI = dWI[..., None]
        dQ = dWQ[..., None]
        dp = gain * 2.0 * ((lI - mI[..., None]) * dI + (lQ - mQ[..., None]) * dQ) * pops
        cI = np.stack([lI[i] + lI[j] for i, j in PAIRS]) - 2.0 * mI[..., None]
        cQ = np.stack([lQ[i] + lQ[j] for i, j in PAIRS]) - 2.0 * mQ[..., None]
        dc = gain * (cI * dI + cQ * dQ) * coh
        new_p = np.stack([pop_map[i, 0] * pops[..., 0] + pop_map[i, 1] * pops[..., 1]
                          + pop_map[i, 2] * pops[..., 2] for i in range(3)], axis=-1) + dp
        new_c = coh * coh_mult + dc
    norm = new_p[..., 0] + new_p[..., 1] + new_p[..., 2]
    return new_p / norm[..., None], new_c / norm[..., None], dYI / dt, dYQ / dt


def _kraus_compensation(lI, lQ, eta, kappa, dt):
    """``exp(eta Gamma_m,ab dt / 2)`` per pair, with ``Gamma_m = kappa |l_a - l_b|^2``."""
    lI = np.asarray(lI)
    lQ = np.asarray(lQ)
    b2 = np.stack([(lI[..., i] - lI[..., j]) ** 2 + (lQ[..., i] - lQ[..., j]) ** 2
                   for i, j in PAIRS], axis=-1)
    return np.exp(0.5 * eta * kappa * b2 * dt)


def sme_step(rho, L_I, L_Q, prop, eta, kappa, dt, dW_I, dW_Q, scheme="kraus"):
    """
    Advance conditional state(s) by one step.

    Parameters
    ----------
    rho : array_like
        State(s) of shape ``(..., 3, 3)``.
    L_I, L_Q : ndarray
        Diagonal quadrature operators at the start of the step.
    prop : StepPropagator
        Deterministic effective-ME step (relaxation, pure dephasing,
        measurement-induced dephasing and frequency shifts).
    eta, kappa, dt : float
    dW_I, dW_Q : float or ndarray
        Independent Normal(0, dt) increments.
    scheme : {"kraus", "euler"}
        ``"euler"`` adds ``sqrt(eta kappa) M[L] rho dW`` to the deterministic
        step. ``"kraus"`` applies the diagonal Bayesian update for the sampled
        record, then the deterministic step with the dephasing already supplied
        by that update removed; it keeps states positive and its ensemble mean
        equals the effective ME.

    Returns
    -------
    ndarray
        Renormalized Hermitian state(s).
    """
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    lI = np.real(np.diag(L_I))
    lQ = np.real(np.diag(L_Q))
    mult = prop.coh
    if scheme == "kraus":
        mult = mult * _kraus_compensation(lI, lQ, eta, kappa, dt)
    pops, coh = to_compact(rho)
    gain = np.sqrt(eta * kappa)
    pops, coh, _, _ = _compact_step(pops, coh, lI, lQ, prop.pop, mult, gain, dt,
                                    np.asarray(dW_I, dtype=float), np.asarray(dW_Q, dtype=float),
                                    scheme)
    return from_compact(pops, coh)


def record_step(rho, L_I, L_Q, eta, kappa, dW_I, dW_Q, dt):
    """Voltage samples ``V_X = 2 sqrt(eta kappa) Tr(rho L_X) + dW_X / dt``."""
    rho = np.asarray(rho)
    gain = 2.0 * np.sqrt(eta * kappa)
    tI = np.real(np.trace(rho @ L_I, axis1=-2, axis2=-1))
    tQ = np.real(np.trace(rho @ L_Q, axis1=-2, axis2=-1))
    return gain * tI + np.asarray(dW_I) / dt, gain * tQ + np.asarray(dW_Q) / dt


@dataclass
class TrajectoryResult:
    """
    One conditional trajectory.

    ``record_I[k]`` is the mean voltage over ``[record_times[k], record_times[k] + record_dt)``
    and ``wiener_I[k]`` the summed increment over the same bin.
    """

    times: np.ndarray
    states: np.ndarray
    record_times: np.ndarray
    record_I: np.ndarray
    record_Q: np.ndarray
    wiener_I: np.ndarray
    wiener_Q: np.ndarray
    record_dt: float


@dataclass
class EnsembleResult:
    """Stacked outputs of :func:`run_ensemble` (trajectory axis first)."""

    config: HeterodyneConfig
    scheme: str
    times: np.ndarray
    states: np.ndarray
    record_times: np.ndarray
    record_I: np.ndarray
    record_Q: np.ndarray
    wiener_I: np.ndarray
    wiener_Q: np.ndarray
    record_dt: float

    @property
    def n_traj(self):
        return self.states.shape[0]

    @property
    def mean_states(self):
        return self.states.mean(axis=0)

    def trajectory(self, i):
        return TrajectoryResult(self.times, self.states[i], self.record_times, self.record_I[i],
                                self.record_Q[i], self.wiener_I[i], self.wiener_Q[i],
                                self.record_dt)

    @property
    def trajectories(self):
        return [self.trajectory(i) for i in range(self.n_traj)]

    def min_eigenvalue(self):
        return float(np.min(np.linalg.eigvalsh(self.states)))

    def entropy(self):
        """Von Neumann entropy ``(n_traj, n_saved)``."""
        return von_neumann_entropy(self.states)


@dataclass(frozen=True)
class _Schedule:
    lI: np.ndarray
    lQ: np.ndarray
    pop_map: np.ndarray
    coh_mult: np.ndarray
    gain: float
    dt: float


def build_schedule(cfg, scheme="kraus"):
    """Per-step deterministic coefficients shared by all trajectories."""
    model = cfg.model
    t = cfg.step_times()
    lI, lQ = quadrature_means(model.amplitudes(t), cfg.phi_lo)
    prop = model.propagator(t, cfg.dt)
    mult = prop.coh
    if scheme == "kraus":
        mult = mult * _kraus_compensation(lI, lQ, cfg.eta, cfg.params.kappa, cfg.dt)
    return _Schedule(lI, lQ, prop.pop, mult, float(np.sqrt(cfg.eta * cfg.params.kappa)), cfg.dt)


def _save_indices(n_steps, save_every):
    idx = list(range(0, n_steps + 1, save_every))
    if idx[-1] != n_steps:
        idx.append(n_steps)
    return np.array(idx)


def _run_chunk(indices, seed, schedule, rho0, n_steps, save_idx, record_every, scheme, block):
    n = len(indices)
    gens = [trajectory_generator(seed, i) for i in indices]
    p0, c0 = to_compact(rho0)
    pops = np.broadcast_to(p0, (n, 3)).copy()
    coh = np.broadcast_to(c0, (n, 3)).copy()
    n_rec = n_steps // record_every
    saved_p = np.empty((n, len(save_idx), 3))
    saved_c = np.empty((n, len(save_idx), 3), dtype=complex)
    rec = np.zeros((2, n, n_rec))
    wien = np.zeros((2, n, n_rec))
    save_pos = {int(k): m for m, k in enumerate(save_idx)}
    dt = schedule.dt
    if 0 in save_pos:
        saved_p[:, 0], saved_c[:, 0] = pops, coh
    acc_v = np.zeros((2, n))
    acc_w = np.zeros((2, n))
    k = 0
    while k < n_steps:
        b = min(block, n_steps - k)
        noise = np.stack([g.standard_normal((b, 2)) for g in gens]) * np.sqrt(dt)
        for j in range(b):
            dWI = noise[:, j, 0]
            dWQ = noise[:, j, 1]
            pops, coh, VI, VQ = _compact_step(
                pops, coh, schedule.lI[k], schedule.lQ[k], schedule.pop_map,
                schedule.coh_mult[k], schedule.gain, dt, dWI, dWQ, scheme)
            acc_v[0] += VI
            acc_v[1] += VQ
            acc_w[0] += dWI
            acc_w[1] += dWQ
            k += 1
            if k % record_every == 0:
                r = k // record_every - 1
                rec[:, :, r] = acc_v / record_every
                wien[:, :, r] = acc_w
                acc_v[:] = 0.0
                acc_w[:] = 0.0
            m = save_pos.get(k)
            if m is not None:
                saved_p[:, m] = pops
                saved_c[:, m] = coh
    return from_compact(saved_p, saved_c), rec, wien


def run_ensemble(cfg, rho0, save_every=1, record_every=1, n_jobs=1, chunk_size=None,
                 scheme="kraus", block_steps=1024):
    """
    Simulate ``cfg.n_traj`` conditional trajectories.

    Parameters
    ----------
    cfg : HeterodyneConfig
    rho0 : array_like
        Initial 3x3 state.
    save_every : int
        Store states every this many steps (the final step is always stored).
    record_every : int
        Average the voltage records over bins of this many steps; must divide
        the number of steps.
    n_jobs : int
        Worker processes (joblib). Results do not depend on `n_jobs` or
        `chunk_size`: trajectory ``i`` always uses the stream keyed on
        ``(cfg.seed, i)``.
    chunk_size : int, optional
        Trajectories per vectorized batch.
    scheme : {"kraus", "euler"}
        See :func:`sme_step`.
    block_steps : int
        Time steps of noise drawn per generator call.

    Returns
    -------
    EnsembleResult

    Raises
    ------
    StepGuardError
        If ``eta kappa max|beta|^2 dt > 0.01``.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    rho0 = validate_density_matrix(rho0)
    if rho0.shape != (3, 3):
        raise ValueError("rho0 must be 3x3")
    cfg.check_step_guard()
    n_steps = cfg.n_steps
    if save_every < 1 or record_every < 1 or n_steps % record_every:
        raise ValueError("record_every must divide the number of steps")
    schedule = build_schedule(cfg, scheme)
    save_idx = _save_indices(n_steps, save_every)
    indices = np.arange(cfg.n_traj)
    if chunk_size is None:
        chunk_size = max(1, -(-cfg.n_traj // max(1, n_jobs)))
    chunks = [indices[i:i + chunk_size] for i in range(0, cfg.n_traj, chunk_size)]
    args = (cfg.seed, schedule, rho0, n_steps, save_idx, record_every, scheme, block_steps)
    if n_jobs == 1:
        parts = [_run_chunk(c, *args) for c in chunks]
    else:
        from joblib import Parallel, delayed

        parts = Parallel(n_jobs=n_jobs)(delayed(_run_chunk)(c, *args) for c in chunks)
    states = np.concatenate([s for s, _, _ in parts])
    rec = np.concatenate([r for _, r, _ in parts], axis=1)
    wien = np.concatenate([w for _, _, w in parts], axis=1)
    rdt = record_every * cfg.dt
    return EnsembleResult(
        config=cfg, scheme=scheme, times=save_idx * cfg.dt, states=states,
        record_times=rdt * np.arange(n_steps // record_every), record_I=rec[0], record_Q=rec[1],
        wiener_I=wien[0], wiener_Q=wien[1], record_dt=rdt,
    )


def von_neumann_entropy(rho):
    """
    ``S = -Tr(rho ln rho)`` in nats, with eigenvalues clamped at zero.

    Accepts a single matrix or a stack ``(..., d, d)``.
    """
    lam = np.clip(np.linalg.eigvalsh(np.asarray(rho)), 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(lam > 0, -lam * np.log(lam), 0.0)
    return terms.sum(axis=-1)
