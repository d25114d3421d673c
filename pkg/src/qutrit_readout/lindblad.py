"""
Deterministic Lindblad integration, the composite qutrit-cavity generator
and closed-form qubit benchmarks.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalGuardError, TruncationError
from .operators import (
    FockConfig, build_fock_operators, build_qutrit_operators, hermitize,
    hermiticity_error, projector, tensor,
)

__all__ = [
    "LindbladModel",
    "QubitDecayParams",
    "evolve_lindblad",
    "liouvillian",
    "build_composite_generator",
    "truncation_ok",
    "qubit_decay_model",
    "qubit_decay_analytic",
    "ramsey_probabilities",
]


@dataclass(frozen=True)
class LindbladModel:
    """
    Generator ``d rho/dt = -i[H, rho] + sum_k rate_k D[L_k] rho``.

    Parameters
    ----------
    hamiltonian : ndarray
        Hermitian matrix in angular-frequency units.
    channels : sequence of (float, ndarray)
        Pairs ``(rate, L)`` with nonnegative rates.
    """

    hamiltonian: np.ndarray
    channels: tuple = field(default_factory=tuple)

    def __post_init__(self):
        H = np.asarray(self.hamiltonian, dtype=complex)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError(f"hamiltonian must be square, got shape {H.shape}")
        scale = max(1.0, float(np.max(np.abs(H), initial=0.0)))
        if hermiticity_error(H) > 1e-9 * scale:
            raise ValueError("hamiltonian is not Hermitian")
        chans = []
        for rate, L in self.channels:
            L = np.asarray(L, dtype=complex)
            if rate < 0:
                raise ValueError(f"negative channel rate {rate!r}")
            if L.shape != H.shape:
                raise ValueError(f"jump operator shape {L.shape} != {H.shape}")
            chans.append((float(rate), L))
        object.__setattr__(self, "hamiltonian", H)
        object.__setattr__(self, "channels", tuple(chans))

    @property
    def dim(self):
        return self.hamiltonian.shape[0]

    def effective_hamiltonian(self):
        """Non-Hermitian ``H - (i/2) sum_k rate_k L_k^+ L_k``."""
        Heff = self.hamiltonian.copy()
        for rate, L in self.channels:
            Heff = Heff - 0.5j * rate * (L.conj().T @ L)
        return Heff

    def rate_scale(self):
        """Upper bound on the generator's fastest frequency, used to pick step sizes."""
        s = np.linalg.norm(self.effective_hamiltonian(), 2)
        for rate, L in self.channels:
            s += rate * np.linalg.norm(L, 2) ** 2
        return float(s)

    def apply(self, rho):
        """Evaluate the generator on `rho`."""
        Heff = self.effective_hamiltonian()
        out = -1j * (Heff @ rho - rho @ Heff.conj().T)
        for rate, L in self.channels:
            out = out + rate * (L @ rho @ L.conj().T)
        return out


def liouvillian(model):
    """
    Superoperator matrix of `model` acting on column-stacked ``vec(rho)``.

    Uses ``vec(A rho B) = (B^T kron A) vec(rho)``.
    """
    d = model.dim
    eye = np.eye(d)
    Heff = model.effective_hamiltonian()
    sup = -1j * (np.kron(eye, Heff) - np.kron(Heff.conj(), eye))
    for rate, L in model.channels:
        sup = sup + rate * np.kron(L.conj(), L)
    return sup


def _check_grid(t_grid):
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("t_grid must be a non-empty 1-D sequence")
    if t[0] != 0.0:
        raise ValueError("t_grid must start at 0")
    if np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly ascending")
    return t


def evolve_lindblad(model, rho0, t_grid, max_step=None):
    """
    Integrate a Lindblad master equation with fixed-step classical RK4.

    Parameters
    ----------
    model : LindbladModel
        Generator.
    rho0 : array_like
        Initial density matrix.
    t_grid : array_like
        Output times, strictly ascending from 0.
    max_step : float, optional
        Largest internal step. Defaults to ``1 / (50 * model.rate_scale())``.
        Each output interval is split into equal substeps no longer than this.

    Returns
    -------
    states : ndarray
        Array of shape ``(len(t_grid), d, d)``.

    Raises
    ------
    ValueError
        For a malformed grid.
    NumericalGuardError
        If the state becomes non-finite.
    """
    t = _check_grid(t_grid)
    rho = hermitize(np.asarray(rho0, dtype=complex))
    if rho.shape != model.hamiltonian.shape:
        raise ValueError(f"rho0 shape {rho.shape} does not match model {model.hamiltonian.shape}")
    if max_step is None:
        scale = model.rate_scale()
        max_step = 1.0 / (50.0 * scale) if scale > 0 else np.inf

    Heff = model.effective_hamiltonian()
    HeffD = Heff.conj().T
    jumps = [(rate, L, L.conj().T) for rate, L in model.channels if rate > 0]

    def f(r):
        out = -1j * (Heff @ r - r @ HeffD)
        for rate, L, Ld in jumps:
            out += rate * (L @ r @ Ld)
        return out

    out = np.empty((t.size,) + rho.shape, dtype=complex)
    out[0] = rho
    for k in range(1, t.size):
        span = t[k] - t[k - 1]
        n = max(1, int(np.ceil(span / max_step - 1e-12)))
        h = span / n
        for _ in range(n):
            k1 = f(rho)
            k2 = f(rho + 0.5 * h * k1)
            k3 = f(rho + 0.5 * h * k2)
            k4 = f(rho + h * k3)
            rho = hermitize(rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        if not np.all(np.isfinite(rho)):
            raise NumericalGuardError(f"non-finite state at t={t[k]:.3e}")
        out[k] = rho
    return out


def truncation_ok(params, cfg):
    """True if every steady-state amplitude satisfies ``|a|^2 + 5 sqrt(|a|^2 + 1) < n_max``."""
    from .coherent import steady_state_amplitudes

    n2 = np.abs(np.array(steady_state_amplitudes(params))) ** 2
    return bool(np.all(n2 + 5.0 * np.sqrt(n2 + 1.0) < cfg.n_max))


def build_composite_generator(params, cfg, allow_truncation=False):
    """
    Rotating-frame generator of the qutrit (x) cavity system.

    The Hamiltonian is ``omega_q |e><e| + (2 omega_q + alpha_q) |f><f|
    + delta_rd a^+a + sum_a chi_a |a><a| a^+a - (eps a^+ + eps^* a)`` and the
    channels are cavity loss ``kappa D[a]``, relaxation ``gamma_1,ab D[|a><b|]``
    and dephasing ``(gamma_phi,ab / 2) D[sigma_z,ab]``.

    Parameters
    ----------
    params : QutritCavityParams
    cfg : FockConfig
    allow_truncation : bool
        Skip the Fock-truncation guard.

    Raises
    ------
    TruncationError
        If ``n_max`` is too small for the steady-state amplitudes and
        `allow_truncation` is false.
    """
    if not allow_truncation and not truncation_ok(params, cfg):
        raise TruncationError(
            f"n_max={cfg.n_max} too small for the steady-state cavity amplitudes; "
            "increase n_max or pass allow_truncation=True"
        )
    q = build_qutrit_operators()
    a, adag, num = build_fock_operators(cfg)
    I3 = np.eye(3)
    In = np.eye(cfg.n_max)
    eps = params.epsilon
    chi = params.shifts
    E = params.level_energies
    Hq = np.diag(E).astype(complex)
    H = tensor(Hq, In) + params.delta_rd * tensor(I3, num)
    H = H + tensor(np.diag(chi).astype(complex), num)
    H = H - tensor(I3, eps * adag + np.conj(eps) * a)
    A = tensor(I3, a)
    channels = [(params.kappa, A)]
    for rate, op in zip(params.gamma_1, (q.sigma_ge, q.sigma_gf, q.sigma_ef)):
        channels.append((rate, tensor(op, In)))
    for rate, op in zip(params.gamma_phi, (q.sigma_z_ge, q.sigma_z_gf, q.sigma_z_ef)):
        channels.append((0.5 * rate, tensor(op, In)))
    return LindbladModel(hermitize(H), tuple(channels))


@dataclass(frozen=True)
class QubitDecayParams:
    """
    Phenomenological qubit decoherence.

    Parameters
    ----------
    omega_q_tilde : float
        Qubit frequency in the chosen frame (rad/s).
    gamma_1 : float
        Energy relaxation rate.
    gamma_phi : float
        Pure dephasing rate.
    """

    omega_q_tilde: float = 0.0
    gamma_1: float = 0.0
    gamma_phi: float = 0.0

    def __post_init__(self):
        if self.gamma_1 < 0 or self.gamma_phi < 0:
            raise ValueError("decay rates must be >= 0")

    @property
    def gamma_2(self):
        return self.gamma_phi + 0.5 * self.gamma_1


def qubit_decay_model(params):
    """Lindblad model whose solution is :func:`qubit_decay_analytic`."""
    H = np.diag([0.0, params.omega_q_tilde]).astype(complex)
    sz = np.diag([1.0, -1.0]).astype(complex)
    return LindbladModel(H, ((params.gamma_1, projector(2, 0, 1)), (0.5 * params.gamma_phi, sz)))


def qubit_decay_analytic(params, alpha, beta, t):
    """
    Closed-form density matrix of a decaying qubit prepared in ``alpha|g> + beta|e>``.

    Parameters
    ----------
    params : QubitDecayParams
    alpha, beta : complex
        Normalized amplitudes.
    t : float or array_like
        Times.

    Returns
    -------
    ndarray
        Shape ``(2, 2)`` for scalar `t`, else ``(len(t), 2, 2)``.
    """
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-12:
        raise ValueError("amplitudes are not normalized")
    t = np.asarray(t, dtype=float)
    rgg = 1.0 + (abs(alpha) ** 2 - 1.0) * np.exp(-params.gamma_1 * t)
    rge = alpha * np.conj(beta) * np.exp((1j * params.omega_q_tilde - params.gamma_2) * t)
    out = np.empty(t.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = rgg
    out[..., 1, 1] = 1.0 - rgg
    out[..., 0, 1] = rge
    out[..., 1, 0] = np.conj(rge)
    return out


def ramsey_probabilities(omega_d, T_pi2, delta_tilde, gamma_2, T_free):
    """
    Ramsey fringe populations.

    ``p_g = 1/2 - cos(omega_d T_pi2 + delta_tilde T_free) exp(-gamma_2 T_free) / 2``
    and ``p_e = 1 - p_g``.
    """
    T_free = np.asarray(T_free, dtype=float)
    if np.any(T_free < 0) or T_pi2 < 0:
        raise ValueError("times must be >= 0")
    if np.isinf(gamma_2):
        env = np.zeros_like(T_free)
    else:
        env = np.exp(-gamma_2 * T_free)
    p_g = 0.5 - 0.5 * np.cos(omega_d * T_pi2 + delta_tilde * T_free) * env
    return p_g, 1.0 - p_g
