"""Physical parameters of the driven, dispersively coupled qutrit-cavity system."""
from dataclasses import dataclass, fields, replace

import numpy as np

__all__ = ["QutritCavityParams"]

_RATE_FIELDS = (
    "kappa_in", "kappa_out", "kappa_int",
    "gamma_1_ge", "gamma_1_gf", "gamma_1_ef",
    "gamma_phi_ge", "gamma_phi_gf", "gamma_phi_ef",
)

PAIRS = ((0, 1), (0, 2), (1, 2))
PAIR_NAMES = ("ge", "gf", "ef")


@dataclass(frozen=True)
class QutritCavityParams:
    """
    Rates and frequencies of the qutrit-cavity model.

    All frequencies are angular (rad/s) and all rates in 1/s. The drive
    enters as the rotating-frame amplitude ``epsilon = sqrt(kappa_in) * a_in_bar``.

    Parameters
    ----------
    omega_q : float
        Qutrit g-e transition frequency in the frame used for the simulation.
    alpha_q : float
        Anharmonicity; the f level sits at ``2 omega_q + alpha_q``.
    chi_qr : float
        Dispersive shift per excitation.
    delta_rd : float
        Cavity-drive detuning ``omega_r - omega_d``.
    kappa_in, kappa_out, kappa_int : float
        Input, output and internal cavity loss rates.
    a_in_bar : complex
        Input field amplitude, ``|a_in_bar|^2`` is the photon flux.
    gamma_1_ge, gamma_1_gf, gamma_1_ef : float
        Energy relaxation rates for the transitions e->g, f->g, f->e.
    gamma_phi_ge, gamma_phi_gf, gamma_phi_ef : float
        Rates of the pure dephasing channels ``(gamma_phi / 2) D[sigma_z]``.
    chi_shifts : tuple of float, optional
        Override of the per-level dispersive shifts ``(chi_g, chi_e, chi_f)``.
        Defaults to the ladder ``(0, chi_qr, 2 chi_qr)``.
    """

    omega_q: float = 0.0
    alpha_q: float = 0.0
    chi_qr: float = 0.0
    delta_rd: float = 0.0
    kappa_in: float = 0.0
    kappa_out: float = 0.0
    kappa_int: float = 0.0
    a_in_bar: complex = 0.0
    gamma_1_ge: float = 0.0
    gamma_1_gf: float = 0.0
    gamma_1_ef: float = 0.0
    gamma_phi_ge: float = 0.0
    gamma_phi_gf: float = 0.0
    gamma_phi_ef: float = 0.0
    chi_shifts: tuple = None

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "chi_shifts":
                if v is not None:
                    v = tuple(float(x) for x in v)
                    if len(v) != 3 or not all(np.isfinite(v)):
                        raise ValueError("chi_shifts must be three finite numbers")
                    object.__setattr__(self, "chi_shifts", v)
                continue
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{f.name} must be finite, got {v!r}")
        for name in _RATE_FIELDS:
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)!r}")
        object.__setattr__(self, "a_in_bar", complex(self.a_in_bar))

    @classmethod
    def from_drive(cls, kappa, chi_qr, delta_rd, epsilon, in_fraction=0.5,
                   out_fraction=0.5, **kwargs):
        """
        Build parameters from the total linewidth and the drive amplitude.

        `kappa` is split as ``kappa_in = in_fraction * kappa``,
        ``kappa_out = out_fraction * kappa`` and the remainder internal.
        """
        if in_fraction <= 0 or out_fraction < 0 or in_fraction + out_fraction > 1:
            raise ValueError("invalid kappa split")
        k_in = in_fraction * kappa
        k_out = out_fraction * kappa
        k_int = max(kappa - k_in - k_out, 0.0)
        return cls(chi_qr=chi_qr, delta_rd=delta_rd, kappa_in=k_in, kappa_out=k_out,
                   kappa_int=k_int, a_in_bar=epsilon / np.sqrt(k_in), **kwargs)

    def replace(self, **changes):
        return replace(self, **changes)

    @property
    def kappa(self):
        return self.kappa_in + self.kappa_out + self.kappa_int

    @property
    def epsilon(self):
        return complex(np.sqrt(self.kappa_in) * self.a_in_bar)

    @property
    def eta_geom(self):
        k = self.kappa
        return self.kappa_out / k if k > 0 else 0.0

    @property
    def shifts(self):
        """Per-level dispersive shifts ``(chi_g, chi_e, chi_f)`` as an array."""
        if self.chi_shifts is not None:
            return np.array(self.chi_shifts, dtype=float)
        return np.array([0.0, 1.0, 2.0]) * self.chi_qr

    @property
    def level_energies(self):
        """Bare qutrit energies ``(0, omega_q, 2 omega_q + alpha_q)``."""
        return np.array([0.0, self.omega_q, 2.0 * self.omega_q + self.alpha_q])

    @property
    def gamma_1(self):
        return np.array([self.gamma_1_ge, self.gamma_1_gf, self.gamma_1_ef])

    @property
    def gamma_phi(self):
        return np.array([self.gamma_phi_ge, self.gamma_phi_gf, self.gamma_phi_ef])
