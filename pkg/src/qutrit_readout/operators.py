"""
Dense operator algebra for a qutrit coupled to a truncated cavity mode.

The global basis ordering is qutrit (g, e, f) tensored with Fock states
(0, ..., n_max - 1), qutrit index slow. ``sigma_z,ab`` follows the
convention in which the lower level carries eigenvalue +1, so
``sigma_z,ge = |g><g| - |e><e|``.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionError, NumericalGuardError

__all__ = [
    "FockConfig",
    "QutritOperators",
    "build_qutrit_operators",
    "build_fock_operators",
    "tensor",
    "dissipator",
    "measurement_superop",
    "hermitize",
    "hermiticity_error",
    "min_eigenvalue",
    "validate_density_matrix",
    "partial_trace_cavity",
    "partial_trace_qutrit",
    "projector",
]

TRACE_TOL = 1e-9
HERM_TOL = 1e-9
EIG_FLOOR = -1e-7


@dataclass(frozen=True)
class FockConfig:
    """Truncation of the cavity Hilbert space.

    Parameters
    ----------
    n_max : int
        Number of Fock states kept, photon numbers 0 .. n_max - 1.
    """

    n_max: int

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be a positive integer, got {self.n_max!r}")


class QutritOperators(NamedTuple):
    proj_g: np.ndarray
    proj_e: np.ndarray
    proj_f: np.ndarray
    sigma_ge: np.ndarray
    sigma_gf: np.ndarray
    sigma_ef: np.ndarray
    sigma_z_ge: np.ndarray
    sigma_z_gf: np.ndarray
    sigma_z_ef: np.ndarray


def projector(dim, i, j=None):
    """Return the matrix unit ``|i><j|`` (``|i><i|`` if `j` is omitted)."""
    j = i if j is None else j
    out = np.zeros((dim, dim), dtype=complex)
    out[i, j] = 1.0
    return out


def build_qutrit_operators():
    """
    Projectors, lowering operators and Pauli-z operators of a qutrit.

    Returns
    -------
    ops : QutritOperators
        3x3 complex matrices in the ordered basis (g, e, f). ``sigma_ab`` is
        ``|a><b|`` and ``sigma_z_ab`` is ``|a><a| - |b><b|``.

    Examples
    --------
    >>> ops = build_qutrit_operators()
    >>> np.allclose(ops.proj_g + ops.proj_e + ops.proj_f, np.eye(3))
    True
    """
    pg, pe, pf = (projector(3, k) for k in range(3))
    return QutritOperators(
        proj_g=pg,
        proj_e=pe,
        proj_f=pf,
        sigma_ge=projector(3, 0, 1),
        sigma_gf=projector(3, 0, 2),
        sigma_ef=projector(3, 1, 2),
        sigma_z_ge=pg - pe,
        sigma_z_gf=pg - pf,
        sigma_z_ef=pe - pf,
    )


def build_fock_operators(cfg):
    """
    Truncated annihilation, creation and number operators.

    Parameters
    ----------
    cfg : FockConfig
        Truncation dimension.

    Returns
    -------
    a, adag, num : ndarray
        ``a`` carries ``sqrt(n)`` on the first superdiagonal, ``adag`` is its
        adjoint and ``num = adag @ a``.

    Notes
    -----
    Truncation breaks the canonical commutator in the last diagonal entry:
    ``[a, adag]`` equals the identity except for ``1 - n_max`` at
    ``(n_max - 1, n_max - 1)``.
    """
    n = cfg.n_max
    a = np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1).astype(complex)
    adag = a.conj().T.copy()
    num = np.diag(np.arange(n, dtype=float)).astype(complex)
    return a, adag, num


def tensor(A, B):
    """
    Kronecker product ``A (x) B`` with the index of `A` varying slowest.

    Parameters
    ----------
    A, B : array_like
        Matrices of any shape.

    Returns
    -------
    ndarray
        Matrix of shape ``(A.shape[0] * B.shape[0], A.shape[1] * B.shape[1])``.
    """
    return np.kron(np.asarray(A), np.asarray(B))


def _check_square_pair(L, rho):
    L = np.asarray(L)
    rho = np.asarray(rho)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise DimensionError(f"operator must be square, got shape {L.shape}")
    if rho.shape[-2:] != L.shape:
        raise DimensionError(
            f"operator shape {L.shape} does not match state shape {rho.shape[-2:]}"
        )
    return L, rho


def dissipator(L, rho):
    """
    Lindblad dissipator ``D[L] rho = L rho L^+ - (L^+ L rho + rho L^+ L) / 2``.

    Parameters
    ----------
    L : array_like
        Square jump operator.
    rho : array_like
        Density matrix of the same dimension. A stack of matrices with
        leading batch axes is also accepted.

    Returns
    -------
    ndarray
        Traceless, hermiticity-preserving result.

    Raises
    ------
    DimensionError
        If `L` is not square or does not match `rho`.
    """
    L, rho = _check_square_pair(L, rho)
    Ld = L.conj().T
    LdL = Ld @ L
    return L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)


def measurement_superop(L, rho):
    """
    Innovation superoperator ``M[L] rho = L rho + rho L^+ - Tr(L rho + rho L^+) rho``.

    Parameters
    ----------
    L : array_like
        Square measurement operator.
    rho : array_like
        Density matrix of the same dimension.

    Returns
    -------
    ndarray
        Traceless matrix. Vanishes when `rho` projects onto an eigenvector of
        a Hermitian `L`.

    Raises
    ------
    DimensionError
        If `L` is not square or does not match `rho`.
    """
    L, rho = _check_square_pair(L, rho)
    x = L @ rho + rho @ L.conj().T
    tr = np.trace(x, axis1=-2, axis2=-1)
    return x - np.asarray(tr)[..., None, None] * rho


def hermitize(rho):
    """Return ``(rho + rho^+) / 2`` (acts on the last two axes)."""
    rho = np.asarray(rho)
    return 0.5 * (rho + np.swapaxes(rho, -1, -2).conj())


def hermiticity_error(M):
    """Maximum absolute entry of ``M - M^+``."""
    M = np.asarray(M)
    return float(np.max(np.abs(M - np.swapaxes(M, -1, -2).conj()), initial=0.0))


def min_eigenvalue(rho):
    """Smallest eigenvalue of the Hermitian part of `rho` (over any batch axes)."""
    return float(np.min(np.linalg.eigvalsh(hermitize(rho))))


def validate_density_matrix(rho, trace_tol=TRACE_TOL, herm_tol=HERM_TOL, eig_floor=None):
    """
    Check the density-matrix invariants of `rho`.

    Parameters
    ----------
    rho : array_like
        Square matrix.
    trace_tol, herm_tol : float
        Tolerances on ``|Tr rho - 1|`` and ``max |rho - rho^+|``.
    eig_floor : float, optional
        If given, also require the smallest eigenvalue to be at least this.

    Returns
    -------
    rho : ndarray
        The input as a complex array.

    Raises
    ------
    DimensionError
        If `rho` is not square.
    NumericalGuardError
        If any invariant fails.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density matrix must be square, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise NumericalGuardError("density matrix has non-finite entries")
    tr_err = abs(np.trace(rho) - 1.0)
    if tr_err > trace_tol:
        raise NumericalGuardError(f"trace deviates from 1 by {tr_err:.3e}")
    h_err = hermiticity_error(rho)
    if h_err > herm_tol:
        raise NumericalGuardError(f"density matrix not Hermitian (error {h_err:.3e})")
    if eig_floor is not None:
        lam = min_eigenvalue(rho)
        if lam < eig_floor:
            raise NumericalGuardError(f"minimum eigenvalue {lam:.3e} below {eig_floor:.1e}")
    return rho


def partial_trace_cavity(rho, n_max):
    """
    Trace out the cavity from a qutrit (x) Fock operator.

    Parameters
    ----------
    rho : array_like
        Matrix of shape ``(..., 3 n_max, 3 n_max)``.
    n_max : int
        Fock truncation.

    Returns
    -------
    ndarray
        Reduced qutrit operator(s) of shape ``(..., 3, 3)``.
    """
    rho = np.asarray(rho)
    d = rho.shape[-1] // n_max
    r = rho.reshape(rho.shape[:-2] + (d, n_max, d, n_max))
    return np.einsum("...anbn->...ab", r)


def partial_trace_qutrit(rho, n_max):
    """Trace out the qutrit, returning the cavity operator(s) of shape ``(..., n_max, n_max)``."""
    rho = np.asarray(rho)
    d = rho.shape[-1] // n_max
    r = rho.reshape(rho.shape[:-2] + (d, n_max, d, n_max))
    return np.einsum("...aman->...mn", r)
