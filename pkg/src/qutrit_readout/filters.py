"""
Filter functions for dephasing by classical frequency noise.

The coherence of a qubit whose frequency fluctuates with double-sided power
spectral density ``S(omega)`` decays as

    |rho_ge(t) / rho_ge(0)| = exp[-(t^2 / 2) int dw/2pi g(w, t) S(w)]

with ``g = sinc^2(w t / 2)`` for free evolution and ``tan^2(w t / 2N) g``
for a Carr-Purcell sequence of N pulses. ``S`` is taken directly as the
frequency-noise PSD; noise of a control parameter ``lambda`` converts via
``S = (d omega_q / d lambda)^2 S_lambda``.
"""
from dataclasses import dataclass
from functools import partial
from typing import Callable

import numpy as np
from scipy.integrate import quad

__all__ = [
    "NoiseSpectrum",
    "white_noise",
    "lorentzian_noise",
    "one_over_f_noise",
    "ramsey_filter",
    "cp_filter",
    "coherence_decay",
]


@dataclass(frozen=True)
class NoiseSpectrum:
    """Even, nonnegative spectral density ``S(omega)`` (rad^2/s^2 per rad/s)."""

    evaluator: Callable
    description: str = ""

    def __call__(self, omega):
        return self.evaluator(np.abs(np.asarray(omega, dtype=float)))

    def check(self, grid):
        """True if ``S(w) = S(-w) >= 0`` on `grid`."""
        grid = np.asarray(grid, dtype=float)
        s = self.evaluator(grid)
        return bool(np.all(s >= 0) and np.allclose(s, self.evaluator(-grid)))


def white_noise(S0):
    return NoiseSpectrum(lambda w: S0 * np.ones_like(np.asarray(w, dtype=float)), f"white S0={S0:g}")


def lorentzian_noise(S0, omega_c):
    """Low-pass spectrum ``S0 / (1 + (w / omega_c)^2)``."""
    return NoiseSpectrum(lambda w: S0 / (1.0 + (np.asarray(w) / omega_c) ** 2),
                         f"lorentzian S0={S0:g} wc={omega_c:g}")


def one_over_f_noise(A, omega_low):
    """``A / |w|`` above `omega_low` and flat ``A / omega_low`` below it."""
    if not omega_low > 0:
        raise ValueError("1/f noise needs a positive low-frequency cutoff")
    return NoiseSpectrum(lambda w: A / np.maximum(np.abs(np.asarray(w, dtype=float)), omega_low),
                         f"1/f A={A:g} wlow={omega_low:g}")


def ramsey_filter(omega, t):
    """``g0 = sin^2(w t / 2) / (w t / 2)^2`` (equal to 1 at ``w = 0``)."""
    if not t > 0:
        raise ValueError("t must be > 0")
    return np.sinc(np.asarray(omega, dtype=float) * t / (2.0 * np.pi)) ** 2


def _cp_numerator(y, N):
    # tan(y) sin(N y) written without the poles of tan: for even N,
    # sin(N y) / cos(y) = 2 sum_k (-1)^k sin((N - 1 - 2k) y)
    s = sum((-1) ** k * np.sin((N - 1 - 2 * k) * y) for k in range(N // 2))
    return 2.0 * np.sin(y) * s


def cp_filter(omega, t, N):
    """
    Carr-Purcell filter ``tan^2(w t / 2N) sin^2(w t / 2) / (w t / 2)^2``.

    For even N each pole of the tangent falls on a zero of ``sin(w t / 2)``,
    so the function is finite everywhere and is evaluated in a pole-free form.
    """
    if not t > 0:
        raise ValueError("t must be > 0")
    if int(N) != N or N < 2 or N % 2:
        raise ValueError("N must be an even integer >= 2")
    x = np.asarray(omega, dtype=float) * t / 2.0
    num = _cp_numerator(x / N, int(N)) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x == 0, 0.0, num / np.where(x == 0, 1.0, x) ** 2)
    return out


def _filter_fourier(filt, t):
    """
    Write ``g(w, t) = 4 / (w t)^2 * sum_j a_j cos(j w t / M)``.

    Returns ``(a, M)``. The numerator is a trigonometric polynomial; its
    coefficients are read off by FFT.
    """
    if isinstance(filt, partial) and filt.func is cp_filter:
        N = int(filt.keywords.get("N", filt.args[0] if filt.args else 0))
        M = N
        numerator = lambda y: _cp_numerator(y, N) ** 2  # noqa: E731
        degree = 2 * N
    elif filt is ramsey_filter:
        M = 1
        numerator = lambda y: np.sin(y) ** 2  # noqa: E731
        degree = 2
    else:
        return None
    # numerator(y) with y = w t / 2M has period pi in y; sample one period
    n = 4 * degree + 8
    y = np.pi * np.arange(n) / n
    c = np.fft.rfft(numerator(y)) / n
    a = np.zeros(degree + 1)
    a[0] = c[0].real
    # cos(2 m y) = cos(m w t / M)
    a[1:] = 2.0 * c[1:degree + 1].real
    return a, M


def _integral(spectrum, filt, t, n_periods, fourier, scale):
    """``int_0^inf g(w, t) S(w) dw`` in units of ``scale / t``, with ``u = w t``."""
    f = lambda u: filt(u / t, t) * spectrum(u / t) / scale  # noqa: E731
    total = 0.0
    for j in range(n_periods):
        val, _ = quad(f, 2.0 * np.pi * j, 2.0 * np.pi * (j + 1), epsabs=0.0, epsrel=1e-12,
                      limit=200)
        total += val
    U = 2.0 * np.pi * n_periods
    if fourier is None:
        # the tail is small next to the total, so an absolute tolerance suffices
        val, _ = quad(f, U, np.inf, epsabs=1e-10 * abs(total), epsrel=0.0, limit=500)
        return total + val
    a, M = fourier
    base = lambda u: 4.0 * spectrum(u / t) / (scale * u * u)  # noqa: E731
    tail, _ = quad(base, U, np.inf, epsabs=1e-15 * abs(total), epsrel=1e-12, limit=500)
    tail *= a[0]
    for m in range(1, a.size):
        if abs(a[m]) < 1e-14 * abs(a[0]):
            continue
        val, _ = quad(base, U, np.inf, weight="cos", wvar=m / M, limlst=200,
                      epsabs=1e-15 * abs(total))
        tail += a[m] * val
    return total + tail


def coherence_decay(spectrum, filt, t, rtol=1e-6, max_periods=4096):
    """
    Coherence ``exp[-(t^2/2) int dw/2pi g(w, t) S(w)]``.

    The integrand is even, so the integral runs over positive frequencies and
    is doubled. Whole filter periods ``2 pi / t`` are integrated adaptively
    up to a cutoff; beyond it the filter is expanded in cosines and each term
    is integrated to infinity with a Fourier-weighted rule. The cutoff doubles
    until successive results agree to `rtol`.

    Parameters
    ----------
    spectrum : NoiseSpectrum
    filt : callable
        ``filt(omega, t)``, e.g. :func:`ramsey_filter` or ``partial(cp_filter, N=8)``.
    t : float

    Raises
    ------
    ValueError
        If the spectrum is not finite at low frequency.
    """
    if not t > 0:
        raise ValueError("t must be > 0")
    s0 = spectrum(np.array([0.0, 1e-300]))
    if not np.all(np.isfinite(s0)):
        raise ValueError("spectrum diverges at low frequency; supply a cutoff")
    fourier = _filter_fourier(filt, t)
    scale = float(max(s0[0], spectrum(1.0 / t)))
    if scale == 0.0:
        return 1.0
    n = 8
    prev = _integral(spectrum, filt, t, n, fourier, scale)
    while True:
        n *= 2
        cur = _integral(spectrum, filt, t, n, fourier, scale)
        if abs(cur - prev) <= rtol * 1e-2 * abs(cur) or cur == prev:
            break
        if n >= max_periods:
            raise RuntimeError("coherence-decay quadrature did not converge")
        prev = cur
    integral = cur * scale / (np.pi * t)
    return float(np.exp(-0.5 * t * t * integral))
