"""Readout post-processing: IQ points, nearest-centroid classification, frequency sweeps."""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import erfc

from .coherent import steady_state_amplitudes
from .heterodyne import quadrature_means
from .params import PAIRS

__all__ = [
    "IQPoint",
    "ScatterSet",
    "SweepResult",
    "time_average_record",
    "time_average_records",
    "theory_centroids",
    "fit_centroids",
    "classify",
    "confusion_matrix",
    "two_gaussian_error",
    "frequency_sweep",
    "separation_snr",
]


class IQPoint(NamedTuple):
    vbar_I: float
    vbar_Q: float


@dataclass
class ScatterSet:
    """
    Time-averaged outcomes in the IQ plane.

    Parameters
    ----------
    points : ndarray
        Shape ``(n, 2)``.
    centroids : ndarray
        Shape ``(3, 2)``, rows ordered g, e, f.
    labels_true : ndarray, optional
        Integer labels 0, 1, 2.
    """

    points: np.ndarray
    centroids: np.ndarray
    labels_true: np.ndarray = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.centroids = np.asarray(self.centroids, dtype=float)
        if self.labels_true is not None:
            self.labels_true = np.asarray(self.labels_true, dtype=int)


def _window_mask(times, window, dt):
    t0, t1 = window
    if not t1 > t0:
        raise ValueError("empty averaging window")
    # tolerate roundoff in the sample stamps
    tol = 1e-9 * dt
    return (times >= t0 - tol) & (times < t1 - tol)


def time_average_record(traj, window):
    """
    Mean of the voltage samples whose bins start inside ``[t0, t1)``.

    Raises
    ------
    ValueError
        If no sample falls in the window.
    """
    mask = _window_mask(np.asarray(traj.record_times), window, traj.record_dt)
    if not mask.any():
        raise ValueError(f"no record samples in window {window}")
    return IQPoint(float(np.mean(traj.record_I[mask])), float(np.mean(traj.record_Q[mask])))


def time_average_records(ensemble, window):
    """Vectorized :func:`time_average_record` over an ensemble; returns ``(n_traj, 2)``."""
    mask = _window_mask(ensemble.record_times, window, ensemble.record_dt)
    if not mask.any():
        raise ValueError(f"no record samples in window {window}")
    return np.stack([ensemble.record_I[:, mask].mean(axis=1),
                     ensemble.record_Q[:, mask].mean(axis=1)], axis=-1)


def theory_centroids(cfg, window):
    """
    Predicted cluster centres ``2 sqrt(eta kappa) <(I_bar_a, Q_bar_a)>_window``.

    The average runs over the integrator steps whose start lies in the window,
    matching the sampled records.
    """
    t = cfg.step_times()
    mask = _window_mask(t, window, cfg.dt)
    if not mask.any():
        raise ValueError(f"no steps in window {window}")
    iq = quadrature_means(cfg.model.amplitudes(t[mask]), cfg.phi_lo)
    g = 2.0 * np.sqrt(cfg.eta * cfg.params.kappa)
    return g * np.stack([iq[0].mean(axis=0), iq[1].mean(axis=0)], axis=-1)


def fit_centroids(points, labels, n_classes=3):
    """Per-class sample means (NaN rows for empty classes)."""
    points = np.asarray(points, dtype=float)
    labels = np.asarray(labels)
    out = np.full((n_classes, 2), np.nan)
    for a in range(n_classes):
        if np.any(labels == a):
            out[a] = points[labels == a].mean(axis=0)
    return out


def confusion_matrix(labels_true, labels_pred, n_classes=3):
    """Counts with true class along rows and predicted class along columns."""
    cm = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(cm, (np.asarray(labels_true), np.asarray(labels_pred)), 1)
    return cm


def classify(scatter, rtol=1e-12):
    """
    Nearest-centroid labels in the IQ plane.

    Distances equal within `rtol` are ties and go to the lower level
    (g before e before f).

    Returns
    -------
    labels : ndarray
    confusion : ndarray or None
        Present when ``scatter.labels_true`` is set.

    Raises
    ------
    ValueError
        If two centroids coincide.
    """
    c = scatter.centroids
    for i, j in PAIRS:
        if np.allclose(c[i], c[j], rtol=0.0, atol=1e-300):
            raise ValueError(f"centroids {i} and {j} coincide")
    d2 = np.sum((scatter.points[:, None, :] - c[None, :, :]) ** 2, axis=-1)
    dmin = d2.min(axis=1, keepdims=True)
    labels = np.argmax(d2 <= dmin * (1.0 + rtol), axis=1)
    cm = None
    if scatter.labels_true is not None:
        cm = confusion_matrix(scatter.labels_true, labels, len(c))
    return labels, cm


def two_gaussian_error(d, s):
    """Misassignment probability ``erfc(d / (2 sqrt(2) s)) / 2`` for isotropic Gaussians."""
    return 0.5 * erfc(np.asarray(d) / (2.0 * np.sqrt(2.0) * s))


@dataclass
class SweepResult:
    delta_rd: np.ndarray
    beta: np.ndarray
    centroid_distance: np.ndarray

    def argmax(self):
        """Detuning maximizing each pair separation (ge, gf, ef)."""
        return self.delta_rd[np.argmax(self.beta, axis=0)]


def frequency_sweep(p, delta_grid, eta=1.0):
    """
    Steady-state pointer separations over a grid of drive detunings.

    Returns
    -------
    SweepResult
        ``beta[k]`` holds ``|alpha_a - alpha_b|`` for (ge, gf, ef) at
        ``delta_grid[k]``; ``centroid_distance = 2 sqrt(eta kappa) beta``.
    """
    delta = np.asarray(delta_grid, dtype=float)
    if not np.all(np.isfinite(delta)):
        raise ValueError("delta_grid must be finite")
    beta = np.empty((delta.size, 3))
    for k, d in enumerate(delta):
        a = steady_state_amplitudes(p.replace(delta_rd=float(d))).as_array()
        beta[k] = [abs(a[i] - a[j]) for i, j in PAIRS]
    return SweepResult(delta, beta, 2.0 * np.sqrt(eta * p.kappa) * beta)


def separation_snr(points_a, points_b):
    """Distance between class means divided by the pooled per-axis standard deviation."""
    a = np.asarray(points_a, dtype=float)
    b = np.asarray(points_b, dtype=float)
    d = np.linalg.norm(a.mean(axis=0) - b.mean(axis=0))
    s = np.sqrt(0.5 * (a.var(axis=0, ddof=1).mean() + b.var(axis=0, ddof=1).mean()))
    return d / s
