"""
Acceptance criteria 1-10.

Each test stores a one-line verdict in ``RESULTS``; ``conftest.py`` prints
them in the terminal summary. The module also runs as a script:

    python3 tests/test_acceptance.py
"""
import functools
import os
import sys
import time

import numpy as np
from scipy.optimize import curve_fit

sys.path.insert(0, os.path.dirname(__file__))

from conftest import CHI, ETA, KAPPA, REFERENCE_STATE, TWOPI, nominal_params  # noqa: E402
from qutrit_readout.analysis import (  # noqa: E402
    ScatterSet, classify, fit_centroids, frequency_sweep, separation_snr, theory_centroids,
    time_average_records,
)
from qutrit_readout.coherent import (  # noqa: E402
    dephasing_rates, evolve_amplitudes, evolve_coherences, steady_state_amplitudes,
    steady_state_dephasing,
)
from qutrit_readout.effective import (  # noqa: E402
    EffectiveQutritModel, evolve_effective_state, evolve_populations,
)
from qutrit_readout.filters import (  # noqa: E402
    coherence_decay, cp_filter, ramsey_filter, white_noise,
)
from qutrit_readout.heterodyne import HeterodyneConfig, run_ensemble  # noqa: E402
from qutrit_readout.homodyne import HomodyneConfig, measurement_strength, run_kraus_chain  # noqa: E402
from qutrit_readout.lindblad import (  # noqa: E402
    QubitDecayParams, build_composite_generator, evolve_lindblad, qubit_decay_analytic,
    qubit_decay_model, ramsey_probabilities, truncation_ok,
)
from qutrit_readout.operators import (  # noqa: E402
    FockConfig, hermiticity_error, hermitize, partial_trace_cavity,
)
from qutrit_readout.params import PAIRS, QutritCavityParams  # noqa: E402

RESULTS = {}

# frozen pilot settings
JUMP_CONFIDENCE = 0.9
JUMP_FRACTION = 0.30
# early on all trajectories agree to roundoff, so the spread is clamped before forming z-scores
SE_FLOOR = 1e-12
GE = np.diag([1.0, 0.0, 0.0]).astype(complex)
EE = np.diag([0.0, 1.0, 0.0]).astype(complex)


def record(n, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
    RESULTS[n] = line
    print(line)
    return ok


def random_sweep(n=100, seed=0):
    """Parameters with kappa, |chi|, |delta_rd|, eps log-uniform in [1e5, 1e8]."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        kappa, chi, delta, eps = 10 ** rng.uniform(5, 8, 4)
        out.append(QutritCavityParams.from_drive(kappa, chi * rng.choice([-1, 1]),
                                                 delta * rng.choice([-1, 1]), eps))
    return out


# scenarios are cached so criterion 10 can inspect every state produced


@functools.lru_cache(maxsize=None)
def composite_scenario():
    p = nominal_params()
    n_max = next(n for n in range(1, 64) if truncation_ok(p, FockConfig(n)))
    cfg = FockConfig(n_max)
    t = np.linspace(0.0, 5.0 / KAPPA, 101)
    vac = np.zeros((n_max, n_max))
    vac[0, 0] = 1.0
    full = evolve_lindblad(build_composite_generator(p, cfg), np.kron(REFERENCE_STATE, vac), t)
    return p, n_max, t, full


QUBIT = QubitDecayParams(omega_q_tilde=TWOPI * 2e6, gamma_1=1 / 8e-6, gamma_phi=1 / 20e-6)
QUBIT_PSI = (np.sqrt(0.3), np.sqrt(0.7) * np.exp(0.4j))


@functools.lru_cache(maxsize=None)
def qubit_decay_scenario(steps_per_radian):
    psi = np.array(QUBIT_PSI)
    t = np.linspace(0.0, 5.0 / QUBIT.gamma_1, 201)
    num = evolve_lindblad(qubit_decay_model(QUBIT), np.outer(psi, psi.conj()), t,
                          max_step=1.0 / (steps_per_radian * QUBIT.omega_q_tilde))
    return t, num


def homodyne_config(seed=5):
    k_m = measurement_strength(CHI, KAPPA, 2.0)
    return HomodyneConfig(CHI, KAPPA, 2.0, dt=0.002 / k_m, seed=seed)


HOMODYNE_PSI = np.array([np.sqrt(0.7), np.sqrt(0.3)], dtype=complex)


@functools.lru_cache(maxsize=None)
def homodyne_scenario(n_traj=2000):
    cfg = homodyne_config()
    n_steps = int(round(10.0 / (cfg.k_m * cfg.dt)))
    states, qs = run_kraus_chain(cfg, np.outer(HOMODYNE_PSI, HOMODYNE_PSI.conj()), n_traj, n_steps)
    return cfg, states, qs


def mean_config(n_traj=1000):
    return HeterodyneConfig(nominal_params(), ETA, 1e-9, n_traj, 2e-6, seed=1)


def cluster_config(n_traj=1000):
    return HeterodyneConfig(nominal_params(), ETA, 1e-9, n_traj, 4e-6, seed=11)


def decay_config(n_traj=1000):
    p = nominal_params(gamma_1_ge=1 / 35e-6, gamma_1_ef=1 / 35e-6, gamma_1_gf=1e3)
    return HeterodyneConfig(p, ETA, 1e-9, n_traj, 40e-6, seed=1)


def snr_configs(n_traj=4000, params=None, seeds=(3, 4)):
    p = nominal_params() if params is None else params
    return [HeterodyneConfig(p, ETA, 4e-9, n_traj, 8e-6, seed=s, steady_state=True) for s in seeds]


RUN_OPTS = {
    "mean": dict(save_every=20, record_every=1),
    "cluster": dict(save_every=4000, record_every=10),
    "decay": dict(save_every=50, record_every=100),
    "snr": dict(save_every=2000, record_every=25),
}
CONFIGS = {"mean": mean_config, "cluster": cluster_config, "decay": decay_config}


@functools.lru_cache(maxsize=None)
def ensemble(name, n_traj=1000, n_jobs=1):
    cfg = CONFIGS[name](n_traj)
    return run_ensemble(cfg, REFERENCE_STATE, n_jobs=n_jobs, **RUN_OPTS[name])


@functools.lru_cache(maxsize=None)
def snr_pair(n_traj=4000, n_jobs=1):
    cg, ce = snr_configs(n_traj)
    return (run_ensemble(cg, GE, n_jobs=n_jobs, **RUN_OPTS["snr"]),
            run_ensemble(ce, EE, n_jobs=n_jobs, **RUN_OPTS["snr"]))


# ---------------------------------------------------------------- criteria


class TestCriterion1:
    def test_transient_amplitudes_at_40_over_kappa(self):
        t0 = time.perf_counter()
        worst = 0.0
        for p in random_sweep():
            a = evolve_amplitudes(p, None, [40.0 / p.kappa]).as_array()[0]
            ss = steady_state_amplitudes(p).as_array()
            worst = max(worst, float(np.max(np.abs(a - ss) / np.abs(ss))))
        elapsed = time.perf_counter() - t0
        floor = np.exp(-20.0)
        ok = worst < 1e-9 and elapsed < 1.0
        record(1, ok, f"max rel error {worst:.3e} (tol 1e-9); the undamped transient at "
                      f"t=40/kappa is exp(-20)={floor:.3e} of the steady value, so the "
                      f"tolerance is unreachable by the exact solution; {elapsed:.2f}s")
        assert ok


class TestCriterion2:
    def test_dephasing_identity(self):
        t0 = time.perf_counter()
        worst = 0.0
        for p in random_sweep():
            r = dephasing_rates(steady_state_amplitudes(p), p)
            closed = steady_state_dephasing(p)
            rel = np.abs(r.gamma_m - 2.0 * r.gamma_d) / np.abs(r.gamma_m)
            rel_closed = np.abs(r.gamma_m - closed.gamma_m) / closed.gamma_m
            worst = max(worst, float(rel.max()), float(rel_closed.max()))
        elapsed = time.perf_counter() - t0
        ok = worst < 1e-12 and elapsed < 1.0
        record(2, ok, f"max rel |Gamma_m - 2 Gamma_d| = {worst:.2e} (tol 1e-12); {elapsed:.2f}s")
        assert ok


class TestCriterion3:
    def test_composite_vs_reduction(self):
        t0 = time.perf_counter()
        p, n_max, t, full = composite_scenario()
        red = partial_trace_cavity(full, n_max)
        drift = float(np.max(np.abs(np.real(np.diagonal(red, axis1=1, axis2=2))
                                    - np.real(np.diag(REFERENCE_STATE)))))
        envs = evolve_coherences(p, evolve_amplitudes(p, None, t), [0.3, 0.36, 0.24], t).as_array()
        eff = evolve_effective_state(EffectiveQutritModel(p), REFERENCE_STATE, t)
        coh = max(float(np.max(np.abs(red[:, i, j] - envs[:, m]))) for m, (i, j) in enumerate(PAIRS))
        coh_eff = float(np.max(np.abs(red - eff)))
        elapsed = time.perf_counter() - t0
        ok = drift < 1e-6 and max(coh, coh_eff) < 1e-4 and elapsed < 300
        record(3, ok, f"n_max={n_max}, population drift {drift:.1e} (tol 1e-6), coherence "
                      f"error {coh:.1e} envelopes / {coh_eff:.1e} effective ME (tol 1e-4); "
                      f"{elapsed:.1f}s")
        assert ok


class TestCriterion4:
    def test_qubit_decay(self):
        t0 = time.perf_counter()
        t, num = qubit_decay_scenario(100)
        exact = qubit_decay_analytic(QUBIT, *QUBIT_PSI, t)
        err = float(np.max(np.abs(num - exact)))
        coarse = [float(np.max(np.abs(qubit_decay_scenario(s)[1] - exact))) for s in (8, 16)]
        ratio = coarse[0] / coarse[1]
        elapsed = time.perf_counter() - t0
        ok = err < 1e-8 and 12 <= ratio <= 20 and elapsed < 10
        record(4, ok, f"max error {err:.1e} (tol 1e-8), step-halving ratio {ratio:.1f} "
                      f"(want 12-20); {elapsed:.1f}s")
        assert ok


class TestCriterion5:
    def test_homodyne_statistics(self):
        t0 = time.perf_counter()
        cfg, states, _ = homodyne_scenario()
        n = len(states)
        z0 = abs(HOMODYNE_PSI[0]) ** 2 - abs(HOMODYNE_PSI[1]) ** 2
        z = states[:, 0, 0].real - states[:, 1, 1].real
        z_err = abs(z.mean() - z0) / (z.std(ddof=1) / np.sqrt(n))
        p_g = abs(HOMODYNE_PSI[0]) ** 2
        frac_g = float(np.mean(z > 0))
        born = abs(frac_g - p_g) / np.sqrt(p_g * (1 - p_g) / n)
        purity = np.real(np.einsum("nij,nji->n", states, states))
        pur_dev = float(np.max(np.abs(purity - 1.0)))
        elapsed = time.perf_counter() - t0
        ok = z_err <= 3 and born <= 3 and pur_dev < 1e-6 and elapsed < 120
        record(5, ok, f"E[z_T] off by {z_err:.2f} SE, P(g) {frac_g:.3f} vs {p_g:.1f} "
                      f"({born:.2f} sigma), purity deviation {pur_dev:.1e}; {elapsed:.1f}s")
        assert ok


class TestCriterion6:
    def test_ensemble_vs_effective_me(self):
        t0 = time.perf_counter()
        res = ensemble("mean")
        cfg = mean_config()
        n = res.n_traj
        ref = evolve_effective_state(cfg.model, REFERENCE_STATE, res.times)
        dev = float(np.max(np.abs(res.mean_states - ref)))
        pops = np.real(np.diagonal(res.states, axis1=-2, axis2=-1))
        se = pops.std(axis=0, ddof=1) / np.sqrt(n)
        drift = np.abs(pops.mean(axis=0) - np.real(np.diag(REFERENCE_STATE)))
        z = float(np.max(drift / np.maximum(se, SE_FLOOR)))

        cl = ensemble("cluster")
        ccfg = cluster_config()
        window = (0.0, ccfg.t_final)
        pts = time_average_records(cl, window)
        cen = theory_centroids(ccfg, window)
        final = np.argmax(np.real(np.diagonal(cl.states[:, -1], axis1=-2, axis2=-1)), axis=1)
        labels, _ = classify(ScatterSet(pts, cen, final))
        acc = float(np.mean(labels == final))
        fitted = fit_centroids(pts, final)
        cse = np.array([pts[final == a].std(axis=0, ddof=1) / np.sqrt(np.sum(final == a))
                        for a in range(3)])
        cen_z = float(np.max(np.abs(fitted - cen) / cse))

        rg, re_ = snr_pair()
        s_short = separation_snr(time_average_records(rg, (0, 2e-6)),
                                 time_average_records(re_, (0, 2e-6)))
        s_long = separation_snr(time_average_records(rg, (0, 8e-6)),
                                time_average_records(re_, (0, 8e-6)))
        ratio = s_long / s_short

        grid = -CHI + CHI * np.arange(-8, 9) / 4
        sep = []
        for d in grid:
            cg, ce = snr_configs(500, nominal_params().replace(delta_rd=float(d)), seeds=(21, 22))
            a = time_average_records(run_ensemble(cg, GE, **RUN_OPTS["snr"]), (0, 8e-6))
            b = time_average_records(run_ensemble(ce, EE, **RUN_OPTS["snr"]), (0, 8e-6))
            sep.append(np.linalg.norm(a.mean(axis=0) - b.mean(axis=0)))
        peak = grid[int(np.argmax(sep))]
        theory_peak = frequency_sweep(nominal_params(), grid, eta=ETA).argmax()[0]
        elapsed = time.perf_counter() - t0

        checks = {
            "mean": dev <= 5 / np.sqrt(n) and res.min_eigenvalue() >= -1e-7,
            "qnd": z <= 3,
            "clusters": acc >= 0.9 and cen_z <= 4,
            "sqrtT": abs(ratio / 2.0 - 1.0) <= 0.1,
            "sweep": -CHI < peak < 0,
        }
        ok = all(checks.values()) and elapsed < 300
        record(6, ok, f"|mean-ME| {dev:.4f} (tol {5 / np.sqrt(n):.3f}), QND max {z:.2f} sigma, "
                      f"cluster accuracy {acc:.3f} with centroids within {cen_z:.1f} SE, "
                      f"SNR(8us)/SNR(2us) {ratio:.3f} (want 2 +- 10%), sweep peak "
                      f"{peak / CHI:+.2f} chi (theory {theory_peak / CHI:+.2f} chi); "
                      f"{elapsed:.0f}s" + "".join(f"; {k} FAILED" for k, v in checks.items() if not v))
        assert ok


def count_jumps(pops, threshold=JUMP_CONFIDENCE):
    """Changes of confident label along each trajectory (``pops`` is ``(n, t, 3)``)."""
    conf = pops.max(axis=-1) > threshold
    lab = np.argmax(pops, axis=-1)
    return np.array([np.count_nonzero(np.diff(lab[i][conf[i]])) for i in range(len(pops))])


class TestCriterion7:
    def test_long_measurement_decay(self):
        t0 = time.perf_counter()
        cfg = decay_config()
        res = ensemble("decay")
        pops = np.real(np.diagonal(res.states, axis1=-2, axis2=-1))
        ref = evolve_populations(cfg.params, np.real(np.diag(REFERENCE_STATE)), res.times)
        se = pops.std(axis=0, ddof=1) / np.sqrt(res.n_traj)
        diff = np.abs(pops.mean(axis=0) - ref)
        z = float(np.max(diff / np.maximum(se, SE_FLOOR)))
        frac = float(np.mean(count_jumps(pops) >= 1))
        elapsed = time.perf_counter() - t0
        ok = z <= 3 and frac >= JUMP_FRACTION
        record(7, ok, f"diagonals within {z:.2f} sigma of rate equations, {100 * frac:.1f}% "
                      f"of paths jump (threshold {100 * JUMP_FRACTION:.0f}%); {elapsed:.0f}s")
        assert ok


class TestCriterion8:
    def test_ramsey(self):
        t0 = time.perf_counter()
        delta = TWOPI * 1.3e6
        gamma_2 = 1 / 4e-6
        n = 4096
        T = np.arange(n) * 5e-9
        _, pe = ramsey_probabilities(TWOPI * 5e6, 20e-9, delta, gamma_2, T)
        spec = np.abs(np.fft.rfft(pe - pe.mean()))
        freqs = np.fft.rfftfreq(n, T[1])
        bin_err = abs(freqs[np.argmax(spec)] - delta / TWOPI) / freqs[1]

        def model(t, phase, d, g):
            return 0.5 + 0.5 * np.cos(phase + d * t * 1e6) * np.exp(-g * t * 1e6)

        popt, _ = curve_fit(model, T, pe, p0=[0.0, 2 * np.pi * freqs[np.argmax(spec)] * 1e-6,
                                              1.0 / (T[-1] * 1e6)])
        g_err = abs(popt[2] * 1e6 / gamma_2 - 1)
        elapsed = time.perf_counter() - t0
        ok = bin_err <= 1 and g_err < 0.02 and elapsed < 5
        record(8, ok, f"FFT peak {bin_err:.2f} bins from the beat frequency, fitted gamma_2 "
                      f"off by {100 * g_err:.3f}%; {elapsed:.2f}s")
        assert ok


class TestCriterion9:
    def test_filters(self):
        t0 = time.perf_counter()
        S0 = 3e4
        rates = [-np.log(coherence_decay(white_noise(S0), ramsey_filter, t)) / t
                 for t in (1e-6, 1e-5, 1e-4)]
        rate_err = float(np.max(np.abs(np.array(rates) / (S0 / 2) - 1)))
        t = 1e-6
        zero = [float(cp_filter(0.0, t, N)) for N in (2, 4, 8)]
        w = np.linspace(0, 200 / t, 400001)[1:]
        peaks = [w[np.argmax(cp_filter(w, t, N))] for N in (2, 4, 8, 16)]
        monotone = bool(np.all(np.diff(peaks) > 0))
        elapsed = time.perf_counter() - t0
        ok = rate_err < 1e-3 and max(zero) == 0.0 and monotone and elapsed < 5
        record(9, ok, f"white-noise rate error {rate_err:.1e} (tol 1e-3), CP filter at 0 "
                      f"{max(zero):.0e}, peaks {[round(float(x * t), 2) for x in peaks]} /t "
                      f"monotone={monotone}; {elapsed:.2f}s")
        assert ok


class TestCriterion10:
    def test_structural_invariants(self):
        t0 = time.perf_counter()
        scenarios = {
            "composite": composite_scenario()[3],
            "qubit_decay": qubit_decay_scenario(100)[1],
            "homodyne": homodyne_scenario()[1],
            "sme_mean": ensemble("mean").states,
            "sme_cluster": ensemble("cluster").states,
            "sme_decay": ensemble("decay").states,
            "sme_snr_g": snr_pair()[0].states,
            "sme_snr_e": snr_pair()[1].states,
        }
        trace = herm = 0.0
        eig = np.inf
        for states in scenarios.values():
            trace = max(trace, float(np.max(np.abs(np.trace(states, axis1=-2, axis2=-1) - 1))))
            herm = max(herm, hermiticity_error(hermitize(states)))
            eig = min(eig, float(np.min(np.linalg.eigvalsh(hermitize(states)))))

        # trajectory i owns a fixed random stream, so a smaller parallel rerun must
        # reproduce the first trajectories bit for bit
        identical = []
        for name in ("mean", "cluster", "decay"):
            sub = run_ensemble(CONFIGS[name](40), REFERENCE_STATE, n_jobs=2, **RUN_OPTS[name])
            full = ensemble(name)
            identical.append(np.array_equal(sub.states, full.states[:40])
                             and np.array_equal(sub.record_I, full.record_I[:40]))
        for full, (cfg, rho) in zip(snr_pair(), zip(snr_configs(40), (GE, EE))):
            sub = run_ensemble(cfg, rho, n_jobs=2, **RUN_OPTS["snr"])
            identical.append(np.array_equal(sub.states, full.states[:40]))
        hcfg, hstates, hq = homodyne_scenario()
        n_steps = hq.shape[1]
        sub_states, sub_q = run_kraus_chain(hcfg, np.outer(HOMODYNE_PSI, HOMODYNE_PSI.conj()),
                                            40, n_steps)
        identical.append(np.array_equal(sub_states, hstates[:40]) and np.array_equal(sub_q, hq[:40]))
        identical.append(np.array_equal(composite_scenario.__wrapped__()[3], scenarios["composite"]))
        elapsed = time.perf_counter() - t0
        ok = trace <= 1e-9 and herm <= 1e-12 and eig >= -1e-7 and all(identical)
        record(10, ok, f"{len(scenarios)} scenarios: trace error {trace:.1e}, hermiticity "
                       f"{herm:.1e}, min eigenvalue {eig:.1e}, bit-identical reruns "
                       f"{sum(identical)}/{len(identical)}; {elapsed:.0f}s")
        assert ok


def main():
    tests = [TestCriterion1, TestCriterion2, TestCriterion3, TestCriterion4, TestCriterion5,
             TestCriterion6, TestCriterion7, TestCriterion8, TestCriterion9, TestCriterion10]
    failed = 0
    for cls in tests:
        obj = cls()
        for name in dir(obj):
            if name.startswith("test_"):
                try:
                    getattr(obj, name)()
                except AssertionError:
                    failed += 1
    print(f"{len(tests) - failed}/{len(tests)} criteria passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
