"""Command-line interface: ``qutrit-readout {amplitudes,sme,sweep,ramsey,filters}``."""
import argparse
import json
import os
import sys
from functools import partial

import numpy as np

from . import __version__
from .analysis import classify, ScatterSet, frequency_sweep, theory_centroids, time_average_records
from .coherent import dephasing_rates, evolve_amplitudes, steady_state_amplitudes
from .config import MHZ, PER_US, US, load_config, serialize_config
from .effective import evolve_effective_state
from .errors import ConfigError, NumericalGuardError, StepGuardError, TruncationError
from .filters import (coherence_decay, cp_filter, lorentzian_noise, one_over_f_noise,
                      ramsey_filter, white_noise)
from .heterodyne import run_ensemble
from .lindblad import ramsey_probabilities

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def write_csv(path, header, rows, meta):
    """CSV with a leading ``# {json}`` metadata line."""
    rows = np.asarray(rows, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        fh.write(",".join(header) + "\n")
        for r in np.atleast_2d(rows):
            fh.write(",".join(repr(float(x)) for x in r) + "\n")


def read_csv(path):
    """Return ``(meta, header, data)`` for a file written by :func:`write_csv`."""
    with open(path, "r", encoding="utf-8") as fh:
        meta = json.loads(fh.readline()[2:])
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return meta, header, data


def cmd_amplitudes(cfg, out):
    """Cavity amplitudes, pointer separations and dephasing rates versus time."""
    p = cfg.params()
    a = cfg.data["amplitudes"]
    t = np.linspace(0.0, a["t_final_us"] * US, a["n_points"])
    amps = evolve_amplitudes(p, None, t)
    arr = amps.as_array()
    beta = np.abs(amps.beta())
    rates = dephasing_rates(amps, p)
    cols = [t]
    header = ["t"]
    for k, name in enumerate("gef"):
        cols += [arr[:, k].real, arr[:, k].imag]
        header += [f"re_alpha_{name}", f"im_alpha_{name}"]
    for k, name in enumerate(("ge", "gf", "ef")):
        cols.append(beta[:, k])
        header.append(f"abs_beta_{name}")
    for k, name in enumerate(("ge", "gf", "ef")):
        cols.append(rates.gamma_d[:, k])
        header.append(f"gamma_d_{name}")
    for k, name in enumerate(("ge", "gf", "ef")):
        cols.append(rates.gamma_m[:, k])
        header.append(f"gamma_m_{name}")
    ss = steady_state_amplitudes(p).as_array()
    meta = {"command": "amplitudes", "steady_state": [[z.real, z.imag] for z in ss]}
    path = os.path.join(out, "amplitudes.csv")
    write_csv(path, header, np.stack(cols, axis=1), meta)
    return [path]


def cmd_sme(cfg, out):
    """Heterodyne trajectory ensemble with IQ points and per-trajectory records."""
    hc = cfg.heterodyne_config()
    s = cfg.data["simulation"]
    rho0 = cfg.initial_state()
    res = run_ensemble(hc, rho0, save_every=s["save_every"], record_every=s["record_every"],
                       n_jobs=s["n_jobs"])
    lam = res.min_eigenvalue()
    if lam < -1e-7:
        raise NumericalGuardError(f"minimum eigenvalue {lam:.3e} below -1e-7")
    meta = {"command": "sme", "seed": hc.seed, "dt": hc.dt, "n_traj": hc.n_traj,
            "eta": hc.eta, "steady_state": hc.steady_state, "scheme": res.scheme,
            "min_eigenvalue": lam}
    paths = []

    def state_cols(states):
        cols, header = [], []
        for i in range(3):
            for j in range(3):
                cols += [states[:, i, j].real, states[:, i, j].imag]
                header += [f"re_rho_{i}{j}", f"im_rho_{i}{j}"]
        return cols, header

    cols, header = state_cols(res.mean_states)
    paths.append(os.path.join(out, "mean_state.csv"))
    write_csv(paths[-1], ["t"] + header, np.stack([res.times] + cols, axis=1), meta)

    det = evolve_effective_state(hc.model, rho0, res.times)
    cols, header = state_cols(det)
    paths.append(os.path.join(out, "effective_state.csv"))
    write_csv(paths[-1], ["t"] + header, np.stack([res.times] + cols, axis=1), meta)

    ent = res.entropy()
    paths.append(os.path.join(out, "entropy.csv"))
    write_csv(paths[-1], ["t", "mean_entropy", "std_entropy"],
              np.stack([res.times, ent.mean(axis=0), ent.std(axis=0)], axis=1), meta)

    window = tuple(x * US for x in s["window_us"])
    pts = time_average_records(res, window)
    centroids = theory_centroids(hc, window)
    final = np.real(np.diagonal(res.states[:, -1], axis1=-2, axis2=-1))
    true = np.argmax(final, axis=1)
    labels, cm = classify(ScatterSet(pts, centroids, true))
    paths.append(os.path.join(out, "iq_points.csv"))
    write_csv(paths[-1], ["traj", "vbar_I", "vbar_Q", "final_state", "label"],
              np.column_stack([np.arange(hc.n_traj), pts, true, labels]),
              dict(meta, window=list(window), centroids=centroids.tolist(),
                   confusion=cm.tolist()))

    if s["write_records"]:
        rdir = os.path.join(out, "records")
        os.makedirs(rdir, exist_ok=True)
        width = max(5, len(str(hc.n_traj - 1)))
        for i in range(hc.n_traj):
            path = os.path.join(rdir, f"traj_{i:0{width}d}.csv")
            write_csv(path, ["t", "V_I", "V_Q", "dW_I", "dW_Q"],
                      np.column_stack([res.record_times, res.record_I[i], res.record_Q[i],
                                       res.wiener_I[i], res.wiener_Q[i]]),
                      dict(meta, trajectory=i, record_dt=res.record_dt))
            paths.append(path)
    return paths


def cmd_sweep(cfg, out):
    """Steady-state pointer separations versus drive detuning."""
    p = cfg.params()
    sw = cfg.data["sweep"]
    grid = np.linspace(sw["delta_min_mhz"], sw["delta_max_mhz"], sw["n_points"]) * MHZ
    res = frequency_sweep(p, grid, eta=cfg.data["measurement"]["eta"])
    meta = {"command": "sweep", "argmax_delta_mhz": (res.argmax() / MHZ).tolist()}
    path = os.path.join(out, "sweep.csv")
    write_csv(path, ["delta_rd_mhz", "abs_beta_ge", "abs_beta_gf", "abs_beta_ef",
                     "dist_ge", "dist_gf", "dist_ef"],
              np.column_stack([grid / MHZ, res.beta, res.centroid_distance]), meta)
    return [path]


def cmd_ramsey(cfg, out):
    """Ramsey fringe probabilities versus free-evolution time."""
    r = cfg.data["ramsey"]
    T = np.linspace(0.0, r["t_free_max_us"] * US, r["n_points"])
    pg, pe = ramsey_probabilities(r["omega_d_mhz"] * MHZ, r["t_pi2_ns"] * 1e-9,
                                  r["delta_mhz"] * MHZ, r["gamma_2_per_us"] * PER_US, T)
    path = os.path.join(out, "ramsey.csv")
    write_csv(path, ["t_free", "p_g", "p_e"], np.column_stack([T, pg, pe]), {"command": "ramsey"})
    return [path]


def _spectrum(f):
    if f["spectrum"] == "white":
        return white_noise(f["s0"])
    if f["spectrum"] == "lorentzian":
        return lorentzian_noise(f["s0"], f["omega_c_mhz"] * MHZ)
    return one_over_f_noise(f["s0"], f["omega_low_mhz"] * MHZ)


def cmd_filters(cfg, out):
    """Ramsey and Carr-Purcell filter functions and the resulting coherence decay."""
    f = cfg.data["filters"]
    t_ref = f["t_us"][0] * US
    w = np.linspace(0.0, f["omega_max_mhz"] * MHZ, f["n_omega"])
    cols = [w, ramsey_filter(w, t_ref)] + [cp_filter(w, t_ref, n) for n in f["cp_n"]]
    header = ["omega", "g_ramsey"] + [f"g_cp{n}" for n in f["cp_n"]]
    p1 = os.path.join(out, "filters.csv")
    write_csv(p1, header, np.column_stack(cols), {"command": "filters", "t": t_ref})
    spec = _spectrum(f)
    ts = np.array(f["t_us"]) * US
    rows = []
    for t in ts:
        rows.append([t, coherence_decay(spec, ramsey_filter, t)]
                    + [coherence_decay(spec, partial(cp_filter, N=n), t) for n in f["cp_n"]])
    p2 = os.path.join(out, "coherence.csv")
    write_csv(p2, ["t", "ramsey"] + [f"cp{n}" for n in f["cp_n"]], rows,
              {"command": "filters", "spectrum": spec.description})
    return [p1, p2]


COMMANDS = {
    "amplitudes": cmd_amplitudes,
    "sme": cmd_sme,
    "sweep": cmd_sweep,
    "ramsey": cmd_ramsey,
    "filters": cmd_filters,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML scenario file")
    common.add_argument("--seed", type=int, help="RNG seed (overrides the config)")
    common.add_argument("--out", metavar="DIR", default=".", help="output directory")
    common.add_argument("--traj", type=int, metavar="N", help="number of trajectories")
    common.add_argument("--dt", type=float, metavar="SECONDS", help="time step")
    common.add_argument("--eta", type=float, help="measurement efficiency")
    common.add_argument("--steady-state", action="store_true",
                        help="freeze cavity amplitudes at their steady state")
    parser = argparse.ArgumentParser(prog="qutrit-readout",
                                     description="Dispersive qutrit readout simulator.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__doc__)
    sub.add_parser("dump-config", parents=[common], help="Print the canonical configuration.")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = cfg.with_overrides(**{
            "simulation.seed": args.seed,
            "simulation.n_traj": args.traj,
            "measurement.dt_s": args.dt,
            "measurement.eta": args.eta,
            "measurement.steady_state": True if args.steady_state else None,
        })
        if args.command == "dump-config":
            sys.stdout.write(serialize_config(cfg))
            return 0
        if args.command == "sme":
            cfg.heterodyne_config().check_step_guard()
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StepGuardError, TruncationError) as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    os.makedirs(args.out, exist_ok=True)
    try:
        paths = COMMANDS[args.command](cfg, args.out)
    except (StepGuardError, NumericalGuardError, TruncationError) as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    n = len(paths)
    print(f"wrote {n} file{'s' if n != 1 else ''} to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
