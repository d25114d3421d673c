"""
Scenario configuration files (YAML).

Frequencies, detunings, the dispersive shift, the cavity linewidths and the
drive amplitude are given as cyclic frequencies in MHz (the value of
``x / 2 pi``) and are multiplied by ``2 pi 1e6`` once, on load. Relaxation
and pure-dephasing rates are given in 1/us. Times are in microseconds except
``dt_s`` (seconds).
"""
import copy
from dataclasses import dataclass

import numpy as np
import yaml

from .errors import ConfigError
from .params import QutritCavityParams

__all__ = ["SCHEMA_VERSION", "DEFAULTS", "ScenarioConfig", "parse_config", "load_config",
           "serialize_config", "MHZ", "PER_US", "US"]

SCHEMA_VERSION = 1
MHZ = 2.0 * np.pi * 1e6
PER_US = 1e6
US = 1e-6

REFERENCE_STATE = [[0.5, 0.3, 0.36], [0.3, 0.2, 0.24], [0.36, 0.24, 0.3]]

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "system": {
        "omega_q_mhz": 0.0,
        "alpha_q_mhz": 0.0,
        "chi_mhz": 0.6,
        "delta_rd_mhz": -0.6,
        "kappa_in_mhz": 1.35,
        "kappa_out_mhz": 1.35,
        "kappa_int_mhz": 0.0,
        "epsilon_mhz": 2.7,
        "epsilon_phase": 0.0,
        "gamma_1_ge_per_us": 0.0,
        "gamma_1_gf_per_us": 0.0,
        "gamma_1_ef_per_us": 0.0,
        "gamma_phi_ge_per_us": 0.0,
        "gamma_phi_gf_per_us": 0.0,
        "gamma_phi_ef_per_us": 0.0,
    },
    "measurement": {
        "eta": 0.04,
        "phi_lo": 0.0,
        "dt_s": 1e-9,
        "steady_state": False,
    },
    "simulation": {
        "n_traj": 100,
        "t_final_us": 2.0,
        "seed": 0,
        "save_every": 10,
        "record_every": 1,
        "window_us": [0.0, 2.0],
        "initial_state": REFERENCE_STATE,
        "write_records": True,
        "n_jobs": 1,
    },
    "amplitudes": {"t_final_us": 2.0, "n_points": 201},
    "sweep": {"delta_min_mhz": -3.0, "delta_max_mhz": 2.0, "n_points": 201},
    "ramsey": {
        "omega_d_mhz": 5.0,
        "t_pi2_ns": 20.0,
        "delta_mhz": 1.0,
        "gamma_2_per_us": 0.1,
        "t_free_max_us": 20.0,
        "n_points": 2001,
    },
    "filters": {
        "spectrum": "lorentzian",
        "s0": 1e5,
        "omega_c_mhz": 0.01,
        "omega_low_mhz": 1e-5,
        "cp_n": [2, 4, 8],
        "t_us": [0.5, 1.0, 2.0, 5.0, 10.0],
        "omega_max_mhz": 10.0,
        "n_omega": 1001,
    },
}

_SPECTRA = ("white", "lorentzian", "one_over_f")


def _err(path, msg):
    raise ConfigError(f"{path}: {msg}")


def _number(path, v, lo=None, hi=None, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _err(path, f"expected a number, got {v!r}")
    if not np.isfinite(v):
        _err(path, "must be finite")
    if integer:
        if int(v) != v:
            _err(path, f"expected an integer, got {v!r}")
        v = int(v)
    else:
        v = float(v)
    if lo is not None and v < lo:
        _err(path, f"must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        _err(path, f"must be <= {hi}, got {v}")
    return v


def _merge(path, default, raw):
    if raw is None:
        return copy.deepcopy(default)
    if isinstance(default, dict):
        if not isinstance(raw, dict):
            _err(path, "expected a mapping")
        unknown = set(raw) - set(default)
        if unknown:
            _err(path, f"unknown keys {sorted(unknown)}")
        return {k: _merge(f"{path}.{k}" if path else k, default[k], raw.get(k)) for k in default}
    return raw


def _complex_entry(path, v):
    if isinstance(v, str):
        try:
            v = complex(v.replace(" ", ""))
        except ValueError:
            _err(path, f"cannot parse {v!r} as a complex number")
    elif isinstance(v, bool) or not isinstance(v, (int, float)):
        _err(path, f"expected a number, got {v!r}")
    c = complex(v)
    if not np.isfinite(c):
        _err(path, "must be finite")
    return c


def _canonical_complex(c):
    re, im = float(c.real), float(c.imag)
    if im == 0:
        return re
    return f"{re!r}{'+' if im > 0 else '-'}{abs(im)!r}j"


def _validate(d):
    if d["schema_version"] != SCHEMA_VERSION:
        _err("schema_version", f"unsupported version {d['schema_version']!r}")
    sysd = d["system"]
    for k in list(sysd):
        lo = 0.0 if (k.startswith("kappa") or k.startswith("gamma")) else None
        sysd[k] = _number(f"system.{k}", sysd[k], lo=lo)
    if sysd["kappa_in_mhz"] <= 0:
        _err("system.kappa_in_mhz", "must be > 0 (the drive enters through the input port)")
    m = d["measurement"]
    m["eta"] = _number("measurement.eta", m["eta"], 0.0, 1.0)
    m["phi_lo"] = _number("measurement.phi_lo", m["phi_lo"])
    m["dt_s"] = _number("measurement.dt_s", m["dt_s"], lo=0.0)
    if m["dt_s"] <= 0:
        _err("measurement.dt_s", "must be > 0")
    if not isinstance(m["steady_state"], bool):
        _err("measurement.steady_state", "expected true or false")
    s = d["simulation"]
    s["n_traj"] = _number("simulation.n_traj", s["n_traj"], lo=1, integer=True)
    s["t_final_us"] = _number("simulation.t_final_us", s["t_final_us"], lo=0.0)
    if s["t_final_us"] <= 0:
        _err("simulation.t_final_us", "must be > 0")
    s["seed"] = _number("simulation.seed", s["seed"], lo=0, hi=2 ** 64 - 1, integer=True)
    s["save_every"] = _number("simulation.save_every", s["save_every"], lo=1, integer=True)
    s["record_every"] = _number("simulation.record_every", s["record_every"], lo=1, integer=True)
    s["n_jobs"] = _number("simulation.n_jobs", s["n_jobs"], lo=1, integer=True)
    if not isinstance(s["write_records"], bool):
        _err("simulation.write_records", "expected true or false")
    w = s["window_us"]
    if not isinstance(w, (list, tuple)) or len(w) != 2:
        _err("simulation.window_us", "expected [t0, t1]")
    w = [_number(f"simulation.window_us[{i}]", x, lo=0.0) for i, x in enumerate(w)]
    if not w[1] > w[0]:
        _err("simulation.window_us", "t1 must exceed t0")
    s["window_us"] = w
    st = s["initial_state"]
    if not isinstance(st, (list, tuple)) or len(st) != 3 or any(
            not isinstance(r, (list, tuple)) or len(r) != 3 for r in st):
        _err("simulation.initial_state", "expected a 3x3 nested list")
    mat = np.array([[_complex_entry(f"simulation.initial_state[{i}][{j}]", st[i][j])
                     for j in range(3)] for i in range(3)])
    if np.max(np.abs(mat - mat.conj().T)) > 1e-9:
        _err("simulation.initial_state", "matrix is not Hermitian")
    if abs(np.trace(mat) - 1) > 1e-9:
        _err("simulation.initial_state", "trace must be 1")
    if np.min(np.linalg.eigvalsh(mat)) < -1e-9:
        _err("simulation.initial_state", "matrix is not positive semidefinite")
    s["initial_state"] = [[_canonical_complex(x) for x in row] for row in mat]
    a = d["amplitudes"]
    a["t_final_us"] = _number("amplitudes.t_final_us", a["t_final_us"], lo=0.0)
    a["n_points"] = _number("amplitudes.n_points", a["n_points"], lo=2, integer=True)
    sw = d["sweep"]
    sw["delta_min_mhz"] = _number("sweep.delta_min_mhz", sw["delta_min_mhz"])
    sw["delta_max_mhz"] = _number("sweep.delta_max_mhz", sw["delta_max_mhz"])
    if not sw["delta_max_mhz"] > sw["delta_min_mhz"]:
        _err("sweep.delta_max_mhz", "must exceed delta_min_mhz")
    sw["n_points"] = _number("sweep.n_points", sw["n_points"], lo=2, integer=True)
    r = d["ramsey"]
    for k in ("omega_d_mhz", "delta_mhz"):
        r[k] = _number(f"ramsey.{k}", r[k])
    for k in ("t_pi2_ns", "gamma_2_per_us", "t_free_max_us"):
        r[k] = _number(f"ramsey.{k}", r[k], lo=0.0)
    r["n_points"] = _number("ramsey.n_points", r["n_points"], lo=2, integer=True)
    f = d["filters"]
    if f["spectrum"] not in _SPECTRA:
        _err("filters.spectrum", f"must be one of {_SPECTRA}")
    f["s0"] = _number("filters.s0", f["s0"], lo=0.0)
    f["omega_c_mhz"] = _number("filters.omega_c_mhz", f["omega_c_mhz"], lo=0.0)
    f["omega_low_mhz"] = _number("filters.omega_low_mhz", f["omega_low_mhz"], lo=0.0)
    if f["spectrum"] == "lorentzian" and f["omega_c_mhz"] <= 0:
        _err("filters.omega_c_mhz", "must be > 0 for a lorentzian spectrum")
    if f["spectrum"] == "one_over_f" and f["omega_low_mhz"] <= 0:
        _err("filters.omega_low_mhz", "1/f noise needs a positive cutoff")
    if not isinstance(f["cp_n"], (list, tuple)) or not f["cp_n"]:
        _err("filters.cp_n", "expected a non-empty list of even integers")
    f["cp_n"] = [_number(f"filters.cp_n[{i}]", n, lo=2, integer=True) for i, n in enumerate(f["cp_n"])]
    if any(n % 2 for n in f["cp_n"]):
        _err("filters.cp_n", "pulse numbers must be even")
    if not isinstance(f["t_us"], (list, tuple)) or not f["t_us"]:
        _err("filters.t_us", "expected a non-empty list of times")
    f["t_us"] = [_number(f"filters.t_us[{i}]", x, lo=0.0) for i, x in enumerate(f["t_us"])]
    if any(x <= 0 for x in f["t_us"]):
        _err("filters.t_us", "times must be > 0")
    f["omega_max_mhz"] = _number("filters.omega_max_mhz", f["omega_max_mhz"], lo=0.0)
    f["n_omega"] = _number("filters.n_omega", f["n_omega"], lo=2, integer=True)
    return d


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated, fully populated scenario (plain nested dict in file units)."""

    data: dict

    def params(self):
        s = self.data["system"]
        k_in = s["kappa_in_mhz"] * MHZ
        eps = s["epsilon_mhz"] * MHZ * np.exp(1j * s["epsilon_phase"])
        return QutritCavityParams(
            omega_q=s["omega_q_mhz"] * MHZ,
            alpha_q=s["alpha_q_mhz"] * MHZ,
            chi_qr=s["chi_mhz"] * MHZ,
            delta_rd=s["delta_rd_mhz"] * MHZ,
            kappa_in=k_in,
            kappa_out=s["kappa_out_mhz"] * MHZ,
            kappa_int=s["kappa_int_mhz"] * MHZ,
            a_in_bar=eps / np.sqrt(k_in),
            gamma_1_ge=s["gamma_1_ge_per_us"] * PER_US,
            gamma_1_gf=s["gamma_1_gf_per_us"] * PER_US,
            gamma_1_ef=s["gamma_1_ef_per_us"] * PER_US,
            gamma_phi_ge=s["gamma_phi_ge_per_us"] * PER_US,
            gamma_phi_gf=s["gamma_phi_gf_per_us"] * PER_US,
            gamma_phi_ef=s["gamma_phi_ef_per_us"] * PER_US,
        )

    def initial_state(self):
        return np.array([[complex(x) if isinstance(x, str) else x for x in row]
                         for row in self.data["simulation"]["initial_state"]], dtype=complex)

    def heterodyne_config(self):
        from .heterodyne import HeterodyneConfig

        m = self.data["measurement"]
        s = self.data["simulation"]
        return HeterodyneConfig(
            params=self.params(), eta=m["eta"], dt=m["dt_s"], n_traj=s["n_traj"],
            t_final=s["t_final_us"] * US, seed=s["seed"], phi_lo=m["phi_lo"],
            steady_state=m["steady_state"],
        )

    def with_overrides(self, **paths):
        """Return a copy with dotted-path overrides, e.g. ``{"simulation.seed": 3}``."""
        d = copy.deepcopy(self.data)
        for path, v in paths.items():
            if v is None:
                continue
            node = d
            *head, last = path.split(".")
            for h in head:
                node = node[h]
            node[last] = v
        return parse_config(d)


def parse_config(raw):
    """Merge `raw` (a mapping) over the defaults and validate it."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a mapping")
    raw = dict(raw)
    raw.setdefault("schema_version", SCHEMA_VERSION)
    return ScenarioConfig(_validate(_merge("", DEFAULTS, raw)))


def load_config(path):
    """Read and validate a YAML scenario file; ``None`` gives the defaults."""
    if path is None:
        return parse_config({})
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return parse_config(raw)


def serialize_config(cfg):
    """Canonical YAML text (sorted keys, all defaults filled)."""
    return yaml.safe_dump(cfg.data, sort_keys=True, default_flow_style=None)
