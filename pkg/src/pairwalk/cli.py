"""Command-line front end: presets for the standard experiments, CSV outputs.

Every invocation writes its tables into one output directory together with a
``run_manifest.json`` that echoes the resolved parameters, the master seed and
the code version; a run is reproducible bit-exactly from its manifest.  All
quantities are dimensionless (energies in units of the hopping, time as tau).

CSV schemas
-----------
variance     tau, sigma2_raw, sigma2_shifted, stderr
occupation   tau, site, n            (long form)
bands        nu, K, E_over_J, label
projections  E_over_J, P
gain         U_over_J, gamma, g_sigma, stderr
autocorr     lag, estimate, stderr, analytic
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bands import band_structure, eigen_projections
from .ensemble import EnsembleResult, ExperimentConfig, run_ensemble
from .hamiltonian import InteractionSpec
from .lattice import (LatticeSpec, Statistics, build_basis, centered_pair_sites,
                      localized_pair_state)
from .observables import variance_gain
from .telegraph import (NoiseSpec, empirical_autocorrelation,
                        empirical_cross_correlation)

DEFAULTS = {
    "n_sites": 80,
    "u_over_j": 0.0,
    "epsilon": 0.0,
    "statistics": "fermion",
    "start_offset": 1,
    "g0": 0.9,
    "gamma": None,  # None = noiseless
    "horizon": 12.5,
    "sample_dt": 0.25,
    "realizations": 5000,
    "seed": 0,
}

_CONFIG_PARSERS = {
    "n_sites": int,
    "u_over_j": float,
    "epsilon": float,
    "statistics": str,
    "start_offset": int,
    "g0": float,
    "gamma": float,
    "horizon": float,
    "sample_dt": float,
    "realizations": int,
    "seed": int,
}

GAIN_GAMMA_GRID = np.logspace(0.0, np.log10(200.0), 12)


class CliError(Exception):
    """Configuration problem; the message names the offending key."""


def _fmt(x) -> str:
    return repr(float(x))


def parse_config(path: str | Path) -> dict:
    """Read a flat INI-style key=value file (section header optional)."""
    text = Path(path).read_text()
    if not text.lstrip().startswith("["):
        text = "[experiment]\n" + text
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise CliError(f"config file {path}: {exc}") from exc
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key not in _CONFIG_PARSERS:
                raise CliError(f"config file {path}: unknown key '{key}'")
            try:
                values[key] = _CONFIG_PARSERS[key](raw)
            except ValueError as exc:
                raise CliError(
                    f"config file {path}: key '{key}': cannot parse "
                    f"{raw!r}") from exc
    return values


def _resolve(args, keys) -> tuple[dict, set]:
    """Defaults, overridden by --config file values, overridden by flags.

    Also reports which keys were set explicitly (file or flag).
    """
    params = {k: DEFAULTS[k] for k in keys}
    provided = set()
    if getattr(args, "config", None):
        from_file = parse_config(args.config)
        for k, v in from_file.items():
            if k in keys:
                params[k] = v
                provided.add(k)
    for k in keys:
        flag = getattr(args, k, None)
        if flag is not None:
            params[k] = flag
            provided.add(k)
    _validate(params)
    return params, provided


def _validate(params: dict):
    checks = [
        ("n_sites", lambda v: v >= 3, "must be >= 3"),
        ("realizations", lambda v: v >= 1, "must be >= 1"),
        ("horizon", lambda v: v > 0, "must be > 0"),
        ("sample_dt", lambda v: v > 0, "must be > 0"),
        ("g0", lambda v: v >= 0, "must be >= 0"),
        ("gamma", lambda v: v is None or v >= 0, "must be >= 0"),
        ("epsilon", lambda v: np.isfinite(v), "must be finite"),
        ("seed", lambda v: v >= 0, "must be >= 0"),
    ]
    for key, ok, msg in checks:
        if key in params and not ok(params[key]):
            raise CliError(f"{key}: {msg} (got {params[key]})")
    if "statistics" in params:
        try:
            Statistics(params["statistics"])
        except ValueError:
            raise CliError(
                f"statistics: must be 'fermion' or 'boson' "
                f"(got {params['statistics']!r})") from None
    if "start_offset" in params:
        n = params.get("n_sites", DEFAULTS["n_sites"])
        r = params["start_offset"]
        if not 0 < r < n:
            raise CliError(f"start_offset: must be in 1..{n - 1} (got {r})")
    if params.get("g0", 0.0) > 1.0:
        print(f"warning: g0={params['g0']} exceeds 1: the hopping amplitude "
              "can change sign during the evolution", file=sys.stderr)


def _noise_regime(gamma) -> str:
    if gamma is None:
        return "none"
    if gamma <= 0.1:
        return "slow"
    if gamma >= 10.0:
        return "fast"
    return "intermediate"


def _sample_times(horizon: float, dt: float) -> np.ndarray:
    n = int(round(horizon / dt))
    times = np.round(np.arange(n + 1) * dt, 12)
    if times[-1] < horizon - 1e-12:
        times = np.append(times, horizon)
    times[-1] = horizon
    return times


def _experiment(params: dict, gamma, offset=None, statistics=None,
                u=None) -> ExperimentConfig:
    n = params["n_sites"]
    stats = Statistics(statistics or params["statistics"])
    pair = centered_pair_sites(n, offset if offset is not None
                               else params["start_offset"])
    noise = None
    if gamma is not None and params["g0"] > 0.0:
        noise = NoiseSpec(g0=params["g0"], gamma=gamma, n_links=n)
    return ExperimentConfig(
        lattice=LatticeSpec(n, onsite=params["epsilon"]),
        interaction=InteractionSpec(u if u is not None else params["u_over_j"]),
        statistics=stats,
        initial_pair=pair,
        sample_times=_sample_times(params["horizon"], params["sample_dt"]),
        noise=noise,
        n_realizations=params["realizations"] if gamma is not None else 1,
        master_seed=params["seed"],
    )


# ------------------------------------------------------------------- writers

def write_variance_csv(path: Path, result: EnsembleResult):
    with open(path, "w") as fh:
        fh.write("tau,sigma2_raw,sigma2_shifted,stderr\n")
        for t, raw, shifted, err in zip(result.sample_times, result.sigma2,
                                        result.sigma2_shifted,
                                        result.sigma2_stderr):
            fh.write(f"{_fmt(t)},{_fmt(raw)},{_fmt(shifted)},{_fmt(err)}\n")


def write_occupation_csv(path: Path, result: EnsembleResult):
    with open(path, "w") as fh:
        fh.write("tau,site,n\n")
        for i, t in enumerate(result.sample_times):
            for site in range(result.occupations.shape[1]):
                fh.write(f"{_fmt(t)},{site},{_fmt(result.occupations[i, site])}\n")


def write_bands_csv(path: Path, bands):
    with open(path, "w") as fh:
        fh.write("nu,K,E_over_J,label\n")
        for nu, k, e, label in bands.rows():
            fh.write(f"{nu},{_fmt(k)},{_fmt(e)},{label}\n")


def write_projections_csv(path: Path, proj):
    with open(path, "w") as fh:
        fh.write("E_over_J,P\n")
        for e, p in zip(proj.energies, proj.probabilities):
            fh.write(f"{_fmt(e)},{_fmt(p)}\n")


def write_gain_csv(path: Path, rows):
    with open(path, "w") as fh:
        fh.write("U_over_J,gamma,g_sigma,stderr\n")
        for u, gamma, g, err in rows:
            fh.write(f"{_fmt(u)},{_fmt(gamma)},{_fmt(g)},{_fmt(err)}\n")


def write_autocorr_csv(path: Path, lags, est, err, analytic):
    with open(path, "w") as fh:
        fh.write("lag,estimate,stderr,analytic\n")
        for row in zip(lags, est, err, analytic):
            fh.write(",".join(_fmt(x) for x in row) + "\n")


class RunWriter:
    """Collects output files and finalizes the manifest of one invocation."""

    def __init__(self, out_dir: str | Path, command: str, params: dict):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.params = params
        self.outputs: list[str] = []
        self.wraparound = False
        self.started = time.time()

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out_dir / name

    def note_result(self, result: EnsembleResult):
        self.wraparound = self.wraparound or result.wraparound_flag

    def finalize(self, extra: dict | None = None) -> Path:
        manifest = {
            "command": self.command,
            "code_version": __version__,
            "parameters": {k: v for k, v in sorted(self.params.items())},
            "master_seed": self.params.get("seed"),
            "noise_regime": _noise_regime(self.params.get("gamma")),
            "wall_clock_seconds": round(time.time() - self.started, 3),
            "outputs": self.outputs,
            "wraparound_warning": self.wraparound,
        }
        if extra:
            manifest.update(extra)
        path = self.out_dir / "run_manifest.json"
        path.write_text(json.dumps(manifest, indent=2, default=str) + "\n")
        return path


# ---------------------------------------------------------------- subcommands

def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip() != ""]


def cmd_bands(args) -> int:
    params, _ = _resolve(args, ["n_sites", "statistics", "epsilon"])
    writer = RunWriter(args.out_dir, "bands", params)
    for u in _float_list(args.u_over_j):
        bands = band_structure(LatticeSpec(params["n_sites"],
                                           onsite=params["epsilon"]),
                               InteractionSpec(u),
                               Statistics(params["statistics"]))
        write_bands_csv(writer.path(f"bands_u{u:g}.csv"), bands)
    writer.params["u_over_j_list"] = _float_list(args.u_over_j)
    writer.finalize()
    return 0


def cmd_projections(args) -> int:
    params, _ = _resolve(args, ["n_sites", "statistics", "epsilon"])
    writer = RunWriter(args.out_dir, "projections", params)
    lattice = LatticeSpec(params["n_sites"], onsite=params["epsilon"])
    basis = build_basis(lattice, Statistics(params["statistics"]))
    offsets = [int(x) for x in _float_list(args.start_offsets)]
    for u in _float_list(args.u_over_j):
        for r in offsets:
            state = localized_pair_state(
                basis, *centered_pair_sites(params["n_sites"], r))
            proj = eigen_projections(state, lattice, InteractionSpec(u))
            write_projections_csv(writer.path(f"projections_u{u:g}_r{r}.csv"),
                                  proj)
    writer.params.update(u_over_j_list=_float_list(args.u_over_j),
                         start_offsets=offsets)
    writer.finalize()
    return 0


def _run_and_write(writer: RunWriter, label: str, config: ExperimentConfig,
                   occupations: bool = True) -> EnsembleResult:
    result = run_ensemble(config)
    write_variance_csv(writer.path(f"variance_{label}.csv"), result)
    if occupations:
        write_occupation_csv(writer.path(f"occupation_{label}.csv"), result)
    writer.note_result(result)
    return result


def cmd_evolve(args) -> int:
    params, _ = _resolve(args, list(DEFAULTS))
    writer = RunWriter(args.out_dir, "evolve", params)
    config = _experiment(params, params["gamma"])
    label = args.label or ("noiseless" if params["gamma"] is None
                           else f"g{params['gamma']:g}")
    _run_and_write(writer, label, config)
    writer.finalize()
    return _guard_exit(writer, args)


def cmd_sweep(args) -> int:
    params, provided = _resolve(args, list(DEFAULTS))
    writer = RunWriter(args.out_dir, f"sweep:{args.preset}", params)

    if args.preset == "variance-vs-start":
        if "u_over_j" not in provided:
            params["u_over_j"] = 14.0
        for r in (1, 3, 10, 20, 30, 40):
            if r >= params["n_sites"]:
                continue
            config = _experiment(params, None, offset=r)
            _run_and_write(writer, f"r{r}", config, occupations=False)
    elif args.preset == "noise-regimes":
        params["u_over_j"] = 0.0
        _run_and_write(writer, "noiseless", _experiment(params, None))
        _run_and_write(writer, "slow", _experiment(params, 0.01))
        _run_and_write(writer, "fast", _experiment(params, 10.0))
    elif args.preset == "gamma-sweep":
        params["u_over_j"] = 0.0
        _run_and_write(writer, "noiseless", _experiment(params, None),
                       occupations=False)
        for gamma in (1.0, 10.0, 50.0, 100.0, 200.0):
            _run_and_write(writer, f"g{gamma:g}", _experiment(params, gamma),
                           occupations=False)
    elif args.preset == "interaction-compare":
        for u in (6.0, 14.0, 40.0):
            for r in (1, 3):
                for gamma, tag in ((None, "noiseless"), (10.0, "fast")):
                    config = _experiment(params, gamma, offset=r, u=u)
                    _run_and_write(writer, f"u{u:g}_r{r}_{tag}", config,
                                   occupations=False)
    elif args.preset == "occupation-maps":
        for u in (14.0, 40.0):
            for gamma, tag in ((None, "noiseless"), (10.0, "fast")):
                config = _experiment(params, gamma, offset=1, u=u)
                _run_and_write(writer, f"u{u:g}_{tag}", config)
    else:
        raise CliError(f"unknown preset '{args.preset}'")
    writer.finalize(extra={"preset": args.preset})
    return _guard_exit(writer, args)


def cmd_gain(args) -> int:
    params, _ = _resolve(args, list(DEFAULTS))
    writer = RunWriter(args.out_dir, "gain", params)
    u_values = _float_list(args.u_over_j)
    if args.gamma_grid:
        grid = _float_list(args.gamma_grid)
    else:
        grid = [float(g) for g in GAIN_GAMMA_GRID]
    tau = params["horizon"]
    rows = []
    for u in u_values:
        clean = run_ensemble(_experiment(params, None, u=u))
        writer.note_result(clean)
        base, _ = clean.sigma2_at(tau)
        for gamma in grid:
            noisy = run_ensemble(_experiment(params, gamma, u=u))
            writer.note_result(noisy)
            fast, fast_err = noisy.sigma2_at(tau)
            g, err = variance_gain(fast, base, stderr_fast=fast_err)
            rows.append((u, gamma, g, err))
    write_gain_csv(writer.path("gain.csv"), rows)
    writer.params.update(u_over_j_list=u_values, gamma_grid=grid)
    writer.finalize()
    return _guard_exit(writer, args)


def cmd_autocorr_check(args) -> int:
    params, _ = _resolve(args, ["g0", "gamma", "seed"])
    if params["gamma"] is None:
        params["gamma"] = 1.0
    writer = RunWriter(args.out_dir, "autocorr-check", params)
    spec = NoiseSpec(g0=params["g0"], gamma=params["gamma"], n_links=2)
    lags = np.array(_float_list(args.lags))
    rng = np.random.default_rng([params["seed"], 0xAC])
    lags, est, err = empirical_autocorrelation(spec, lags, args.samples, rng)
    analytic = spec.g0**2 * np.exp(-2.0 * spec.gamma * lags)
    write_autocorr_csv(writer.path("autocorr.csv"), lags, est, err, analytic)
    rng_x = np.random.default_rng([params["seed"], 0xCC])
    _, est_x, err_x = empirical_cross_correlation(spec, lags, args.samples,
                                                  rng_x)
    write_autocorr_csv(writer.path("autocorr_cross.csv"), lags, est_x, err_x,
                       np.zeros_like(lags))
    writer.finalize()
    return 0


def _guard_exit(writer: RunWriter, args) -> int:
    if writer.wraparound:
        print("warning: occupation reached the sites antipodal to the launch "
              "pair; the finite ring no longer mimics the infinite lattice",
              file=sys.stderr)
        if getattr(args, "strict_guard", False):
            return 1
    return 0


# --------------------------------------------------------------------- parser

def _add_common(sub, physics=True):
    sub.add_argument("--out-dir", default="pairwalk-out",
                     help="directory for CSV outputs and the run manifest")
    sub.add_argument("--config", help="INI-style key=value parameter file")
    sub.add_argument("--seed", type=int, default=None, help="master seed")
    if physics:
        sub.add_argument("--n-sites", type=int, default=None, dest="n_sites")
        sub.add_argument("--statistics", choices=["fermion", "boson"],
                         default=None)
        sub.add_argument("--epsilon", type=float, default=None,
                         help="onsite energy (global phase only)")


def _add_run_options(sub):
    sub.add_argument("--realizations", type=int, default=None)
    sub.add_argument("--g0", type=float, default=None,
                     help="telegraph amplitude in units of the hopping")
    sub.add_argument("--horizon", type=float, default=None,
                     help="final time tau")
    sub.add_argument("--sample-dt", type=float, default=None, dest="sample_dt")
    sub.add_argument("--strict-guard", action="store_true",
                     help="exit nonzero if the wraparound guard trips")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pairwalk",
        description="Quantum walks of two interacting identical particles on "
                    "a ring with telegraph-noise hopping.")
    parser.add_argument("--version", action="version",
                        version=f"pairwalk {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("bands", help="noiseless band structure CSVs")
    _add_common(p)
    p.add_argument("--u-over-j", default="0,14", dest="u_over_j",
                   help="comma list of interaction strengths")
    p.set_defaults(func=cmd_bands)

    p = subs.add_parser("projections",
                        help="eigenlevel projections of localized pair states")
    _add_common(p)
    p.add_argument("--u-over-j", default="6,14,40", dest="u_over_j")
    p.add_argument("--start-offsets", default="1,3", dest="start_offsets")
    p.set_defaults(func=cmd_projections)

    p = subs.add_parser("evolve", help="one noise-averaged evolution")
    _add_common(p)
    _add_run_options(p)
    p.add_argument("--u-over-j", type=float, default=None, dest="u_over_j")
    p.add_argument("--gamma", type=float, default=None,
                   help="switching rate; omit for the noiseless run")
    p.add_argument("--start-offset", type=int, default=None,
                   dest="start_offset")
    p.add_argument("--label", default=None, help="output file suffix")
    p.set_defaults(func=cmd_evolve)

    p = subs.add_parser("sweep", help="multi-run presets")
    _add_common(p)
    _add_run_options(p)
    p.add_argument("--preset", required=True,
                   choices=["variance-vs-start", "noise-regimes",
                            "gamma-sweep", "interaction-compare",
                            "occupation-maps"])
    p.add_argument("--u-over-j", type=float, default=None, dest="u_over_j")
    p.set_defaults(func=cmd_sweep)

    p = subs.add_parser("gain", help="variance gain versus switching rate")
    _add_common(p)
    _add_run_options(p)
    p.add_argument("--u-over-j", default="40,60,70,80,100", dest="u_over_j")
    p.add_argument("--gamma-grid", default=None, dest="gamma_grid",
                   help="comma list; default log grid of 12 points in [1,200]")
    p.set_defaults(func=cmd_gain)

    p = subs.add_parser("autocorr-check",
                        help="telegraph autocorrelation validation CSV")
    _add_common(p, physics=False)
    p.add_argument("--g0", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--lags", default="0.25,0.5,1.0")
    p.add_argument("--samples", type=int, default=10_000)
    p.set_defaults(func=cmd_autocorr_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
