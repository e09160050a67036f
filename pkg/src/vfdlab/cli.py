"""Experiment configuration and the ``run``/``sweep``/``verify-oracle``/``moser-table`` commands.

Configs are TOML files with the sections ``[domain]``, ``[run]``,
``[initial]``, ``[forcing]``, ``[dataprep]``, ``[diagnostics]``,
``[output]`` and optionally ``[sweep]``; see the README for the grammar.
Invoke as ``python -m vfdlab <command> ...``.

Exit codes: 0 success, 1 solver failure, 2 invalid or missing config,
3 a strict verdict failed.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import platform
import re
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import scipy

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from . import dataprep as dp
from . import diagnostics as diag
from . import moser, oracle
from .domain import DomainError, DomainKind, from_descriptor, integrate_dm
from .stepper import ConfigError, RunConfig, SolverFailure, State, run

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG, EXIT_VERDICT = 0, 1, 2, 3


class ConfigFileError(Exception):
    """Invalid configuration, with the file and line it refers to."""

    def __init__(self, path, line, message):
        where = f"{path}:{line}" if line else f"{path}"
        super().__init__(f"{where}: {message}")


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


@dataclass
class RunSection:
    alpha: float = 1.0
    beta: float = 0.0
    dt: float = 1e-3
    t_end: float = 1.0
    newton_tol: float = 1e-11
    newton_max_iter: int = 25
    dt_min: float = 1e-10
    bc_mode: str = "dynamic"
    theta_lower: float = 0.1
    theta_upper: float = 10.0
    boundary_mass_penalty: int = 0  # 0 means off


@dataclass
class InitialSection:
    """Initial data presets.

    ``constant``: ``value``.  ``cosine``: ``value + amplitude cos(k pi xi / L)``.
    ``spike``: ``value`` with a smooth dip down to ``depth`` of half-width
    ``width`` centred at ``center``.  ``csv``: ``path`` of node,value rows.
    ``perturbation`` multiplies by 1 + perturbation U(-1, 1) drawn from the seed;
    ``boundary_value`` sets an independent boundary datum.
    """

    kind: str = "constant"
    value: float = 1.0
    amplitude: float = 0.0
    wavenumber: int = 1
    depth: float = 0.1
    width: float = 0.05
    center: list = field(default_factory=lambda: [0.5])
    path: str = ""
    perturbation: float = 0.0
    boundary_value: float = 0.0  # 0 means use the trace


@dataclass
class ForcingSection:
    kind: str = "zero"
    amplitude: float = 0.0
    wavenumber: int = 1
    omega: float = 1.0
    epsilon: float = 0.5
    truncate_level: float = 0.0  # 0 means no clipping


@dataclass
class DataprepSection:
    strategy: str = "none"
    n: int = 10


@dataclass
class DiagnosticsSection:
    p_list: list = field(default_factory=lambda: [1.0, 2.0, 4.0])
    tau_list: list = field(default_factory=lambda: [0.1])
    mass_tol: float = 1e-11
    energy_tol: float = 1e-8
    energy_step_tol: float = 1e-10


@dataclass
class OutputSection:
    dir: str = "out"
    snapshot_times: list = field(default_factory=list)


@dataclass
class SweepSection:
    """``grid`` maps dotted keys (``run.alpha``) to value lists.

    ``mode = "contraction"`` pairs each point with a second run whose
    ``[sweep.partner]`` entries override the initial section.
    ``mode = "penalized"`` runs alpha = 0 with boundary mass 1/n for every
    n in ``penalty_levels``.
    """

    mode: str = "grid"
    grid: dict = field(default_factory=dict)
    partner: dict = field(default_factory=dict)
    penalty_levels: list = field(default_factory=lambda: [1, 10, 100, 1000])


@dataclass
class ExperimentConfig:
    domain: dict = field(default_factory=lambda: {"kind": "interval", "length": 1.0, "n": 100})
    run: RunSection = field(default_factory=RunSection)
    initial: InitialSection = field(default_factory=InitialSection)
    forcing: ForcingSection = field(default_factory=ForcingSection)
    dataprep: DataprepSection = field(default_factory=DataprepSection)
    diagnostics: DiagnosticsSection = field(default_factory=DiagnosticsSection)
    output: OutputSection = field(default_factory=OutputSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict, path="<config>", text: str = "") -> "ExperimentConfig":
        data = dict(data)
        kwargs = {}
        sections = {f.name: f for f in fields(cls)}
        for name, value in data.items():
            if name not in sections:
                raise ConfigFileError(path, _locate(text, None, name), f"unknown section or key {name!r}")
            if name == "seed":
                kwargs["seed"] = _coerce(int, value, path, text, None, name)
            elif name == "domain":
                if not isinstance(value, dict) or "kind" not in value:
                    raise ConfigFileError(path, _locate(text, "domain", None), "[domain] needs a 'kind'")
                kwargs["domain"] = dict(value)
            else:
                section_cls = sections[name].default_factory().__class__
                kwargs[name] = _build_section(section_cls, value, path, text, name)
        return cls(**kwargs)

    def run_config(self) -> RunConfig:
        r = self.run
        return RunConfig(
            alpha=r.alpha, beta=r.beta, dt=r.dt, t_end=r.t_end, newton_tol=r.newton_tol,
            newton_max_iter=r.newton_max_iter, dt_min=r.dt_min, bc_mode=r.bc_mode,
            theta_lower=r.theta_lower, theta_upper=r.theta_upper,
            boundary_mass_penalty=r.boundary_mass_penalty or None,
        )


_TYPES = {"float": float, "int": int, "str": str, "list": list, "dict": dict}


def _build_section(section_cls, value, path, text, name):
    if not isinstance(value, dict):
        raise ConfigFileError(path, _locate(text, None, name), f"[{name}] must be a table")
    known = {f.name: f for f in fields(section_cls)}
    kwargs = {}
    for key, v in value.items():
        if key not in known:
            raise ConfigFileError(path, _locate(text, name, key), f"unknown key {key!r} in [{name}]")
        typ = _TYPES[known[key].type] if isinstance(known[key].type, str) else known[key].type
        kwargs[key] = _coerce(typ, v, path, text, name, key)
    return section_cls(**kwargs)


def _coerce(typ, v, path, text, section, key):
    if typ is float and isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    if typ is int and isinstance(v, int) and not isinstance(v, bool):
        return v
    if typ is list and isinstance(v, list):
        return v
    if typ in (str, dict) and isinstance(v, typ):
        return v
    raise ConfigFileError(path, _locate(text, section, key),
                          f"{key} = {v!r} should be of type {typ.__name__}")


def _locate(text: str, section, key) -> int | None:
    """Line number of ``key`` inside ``[section]`` (or of the section header)."""
    if not text:
        return None
    current = None
    for no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.match(r"^\[+\s*([^\]]+?)\s*\]+", stripped)
        if m:
            current = m.group(1)
            if key is None and current == section:
                return no
            continue
        if key is not None and re.match(rf"^{re.escape(key)}\s*=", stripped):
            if section is None or current == section or (current or "").startswith(section + "."):
                return no
    return None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigFileError(path, None, "no such config file") from None
    except OSError as exc:
        raise ConfigFileError(path, None, f"cannot read config: {exc}") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigFileError(path, int(m.group(1)) if m else None, f"TOML syntax error: {exc}") from None
    cfg = ExperimentConfig.from_dict(data, path, text)
    try:
        cfg.run_config().validate()
        from_descriptor(cfg.domain)
    except (ConfigError, DomainError, TypeError, ValueError) as exc:
        raise ConfigFileError(path, _locate(text, "run", None) or _locate(text, "domain", None), str(exc)) from None
    return cfg


# --------------------------------------------------------------------------
# initial data and forcing
# --------------------------------------------------------------------------


def _coordinate(domain):
    """First coordinate measured from the lower end of the domain."""
    xi = domain.nodes[:, 0].copy()
    if domain.kind is DomainKind.ANNULUS:
        xi -= domain.extent["r_inner"]
    return xi


def build_initial(domain, sec: InitialSection, seed: int):
    """Raw (bulk, boundary) data described by the ``[initial]`` section."""
    kind = sec.kind
    if kind == "constant":
        theta = np.full(domain.n_nodes, sec.value)
    elif kind == "cosine":
        theta = sec.value + sec.amplitude * np.cos(sec.wavenumber * np.pi * _coordinate(domain) / domain.length_scale)
    elif kind == "spike":
        c = np.zeros(domain.nodes.shape[1])
        c[: len(sec.center)] = sec.center[: domain.nodes.shape[1]]
        dist = np.linalg.norm(domain.nodes - c, axis=1)
        s = np.clip(dist / sec.width, 0.0, 1.0)
        bump = (1.0 - s * s) ** 3
        # geometric blend so the minimum is exactly the requested depth
        theta = sec.value * (sec.depth / sec.value) ** bump
    elif kind == "csv":
        theta = dp.load_field_csv(sec.path, domain)
    else:
        raise ConfigError(f"unknown initial kind {kind!r}")
    if sec.perturbation:
        rng = np.random.default_rng(seed)
        theta = theta * (1.0 + sec.perturbation * rng.uniform(-1.0, 1.0, theta.shape))
    eta = None
    if sec.boundary_value:
        eta = np.full(domain.n_boundary, sec.boundary_value)
    return theta, eta


def build_forcing(sec: ForcingSection) -> dp.ForcingDescriptor:
    if sec.kind not in ("zero", "sinusoid"):
        raise ConfigError("config forcing kind must be 'zero' or 'sinusoid'")
    return dp.ForcingDescriptor(
        kind=sec.kind, amplitude=sec.amplitude, wavenumber=sec.wavenumber, omega=sec.omega,
        epsilon=sec.epsilon, truncate_level=sec.truncate_level or None,
    )


# --------------------------------------------------------------------------
# run
# --------------------------------------------------------------------------


def versions() -> dict:
    return {
        "vfdlab": __version__, "python": platform.python_version(),
        "numpy": np.__version__, "scipy": scipy.__version__,
    }


def _write_snapshot(out: Path, domain, state: State, label: float):
    path = out / f"fields_t{label:g}.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node"] + [f"x{d}" for d in range(domain.nodes.shape[1])] + ["theta"])
        for i in range(domain.n_nodes):
            w.writerow([i] + [diag.fmt(c) for c in domain.nodes[i]] + [diag.fmt(state.theta[i])])


def execute(cfg: ExperimentConfig, out: Path, keep_states: bool = False) -> tuple[int, dict, list]:
    """dataprep, run and diagnostics for one config; writes all outputs into ``out``."""
    out.mkdir(parents=True, exist_ok=True)
    domain = from_descriptor(cfg.domain)
    rc = cfg.run_config().validate()
    gamma = rc.gamma()
    theta_raw, eta_raw = build_initial(domain, cfg.initial, cfg.seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        state0 = dp.prepare_initial(domain, theta_raw, eta_raw, cfg.dataprep.strategy, cfg.dataprep.n)
    forcing = build_forcing(cfg.forcing)
    p_list = [float(p) for p in cfg.diagnostics.p_list]
    alpha_m = rc.boundary_mass

    rec0 = diag.record(domain, state0.theta, 0.0, 0.0, alpha_m, rc.beta, gamma, p_list,
                       f=forcing.slice(0.0, domain),
                       window_ok=bool(np.all(gamma.in_window(state0.theta))))
    pending = sorted(float(t) for t in cfg.output.snapshot_times)
    states = [(0.0, state0.theta.copy())] if keep_states else []

    def on_step(st):
        while pending and st.t >= pending[0] - 1e-12:
            _write_snapshot(out, domain, st, pending.pop(0))
        if keep_states:
            states.append((st.t, st.theta.copy()))

    while pending and pending[0] <= 0:
        _write_snapshot(out, domain, state0, pending.pop(0))

    summary = {
        "config": cfg.to_dict(), "versions": versions(), "mollifier": dp.KERNEL_NAME,
        "warnings": [str(w.message) for w in caught],
    }
    status = EXIT_OK
    try:
        final, series = run(rc, state0, forcing, domain, gamma, p_list, on_step=on_step)
        summary["status"] = "ok"
    except SolverFailure as exc:
        series = exc.records
        final = exc.state
        summary["status"] = "solver_failure"
        summary["error"] = str(exc)
        status = EXIT_SOLVER
    diag.write_series_csv(out / "series.csv", [rec0] + series)

    verdicts = []
    if rc.bc_mode.value != "dirichlet_oracle" and forcing.is_zero_mean:
        verdicts.append(diag.mass_drift_check(series, rec0.mass, cfg.diagnostics.mass_tol))
    if series:
        verdicts.append(diag.energy_budget_check(series, rec0.energy, cfg.diagnostics.energy_tol,
                                                 cfg.diagnostics.energy_step_tol))
    verdicts += [diag.lp_conservation_check(series, p, alpha_m, rec0) for p in p_list]
    if cfg.dataprep.strategy != "none":
        verdicts.append(diag.log_approx_check(domain, theta_raw if np.all(theta_raw > 0) else dp.truncate(theta_raw, cfg.dataprep.n), state0.theta))
    summary["verdicts"] = [v.to_json() for v in verdicts]
    summary["regularization"] = diag.regularization_probe(series, cfg.diagnostics.tau_list)
    exits = [r.t for r in series if not r.window_ok]
    summary["window"] = {"all_inside": not exits and rec0.window_ok, "first_exit": exits[0] if exits else None}
    summary["log_poincare"] = {
        "max_c1": max((r.logp_c1 for r in series), default=0.0),
        "max_c2": max((r.logp_c2 for r in series), default=0.0),
    }
    summary["steps"] = len(series)
    summary["final_time"] = final.t if final is not None else 0.0
    summary["mass_drift"] = max((abs(r.mass - rec0.mass) for r in series), default=0.0) / abs(rec0.mass)
    if status == EXIT_OK and any(v.passed is False for v in verdicts):
        status = EXIT_VERDICT
    summary["exit_code"] = status
    diag.write_json(out / "summary.json", summary)
    return status, summary, states


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    cfg = _apply_overrides(cfg, args)
    status, summary, _ = execute(cfg, Path(cfg.output.dir))
    print(f"{summary['status']}: {summary['steps']} steps, mass drift {summary['mass_drift']:.3e}, exit {status}")
    return status


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "out", None):
        cfg = replace(cfg, output=replace(cfg.output, dir=args.out))
    return cfg


# --------------------------------------------------------------------------
# sweep
# --------------------------------------------------------------------------


def _set_dotted(data: dict, key: str, value):
    section, _, name = key.partition(".")
    if not name:
        data[section] = value
    else:
        data.setdefault(section, {})[name] = value


def _point_config(base: ExperimentConfig, overrides: dict, out: Path) -> ExperimentConfig:
    data = base.to_dict()
    for k, v in overrides.items():
        _set_dotted(data, k, v)
    data["output"]["dir"] = str(out)
    return ExperimentConfig.from_dict(data)


def _child(cfg_dict: dict, keep_states: bool):
    cfg = ExperimentConfig.from_dict(cfg_dict)
    try:
        status, summary, states = execute(cfg, Path(cfg.output.dir), keep_states)
    except (ConfigError, DomainError, ValueError) as exc:
        return EXIT_CONFIG, {"status": "config_error", "error": str(exc)}, []
    return status, summary, states


def _map(func, jobs, threads):
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(func, *zip(*jobs)))
    return [func(*job) for job in jobs]


def _grid_points(grid: dict) -> list[dict]:
    keys = sorted(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def cmd_sweep(args) -> int:
    base = _apply_overrides(load_config(args.config), args)
    out = Path(base.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    sw = base.sweep
    threads = max(1, args.threads or 1)
    if sw.mode == "penalized":
        return _sweep_penalized(base, out, threads)
    points = _grid_points(sw.grid) or [{}]
    jobs = []
    for k, params in enumerate(points):
        point_dir = out / f"point_{k:03d}"
        cfg = _point_config(base, params, point_dir / "a" if sw.mode == "contraction" else point_dir)
        jobs.append((cfg.to_dict(), sw.mode == "contraction"))
        if sw.mode == "contraction":
            partner = dict(params)
            partner.update({f"initial.{key}": v for key, v in sw.partner.items()})
            jobs.append((_point_config(base, partner, point_dir / "b").to_dict(), True))
    results = _map(_child, jobs, threads)

    rows = []
    worst = EXIT_OK
    if sw.mode == "contraction":
        domain = from_descriptor(base.domain)
        for k, params in enumerate(points):
            (sa, suma, sta), (sb, sumb, stb) = results[2 * k], results[2 * k + 1]
            status = max(sa, sb)
            verdict = None
            if status in (EXIT_OK, EXIT_VERDICT):
                verdict = diag.l1_contraction_check(domain, sta, stb, base.run_config().boundary_mass)
                diag.write_json(out / f"point_{k:03d}" / "contraction.json", verdict.to_json())
                if not verdict.passed:
                    status = max(status, EXIT_VERDICT)
            worst = max(worst, status)
            rows.append({"point": k, **params, "exit_code": status,
                         "l1_contraction": "" if verdict is None else int(verdict.passed),
                         "max_increase": "" if verdict is None else diag.fmt(verdict.value)})
    else:
        for k, (params, (status, summary, _)) in enumerate(zip(points, results)):
            worst = max(worst, status)
            (out / f"point_{k:03d}").mkdir(parents=True, exist_ok=True)
            (out / f"point_{k:03d}" / "params.json").write_text(json.dumps(params, sort_keys=True) + "\n")
            rows.append({"point": k, **params, "exit_code": status, "status": summary.get("status", ""),
                         "mass_drift": diag.fmt(summary.get("mass_drift", math.nan))})
    _write_rows(out / "sweep_summary.csv", rows)
    print(f"sweep: {len(points)} points, worst exit {worst}")
    return worst


def _sweep_penalized(base: ExperimentConfig, out: Path, threads: int) -> int:
    levels = [int(n) for n in base.sweep.penalty_levels]
    jobs = []
    for n in levels:
        ov = {"run.alpha": 0.0, "run.boundary_mass_penalty": n, "run.bc_mode": "dynamic"}
        jobs.append((_point_config(base, ov, out / f"n_{n}").to_dict(), True))
    results = _map(_child, jobs, threads)
    worst = max(r[0] for r in results)
    table = penalized_table(from_descriptor(base.domain), levels, [r[2][-1][1] if r[2] else None for r in results])
    _write_rows(out / "penalized_table.csv", table["rows"])
    diag.write_json(out / "penalized_summary.json", table)
    if worst == EXIT_OK and not table["cauchy"]:
        worst = EXIT_VERDICT
    print(f"penalized study: levels {levels}, Cauchy {table['cauchy']}, exit {worst}")
    _write_rows(out / "sweep_summary.csv", [{"point": k, "n": n, "exit_code": r[0]} for k, (n, r) in enumerate(zip(levels, results))])
    return worst


def penalized_table(domain, levels, finals) -> dict:
    """Bulk L1 differences between successive boundary-mass levels 1/n."""
    rows = []
    diffs = []
    for k, n in enumerate(levels):
        row = {"n": n, "boundary_mass": 1.0 / n, "l1_to_previous": ""}
        if k and finals[k] is not None and finals[k - 1] is not None:
            d = float(np.dot(domain.bulk_weights, np.abs(finals[k] - finals[k - 1])))
            diffs.append(d)
            row["l1_to_previous"] = diag.fmt(d)
        rows.append(row)
    cauchy = len(diffs) == len(levels) - 1 and all(b < a for a, b in zip(diffs, diffs[1:]))
    return {"rows": rows, "differences": diffs, "cauchy": cauchy}


def _write_rows(path: Path, rows: list[dict]):
    if not rows:
        path.write_text("")
        return
    cols = list(dict.fromkeys(k for r in rows for k in r))
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (diag.fmt(v) if isinstance(v, float) else v) for k, v in r.items()})


# --------------------------------------------------------------------------
# oracle and moser drivers
# --------------------------------------------------------------------------


def cmd_verify_oracle(args) -> int:
    out = Path(args.out or "oracle_out")
    out.mkdir(parents=True, exist_ok=True)
    ladders = {
        "annulus": (oracle.annulus_ladder((16, 32, 64)), (3.4, 4.6)),
        "mms_space": (oracle.mms_space_ladder((8, 16, 32)), (2.8, 5.2)),
        "mms_time": (oracle.mms_time_ladder(), (1.4, 2.6)),
    }
    ok = True
    for name, (rows, (lo, hi)) in ladders.items():
        _write_rows(out / f"{name}.csv", [asdict(r) for r in rows])
        print(f"{name}: n, h, dt, error, ratio")
        for r in rows:
            print(f"  {r.n:4d} {r.h:.4e} {r.dt:.4e} {r.error:.6e} {r.ratio:.4f}")
        ok &= all(lo <= r.ratio <= hi for r in rows[1:])
    probe = oracle.probe_order(oracle.singular_solution(1.0), 0.5, np.array([[1.5, 0.0, 0.0]]))
    ratios = [a[1] / b[1] for a, b in zip(probe, probe[1:])]
    print("residual probe (h, residual): " + ", ".join(f"({h:g}, {r:.3e})" for h, r in probe))
    ok &= all(12.0 <= q <= 20.0 for q in ratios)
    return EXIT_OK if ok else EXIT_VERDICT


def cmd_moser_table(args) -> int:
    if args.eps == 0:
        print("warning: H=1, iteration does not close", file=sys.stderr)
    sched = moser.MoserSchedule(args.eps, tau=args.tau, variant=args.variant, p0=args.p0)
    rows = moser.schedule_table(sched, args.i_max)
    stream = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(moser.TABLE_COLUMNS)
        for r in rows:
            w.writerow([diag.fmt(r[c]) for c in moser.TABLE_COLUMNS])
    finally:
        if args.out:
            stream.close()
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vfdlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--out", help="output directory (overrides [output].dir)")
        p.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
        p.add_argument("--seed", type=int, help="seed for randomised initial perturbations")

    common(sub.add_parser("run", help="run one experiment"))
    common(sub.add_parser("sweep", help="run a parameter sweep"))
    common(sub.add_parser("verify-oracle", help="convergence ladders against exact solutions"), config=False)
    p = sub.add_parser("moser-table", help="print the Moser exponent schedule as CSV")
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--p0", type=float, default=None)
    p.add_argument("--i-max", type=int, default=20)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--variant", choices=[v.value for v in moser.Variant], default="u")
    p.add_argument("--out", help="write the table to this CSV file instead of stdout")
    return parser


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "verify-oracle": cmd_verify_oracle, "moser-table": cmd_moser_table}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, moser.MoserError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
