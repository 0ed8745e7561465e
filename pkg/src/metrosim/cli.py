"""Command-line front end: ``metrosim {table1,scan-time,scan-coupling,scan-alpha,single}``.

Settings come from an optional ``key=value`` config file (``#`` starts a
comment, several pairs may share a line) and are overridden by flags.
Results are written as CSV with ``#`` comment lines echoing the run settings.

Exit codes: 0 success, 1 numerical failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import analytics
from .dynamics import IntegrationError, StateError
from .estimation import ExperimentConfig
from .model import HamiltonianSpec, Kind, Param, SpecError, parse_kind, parse_param
from .optimize import MEASURED, QFI, OptimizationError, OptimizationTask, minimize, scan_alpha, scan_time

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2
COMMANDS = ("table1", "scan-time", "scan-coupling", "scan-alpha", "single")

TABLE1_ROWS = [
    (Kind.IDEAL, Param.OMEGA), (Kind.H1, Param.OMEGA), (Kind.H2, Param.OMEGA),
    (Kind.H3, Param.OMEGA), (Kind.H2, Param.FIELD_H), (Kind.H3, Param.FIELD_H),
    (Kind.H1, Param.COUPLING_J), (Kind.H3, Param.COUPLING_J), (Kind.H4, Param.COUPLING_J),
]
# (column name, probe family, noisy?)
TABLE1_SCENARIOS = [
    ("product_noiseless", "product", False), ("entangled_noiseless", "entangled", False),
    ("product_noisy", "product", True), ("entangled_noisy", "entangled", True),
]


class ConfigError(ValueError):
    pass


@dataclass
class RunManifest:
    command: str = "table1"
    kind: str = "H1"
    estimated: str = "omega"
    omega: float = 5 * math.pi
    coupling_j: float = 0.5
    field_h: float = 0.5
    n: int = 2
    N: int = 2
    T_over_Ttilde: float = 2.0
    gamma: float = 0.5
    seed: int = 42
    budget: int = 40_000
    restarts: int = 5
    probe: str = "entangled"
    alpha: float | None = None
    objective: str = MEASURED
    grid: str | None = None
    rows: str | None = None
    jobs: int = 1
    out: str | None = None

    def validate(self) -> "RunManifest":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        try:
            kind = parse_kind(self.kind)
            est = parse_param(self.estimated)
            self.kind, self.estimated = kind.value, est.value
            self.spec()
            self.config()
        except SpecError as exc:
            raise ConfigError(str(exc)) from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.budget < 400:
            raise ConfigError("budget must be at least 400 (population x 10)")
        if self.restarts < 1 or self.jobs < 1:
            raise ConfigError("restarts and jobs must be positive")
        if self.objective not in (MEASURED, QFI):
            raise ConfigError(f"objective must be {MEASURED} or {QFI}")
        if self.probe not in ("product", "entangled", "partial"):
            raise ConfigError("probe must be product, entangled or partial")
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must lie in [0, 1]")
        if self.out:
            d = os.path.dirname(os.path.abspath(self.out))
            if not os.path.isdir(d) or not os.access(d, os.W_OK):
                raise ConfigError(f"output directory {d} is not writable")
        return self

    def spec(self, kind=None, estimated=None) -> HamiltonianSpec:
        return HamiltonianSpec.for_kind(kind or self.kind, estimated or self.estimated,
                                        omega=self.omega, coupling_j=self.coupling_j,
                                        field_h=self.field_h)

    def config(self, gamma=None) -> ExperimentConfig:
        return ExperimentConfig(self.n, self.N, self.T_over_Ttilde,
                                self.gamma if gamma is None else gamma)


# config key -> (manifest field, type)
_KEYS = {
    "command": ("command", str), "kind": ("kind", str), "estimated": ("estimated", str),
    "omega": ("omega", float), "j": ("coupling_j", float), "coupling_j": ("coupling_j", float),
    "h": ("field_h", float), "field_h": ("field_h", float), "n": ("n", int), "nn": ("N", int),
    "cluster": ("N", int), "t": ("T_over_Ttilde", float), "t_over_ttilde": ("T_over_Ttilde", float),
    "gamma": ("gamma", float), "seed": ("seed", int), "budget": ("budget", int),
    "restarts": ("restarts", int), "probe": ("probe", str), "alpha": ("alpha", float),
    "objective": ("objective", str), "grid": ("grid", str), "rows": ("rows", str),
    "jobs": ("jobs", int), "out": ("out", str),
}


def _convert(key: str, raw: str, typ):
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
        return raw
    except ValueError:
        raise ConfigError(f"{key}: expected {typ.__name__}, got {raw!r}") from None


def _resolve_key(key: str):
    # 'N' and 'n' differ only by case; 'T' is the total time
    if key == "N":
        return _KEYS["nn"]
    if key == "T":
        return _KEYS["t"]
    return _KEYS.get(key.lower())


def read_config_text(text: str) -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        for token in line.split():
            if "=" not in token:
                raise ConfigError(f"line {lineno}: expected key=value, got {token!r}")
            key, raw = token.split("=", 1)
            entry = _resolve_key(key.strip())
            if entry is None:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            name, typ = entry
            values[name] = _convert(key, raw.strip(), typ)
    return values


def parse_config(path: str | None = None, overrides: dict | None = None) -> RunManifest:
    """Build a validated manifest from a config file and flag overrides."""
    values = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                values.update(read_config_text(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunManifest(**values).validate()


def parse_grid(text: str | None) -> list:
    """``start:stop:points`` (inclusive) or a comma-separated list."""
    if not text:
        raise ConfigError("empty grid")
    try:
        if ":" in text:
            start, stop, points = text.split(":")
            points = int(points)
            if points < 1:
                raise ConfigError("grid needs at least one point")
            return [float(v) for v in np.linspace(float(start), float(stop), points)]
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"malformed grid {text!r}; expected start:stop:points") from None
    if not vals:
        raise ConfigError("empty grid")
    return vals


# ------------------------------------------------------------------ output

def fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.6g}"


def render_csv(manifest: RunManifest, header: list, rows: list) -> str:
    buf = io.StringIO()
    buf.write(f"# metrosim {manifest.command}\n")
    for key, value in asdict(manifest).items():
        if key != "out":
            buf.write(f"# {key}={value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_atomic(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".metrosim-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(path_or_text: str):
    """Parse an emitted CSV back into ``(comments, header, rows)``."""
    text = path_or_text
    if "\n" not in path_or_text and os.path.exists(path_or_text):
        with open(path_or_text, encoding="utf-8") as fh:
            text = fh.read()
    lines = text.splitlines()
    comments = [l[1:].strip() for l in lines if l.startswith("#")]
    body = [l for l in lines if not l.startswith("#")]
    reader = list(csv.reader(body))
    return comments, reader[0], reader[1:]


def emit(manifest: RunManifest, header, rows):
    text = render_csv(manifest, header, rows)
    if manifest.out:
        write_atomic(manifest.out, text)
    else:
        sys.stdout.write(text)


# ------------------------------------------------------------------ commands

def _table1_cell(args):
    manifest, kind, param, scenario, family, noisy = args
    task = OptimizationTask(manifest.spec(kind, param), family,
                            manifest.config(manifest.gamma if noisy else 0.0),
                            objective=manifest.objective, budget=manifest.budget,
                            restarts=manifest.restarts, rng_seed=manifest.seed)
    try:
        opt = minimize(task)
    except (OptimizationError, IntegrationError, StateError):
        return (kind.value, param.value, scenario, "FAILED", "FAILED", 0)
    return (kind.value, param.value, scenario, opt.best_bound, opt.best_time, opt.evaluations_used)


def _selected_rows(manifest: RunManifest):
    if not manifest.rows:
        return TABLE1_ROWS
    wanted = []
    for item in manifest.rows.split(","):
        try:
            kind, param = item.split(":")
            wanted.append((parse_kind(kind), parse_param(param)))
        except ValueError:
            raise ConfigError(f"rows entries look like H1:omega, got {item!r}") from None
    for w in wanted:
        if w not in TABLE1_ROWS:
            raise ConfigError(f"{w[0].value}({w[1].value}) is not a Table 1 row")
    return wanted


def run_table1(manifest: RunManifest):
    jobs = [(manifest, kind, param, name, family, noisy)
            for kind, param in _selected_rows(manifest)
            for name, family, noisy in TABLE1_SCENARIOS]
    if manifest.jobs > 1:
        with ProcessPoolExecutor(manifest.jobs) as pool:
            rows = list(pool.map(_table1_cell, jobs))
    else:
        rows = [_table1_cell(j) for j in jobs]
    header = ["hamiltonian", "parameter", "scenario", "bound", "t_opt", "evaluations"]
    emit(manifest, header, rows)
    print_table(rows, file=sys.stderr)
    return EXIT_NUMERIC if any(r[3] == "FAILED" for r in rows) else EXIT_OK


def print_table(rows, file=sys.stdout):
    names = [s[0] for s in TABLE1_SCENARIOS]
    cells = {}
    order = []
    for kind, param, scen, bound, *_ in rows:
        key = f"{kind} ({param})"
        if key not in cells:
            order.append(key)
            cells[key] = {}
        cells[key][scen] = bound if isinstance(bound, str) else f"{bound:.3f}"
    print(f"{'Hamiltonian':<14}" + "".join(f"{n:>21}" for n in names), file=file)
    for key in order:
        print(f"{key:<14}" + "".join(f"{cells[key].get(n, ''):>21}" for n in names), file=file)


def _task(manifest: RunManifest, family=None, **kw) -> OptimizationTask:
    return OptimizationTask(manifest.spec(), family or manifest.probe, manifest.config(),
                            objective=manifest.objective, budget=manifest.budget,
                            restarts=manifest.restarts, rng_seed=manifest.seed, **kw)


def run_scan_time(manifest: RunManifest):
    grid = parse_grid(manifest.grid)
    rows = scan_time(_task(manifest, "product"), grid)
    emit(manifest, ["grid_value", "bound_product", "bound_entangled"], rows)
    return EXIT_OK


def run_scan_coupling(manifest: RunManifest):
    grid = parse_grid(manifest.grid)
    rows = analytics.sweep_coupling(grid, manifest.gamma, manifest.n, manifest.N,
                                    manifest.T_over_Ttilde)
    emit(manifest, ["grid_value", "bound_product", "bound_entangled"], rows)
    return EXIT_OK


def run_scan_alpha(manifest: RunManifest):
    grid = parse_grid(manifest.grid)
    rows = scan_alpha(_task(manifest, "partial", alpha=0.5), grid)
    emit(manifest, ["alpha", "bound_min"], rows)
    return EXIT_OK


def run_single(manifest: RunManifest):
    alpha = manifest.alpha if manifest.probe == "partial" else None
    if manifest.probe == "partial" and alpha is None:
        raise ConfigError("probe=partial needs alpha")
    opt = minimize(_task(manifest, alpha=alpha))
    header = ["hamiltonian", "parameter", "probe", "objective", "bound", "t_opt", "evaluations"]
    emit(manifest, header, [(manifest.kind, manifest.estimated, manifest.probe,
                             manifest.objective, opt.best_bound, opt.best_time,
                             opt.evaluations_used)])
    return EXIT_OK


RUNNERS = {"table1": run_table1, "scan-time": run_scan_time, "scan-coupling": run_scan_coupling,
           "scan-alpha": run_scan_alpha, "single": run_single}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metrosim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--kind")
        p.add_argument("--estimated")
        p.add_argument("--omega", type=float)
        p.add_argument("--J", dest="coupling_j", type=float)
        p.add_argument("--h", dest="field_h", type=float)
        p.add_argument("--n", type=int)
        p.add_argument("--N", dest="N", type=int)
        p.add_argument("--T", dest="T_over_Ttilde", type=float)
        p.add_argument("--gamma", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--budget", type=int)
        p.add_argument("--restarts", type=int)
        p.add_argument("--objective", choices=(MEASURED, QFI))
        p.add_argument("--out")
        if name == "table1":
            p.add_argument("--rows", help="subset such as H1:omega,H4:J")
            p.add_argument("--jobs", type=int)
        if name.startswith("scan"):
            p.add_argument("--grid", help="start:stop:points")
        if name in ("single", "scan-alpha"):
            p.add_argument("--probe", choices=("product", "entangled", "partial"))
            p.add_argument("--alpha", type=float)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    overrides = {k: v for k, v in vars(args).items() if k != "config"}
    try:
        manifest = parse_config(args.config, overrides)
        if manifest.command.startswith("scan"):
            parse_grid(manifest.grid)
        return RUNNERS[manifest.command](manifest)
    except ConfigError as exc:
        print(f"metrosim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OptimizationError, IntegrationError, StateError) as exc:
        print(f"metrosim: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
