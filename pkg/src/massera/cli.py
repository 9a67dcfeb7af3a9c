"""Command-line front end: ``massera analyze|fixed-points|chain|bebutov|preset``.

Exit status: 0 for a definite result, 3 when any analysis is INCONCLUSIVE,
1 for usage, parse, configuration or solver errors (message on stderr).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .bebutov import SampledFunction, bebutov_distance, check_lemma_l1
from .chain import build_chain_graph, chain_recurrent_set
from .dynamics import ConfigurationError, IntegrationError, IntegratorConfig, MapIterationError, ScalarField
from .expr import EvalError, ParseError, compile_expr, parse
from .period import AnalysisConfig, PeriodMapBlowUp, Verdict, build_period_map, find_fixed_points, full_analysis
from .presets import beverton_holt_field, get_preset, PRESETS
from .report import SCHEMA_VERSION, dumps, fixed_points_to_list, report_to_dict

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors share the generic error status
    def error(self, message):
        raise UsageError(message)


# tolerance flag -> (config object, attribute)
TOLERANCE_FLAGS = {
    "rel": ("integrator", "rel_tol"),
    "abs": ("integrator", "abs_tol"),
    "xmax": ("integrator", "x_max"),
    "conv": ("analysis", "conv_tol"),
    "div": ("analysis", "div_threshold"),
    "s": ("analysis", "s_tol"),
    "decay": ("analysis", "decay_ratio"),
    "root": ("analysis", "root_tol"),
}


@dataclass
class RunConfig:
    mode: str
    preset: str | None = None
    f: str | None = None
    P: str | None = None
    R: str | None = None
    K: str | None = None
    mu: float | None = None
    tau: float | None = None
    u0: list[float] = field(default_factory=list)
    horizon: float | None = None
    tolerances: dict = field(default_factory=dict)
    report: str | None = None
    series: str | None = None
    fp_range: tuple[float, float] | None = None
    grid: int | None = None

    def validate(self) -> None:
        explicit = any(v is not None for v in (self.f, self.P, self.R))
        if self.preset is not None and explicit:
            raise ConfigurationError("give either --preset or explicit expressions, not both")
        if self.preset is None and self.f is None and self.K is None:
            raise ConfigurationError("no equation: give --preset, --f, or --K")
        for name, value in self.tolerances.items():
            if not value > 0:
                raise ConfigurationError(f"--tol-{name} must be positive")
        if self.horizon is not None and not self.horizon > 0:
            raise ConfigurationError("--horizon must be positive")
        if self.grid is not None and self.grid < 2:
            raise ConfigurationError("--grid must be at least 2")


def _parse_u0(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"--u0 expects comma-separated reals, got {text!r}") from None


def _add_field_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("mode", choices=["ode", "map"])
    p.add_argument("--preset")
    p.add_argument("--f")
    p.add_argument("--P")
    p.add_argument("--R")
    p.add_argument("--K", help="Beverton-Holt carrying capacity K(t)")
    p.add_argument("--mu", type=float, help="Beverton-Holt growth rate")
    p.add_argument("--tau", type=float)
    p.add_argument("--config", help="JSON run configuration (keys f, P, R, K, mu, tau, u0, horizon, preset)")
    for name in TOLERANCE_FLAGS:
        p.add_argument(f"--tol-{name}", type=float, dest=f"tol_{name}")
    p.add_argument("--range", nargs=2, type=float, metavar=("A", "B"), dest="fp_range")
    p.add_argument("--grid", type=int)
    p.add_argument("--report", help="write the JSON report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="massera", description="Asymptotically periodic scalar equations: periodicity diagnostics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="classify solutions from one or more initial values")
    _add_field_args(a)
    a.add_argument("--u0", type=_parse_u0)
    a.add_argument("--horizon", type=float)
    a.add_argument("--series", help="prefix for CSV series (<prefix>residuals.csv, <prefix>iterates.csv)")

    fp = sub.add_parser("fixed-points", help="fixed points of the period map with stability tags")
    _add_field_args(fp)

    c = sub.add_parser("chain", help="chain recurrent sample points of the period map")
    c.add_argument("--mode", choices=["ode", "map"], default="map")
    c.add_argument("--f", required=True)
    c.add_argument("--tau", type=float, default=1.0)
    c.add_argument("--range", nargs=2, type=float, metavar=("A", "B"), dest="fp_range", required=True)
    c.add_argument("--grid", type=int, default=101)
    c.add_argument("--eps", type=float, required=True)
    c.add_argument("--n-min", type=int, default=1)
    c.add_argument("--n-max", type=int, default=20)
    c.add_argument("--slack", type=float, help="grid slack subtracted from eps (default: half the grid spacing)")
    c.add_argument("--edges", help="write the edge list CSV here")
    c.add_argument("--report")

    b = sub.add_parser("bebutov", help="compact-open distance between two sampled functions")
    b.add_argument("--phi", required=True, help="const:<c> | expr:<expression in t> | csv:<path>")
    b.add_argument("--psi", required=True)
    b.add_argument("--window", type=float, required=True, help="sample |t| <= window (t in [0, window] on the half line)")
    b.add_argument("--step", type=float, default=0.01)
    b.add_argument("--domain", choices=["full_line", "half_line", "integers"], default="full_line")
    b.add_argument("--eps", type=float, help="also compare d and max_{|t|<=1/eps} with eps")
    b.add_argument("--report")

    pr = sub.add_parser("preset", help="built-in equations")
    pr.add_argument("action", choices=["list"])
    pr.add_argument("--report")
    return parser


def _run_config(args) -> RunConfig:
    cfg = RunConfig(mode=args.mode)
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read --config: {exc}") from None
        unknown = set(data) - {"f", "P", "R", "K", "mu", "tau", "u0", "horizon", "preset"}
        if unknown:
            raise ConfigurationError(f"unknown --config keys: {', '.join(sorted(unknown))}")
        for key, value in data.items():
            setattr(cfg, key, [float(v) for v in value] if key == "u0" and isinstance(value, list) else value)
        if isinstance(cfg.u0, (int, float)):
            cfg.u0 = [float(cfg.u0)]
    # command-line flags win over the file
    for key in ("preset", "f", "P", "R", "K", "mu", "tau", "report", "fp_range", "grid"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, tuple(value) if key == "fp_range" else value)
    if getattr(args, "u0", None):
        cfg.u0 = args.u0
    if getattr(args, "horizon", None) is not None:
        cfg.horizon = args.horizon
    cfg.series = getattr(args, "series", None)
    cfg.tolerances = {name: getattr(args, f"tol_{name}") for name in TOLERANCE_FLAGS if getattr(args, f"tol_{name}") is not None}
    cfg.validate()
    return cfg


def _field_and_defaults(cfg: RunConfig):
    """Field plus preset defaults (u0, horizon, analysis overrides, scan range)."""
    if cfg.preset is not None:
        preset = get_preset(cfg.preset)
        if preset.kind != cfg.mode:
            raise ConfigurationError(f"preset {preset.name} is a{'n ode' if preset.kind == 'ode' else ' map'}, not {cfg.mode}")
        kwargs = {}
        if cfg.mu is not None:
            kwargs["mu"] = cfg.mu
        if cfg.K is not None:
            kwargs["K"] = cfg.K
        if cfg.tau is not None:
            kwargs["tau"] = int(cfg.tau) if preset.kind == "map" else cfg.tau
        if preset.name in ("exP1", "logistic") and "tau" in kwargs:
            if not math.isclose(kwargs.pop("tau"), preset.tau, rel_tol=1e-12):
                raise ConfigurationError(f"preset {preset.name} has fixed period {preset.tau}")
        if preset.name != "beverton-holt" and ({"mu", "K"} & set(kwargs)):
            raise ConfigurationError("--mu/--K only apply to the beverton-holt preset")
        return preset.build(**kwargs), preset.u0, preset.horizon, dict(preset.analysis), preset.fixed_point_range
    if cfg.K is not None:
        if cfg.mode != "map":
            raise ConfigurationError("--K builds a Beverton-Holt map; use mode 'map'")
        tau = 2 if cfg.tau is None else cfg.tau
        if float(tau) != int(tau):
            raise ConfigurationError("period of a map must be an integer")
        return beverton_holt_field(cfg.mu if cfg.mu is not None else 2.0, cfg.K, int(tau)), None, None, {}, None
    if cfg.tau is None:
        raise ConfigurationError("--tau is required with explicit expressions")
    tau = cfg.tau
    if cfg.mode == "map":
        if float(tau) != int(tau):
            raise ConfigurationError("period of a map must be an integer")
        tau = int(tau)
    field_ = ScalarField.from_strings(cfg.mode, cfg.f, cfg.P, cfg.R, tau)
    return field_, None, None, {}, None


def _configs(cfg: RunConfig, analysis_defaults: dict) -> tuple[AnalysisConfig, IntegratorConfig]:
    a_kw = dict(analysis_defaults)
    i_kw = {}
    for name, value in cfg.tolerances.items():
        target, attr = TOLERANCE_FLAGS[name]
        (a_kw if target == "analysis" else i_kw)[attr] = value
    if cfg.grid is not None:
        a_kw["n_grid"] = cfg.grid
    return AnalysisConfig(**a_kw), IntegratorConfig(**i_kw)


def _emit(doc: dict, path: str | None) -> None:
    text = dumps(doc)
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_analyze(cfg: RunConfig) -> int:
    field_, u0_default, horizon_default, analysis_defaults, range_default = _field_and_defaults(cfg)
    acfg, icfg = _configs(cfg, analysis_defaults)
    u0s = cfg.u0 or ([u0_default] if u0_default is not None else [0.0])
    horizon = cfg.horizon if cfg.horizon is not None else horizon_default
    if horizon is not None and field_.kind == "map":
        horizon = float(int(round(horizon)))
    runs = []
    for idx, u0 in enumerate(u0s):
        rep = full_analysis(field_, u0, field_.tau, horizon, acfg, icfg, cfg.fp_range)
        runs.append(report_to_dict(rep))
        if cfg.series:
            tag = "" if len(u0s) == 1 else f"u{idx}_"
            if rep.residuals is not None:
                rep.residuals.to_csv(f"{cfg.series}{tag}residuals.csv")
            if rep.iterate_series is not None:
                rep.iterate_series.to_csv(f"{cfg.series}{tag}iterates.csv")
    doc = {
        "schema": SCHEMA_VERSION,
        "command": "analyze",
        "field": field_.describe(),
        "runs": runs,
        "metadata": {"preset": cfg.preset},
    }
    if len(runs) == 1:
        # single-run reports also expose the run's fields at the top level
        doc.update({k: v for k, v in runs[0].items() if k not in doc})
    _emit(doc, cfg.report)
    failed = False
    for run in runs:
        print(f"u0={run['u0']!r}: {run['verdict']}", file=sys.stderr)
        for note in run["notes"]:
            if note.startswith("solver failed"):
                # the report is still written, but an integration error is an error
                print(f"massera: error: u0={run['u0']!r}: {note}", file=sys.stderr)
                failed = True
    if failed:
        return EXIT_ERROR
    return EXIT_INCONCLUSIVE if any(r["verdict"] == Verdict.INCONCLUSIVE.value for r in runs) else EXIT_OK


def cmd_fixed_points(cfg: RunConfig) -> int:
    field_, _, _, analysis_defaults, range_default = _field_and_defaults(cfg)
    acfg, icfg = _configs(cfg, {k: v for k, v in analysis_defaults.items() if k in ("root_tol", "n_grid")})
    rng = cfg.fp_range or range_default
    if rng is None:
        raise ConfigurationError("--range a b is required")
    pm = build_period_map(field_, field_.tau, icfg)
    scan = find_fixed_points(pm, rng[0], rng[1], acfg.n_grid, acfg.root_tol, classify=True)
    doc = {
        "schema": SCHEMA_VERSION,
        "command": "fixed-points",
        "field": field_.describe(),
        "fixed_points": fixed_points_to_list(scan),
        "continuum": [list(c) for c in scan.continuum],
        "tolerances": {"root_tol": acfg.root_tol, "n_grid": acfg.n_grid, "range": list(rng), "integrator": vars(icfg).copy()},
        "notes": (["period map fixes whole intervals (non-transverse continuum)"] if scan.has_continuum else [])
        + ([f"{scan.failures} grid points could not be mapped"] if scan.failures else []),
    }
    _emit(doc, cfg.report)
    return EXIT_OK


def cmd_chain(args) -> int:
    if not args.eps > 0:
        raise ConfigurationError("--eps must be positive")
    if args.grid < 2:
        raise ConfigurationError("--grid must be at least 2")
    tau = args.tau
    if args.mode == "map":
        if float(tau) != int(tau):
            raise ConfigurationError("period of a map must be an integer")
        tau = int(tau)
    field_ = ScalarField.from_strings(args.mode, args.f, tau=tau)
    pm = build_period_map(field_, tau)
    points = np.linspace(args.fp_range[0], args.fp_range[1], args.grid)
    g = build_chain_graph(pm, points, args.eps, args.n_min, args.n_max, args.slack)
    cr = chain_recurrent_set(g)
    if args.edges:
        g.to_csv(args.edges)
    chain = cr.as_dict(list(g.points))
    chain.update(grid_slack=g.grid_slack, n_min=g.n_min, n_max=g.n_max)
    doc = {
        "schema": SCHEMA_VERSION,
        "command": "chain",
        "field": field_.describe(),
        "chain": chain,
        "notes": list(g.notes),
    }
    _emit(doc, args.report)
    return EXIT_OK


def _sampled(source: str, window: float, step: float, domain: str) -> SampledFunction:
    kind, _, body = source.partition(":")
    start = 0.0 if domain in ("half_line", "integers") else -window
    if domain == "integers":
        step = 1.0
    if kind == "const":
        return SampledFunction.constant(float(body), start, window, step, domain)
    if kind == "expr":
        fn = compile_expr(parse(body))
        return SampledFunction.from_callable(lambda t: fn(t, 0.0), start, window, step, domain)
    if kind == "csv":
        return SampledFunction.from_csv(body, domain)
    raise UsageError(f"function source must start with const:, expr: or csv:, got {source!r}")


def cmd_bebutov(args) -> int:
    if not (args.window > 0 and args.step > 0):
        raise ConfigurationError("--window and --step must be positive")
    phi = _sampled(args.phi, args.window, args.step, args.domain)
    psi = _sampled(args.psi, args.window, args.step, args.domain)
    d = bebutov_distance(phi, psi)
    out = {"distance": d.value, "truncated": d.truncated, "grid_step": d.grid_step, "crossing_L": d.crossing}
    if args.eps is not None:
        out["eps"] = args.eps
        out["relation"] = check_lemma_l1(phi, psi, args.eps).value
    doc = {"schema": SCHEMA_VERSION, "command": "bebutov", "bebutov": out, "notes": []}
    _emit(doc, args.report)
    return EXIT_OK


def cmd_preset_list(args) -> int:
    presets = [
        {"name": p.name, "kind": p.kind, "description": p.description, "u0": p.u0, "horizon": p.horizon}
        for p in PRESETS.values()
    ]
    doc = {"schema": SCHEMA_VERSION, "command": "preset-list", "presets": presets}
    _emit(doc, args.report)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "analyze":
            return cmd_analyze(_run_config(args))
        if args.command == "fixed-points":
            return cmd_fixed_points(_run_config(args))
        if args.command == "chain":
            return cmd_chain(args)
        if args.command == "bebutov":
            return cmd_bebutov(args)
        return cmd_preset_list(args)
    except UsageError as exc:
        print(f"massera: usage error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ParseError as exc:
        print(f"massera: parse error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (
        ConfigurationError,
        EvalError,
        IntegrationError,
        MapIterationError,
        PeriodMapBlowUp,
        ArithmeticError,
        ValueError,
        OSError,
    ) as exc:
        print(f"massera: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
