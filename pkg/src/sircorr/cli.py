"""Experiment driver: scenario configuration, sweeps, tabular and figure output.

One JSON config document describes a scenario; command-line flags override
individual fields and the fully resolved configuration is echoed into the run
metadata so every output is reproducible from its own sidecar.  Thresholds
are given in dB on this boundary and converted to linear scale exactly once.

Exit codes: 0 success, 2 infeasible model, 3 numerical non-convergence,
4 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ModelParams, Point2
from .quadrature import QuadratureError, QuadratureSpec
from .frameworks import (
    CorrelationMatrix,
    InfeasibleSplit,
    InfeasibleWeights,
    PointSet,
    build_correlation_matrix,
    build_intensity_split,
    check_combination_feasibility,
    from_json as matrix_from_json,
    mixture_implied_correlation,
    solve_mixture_weights,
)
from .ccdf import (
    EnumerationCapExceeded,
    joint_ccdf_combination,
    joint_ccdf_mixture,
    joint_ccdf_ppp,
    normalize_thresholds,
    ppp_log_ccdf_integral,
)
from .simulator import (
    RngSeed,
    SimWindow,
    estimate_joint_ccdf_grid,
    estimate_sir_correlation,
    mrc_outage_mixture_curve,
    mrc_outage_ppp_curve,
    sample_interference_and_sir,
)

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_NONCONVERGENCE = 3
EXIT_CONFIG = 4


class ConfigError(ValueError):
    pass


def db_to_linear(y_db: float) -> float:
    return 10.0 ** (y_db / 10.0)


@dataclass
class Scenario:
    """Resolved experiment configuration; JSON round-trips through to_dict/from_dict."""

    lam: float = 1.0
    p: float = 1.0
    alpha: float = 4.0
    epsilon: float = 1.0
    radius: float = 0.25
    n_points: int = 2
    points: list | None = None
    y_db: float = 5.0
    window_half_width: float = 20.0
    samples: int = 20000
    seed: int = 1
    rel_tol: float = 1e-6
    abs_tol: float = 1e-9
    max_evals: int = 1_000_000

    def __post_init__(self):
        if self.points is not None:
            pts = [[float(x), float(y)] for x, y in self.points]
            if len(pts) < 1:
                raise ConfigError("explicit point list must not be empty")
            self.points = pts
        if self.samples < 1:
            raise ConfigError("samples must be positive")

    @staticmethod
    def from_dict(doc: dict) -> "Scenario":
        known = {f.name for f in dataclasses.fields(Scenario)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        try:
            return Scenario(**doc)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config: {exc}") from exc

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def params(self, lam_p: float | None = None, alpha: float | None = None) -> ModelParams:
        """Model parameters, optionally overriding the intensity product or exponent."""
        lam = self.lam if lam_p is None else lam_p / self.p
        try:
            return ModelParams(lam=lam, p=self.p, alpha=self.alpha if alpha is None else alpha,
                               epsilon=self.epsilon)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def point_set(self, n: int | None = None) -> PointSet:
        try:
            if self.points is not None:
                return PointSet([Point2(x, y) for x, y in self.points])
            return PointSet.circle(self.n_points if n is None else n, self.radius)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def window(self) -> SimWindow:
        return SimWindow(self.window_half_width)

    def rng(self, stream_id: int = 0) -> RngSeed:
        return RngSeed(self.seed, stream_id)

    def quad_spec(self) -> QuadratureSpec:
        return QuadratureSpec(rel_tol=self.rel_tol, abs_tol=self.abs_tol, max_evals=self.max_evals)


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def _parse_grid(text: str) -> list[float]:
    """Either 'start:stop:step' (inclusive) or a comma-separated list."""
    if ":" in text:
        try:
            start, stop, step = (float(t) for t in text.split(":"))
        except ValueError as exc:
            raise ConfigError(f"bad grid {text!r}, expected start:stop:step") from exc
        if step <= 0 or stop < start:
            raise ConfigError(f"bad grid {text!r}: need step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + k * step for k in range(count)]
    return _parse_floats(text)


def _parse_ints(text: str) -> list[int]:
    return [int(round(v)) for v in _parse_grid(text)]


# ---------------------------------------------------------------------------
# Commands.  Each returns (columns, rows, extra_meta).


def cmd_zeta(scenario: Scenario, args) -> tuple[list[str], list[dict], dict]:
    ps = scenario.point_set()
    zmat = build_correlation_matrix(ps, scenario.params(), scenario.quad_spec())
    rows = []
    for i in range(zmat.n):
        for j in range(i + 1, zmat.n):
            rows.append({
                "i": i + 1,
                "j": j + 1,
                "separation": ps.points[i].distance_to(ps.points[j]),
                "zeta": float(zmat.zeta[i, j]),
            })
    return ["i", "j", "separation", "zeta"], rows, {"correlation_matrix": zmat.to_json_dict()}


def _target_matrix(scenario: Scenario, args) -> CorrelationMatrix:
    if getattr(args, "zeta_json", None):
        try:
            doc = matrix_from_json(Path(args.zeta_json).read_text())
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot read correlation matrix {args.zeta_json}: {exc}") from exc
        if not isinstance(doc, CorrelationMatrix):
            raise ConfigError(f"{args.zeta_json} does not hold a correlation matrix document")
        return doc
    return build_correlation_matrix(scenario.point_set(), scenario.params(), scenario.quad_spec())


def cmd_weights(scenario: Scenario, args) -> tuple[list[str], list[dict], dict]:
    zmat = _target_matrix(scenario, args)
    weights = solve_mixture_weights(zmat, allow_signed=args.allow_signed)
    implied = mixture_implied_correlation(weights)
    rows = [
        {"i": i + 1, "k": k + 1, "q": float(weights.q[i, k])}
        for i in range(weights.n)
        for k in range(i + 1)
    ]
    meta = {
        "mixture_weights": weights.to_json_dict(),
        "proper": weights.is_proper,
        "round_trip_error": float(np.max(np.abs(implied.zeta - zmat.zeta))),
    }
    return ["i", "k", "q"], rows, meta


def cmd_split(scenario: Scenario, args) -> tuple[list[str], list[dict], dict]:
    zmat = _target_matrix(scenario, args)
    margins = check_combination_feasibility(zmat)
    split = build_intensity_split(zmat, scenario.params())
    rows = [
        {"m": m + 1, "n": n + 1, "intensity": float(split.lam[m, n])}
        for m in range(split.n)
        for n in range(m, split.n)
    ]
    meta = {"intensity_split": split.to_json_dict(), "row_margins": margins.tolist()}
    return ["m", "n", "intensity"], rows, meta


def cmd_ccdf(scenario: Scenario, args) -> tuple[list[str], list[dict], dict]:
    ps = scenario.point_set()
    params = scenario.params()
    spec = scenario.quad_spec()
    th = normalize_thresholds(db_to_linear(scenario.y_db), ps, params)
    zmat = build_correlation_matrix(ps, params, spec)
    weights = solve_mixture_weights(zmat, allow_signed=True)
    margins = check_combination_feasibility(zmat)
    row = {
        "y_db": scenario.y_db,
        "ppp": joint_ccdf_ppp(ps, th, params, spec),
        "mixture": joint_ccdf_mixture(weights, th, params),
        "mixture_proper": weights.is_proper,
        "combination": None,
        "combination_feasible": bool(margins.min() >= 0.0),
    }
    if row["combination_feasible"]:
        row["combination"] = joint_ccdf_combination(build_intensity_split(zmat, params), th, params)
    columns = ["y_db", "ppp", "mixture", "mixture_proper", "combination", "combination_feasible"]
    meta: dict = {"correlation_matrix": zmat.to_json_dict()}
    if args.mc:
        est = estimate_joint_ccdf_grid("ppp", ps, [th], params, scenario.window(),
                                       scenario.samples, scenario.rng())[0]
        row.update(mc_ppp=est.value, mc_ci=est.ci_halfwidth)
        columns += ["mc_ppp", "mc_ci"]
        meta["mean_bias_bound"] = scenario.window().mean_bias_bound(params)
    return columns, [row], meta


def cmd_figure1(scenario: Scenario, args) -> tuple[list[str], list[dict], dict]:
    ps = scenario.point_set()
    spec = scenario.quad_spec()
    y_grid = _parse_grid(args.y_db_grid)
    lam_values = _parse_floats(args.lambda_p)
    base = scenario.params(lam_p=lam_values[0])
    zmat = build_correlation_matrix(ps, base, spec)
    weights = solve_mixture_weights(zmat, allow_signed=True)
    feasible = bool(check_combination_feasibility(zmat).min() >= 0.0)

    # The exact-model exponent integral is intensity-free: one integral per y.
    ths, integrals = [], []
    for y_db in y_grid:
        th = normalize_thresholds(db_to_linear(y_db), ps, base)
        ths.append(th)
        integrals.append(ppp_log_ccdf_integral(ps, th, base, spec))

    rows = []
    for lp in lam_values:
        params = scenario.params(lam_p=lp)
        split = build_intensity_split(zmat, params) if feasible else None
        mc = estimate_joint_ccdf_grid("ppp", ps, ths, params, scenario.window(),
                                      scenario.samples, scenario.rng())
        for y_db, th, integral, est in zip(y_grid, ths, integrals, mc):
            rows.append({
                "lambda_p": lp,
                "y_db": y_db,
                "ppp": math.exp(-params.intensity * integral),
                "mixture": joint_ccdf_mixture(weights, th, params),
                "combination": (joint_ccdf_combination(split, th, params) if feasible else None),
                "mc_ppp": est.value,
                "mc_ci": est.ci_halfwidth,
            })
    meta = {
        "correlation_matrix": zmat.to_json_dict(),
        "mixture_proper": weights.is_proper,
        "combination_feasible": feasible,
        "mean_bias_bound": {repr(lp): scenario.window().mean_bias_bound(scenario.params(lam_p=lp))
                            for lp in lam_values},
    }
    return ["lambda_p", "y_db", "ppp", "mixture", "combination", "mc_ppp", "mc_ci"], rows, meta


def cmd_figure2(scenario: Scenario, args) -> tuple[list[str], list[dict], dict]:
    alphas = _parse_floats(args.alphas)
    lam_values = _parse_grid(args.lambda_p_grid)
    separation = args.separation
    rows = []
    for alpha in alphas:
        ps = PointSet([Point2(-separation / 2.0, 0.0), Point2(separation / 2.0, 0.0)])
        ref = scenario.params(lam_p=lam_values[0], alpha=alpha)
        zmat = build_correlation_matrix(ps, ref, scenario.quad_spec())
        weights = solve_mixture_weights(zmat)
        for lp in lam_values:
            params = scenario.params(lam_p=lp, alpha=alpha)
            split = build_intensity_split(zmat, params)
            row = {"alpha": alpha, "lambda_p": lp, "zeta": float(zmat.zeta[0, 1])}
            for model, kw in (("ppp", {}), ("mixture", {"weights": weights}),
                              ("combination", {"split": split})):
                est = estimate_sir_correlation(model, ps, params, scenario.window(),
                                               scenario.samples, scenario.rng(), **kw)
                row[f"corr_{model}"] = est.value
                row[f"{model}_ci"] = est.ci_halfwidth
                row[f"{model}_dropped"] = est.n_dropped
            rows.append(row)
    columns = ["alpha", "lambda_p", "zeta",
               "corr_ppp", "ppp_ci", "ppp_dropped",
               "corr_mixture", "mixture_ci", "mixture_dropped",
               "corr_combination", "combination_ci", "combination_dropped"]
    return columns, rows, {"separation": separation}


def cmd_figure3(scenario: Scenario, args) -> tuple[list[str], list[dict], dict]:
    alphas = _parse_floats(args.alphas)
    n_values = _parse_ints(args.n_grid)
    spec = scenario.quad_spec()
    y_db = scenario.y_db
    rows = []
    for alpha in alphas:
        params = scenario.params(alpha=alpha)
        for n in n_values:
            ps = scenario.point_set(n)
            zmat = build_correlation_matrix(ps, params, spec)
            weights = solve_mixture_weights(zmat, allow_signed=True)
            margins = check_combination_feasibility(zmat)
            feasible = bool(margins.min() >= 0.0)
            th = normalize_thresholds(db_to_linear(y_db), ps, params)
            est = estimate_joint_ccdf_grid("ppp", ps, [th], params, scenario.window(),
                                           scenario.samples, scenario.rng())[0]
            rows.append({
                "alpha": alpha,
                "n": n,
                "ppp": joint_ccdf_ppp(ps, th, params, spec),
                "mixture": joint_ccdf_mixture(weights, th, params),
                "mixture_proper": weights.is_proper,
                "combination": (joint_ccdf_combination(build_intensity_split(zmat, params), th, params)
                                if feasible else None),
                "combination_feasible": feasible,
                "mc_ppp": est.value,
                "mc_ci": est.ci_halfwidth,
            })
    columns = ["alpha", "n", "ppp", "mixture", "mixture_proper",
               "combination", "combination_feasible", "mc_ppp", "mc_ci"]
    return columns, rows, {"y_db": y_db}


def cmd_mrc(scenario: Scenario, args) -> tuple[list[str], list[dict], dict]:
    n = args.n_branches
    ps = scenario.point_set(n)
    params = scenario.params()
    thresholds = _parse_floats(args.thresholds)
    zmat = build_correlation_matrix(ps, params, scenario.quad_spec())
    weights = solve_mixture_weights(zmat)
    mix = mrc_outage_mixture_curve(weights, params, scenario.window(), scenario.samples,
                                   scenario.rng(), args.link_distance, thresholds)
    field = mrc_outage_ppp_curve(ps, params, scenario.window(), scenario.samples,
                                 scenario.rng(stream_id=1), args.link_distance, thresholds)
    rows = []
    for t, m_est, p_est in zip(thresholds, mix, field):
        rows.append({
            "threshold": t,
            "mixture": m_est.value,
            "mixture_ci": m_est.ci_halfwidth,
            "ppp": p_est.value,
            "ppp_ci": p_est.ci_halfwidth,
            "difference": m_est.value - p_est.value,
        })
    meta = {
        "link_distance": args.link_distance,
        "n_branches": n,
        "mean_bias_bound": scenario.window().mean_bias_bound(params),
    }
    return ["threshold", "mixture", "mixture_ci", "ppp", "ppp_ci", "difference"], rows, meta


def cmd_simulate(scenario: Scenario, args) -> tuple[list[str], list[dict], dict]:
    ps = scenario.point_set()
    params = scenario.params()
    window = scenario.window()
    n = len(ps)
    kw = {}
    if args.model == "mixture":
        zmat = build_correlation_matrix(ps, params, scenario.quad_spec())
        kw["weights"] = solve_mixture_weights(zmat)
    elif args.model == "combination":
        zmat = build_correlation_matrix(ps, params, scenario.quad_spec())
        kw["split"] = build_intensity_split(zmat, params)
    interference, sir = sample_interference_and_sir(
        args.model, ps, params, window, scenario.samples, scenario.rng(), **kw)
    rows = []
    for r in range(scenario.samples):
        row = {"realization": r}
        for j in range(n):
            row[f"interference_{j + 1}"] = float(interference[r, j])
        for j in range(n):
            row[f"sir_{j + 1}"] = float(sir[r, j])
        rows.append(row)
    columns = (["realization"]
               + [f"interference_{j + 1}" for j in range(n)]
               + [f"sir_{j + 1}" for j in range(n)])
    meta = {"model": args.model, "mean_bias_bound": window.mean_bias_bound(params)}
    return columns, rows, meta


# ---------------------------------------------------------------------------
# Output plumbing


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _render_csv(columns: list[str], rows: list[dict]) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_format_cell(row.get(c)) for c in columns))
    return "\n".join(lines) + "\n"


def _jsonify(value):
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


def _render_json(columns: list[str], rows: list[dict], meta: dict) -> str:
    doc = {
        "meta": meta,
        "columns": columns,
        "rows": [{c: _jsonify(row.get(c)) for c in columns} for row in rows],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


_PLOTTERS = {"figure1": "render_figure1", "figure2": "render_figure2",
             "figure3": "render_figure3", "mrc": "render_mrc"}


def _emit(command: str, scenario: Scenario, args, columns, rows, extra_meta) -> None:
    meta = {"command": command, "scenario": scenario.to_dict()}
    meta.update(extra_meta)
    if args.format == "json":
        text = _render_json(columns, rows, meta)
    else:
        text = _render_csv(columns, rows)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        sidecar = out.with_suffix(out.suffix + ".meta.json")
        sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        written = [str(out), str(sidecar)]
        if command in _PLOTTERS and not args.no_plot:
            from . import plots

            png = out.with_suffix(".png")
            getattr(plots, _PLOTTERS[command])(rows, png)
            written.append(str(png))
        print("wrote " + ", ".join(written), file=sys.stderr)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Argument parsing


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON scenario file")
    common.add_argument("--seed", type=int, help="root RNG seed")
    common.add_argument("--samples", type=int, help="Monte-Carlo sample count")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--no-plot", action="store_true", help="skip the PNG next to --out")
    for flag, kind in (("--lam", float), ("--p", float), ("--alpha", float),
                       ("--epsilon", float), ("--radius", float), ("--n-points", int),
                       ("--y-db", float), ("--window", float)):
        common.add_argument(flag, type=kind)

    parser = argparse.ArgumentParser(
        prog="sircorr",
        description="Correlated-interference models in a Poisson field: "
                    "correlation matrices, joint SIR CCDFs, Monte-Carlo validation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("zeta", parents=[common],
                   help="pairwise interference correlations for the scenario geometry")

    p_weights = sub.add_parser("weights", parents=[common], help="mixture selector weights")
    p_weights.add_argument("--zeta-json", help="correlation-matrix JSON instead of geometry")
    p_weights.add_argument("--allow-signed", action="store_true",
                           help="return the signed algebraic solution instead of failing")

    p_split = sub.add_parser("split", parents=[common], help="intensity split and feasibility margins")
    p_split.add_argument("--zeta-json", help="correlation-matrix JSON instead of geometry")

    p_ccdf = sub.add_parser("ccdf", parents=[common],
                            help="joint SIR CCDF under all three models at one threshold")
    p_ccdf.add_argument("--mc", action="store_true", help="add a field Monte-Carlo column")

    p_f1 = sub.add_parser("figure1", parents=[common],
                          help="joint CCDF vs common threshold, per interferer intensity")
    p_f1.add_argument("--y-db-grid", default="-10:10:1")
    p_f1.add_argument("--lambda-p", default="1,0.1,0.01")

    p_f2 = sub.add_parser("figure2", parents=[common],
                          help="SIR correlation vs interferer intensity, per model")
    p_f2.add_argument("--lambda-p-grid", default="0.01,0.0316,0.1,0.316,1")
    p_f2.add_argument("--alphas", default="2.5,4")
    p_f2.add_argument("--separation", type=float, default=0.5)

    p_f3 = sub.add_parser("figure3", parents=[common],
                          help="joint CCDF vs number of points, per model")
    p_f3.add_argument("--n-grid", default="1:6:1")
    p_f3.add_argument("--alphas", default="2.5,4")

    p_mrc = sub.add_parser("mrc", parents=[common],
                           help="combining-receiver outage: decomposition vs field simulation")
    p_mrc.add_argument("--n-branches", type=int, default=2)
    p_mrc.add_argument("--link-distance", type=float, default=0.25)
    p_mrc.add_argument("--thresholds", default="0.5,1,2")

    p_sim = sub.add_parser("simulate", parents=[common], help="raw sample dump, one row per realization")
    p_sim.add_argument("--model", choices=("ppp", "mixture", "combination"), default="ppp")

    return parser


_OVERRIDES = {
    "lam": "lam", "p": "p", "alpha": "alpha", "epsilon": "epsilon",
    "radius": "radius", "n_points": "n_points", "y_db": "y_db",
    "window": "window_half_width", "samples": "samples", "seed": "seed",
}

_COMMANDS = {
    "zeta": cmd_zeta,
    "weights": cmd_weights,
    "split": cmd_split,
    "ccdf": cmd_ccdf,
    "figure1": cmd_figure1,
    "figure2": cmd_figure2,
    "figure3": cmd_figure3,
    "mrc": cmd_mrc,
    "simulate": cmd_simulate,
}


def _resolve_scenario(args) -> Scenario:
    doc: dict = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
    for arg_name, field in _OVERRIDES.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            doc[field] = value
    return Scenario.from_dict(doc)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        scenario = _resolve_scenario(args)
        columns, rows, extra_meta = _COMMANDS[args.command](scenario, args)
        _emit(args.command, scenario, args, columns, rows, extra_meta)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EnumerationCapExceeded as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleWeights, InfeasibleSplit) as exc:
        print(f"infeasible model: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except QuadratureError as exc:
        print(f"numerical non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
