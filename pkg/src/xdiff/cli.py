"""Batch front end: config parsing, scenario orchestration, CSV/JSON artifacts.

Subcommands
    run               simulate one configuration, emit diagnostics CSV + JSON summary
    verify-structure  run the structural certificate suite, emit JSON report
    fp-compare        Fokker-Planck vs reduced-system consistency study
    sweep             cross-product parameter study with a combined summary CSV

Exit codes: 0 success, 1 usage/config/numerical error, 2 scientific
assertion failed (entropy violation, certificate failure, sweep assertion).
Configs are YAML (JSON accepted); see the configs/ directory for samples.
The XDIFF_LOG environment variable sets the log level.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import itertools
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .coeffs import CoefficientSpec, verify_assumptions
from .entropy import (
    EntropyParams,
    entropy_gradient,
    entropy_hessian,
    invert_gradient,
    structure_bound_check,
)
from .errors import EntropyViolationError, NumericalError
from .fokker_planck import consistency_compare
from .grid import PeriodicGrid
from .presets import make_fp_initial, make_initial_state
from .stepper import (
    DIAGNOSTICS_FIELDS,
    RunArtifact,
    Scheme,
    SchemeConfig,
    entropy_inequality_report,
    simulate,
)
from .system import matrix_bound_check, petrovski_check

logger = logging.getLogger("xdiff")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ASSERTION = 2


class ConfigError(ValueError):
    """Raised for malformed or inconsistent run configurations."""


def _setup_logging() -> None:
    level = os.environ.get("XDIFF_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(name)s: %(message)s")


def load_config(path: str | Path) -> dict:
    """Load a YAML or JSON config; parse errors carry line information."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    else:
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            loc = f":{mark.line + 1}:{mark.column + 1}" if mark else ""
            raise ConfigError(f"{path}{loc}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def _require(cfg: dict, key: str, where: str):
    if key not in cfg:
        raise ConfigError(f"missing required field {where}.{key}")
    return cfg[key]


def _grid_from(cfg: dict) -> PeriodicGrid:
    section = _require(cfg, "grid", "config")
    try:
        return PeriodicGrid(d=int(section.get("d", 1)), n=int(_require(section, "n", "grid")))
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc


def _coefficient_from(cfg: dict) -> CoefficientSpec:
    section = _require(cfg, "coefficient", "config")
    try:
        return CoefficientSpec.from_config(section)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"coefficient: {exc}") from exc


def _entropy_from(cfg: dict, spec: CoefficientSpec) -> EntropyParams:
    section = cfg.get("entropy", {})
    alpha = float(section.get("alpha", spec.p + 4.0))
    try:
        params = EntropyParams(alpha=alpha)
        params.require_compatible(spec)
    except ValueError as exc:
        raise ConfigError(f"entropy: {exc}") from exc
    return params


def _mu_from(cfg: dict) -> tuple[float, float]:
    mu = cfg.get("mu", [0.0, 0.0])
    if not isinstance(mu, (list, tuple)) or len(mu) != 2:
        raise ConfigError("mu must be a pair [mu1, mu2]")
    return float(mu[0]), float(mu[1])


def _scheme_from(cfg: dict) -> SchemeConfig:
    section = _require(cfg, "scheme", "config")
    reg = section.get("regularization_weight", None)
    if isinstance(reg, str):
        if reg != "tau":
            raise ConfigError("scheme.regularization_weight must be a number or 'tau'")
        reg = None
    try:
        return SchemeConfig(
            tau=float(_require(section, "tau", "scheme")),
            t_end=float(_require(section, "t_end", "scheme")),
            scheme=Scheme(section.get("kind", "entropy_implicit")),
            m=None if section.get("m") is None else int(section["m"]),
            newton_tol=float(section.get("newton_tol", 1e-10)),
            newton_max=int(section.get("newton_max", 50)),
            reg_weight=None if reg is None else float(reg),
        )
    except ValueError as exc:
        raise ConfigError(f"scheme: {exc}") from exc


def _initial_from(cfg: dict, grid: PeriodicGrid, mu, seed_override=None):
    section = cfg.get("initial", {"preset": "constant"})
    base = section.get("base", [1.0, 1.0])
    if np.ndim(base) == 0:
        base = [base, base]
    seed = int(section.get("seed", 0) if seed_override is None else seed_override)
    try:
        return make_initial_state(
            grid,
            section.get("preset", "constant"),
            base=(float(base[0]), float(base[1])),
            amplitude=float(section.get("amplitude", 0.3)),
            seed=seed,
            mu=mu,
        )
    except ValueError as exc:
        raise ConfigError(f"initial: {exc}") from exc


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_diagnostics_csv(artifact: RunArtifact, path: Path) -> None:
    lines = [",".join(DIAGNOSTICS_FIELDS)]
    for rec in artifact.records:
        lines.append(",".join(_fmt(getattr(rec, name)) for name in DIAGNOSTICS_FIELDS))
    path.write_text("\n".join(lines) + "\n")


def write_columns_dat(artifact: RunArtifact, path: Path) -> None:
    """Sidecar gnuplot-style column file (whitespace separated)."""
    lines = ["# " + " ".join(DIAGNOSTICS_FIELDS)]
    for rec in artifact.records:
        lines.append(" ".join(_fmt(getattr(rec, name)) for name in DIAGNOSTICS_FIELDS))
    path.write_text("\n".join(lines) + "\n")


def _versions() -> dict:
    import scipy

    return {"xdiff": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def _summarize_run(artifact: RunArtifact, config_echo: dict) -> dict:
    last = artifact.records[-1]
    ineq = (
        entropy_inequality_report(artifact).to_dict()
        if artifact.scheme is Scheme.ENTROPY_IMPLICIT
        else None
    )
    return {
        "final": {name: getattr(last, name) for name in DIAGNOSTICS_FIELDS},
        "min_u_overall": artifact.min_u_overall,
        "entropy_inequality": ineq,
        "lift_epsilon": list(artifact.lift_epsilon),
        "tau_halvings": artifact.tau_halvings,
        "steps": len(artifact.step_times) - 1,
        "config": config_echo,
        "versions": _versions(),
    }


def run_single(cfg: dict, out_dir: Path, probe_every: int = 1, seed=None, columns=False) -> dict:
    """Execute one `run` configuration and write its artifacts."""
    grid = _grid_from(cfg)
    spec = _coefficient_from(cfg)
    params = _entropy_from(cfg, spec)
    mu = _mu_from(cfg)
    scheme_cfg = _scheme_from(cfg)
    initial = _initial_from(cfg, grid, mu, seed_override=seed)
    probes = int(cfg.get("probes", {}).get("every", probe_every))

    try:
        scheme_cfg.validate_for(grid, params, mu)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    artifact = simulate(initial, spec, params, scheme_cfg, grid, probe_every=probes)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_diagnostics_csv(artifact, out_dir / "diagnostics.csv")
    if columns:
        write_columns_dat(artifact, out_dir / "diagnostics.dat")
    summary = _summarize_run(artifact, cfg)
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    summary = run_single(
        cfg, Path(args.out), probe_every=args.probe_every, seed=args.seed, columns=args.columns
    )
    ineq = summary.get("entropy_inequality")
    if ineq is not None and not ineq["passed"]:
        logger.error("entropy inequality violated (worst relative margin %s)", ineq["worst_relative_margin"])
        return EXIT_ASSERTION
    return EXIT_OK


def structure_checks(spec: CoefficientSpec, params: EntropyParams, samples: int = 10_000, seed: int = 0) -> dict:
    """The full structural certificate suite for one coefficient family."""
    rng = np.random.default_rng(seed)
    assumption = verify_assumptions(spec)
    bound = structure_bound_check(spec, params, n_samples=samples, rng_seed=seed)
    petrovski = petrovski_check(spec, samples=samples, rng_seed=seed)
    matrix_bound = matrix_bound_check(spec, samples=samples, rng_seed=seed)

    # derivative consistency of h on random positive states
    n_fd = 200
    u = 10.0 ** rng.uniform(-2.0, 2.0, size=(n_fd, 2))
    grad_err = 0.0
    hess_err = 0.0
    for u1, u2 in u:
        g = np.array(entropy_gradient((u1, u2), params))
        h_mat = entropy_hessian((u1, u2), params)
        fd_g = np.zeros(2)
        fd_h = np.zeros((2, 2))
        for j, (d1, d2) in enumerate(((1.0, 0.0), (0.0, 1.0))):
            step = 1e-6 * (u1 if j == 0 else u2)
            up = (u1 + step * d1, u2 + step * d2)
            dn = (u1 - step * d1, u2 - step * d2)
            from .entropy import entropy_density

            fd_g[j] = (entropy_density(up, params) - entropy_density(dn, params)) / (2 * step)
            fd_h[:, j] = (
                np.array(entropy_gradient(up, params)) - np.array(entropy_gradient(dn, params))
            ) / (2 * step)
        grad_err = max(grad_err, float(np.max(np.abs(fd_g - g) / (1.0 + np.abs(g)))))
        hess_err = max(hess_err, float(np.max(np.abs(fd_h - h_mat) / (1.0 + np.abs(h_mat)))))

    # gradient-inversion roundtrip
    n_rt = 500
    u_rt = 10.0 ** rng.uniform(-3.0, 3.0, size=(n_rt, 2))
    rt_err = 0.0
    for u1, u2 in u_rt:
        w = entropy_gradient((u1, u2), params)
        v1, v2 = invert_gradient(w, params, tol=1e-12)
        rt_err = max(rt_err, abs(v1 - u1) / u1, abs(v2 - u2) / u2)

    # quadratic-growth comparison constant C_a = a(1)^2
    n_ca = 10_000
    uu = 10.0 ** rng.uniform(-3.0, 3.0, size=(n_ca, 2))
    r = uu[:, 0] / uu[:, 1]
    a_vals = np.asarray(spec.eval_a(r), dtype=float)
    c_a = float(spec.eval_a(1.0)) ** 2
    lhs = a_vals**2 * (uu[:, 0] ** 2 + uu[:, 1] ** 2)
    rhs = c_a * (
        uu[:, 0] ** 2 + uu[:, 1] ** 2 + uu[:, 0] ** 4 / uu[:, 1] ** 2 + uu[:, 1] ** 4 / uu[:, 0] ** 2
    )
    ca_margin = float(np.min((rhs - lhs) / rhs))

    checks = {
        "assumptions": assumption.to_dict(),
        "structure_bound": bound.to_dict(),
        "petrovski": petrovski.to_dict(),
        "matrix_bound": matrix_bound.to_dict(),
        "gradient_fd_error": grad_err,
        "hessian_fd_error": hess_err,
        "roundtrip_error": rt_err,
        "quadratic_growth_margin": ca_margin,
        "quadratic_growth_constant": c_a,
    }
    checks["passed"] = bool(
        assumption.passed
        and bound.passed
        and petrovski.passed
        and matrix_bound.finite
        and grad_err <= 1e-6
        and hess_err <= 1e-6
        and rt_err <= 1e-8
        and ca_margin >= -1e-12
    )
    return checks


def cmd_verify_structure(args) -> int:
    cfg = load_config(args.config)
    spec = _coefficient_from(cfg)
    params = _entropy_from(cfg, spec)
    samples = int(cfg.get("samples", 10_000))
    report = structure_checks(spec, params, samples=samples, seed=args.seed or 0)
    report["config"] = cfg
    report["versions"] = _versions()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "structure_report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    for name in ("assumptions", "structure_bound", "petrovski"):
        status = "pass" if report[name].get("passed", report[name].get("finite")) else "FAIL"
        print(f"{name}: {status}")
    print(f"overall: {'pass' if report['passed'] else 'FAIL'}")
    return EXIT_OK if report["passed"] else EXIT_ASSERTION


def cmd_fp_compare(args) -> int:
    cfg = load_config(args.config)
    spec = _coefficient_from(cfg)
    params = _entropy_from(cfg, spec)
    section = _require(cfg, "fp", "config")
    lam = _require(section, "lambda", "fp")
    if not isinstance(lam, (list, tuple)) or len(lam) != 2:
        raise ConfigError("fp.lambda must be a pair")
    lam = (float(lam[0]), float(lam[1]))
    if lam[0] == lam[1]:
        raise ConfigError("fp.lambda entries must differ (equal weights degenerate)")
    sigma_n = float(section.get("sigma_n", 1.0))
    big_l = float(section.get("L", 8.0))
    horizon = float(_require(section, "horizon", "fp"))
    init = section.get("initial", {})
    resolutions = [
        (int(r["n_x"]), int(r["n_y"]), float(r["tau"]))
        for r in _require(section, "resolutions", "fp")
    ]
    if not resolutions:
        raise ConfigError("fp.resolutions must be nonempty")

    def factory(n_x: int, n_y: int):
        return make_fp_initial(
            n_x=n_x,
            n_y=n_y,
            L=big_l,
            lam=lam,
            sigma_n=sigma_n,
            x_profile=init.get("x_profile", "cosine-perturbed"),
            base=float(init.get("base", 1.0)),
            amplitude=float(init.get("amplitude", 0.3)),
            y_sigma=float(init.get("y_sigma", 1.0)),
            seed=int(init.get("seed", 0) if args.seed is None else args.seed),
        )

    report = consistency_compare(spec, params, factory, horizon, resolutions)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = list(report.rows[0].to_dict().keys())
    lines = [",".join(header)]
    for row in report.rows:
        lines.append(",".join(_fmt(v) for v in row.to_dict().values()))
    (out / "fp_compare.csv").write_text("\n".join(lines) + "\n")
    summary = report.to_dict()
    summary["config"] = cfg
    summary["versions"] = _versions()
    (out / "fp_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")

    threshold = section.get("assert_max_discrepancy")
    if threshold is not None:
        worst = max(max(r.discrepancy_u1, r.discrepancy_u2) for r in report.rows)
        if worst > float(threshold):
            logger.error("discrepancy %.3e exceeds threshold %s", worst, threshold)
            return EXIT_ASSERTION
    return EXIT_OK


def _sweep_points(cfg: dict) -> list[dict]:
    sweep = cfg.get("sweep", {})
    if not sweep:
        raise ConfigError("sweep section is missing or empty")
    keys = sorted(sweep)
    values = [sweep[k] if isinstance(sweep[k], list) else [sweep[k]] for k in keys]
    if any(len(v) == 0 for v in values):
        raise ConfigError("sweep parameter lists must be nonempty")
    points = []
    for combo in itertools.product(*values):
        point = json.loads(json.dumps({k: v for k, v in cfg.items() if k != "sweep"}))
        for key, val in zip(keys, combo):
            if key == "tau":
                point.setdefault("scheme", {})["tau"] = val
            elif key == "n":
                point.setdefault("grid", {})["n"] = val
            elif key == "alpha":
                point.setdefault("entropy", {})["alpha"] = val
            elif key == "seed":
                point.setdefault("initial", {})["seed"] = val
            else:
                raise ConfigError(f"unsupported sweep parameter {key!r}")
        point["_sweep_values"] = dict(zip(keys, combo))
        points.append(point)
    return points


def _run_sweep_point(payload):
    cfg, out_dir, probe_every = payload
    values = cfg.pop("_sweep_values")
    try:
        summary = run_single(cfg, Path(out_dir), probe_every=probe_every)
        ineq = summary.get("entropy_inequality")
        failed = ineq is not None and not ineq["passed"]
        return {"values": values, "ok": not failed, "error": None, "summary": summary}
    except (ConfigError, NumericalError, EntropyViolationError, ValueError) as exc:
        return {"values": values, "ok": False, "error": str(exc), "summary": None}


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    points = _sweep_points(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    payloads = []
    for i, point in enumerate(points):
        tag = "_".join(f"{k}-{v}" for k, v in point["_sweep_values"].items())
        payloads.append((point, str(out / f"point_{i:03d}_{tag}"), args.probe_every))

    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_sweep_point, payloads))
    else:
        results = [_run_sweep_point(p) for p in payloads]

    value_keys = sorted(points[0]["_sweep_values"]) if points else []
    header = value_keys + ["ok", "error", "final_H", "final_l2_to_average", "final_mass1", "final_mass2"]
    lines = [",".join(header)]
    for res in results:
        row = [_fmt(res["values"][k]) for k in value_keys]
        row.append(str(res["ok"]))
        row.append("" if res["error"] is None else res["error"].replace(",", ";"))
        if res["summary"] is not None:
            final = res["summary"]["final"]
            row.extend(_fmt(final[k]) for k in ("H", "l2_to_average", "mass1", "mass2"))
        else:
            row.extend(["", "", "", ""])
        lines.append(",".join(row))
    (out / "sweep_summary.csv").write_text("\n".join(lines) + "\n")

    n_failed = sum(not r["ok"] for r in results)
    print(f"sweep: {len(results) - n_failed}/{len(results)} points passed")
    return EXIT_ASSERTION if n_failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xdiff", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("run", cmd_run),
        ("verify-structure", cmd_verify_structure),
        ("fp-compare", cmd_fp_compare),
        ("sweep", cmd_sweep),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML or JSON configuration file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
        p.add_argument("--probe-every", type=int, default=1, help="record every k-th step")
        p.add_argument("--columns", action="store_true", help="also emit gnuplot column files")
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except EntropyViolationError as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERTION
    except (NumericalError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
