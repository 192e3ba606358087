"""Configuration-driven command line driver.

Each subcommand runs one pipeline and writes a deterministic report.json
(resolved config echoed, outputs, measured constants, pass/fail checks)
plus CSV data files into the output directory.  Wall-clock information
lives in a separate run_meta.json so reports stay byte-identical across
repeated runs with the same config and seed.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 validation mismatch.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, load_config
from .errors import ConfigError, KinklabError
from .grid import Grid
from .kink import build_kink
from .model import kink_energy
from .nlkg import (
    band_limited_perturbation,
    orbital_experiment,
    sech_bump_perturbation,
)
from .oracle import (
    discretize,
    eigen_bottom_extrapolated,
    eigenvalues_below,
    recommended_domain,
    sturm_count,
)
from .spectral import (
    EMERGES,
    compute_d,
    drift_predict,
    find_eigenvalues,
    perturbation_free,
    resonance_criterion,
)

COMMANDS = ("kink", "spectrum", "drift", "resonance", "simulate", "validate")


# --------------------------------------------------------------------------
# deterministic serialization


def _fmt(x) -> str:
    return "%.17g" % float(x)


def write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    with path.open("w") as f:
        f.write(",".join(header) + "\n")
        rows = zip(*columns)
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def write_report(out: Path, report: dict) -> None:
    (out / "report.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n"
    )


def write_meta(out: Path) -> None:
    meta = {
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "version": __version__,
    }
    (out / "run_meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def _check(name: str, passed: bool, value=None, tolerance=None) -> dict:
    entry = {"name": name, "passed": bool(passed)}
    if value is not None:
        entry["value"] = float(value)
    if tolerance is not None:
        entry["tolerance"] = float(tolerance)
    return entry


# --------------------------------------------------------------------------
# pipelines


def _pipeline_kink(cfg: ExperimentConfig, out: Path, rng, threads: int, quiet: bool) -> dict:
    kt = build_kink(cfg.pot, cfg.kink, cfg.tc, cfg.grid, tol=cfg.tolerances["kink"])
    y = cfg.grid.y
    write_csv(
        out / "kink.csv",
        ["y", "S", "S_b", "T", "residual"],
        [y, np.asarray(cfg.kink.profile(y)), kt.S_b, kt.T, kt.residual],
    )
    rep = cfg.tc.delta_report
    return {
        "results": {
            "norms": {
                "S_b_l1": kt.norms[0],
                "S_b_linf": kt.norms[1],
                "dS_b_l1": kt.norms[2],
                "dS_b_linf": kt.norms[3],
                "x_norm": kt.x_norm_full,
            },
            "residual_inf": kt.residual_inf,
            "iterations": kt.iterations,
            "contraction_factor": max(kt.contraction_factors, default=0.0),
            "static_energy": kink_energy(cfg.pot, cfg.kink, cfg.grid),
            "smallness": {"l1": rep.l1, "linf": rep.linf, "delta": rep.delta},
        },
        "checks": [
            _check("fixed_point_converged", kt.iterations >= 0),
            _check("residual_inf", kt.residual_inf < 1e-7, kt.residual_inf, 1e-7),
        ],
    }


def _perturbation(cfg: ExperimentConfig):
    if cfg.tc.is_trivial:
        return perturbation_free(cfg.pot, cfg.kink, cfg.grid), None
    kt = build_kink(cfg.pot, cfg.kink, cfg.tc, cfg.grid, tol=cfg.tolerances["kink"])
    return compute_d(cfg.pot, cfg.tc, kt), kt


def _pipeline_spectrum(cfg: ExperimentConfig, out: Path, rng, threads: int, quiet: bool) -> dict:
    pd, _ = _perturbation(cfg)
    search = cfg.spectrum.get("search")
    if search is not None:
        search = (search[0], search[1])
    unpert = None
    if not cfg.tc.is_trivial and cfg.spectrum.get("with_drift", True):
        pd0 = perturbation_free(cfg.pot, cfg.kink, cfg.grid)
        unpert = find_eigenvalues(
            cfg.pot, pd0, search, cfg.spectrum.get("n_scan", 400), threads=threads
        )
    rep = find_eigenvalues(
        cfg.pot,
        pd,
        search,
        cfg.spectrum.get("n_scan", 400),
        root_xtol=cfg.tolerances["root"],
        unperturbed=unpert,
        threads=threads,
    )
    for i, rec in enumerate(rep.eigenvalues):
        write_csv(
            out / f"eigenfunction_{i}.csv",
            ["y", "Y", "dY"],
            [cfg.grid.y, rec.Y, rec.dY],
        )
    if rep.threshold and rep.threshold.profile is not None:
        write_csv(
            out / "threshold_profile.csv",
            ["y", "R", "dR"],
            [cfg.grid.y, rep.threshold.profile, rep.threshold.profile_deriv],
        )
    results = {
        "essential_edge": rep.essential_edge,
        "eigenvalues": [
            {
                "lambda": r.lam,
                "k": r.k,
                "evans_value": r.evans_value,
                "decay_rate": r.decay_rate,
                "nearest_known": r.nearest_known,
            }
            for r in rep.eigenvalues
        ],
        "threshold_status": rep.threshold_status,
        "threshold_wronskian": rep.threshold.wronskian if rep.threshold else None,
        "drift_predictions": [
            {
                "lambda_star": d.lambda_star,
                "A": d.A,
                "norm_sq": d.norm_sq,
                "predicted_lambda": d.predicted_lambda,
                "first_order_variant": d.first_order_variant,
            }
            for d in rep.drift_predictions
        ],
    }
    return {"results": results, "checks": []}


def _pipeline_drift(cfg: ExperimentConfig, out: Path, rng, threads: int, quiet: bool) -> dict:
    pd, _ = _perturbation(cfg)
    idx = cfg.drift.get("eigenvalue_index", 0)
    pd0 = perturbation_free(cfg.pot, cfg.kink, cfg.grid)
    rep0 = find_eigenvalues(cfg.pot, pd0, cfg.spectrum.get("search"), cfg.spectrum.get("n_scan", 400))
    if idx >= len(rep0.eigenvalues):
        raise ConfigError("drift.eigenvalue_index", f"only {len(rep0.eigenvalues)} eigenvalues found")
    rec0 = rep0.eigenvalues[idx]
    dp = drift_predict(rec0, rec0.lam, pd)
    rep1 = find_eigenvalues(cfg.pot, pd, cfg.spectrum.get("search"), cfg.spectrum.get("n_scan", 400))
    found = min(rep1.lams, key=lambda l: abs(l - dp.predicted_lambda)) if rep1.lams else None
    results = {
        "lambda_star": dp.lambda_star,
        "A": dp.A,
        "norm_sq": dp.norm_sq,
        "predicted_lambda": dp.predicted_lambda,
        "first_order_variant": dp.first_order_variant,
        "evans_lambda": found,
    }
    checks = []
    if found is not None and dp.A != 0.0:
        checks.append(
            _check("drift_sign_agrees", np.sign(found - dp.lambda_star) == np.sign(dp.A))
        )
    return {"results": results, "checks": checks}


def _pipeline_resonance(cfg: ExperimentConfig, out: Path, rng, threads: int, quiet: bool) -> dict:
    if cfg.pot.resonance is None:
        raise ConfigError("model", "model carries no threshold profile; resonance analysis needs one")
    pd, _ = _perturbation(cfg)
    cr = resonance_criterion(
        cfg.pot.resonance,
        pd,
        r_deriv=cfg.pot.resonance_deriv,
        margin_factor=cfg.resonance.get("margin_factor", 10.0),
    )
    from .spectral import threshold_status_report

    thr = threshold_status_report(cfg.pot, pd)
    results = {
        "criterion_value": cr.value,
        "first_order_value": cr.first_order_value,
        "verdict": cr.verdict,
        "margin": cr.margin,
        "delta": cr.delta_size,
        "threshold_status": thr.status,
        "threshold_wronskian": thr.wronskian,
    }
    checks = [
        _check(
            "first_order_sign_consistent",
            cr.value == 0.0 or np.sign(cr.first_order_value) == np.sign(cr.value),
        )
    ]
    return {"results": results, "checks": checks}


def _pipeline_simulate(cfg: ExperimentConfig, out: Path, rng, threads: int, quiet: bool) -> dict:
    sconf = cfg.simulate or {}
    t_end = sconf.get("t_end", 100.0)
    q = sconf.get("q", 1.0)
    sg = sconf.get("grid", {}) or {}
    sim_grid = Grid(sg.get("L", max(2.0 * cfg.grid.L, t_end + 20.0)), sg.get("N", 8192))
    kt = build_kink(cfg.pot, cfg.kink, cfg.tc, cfg.grid, tol=cfg.tolerances["kink"])
    pconf = sconf.get("perturbation", {}) or {}
    kind = pconf.get("kind", "sech")
    eps = pconf.get("eps", 1e-2)
    if kind == "sech":
        pert = sech_bump_perturbation(
            sim_grid, eps, pconf.get("width", 1.0), pconf.get("center", 0.0)
        )
    elif kind == "random":
        pert = band_limited_perturbation(
            sim_grid, eps, rng, pconf.get("k_max", 1.0), pconf.get("window", 8.0)
        )
    else:
        pert = (np.zeros(sim_grid.n + 1), np.zeros(sim_grid.n + 1))
    res = orbital_experiment(
        kt,
        pert,
        t_end,
        q,
        tc=None if cfg.tc.is_trivial else cfg.tc,
        pot=cfg.pot,
        grid=sim_grid,
        dt_factor=sconf.get("dt_factor", 0.5),
        record_every=sconf.get("record_every", 0.5),
    )
    arr = res.as_arrays()
    write_csv(
        out / "timeseries.csv",
        ["t", "d_q", "E", "drift_rel"],
        [arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]],
    )
    drift_max = float(np.max(arr[:, 3]))
    results = {
        "eps": res.eps,
        "q": q,
        "sup_dq": res.sup_dq,
        "initial_dq": res.records[0].dq,
        "sup_ratio": res.sup_ratio,
        "energy_drift_max": drift_max,
    }
    checks = [
        _check("energy_drift", drift_max < 1e-4, drift_max, 1e-4),
        _check(
            "distance_bounded",
            res.sup_dq <= 8.0 * max(res.records[0].dq, 1e-12),
            res.sup_dq,
        ),
    ]
    return {"results": results, "checks": checks}


def _pipeline_validate(cfg: ExperimentConfig, out: Path, rng, threads: int, quiet: bool) -> dict:
    pd, kt = _perturbation(cfg)
    if kt is None:
        kt = build_kink(cfg.pot, cfg.kink, cfg.tc, cfg.grid)
    vconf = cfg.validate or {}
    edge_clear = vconf.get("edge_clearance", 1e-3)
    rep = find_eigenvalues(
        cfg.pot, pd, cfg.spectrum.get("search"), cfg.spectrum.get("n_scan", 400), threads=threads
    )
    evans_lams = [l for l in rep.lams if l < cfg.pot.m_sq - edge_clear]

    k_min = float(np.sqrt(edge_clear))
    oconf = vconf.get("oracle", {}) or {}
    if "L" in oconf and "N" in oconf:
        L_o, N_o = float(oconf["L"]), int(oconf["N"])
    else:
        L_o, N_o = recommended_domain(k_min)
    oracle_lams = eigen_bottom_extrapolated(
        cfg.pot, cfg.tc, kt, L_o, N_o,
        max(len(evans_lams) + 1, 2),
    )
    oracle_below = [l for l in oracle_lams if l < cfg.pot.m_sq - edge_clear]
    dop = discretize(cfg.pot, cfg.tc, kt, L_o, N_o)
    count_cert = sturm_count(dop, cfg.pot.m_sq - edge_clear)

    tol = vconf.get("tolerance", 1e-5)
    rows = []
    ok = True
    n = max(len(evans_lams), len(oracle_below))
    for i in range(n):
        le = evans_lams[i] if i < len(evans_lams) else None
        lo = oracle_below[i] if i < len(oracle_below) else None
        passed = le is not None and lo is not None and abs(le - lo) <= tol
        ok = ok and passed
        rows.append({"evans": le, "oracle": lo, "passed": passed,
                     "diff": (abs(le - lo) if le is not None and lo is not None else None)})
    count_ok = count_cert == len(evans_lams)
    ok = ok and count_ok
    if not quiet:
        print(f"{'evans':>20} {'oracle':>20} {'diff':>12}  pass")
        for r in rows:
            d = f"{r['diff']:.2e}" if r["diff"] is not None else "n/a"
            print(f"{r['evans']!s:>20} {r['oracle']!s:>20} {d:>12}  {'ok' if r['passed'] else 'FAIL'}")
        print(f"sturm count {count_cert} vs evans count {len(evans_lams)}: "
              f"{'ok' if count_ok else 'FAIL'}")
    results = {
        "rows": rows,
        "sturm_count": count_cert,
        "evans_count": len(evans_lams),
        "oracle_domain": {"L": L_o, "N": N_o},
        "threshold_status": rep.threshold_status,
    }
    checks = [
        _check("eigenvalues_match", all(r["passed"] for r in rows) if rows else True),
        _check("counts_match", count_ok),
    ]
    return {"results": results, "checks": checks, "mismatch": not ok}


PIPELINES = {
    "kink": _pipeline_kink,
    "spectrum": _pipeline_spectrum,
    "drift": _pipeline_drift,
    "resonance": _pipeline_resonance,
    "simulate": _pipeline_simulate,
    "validate": _pipeline_validate,
}


def run(command: str, cfg: ExperimentConfig, out_dir: str | Path, *,
        seed: int | None = None, threads: int = 1, quiet: bool = False) -> int:
    """Execute one pipeline; returns the process exit status."""
    if command not in PIPELINES:
        raise ConfigError("command", f"unknown command {command!r}; choices: {COMMANDS}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    payload = PIPELINES[command](cfg, out, rng, threads, quiet)
    report = {
        "command": command,
        "config": cfg.raw,
        "seed": cfg.seed if seed is None else seed,
        "results": payload["results"],
        "checks": payload["checks"],
    }
    write_report(out, report)
    write_meta(out)
    if payload.get("mismatch"):
        return 3
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="kinklab",
        description="Kink construction, Evans-function spectral analysis, and "
        "time-domain validation for variable-coefficient scalar fields",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="YAML experiment description")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        status = run(
            args.command, cfg, args.out,
            seed=args.seed, threads=args.threads, quiet=args.quiet,
        )
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 1
    except KinklabError as e:
        print(f"numerical failure ({type(e).__name__}): {e}", file=sys.stderr)
        return 2
    if not args.quiet:
        print(f"{args.command}: done (exit {status}); report in {args.out}/report.json")
    return status


if __name__ == "__main__":
    sys.exit(main())
