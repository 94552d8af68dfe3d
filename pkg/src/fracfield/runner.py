"""Task execution behind the CLI: one function per subcommand, shared plumbing.

Each task builds its own bases, runs the corresponding library pipeline, and
writes a results JSON plus a CSV summary through the persist module. All
functions return the results dict they persisted; failures surface as
FracfieldError subclasses for the CLI to map onto exit codes.

Span policy: tasks that compare energies across domains (sweep-lambda,
multiplicity) default to the full eigenbasis when solver.K is null, because
truncating a larger domain's span inflates its level relative to a smaller
one and corrupts exactly the comparisons those tasks exist to make. solve and
morse default to the spectral module's standard cut.
"""

from __future__ import annotations

import logging
import time
from pathlib import Path

import numpy as np

from .config import RunConfig
from .domain import build_domain
from .errors import EmptyMask, FracfieldError, TaskFailed
from .extension import k_alpha, scaling_check, solve_profile
from .model import Nonlinearity, power_model
from .morse import (
    classify_records,
    hessian_spectrum,
    morse_count_check,
    ray_second_derivative,
)
from .nehari import gaussian_bump_seed, ground_state, level_c, limit_level_estimate
from .persist import dump_field, read_results_json, record_summary, write_csv, write_results_json
from .spectral import SpectralBasis, assemble_and_decompose
from .topology import (
    annulus_level,
    band_saddle,
    barycenter,
    multiplicity_search,
    orbit_classes,
    symmetry_group,
)

log = logging.getLogger(__name__)


def _nonlinearity(cfg: RunConfig) -> Nonlinearity:
    p, theta, q = cfg.model_pqtheta
    return power_model(alpha=cfg.alpha, p=p, theta=theta, q=q)


def _basis(cfg: RunConfig, lam: float | None = None, full_span: bool = False) -> SpectralBasis:
    dom = build_domain(cfg.shape, cfg.params, lam=cfg.lam if lam is None else lam, h=cfg.h)
    K = cfg.K
    if K is None and full_span:
        K = dom.n_interior
    return assemble_and_decompose(dom, K=K, alpha=cfg.alpha)


def run_solve(cfg: RunConfig, out_dir: str | Path, workers: int = 1) -> dict:
    nl = _nonlinearity(cfg)
    basis = _basis(cfg)
    report = level_c(basis, nl, n_multistarts=cfg.n_starts, tol=cfg.tol,
                     max_iter=cfg.max_iter, rng_seed=cfg.rng_seed, workers=workers)
    pairs = classify_records(basis, nl, report.records, workers=workers)
    records = [rec for rec, _ in pairs]
    spectra = [rep for _, rep in pairs]
    best = records[0]
    results = {
        "level": report.value,
        "spread": report.spread,
        "n_converged": report.n_converged,
        "n_requested": report.n_requested,
        "best": record_summary(best),
        "records": [record_summary(r) for r in records],
        "null_counts": [rep.null_count for rep in spectra],
    }
    write_results_json(out_dir, "solve", cfg.config_hash, cfg.canonical, results)
    rows = [
        [cfg.lam, r.energy, r.residual, r.iterations,
         r.barycenter[0], r.barycenter[1], r.morse_index]
        for r in records
    ]
    write_csv(out_dir, "solve", cfg.config_hash,
              ["lambda", "level", "residual", "iterations",
               "barycenter_x", "barycenter_y", "morse_index"], rows)
    if cfg.dump_fields:
        dump_field(out_dir, "solution", cfg.config_hash, best.u)
    return results


def run_sweep(cfg: RunConfig, out_dir: str | Path, workers: int = 1) -> dict:
    nl = _nonlinearity(cfg)
    limit = limit_level_estimate(nl, cfg.radii, cfg.h, alpha=cfg.alpha, tol=cfg.tol,
                                 rng_seed=cfg.rng_seed, workers=workers)
    rows = []
    json_rows = []
    threshold_lambda = None
    for lam in cfg.lambdas:
        t0 = time.perf_counter()
        try:
            row, jrow = _sweep_row(cfg, nl, lam, workers)
        except FracfieldError as exc:
            log.warning("sweep row lambda=%s failed: %s", lam, exc)
            row = [lam, None, None, None, 0, None, 0]
            jrow = {"lambda": lam, "error": f"{type(exc).__name__}: {exc}"}
        runtime = time.perf_counter() - t0
        rows.append(row + [round(runtime, 3)])
        json_rows.append(jrow)
        if jrow.get("localized") and threshold_lambda is None:
            threshold_lambda = lam
        elif not jrow.get("localized"):
            threshold_lambda = None
    results = {
        "limit_level": {"value": limit.value, "error_bar": limit.error_bar,
                        "radii": list(limit.radii), "levels": list(limit.levels)},
        "rows": json_rows,
        "localization_threshold_lambda": threshold_lambda,
    }
    write_results_json(out_dir, "sweep", cfg.config_hash, cfg.canonical, results)
    write_csv(out_dir, "sweep", cfg.config_hash,
              ["lambda", "c_level", "ball_level", "annulus_level", "solution_count",
               "min_barycenter_margin", "localized", "runtime_s"], rows)
    return results


def _annulus_seeding(cfg: RunConfig, lam: float) -> tuple[list[tuple[float, float]], float]:
    """Eight mid-circle seed centers plus the comparison ball radius.

    The radius must satisfy two geometric constraints at once: the ball has to
    fit inside the ring (radius < half-width), and the tube of that radius
    around the ring must not swallow the hole (radius < inner radius), or the
    enlarged set loses the annulus topology and the barycenter localization
    statement goes vacuous. 0.9 keeps both strict under grid rounding.
    """
    R, r = cfg.params["R"], cfg.params["r"]
    mid = 0.5 * (R + r) * lam
    seed_radius = 0.9 * lam * min(0.5 * (R - r), r)
    centers = [(mid * np.cos(k * np.pi / 4), mid * np.sin(k * np.pi / 4))
               for k in range(8)]
    return centers, seed_radius


def _sweep_row(cfg: RunConfig, nl: Nonlinearity, lam: float, workers: int):
    basis = _basis(cfg, lam=lam, full_span=True)
    report = level_c(basis, nl, n_multistarts=cfg.n_starts, tol=cfg.tol,
                     max_iter=cfg.max_iter, rng_seed=cfg.rng_seed, workers=workers)
    records = list(report.records)
    n_solutions = report.n_converged
    is_annulus = cfg.shape == "annulus"
    ball_level = None
    a_level = None
    margin = None
    localized = False
    if is_annulus:
        a_level = annulus_level(basis, nl, tol=cfg.tol, max_iter=cfg.max_iter).value
        # random starts pin to grid-commensurate local minima at coarse h, so
        # the level estimate also seeds states on the mid circle and keeps the
        # best of both batches
        centers, seed_radius = _annulus_seeding(cfg, lam)
        try:
            mrep = multiplicity_search(basis, nl, centers, ball_radius=seed_radius,
                                       tol=cfg.tol, max_iter=cfg.max_iter)
            ball_level = mrep.ball_level
            records += [cl.representative for cl in mrep.classes]
            n_solutions += mrep.n_converged
        except EmptyMask:
            # comparison ball under-resolved at this h: no level to gate on,
            # but plain bumps at the same centers still steer descent into the
            # one-bump branch
            for i, center in enumerate(centers):
                seed = gaussian_bump_seed(basis, center, seed_radius)
                rec = ground_state(basis, nl, seed, tol=cfg.tol,
                                   max_iter=cfg.max_iter, seed_tag=f"bump-{i}")
                if rec.converged:
                    records.append(rec)
                    n_solutions += 1
        if ball_level is not None:
            margins = []
            for rec in records:
                if rec.energy <= ball_level:
                    dist = float(basis.dom.region_distance(
                        np.asarray(rec.barycenter, float).reshape(1, 2))[0])
                    margins.append(seed_radius - dist)
            margin = min(margins) if margins else None
            # vacuously-true rows do not count: the flag marks rows where low
            # states exist and all of them sit inside the tube
            localized = bool(margins) and all(m >= 0 for m in margins)
    c_level = min(r.energy for r in records)
    row = [lam, c_level, ball_level, a_level, n_solutions, margin, localized]
    jrow = {
        "lambda": lam,
        "c_level": c_level,
        "ball_level": ball_level,
        "annulus_level": a_level,
        "solution_count": n_solutions,
        "min_barycenter_margin": margin,
        "localized": localized,
    }
    return row, jrow


def run_multiplicity(cfg: RunConfig, out_dir: str | Path, workers: int = 1) -> dict:
    nl = _nonlinearity(cfg)
    basis = _basis(cfg, full_span=True)
    centers, seed_radius = _annulus_seeding(cfg, basis.dom.lam)
    report = multiplicity_search(basis, nl, centers, ball_radius=seed_radius,
                                 tol=cfg.tol, max_iter=cfg.max_iter)

    reps = [cl.representative for cl in report.classes]
    pairs = classify_records(basis, nl, reps, workers=workers)

    saddle_info = None
    extra_records = []
    extra_spectra = []
    if len(report.classes) >= 2:
        lo = pairs[0][0]
        partner = _adjacent_orbit_image(basis, lo.u)
        if partner is not None:
            band_report = band_saddle(basis, nl, lo.u, partner, tol=max(cfg.tol, 1e-6))
            srec, sspec = classify_records(basis, nl, [band_report.saddle], workers=1)[0]
            saddle_info = {
                "record": record_summary(srec),
                "null_count": sspec.null_count,
                "nondegenerate": sspec.nondegenerate,
                "band_energies": list(band_report.energies),
                "sweeps": band_report.sweeps,
            }
            if band_report.converged:
                extra_records.append(srec)
                extra_spectra.append(sspec)

    census_records = [rec for rec, _ in pairs] + extra_records
    census_spectra = [spec for _, spec in pairs] + extra_spectra
    census = morse_count_check(census_records, cfg.shape, spectra=census_spectra)

    classes_json = []
    rows = []
    for k, ((rec, spec), cl) in enumerate(zip(pairs, report.classes)):
        classes_json.append({
            "record": record_summary(rec),
            "orbit_size": cl.orbit_size,
            "below_ball_level": cl.below_ball_level,
            "beta_in_plus": cl.beta_in_plus,
            "null_count": spec.null_count,
            "nondegenerate": spec.nondegenerate,
        })
        rows.append([k, rec.energy, rec.barycenter[0], rec.barycenter[1],
                     rec.morse_index, cl.orbit_size, cl.below_ball_level])
    results = {
        "n_classes": report.n_classes,
        "n_seeds": report.n_seeds,
        "n_converged": report.n_converged,
        "ball_radius": report.ball_radius,
        "ball_level": report.ball_level,
        "classes": classes_json,
        "band_saddle": saddle_info,
        "census": {
            "target_total": census.target_total,
            "target_index1": census.target_index1,
            "target_index2": census.target_index2,
            "found_index1": census.found_index1,
            "found_index2": census.found_index2,
            "counted": census.counted,
            "degenerate_tags": list(census.degenerate_tags),
            "matches": census.matches,
        },
    }
    write_results_json(out_dir, "multiplicity", cfg.config_hash, cfg.canonical, results)
    write_csv(out_dir, "multiplicity", cfg.config_hash,
              ["id", "energy", "bary_x", "bary_y", "morse_index", "orbit_size",
               "below_ball_level"], rows)
    if cfg.dump_fields:
        for k, (rec, _) in enumerate(pairs):
            dump_field(out_dir, f"class-{k}", cfg.config_hash, rec.u)
    return results


def _adjacent_orbit_image(basis: SpectralBasis, lo) -> object | None:
    """Symmetry image of lo whose barycenter flips in x and keeps y: the
    nearest distinct orbit neighbor to pull an elastic band toward."""
    ref = barycenter(lo).point
    for perm in symmetry_group(basis.dom)[1:]:
        cand = lo.values[perm]
        b = barycenter(basis.analyze(cand)).point
        if b[0] * ref[0] < 0 and b[1] * ref[1] > 0:
            return basis.analyze(cand)
    return None


def run_verify_extension(cfg: RunConfig, out_dir: str | Path, workers: int = 1) -> dict:
    alphas = (0.25, 0.5, 0.75)
    mus = (1.0, 4.0)
    rows = []
    json_rows = []
    for alpha, mu, got, want, rel in scaling_check(alphas, mus):
        passed = abs(rel) < 1e-5
        rows.append([alpha, mu, f"{got / want:.4f}", passed, abs(rel)])
        json_rows.append({"alpha": alpha, "mu": mu, "computed": got,
                          "expected": want, "rel_err": rel, "passed": passed})
    profile = solve_profile(0.5)
    s = np.linspace(0.0, 10.0, 2001)
    sup_err = float(np.max(np.abs(profile.psi(s) - np.exp(-s))))
    flux_err = abs(profile.flux_limit() - k_alpha(0.5)) / k_alpha(0.5)
    results = {
        "rows": json_rows,
        "psi_sup_error_alpha_half": sup_err,
        "flux_limit_rel_error_alpha_half": flux_err,
        "all_passed": bool(all(r["passed"] for r in json_rows)
                           and sup_err <= 1e-8 and flux_err <= 1e-6),
    }
    write_results_json(out_dir, "verify-extension", cfg.config_hash, cfg.canonical, results)
    write_csv(out_dir, "verify-extension", cfg.config_hash,
              ["alpha", "mu", "ratio", "passed", "abs_rel_err"], rows)
    if not results["all_passed"]:
        raise TaskFailed("extension identity checks failed; see verify-extension.json")
    return results


def run_morse(cfg: RunConfig, out_dir: str | Path, workers: int = 1) -> dict:
    nl = _nonlinearity(cfg)
    basis = _basis(cfg)
    report = level_c(basis, nl, n_multistarts=cfg.n_starts, tol=cfg.tol,
                     max_iter=cfg.max_iter, rng_seed=cfg.rng_seed, workers=workers)
    # multistarts rediscover the same critical point; the census must count
    # distinct orbit classes, so only class representatives enter it
    classes = sorted(orbit_classes(basis, list(report.records)),
                     key=lambda cl: min((r.energy, r.seed_tag) for r in cl))
    reps = [min(cl, key=lambda r: (r.energy, r.seed_tag)) for cl in classes]
    pairs = classify_records(basis, nl, reps, workers=workers)
    rows = []
    recs_json = []
    for (rec, spec), cl in zip(pairs, classes):
        rsd = ray_second_derivative(basis, nl, rec.u, tol=1e-6)
        rows.append([cfg.lam, rec.energy, rec.residual, rec.iterations,
                     rec.barycenter[0], rec.barycenter[1],
                     rec.morse_index, spec.null_count])
        recs_json.append({
            **record_summary(rec),
            "class_size": len(cl),
            "null_count": spec.null_count,
            "nondegenerate": spec.nondegenerate,
            "ray_second_derivative": rsd,
            "smallest_eigenvalues": [float(v) for v in spec.eigenvalues[:6]],
        })
    census = morse_count_check([rec for rec, _ in pairs], cfg.shape,
                               spectra=[spec for _, spec in pairs])
    results = {
        "records": recs_json,
        "census": {
            "target_total": census.target_total,
            "found_index1": census.found_index1,
            "found_index2": census.found_index2,
            "counted": census.counted,
            "matches": census.matches,
        },
    }
    write_results_json(out_dir, "morse", cfg.config_hash, cfg.canonical, results)
    write_csv(out_dir, "morse", cfg.config_hash,
              ["lambda", "level", "residual", "iterations", "barycenter_x",
               "barycenter_y", "morse_index", "null_count"], rows)
    return results


def run_report(cfg: RunConfig, out_dir: str | Path, workers: int = 1) -> dict:
    """Aggregate any task outputs already present in out_dir into one index."""
    out = Path(out_dir)
    found = {}
    for name in ("solve", "sweep", "multiplicity", "verify-extension", "morse"):
        path = out / f"{name}.json"
        if path.exists():
            found[name] = read_results_json(path)
    if not found:
        raise TaskFailed(f"nothing to report: no task outputs found in {out}")
    lines = ["# Run report", ""]
    summary = {}
    if "solve" in found:
        r = found["solve"]["results"]
        summary["solve"] = {"level": r["level"], "converged": r["best"]["converged"]}
        lines.append(f"- solve: level {r['level']:.9g}, best converged: {r['best']['converged']}")
    if "sweep" in found:
        r = found["sweep"]["results"]
        summary["sweep"] = {"limit_level": r["limit_level"]["value"],
                            "rows": len(r["rows"])}
        lines.append(f"- sweep: {len(r['rows'])} rows, limit level "
                     f"{r['limit_level']['value']:.9g}")
    if "multiplicity" in found:
        r = found["multiplicity"]["results"]
        summary["multiplicity"] = {"n_classes": r["n_classes"],
                                   "census_matches": r["census"]["matches"]}
        lines.append(f"- multiplicity: {r['n_classes']} classes, census matches: "
                     f"{r['census']['matches']}")
    if "verify-extension" in found:
        r = found["verify-extension"]["results"]
        summary["verify_extension"] = {"all_passed": r["all_passed"]}
        lines.append(f"- verify-extension: all passed: {r['all_passed']}")
    if "morse" in found:
        r = found["morse"]["results"]
        summary["morse"] = {"counted": r["census"]["counted"],
                            "matches": r["census"]["matches"]}
        lines.append(f"- morse: {r['census']['counted']} counted, matches: "
                     f"{r['census']['matches']}")
    results = {"tasks": sorted(found), "summary": summary}
    write_results_json(out_dir, "report", cfg.config_hash, cfg.canonical, results)
    (out / "report.md").write_text("\n".join(lines) + "\n")
    return results


TASK_RUNNERS = {
    "solve": run_solve,
    "sweep-lambda": run_sweep,
    "multiplicity": run_multiplicity,
    "verify-extension": run_verify_extension,
    "morse": run_morse,
    "report": run_report,
}


def run(cfg: RunConfig, out_dir: str | Path, workers: int = 1) -> dict:
    """Dispatch the configured task; FracfieldError escapes become TaskFailed."""
    runner = TASK_RUNNERS[cfg.task]
    try:
        return runner(cfg, out_dir, workers=workers)
    except TaskFailed:
        raise
    except FracfieldError as exc:
        raise TaskFailed(f"task {cfg.task} failed: {type(exc).__name__}: {exc}") from exc
