"""Experiment orchestration: constants, verification suites, solver runs,
slope fits, and report emission.

Every command takes an :class:`~blowup.config.ExperimentConfig`, writes its
artifacts into the configured output directory, and returns a (record, exit
code) pair.  Exit codes: 0 validated, 1 validation discrepancy, 2
inadmissible configuration, 3 solver failure.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import time
from typing import Optional

import numpy as np

from .config import ExperimentConfig, InadmissibleConfig
from .expansion import (BoundaryExpansion, default_eta, expansion_constants,
                        functional_limit_suite, proof_functionals)
from .karamata import kernel_limits
from .solver import (ProblemSpec, default_window, fit_boundary_slope,
                     graded_mesh, solve_large)
from .transform import (HTransform, Primitive, ScaledTail, verify_lemma2,
                        verify_lemma3)

__all__ = [
    "EXIT_VALIDATED",
    "EXIT_DISCREPANCY",
    "EXIT_INADMISSIBLE",
    "EXIT_SOLVER_FAILURE",
    "spec_hash",
    "build_pipeline",
    "cmd_constants",
    "cmd_verify",
    "cmd_solve",
    "cmd_validate",
]

EXIT_VALIDATED = 0
EXIT_DISCREPANCY = 1
EXIT_INADMISSIBLE = 2
EXIT_SOLVER_FAILURE = 3


def spec_hash(config: ExperimentConfig) -> str:
    """Stable digest of the problem block, for tagging solution dumps."""
    doc = config.raw.get("problem", {})
    return hashlib.sha256(
        json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


def _outdir(config: ExperimentConfig, out_dir: Optional[str]) -> str:
    path = out_dir or config.out_dir
    os.makedirs(path, exist_ok=True)
    return path


def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_csv(path: str, rows, header_comments=()) -> None:
    if not rows:
        raise ValueError(f"refusing to write empty table {path}")
    with open(path, "w", newline="") as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {k: repr(float(v)) if isinstance(v, (float, np.floating))
                 else v for k, v in row.items()})


def build_pipeline(config: ExperimentConfig) -> dict:
    """Shared assembly: kernel limits, expansion constants, transform, and
    the two-term profile for the configured problem."""
    kernel = config.kernel
    ell1, L1 = kernel.ell1, kernel.L1
    if ell1 is None or L1 is None:
        est = kernel_limits(kernel)
        ell1 = est.ell1 if ell1 is None else ell1
        L1 = est.L1 if L1 is None else L1
    constants = expansion_constants(
        p=config.p, sigma=config.nonlinearity.sigma, ell1=ell1, L1=L1,
        A=config.A, N=config.geometry.dimension)
    ht = HTransform(ScaledTail(Primitive(config.nonlinearity, config.p)))
    be = BoundaryExpansion(constants=constants, ht=ht, kernel=kernel)
    return {"constants": constants, "ht": ht, "be": be,
            "ell1": ell1, "L1": L1}


def cmd_constants(config: ExperimentConfig, out_dir: Optional[str] = None,
                  quiet: bool = False) -> tuple:
    """Compute and serialize the expansion constants."""
    try:
        config.require_admissible()
    except InadmissibleConfig as err:
        if not quiet:
            print(err)
        return {"error": str(err)}, EXIT_INADMISSIBLE
    try:
        pipe = build_pipeline(config)
    except ValueError as err:
        if not quiet:
            print(err)
        return {"error": str(err)}, EXIT_INADMISSIBLE
    c = pipe["constants"]
    record = {"operation": "expansion.expansion_constants", **c.to_dict()}
    path = os.path.join(_outdir(config, out_dir), "constants.json")
    _write_json(path, record)
    if not quiet:
        print(f"xi0 = {c.xi0!r}")
        print(f"C1  = {c.C1!r}")
        print(f"C2  = {c.C2!r}")
        print(f"ell1 = {c.ell1!r}, L1 = {c.L1!r}")
        print(f"wrote {path}")
    return record, EXIT_VALIDATED


def _suite_rows(report) -> list:
    rows = []
    for label, rep in report.parts.items():
        for t, v in zip(rep.grid, rep.values):
            rows.append({"part": label, "t": float(t), "value": float(v),
                         "claimed": rep.claimed,
                         "extrapolated": rep.extrapolated,
                         "passed": rep.passed})
    return rows


def cmd_verify(config: ExperimentConfig, which: str,
               out_dir: Optional[str] = None, quiet: bool = False) -> tuple:
    """Run one verification suite (lemma2, lemma3, or functionals) and emit
    the evidence table plus per-part verdicts."""
    if which not in ("lemma2", "lemma3", "functionals"):
        raise ValueError(f"unknown suite {which!r}")
    try:
        config.require_admissible()
    except InadmissibleConfig as err:
        if not quiet:
            print(err)
        return {"error": str(err)}, EXIT_INADMISSIBLE
    pipe = build_pipeline(config)
    out = _outdir(config, out_dir)
    parts_record = {}
    rows = []
    failures = []

    if which == "lemma2":
        operation = "transform.verify_lemma2"
        tail = ScaledTail(Primitive(config.nonlinearity, config.p))
        for part in ("i", "ii", "iii"):
            try:
                rep = verify_lemma2(config.nonlinearity, config.p, part,
                                    tail=tail)
                parts_record.update({k: v.to_dict()
                                     for k, v in rep.parts.items()})
                rows.extend(_suite_rows(rep))
            except Exception as err:  # keep the suite going per part
                parts_record[part] = {"error": str(err), "passed": False}
                failures.append(part)
        csv_name = "lemma2.csv"
    elif which == "lemma3":
        operation = "transform.verify_lemma3"
        for part in ("i", "ii", "iii", "iv", "v"):
            try:
                rep = verify_lemma3(pipe["ht"], config.kernel,
                                    pipe["constants"].xi0, part)
                parts_record.update({k: v.to_dict()
                                     for k, v in rep.parts.items()})
                rows.extend(_suite_rows(rep))
            except Exception as err:
                parts_record[part] = {"error": str(err), "passed": False}
                failures.append(part)
        csv_name = "lemma3.csv"
    else:
        operation = "expansion.functional_limit_suite"
        rep = functional_limit_suite(pipe["be"], config.eps,
                                     geometry=config.geometry,
                                     eta=config.eta)
        parts_record.update({k: v.to_dict() for k, v in rep.parts.items()})
        eta = config.eta if config.eta is not None else default_eta(config.p)
        H = config.geometry.curvature
        for sign in (1, -1):
            for r in np.geomspace(1e-2, 1e-5, 13):
                sf = proof_functionals(pipe["be"], float(r), H, config.eps,
                                       lam=config.lam, sign=sign, eta=eta,
                                       geometry=config.geometry)
                rows.append(sf.to_row())
        csv_name = "functionals.csv"

    all_passed = all(p.get("passed", False) for p in parts_record.values())
    record = {
        "operation": operation,
        "suite": which,
        "passed": all_passed,
        "parts": parts_record,
        "part_errors": failures,
    }
    _write_csv(os.path.join(out, csv_name), rows,
               header_comments=[f"suite={which}", f"spec={spec_hash(config)}"])
    _write_json(os.path.join(out, f"{which}.json"), record)
    if not quiet:
        for label, part in parts_record.items():
            verdict = "PASS" if part.get("passed") else "FAIL"
            print(f"{which}[{label}]: {verdict}")
    return record, EXIT_VALIDATED if all_passed else EXIT_DISCREPANCY


def _initial_level(config: ExperimentConfig, be: BoundaryExpansion,
                   window: tuple) -> float:
    """Continuation starts at the expansion value at the outer window edge,
    so the first truncated solve is already in the asymptotic regime."""
    try:
        return max(float(be.value(window[1], config.geometry.curvature)), 2.0)
    except (ValueError, OverflowError):
        return 10.0


def _run_solver(config: ExperimentConfig, be: BoundaryExpansion,
                window: tuple):
    spec = ProblemSpec(p=config.p, geometry=config.geometry,
                       potential=config.potential,
                       nonlinearity=config.nonlinearity)
    return solve_large(spec, window, tol=config.tol,
                       M0=_initial_level(config, be, window),
                       mesh_params=config.mesh,
                       max_levels=config.max_levels)


def cmd_solve(config: ExperimentConfig, out_dir: Optional[str] = None,
              quiet: bool = False) -> tuple:
    """Continuation solve; dumps the solution mesh as CSV."""
    try:
        config.require_admissible()
    except InadmissibleConfig as err:
        if not quiet:
            print(err)
        return {"error": str(err)}, EXIT_INADMISSIBLE
    pipe = build_pipeline(config)
    window = config.window or default_window(config.mesh, config.geometry)
    try:
        sol, info = _run_solver(config, pipe["be"], window)
    except RuntimeError as err:
        if not quiet:
            print(f"solver failure: {err}")
        return {"error": str(err)}, EXIT_SOLVER_FAILURE
    out = _outdir(config, out_dir)
    rows = [{"r": float(r), "d": float(d), "u": float(u), "flux": float(q)}
            for r, d, u, q in zip(sol.r, sol.d, sol.u, sol.flux)]
    path = os.path.join(out, "solution.csv")
    _write_csv(path, rows, header_comments=[
        f"spec={spec_hash(config)}",
        f"M={sol.boundary_value!r}",
        f"finest_rel={info.final_finest_rel!r} grading={config.mesh.grading!r}",
        f"residual_norm={sol.residual_norm!r}",
    ])
    record = {
        "operation": "solver.solve_large",
        "M": sol.boundary_value,
        "residual_norm": sol.residual_norm,
        "continuation": info.to_dict(),
        "window": list(window),
        "solution_file": path,
    }
    if not quiet:
        print(f"solved to M={sol.boundary_value:.3e} "
              f"({len(info.levels)} levels); wrote {path}")
    return record, EXIT_VALIDATED


def cmd_validate(config: ExperimentConfig, out_dir: Optional[str] = None,
                 quiet: bool = False) -> tuple:
    """Full pipeline: constants, continuation solve, boundary slope fit, and
    the report with the relative discrepancy against C1 + C2*H."""
    out = _outdir(config, out_dir)
    report = {"operation": "harness.cmd_validate",
              "spec_hash": spec_hash(config),
              "config": config.raw}
    try:
        config.require_admissible()
    except InadmissibleConfig as err:
        report["error"] = str(err)
        report["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        _write_json(os.path.join(out, "report.json"), report)
        if not quiet:
            print(err)
        return report, EXIT_INADMISSIBLE
    pipe = build_pipeline(config)
    c = pipe["constants"]
    report["constants"] = {"operation": "expansion.expansion_constants",
                           **c.to_dict()}
    window = config.window or default_window(config.mesh, config.geometry)
    try:
        sol, info = _run_solver(config, pipe["be"], window)
    except RuntimeError as err:
        report["error"] = f"solver failure: {err}"
        report["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        _write_json(os.path.join(out, "report.json"), report)
        if not quiet:
            print(report["error"])
        return report, EXIT_SOLVER_FAILURE
    report["solver"] = {"operation": "solver.solve_large",
                        "M": sol.boundary_value,
                        "residual_norm": sol.residual_norm,
                        "continuation": info.to_dict(),
                        "window": list(window)}

    H = config.geometry.curvature
    prediction = c.C1 + c.C2 * H
    fit = fit_boundary_slope(sol, pipe["be"], window)
    discrepancy = abs(fit.slope - prediction) / max(abs(prediction), 0.1)
    report["fit"] = {"operation": "solver.fit_boundary_slope",
                     **fit.to_dict()}
    report["prediction"] = prediction
    report["discrepancy"] = discrepancy
    report["threshold"] = config.slope_tol

    # window sensitivity: shrink the upper end and watch the discrepancy
    sensitivity = []
    for shrink in (1.0, 0.5, 0.25):
        w = (window[0], window[1] * shrink)
        try:
            f_w = fit_boundary_slope(sol, pipe["be"], w)
            sensitivity.append({
                "window": list(w), "slope": f_w.slope,
                "discrepancy": abs(f_w.slope - prediction)
                / max(abs(prediction), 0.1)})
        except ValueError as err:
            sensitivity.append({"window": list(w), "error": str(err)})
    report["window_sensitivity"] = sensitivity

    d_win, u_win = sol.window_values(window)
    lead = np.array([pipe["be"].leading(float(x)) for x in d_win])
    report["first_order"] = {
        "operation": "expansion.BoundaryExpansion.leading",
        "max_abs_rel_dev": float(np.max(np.abs(u_win / lead - 1.0))),
    }

    validated = discrepancy < config.slope_tol
    report["validated"] = bool(validated)
    report["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    _write_json(os.path.join(out, "report.json"), report)
    if not quiet:
        print(f"slope {fit.slope:+.5f} vs prediction {prediction:+.5f} "
              f"(discrepancy {discrepancy:.3f}, threshold {config.slope_tol})")
        print("VALIDATED" if validated else "DISCREPANCY")
    return report, EXIT_VALIDATED if validated else EXIT_DISCREPANCY
