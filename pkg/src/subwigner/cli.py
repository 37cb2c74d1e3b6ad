"""Command line front end: ``theory``, ``simulate``, ``verify`` and ``report``.

Every command writes one JSON document plus CSV matrices into ``--out`` and a
``manifest.json`` recording the config hash, timestamps and tool version.
Exit codes: 0 success, 1 failed gate or oracle, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .config import ConfigBundle, ConfigError, config_hash, dump_config, load_config
from .montecarlo import THREADS_ENV, compare_with_theory, run_experiment
from .theory import covariance_matrix
from .verify import DEFAULT_MAX_DEGREE, run_suites

__all__ = ["RunManifest", "main", "cmd_theory", "cmd_simulate", "cmd_verify", "cmd_report", "write_matrix_csv",
           "read_matrix_csv"]


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    config_hash: str
    command: str
    master_seed: int | None
    started: str = field(default_factory=_now)
    finished: str | None = None
    tool_version: str = __version__
    outputs: list = field(default_factory=list)

    def write(self, out_dir):
        self.finished = _now()
        _write_json(os.path.join(out_dir, "manifest.json"), dict(self.__dict__))


def _num(v) -> str:
    return format(float(v), ".17g")


def write_matrix_csv(path, matrix, config_hash_value: str):
    """RFC-4180 CSV: header ``config_hash,row,c0..c{d-1}``, one row per matrix row."""
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["config_hash", "row"] + [f"c{j}" for j in range(m.shape[1])])
        for i, row in enumerate(m):
            w.writerow([config_hash_value, i] + [_num(v) for v in row])


def read_matrix_csv(path):
    """Inverse of :func:`write_matrix_csv`; returns ``(matrix, config_hash)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    body = rows[1:]
    hashes = {r[0] for r in body}
    return np.array([[float(v) for v in r[2:]] for r in body]), (hashes.pop() if len(hashes) == 1 else None)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _write_json(path, payload):
    # json writes floats with repr, the shortest string that round-trips exactly
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _prepare_out(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


def cmd_theory(bundle: ConfigBundle, out_dir: str) -> dict:
    """Theoretical covariance with its per-entry breakdown."""
    exp = bundle.experiment
    h = config_hash(bundle)
    manifest = RunManifest(h, "theory", exp.master_seed)
    cov, parts = covariance_matrix(exp.test_functions, exp.realization(), exp.law, K=exp.options.truncation_K,
                                   nodes=exp.options.quad_nodes, return_breakdown=True)
    _prepare_out(out_dir)
    doc = {
        "config_hash": h,
        "command": "theory",
        "d": exp.d,
        "labels": [f.label for f in exp.test_functions],
        "covariance": cov,
        "breakdown": [[b.as_dict() for b in row] for row in parts],
    }
    _write_json(os.path.join(out_dir, "theory.json"), doc)
    write_matrix_csv(os.path.join(out_dir, "theory_cov.csv"), cov, h)
    for key in ("gff_part", "sigma_part", "kappa4_part"):
        write_matrix_csv(os.path.join(out_dir, f"theory_{key}.csv"),
                         [[getattr(b, key) for b in row] for row in parts], h)
    manifest.outputs = ["theory.json", "theory_cov.csv", "theory_gff_part.csv", "theory_sigma_part.csv",
                        "theory_kappa4_part.csv"]
    with open(os.path.join(out_dir, "config.toml"), "w", encoding="utf-8") as fh:
        fh.write(dump_config(bundle))
    manifest.write(out_dir)
    return doc


def cmd_simulate(bundle: ConfigBundle, out_dir: str, threads: int | None = None) -> tuple[dict, bool]:
    """Monte Carlo run plus comparison; returns ``(comparison document, gate passed)``."""
    exp = bundle.experiment
    h = config_hash(bundle)
    manifest = RunManifest(h, "simulate", exp.master_seed)
    result = run_experiment(exp, threads)
    report = compare_with_theory(result, exp)
    gate = exp.options.z_gate
    passed = bool(np.all(np.abs(np.nan_to_num(report.z_scores)) <= gate))
    _prepare_out(out_dir)
    sim_doc = {
        "config_hash": h,
        "command": "simulate",
        "n": exp.n,
        "replicas": exp.replicas,
        "replicas_used": result.replicas_used,
        "failed_replicas": result.failed_replicas,
        "wall_time": result.wall_time,
        "sample_mean": result.sample_mean,
        "sample_cov": result.sample_cov,
        "cov_stderr": result.cov_stderr,
    }
    cmp_doc = {"config_hash": h, "command": "simulate", "z_gate": gate, "gate_passed": passed,
               "labels": [f.label for f in exp.test_functions], "n": exp.n, "replicas": exp.replicas}
    cmp_doc.update(report.to_dict())
    _write_json(os.path.join(out_dir, "simulation.json"), sim_doc)
    _write_json(os.path.join(out_dir, "comparison.json"), cmp_doc)
    csvs = {"sample_cov.csv": result.sample_cov, "cov_stderr.csv": result.cov_stderr,
            "theory_cov.csv": report.theory, "z_scores.csv": report.z_scores, "samples.csv": result.samples}
    for name, mat in csvs.items():
        write_matrix_csv(os.path.join(out_dir, name), mat, h)
    with open(os.path.join(out_dir, "config.toml"), "w", encoding="utf-8") as fh:
        fh.write(dump_config(bundle))
    manifest.outputs = ["simulation.json", "comparison.json", "config.toml"] + list(csvs)
    manifest.write(out_dir)
    return cmp_doc, passed


def cmd_verify(max_degree: int = DEFAULT_MAX_DEGREE, out_dir: str | None = None, mutant: bool = False):
    """Run the oracle suites; returns ``(results, all passed)``."""
    results = run_suites(max_degree, mutant)
    ok = all(r.passed for r in results)
    if out_dir:
        _prepare_out(out_dir)
        tag = f"verify-max-degree-{max_degree}" + ("-mutant" if mutant else "")
        manifest = RunManifest(tag, "verify", None)
        _write_json(os.path.join(out_dir, "verify.json"), {
            "config_hash": tag, "command": "verify", "max_degree": max_degree, "mutant": mutant,
            "all_passed": ok, "suites": [r.as_dict() for r in results]})
        manifest.outputs = ["verify.json"]
        manifest.write(out_dir)
    return results, ok


def _fmt_matrix(m, width=12):
    return "\n".join("  " + " ".join(f"{v:>{width}.6g}" for v in row) for row in np.asarray(m, dtype=float))


def cmd_report(in_dir: str) -> str:
    """Human-readable summary of whatever results ``in_dir`` holds."""
    lines = []
    cmp_path = os.path.join(in_dir, "comparison.json")
    th_path = os.path.join(in_dir, "theory.json")
    ver_path = os.path.join(in_dir, "verify.json")
    if os.path.exists(cmp_path):
        with open(cmp_path, encoding="utf-8") as fh:
            doc = json.load(fh)
        nan = float("nan")
        z = np.array([[nan if v is None else v for v in row] for row in doc["z_scores"]])
        lines += [f"comparison  config {doc['config_hash']}  n={doc['n']}  R={doc['replicas']}",
                  f"labels: {', '.join(doc['labels'])}",
                  "theory covariance:", _fmt_matrix(doc["theory"]),
                  "simulated covariance:", _fmt_matrix(doc["simulated"]),
                  "standard errors:", _fmt_matrix(doc["stderr"]),
                  "z-scores:", _fmt_matrix(z, 8),
                  f"max |z| = {doc['max_abs_z']:.3f}  mean |z| = {doc['mean_abs_z']:.3f}  "
                  f"gate {doc['z_gate']}: {'PASS' if doc['gate_passed'] else 'FAIL'}"]
        nm = doc["normality"]
        if not nm.get("degenerate"):
            lines.append(f"normality of alpha = {nm['alpha']}: skewness {nm['skewness']:.4f}, excess kurtosis "
                         f"{nm['excess_kurtosis']:.4f}, KS {nm['ks_statistic']:.4f} "
                         f"(1% critical {nm['ks_critical_1pct']:.4f})")
    elif os.path.exists(th_path):
        with open(th_path, encoding="utf-8") as fh:
            doc = json.load(fh)
        lines += [f"theory  config {doc['config_hash']}", f"labels: {', '.join(doc['labels'])}",
                  "covariance:", _fmt_matrix(doc["covariance"])]
        for key in ("gff_part", "sigma_part", "kappa4_part"):
            lines += [f"{key}:", _fmt_matrix([[b[key] for b in row] for row in doc["breakdown"]])]
    elif os.path.exists(ver_path):
        with open(ver_path, encoding="utf-8") as fh:
            doc = json.load(fh)
        for s in doc["suites"]:
            lines.append(f"{'PASS' if s['passed'] else 'FAIL'}  {s['name']}  ({s['checks']} checks, worst "
                         f"{s['worst_residual']:.3g}) {s['detail']}")
    else:
        raise FileNotFoundError(f"no comparison.json, theory.json or verify.json in {in_dir}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="subwigner", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    t = sub.add_parser("theory", help="limiting covariance matrix of a configuration")
    t.add_argument("--config", required=True)
    t.add_argument("--out", required=True)
    s = sub.add_parser("simulate", help="Monte Carlo run compared with theory")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--threads", type=int, default=None, help=f"worker threads (default ${THREADS_ENV} or CPUs)")
    s.add_argument("--seed", type=int, default=None, help="override [run].master_seed")
    v = sub.add_parser("verify", help="run the exact and dual-path oracle suites")
    v.add_argument("--max-degree", type=int, default=DEFAULT_MAX_DEGREE)
    v.add_argument("--out", default=None)
    v.add_argument("--inject-mutant", action="store_true", help="sign-flip self-test; must fail")
    r = sub.add_parser("report", help="pretty-print results from an output directory")
    r.add_argument("--in", dest="in_dir", required=True)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("theory", "simulate"):
            bundle = load_config(args.config)
            if args.command == "theory":
                cmd_theory(bundle, args.out)
                print(cmd_report(args.out))
                return 0
            if args.seed is not None:
                bundle = ConfigBundle(replace(bundle.experiment, master_seed=args.seed), bundle.functions)
            _, passed = cmd_simulate(bundle, args.out, args.threads)
            print(cmd_report(args.out))
            return 0 if passed else 1
        if args.command == "verify":
            results, ok = cmd_verify(args.max_degree, args.out, args.inject_mutant)
            for r in results:
                print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}  ({r.checks} checks, worst "
                      f"{r.worst_residual:.3g}, tol {r.tolerance:.3g}) {r.detail}")
            if not ok:
                print("verify: ORACLE MISMATCH", file=sys.stderr)
            return 0 if ok else 1
        print(cmd_report(args.in_dir))
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
