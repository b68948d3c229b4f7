"""Command line front end: analyze, compute, verify, export-dfm, export-geometry.

Exit codes: 0 success / all audits PASS, 1 some audit FAIL, 2 input or
algorithm error.  Thread count for distance scans defaults to the
FINBISIM_THREADS environment variable.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import sys as _sys
from dataclasses import dataclass, field

from . import __version__
from .artifact import dumps, geometry_dict, load_fub, save_fub
from .bisim import algorithm1, algorithm2
from .dfm import build_dfm, export_graph, transition_table
from .errors import (AlphabetTooSmall, BudgetExceeded, FinBisimError, NoSeparationWithinBudget,
                     NotInvertible, NotSchurStable, UnsupportedSpectrum)
from .linalg import letter_gain, reach_norm_bound
from .reachset import s1_disjointness_check
from .sysmodel import load_spec, validate_hypotheses, with_options
from .verify import necessary_condition_report, run_audits

log = logging.getLogger("finbisim")

HINTS = {
    NoSeparationWithinBudget: "raise --k-max, or check whether the forced-response set is connected",
    BudgetExceeded: "raise the 'budget' option or lower --k-max / --min-classes",
    UnsupportedSpectrum: "supply T in the spec file's 'transform' field",
    NotInvertible: "use --algorithm 1, which does not need an invertible A",
    NotSchurStable: "both algorithms need rho(A) < 1",
    AlphabetTooSmall: "the alphabet needs at least two letters",
}


@dataclass
class CommandOutcome:
    command: str
    spec_digest: str | None = None
    outputs: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    exit_code: int = 0

    def as_dict(self):
        return {"command": self.command, "tool_version": __version__,
                "spec_digest": self.spec_digest, "outputs": self.outputs,
                "verdicts": self.verdicts, "summary": self.summary,
                "exit_code": self.exit_code}


def cmd_analyze(spec_path) -> CommandOutcome:
    sys, cfg = load_spec(spec_path)
    hyp = validate_hypotheses(sys)
    out = CommandOutcome("analyze", sys.digest())
    summary = {"hypotheses": hyp.as_dict(), "h": letter_gain(sys)}
    if hyp.schur_stable:
        summary["reach_norm_bound"] = reach_norm_bound(sys)
        s1 = s1_disjointness_check(sys)
        summary["one_step_disjointness"] = {"verdict": s1.verdict, "threshold": s1.threshold,
                                            "min_margin": s1.min_margin}
        out.verdicts["one_step_disjointness"] = s1.verdict
    diag = necessary_condition_report(sys)
    summary["necessary_conditions"] = diag.as_dict()
    out.verdicts["necessary_conditions"] = "WARN" if diag.warnings else "PASS"
    out.summary = summary
    return out


def _gate(hyp, algorithm: int) -> list[str]:
    if not hyp.multi_letter:
        raise AlphabetTooSmall("the alphabet needs at least two letters")
    problems = []
    if not hyp.schur_stable:
        problems.append(f"rho(A) = {hyp.rho:g} is not < 1")
    if not hyp.zero_in_alphabet:
        problems.append("0 is not a letter of the alphabet")
    if algorithm == 2 and not hyp.A_invertible:
        problems.append("A is not invertible")
    return problems


def cmd_compute(spec_path, algorithm: int = 2, min_classes=None, epsilon=None, k_max=None,
                out_dir="out", force: bool = False) -> CommandOutcome:
    sys, cfg = load_spec(spec_path)
    cfg = with_options(cfg, z=min_classes, epsilon=epsilon, k_max=k_max)
    hyp = validate_hypotheses(sys)
    problems = _gate(hyp, algorithm)
    if problems and not force:
        raise FinBisimError("hypothesis gate failed: " + "; ".join(problems)
                            + " (rerun with --force to try anyway)")
    for p in problems:
        log.warning("gate overridden with --force: %s", p)
    fub = (algorithm1 if algorithm == 1 else algorithm2)(sys, cfg)
    dfm = build_dfm(fub)
    os.makedirs(out_dir, exist_ok=True)
    paths = {name: os.path.join(out_dir, name)
             for name in ("fub.json", "geometry.json", "dfm.dot", "dfm.tsv", "summary.json")}
    save_fub(fub, paths["fub.json"])
    with open(paths["geometry.json"], "w", encoding="utf-8") as fh:
        fh.write(dumps(geometry_dict(fub)))
    header = f"// tool {__version__} spec {sys.digest()}\n"
    with open(paths["dfm.dot"], "w", encoding="utf-8") as fh:
        fh.write(export_graph(dfm) + header)
    with open(paths["dfm.tsv"], "w", encoding="utf-8") as fh:
        fh.write(f"# tool {__version__} spec {sys.digest()}\n" + transition_table(dfm))
    out = CommandOutcome("compute", sys.digest(), outputs=list(paths.values()))
    out.summary = {
        "classes": len(fub),
        "provenance": fub.provenance.as_dict(),
        "certificate": fub.certificate(),
        "forced": bool(problems),
    }
    out.verdicts["certificate"] = "PASS" if fub.certificate()["d_ge_kappa_l"] else "FAIL"
    _write_summary(paths["summary.json"], out)
    return out


def cmd_verify(artifact_path, spec_path, samples=None, depth=None, seed=None,
               trace_words: int = 1000, trace_length: int = 100,
               report_path=None) -> CommandOutcome:
    sys, cfg = load_spec(spec_path)
    cfg = with_options(cfg, sample_count=samples, trajectory_depth=depth, seed=seed)
    fub = load_fub(artifact_path, expect_digest=sys.digest())
    reports = run_audits(sys, fub, cfg, trace_words=trace_words if cfg.sample_count else 0,
                         trace_length=trace_length)
    out = CommandOutcome("verify", sys.digest())
    out.verdicts = {r.property: r.verdict for r in reports}
    out.summary = {"audits": [r.as_dict() for r in reports],
                   "no_evidence": cfg.sample_count == 0}
    out.exit_code = 0 if all(r.passed for r in reports) else 1
    report_path = report_path or os.path.join(os.path.dirname(artifact_path) or ".",
                                              "verify_report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(dumps({"format": "finbisim-audit/1", "tool_version": __version__,
                        "spec_digest": sys.digest(), "seed": cfg.seed,
                        "audits": out.summary["audits"]}))
    out.outputs.append(report_path)
    return out


def _write_summary(path, outcome: CommandOutcome):
    d = outcome.as_dict()
    d["created"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(d))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="finbisim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="spectral data, hypotheses, and diagnostics")
    a.add_argument("spec")

    c = sub.add_parser("compute", help="run an algorithm and write the artifacts")
    c.add_argument("spec")
    c.add_argument("--algorithm", type=int, choices=(1, 2), default=2)
    c.add_argument("--min-classes", type=int, dest="min_classes")
    c.add_argument("--epsilon", type=float)
    c.add_argument("--k-max", type=int, dest="k_max")
    c.add_argument("--out", default="out")
    c.add_argument("--force", action="store_true", help="ignore failed hypotheses")

    v = sub.add_parser("verify", help="audit a computed artifact")
    v.add_argument("artifact")
    v.add_argument("spec")
    v.add_argument("--samples", type=int)
    v.add_argument("--depth", type=int)
    v.add_argument("--seed", type=int)
    v.add_argument("--trace-words", type=int, default=1000)
    v.add_argument("--trace-length", type=int, default=100)
    v.add_argument("--report")

    e = sub.add_parser("export-dfm", help="print the quotient machine")
    e.add_argument("artifact")
    e.add_argument("--format", choices=("dot", "tsv"), default="dot")

    g = sub.add_parser("export-geometry", help="print per-class cell geometry as JSON")
    g.add_argument("artifact")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "analyze":
            out = cmd_analyze(args.spec)
        elif args.command == "compute":
            out = cmd_compute(args.spec, args.algorithm, args.min_classes, args.epsilon,
                              args.k_max, args.out, args.force)
        elif args.command == "verify":
            out = cmd_verify(args.artifact, args.spec, args.samples, args.depth, args.seed,
                             args.trace_words, args.trace_length, args.report)
        elif args.command == "export-dfm":
            dfm = build_dfm(load_fub(args.artifact))
            _sys.stdout.write(export_graph(dfm) if args.format == "dot" else transition_table(dfm))
            return 0
        else:
            _sys.stdout.write(dumps(geometry_dict(load_fub(args.artifact))))
            return 0
    except FinBisimError as exc:
        hint = next((h for t, h in HINTS.items() if isinstance(exc, t)), None)
        print(f"error: {type(exc).__name__}: {exc}", file=_sys.stderr)
        if hint:
            print(f"hint: {hint}", file=_sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2
    print(json.dumps(out.as_dict(), indent=1, default=str))
    return out.exit_code
