"""Command-line front end.

Subcommands: ``nbody`` (base solutions only), ``restricted`` (critical
points around the base solutions of an existing document), ``continue``
(full three-step pipeline), ``direct`` (one multistart on the full
(n+1)-body system), ``compare``, ``plot`` and ``verify``.

Exit codes: 0 success, 1 configuration or input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .continuation import (
    ContinuationTree,
    PipelineError,
    RefinedSolution,
    build_tree,
    quotient_distinct,
    step2_restricted,
    step3_refine,
)
from .core import MassSystem, ScaleMatrix, lambda_of, restricted_gradient
from .document import DocumentError, SolutionDocument, SolutionEntry, parse, serialize
from .metrics import delta_q0, match_and_delta_R, verify
from .multistart import run as multistart_run
from .problems import direct_problem
from .runconfig import ConfigError, RunConfig, load_config
from .svgplot import render_svg

__all__ = ["main", "cli_main"]


def _error(message: str) -> None:
    prefix = "cbconfig: error:"
    if sys.stderr.isatty() and not os.environ.get("NO_COLOR"):
        prefix = f"\x1b[31m{prefix}\x1b[0m"
    print(f"{prefix} {message}", file=sys.stderr)


def _progress_printer(k: int, nsol: int, typical: float) -> None:
    print(f"{k}\t{nsol}\t{typical:.6g}", file=sys.stderr)


def _config_echo(cfg: RunConfig, command: str) -> dict:
    echo = cfg.echo()
    echo["command"] = command
    echo["version"] = __version__
    echo["timestamp"] = datetime.now(timezone.utc).isoformat()
    return echo


def _config_from_echo(config: dict) -> RunConfig:
    names = {f.name for f in RunConfig.__dataclass_fields__.values()}
    kwargs = {k: v for k, v in config.items() if k in names}
    try:
        return RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"document config is incomplete: {exc}") from exc


def _verification_dict(masses, S, coords) -> dict:
    report = verify(masses, S, coords)
    out = {
        "residual_inf": report.residual_inf,
        "com_norm": report.com_norm,
        "inertia_dev": report.inertia_dev,
        "lam": report.lam,
        "collision": report.collision,
    }
    if report.hessian is not None:
        out["hessian_rank"] = report.hessian.rank
        out["nondegenerate"] = report.hessian.nondegenerate
        out["smallest_singular_values"] = list(report.hessian.smallest_singular_values)
    return out


def _pairs(coords: np.ndarray) -> list[list[float]]:
    return [[float(x), float(y)] for x, y in np.asarray(coords, float).reshape(-1, 2)]


def _base_entries(cfg: RunConfig, records) -> list[SolutionEntry]:
    masses = cfg.mass_system()
    S = cfg.scale_matrix()
    return [
        SolutionEntry(
            kind="base",
            index=[k],
            coordinates=_pairs(rec.coords),
            residual_inf=rec.residual_inf,
            lam=rec.lam,
            verification=_verification_dict(masses, S, rec.coords),
        )
        for k, rec in enumerate(records)
    ]


def _refined_entries(cfg: RunConfig, tree: ContinuationTree) -> list[SolutionEntry]:
    masses = tree.masses
    S = tree.scale
    entries = []
    for sol in tree.refined_list():
        entries.append(
            SolutionEntry(
                kind="refined",
                index=[sol.base_index, sol.point_index],
                coordinates=_pairs(sol.coords),
                residual_inf=sol.residual_inf,
                lam=lambda_of(masses.with_small(), S, sol.coords),
                delta_q0=sol.delta_q0 if sol.converged else None,
                verification=_verification_dict(masses, S, sol.coords),
            )
        )
    return entries


def _write_document(doc: SolutionDocument, cfg: RunConfig | None, path: str | None, default: str):
    if path is None:
        out_dir = cfg.output_dir if cfg is not None else "."
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, default)
    with open(path, "wb") as fh:
        fh.write(serialize(doc))
    print(path)
    return 0


def _read_document(path: str) -> SolutionDocument:
    with open(path, "rb") as fh:
        return parse(fh.read())


def _load_run_config(args, command: str) -> RunConfig:
    overrides = {
        "seed": getattr(args, "seed", None),
        "epsilon": getattr(args, "epsilon", None),
        "delta": getattr(args, "delta", None),
        "mode": getattr(args, "mode", None),
        "threads": getattr(args, "threads", None),
    }
    if getattr(args, "deterministic", False):
        overrides["threads"] = 1
    cfg = load_config(args.config, **overrides)
    if cfg.threads == 0:
        cfg.threads = os.cpu_count() or 1
    return cfg


def _cmd_nbody(args) -> int:
    cfg = _load_run_config(args, "nbody")
    started = time.perf_counter()
    settings = cfg.multistart_settings("nbody")
    from .continuation import step1_nbody

    records, diag = step1_nbody(
        cfg.mass_system(),
        cfg.scale_matrix(),
        settings,
        threads=cfg.threads,
        progress=_progress_printer if args.progress else None,
    )
    doc = SolutionDocument(
        config=_config_echo(cfg, "nbody"),
        solutions=_base_entries(cfg, records),
        aggregates={
            "n_sol_base": len(records),
            "samples_seen": diag.samples_seen,
            "searches": diag.searches,
            "wall_clock_seconds": time.perf_counter() - started,
        },
    )
    return _write_document(doc, cfg, args.output, f"nbody_n{cfg.n}_{cfg.mode}.json")


def _cmd_restricted(args) -> int:
    doc = _read_document(args.input)
    cfg = _config_from_echo(doc.config)
    base_entries = doc.entries("base")
    if not base_entries:
        raise PipelineError("input document has no base solutions")
    masses = cfg.mass_system()
    S = cfg.scale_matrix()
    settings = cfg.continuation_settings()
    started = time.perf_counter()
    solutions = list(base_entries)
    counts = []
    for entry in base_entries:
        k = entry.index[0]
        coords = np.asarray(entry.coordinates, float).reshape(-1)
        points = step2_restricted(masses, S, coords, settings, base_index=k, threads=cfg.threads)
        counts.append(len(points))
        for l, p in enumerate(points):
            grad = restricted_gradient(masses, S, coords, p)
            solutions.append(
                SolutionEntry(
                    kind="restricted",
                    index=[k, l],
                    coordinates=[[float(p[0]), float(p[1])]],
                    residual_inf=float(np.max(np.abs(grad))),
                )
            )
    out = SolutionDocument(
        config=_config_echo(cfg, "restricted"),
        solutions=solutions,
        aggregates={
            "n_sol_base": len(base_entries),
            "restricted_counts": counts,
            "n_sol_total": int(sum(counts)),
            "wall_clock_seconds": time.perf_counter() - started,
        },
    )
    return _write_document(out, cfg, args.output, f"restricted_n{cfg.n}_{cfg.mode}.json")


def _cmd_continue(args) -> int:
    cfg = _load_run_config(args, "continue")
    started = time.perf_counter()
    settings = cfg.continuation_settings()
    tree = build_tree(
        cfg.mass_system(),
        cfg.scale_matrix(),
        settings,
        threads=cfg.threads,
        progress=_progress_printer if args.progress else None,
    )
    tree = step3_refine(tree, cfg.epsilon, delta=cfg.delta)
    failed = [s for s in tree.refined_list() if not s.converged]
    _, aggregate = delta_q0(tree)
    distinct = quotient_distinct(tree)
    doc = SolutionDocument(
        config=_config_echo(cfg, "continue"),
        solutions=_base_entries(cfg, tree.base_solutions) + _refined_entries(cfg, tree),
        aggregates={
            "n_sol_base": tree.n_sol_base,
            "restricted_counts": tree.restricted_counts,
            "n_sol_total": tree.n_sol_total,
            "n_sol_distinct": distinct,
            "n_failed_refinements": len(failed),
            "delta_q0": aggregate,
            "epsilon": cfg.epsilon,
            "wall_clock_seconds": time.perf_counter() - started,
        },
    )
    code = _write_document(doc, cfg, args.output, f"continue_n{cfg.n}_{cfg.mode}.json")
    if failed:
        _error(f"{len(failed)} refinement(s) failed to converge")
        return 2
    return code


def _cmd_direct(args) -> int:
    cfg = _load_run_config(args, "direct")
    if cfg.epsilon <= 0:
        raise ConfigError("direct method needs epsilon > 0")
    started = time.perf_counter()
    masses = cfg.mass_system(with_small=True)
    S = cfg.scale_matrix()
    problem = direct_problem(masses, S)
    settings = cfg.multistart_settings("direct")
    registry, diag = multistart_run(
        problem,
        settings,
        threads=cfg.threads,
        progress=_progress_printer if args.progress else None,
    )
    if not registry.records:
        _error("direct multistart found no solutions")
        return 2
    solutions = [
        SolutionEntry(
            kind="direct",
            index=[m_idx],
            coordinates=_pairs(rec.coords),
            residual_inf=rec.residual_inf,
            lam=rec.lam,
            verification=_verification_dict(masses, S, rec.coords),
        )
        for m_idx, rec in enumerate(registry.records)
    ]
    doc = SolutionDocument(
        config=_config_echo(cfg, "direct"),
        solutions=solutions,
        aggregates={
            "n_sol_direct": len(registry.records),
            "samples_seen": diag.samples_seen,
            "searches": diag.searches,
            "wall_clock_seconds": time.perf_counter() - started,
        },
    )
    return _write_document(doc, cfg, args.output, f"direct_n{cfg.n}_{cfg.mode}.json")


def _tree_from_document(doc: SolutionDocument) -> ContinuationTree:
    cfg = _config_from_echo(doc.config)
    masses = cfg.mass_system(with_small=True)
    base = doc.entries("base")
    refined = doc.entries("refined")
    if not refined:
        raise PipelineError("document has no refined solutions to compare against")
    groups: dict[int, list[RefinedSolution]] = {e.index[0]: [] for e in base}
    for entry in refined:
        k, l = entry.index
        coords = np.asarray(entry.coordinates, float).reshape(-1)
        groups.setdefault(k, []).append(
            RefinedSolution(
                base_index=k,
                point_index=l,
                initial=coords,
                coords=coords,
                converged=entry.delta_q0 is not None,
                objective=0.0,
                residual_inf=entry.residual_inf,
                delta_q0=entry.delta_q0 if entry.delta_q0 is not None else np.nan,
            )
        )
    from .multistart import SolutionRecord

    base_records = [
        SolutionRecord(
            coords=np.asarray(e.coordinates, float).reshape(-1),
            objective=0.0,
            residual_inf=e.residual_inf,
            lam=e.lam,
            signature=np.empty(0),
            sample_index=0,
            iterations=0,
        )
        for e in base
    ]
    restricted_points = [
        [np.asarray(s.coords[-2:], float) for s in groups.get(k, [])]
        for k in sorted(groups)
    ]
    return ContinuationTree(
        masses=masses,
        scale=cfg.scale_matrix(),
        epsilon=cfg.epsilon,
        base_solutions=base_records,
        restricted_points=restricted_points,
        refined=[groups[k] for k in sorted(groups)],
    )


def _cmd_compare(args) -> int:
    direct_doc = _read_document(args.a)
    cont_doc = _read_document(args.b)
    direct_entries = direct_doc.entries("direct")
    if not direct_entries:
        raise DocumentError("solutions", "--a document has no direct solutions")
    tree = _tree_from_document(cont_doc)
    coords = [np.asarray(e.coordinates, float).reshape(-1) for e in direct_entries]
    report = match_and_delta_R(coords, tree, pairs=args.pairs)
    print(f"delta_R = {report.delta_R:.6e}")
    print(f"delta_q0 = {report.delta_q0:.6e}")
    print(
        f"counts: direct {report.n_direct}, distinct {report.n_distinct}, "
        f"equal: {'yes' if report.counts_equal else 'no'}"
    )
    if args.output:
        for entry, match in zip(direct_entries, report.matches):
            entry.delta_R = match.delta_R
            entry.match_index = [match.base_index, match.point_index]
        direct_doc.aggregates["delta_R"] = report.delta_R
        direct_doc.aggregates["counts_equal"] = report.counts_equal
        with open(args.output, "wb") as fh:
            fh.write(serialize(direct_doc))
    return 0


def _cmd_plot(args) -> int:
    doc = _read_document(args.input)
    svg = render_svg(doc)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(svg)
    print(args.output)
    return 0


def _cmd_verify(args) -> int:
    doc = _read_document(args.input)
    cfg = _config_from_echo(doc.config)
    S = cfg.scale_matrix()
    failures = 0
    for entry in doc.solutions:
        coords = np.asarray(entry.coordinates, float).reshape(-1)
        if entry.kind == "restricted":
            k = entry.index[0]
            base = next(
                (e for e in doc.entries("base") if e.index[0] == k), None
            )
            if base is None:
                failures += 1
                print(f"restricted {entry.index}: FAIL (no base solution {k})")
                continue
            grad = restricted_gradient(
                cfg.mass_system(), S, np.asarray(base.coordinates, float), coords
            )
            ok = float(np.max(np.abs(grad))) < 1e-10
            print(f"restricted {entry.index}: residual {np.max(np.abs(grad)):.3e} "
                  f"{'ok' if ok else 'FAIL'}")
            failures += 0 if ok else 1
            continue
        masses = cfg.mass_system(with_small=entry.kind in ("refined", "direct"))
        report = verify(masses, S, coords)
        ok = report.passed()
        print(
            f"{entry.kind} {entry.index}: residual {report.residual_inf:.3e} "
            f"com {report.com_norm:.3e} inertia {report.inertia_dev:.3e} "
            f"{'ok' if ok else 'FAIL'}"
        )
        failures += 0 if ok else 1
    if failures:
        _error(f"{failures} solution(s) failed verification")
        return 2
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cbconfig",
        description="Planar central and balanced configuration solvers",
    )
    parser.add_argument("--version", action="version", version=f"cbconfig {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p):
        p.add_argument("--config", required=True, help="path to a run config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None, help="0 = auto")
        p.add_argument("--deterministic", action="store_true",
                       help="force the bit-reproducible single-threaded path")
        p.add_argument("--output", default=None)
        p.add_argument("--progress", action="store_true",
                       help="log 'sample\\tsolutions\\ttypical' every 10^4 samples")

    p = sub.add_parser("nbody", help="solve the n-body problem alone")
    add_run_flags(p)
    p.set_defaults(handler=_cmd_nbody)

    p = sub.add_parser("restricted", help="critical points around stored base solutions")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default=None)
    p.set_defaults(handler=_cmd_restricted)

    p = sub.add_parser("continue", help="full continuation pipeline")
    add_run_flags(p)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--mode", choices=("cc", "bc"), default=None)
    p.set_defaults(handler=_cmd_continue)

    p = sub.add_parser("direct", help="direct multistart on the (n+1)-body system")
    add_run_flags(p)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--mode", choices=("cc", "bc"), default=None)
    p.set_defaults(handler=_cmd_direct)

    p = sub.add_parser("compare", help="match direct against continuation solutions")
    p.add_argument("--a", required=True, help="direct-method document")
    p.add_argument("--b", required=True, help="continuation document")
    p.add_argument("--pairs", choices=("all", "primaries"), default="all")
    p.add_argument("--output", default=None, help="write --a updated with matches")
    p.set_defaults(handler=_cmd_compare)

    p = sub.add_parser("plot", help="render a document as SVG")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(handler=_cmd_plot)

    p = sub.add_parser("verify", help="re-verify every solution in a document")
    p.add_argument("--input", required=True)
    p.set_defaults(handler=_cmd_verify)
    return parser


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.handler(args)
    except (ConfigError, DocumentError, OSError, ValueError) as exc:
        _error(str(exc))
        return 1
    except PipelineError as exc:
        _error(str(exc))
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
