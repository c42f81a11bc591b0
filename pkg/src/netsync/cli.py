"""Command-line front end: ``netsync {run,sweep,audit,bound} <scenario>``.

Exit status: 0 when every requested check passes, 1 when some check fails,
2 for unreadable or invalid scenarios, 3 when integration blows up.
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import scenario as sc
from .simulator import IntegrationBlowUp, integrate, sync_report
from .stability import audit_all

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_BLOWUP = 0, 1, 2, 3


def _kv(rows) -> str:
    return "".join(f"{k}: {v}\n" for k, v in rows)


def _g(x) -> str:
    return "none" if x is None else f"{x:.17g}"


def _threshold_text(s: sc.Scenario) -> str:
    bound = s.bound()
    th = s.thresholds()
    return (
        f"scenario: {s.name}\n"
        f"graph_n: {s.graph.n}\n"
        f"rho: {s.phi.rho.describe()}\n"
        + bound.to_text()
        + _kv([("epsilon_star", _g(th["epsilon_star"])), ("epsilon_certified", _g(th["epsilon_certified"]))])
    )


def _audits(s: sc.Scenario):
    setup = s.audit_setup()
    return audit_all(
        s.model, s.coupling, s.phi, s.weights, setup["psi"], setup["sampler"], setup["count"],
        metric_sampler=setup["metric_sampler"], nodes=setup["nodes"],
        time_interval=setup["time_interval"], chain_max=setup["chain_max"],
    )


def _simulate(s: sc.Scenario, epsilon: float | None = None):
    integ = s.integration
    traj = integrate(s.system(epsilon), s.initial_state(), integ["t0"], integ["t_end"], integ["dt"],
                     integ["record_every"])
    tol, window = s.sync_settings
    return traj, sync_report(traj, tol, window, ball_radius=s.ball_radius())


# ---------------------------------------------------------------- subcommands


def cmd_bound(s: sc.Scenario, args) -> int:
    text = _threshold_text(s)
    sys.stdout.write(text)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{s.name}_bound.txt").write_text(text)
    return EXIT_OK


def cmd_audit(s: sc.Scenario, args) -> int:
    reports = _audits(s)
    text = f"scenario: {s.name}\n\n" + "\n".join(r.to_text() for r in reports)
    failed = [r.hypothesis for r in reports if not r.passed]
    text += f"\nstatus: {'fail' if failed else 'pass'}\n"
    if failed:
        text += f"failing: {', '.join(failed)}\n"
    out = Path(args.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{s.name}_audit.txt").write_text(text)
    for r in reports:
        print(f"{r.hypothesis}: {r.verdict} ({r.violation_count} violations in {r.samples} samples)")
    if failed:
        print("failing audits: " + ", ".join(failed))
    return EXIT_FAIL if failed else EXIT_OK


def cmd_run(s: sc.Scenario, args) -> int:
    out = Path(args.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    csv_name, report_name = s.output_names()
    eps = s.epsilon
    parts = [_threshold_text(s), _kv([("epsilon", _g(eps))])]
    results: dict[str, bool] = {}
    if "audit" in s.checks:
        reports = _audits(s)
        parts.append("\n" + "\n".join(r.to_text() for r in reports))
        results["audit"] = all(r.passed for r in reports)
    try:
        traj, rep = _simulate(s)
    except IntegrationBlowUp as exc:
        parts.append(_kv([("blowup_time", _g(exc.time))]))
        (out / report_name).write_text("".join(parts) + "status: fail\nfailing: integration\n")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    with open(out / csv_name, "w", newline="") as fh:
        traj.to_csv(fh)
    parts.append("\n" + rep.to_text())
    if "sync" in s.checks:
        results["sync"] = rep.synced
    if "lyapunov" in s.checks:
        results["lyapunov"] = rep.v_violations == 0
    if "containment" in s.checks:
        results["containment"] = rep.containment is not None and rep.containment.contained
    failed = [k for k in sc.CHECKS if k in results and not results[k]]
    parts.append("\n" + _kv((f"check_{k}", "pass" if results[k] else "fail") for k in sc.CHECKS if k in results))
    parts.append(f"status: {'fail' if failed else 'pass'}\n")
    if failed:
        parts.append(f"failing: {', '.join(failed)}\n")
    (out / report_name).write_text("".join(parts))
    print(f"{s.name}: epsilon={eps:g} epsilon_star={s.thresholds()['epsilon_star']:.6g} "
          f"synced={str(rep.synced).lower()} residual={rep.final_residual:.3e}")
    if failed:
        print("failing checks: " + ", ".join(failed))
    return EXIT_FAIL if failed else EXIT_OK


def _sweep_point(job):
    text, source, overrides, eps = job
    s = sc.load_text(text, source, overrides)
    try:
        _, rep = _simulate(s, eps)
    except IntegrationBlowUp as exc:
        return eps, None, exc.time
    return eps, rep, None


def cmd_sweep(s: sc.Scenario, args, text: str, overrides: dict) -> int:
    if not isinstance(s.data["epsilon"], dict):
        raise sc.ScenarioError("sweep needs an epsilon range in the scenario or --range FROM TO STEPS",
                               None, s.source)
    star = s.thresholds()["epsilon_star"]
    # a grid point within rounding of epsilon_star becomes the marked row
    grid = [(e, "") for e in s.epsilons if abs(e - star) > 1e-9 * max(1.0, star)]
    grid.append((star, "epsilon_star"))
    grid.sort(key=lambda r: r[0])
    jobs = [(text, s.source, overrides, e) for e, _ in grid]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    lines = ["epsilon,marker,synced,t_sync,final_residual,v_violations,blowup_time"]
    bad = []
    for (eps, marker), (_, rep, blow) in zip(grid, results):
        if rep is None:
            lines.append(f"{eps:.17g},{marker},false,none,nan,0,{blow:.17g}")
            synced = False
        else:
            lines.append(f"{eps:.17g},{marker},{str(rep.synced).lower()},{_g(rep.t_sync)},"
                         f"{rep.final_residual:.17g},{rep.v_violations},none")
            synced = rep.synced
        print(f"epsilon={eps:.6g}{' (epsilon_star)' if marker else ''} synced={str(synced).lower()}")
        if eps > star and not synced:
            bad.append(eps)
    out = Path(args.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{s.name}_sweep.csv").write_text("\n".join(lines) + "\n")
    if bad:
        print("failing checks: sync above epsilon_star at epsilon = " + ", ".join(f"{e:g}" for e in bad))
    return EXIT_FAIL if bad else EXIT_OK


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netsync", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("run", "bound, optional audits, integration, CSV and report"),
        ("sweep", "simulate over an epsilon range"),
        ("audit", "the five hypothesis audits"),
        ("bound", "bound constant and epsilon thresholds only"),
    ]:
        c = sub.add_parser(name, help=help_)
        c.add_argument("scenario", help="scenario file, or the name of a shipped scenario")
        c.add_argument("--seed", type=int, help="override initial-condition and audit seeds")
        c.add_argument("--out-dir", help="artifact directory (default: current directory)")
        c.add_argument("--dt", type=float, help="override integration step")
        c.add_argument("--t-end", type=float, help="override integration end time")
        if name == "sweep":
            c.add_argument("--range", nargs=3, metavar=("FROM", "TO", "STEPS"), help="epsilon grid")
            c.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"seed": args.seed, "dt": args.dt, "t_end": args.t_end}
    if getattr(args, "range", None):
        lo, hi, steps = args.range
        try:
            overrides["epsilon_range"] = (float(lo), float(hi), int(steps))
        except ValueError:
            print("error: --range expects FROM TO STEPS with an integer STEPS", file=sys.stderr)
            return EXIT_INVALID
    overrides = {k: v for k, v in overrides.items() if v is not None}
    try:
        path = Path(args.scenario)
        if not path.exists() and args.scenario in sc.SHIPPED:
            text, source = sc.shipped_text(args.scenario), f"{args.scenario}.yaml"
        else:
            try:
                text, source = path.read_text(), str(path)
            except OSError as exc:
                raise sc.ScenarioError(f"cannot read scenario: {exc.strerror}", None, str(path)) from None
        s = sc.load_text(text, source, overrides)
        if args.command == "run":
            return cmd_run(s, args)
        if args.command == "audit":
            return cmd_audit(s, args)
        if args.command == "bound":
            return cmd_bound(s, args)
        return cmd_sweep(s, args, text, overrides)
    except sc.ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
