"""Command-line front end: ``rifsdim <command> CONFIG [flags]``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__
from .cache import load_or_build
from .commuting import block_extremes, column_sum_range, find_sink, local_dim_interval
from .config import canonical_json, load_config, system_hash
from .errors import RifsError
from .finite_type import DEFAULT_CAP, check_liveness, essential_class
from .lyapunov import DEFAULT_DEPTH, DEFAULT_TRIALS, POLICIES, dimension_mc, local_dim_mc
from .model import cylinders, empirical_local_dim, sample_word, validate
from .oracles import run_block_oracle, run_graph_oracles
from .spectrum import DEFAULT_DIGITS, alpha_endpoints, beta, dimension_ussc, spectrum_curve


def _theta(text: str):
    return [Fraction(x.strip()) for x in text.split(",")]


def _letters1(word) -> str:
    return "(" + ",".join(str(j + 1) for j in word) + ")"


class Run:
    """Collects stdout lines and artifacts for one command."""

    def __init__(self, args):
        self.args = args
        self.lines = []
        self.artifacts = {}

    def say(self, text: str = ""):
        self.lines.append(text)

    def artifact(self, name: str, text: str):
        self.artifacts[name] = text


def _load(args):
    rifs, cfg = load_config(args.config)
    if args.theta:
        rifs = rifs.with_theta(_theta(args.theta))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    args.effective_seed = seed
    return rifs, seed


def _graph(run, rifs):
    graph, status = load_or_build(rifs, run.args.cache_dir, run.args.cap)
    if status != "none":
        print(f"cache: {status}", file=sys.stderr)
    return graph


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_validate(run: Run) -> int:
    rifs, _ = _load(run.args)
    mode = run.args.mode
    if mode == "auto":
        mode = "finite_type" if rifs.equicontractive else "spectrum"
    rep = validate(rifs, mode, strict=False)
    run.say(f"mode: {mode}")
    run.say(f"hull: {'pass' if rep.hull else 'fail'}")
    run.say(f"equicontractive: {'yes' if rep.equicontractive else 'no'}")
    run.say(f"USSC: {rep.ussc}" + (f" (min gap {rep.ussc_gap})" if rep.ussc_gap is not None else ""))
    run.say(f"regular: {'yes' if rep.regular else 'no'}")
    for m in rep.messages:
        run.say(f"  - {m}")
    run.artifact("validate.json", _json(rep.as_dict()))
    return 0 if rep.ok else 1


def cmd_spectrum(run: Run) -> int:
    a = run.args
    rifs, _ = _load(a)
    if a.q_step <= 0 or a.q_max < a.q_min:
        raise SystemExit("need q-step > 0 and q-max >= q-min")
    count = int(round((a.q_max - a.q_min) / a.q_step))
    qs = [a.q_min + i * a.q_step for i in range(count + 1)]
    curve = spectrum_curve(rifs, qs, a.precision_digits)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["q", "beta", "alpha", "f", "residual"])
    for s in curve.samples:
        w.writerow([repr(s.q), repr(s.beta), repr(s.alpha), repr(s.f), repr(s.residual)])
    run.artifact("spectrum.csv", buf.getvalue())
    ends = curve.endpoints
    summary = {
        "dim_K": curve.dim_k,
        "alpha_min": ends.lo,
        "alpha_max": ends.hi,
        "argmin": [[k + 1 for k in v] for v in ends.argmin],
        "argmax": [[k + 1 for k in v] for v in ends.argmax],
        "samples": len(curve.samples),
    }
    run.artifact("spectrum.json", _json(summary))
    run.say(f"dim K: {curve.dim_k:.15g}")
    run.say(f"alpha range: [{ends.lo:.15g}, {ends.hi:.15g}]")
    run.say(f"minimizing vectors: {summary['argmin']}")
    run.say(f"maximizing vectors: {summary['argmax']}")
    if not a.out_dir:
        run.say(buf.getvalue().rstrip("\n"))
    return 0


def cmd_enumerate(run: Run) -> int:
    rifs, seed = _load(run.args)
    graph = _graph(run, rifs)
    run.say(f"reduced characteristic vectors: {graph.reduced_count}")
    if graph.has_gaps:
        run.say(f"  covered: {len(graph.nodes)} (plus one empty vector for uncovered gaps)")
    dead = sum(1 for u in range(len(graph.nodes)) for j in range(rifs.m) if not graph.out(u, j))
    run.say(f"transitions: {sum(1 for _ in graph.all_transitions())}")
    if dead:
        run.say(f"node/letter pairs without children: {dead}")
    out = {"reduced_count": graph.reduced_count, "covered": len(graph.nodes),
           "has_gaps": graph.has_gaps, "system_hash": system_hash(rifs),
           "nodes": [repr(cv) for cv in graph.nodes]}
    if run.args.validate_liveness:
        live = check_liveness(graph, seed=seed)
        missing = [u for u, ok in live.items() if not ok]
        run.say(f"liveness: {len(live) - len(missing)}/{len(live)} confirmed")
        for u in missing:
            run.say(f"  unconfirmed: {u} {graph.nodes[u]!r}")
        out["liveness_unconfirmed"] = missing
    run.artifact("enumerate.json", _json(out))
    return 0


def cmd_essential(run: Run) -> int:
    rifs, _ = _load(run.args)
    graph = _graph(run, rifs)
    ec = essential_class(graph)
    run.say(f"essential class: {len(ec)} of {len(graph.nodes)} vectors")
    for u in ec.nodes:
        run.say(f"  {u}: {graph.nodes[u]!r}")
    for j, a in enumerate(ec.counts):
        run.say(f"A_{j + 1} =")
        for row in a:
            run.say("  [" + " ".join(f"{x:>3d}" for x in row) + "]")
    run.artifact("essential.json", _json({"nodes": list(ec.nodes),
                                          "vectors": [repr(graph.nodes[u]) for u in ec.nodes],
                                          "counts": [[list(r) for r in a] for a in ec.counts]}))
    return 0


def _estimate_dict(est, extra=None) -> dict:
    d = {"value": est.value, "stderr": est.stderr, "trials": est.trials, "depth": est.depth,
         "seed": est.seed, "mode": est.mode, "policy": est.policy}
    d.update(extra or {})
    return d


def cmd_dimension(run: Run) -> int:
    a = run.args
    rifs, seed = _load(a)
    graph = _graph(run, rifs)
    est = dimension_mc(essential_class(graph), rifs.theta, a.depth, a.trials, seed)
    run.say(f"dimension: {est.value:.15g} +/- {est.stderr:.3g} (n={est.depth}, trials={est.trials}, seed={seed})")
    run.artifact("dimension.json", _json(_estimate_dict(est, {"theta": [str(t) for t in rifs.theta]})))
    return 0


def cmd_localdim(run: Run) -> int:
    a = run.args
    rifs, seed = _load(a)
    graph = _graph(run, rifs)
    path = a.path
    if path not in ("leftmost", "rightmost"):
        path = [int(x) for x in path.split(",")]
    sink = find_sink(graph) if a.policy in ("max_block", "min_block") else None
    est = local_dim_mc(graph, rifs.theta, a.policy, a.depth, a.trials, seed, path=path,
                       require_regular=not a.allow_irregular,
                       sink_word=sink.word if sink is not None and sink.commuting else None)
    run.say(f"local dimension ({a.policy}): {est.value:.15g} +/- {est.stderr:.3g}")
    run.artifact("localdim.json", _json(_estimate_dict(est)))
    return 0


def cmd_commuting(run: Run) -> int:
    a = run.args
    rifs, _ = _load(a)
    graph = _graph(run, rifs)
    sink = find_sink(graph)
    if sink is None:
        run.say("no sink found")
        run.artifact("commuting.json", _json({"sink": None}))
        return 1
    run.say(f"sink word: {_letters1(sink.word)}")
    run.say(f"sink vector: {graph.nodes[sink.node]!r}")
    run.say(f"commuting: {'true' if sink.commuting else 'false'}")
    model = block_extremes(graph, sink, a.neck_cap, rifs.theta)
    run.say(f"{'n':>3}  {'min block':>24}  {'max block':>24}")
    table = []
    for n, (lo, hi) in sorted(model.by_length().items()):
        if n <= 12:
            run.say(f"{n:>3}  {str(lo):>24}  {str(hi):>24}")
        table.append([n, str(lo), str(hi)])
    iv = local_dim_interval(model, rifs.theta, graph.r, graph)
    tag = " (bounds only)" if iv.bounds_only else ""
    run.say(f"interval{tag}: [{iv.lo:.15g}, {iv.hi:.15g}]")
    if iv.lo_symbolic:
        run.say(f"symbolic: [{iv.lo_symbolic}, {iv.hi_symbolic}]")
    if not iv.exact:
        run.say(f"truncation error bounds: {iv.lo_err:.3g}, {iv.hi_err:.3g}")
    gl, gh = column_sum_range(graph)
    run.artifact("commuting.json", _json({
        "sink_word": [j + 1 for j in sink.word], "sink_node": sink.node, "commuting": sink.commuting,
        "extremes": table, "lo": iv.lo, "hi": iv.hi, "lo_err": iv.lo_err, "hi_err": iv.hi_err,
        "exact": iv.exact, "lo_symbolic": iv.lo_symbolic, "hi_symbolic": iv.hi_symbolic,
        "column_sum_range": [gl, gh], "theta": [str(t) for t in rifs.theta]}))
    return 0


def cmd_simulate(run: Run) -> int:
    a = run.args
    rifs, seed = _load(a)
    depth = a.depth if a.depth is not None else 8
    word = sample_word(rifs.theta, depth, seed, "simulate")
    run.say(f"word: {_letters1(word.letters)}")
    cs = cylinders(rifs, word.letters, depth, budget=a.budget)
    run.say(f"level-{depth} cylinders: {len(cs)} (total weight {cs.total_weight()})")
    x = rifs.field(Fraction(a.x))
    est = empirical_local_dim(rifs, word.letters, x, range(1, depth + 1), budget=a.budget)
    run.say(f"empirical local dimension at x={a.x}:")
    for n, v in est:
        run.say(f"  n={n:>3}  {v:.12g}")
    run.artifact("simulate.json", _json({"word": [j + 1 for j in word.letters], "cylinders": len(cs),
                                         "x": a.x, "estimates": est}))
    return 0


def cmd_oracle(run: Run) -> int:
    a = run.args
    rifs, seed = _load(a)
    results = []
    if rifs.equicontractive:
        graph = _graph(run, rifs)
        results += run_graph_oracles(graph, seed=seed)
        sink = find_sink(graph)
        if sink is not None:
            results.append(run_block_oracle(graph, block_extremes(graph, sink, 6, rifs.theta)))
    b1 = beta(rifs, 1, a.precision_digits)
    results.append(_Result("beta(1)=0", abs(b1.beta) <= 1e-12, f"beta(1)={b1.beta:.3g}"))
    b0 = beta(rifs, 0, a.precision_digits)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        s = dimension_ussc(rifs, a.precision_digits)
    results.append(_Result("beta(0)=dimension", b0.beta == s, f"{b0.beta!r} vs {s!r}"))
    ends = alpha_endpoints(rifs, a.precision_digits)
    results.append(_Result("alpha range ordered", ends.lo <= ends.hi, f"[{ends.lo:.6g}, {ends.hi:.6g}]"))
    ok = True
    for r in results:
        run.say(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
        ok = ok and r.passed
    run.artifact("oracle.json", _json([{"name": r.name, "passed": r.passed, "detail": r.detail}
                                       for r in results]))
    return 0 if ok else 1


class _Result:
    def __init__(self, name, passed, detail):
        self.name, self.passed, self.detail = name, passed, detail


COMMANDS = {
    "validate": cmd_validate,
    "spectrum": cmd_spectrum,
    "enumerate": cmd_enumerate,
    "essential": cmd_essential,
    "dimension": cmd_dimension,
    "localdim": cmd_localdim,
    "commuting": cmd_commuting,
    "simulate": cmd_simulate,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="config file, or the name of a shipped example")
    common.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    common.add_argument("--theta", default=None, help="selection weights, e.g. 1/2,1/2")
    common.add_argument("--cap", type=int, default=DEFAULT_CAP, help="max characteristic vectors")
    common.add_argument("--cache-dir", default=None)
    common.add_argument("--out-dir", default=None, help="write artifacts and manifest here")
    common.add_argument("--precision-digits", type=int, default=DEFAULT_DIGITS)

    p = argparse.ArgumentParser(prog="rifsdim", description=__doc__)
    p.add_argument("--version", action="version", version=f"rifsdim {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", parents=[common])
    v.add_argument("--mode", choices=["auto", "finite_type", "spectrum"], default="auto")

    s = sub.add_parser("spectrum", parents=[common])
    s.add_argument("--q-min", type=float, default=-20.0)
    s.add_argument("--q-max", type=float, default=20.0)
    s.add_argument("--q-step", type=float, default=0.5)

    e = sub.add_parser("enumerate", parents=[common])
    e.add_argument("--validate-liveness", action="store_true")
    sub.add_parser("essential", parents=[common])

    for name in ("dimension", "localdim"):
        d = sub.add_parser(name, parents=[common])
        d.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
        d.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
        if name == "localdim":
            d.add_argument("--policy", choices=POLICIES, default="random_child")
            d.add_argument("--path", default="leftmost",
                           help="given_path: leftmost, rightmost or comma-separated child indices")
            d.add_argument("--allow-irregular", action="store_true",
                           help="run even when the measure is not regular")

    c = sub.add_parser("commuting", parents=[common])
    c.add_argument("--neck-cap", type=int, default=40, help="longest neck enumerated exactly")

    m = sub.add_parser("simulate", parents=[common])
    m.add_argument("--depth", type=int, default=None)
    m.add_argument("--x", default="0")
    m.add_argument("--budget", type=int, default=2_000_000)

    sub.add_parser("oracle", parents=[common])
    return p


def _write(run: Run, status: int, elapsed: float):
    out = Path(run.args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in sorted(run.artifacts.items()):
        (out / name).write_text(text)
    (out / "stdout.txt").write_text("\n".join(run.lines) + "\n")
    rifs_hash = None
    try:
        rifs_hash = system_hash(load_config(run.args.config)[0])
    except (RifsError, OSError):
        pass
    params = {k: v for k, v in sorted(vars(run.args).items())
              if k not in ("out_dir", "cache_dir", "effective_seed")}
    manifest = {"command": run.args.command, "config_hash": rifs_hash, "parameters": params,
                "seed": getattr(run.args, "effective_seed", run.args.seed),
                "tool_version": __version__, "exit_status": status,
                "artifacts": sorted(run.artifacts) + ["stdout.txt"],
                "timing_seconds": round(elapsed, 3)}
    (out / "manifest.json").write_text(_json(manifest))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    run = Run(args)
    t0 = time.perf_counter()
    try:
        status = COMMANDS[args.command](run)
    except RifsError as exc:
        for line in run.lines:
            print(line)
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return exc.exit_status
    except FileNotFoundError as exc:
        print(f"error [cli.config]: {exc}", file=sys.stderr)
        return 1
    for line in run.lines:
        print(line)
    if args.out_dir:
        _write(run, status, time.perf_counter() - t0)
    return status


if __name__ == "__main__":
    sys.exit(main())
