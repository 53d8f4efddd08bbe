"""Command-line front end.

Every subcommand reads flags, optionally on top of a JSON config file with
``graph``, ``dynamics``, ``solver`` and ``walk`` blocks (flags win), runs one
experiment and writes its outputs atomically.  When an output file is
written, a manifest ``<output>.manifest.json`` is written beside it.

Exit codes: 0 success, 1 parse or validation error, 2 numerical divergence,
3 I/O failure.  Failures print a single JSON line on standard error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Any, Optional

import numpy as np
import scipy

from . import __version__
from .analysis import convergence_report, solver_error_report
from .dynamics import AttentionConfig, DynamicsSpec, GraphConParams
from .fdesolve import SolverConfig, SolverDivergence, Trajectory, solve, solve_linear_oracle
from .fraccalc import memory_coefficients, mittag_leffler
from .graphcore import Graph, GraphError, load_graph, stationary_distribution
from .io import (
    atomic_write_many,
    csv_text,
    dumps_json,
    fmt,
    read_matrix,
    read_trajectory,
    read_vector,
    trajectory_to_csv,
    trajectory_to_json,
)
from .walk import WalkConfig, evolve_distribution_exact, simulate_ensemble

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED, EXIT_IO = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


def invalid(message: str) -> CliError:
    return CliError(EXIT_INVALID, "validation", message)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with status 2
        raise CliError(EXIT_INVALID, "usage", f"{self.prog}: {message}")


# --------------------------------------------------------------------------
# config handling

def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    _require_file(path)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise invalid(f"config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise invalid(f"config {path} must be a JSON object")
    return doc


def _require_file(path) -> None:
    if not Path(path).is_file():
        raise invalid(f"file not found: {path}")


def _block(cfg: dict, name: str) -> dict:
    block = cfg.get(name) or {}
    if not isinstance(block, dict):
        raise invalid(f"config block {name!r} must be an object")
    return dict(block)


def _override(block: dict, args, mapping: dict[str, str]) -> dict:
    for dest, key in mapping.items():
        val = getattr(args, dest, None)
        if val is not None:
            block[key] = val
    return block


def _seed(args, cfg: dict, block: Optional[dict] = None) -> int:
    seed = args.seed if getattr(args, "seed", None) is not None else None
    if seed is None and block is not None:
        seed = block.get("seed")
    if seed is None:
        seed = cfg.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise invalid(f"seed must be a 64-bit unsigned integer, got {seed!r}")
    return seed


def _graph(args, cfg: dict) -> tuple[Graph, Any]:
    src = args.graph if getattr(args, "graph", None) is not None else cfg.get("graph")
    if src is None:
        raise invalid("a graph is required (--graph or config 'graph')")
    if isinstance(src, str):
        _require_file(src)
    return load_graph(src), src


def _norm(name: str) -> str:
    return str(name).replace("-", "_").lower()


# --------------------------------------------------------------------------
# outputs

def _emit(args, files: dict[str, str], stdout_text: str, echo: dict, seed, t0: float) -> None:
    """Write ``files`` plus a manifest, or print ``stdout_text`` when there are none."""
    if not files:
        sys.stdout.write(stdout_text)
        return
    first = next(iter(files))
    manifest_path = getattr(args, "manifest", None) or f"{first}.manifest.json"
    manifest = {
        "config": echo,
        "artifact_version": __version__,
        "versions": {"numpy": np.__version__, "scipy": scipy.__version__},
        "seed": seed,
        "wall_seconds": round(time.perf_counter() - t0, 6),
        "outputs": list(files),
    }
    for path in [*files, manifest_path]:
        parent = Path(path).parent
        if not parent.is_dir():
            raise CliError(EXIT_IO, "io", f"output directory does not exist: {parent}")
    atomic_write_many({**files, manifest_path: dumps_json(manifest)})


def _format(args, cfg: dict) -> str:
    out = _block(cfg, "outputs")
    f = args.format if getattr(args, "format", None) is not None else out.get("format", "csv")
    if f not in ("csv", "json"):
        raise invalid(f"format must be csv or json, got {f!r}")
    return f


def _out_path(args, cfg: dict) -> Optional[str]:
    if getattr(args, "out", None) is not None:
        return args.out
    return _block(cfg, "outputs").get("path")


# --------------------------------------------------------------------------
# subcommands

def cmd_coeffs(args, t0: float) -> None:
    if args.n < 1:
        raise invalid("--n must be positive")
    co = memory_coefficients(args.beta, args.n)
    rows = ((k, fmt(co.c[k - 1]), fmt(co.b[k])) for k in range(1, args.n + 1))
    text = csv_text(("k", "c_k", "b_k"), rows)
    files = {args.out: text} if args.out else {}
    _emit(args, files, text, {"beta": args.beta, "n": args.n}, None, t0)


def cmd_mlf(args, t0: float) -> None:
    rows = []
    for z in args.z:
        ev = mittag_leffler(args.beta, z)
        rows.append((fmt(z), fmt(ev.value), ev.method_used))
    text = csv_text(("z", "value", "method_used"), rows)
    files = {args.out: text} if args.out else {}
    _emit(args, files, text, {"beta": args.beta, "z": list(args.z)}, None, t0)


SOLVER_FLAGS = {
    "beta": "beta", "h": "h", "T": "t_final", "solver": "method",
    "memory_window": "memory_window", "corrector_iters": "corrector_iters",
    "record_every": "record_every",
}
DYNAMICS_FLAGS = {
    "dynamics": "kind", "base": "base", "source": "source", "source_nodes": "source_nodes",
    "x0": "x0", "start": "start", "features": "features",
}
ATTENTION_FLAGS = {"d_k": "d_k", "d_bar": "d_bar", "attention_seed": "seed"}
GRAPHCON_FLAGS = {"gamma": "gamma", "alpha": "alpha", "activation": "activation"}


def _solver_config(block: dict) -> SolverConfig:
    block = dict(block)
    if "T" in block and "t_final" not in block:
        block["t_final"] = block.pop("T")
    for key in ("beta", "h", "t_final"):
        if key not in block:
            raise invalid(f"solver needs {key!r}")
    if "method" in block:
        block["method"] = _norm(block["method"])
    known = {"beta", "h", "t_final", "method", "memory_window", "corrector_iters", "record_every"}
    extra = set(block) - known
    if extra:
        raise invalid(f"unknown solver keys: {sorted(extra)}")
    return SolverConfig(**block)


def _matrix_value(value) -> np.ndarray:
    if isinstance(value, str):
        _require_file(value)
        return read_matrix(value)
    M = np.asarray(value, dtype=float)
    return M[:, None] if M.ndim == 1 else M


def _initial_state(dyn: dict, g: Graph, kind: str, seed: int) -> np.ndarray:
    if dyn.get("x0") is not None:
        X0 = _matrix_value(dyn["x0"])
    elif dyn.get("features") is not None:
        d = int(dyn["features"])
        if d < 1:
            raise invalid("features must be positive")
        X0 = np.random.default_rng(seed).normal(size=(g.n_nodes, d))
    else:
        start = int(dyn.get("start", 0))
        if not 0 <= start < g.n_nodes:
            raise invalid(f"start node {start} outside [0, {g.n_nodes})")
        X0 = np.zeros((g.n_nodes, 1))
        X0[start, 0] = 1.0
    if kind == "graphcon" and X0.shape[0] == g.n_nodes:
        X0 = np.vstack([X0, np.zeros_like(X0)])
    expected = 2 * g.n_nodes if kind == "graphcon" else g.n_nodes
    if X0.shape[0] != expected:
        raise invalid(f"initial state has {X0.shape[0]} rows, expected {expected}")
    return X0


def _dynamics_spec(dyn: dict, d: int, seed: int) -> DynamicsSpec:
    kind = _norm(dyn.get("kind", "grand_l"))
    base = _norm(dyn.get("base", "grand_l"))
    att = None
    if kind == "grand_nl" or (kind == "grand_pp" and base == "grand_nl"):
        a = dict(dyn.get("attention") or {})
        time_variant = bool(a.get("time_variant", True))
        if "w_k" in a or "w_q" in a:
            att = AttentionConfig(np.asarray(a["w_k"], float), np.asarray(a["w_q"], float),
                                  float(a.get("d_bar", 1.0)), time_variant)
        else:
            kw = {"time_variant": time_variant}
            if a.get("d_bar") is not None:
                kw["d_bar"] = float(a["d_bar"])
            att = AttentionConfig.random(d, a.get("d_k"), seed=int(a.get("seed", seed)), **kw)
    source = None
    if kind == "grand_pp":
        if dyn.get("source") is None:
            raise invalid("grand_pp needs a source matrix")
        source = _matrix_value(dyn["source"])
    nodes = dyn.get("source_nodes")
    gc = None
    if kind == "graphcon":
        p = dict(dyn.get("graphcon") or {})
        theta = p.get("theta")
        gc = GraphConParams(float(p.get("gamma", 1.0)), float(p.get("alpha", 1.0)),
                            p.get("activation", "tanh"),
                            None if theta is None else np.asarray(theta, float))
    return DynamicsSpec(kind, att, source, None if nodes is None else tuple(nodes), base, gc)


def _resolve_solve(args, cfg: dict):
    g, graph_src = _graph(args, cfg)
    solver = _override(_block(cfg, "solver"), args, SOLVER_FLAGS)
    dyn = _override(_block(cfg, "dynamics"), args, DYNAMICS_FLAGS)
    att = _override(dict(dyn.get("attention") or {}), args, ATTENTION_FLAGS)
    if getattr(args, "frozen_attention", False):
        att["time_variant"] = False
    if att:
        dyn["attention"] = att
    gc = _override(dict(dyn.get("graphcon") or {}), args, GRAPHCON_FLAGS)
    if gc:
        dyn["graphcon"] = gc
    seed = _seed(args, cfg)
    return g, graph_src, solver, dyn, seed


def cmd_solve(args, cfg: dict, t0: float) -> None:
    g, graph_src, solver, dyn, seed = _resolve_solve(args, cfg)
    scfg = _solver_config(solver)
    kind = _norm(dyn.get("kind", "grand_l"))
    X0 = _initial_state(dyn, g, kind, seed)
    spec = _dynamics_spec(dyn, X0.shape[1], seed)
    traj = solve(spec, g, X0, scfg)
    _write_traj(args, cfg, traj, {"graph": graph_src, "solver": scfg.to_dict(),
                                  "dynamics": _jsonable(dyn)}, seed, t0)


def cmd_oracle(args, cfg: dict, t0: float) -> None:
    g, graph_src, solver, dyn, seed = _resolve_solve(args, cfg)
    solver.setdefault("method", "predictor")
    scfg = _solver_config(solver)
    X0 = _initial_state(dyn, g, "grand_l", seed)
    times = np.arange(0, scfg.n_steps + 1, scfg.record_every) * scfg.h
    if times[-1] != scfg.n_steps * scfg.h:
        times = np.append(times, scfg.n_steps * scfg.h)
    traj = solve_linear_oracle(g, X0, scfg.beta, times)
    echo = {"graph": graph_src, "beta": scfg.beta, "h": scfg.h, "t_final": scfg.t_final,
            "record_every": scfg.record_every, "dynamics": _jsonable(dyn)}
    _write_traj(args, cfg, traj, echo, seed, t0)


def _write_traj(args, cfg, traj: Trajectory, echo: dict, seed, t0: float) -> None:
    f = _format(args, cfg)
    text = trajectory_to_csv(traj) if f == "csv" else trajectory_to_json(traj)
    out = _out_path(args, cfg)
    echo = {**echo, "format": f}
    _emit(args, {out: text} if out else {}, text, echo, seed, t0)


WALK_FLAGS = {
    "beta": "beta", "sigma": "sigma", "steps": "n_steps", "walkers": "n_walkers",
    "start": "start", "record_every": "record_every",
}


def _walk_start(start, g: Graph):
    if start is None:
        return 0
    if isinstance(start, list):
        return np.asarray(start, dtype=float)
    s = str(start)
    if s == "pi":
        return stationary_distribution(g)
    try:
        return int(s)
    except ValueError:
        _require_file(s)
        return read_vector(s)


def cmd_walk(args, cfg: dict, t0: float) -> None:
    g, graph_src = _graph(args, cfg)
    block = _override(_block(cfg, "walk"), args, WALK_FLAGS)
    seed = _seed(args, cfg, block)
    exact = bool(args.exact or block.get("exact", False))
    for key in ("beta", "sigma", "n_steps"):
        if key not in block:
            raise invalid(f"walk needs {key!r}")
    start = _walk_start(block.get("start"), g)
    if isinstance(start, int) and not 0 <= start < g.n_nodes:
        raise invalid(f"start node {start} outside [0, {g.n_nodes})")
    wcfg = WalkConfig(float(block["beta"]), float(block["sigma"]), int(block["n_steps"]),
                      int(block.get("n_walkers", 1000)), start, seed,
                      int(block.get("record_every", 1)))
    ens = simulate_ensemble(g, wcfg)
    rows = []
    for step, t, occ in zip(ens.steps, ens.times, ens.occupation):
        rows += [(int(step), fmt(t), i, fmt(p), "mc") for i, p in enumerate(occ)]
    if exact:
        p0 = np.eye(g.n_nodes)[start] if isinstance(start, int) else start
        P = evolve_distribution_exact(g, p0, wcfg)
        for step, t in zip(ens.steps, ens.times):
            rows += [(int(step), fmt(t), i, fmt(p), "exact") for i, p in enumerate(P[step])]
    text = csv_text(("step", "t", "node", "probability", "source"), rows)
    out = _out_path(args, cfg)
    echo = {"graph": graph_src, "walk": {
        "beta": wcfg.beta, "sigma": wcfg.sigma, "n_steps": wcfg.n_steps,
        "n_walkers": wcfg.n_walkers, "start": _jsonable(block.get("start", 0)),
        "record_every": wcfg.record_every, "exact": exact}}
    _emit(args, {out: text} if out else {}, text, echo, seed, t0)


def _pi(arg, g: Graph) -> np.ndarray:
    if arg is None or arg == "auto":
        return stationary_distribution(g)
    _require_file(arg)
    pi = read_vector(arg)
    if pi.size != g.n_nodes:
        raise invalid("pi length does not match the graph")
    return pi


def _read_traj(path) -> Trajectory:
    _require_file(path)
    return read_trajectory(path)


def cmd_analyze_slope(args, cfg: dict, t0: float) -> None:
    g, graph_src = _graph(args, cfg)
    traj = _read_traj(args.traj)
    X0 = read_matrix(args.x0) if args.x0 else traj.states[0]
    pi = _pi(args.pi, g)
    rep = convergence_report(g, traj, X0, args.t_min, args.t_max, pi=pi)
    doc = {**rep.algebraic.to_dict(), "exponential": rep.exponential.to_dict(),
           "connected": rep.connected, "aperiodic": rep.aperiodic,
           "informational": rep.informational, "preferred_model": rep.preferred_model}
    text = dumps_json(doc)
    echo = {"graph": graph_src, "traj": args.traj, "pi": args.pi or "auto",
            "t_min": args.t_min, "t_max": args.t_max}
    _emit(args, {args.out: text} if args.out else {}, text, echo, None, t0)


def cmd_analyze_error(args, cfg: dict, t0: float) -> None:
    rep = solver_error_report(_read_traj(args.traj), _read_traj(args.oracle))
    text = dumps_json(rep.to_dict())
    echo = {"traj": args.traj, "oracle": args.oracle}
    _emit(args, {args.out: text} if args.out else {}, text, echo, None, t0)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# --------------------------------------------------------------------------
# argument parsing

def _common(p: argparse.ArgumentParser, config: bool = True) -> None:
    if config:
        p.add_argument("--config", help="JSON config with graph/dynamics/solver/walk blocks")
    p.add_argument("--out", help="output path (default: standard output, no manifest)")
    p.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")


def _solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", help="graph JSON document")
    p.add_argument("--beta", type=float)
    p.add_argument("--h", type=float, help="step size")
    p.add_argument("--T", type=float, help="final time")
    p.add_argument("--record-every", type=int)
    p.add_argument("--x0", help="initial state CSV, N rows of d values")
    p.add_argument("--start", type=int, help="one-hot initial state at this node")
    p.add_argument("--features", type=int, help="random N x d initial state from --seed")
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=("csv", "json"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="frond", description="Fractional-order graph dynamics toolkit.")
    parser.add_argument("--version", action="version", version=f"frond {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("coeffs", help="memory coefficients c_k and b_k as CSV")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    _common(p, config=False)

    p = sub.add_parser("mlf", help="Mittag-Leffler E_beta(z) for z <= 0")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--z", type=float, nargs="+", required=True)
    _common(p, config=False)

    p = sub.add_parser("solve", help="integrate D^beta X = F(X) on a graph")
    _solver_args(p)
    p.add_argument("--dynamics", help="grand-l, grand-nl, grand-pp or graphcon")
    p.add_argument("--solver", help="predictor, predictor-corrector or implicit-l1")
    p.add_argument("--memory-window", type=int, help="short-memory window K")
    p.add_argument("--corrector-iters", type=int)
    p.add_argument("--base", help="grand-pp base operator")
    p.add_argument("--source", help="grand-pp source matrix CSV")
    p.add_argument("--source-nodes", type=int, nargs="+")
    p.add_argument("--d-k", type=int, help="attention key dimension")
    p.add_argument("--d-bar", type=float, help="attention score scale")
    p.add_argument("--attention-seed", type=int)
    p.add_argument("--frozen-attention", action="store_true",
                   help="evaluate attention once on the initial state")
    p.add_argument("--gamma", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--activation", choices=("tanh", "identity"))
    _common(p)

    p = sub.add_parser("oracle", help="Mittag-Leffler eigen-solution of D^beta X = -L X")
    _solver_args(p)
    _common(p)

    p = sub.add_parser("walk", help="Monte-Carlo non-Markovian walk occupation")
    p.add_argument("--graph")
    p.add_argument("--beta", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--walkers", type=int)
    p.add_argument("--start", help="start node, 'pi', or a distribution CSV")
    p.add_argument("--seed", type=int)
    p.add_argument("--record-every", type=int)
    p.add_argument("--exact", action="store_true", help="also emit the exact recursion")
    _common(p)

    p = sub.add_parser("analyze", help="post-process trajectories")
    asub = p.add_subparsers(dest="analysis", parser_class=_Parser, required=True)
    s = asub.add_parser("slope", help="decay-rate fit of the distance to stationarity")
    s.add_argument("--traj", required=True)
    s.add_argument("--graph")
    s.add_argument("--pi", default="auto", help="'auto' or a CSV vector")
    s.add_argument("--x0", help="initial state CSV (default: first trajectory state)")
    s.add_argument("--t-min", type=float, default=10.0)
    s.add_argument("--t-max", type=float, default=1000.0)
    _common(s)
    e = asub.add_parser("error", help="elementwise error against an oracle trajectory")
    e.add_argument("--traj", required=True)
    e.add_argument("--oracle", required=True)
    _common(e, config=False)
    return parser


def _diagnose(code: int, kind: str, message: str) -> None:
    line = json.dumps({"error": kind, "exit_code": code, "message": " ".join(str(message).split())})
    sys.stderr.write(line + "\n")


def run(argv=None) -> int:
    """Execute one command and return its exit status."""
    t0 = time.perf_counter()
    with np.errstate(all="ignore"):  # divergence is reported, not warned about
        return _run(argv, t0)


def _run(argv, t0: float) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _load_config(getattr(args, "config", None))
        if args.command == "coeffs":
            cmd_coeffs(args, t0)
        elif args.command == "mlf":
            cmd_mlf(args, t0)
        elif args.command == "solve":
            cmd_solve(args, cfg, t0)
        elif args.command == "oracle":
            cmd_oracle(args, cfg, t0)
        elif args.command == "walk":
            cmd_walk(args, cfg, t0)
        elif args.analysis == "slope":
            cmd_analyze_slope(args, cfg, t0)
        else:
            cmd_analyze_error(args, cfg, t0)
    except CliError as exc:
        _diagnose(exc.code, exc.kind, str(exc))
        return exc.code
    except SolverDivergence as exc:
        _diagnose(EXIT_DIVERGED, "divergence", str(exc))
        return EXIT_DIVERGED
    except (GraphError, ValueError, TypeError, KeyError) as exc:
        _diagnose(EXIT_INVALID, "validation", str(exc))
        return EXIT_INVALID
    except OSError as exc:
        _diagnose(EXIT_IO, "io", str(exc))
        return EXIT_IO
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":  # pragma: no cover
    main()
