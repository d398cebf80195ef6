"""Command-line front end.

Exit codes: 0 success (and certified, where that applies), 1 residual not
certified, 2 malformed input (schema, JSON, expression, problem setup),
3 numeric precondition failure, 4 iteration budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator

from herglotz import __version__
from herglotz import io
from herglotz.core import HerglotzProblem, el_residual, integrate_z
from herglotz.errors import (
    EvaluationError,
    ExprError,
    MaxIterationsExceeded,
    PreconditionError,
    ProblemError,
    SolverError,
)
from herglotz.expr import Compiled, parse
from herglotz.fields import FieldProblem, el_residual_field, integrate_z_field
from herglotz.higher_order import HigherOrderProblem, el_residual_ho, integrate_z_ho
from herglotz.scale import (
    Mode,
    SampledSignal,
    ScaleParams,
    UniformGrid,
    box_derivative,
    higher_order_box,
    holder_exponent,
    weierstrass,
)
from herglotz.solver import SolveOptions, extremize
from herglotz import study as studies

EXIT_OK = 0
EXIT_NOT_CERTIFIED = 1
EXIT_INPUT = 2
EXIT_PRECONDITION = 3
EXIT_MAX_ITER = 4

_NUMBER = {"type": "number"}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_PAIR = {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2}

PROBLEM_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["variant", "interval", "lagrangian", "grid", "scale"],
    "properties": {
        "variant": {"enum": ["scalar", "vector", "higher_order", "field"]},
        "interval": _PAIR,
        "z_a": {"oneOf": [_NUMBER, _PAIR]},
        "dimension": {"type": "integer", "minimum": 1},
        "order": {"type": "integer", "minimum": 1},
        "space": {"type": "array", "items": _PAIR, "minItems": 1, "maxItems": 2},
        "lagrangian": {"type": "string", "minLength": 1},
        "boundaries": {
            "type": "object",
            "additionalProperties": False,
            "required": ["left", "right"],
            "properties": {
                "left": {"type": "array", "items": _NUMBER, "minItems": 1},
                "right": {"type": "array", "items": {"type": ["number", "null"]}, "minItems": 1},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["step"],
            "properties": {
                "step": _POSITIVE,
                "margin_nodes": {"type": "integer", "minimum": 0},
                "space_steps": {"type": "array", "items": _POSITIVE, "minItems": 1, "maxItems": 2},
            },
        },
        "scale": {
            "type": "object",
            "additionalProperties": False,
            "required": ["h"],
            "properties": {
                "h": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "ladder": {"type": "array", "items": _POSITIVE},
            },
        },
        "solve": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "max_iterations": {"type": "integer", "minimum": 1},
                "gradient_tolerance": _POSITIVE,
                "initial_step": _POSITIVE,
                "shrink": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "sufficient_decrease": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "mode": {"enum": ["stationary", "minimize", "maximize"]},
                "certification_tolerance": _POSITIVE,
            },
        },
        "initial": {"oneOf": [{"type": "string"},
                              {"type": "array", "items": {"type": "string"}, "minItems": 1}]},
    },
    "allOf": [
        {"if": {"properties": {"variant": {"enum": ["scalar", "vector", "higher_order"]}}},
         "then": {"required": ["boundaries"]}},
        {"if": {"properties": {"variant": {"const": "higher_order"}}},
         "then": {"required": ["order"]}},
        {"if": {"properties": {"variant": {"const": "field"}}},
         "then": {"required": ["space"]}},
    ],
}


class CliError(Exception):
    """Carries an exit code and a message for the top-level handler."""

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def load_problem_file(path: str) -> dict:
    """Read and schema-check a problem file; raises :class:`CliError` with exit code 2."""
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_INPUT, f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from None
    errors = sorted(Draft202012Validator(PROBLEM_SCHEMA).iter_errors(doc), key=lambda e: list(e.path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.path) or "(root)"
        raise CliError(EXIT_INPUT, f"{path}: schema violation at {where}: {err.message}")
    return doc


def _z_a(doc: dict) -> complex:
    v = doc.get("z_a", 0.0)
    return complex(v[0], v[1]) if isinstance(v, list) else complex(v)


def build_problem(doc: dict):
    """Problem object for a validated problem document."""
    a, b = doc["interval"]
    step = doc["grid"]["step"]
    h = doc["scale"]["h"]
    ladder = doc["scale"].get("ladder")
    variant = doc["variant"]
    if variant == "field":
        space = doc["space"]
        steps = doc["grid"].get("space_steps", [step] * len(space))
        if len(steps) != len(space):
            raise ProblemError("grid.space_steps needs one entry per space axis")
        return FieldProblem.build(doc["lagrangian"], a, b, space, [step] + list(steps), h, _z_a(doc))
    left, right = doc["boundaries"]["left"], doc["boundaries"]["right"]
    if len(left) != len(right):
        raise ProblemError("boundaries.left and boundaries.right differ in length")
    if variant == "higher_order":
        if len(left) != doc["order"]:
            raise ProblemError(f"order {doc['order']} needs {doc['order']} boundary entries per side")
        return HigherOrderProblem.build(doc["lagrangian"], a, b, left, right, step, h, _z_a(doc), ladder)
    n = doc.get("dimension", len(left))
    if variant == "scalar" and n != 1:
        raise ProblemError("a scalar problem has dimension 1")
    if len(left) != n:
        raise ProblemError(f"dimension {n} needs {n} boundary entries per side")
    return HerglotzProblem.build(doc["lagrangian"], a, b, left, right, step, h, _z_a(doc), ladder)


def _initial(doc: dict, problem):
    init = doc.get("initial")
    if init is None:
        return None
    if isinstance(problem, HerglotzProblem):
        init = [init] if isinstance(init, str) else init
        if len(init) != problem.n:
            raise ProblemError(f"initial needs {problem.n} expressions")
        return init
    if isinstance(init, list):
        if len(init) != 1:
            raise ProblemError("initial takes one expression for this variant")
        init = init[0]
    return init


def _margin(doc: dict):
    return doc["grid"].get("margin_nodes")


def _report(problem, doc: dict, trajectory_csv: str | None, tol: float):
    """Residual report along the trajectory from a CSV file or the ``initial`` expression."""
    margin = _margin(doc)
    init = _initial(doc, problem)
    if isinstance(problem, FieldProblem):
        if trajectory_csv is not None:
            raise ProblemError("field trajectories are read from the initial expression only")
        if init is None:
            raise ProblemError("the problem has no initial expression and no --trajectory was given")
        u = problem.sample(init, None if margin is None else [margin] * (1 + problem.ndim))
        return el_residual_field(problem, u, integrate_z_field(problem, u), tol)
    if trajectory_csv is not None:
        x = io.read_trajectory_csv(Path(trajectory_csv), problem.a, problem.b, problem.scale.step)
        problem.check(x)
    elif init is not None:
        x = problem.trajectory(init, margin)
    else:
        raise ProblemError("the problem has no initial expression and no --trajectory was given")
    if isinstance(problem, HigherOrderProblem):
        return el_residual_ho(problem, x, integrate_z_ho(problem, x), tol)
    return el_residual(problem, x, integrate_z(problem, x), tol)


def _out_dir(args) -> Path | None:
    if args.out_dir is None:
        return None
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _signal_from_expr(text: str, grid: UniformGrid) -> SampledSignal:
    comp = Compiled(parse(text, {"t"}))
    vals = np.broadcast_to(comp({"t": grid.nodes}), grid.nodes.shape)
    if np.max(np.abs(vals.imag), initial=0.0) == 0:
        return SampledSignal.real(grid, vals.real)
    return SampledSignal(grid, vals)


def _ladder(text: str | None) -> tuple[float, ...] | None:
    if text is None:
        return None
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise CliError(EXIT_INPUT, f"--ladder must be a comma-separated list of numbers, got {text!r}") from None


def _weierstrass_args(text: str) -> tuple[float, int, int]:
    parts = text.split(",")
    try:
        amp, freq = float(parts[0]), int(parts[1])
        terms = int(parts[2]) if len(parts) > 2 else 12
    except (ValueError, IndexError):
        raise CliError(EXIT_INPUT, f"--weierstrass expects AMP,FREQ[,TERMS], got {text!r}") from None
    return amp, freq, terms


def _input_signal(args, margin: int, which: str = "") -> SampledSignal:
    """Signal from ``--csv``, ``--expr`` or ``--weierstrass`` (with an optional suffix)."""
    csv_path = getattr(args, "csv" + which, None)
    expr = getattr(args, "expr" + which, None)
    wei = getattr(args, "weierstrass" + which, None)
    given = [v for v in (csv_path, expr, wei) if v is not None]
    if len(given) != 1:
        raise CliError(EXIT_INPUT, f"give exactly one of --csv{which}, --expr{which}, --weierstrass{which}")
    if csv_path is not None:
        return io.read_signal_csv(Path(csv_path))
    if args.a is None or args.b is None or args.step is None:
        raise CliError(EXIT_INPUT, "--a, --b and --step are required to sample a signal")
    grid = UniformGrid(args.a, args.b, args.step, margin)
    if expr is not None:
        return _signal_from_expr(expr, grid)
    amp, freq, terms = _weierstrass_args(wei)
    return weierstrass(amp, freq, terms, grid)


def _nodes(value: float, step: float) -> int:
    return max(1, int(round(value / step)))


# -- commands ----------------------------------------------------------------

def cmd_derive(args) -> int:
    mode = Mode(args.mode)
    ladder = _ladder(args.ladder)
    if args.csv is not None:
        f = io.read_signal_csv(Path(args.csv))
        step = f.grid.step
    else:
        if args.step is None:
            raise CliError(EXIT_INPUT, "--a, --b and --step are required with --expr")
        step = args.step
        reach = max([args.h] + list(ladder or []))
        f = None
    params = ScaleParams.from_h(step, args.h, ladder if ladder is not None else ())
    if f is None:
        extra = max(params.ladder_nodes, default=0) if mode is Mode.EXTRAPOLATED else 0
        f = _input_signal(args, args.order * max(_nodes(reach, step), extra))
    if mode is Mode.EXTRAPOLATED:
        if args.order != 1:
            raise CliError(EXIT_INPUT, "extrapolated mode supports --order 1 only")
        out, _ = box_derivative(f, params, mode)
    else:
        out = higher_order_box(f, args.order, params).restrict(0)
    d = _out_dir(args)
    text = io.signal_csv(out, None if d is None else d / "derivative.csv")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_residual(args) -> int:
    doc = load_problem_file(args.problem)
    problem = build_problem(doc)
    tol = args.tol if args.tol is not None else doc.get("solve", {}).get("certification_tolerance", 5e-2)
    report = _report(problem, doc, args.trajectory, tol)
    body = report.to_json()
    d = _out_dir(args)
    if d is not None:
        io.write_json(d / "report.json", body)
    sys.stdout.write(io.dumps(body))
    return EXIT_OK if report.certified else EXIT_NOT_CERTIFIED


def _solve_options(doc: dict, tol: float | None) -> SolveOptions:
    opts = dict(doc.get("solve", {}))
    if tol is not None:
        opts["certification_tolerance"] = tol
    return SolveOptions(**opts)


def _write_solution(d: Path | None, result) -> dict:
    body = result.report.to_json()
    body["converged"] = result.converged
    body["iterations"] = len(result.trace) - 1
    body["objective"] = {"re": result.objective.real, "im": result.objective.imag}
    if d is not None:
        io.trajectory_csv(result.trajectory, d / "trajectory.csv")
        io.trace_csv(result.trace, d / "trace.csv")
        io.write_json(d / "report.json", body)
    return body


def cmd_solve(args) -> int:
    doc = load_problem_file(args.problem)
    problem = build_problem(doc)
    if not isinstance(problem, HerglotzProblem):
        raise CliError(EXIT_INPUT, f"the solver handles scalar and vector problems, not {doc['variant']}")
    init = _initial(doc, problem)
    if init is None:
        # straight line between the fixed ends (a constant at free ends)
        a, b = problem.a, problem.b
        init = []
        for bd in problem.boundaries:
            r = bd.left if bd.free else bd.right
            init.append(lambda t, l=bd.left, r=r: l + (r - l) * (t - a) / (b - a))
    x0 = problem.trajectory(init, _margin(doc))
    options = _solve_options(doc, args.tol)
    d = _out_dir(args)
    try:
        result = extremize(problem, x0, options)
    except MaxIterationsExceeded as exc:
        sys.stdout.write(io.dumps(_write_solution(d, exc.result)))
        raise CliError(EXIT_MAX_ITER, str(exc)) from None
    sys.stdout.write(io.dumps(_write_solution(d, result)))
    return EXIT_OK if result.certified else EXIT_NOT_CERTIFIED


def cmd_study(args) -> int:
    ladder = _ladder(args.ladder)
    kind = args.kind
    if kind == "el":
        if args.problem is None:
            raise CliError(EXIT_INPUT, "an el study needs a problem file")
        doc = load_problem_file(args.problem)
        problem = build_problem(doc)
        init = _initial(doc, problem)
        if init is None:
            raise ProblemError("an el study needs an initial expression in the problem file")
        if ladder is None:
            ladder = doc["scale"].get("ladder")
        if ladder is None:
            raise CliError(EXIT_INPUT, "give --ladder or scale.ladder in the problem file")
        result = studies.el_study(problem, init, ladder, args.threads)
    else:
        if args.problem is not None:
            raise CliError(EXIT_INPUT, f"a {kind} study reads signals, not a problem file")
        if ladder is None:
            if args.step is None:
                raise CliError(EXIT_INPUT, "--step is required to build the default ladder")
            from herglotz.scale import dyadic_ladder
            ladder = dyadic_ladder(args.step)
        step = args.step
        margin = 0 if step is None else _nodes(max(ladder), step)
        f = _input_signal(args, margin)
        if kind == "leibniz":
            g = _input_signal(args, margin, "2")
            result = studies.leibniz_study(f, g, ladder, args.threads)
        elif kind == "barrow":
            result = studies.barrow_study(f, ladder, args.threads)
        else:
            result = studies.imag_study(f, ladder, args.threads)
    d = _out_dir(args)
    text = io.study_csv(result.hs, result.values, result.slope, None if d is None else d / "study.csv")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_holder(args) -> int:
    f = _input_signal(args, 0)
    est = holder_exponent(f)
    body = {"alpha_hat": est.alpha_hat, "slope": est.slope, "r_squared": est.r_squared,
            "regression_points": [list(p) for p in est.regression_points]}
    d = _out_dir(args)
    if d is not None:
        io.write_json(d / "holder.json", body)
    sys.stdout.write(io.dumps(body))
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _add_signal_args(p: argparse.ArgumentParser, second: bool = False) -> None:
    p.add_argument("--expr", help="expression in t sampled on the grid")
    p.add_argument("--csv", help="signal CSV with columns t,re,im (grid from the .json sidecar)")
    p.add_argument("--weierstrass", metavar="AMP,FREQ[,TERMS]", help="Weierstrass test signal")
    if second:
        p.add_argument("--expr2", help="second signal as an expression")
        p.add_argument("--csv2", help="second signal as a CSV file")
        p.add_argument("--weierstrass2", metavar="AMP,FREQ[,TERMS]", help="second Weierstrass signal")
    p.add_argument("--a", type=float, help="left end of the interval")
    p.add_argument("--b", type=float, help="right end of the interval")
    p.add_argument("--step", type=float, help="grid step")


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="herglotz", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--tol", type=float, default=None, help="certification tolerance")
    parser.add_argument("--out-dir", default=None, help="directory for output files")
    parser.add_argument("--threads", type=_positive_int, default=None,
                        help="worker threads for studies (default: $HERGLOTZ_THREADS or 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive", help="apply the scale derivative to a signal")
    _add_signal_args(p)
    p.add_argument("--h", type=float, required=True, help="scale step")
    p.add_argument("--order", type=int, default=1, help="number of compositions (default 1)")
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.FIXED_H.value)
    p.add_argument("--ladder", help="comma-separated h values for extrapolated mode")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("residual", help="certify a trajectory against the necessary condition")
    p.add_argument("problem", help="problem JSON file")
    p.add_argument("--trajectory", help="trajectory CSV with columns t,x1,...")
    p.set_defaults(func=cmd_residual)

    p = sub.add_parser("solve", help="extremize z(b) for a scalar or vector problem")
    p.add_argument("problem", help="problem JSON file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("study", help="sweep an h-ladder and fit a log-log slope")
    p.add_argument("problem", nargs="?", help="problem JSON file (el studies)")
    p.add_argument("--kind", choices=["el", "leibniz", "barrow", "imag"], default="el")
    p.add_argument("--ladder", help="comma-separated decreasing h values")
    _add_signal_args(p, second=True)
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("holder", help="estimate the Hölder exponent of a signal")
    _add_signal_args(p)
    p.set_defaults(func=cmd_holder)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.tol is not None and not args.tol > 0:
        parser.error("--tol must be positive")
    if args.threads is None:
        try:
            studies.thread_count()
        except ValueError:
            parser.error("HERGLOTZ_THREADS must be a positive integer")
    try:
        return args.func(args)
    except CliError as exc:
        code, msg = exc.code, str(exc)
    except (ExprError, ProblemError) as exc:
        code, msg = EXIT_INPUT, f"{type(exc).__name__}: {exc}"
    except (PreconditionError, EvaluationError, SolverError) as exc:
        code, msg = EXIT_PRECONDITION, f"{type(exc).__name__}: {exc}"
    print(f"herglotz: error: {msg}", file=sys.stderr)
    return code
