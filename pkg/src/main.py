"""
Command-line front end.

    python main.py validate data/fig1.ccdfg
    python main.py run data/fig1.ccdfg --iterations 3 --zero-init --trace
    python main.py pipeline data/fig1.ccdfg --interval 1 --output fig1.pipelined.ccdfg
    python main.py check-equiv data/fig1.ccdfg --interval 1 --kmax 8 --samples 20
    python main.py check-invariant data/fig1.ccdfg --interval 1
    python main.py serve

Exit codes: 0 success, 1 domain failure (violations, execution errors, failed
checks, no pipeline), 2 usage or parse failure.
"""
import argparse
import json
import os
import sys
from math import ceil
from typing import List, Optional

from pydantic import ValidationError

from core import API_PORT, DEFAULT_K_MAX, DEFAULT_MEMORY_WORDS, DEFAULT_SAMPLES, DEFAULT_SEED
from archive import backup_reports
from corpus import load_corpus
from equiv import in_order, pass_matrix, sweep, zero_state
from errors import CcdfgError, CcdfgSyntaxError, ExecutionError, RangeError, SemanticError, SynthesisError
from interp import Trace, run_ccdfg, run_pipelined
from logger import logger
from models import CliConfig
from synth import pipeline
from textio import CcdfgDocument, parse_ccdfg, parse_state, serialize_ccdfg, serialize_state
from validators import validate_pipelinable

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

COMMANDS = ("validate", "run", "pipeline", "check-equiv", "check-invariant", "serve")


class UsageError(Exception):
    pass


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _non_negative(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return value


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser; every design command shares one set of options."""
    parser = argparse.ArgumentParser(
        prog="ccdfg",
        description="Validate, run, pipeline and check CCDFG loop designs.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__.split("\n\n")[1],
    )
    options = argparse.ArgumentParser(add_help=False)
    options.add_argument("input_path", metavar="INPUT", help="design file (validate also accepts a directory)")
    options.add_argument("--state", dest="state_path", metavar="FILE", help="initial state (.cstate)")
    options.add_argument("--zero-init", action="store_true",
                         help="bind every live-in variable and memory word to 0")
    options.add_argument("--memory-words", type=_positive, default=DEFAULT_MEMORY_WORDS,
                         help="memory words per pointer region for generated states "
                              "(check sweeps use at least KMAX plus the iterations in flight)")
    options.add_argument("--interval", type=_positive, help="pipeline interval")
    options.add_argument("--iterations", type=_non_negative, default=1, help="completed loop iterations")
    options.add_argument("--kmax", dest="k_max", type=_positive, default=DEFAULT_K_MAX,
                         help="check k = 1..KMAX full stages")
    options.add_argument("--samples", type=_positive, default=DEFAULT_SAMPLES, help="random states per k")
    options.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed of the first random state")
    options.add_argument("--trace", action="store_true", help="print the cycle trace")
    options.add_argument("--output", metavar="FILE", help="write the result here instead of stdout")
    options.add_argument("--format", choices=("text", "machine-readable"), default="text")
    options.add_argument("--pipelined-input", metavar="FILE",
                         help="check this pipelined design instead of the synthesized one")
    options.add_argument("--archive", metavar="FILE", help="save the check reports as AVRO")

    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("validate", parents=[options], help="check the pipelinable-loop restrictions")
    commands.add_parser("run", parents=[options], help="execute a sequential or pipelined design")
    commands.add_parser("pipeline", parents=[options], help="generate the reference pipelined design")
    commands.add_parser("check-equiv", parents=[options], help="co-execute pipeline and source end to end")
    commands.add_parser("check-invariant", parents=[options], help="check the full-stage invariant")
    serve = commands.add_parser("serve", help="start the HTTP API")
    serve.add_argument("--port", type=_positive, default=API_PORT)
    return parser


# Output helpers

def _emit(cfg: CliConfig, text: str) -> None:
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as f:
            f.write(text)
        logger.info(f"Result written to {cfg.output}")
    else:
        sys.stdout.write(text)


def _emit_document(cfg: CliConfig, document: dict) -> None:
    _emit(cfg, json.dumps(document, indent=2, sort_keys=True) + "\n")


def _machine(cfg: CliConfig) -> bool:
    return cfg.format == "machine-readable"


def _read_document(path: str) -> CcdfgDocument:
    with open(path, "rb") as f:
        return parse_ccdfg(f.read())


def _read_sequential(path: str):
    document = _read_document(path)
    if document.pipelined:
        raise UsageError(f"{path} is a pipelined design; expected a sequential one")
    return document


# Commands

def cmd_validate(cfg: CliConfig) -> int:
    if os.path.isdir(cfg.input_path):
        records = load_corpus(cfg.input_path)
        if _machine(cfg):
            _emit_document(cfg, {"command": "validate", "files": records})
        else:
            _emit(cfg, "".join(
                f"{r['file']}: {r['status']}" + (f" {r['detail']}" if "detail" in r else "") + "\n"
                for r in records
            ))
        return EXIT_OK if all(r["status"] == "OK" for r in records) else EXIT_FAILURE

    diagnostics = validate_pipelinable(_read_sequential(cfg.input_path).design)
    if _machine(cfg):
        _emit_document(cfg, {"command": "validate", "pipelinable": not diagnostics,
                             "diagnostics": [d.model_dump() for d in diagnostics]})
    elif diagnostics:
        _emit(cfg, "".join(f"{d}\n" for d in diagnostics))
    else:
        _emit(cfg, f"{cfg.input_path}: pipelinable\n")
    return EXIT_FAILURE if diagnostics else EXIT_OK


def cmd_run(cfg: CliConfig) -> int:
    document = _read_document(cfg.input_path)
    design = document.design
    if cfg.state_path:
        with open(cfg.state_path, "rb") as f:
            init = parse_state(f.read())
    elif document.pipelined:
        init = zero_state(design.steps(), None, cfg.memory_words)
    else:
        init = zero_state(design.steps(), design.pre[-1].label if design.pre else None, cfg.memory_words)

    trace = Trace()
    if document.pipelined:
        # m prologue supersteps and interval full-stage supersteps
        in_flight = ceil(len(design.prologue) / len(design.fullstage))
        k = cfg.iterations - in_flight
        if k < 1:
            raise UsageError(f"a pipelined run completes at least {in_flight + 1} iterations, "
                             f"got --iterations {cfg.iterations}")
        state = run_pipelined(design, k, init, None, trace)
    else:
        state = run_ccdfg(design.pre, design.loop, design.post, cfg.iterations, init, None, trace)
    state = in_order(state)

    if _machine(cfg):
        result = {"command": "run", "iterations": cfg.iterations, "latency": trace.latency,
                  "state": state.model_dump(mode="json")}
        if cfg.trace:
            result["trace"] = [entry.model_dump(mode="json", exclude={"post_state"}) for entry in trace.entries]
        _emit_document(cfg, result)
        return EXIT_OK

    lines = [f"# {entry.to_line()}" for entry in trace.entries] if cfg.trace else []
    lines.append(f"# latency={trace.latency}")
    _emit(cfg, "\n".join(lines) + "\n" + serialize_state(state))
    return EXIT_OK


def _synthesis_failure(cfg: CliConfig, error: SynthesisError, prefix: str = "error") -> int:
    logger.warning(f"Pipeline not generated: {error.kind}: {error}")
    if _machine(cfg):
        _emit_document(cfg, {"command": cfg.command, "error": error.to_dict()})
    else:
        _emit(cfg, f"{prefix}: {error.kind}: {error}\n")
    return EXIT_FAILURE


def cmd_pipeline(cfg: CliConfig) -> int:
    document = _read_sequential(cfg.input_path)
    try:
        result = pipeline(document.design, cfg.interval)
    except SynthesisError as e:
        return _synthesis_failure(cfg, e)

    params = result.params
    meta = {**document.meta, "interval": str(params.interval), "m": str(params.m), "depth": str(params.depth)}
    text = serialize_ccdfg(CcdfgDocument(design=result.pipelined, meta=meta))
    if _machine(cfg):
        _emit_document(cfg, {"command": "pipeline", **params.model_dump(), "document": text})
    else:
        _emit(cfg, text)
    return EXIT_OK


def cmd_check(cfg: CliConfig) -> int:
    mode = "correctness" if cfg.command == "check-equiv" else "invariant"
    document = _read_sequential(cfg.input_path)
    try:
        result = pipeline(document.design, cfg.interval)
    except SynthesisError as e:
        return _synthesis_failure(cfg, e, "pipeline not generated; nothing to check")

    override = None
    if cfg.pipelined_input:
        override_document = _read_document(cfg.pipelined_input)
        if not override_document.pipelined:
            raise UsageError(f"{cfg.pipelined_input} is not a pipelined design")
        override = override_document.design

    reports = sweep(result, mode, cfg.k_max, cfg.samples, cfg.seed, cfg.memory_words, pipelined=override)
    if cfg.archive:
        backup_reports(reports, cfg.archive)
    failures = [r for r in reports if not r.passed]
    matrix = pass_matrix(reports)
    params = result.params

    if _machine(cfg):
        _emit_document(cfg, {
            "command": cfg.command,
            "mode": mode,
            "params": params.model_dump(),
            "seed": cfg.seed,
            "samples": cfg.samples,
            "passed": not failures,
            "matrix": {str(k): {"passed": int(row["passed"]), "total": int(row["total"])}
                       for k, row in matrix.iterrows()},
            "reports": [r.to_line() for r in reports],
            "first_failure": failures[0].model_dump(mode="json") if failures else None,
        })
    else:
        lines = [
            f"{mode} interval={params.interval} m={params.m} depth={params.depth} "
            f"k=1..{cfg.k_max} samples={cfg.samples} seed={cfg.seed}",
            matrix.to_string(),
            f"{len(reports) - len(failures)}/{len(reports)} passed",
        ]
        if failures:
            lines.append(f"first failure: {failures[0].to_line()}")
        _emit(cfg, "\n".join(lines) + "\n")
    return EXIT_FAILURE if failures else EXIT_OK


def cmd_serve(port: int) -> int:
    from api import serve
    serve(port)
    return EXIT_OK


HANDLERS = {
    "validate": cmd_validate,
    "run": cmd_run,
    "pipeline": cmd_pipeline,
    "check-equiv": cmd_check,
    "check-invariant": cmd_check,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    if args.command == "serve":
        return cmd_serve(args.port)

    try:
        cfg = CliConfig(**{k: v for k, v in vars(args).items() if v is not None})
    except ValidationError as e:
        for error in e.errors():
            print(f"usage error: {error['msg']}", file=sys.stderr)
        return EXIT_USAGE

    logger.info(f"Running {cfg.command} on {cfg.input_path}")
    try:
        return HANDLERS[cfg.command](cfg)
    except (CcdfgSyntaxError, SemanticError, RangeError) as e:
        print(f"{cfg.input_path}: {e.kind}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, OSError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ExecutionError as e:
        logger.warning(f"Execution failed: {e.kind}: {e}")
        if _machine(cfg):
            _emit_document(cfg, {"command": cfg.command, "error": e.to_dict()})
        else:
            _emit(cfg, f"error: {e.kind}: {e}\n")
        return EXIT_FAILURE
    except CcdfgError as e:
        logger.error(f"{cfg.command} failed: {e.kind}: {e}", exc_info=True)
        print(f"error: {e.kind}: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
