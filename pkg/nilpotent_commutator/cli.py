"""Batch command-line surface.

Exit codes: 0 success, 1 I/O, parse or spec errors, 2 input not nilpotent,
3 residual over budget, 4 dimension mismatch.
"""

import argparse
import asyncio
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any

import jsonschema

from .canonicalize import triangularize
from .construct import (
    ConstructionMode,
    RootMethod,
    commutator_residual,
    construct,
    verify_commutator,
)
from .linalg import (
    CommutatorError,
    InvalidSpec,
    ResidualTooLarge,
    Tolerances,
    read_matrix,
    singular_values,
    write_matrix,
)
from .scan import ScanConfig, default_workers, run_scan, write_scan_csv
from .testgen import GenSpec, gen_nilpotent, parse_decay

logger = logging.getLogger(__name__)

MAX_REPORTED_SINGULAR_VALUES = 64

_number = {"type": "number"}
_count = {"type": "integer", "minimum": 0}
_values = {"type": "array", "items": {"type": "number", "minimum": 0}, "maxItems": 64}

RUN_REPORT_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "RunReport",
    "type": "object",
    "properties": {
        "input_path": {"type": "string"},
        "dim": _count,
        "n": _count,
        "partition": {"type": "array", "items": _count},
        "pad": _count,
        "embed_dim": _count,
        "mode": {"enum": [m.value for m in ConstructionMode]},
        "exponent_t": _number,
        "residual_rel": _number,
        "norm_B": _number,
        "norm_C": _number,
        "max_witness_norm": _number,
        "singular_values_A": _values,
        "singular_values_B": _values,
        "singular_values_C": _values,
        "timing_ms": _number,
    },
    "required": [
        "input_path",
        "dim",
        "n",
        "partition",
        "pad",
        "embed_dim",
        "mode",
        "exponent_t",
        "residual_rel",
        "norm_B",
        "norm_C",
        "max_witness_norm",
        "singular_values_A",
        "singular_values_B",
        "singular_values_C",
        "timing_ms",
    ],
    "additionalProperties": False,
}


@dataclass(kw_only=True, frozen=True)
class RunReport:
    input_path: str
    dim: int
    n: int
    partition: list[int]
    pad: int
    embed_dim: int
    mode: str
    exponent_t: float
    residual_rel: float
    norm_B: float
    norm_C: float
    max_witness_norm: float
    singular_values_A: list[float]
    singular_values_B: list[float]
    singular_values_C: list[float]
    timing_ms: float

    def to_json(self) -> str:
        data = asdict(self)
        jsonschema.validate(data, RUN_REPORT_SCHEMA)
        return json.dumps(data, indent=2)

    def replace(self, **kwargs):
        """Returns a new RunReport with the given fields replaced."""
        return replace(self, **kwargs)


def _truncated(m) -> list[float]:
    return [float(s) for s in singular_values(m)[:MAX_REPORTED_SINGULAR_VALUES]]


def _tolerances(args: argparse.Namespace) -> Tolerances:
    tol = Tolerances.from_env()
    if args.tol is not None:
        tol = tol.replace(comm=args.tol)
    return tol


def cmd_factor(args: argparse.Namespace) -> int:
    tol = _tolerances(args)
    a = read_matrix(args.input)
    start = time.perf_counter()
    pair, witnesses = construct(
        triangularize(a, tol), ConstructionMode(args.mode), RootMethod(args.root), tol
    )
    verified = verify_commutator(a, pair, witnesses, tol)
    elapsed = (time.perf_counter() - start) * 1000

    report = RunReport(
        input_path=str(args.input),
        dim=a.shape[0],
        n=pair.n,
        partition=list(pair.form.partition.sizes),
        pad=pair.form.pad,
        embed_dim=pair.embed_dim,
        mode=pair.mode.value,
        exponent_t=pair.exponent,
        residual_rel=verified.residual_rel,
        norm_B=verified.norm_B,
        norm_C=verified.norm_C,
        max_witness_norm=verified.max_witness_norm,
        singular_values_A=_truncated(a),
        singular_values_B=_truncated(pair.B),
        singular_values_C=_truncated(pair.C),
        timing_ms=elapsed,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_matrix(out_dir / "B.mtx", pair.B)
    write_matrix(out_dir / "C.mtx", pair.C)
    (out_dir / "report.json").write_text(report.to_json())
    logger.info(
        "Factored %s (dim %d, n %d) in %s mode: residual %.3e",
        args.input,
        report.dim,
        report.n,
        report.mode,
        report.residual_rel,
    )
    if not verified.passed:
        raise ResidualTooLarge(
            f"Commutator residual {verified.residual_rel:.3e} exceeds {tol.comm:.1e}",
            residual=verified.residual_rel,
        )
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    tol = _tolerances(args)
    a, b, c = (read_matrix(path) for path in (args.a, args.b, args.c))
    residual = commutator_residual(a, b, c)
    sys.stdout.write(f"residual_rel {residual:.6e}\n")
    if residual > tol.comm:
        raise ResidualTooLarge(
            f"Commutator residual {residual:.3e} exceeds {tol.comm:.1e}", residual=residual
        )
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    try:
        text = Path(args.spec).read_text()
    except Exception as e:
        raise InvalidSpec(f"Ran into {e} while trying to read {args.spec}") from None
    spec = GenSpec.from_json(text)
    write_matrix(args.out, gen_nilpotent(spec))
    logger.info("Wrote %dx%d nilpotent of index %d to %s", spec.dim, spec.dim, spec.index, args.out)
    return 0


def _parse_n_range(text: str) -> tuple[int, ...]:
    low, sep, high = text.partition("..")
    try:
        bounds = (int(low), int(high)) if sep else (int(low), int(low))
    except ValueError:
        raise InvalidSpec(f"--n-range expects A..B, got {text!r}") from None
    if bounds[0] > bounds[1]:
        raise InvalidSpec(f"--n-range {text!r} is empty")
    return tuple(range(bounds[0], bounds[1] + 1))


def _parse_dims(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(d) for d in text.split(",") if d.strip())
    except ValueError:
        raise InvalidSpec(f"--dims expects a comma separated list, got {text!r}") from None


def cmd_scan(args: argparse.Namespace) -> int:
    config = ScanConfig(
        n_values=_parse_n_range(args.n_range),
        dims=_parse_dims(args.dims),
        trials=args.trials,
        seed=args.seed,
        workers=args.workers or default_workers(),
        timeout=args.timeout,
        tol=_tolerances(args),
        **parse_decay(args.decay),
    )
    rows = asyncio.run(run_scan(config))
    write_scan_csv(rows, args.out)
    # NaN residuals (failed or timed out trials) count as failures
    failed = [row for row in rows if not row.residual_rel <= config.tol.comm]
    if failed:
        sys.stderr.write(f"{len(failed)} of {len(rows)} trials did not pass\n")
        return ResidualTooLarge.exit_code
    return 0


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InvalidSpec(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="nilpotent_commutator",
        description="Write nilpotent matrices as single commutators A = BC - CB.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    commands = parser.add_subparsers(dest="command", required=True)

    factor = commands.add_parser("factor", help="factor a Matrix Market nilpotent")
    factor.add_argument("--input", type=Path, required=True)
    factor.add_argument(
        "--mode",
        choices=[m.value for m in ConstructionMode],
        default=ConstructionMode.THEOREM.value,
    )
    factor.add_argument(
        "--root", choices=[m.value for m in RootMethod], default=RootMethod.GRAM.value
    )
    factor.add_argument("--out-dir", type=Path, required=True)
    factor.add_argument("--tol", type=float)
    factor.set_defaults(handler=cmd_factor)

    verify = commands.add_parser("verify", help="check A = BC - CB for three matrices")
    verify.add_argument("a", type=Path)
    verify.add_argument("b", type=Path)
    verify.add_argument("c", type=Path)
    verify.add_argument("--tol", type=float)
    verify.set_defaults(handler=cmd_verify)

    gen = commands.add_parser("gen", help="generate a nilpotent from a JSON spec")
    gen.add_argument("--spec", type=Path, required=True)
    gen.add_argument("--out", type=Path, required=True)
    gen.set_defaults(handler=cmd_gen)

    scan = commands.add_parser("scan", help="measure achieved exponents over a grid")
    scan.add_argument("--n-range", required=True)
    scan.add_argument("--decay", default="none")
    scan.add_argument("--dims", required=True)
    scan.add_argument("--trials", type=int, default=5)
    scan.add_argument("--seed", type=int, default=0)
    scan.add_argument("--out", type=Path, required=True)
    scan.add_argument("--workers", type=int)
    scan.add_argument(
        "--timeout", type=float, help="seconds per trial; trials then run in child processes"
    )
    scan.add_argument("--tol", type=float)
    scan.set_defaults(handler=cmd_scan)
    return parser


def _log_level(verbose: int) -> int | str:
    if verbose >= 2:
        return logging.DEBUG
    if verbose == 1:
        return logging.INFO
    return (os.getenv("NILCOMM_LOG_LEVEL") or "WARNING").upper()


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except CommutatorError as e:
        sys.stderr.write(f"{type(e).__name__}: {e.message}\n")
        return e.exit_code
    logging.basicConfig(
        level=_log_level(args.verbose),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except CommutatorError as e:
        sys.stderr.write(f"{type(e).__name__}: {e.message}\n")
        return e.exit_code
    except OSError as e:
        sys.stderr.write(f"{type(e).__name__}: {e}\n")
        return 1
