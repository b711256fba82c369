"""Exponent scan: factor generated families over a grid and record the decay."""

import asyncio
import csv
import json
import logging
import math
import os
import sys
from collections.abc import Iterable
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .analysis import DecayModel, exponent_report
from .canonicalize import triangularize
from .construct import (
    ConstructionMode,
    construct_theorem,
    guaranteed_exponent,
    verify_commutator,
)
from .linalg import CommutatorError, InvalidSpec, Tolerances
from .testgen import MAX_SEED, DecayKind, GenSpec, gen_nilpotent

logger = logging.getLogger(__name__)

MIN_N, MAX_N = 4, 12
MAX_EMBED_DIM = 512


def default_workers() -> int:
    return int(os.getenv("NILCOMM_SCAN_WORKERS") or 0) or os.cpu_count() or 1


@dataclass(kw_only=True, frozen=True)
class ScanRow:
    n: int
    dim: int
    trial: int
    guaranteed_t: float
    achieved_B: float
    achieved_C: float
    domination_constant: float
    residual_rel: float
    status: str

    @property
    def ok(self) -> bool:
        return self.status == "ok"


SCAN_HEADER = [f.name for f in fields(ScanRow)]


@dataclass(kw_only=True, frozen=True)
class ScanConfig:
    n_values: tuple[int, ...]
    dims: tuple[int, ...]
    trials: int
    seed: int = 0
    decay: DecayKind = DecayKind.NONE
    rho: float | None = None
    alpha: float | None = None
    workers: int = field(default_factory=default_workers)
    timeout: float | None = None  # seconds, per trial
    tol: Tolerances = field(default_factory=Tolerances.from_env)

    def __post_init__(self):
        if not self.n_values or any(not MIN_N <= n <= MAX_N for n in self.n_values):
            raise InvalidSpec(f"n values must lie in [{MIN_N}, {MAX_N}], got {self.n_values}")
        if not self.dims:
            raise InvalidSpec("At least one dimension is required")
        if self.trials < 1:
            raise InvalidSpec(f"Trials must be positive, got {self.trials}")
        if self.workers < 1:
            raise InvalidSpec(f"Workers must be positive, got {self.workers}")
        for n in self.n_values:
            for dim in self.dims:
                if dim < n:
                    raise InvalidSpec(f"Dimension {dim} cannot hold a Jordan block of size {n}")
                if n * math.ceil(dim / n) > MAX_EMBED_DIM:
                    raise InvalidSpec(f"n = {n}, dim = {dim} exceeds embedding size {MAX_EMBED_DIM}")
        if self.seed < 0 or self.seed + self.trials - 1 > MAX_SEED:
            raise InvalidSpec(
                f"Seeds {self.seed}..{self.seed + self.trials - 1} leave [0, {MAX_SEED}]"
            )
        # validates the decay parameters
        self.family_spec(self.n_values[0], self.dims[0], 0)

    @property
    def model(self) -> DecayModel:
        if self.decay == DecayKind.POLYNOMIAL:
            return DecayModel.POLYNOMIAL
        return DecayModel.GEOMETRIC

    def family_spec(self, n: int, dim: int, trial: int) -> GenSpec:
        """Blocks of size n filling dim, conjugated, seeded by master seed + trial."""
        sizes = [n] * (dim // n) + ([dim % n] if dim % n else [])
        return GenSpec(
            jordan_sizes=tuple(sizes),
            decay=self.decay,
            rho=self.rho,
            alpha=self.alpha,
            conjugate=True,
            seed=self.seed + trial,
        )

    def grid(self) -> Iterable[tuple[int, int, int]]:
        for n in self.n_values:
            for dim in self.dims:
                for trial in range(self.trials):
                    yield n, dim, trial


def _failed_row(n: int, dim: int, trial: int, status: str, residual: float = math.nan) -> ScanRow:
    return ScanRow(
        n=n,
        dim=dim,
        trial=trial,
        guaranteed_t=guaranteed_exponent(n, ConstructionMode.THEOREM),
        achieved_B=math.nan,
        achieved_C=math.nan,
        domination_constant=math.nan,
        residual_rel=residual,
        status=status,
    )


def run_trial(config: ScanConfig, n: int, dim: int, trial: int) -> ScanRow:
    """Generate, factor in theorem mode, verify and measure one instance."""
    tol = config.tol
    try:
        a = gen_nilpotent(config.family_spec(n, dim, trial))
        pair, witnesses = construct_theorem(triangularize(a, tol), tol=tol)
        verified = verify_commutator(a, pair, witnesses, tol)
    except CommutatorError as e:
        logger.warning("Trial n=%d dim=%d #%d failed: %s", n, dim, trial, e.message)
        return _failed_row(n, dim, trial, type(e).__name__)

    try:
        report = exponent_report(a, pair, config.model, tol)
    except CommutatorError as e:
        logger.warning("Trial n=%d dim=%d #%d has no exponent report: %s", n, dim, trial, e.message)
        return _failed_row(n, dim, trial, type(e).__name__, verified.residual_rel)

    return ScanRow(
        n=n,
        dim=dim,
        trial=trial,
        guaranteed_t=report.guaranteed_t,
        achieved_B=report.achieved_B,
        achieved_C=report.achieved_C,
        domination_constant=report.domination_constant,
        residual_rel=verified.residual_rel,
        status="ok" if verified.passed else "residual",
    )


def worker_command() -> list[str]:
    """Command line of a child process that runs one trial from stdin."""
    return [sys.executable, "-m", __name__]


def _worker_env() -> dict[str, str]:
    root = str(Path(__file__).resolve().parents[1])
    path = os.pathsep.join(p for p in (root, os.getenv("PYTHONPATH")) if p)
    return {**os.environ, "PYTHONPATH": path}


def _encode_job(config: ScanConfig, n: int, dim: int, trial: int) -> bytes:
    return json.dumps({"config": asdict(config), "point": [n, dim, trial]}).encode()


def _decode_job(data: bytes) -> tuple[ScanConfig, int, int, int]:
    job = json.loads(data)
    raw = job["config"]
    config = ScanConfig(
        **{
            **raw,
            "n_values": tuple(raw["n_values"]),
            "dims": tuple(raw["dims"]),
            "decay": DecayKind(raw["decay"]),
            "tol": Tolerances(**raw["tol"]),
        }
    )
    n, dim, trial = job["point"]
    return config, n, dim, trial


async def _run_in_process(config: ScanConfig, n: int, dim: int, trial: int) -> ScanRow:
    """Run one trial in a child process, killing it once the timeout passes."""
    process = await asyncio.create_subprocess_exec(
        *worker_command(),
        stdin=asyncio.subprocess.PIPE,
        stdout=asyncio.subprocess.PIPE,
        env=_worker_env(),
    )
    try:
        stdout, _ = await asyncio.wait_for(
            process.communicate(_encode_job(config, n, dim, trial)), timeout=config.timeout
        )
    except asyncio.TimeoutError:
        try:
            process.kill()
        except ProcessLookupError:
            pass
        await process.wait()
        logger.warning(
            "Trial n=%d dim=%d #%d killed after %s seconds", n, dim, trial, config.timeout
        )
        return _failed_row(n, dim, trial, "Timeout")

    try:
        return ScanRow(**json.loads(stdout))
    except (ValueError, TypeError) as e:
        logger.warning(
            "Trial n=%d dim=%d #%d worker exited with %s: %s",
            n,
            dim,
            trial,
            process.returncode,
            e,
        )
        return _failed_row(n, dim, trial, "WorkerFailed")


async def run_scan(config: ScanConfig) -> list[ScanRow]:
    """Run every grid point concurrently; rows come back sorted by (n, dim, trial).

    At most `config.workers` trials run at once. Without a timeout they run
    on worker threads; with one, each trial gets its own child process.
    """
    semaphore = asyncio.Semaphore(config.workers)

    async def one(n: int, dim: int, trial: int) -> ScanRow:
        async with semaphore:
            if config.timeout is None:
                return await asyncio.to_thread(run_trial, config, n, dim, trial)
            return await _run_in_process(config, n, dim, trial)

    rows = await asyncio.gather(*(one(*point) for point in config.grid()))
    logger.info("Scan finished: %d rows, %d ok", len(rows), sum(row.ok for row in rows))
    return sorted(rows, key=lambda row: (row.n, row.dim, row.trial))


def write_scan_csv(rows: Iterable[ScanRow], path: Path | str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=SCAN_HEADER)
        writer.writeheader()
        for row in rows:
            writer.writerow(asdict(row))


def _trial_main() -> None:
    logging.basicConfig(
        level=(os.getenv("NILCOMM_LOG_LEVEL") or "WARNING").upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    row = run_trial(*_decode_job(sys.stdin.buffer.read()))
    sys.stdout.write(json.dumps(asdict(row)))


if __name__ == "__main__":
    _trial_main()
