"""Monte Carlo comparison of the block-maxima and POT Pickands estimators."""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .copula import ArchimaxCopula, Copula, parse_copula
from .estimators import block_maxima, column_ranks, madogram_pickands, pot_pickands
from .generators import psi1, psi2, psi3
from .sampling import RngStream, sample_bivariate
from .stdf import Logistic

log = logging.getLogger(__name__)

BENCH_THETA = math.log(2.0) / math.log(1.5)
BENCH_BLOCK_GRID = tuple(range(1, 31))
BENCH_THRESHOLD_FRACS = tuple(round(0.01 * i, 2) for i in range(1, 41))
BENCH_SAMPLE_SIZES = (1000, 2000, 5000, 10000)


def bench_model_id(j: int) -> str:
    """Model id of the j-th piecewise-generator Archimax copula with the logistic L0."""
    return f"archimax:psi{j}:logistic:theta={BENCH_THETA!r}"


@dataclass
class ExperimentConfig:
    model: str
    n: int
    reps: int
    t: float = 0.5
    block_grid: Sequence[int] = BENCH_BLOCK_GRID
    threshold_fracs: Sequence[float] = BENCH_THRESHOLD_FRACS
    seed: int = 0
    truth: Optional[float] = None
    rank_convention: str = "k1"

    def __post_init__(self):
        self.block_grid = tuple(int(r) for r in self.block_grid)
        self.threshold_fracs = tuple(float(p) for p in self.threshold_fracs)
        if self.reps < 2:
            raise ValueError("reps must be >= 2")
        if not self.block_grid or not self.threshold_fracs:
            raise ValueError("tuning grids must be non-empty")
        if any(r < 1 or self.n // r < 2 for r in self.block_grid):
            raise ValueError("every block size must leave at least two blocks")
        if any(k < 1 or k > self.n for k in self.threshold_grid):
            raise ValueError("threshold grid entries must lie in [1, n]")
        if self.truth is None:
            self.truth = float(parse_copula(self.model).attractor().pickands(self.t))

    @property
    def threshold_grid(self) -> tuple:
        return tuple(int(math.floor(p * self.n + 1e-9)) for p in self.threshold_fracs)


@dataclass
class McSummary:
    """Per-(estimator, grid point) moments; ``variance`` uses the reps - 1 denominator."""

    estimator: list
    grid_param: list
    mean: np.ndarray
    variance: np.ndarray
    bias_sq: np.ndarray
    mse: np.ndarray
    config: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def select(self, estimator: str):
        mask = np.array([e == estimator for e in self.estimator])
        return (np.asarray(self.grid_param)[mask], self.mean[mask], self.variance[mask],
                self.bias_sq[mask], self.mse[mask])


def replicate(copula: Copula, cfg: ExperimentConfig, i: int) -> np.ndarray:
    """Estimates for replication i: BM over the block grid followed by POT over the threshold grid."""
    sample = sample_bivariate(copula, cfg.n, RngStream(cfg.seed, i))
    out = np.empty(len(cfg.block_grid) + len(cfg.threshold_grid))
    for a, r in enumerate(cfg.block_grid):
        out[a] = madogram_pickands(block_maxima(sample.data, r), cfg.t, cfg.rank_convention)
    ranks = column_ranks(sample.data)
    out[len(cfg.block_grid):] = pot_pickands(None, np.array(cfg.threshold_grid), cfg.t, ranks=ranks)
    return out


def _run_chunk(cfg: ExperimentConfig, start: int, stop: int) -> np.ndarray:
    copula = parse_copula(cfg.model)
    rows = np.empty((stop - start, len(cfg.block_grid) + len(cfg.threshold_grid)))
    for i in range(start, stop):
        try:
            rows[i - start] = replicate(copula, cfg, i)
        except ValueError as exc:
            log.warning("replication %d of %s aborted: %s", i, cfg.model, exc)
            rows[i - start] = np.nan
    return rows


def resolve_threads(threads: Optional[int] = None) -> int:
    if threads is None:
        threads = int(os.environ.get("THREADS", "1"))
    return max(1, int(threads))


def simulate(cfg: ExperimentConfig, threads: Optional[int] = None, chunk: int = 50) -> np.ndarray:
    """reps x grid matrix of estimates, identical for any number of workers."""
    threads = resolve_threads(threads)
    bounds = [(s, min(s + chunk, cfg.reps)) for s in range(0, cfg.reps, chunk)]
    if threads == 1:
        parts = [_run_chunk(cfg, a, b) for a, b in bounds]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_run_chunk, [cfg] * len(bounds), *zip(*bounds)))
    return np.vstack(parts)


def summarize(estimates: np.ndarray, cfg: ExperimentConfig, wall_time: float = 0.0) -> McSummary:
    ok = ~np.any(np.isnan(estimates), axis=1)
    if ok.sum() < 2:
        raise RuntimeError("fewer than two successful replications")
    est = estimates[ok]
    mean = est.mean(axis=0)
    # two-pass variance; bias^2 + variance is the reported MSE
    variance = ((est - mean) ** 2).sum(axis=0) / (est.shape[0] - 1)
    bias_sq = (mean - cfg.truth) ** 2
    nb = len(cfg.block_grid)
    labels = ["bm"] * nb + ["pot"] * len(cfg.threshold_grid)
    params = list(cfg.block_grid) + list(cfg.threshold_grid)
    conf = asdict(cfg)
    conf["threshold_grid"] = list(cfg.threshold_grid)
    conf["failed_reps"] = int((~ok).sum())
    return McSummary(labels, params, mean, variance, bias_sq, variance + bias_sq, conf, wall_time)


def run_mc(cfg: ExperimentConfig, threads: Optional[int] = None) -> McSummary:
    parse_copula(cfg.model)  # fail fast on unknown ids
    start = time.perf_counter()
    estimates = simulate(cfg, threads)
    return summarize(estimates, cfg, time.perf_counter() - start)


def relative_efficiency(summary: McSummary) -> float:
    """min MSE over block sizes divided by min MSE over thresholds; below 1 favours BM."""
    _, _, _, _, mse_b = summary.select("bm")
    _, _, _, _, mse_p = summary.select("pot")
    if mse_b.size == 0 or mse_p.size == 0:
        raise ValueError("summary needs both estimator families")
    den = mse_p.min()
    if den == 0:
        raise ZeroDivisionError("minimal POT MSE is zero")
    return float(mse_b.min() / den)


def optimal_point(summary: McSummary, estimator: str):
    """(grid parameter, variance, squared bias, MSE) at the MSE-minimising grid point."""
    grid, _, var, bias_sq, mse = summary.select(estimator)
    i = int(np.argmin(mse))
    return int(grid[i]), float(var[i]), float(bias_sq[i]), float(mse[i])


# -- output ---------------------------------------------------------------

CSV_COLUMNS = ("estimator", "grid_param", "mean", "variance", "bias_sq", "mse")


def write_manifest(out_dir: Path, subcommand: str, config: dict, seed, started: datetime,
                   extra: Optional[dict] = None) -> Path:
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "seed": seed,
        "tool_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "started": started.isoformat(),
        "finished": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        manifest.update(extra)
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def emit_results(summary: McSummary, out_dir, curves: bool = True, started: Optional[datetime] = None,
                 subcommand: str = "mc") -> list:
    """Write results.csv, manifest.json and optionally a gnuplot-ready curve file."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        written = [out_dir / "results.csv"]
        with open(written[0], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for i, (e, g) in enumerate(zip(summary.estimator, summary.grid_param)):
                w.writerow([e, g] + [repr(float(a[i])) for a in
                                     (summary.mean, summary.variance, summary.bias_sq, summary.mse)])
        written.append(write_manifest(
            out_dir, subcommand, summary.config, summary.config.get("seed"),
            started or datetime.now(timezone.utc),
            {"wall_time_s": summary.wall_time, "relative_efficiency": relative_efficiency(summary)},
        ))
        if curves:
            written.extend(_write_curves(summary, out_dir))
    except OSError as exc:
        raise OSError(f"cannot write results to {out_dir}: {exc}") from exc
    return written


def _write_curves(summary: McSummary, out_dir: Path) -> list:
    dat = out_dir / "curves.dat"
    with open(dat, "w") as fh:
        for est in ("bm", "pot"):
            grid, _, var, bias_sq, mse = summary.select(est)
            fh.write(f"# {est}: grid_param variance bias_sq mse\n")
            for row in zip(grid, var, bias_sq, mse):
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")
            fh.write("\n\n")
    gp = out_dir / "curves.gp"
    gp.write_text(
        "set multiplot layout 2,3\n"
        + "".join(
            f"set title '{est} {stat}'; plot 'curves.dat' index {idx} using 1:{col} with linespoints notitle\n"
            for idx, est in enumerate(("bm", "pot"))
            for col, stat in ((2, "variance"), (3, "squared bias"), (4, "MSE"))
        )
        + "unset multiplot\n"
    )
    return [dat, gp]


def read_results(path) -> McSummary:
    """Inverse of the results.csv writer (config is read from a sibling manifest when present)."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    cols = {c: np.array([float(r[c]) for r in rows]) for c in CSV_COLUMNS[2:]}
    config, wall = {}, 0.0
    manifest = path.with_name("manifest.json")
    if manifest.exists():
        data = json.loads(manifest.read_text())
        config, wall = data.get("config", {}), data.get("wall_time_s", 0.0)
    return McSummary([r["estimator"] for r in rows], [int(r["grid_param"]) for r in rows],
                     cols["mean"], cols["variance"], cols["bias_sq"], cols["mse"], config, wall)


def table1(sample_sizes=BENCH_SAMPLE_SIZES, reps: int = 3000, seed: int = 0,
           threads: Optional[int] = None, rank_convention: str = "k1") -> dict:
    """Relative efficiencies {n: {"psi1": RE, "psi2": RE, "psi3": RE}} for the three piecewise models."""
    out = {}
    for n in sample_sizes:
        out[n] = {}
        for j in (1, 2, 3):
            cfg = ExperimentConfig(bench_model_id(j), n, reps, seed=seed, truth=0.75,
                                   rank_convention=rank_convention)
            out[n][f"psi{j}"] = relative_efficiency(run_mc(cfg, threads))
    return out


def bench_models() -> dict:
    """The three Archimax copulas of the simulation study, keyed psi1..psi3."""
    l0 = Logistic(BENCH_THETA)
    return {g().id: ArchimaxCopula(g(), l0) for g in (psi1, psi2, psi3)}
