"""Experiment engine: seeded sweeps over measurement counts, CSV reporting,
scaling-law fits, and flip-robustness comparisons.

Cells are fully determined by (base_seed, m, trial): per-cell seeds come from
numpy's SeedSequence entropy mixing of those integers, which is stable across
platforms, so any cell can be reproduced in isolation and runs parallelize
without affecting output. Results are sorted before writing, and wall times
are zeroed in files by default so that repeated runs are byte-identical.
"""

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .decoders import (LsDecoderConfig, biht_decode, estimation_error, ls_decode,
                       pv_convex_decode)
from .errors import DivergenceError, ObgcsError
from .generator import forward, lipschitz_upper_bound, synth_generator
from .measurement import CovarianceSpec, observe, sample_ensemble, sigma_norm
from .serialization import load_generator
from .util import derive_seed, fmt17, rng_for

CSV_HEADER = "m,decoder,trial,seed,l2_err,cosine,per_pixel,runtime_s,converged"
KNOWN_DECODERS = ("ls", "biht", "pv")


@dataclass
class ExperimentGrid:
    """Sweep specification: which decoders to run at which m, how often."""

    generator: dict | str
    m_values: list
    sigma: float = 0.1
    q: float = 0.97
    nu: float = 0.3
    trials_per_cell: int = 10
    decoders: tuple = ("ls",)
    base_seed: int = 0
    output_path: str | None = None
    ls_restarts: int = 10
    ls_steps: int = 1000
    ls_lambda: float = 1e-3
    ls_step_size: float | None = None
    biht_s: int = 10
    biht_iters: int = 100
    biht_step: float = 1.0
    pv_s: float = 3.0
    pv_iters: int = 100
    pv_step: float = 1.0
    workers: int | None = None
    record_runtime: bool = False

    def __post_init__(self):
        self.m_values = [int(m) for m in self.m_values]
        if not self.m_values or any(m < 1 for m in self.m_values):
            raise ValueError("m_values must be nonempty positive integers")
        if self.trials_per_cell < 1:
            raise ValueError("need at least one trial per cell")
        self.decoders = tuple(self.decoders)
        if not self.decoders or any(d not in KNOWN_DECODERS for d in self.decoders):
            raise ValueError(f"decoders must be a nonempty subset of {KNOWN_DECODERS}")

    def make_generator(self):
        if isinstance(self.generator, str):
            return load_generator(self.generator)
        spec = dict(self.generator)
        return synth_generator(
            k=spec["k"], n=spec["n"], hidden_dims=spec.get("hidden_dims", ()),
            seed=spec.get("seed", 0), scale=spec.get("scale", 1.0),
            unit_sphere=spec.get("unit_sphere", False),
            final_activation=spec.get("final_activation", "identity"))


@dataclass
class CellResult:
    """One decoder run inside one cell of the sweep."""

    m: int
    decoder: str
    trial: int
    seed: int
    l2_err: float
    cosine: float
    per_pixel: float
    runtime_s: float
    converged: bool


def _run_cell(grid, net, m, trial):
    """All requested decoders on one freshly sampled (ensemble, truth, y)."""
    cell_seed = derive_seed(grid.base_seed, m, trial)
    cov = CovarianceSpec.identity(net.signal_dim) if grid.nu == 0.0 else \
        CovarianceSpec.toeplitz(net.signal_dim, grid.nu)
    ens = sample_ensemble(m, cov, grid.sigma, grid.q, cell_seed)
    rng = rng_for(grid.base_seed, m, trial, 1)
    z_star = rng.standard_normal(net.latent_dim)
    x_star = forward(net, z_star)
    nrm = sigma_norm(cov, x_star)
    if nrm == 0.0:
        raise ObgcsError("sampled ground truth has zero covariance norm")
    x_star = x_star / nrm
    obs = observe(ens, x_star, cell_seed)

    results = []
    for name in grid.decoders:
        start = time.perf_counter()
        converged = True
        try:
            if name == "ls":
                cfg = LsDecoderConfig(
                    mode="lagrangian", lam=grid.ls_lambda,
                    restarts=grid.ls_restarts, steps_per_restart=grid.ls_steps,
                    step_size=grid.ls_step_size,
                    seed=derive_seed(grid.base_seed, m, trial, 2),
                )
                x_hat = ls_decode(obs, ens, net, cfg).x_hat
            elif name == "biht":
                x_hat = biht_decode(obs, ens, s=grid.biht_s,
                                    iters=grid.biht_iters, step=grid.biht_step)
            else:
                x_hat = pv_convex_decode(obs, ens, s_ell1=grid.pv_s,
                                         iters=grid.pv_iters, step=grid.pv_step)
            err = estimation_error(x_hat, x_star, grid.sigma, grid.q)
        except (DivergenceError, ZeroDivisionError):
            converged = False
            err = {"l2_err_vs_c_xstar": math.nan, "cosine": math.nan,
                   "per_pixel": math.nan}
        elapsed = time.perf_counter() - start
        results.append(CellResult(
            m=m, decoder=name, trial=trial, seed=cell_seed,
            l2_err=err["l2_err_vs_c_xstar"], cosine=err["cosine"],
            per_pixel=err["per_pixel"], runtime_s=elapsed, converged=converged))
    return results


def _run_cell_star(args):
    return _run_cell(*args)


def run_grid(grid, progress=None):
    """Run every (m, trial) cell; returns CellResults sorted by (m, decoder, trial).

    Decoder divergence is recorded as converged=False with NaN errors, never
    fatal. With ``workers`` > 1 cells run in separate processes; ordering and
    values do not depend on the worker count.
    """
    net = grid.make_generator()
    lipschitz_upper_bound(net)  # cache once so workers do not redo it
    cells = [(grid, net, m, trial)
             for m in grid.m_values for trial in range(grid.trials_per_cell)]
    results = []
    workers = grid.workers
    if workers is not None and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, batch in enumerate(pool.map(_run_cell_star, cells, chunksize=1)):
                results.extend(batch)
                if progress:
                    progress(i + 1, len(cells))
    else:
        for i, cell in enumerate(cells):
            results.extend(_run_cell(*cell))
            if progress:
                progress(i + 1, len(cells))
    results.sort(key=lambda r: (r.m, r.decoder, r.trial))
    if grid.output_path:
        write_csv(results, grid.output_path, record_runtime=grid.record_runtime)
    return results


def write_csv(results, path, record_runtime=False):
    """Write results under the documented header, floats at 17 significant
    digits. Runtimes are written as 0 unless ``record_runtime`` so identical
    runs produce byte-identical files."""
    lines = [CSV_HEADER]
    for r in results:
        runtime = r.runtime_s if record_runtime else 0.0
        lines.append(",".join([
            str(r.m), r.decoder, str(r.trial), str(r.seed),
            fmt17(r.l2_err), fmt17(r.cosine), fmt17(r.per_pixel),
            fmt17(runtime), "true" if r.converged else "false",
        ]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path):
    """Read a results file written by write_csv."""
    out = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header: {header}")
        for line in fh:
            if not line.strip():
                continue
            m, dec, trial, seed, l2, cos, pp, rt, conv = line.strip().split(",")
            out.append(CellResult(
                m=int(m), decoder=dec, trial=int(trial), seed=int(seed),
                l2_err=float(l2), cosine=float(cos), per_pixel=float(pp),
                runtime_s=float(rt), converged=conv == "true"))
    return out


def _medians_by_m(results, decoder):
    by_m = {}
    for r in results:
        if r.decoder == decoder and r.converged and math.isfinite(r.l2_err):
            by_m.setdefault(r.m, []).append(r.l2_err)
    return {m: float(np.median(v)) for m, v in by_m.items()}


def fit_scaling(results, decoder):
    """Least-squares slope of log(median error) against log(m).

    Medians are per-m over converged trials; zero or negative medians are
    excluded. Needs at least 3 usable m values with at least 3 trials each.
    """
    by_m = {}
    for r in results:
        if r.decoder == decoder and r.converged and math.isfinite(r.l2_err):
            by_m.setdefault(r.m, []).append(r.l2_err)
    pts = []
    for m, errs in sorted(by_m.items()):
        if len(errs) < 3:
            continue
        med = float(np.median(errs))
        if med > 0:
            pts.append((math.log(m), math.log(med)))
    if len(pts) < 3:
        raise ValueError(f"need >= 3 usable m values with >= 3 trials each, got {len(pts)}")
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    slope, intercept = np.polyfit(xs, ys, 1)
    pred = slope * xs + intercept
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return {"decoder": decoder, "slope": float(slope),
            "intercept": float(intercept), "r2": r2, "points": len(pts)}


def flip_robustness_report(results_noflip, results_flip):
    """Per (m, decoder) ratio of flipped to unflipped median error.

    The two result sets must cover the same (m, decoder) cells. Also flags,
    per m, whether the ls ratio is at most the biht ratio (the qualitative
    robustness comparison).
    """
    rows = []
    decoders = sorted({r.decoder for r in results_noflip})
    if decoders != sorted({r.decoder for r in results_flip}):
        raise ValueError("grids ran different decoders")
    ms = sorted({r.m for r in results_noflip})
    if ms != sorted({r.m for r in results_flip}):
        raise ValueError("grids ran different m values")
    for dec in decoders:
        base = _medians_by_m(results_noflip, dec)
        flip = _medians_by_m(results_flip, dec)
        if set(base) != set(flip) or set(base) != set(ms):
            raise ValueError(f"decoder {dec}: cells do not match between grids")
        for m in ms:
            rows.append({"m": m, "decoder": dec,
                         "median_noflip": base[m], "median_flip": flip[m],
                         "ratio": flip[m] / base[m] if base[m] > 0 else math.inf})
    report = {"rows": rows}
    if "ls" in decoders and "biht" in decoders:
        ls = {r["m"]: r["ratio"] for r in rows if r["decoder"] == "ls"}
        bi = {r["m"]: r["ratio"] for r in rows if r["decoder"] == "biht"}
        flags = {m: ls[m] <= bi[m] for m in ms}
        report["ls_ratio_le_biht"] = flags
        report["ls_better_fraction"] = sum(flags.values()) / len(flags)
    return report
