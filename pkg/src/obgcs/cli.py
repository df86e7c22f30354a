"""Command-line interface.

Subcommands: synth-gen, measure, decode, grid, fit, validate, memorize.
Every subcommand accepts --seed, --config <file>, --out <path>, and --quiet.
Configs are flat key=value text files ('#' starts a comment); keys are
documented per subcommand in the README. Exit codes: 0 success, 1 usage or
input error, 2 numerical failure.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import harness, memorizer, theory
from .decoders import LsDecoderConfig, biht_decode, estimation_error, ls_decode, pv_convex_decode
from .errors import (CapacityError, DegenerateConeError, DimensionMismatchError,
                     DivergenceError, MalformedFileError, NonFiniteError,
                     NotSpdError, ObgcsError, ShapeError)
from .generator import forward, lipschitz_upper_bound, synth_generator
from .measurement import CovarianceSpec, observe, sample_ensemble, sigma_norm
from .serialization import (load_ensemble, load_generator, load_observation,
                            save_ensemble, save_generator, save_observation)
from .util import derive_seed, dumps17, rng_for


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def parse_config(path):
    """Flat key=value config file; values auto-typed (int/float/bool/list/str)."""
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            cfg[key] = _auto_type(val)
    return cfg


def _auto_type(val):
    if "," in val:
        return [_auto_type(v.strip()) for v in val.split(",") if v.strip()]
    low = val.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(val)
        except ValueError:
            pass
    return val


def _emit(args, text):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _progress(args):
    if args.quiet:
        return None
    return lambda done, total: print(f"\r{done}/{total} cells", end="", file=sys.stderr,
                                     flush=True)


def _note(args, msg):
    if not args.quiet:
        print(msg, file=sys.stderr)


# ------------------------------------------------------------- subcommands

def _cmd_synth_gen(args, cfg):
    net = synth_generator(
        k=cfg.get("k", 5), n=cfg.get("n", 100),
        hidden_dims=_as_list(cfg.get("hidden_dims", [])),
        seed=args.seed, scale=cfg.get("scale", 1.0),
        unit_sphere=cfg.get("unit_sphere", False))
    out = args.out or "generator.bin"
    save_generator(net, out)
    _note(args, f"wrote generator {net.layer_dims} to {out}")
    print(dumps17({"layer_dims": net.layer_dims, "path": out,
                   "lipschitz_bound": lipschitz_upper_bound(net)}))
    return 0


def _as_list(v):
    if isinstance(v, list):
        return v
    if v in ("", None):
        return []
    return [v]


def _cov_from_cfg(cfg, n):
    nu = float(cfg.get("nu", 0.3))
    return CovarianceSpec.identity(n) if nu == 0.0 else CovarianceSpec.toeplitz(n, nu)


def _cmd_measure(args, cfg):
    if "gen" not in cfg:
        raise _UsageError("measure needs gen=<generator file> in the config")
    net = load_generator(cfg["gen"])
    cov = _cov_from_cfg(cfg, net.signal_dim)
    m = int(cfg.get("m", 100))
    ens = sample_ensemble(m, cov, float(cfg.get("sigma", 0.1)),
                          float(cfg.get("q", 0.97)), args.seed)
    rng = rng_for(args.seed, 1)
    x_star = forward(net, rng.standard_normal(net.latent_dim))
    x_star = x_star / sigma_norm(cov, x_star)
    obs = observe(ens, x_star, args.seed)
    prefix = args.out or "measurement"
    save_ensemble(ens, prefix + ".ens.bin")
    save_observation(obs, prefix + ".obs.bin")
    _note(args, f"wrote {prefix}.ens.bin and {prefix}.obs.bin")
    print(dumps17({"m": m, "n": net.signal_dim,
                   "flip_fraction": float(np.mean(obs.eta < 0)),
                   "ens": prefix + ".ens.bin", "obs": prefix + ".obs.bin"}))
    return 0


def _cmd_decode(args, cfg):
    for key in ("gen", "ens", "obs"):
        if key not in cfg:
            raise _UsageError(f"decode needs {key}=<file> in the config")
    net = load_generator(cfg["gen"])
    ens = load_ensemble(cfg["ens"])
    obs = load_observation(cfg["obs"])
    which = cfg.get("decoder", "ls")
    if which == "ls":
        dcfg = LsDecoderConfig(
            mode=cfg.get("mode", "lagrangian"),
            lam=float(cfg.get("lambda", 1e-3)),
            radius=float(cfg.get("radius", 1.0)),
            restarts=int(cfg.get("restarts", 10)),
            steps_per_restart=int(cfg.get("steps", 1000)),
            step_size=float(cfg["step_size"]) if "step_size" in cfg else None,
            seed=args.seed)
        res = ls_decode(obs, ens, net, dcfg)
        x_hat = res.x_hat
        extra = {"objective": res.objective, "restart_index": res.restart_index,
                 "iterations": res.iterations, "loss_trace": res.loss_trace,
                 "z_hat": res.z_hat.tolist()}
    elif which == "biht":
        x_hat = biht_decode(obs, ens, s=int(cfg.get("s", 10)),
                            iters=int(cfg.get("iters", 100)),
                            step=float(cfg.get("step", 1.0)))
        extra = {}
    elif which == "pv":
        x_hat = pv_convex_decode(obs, ens, s_ell1=float(cfg.get("s_ell1", 3.0)),
                                 iters=int(cfg.get("iters", 100)),
                                 step=float(cfg.get("step", 1.0)))
        extra = {}
    else:
        raise _UsageError(f"unknown decoder {which!r}")
    err = estimation_error(x_hat, obs.x_star, ens.sigma, ens.q)
    doc = {"decoder": which, "x_hat": x_hat.tolist(), **err, **extra}
    _emit(args, dumps17(doc))
    return 0


def _cmd_grid(args, cfg):
    gen = cfg.get("gen")
    if gen is None:
        gen = {"k": int(cfg.get("k", 5)), "n": int(cfg.get("n", 100)),
               "hidden_dims": _as_list(cfg.get("hidden_dims", [])),
               "seed": int(cfg.get("gen_seed", 0)),
               "scale": float(cfg.get("scale", 1.0))}
    grid = harness.ExperimentGrid(
        generator=gen,
        m_values=_as_list(cfg.get("m_values", [100, 200, 300])),
        sigma=float(cfg.get("sigma", 0.1)),
        q=float(cfg.get("q", 0.97)),
        nu=float(cfg.get("nu", 0.3)),
        trials_per_cell=int(cfg.get("trials", 10)),
        decoders=tuple(_as_list(cfg.get("decoders", ["ls"]))),
        base_seed=args.seed,
        output_path=args.out or "grid.csv",
        ls_restarts=int(cfg.get("ls_restarts", 10)),
        ls_steps=int(cfg.get("ls_steps", 1000)),
        ls_lambda=float(cfg.get("ls_lambda", 1e-3)),
        ls_step_size=float(cfg["ls_step_size"]) if "ls_step_size" in cfg else None,
        biht_s=int(cfg.get("biht_s", 10)),
        biht_iters=int(cfg.get("biht_iters", 100)),
        pv_s=float(cfg.get("pv_s", 3.0)),
        pv_iters=int(cfg.get("pv_iters", 100)),
        workers=int(cfg["workers"]) if "workers" in cfg else None,
        record_runtime=bool(cfg.get("record_runtime", False)),
    )
    results = harness.run_grid(grid, progress=_progress(args))
    if not args.quiet:
        print("", file=sys.stderr)
    _note(args, f"wrote {len(results)} rows to {grid.output_path}")
    return 0


def _cmd_fit(args, cfg):
    path = args.input or cfg.get("in")
    if not path:
        raise _UsageError("fit needs --in <csv> (or in=<csv> in the config)")
    results = harness.read_csv(path)
    rec = harness.fit_scaling(results, args.decoder or cfg.get("decoder", "ls"))
    _emit(args, dumps17(rec))
    return 0


def _cmd_validate(args, cfg):
    check = args.check
    seed = args.seed
    k = int(args.k or cfg.get("k", 4))
    n = int(cfg.get("n", 50))
    runs = int(args.runs or cfg.get("runs", 20))
    records = []
    if check == "srec":
        net = synth_generator(k=k, n=n, hidden_dims=[4 * k], seed=0)
        lip = lipschitz_upper_bound(net)
        delta = float(cfg.get("delta", 0.1))
        m = int(args.m or cfg.get("m", round(5 * k * math.log(lip / delta))))
        pairs = int(cfg.get("pairs", 10_000))
        cov = CovarianceSpec.identity(n)
        gamma = 0.5 * math.sqrt(cov.min_eigenvalue())
        ok = 0
        for run in range(runs):
            ens = sample_ensemble(m, cov, 0.0, 1.0, derive_seed(seed, run))
            rep = theory.check_srec(ens, net, gamma, delta, pairs, derive_seed(seed, run, 1))
            ok += rep.violations == 0
        records.append({"check": "srec", "seed": seed, "m": m, "k": k, "gamma": gamma,
                        "delta": delta, "pairs": pairs, "runs": runs,
                        "pass_rate": ok / runs, "pass": ok / runs >= 0.95})
    elif check == "jl":
        size = int(cfg.get("points", 40))
        epsilon = float(cfg.get("epsilon", 0.5))
        m = int(args.m or cfg.get("m", math.ceil(8 * math.log(size) / epsilon ** 2)))
        cov = CovarianceSpec.toeplitz(n, float(cfg.get("nu", 0.3)))
        ok = 0
        for run in range(runs):
            rng = rng_for(seed, run)
            T = rng.standard_normal((size, n))
            ens = sample_ensemble(m, cov, 0.0, 1.0, derive_seed(seed, run, 1))
            ok += theory.check_jl(ens, T, epsilon)["pass"]
        records.append({"check": "jl", "seed": seed, "m": m, "points": size, "epsilon": epsilon,
                        "runs": runs, "pass_rate": ok / runs,
                        "pass": ok / runs >= 0.9})
    elif check == "meanwidth":
        net = synth_generator(k=k, n=n, hidden_dims=[4 * k], seed=0)
        z_bar = np.zeros(k)
        gamma = float(cfg.get("gamma", 0.05))
        est = theory.estimate_local_mean_width(
            net, z_bar, gamma, int(cfg.get("num_gaussians", 2000)),
            float(cfg.get("net_epsilon", 0.5)), seed)
        records.append({"check": "meanwidth", "seed": seed, "omega_hat": est.omega_hat,
                        "std_err": est.std_err, "net_size": est.net_size,
                        "bound": est.theoretical_bound,
                        "pass": est.omega_hat <= est.theoretical_bound})
    elif check == "concentration":
        n_c = int(cfg.get("n", 20))
        m = int(args.m or cfg.get("m", 100_000))
        cov = CovarianceSpec.identity(n_c)
        bound = 4 * math.sqrt(math.log(n_c) / m)
        ok = 0
        for run in range(runs):
            ens = sample_ensemble(m, cov, 0.1, 0.97, derive_seed(seed, run))
            x = np.zeros(n_c)
            x[0] = 1.0
            obs = observe(ens, x, derive_seed(seed, run, 1))
            diag = theory.concentration_diagnostics(ens, obs)
            ok += diag["linf_cov"] <= bound
        records.append({"check": "concentration", "seed": seed, "m": m, "n": n_c,
                        "bound": bound, "runs": runs, "pass_rate": ok / runs,
                        "pass": ok / runs >= 0.95})
    elif check == "epsnet":
        r = float(cfg.get("r", 1.0))
        epsilon = float(cfg.get("epsilon", 0.5))
        net = theory.build_eps_net(k, r, epsilon)
        cover = net.covering_radius_sampled(seed=seed)
        records.append({"check": "epsnet", "seed": seed, "k": k, "r": r, "epsilon": epsilon,
                        "count": len(net), "sampled_covering_radius": cover,
                        "pass": cover <= epsilon})
    else:
        raise _UsageError(f"unknown validation check {check!r}")
    text = "\n".join(dumps17(rec) for rec in records)
    _emit(args, text)
    return 0 if all(rec.get("pass", True) for rec in records) else 2


def _cmd_memorize(args, cfg):
    tau = float(cfg.get("tau", 0.25))
    if "targets" in cfg:
        with open(cfg["targets"], encoding="utf-8") as fh:
            targets = np.asarray(json.load(fh), dtype=np.float64)
    else:
        rng = rng_for(args.seed, 7)
        targets = rng.random((int(cfg.get("s", 5)), int(cfg.get("n", 8))))
    mem = memorizer.build_theorem_generator(targets, tau,
                                            latent_dim=int(cfg.get("k", 1)))
    out = args.out or "memorizer.bin"
    save_generator(mem.net, out)
    worst = max(float(np.linalg.norm(mem.evaluate(a) - t))
                for a, t in zip(mem.anchors, np.asarray(targets)))
    print(dumps17({"path": out, "ell": mem.ell, "width": mem.width,
                   "depth": mem.depth, "tau": tau,
                   "max_anchor_l2_error": worst,
                   "targets": list(targets.shape)}))
    return 0


# ------------------------------------------------------------------ plumbing

def _build_parser():
    parser = _Parser(prog="obgcs", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--quiet", action="store_true")

    for name, fn, extra in (
        ("synth-gen", _cmd_synth_gen, ()),
        ("measure", _cmd_measure, ()),
        ("decode", _cmd_decode, ()),
        ("grid", _cmd_grid, ()),
        ("fit", _cmd_fit, ("fit",)),
        ("validate", _cmd_validate, ("validate",)),
        ("memorize", _cmd_memorize, ()),
    ):
        p = sub.add_parser(name)
        common(p)
        if "fit" in extra:
            p.add_argument("--in", dest="input", default=None)
            p.add_argument("--decoder", default=None)
        if "validate" in extra:
            p.add_argument("check", choices=["srec", "jl", "meanwidth",
                                             "concentration", "epsnet"])
            p.add_argument("--m", type=int, default=None)
            p.add_argument("--k", type=int, default=None)
            p.add_argument("--runs", type=int, default=None)
        p.set_defaults(func=fn)
    return parser


_USAGE_ERRORS = (_UsageError, ValueError, KeyError, FileNotFoundError,
                 MalformedFileError, DimensionMismatchError, ShapeError,
                 CapacityError)
_NUMERIC_ERRORS = (DivergenceError, NotSpdError, DegenerateConeError,
                   NonFiniteError, ZeroDivisionError, np.linalg.LinAlgError,
                   ObgcsError)


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    cfg = {}
    try:
        if args.config:
            cfg = parse_config(args.config)
        return args.func(args, cfg)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
