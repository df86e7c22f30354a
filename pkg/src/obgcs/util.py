"""Small numeric helpers: spectral norms, seed derivation, float formatting."""

import math

import numpy as np


def spectral_norm(mat, iters=200, tol=1e-8, min_iters=30):
    """Largest singular value of ``mat`` by power iteration on ``mat.T @ mat``.

    Deterministic: the start vector comes from a fixed-seed generator. Runs at
    least ``min_iters`` iterations and stops once the Rayleigh estimate moves
    by less than ``tol`` relative.
    """
    mat = np.asarray(mat, dtype=np.float64)
    if mat.size == 0:
        return 0.0
    rng = np.random.default_rng(0x5EED)
    v = rng.standard_normal(mat.shape[1])
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return 0.0
    v /= nv
    est = 0.0
    for i in range(max(iters, min_iters)):
        w = mat.T @ (mat @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        new_est = math.sqrt(nw)
        if i + 1 >= min_iters and abs(new_est - est) <= tol * max(new_est, 1.0):
            est = new_est
            break
        est = new_est
    return float(est)


def symmetric_spectral_norm(mat, iters=300, tol=1e-10):
    """Spectral norm (largest |eigenvalue|) of a symmetric matrix by power iteration."""
    mat = np.asarray(mat, dtype=np.float64)
    rng = np.random.default_rng(0x5EED + 1)
    v = rng.standard_normal(mat.shape[0])
    v /= np.linalg.norm(v)
    est = 0.0
    for i in range(iters):
        w = mat @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if i >= 30 and abs(nw - est) <= tol * max(nw, 1.0):
            est = nw
            break
        est = nw
    return float(est)


def derive_seed(*parts):
    """Stable integer seed derived from a tuple of non-negative integers.

    Uses numpy's SeedSequence entropy-mixing, which is documented to be
    reproducible across platforms and numpy versions.
    """
    ss = np.random.SeedSequence([int(p) & 0xFFFFFFFF for p in parts])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def rng_for(*parts):
    """Generator seeded from a stable hash of the given integer parts."""
    return np.random.default_rng(np.random.SeedSequence([int(p) & 0xFFFFFFFF for p in parts]))


def fmt17(x):
    """Format a float with 17 significant digits (round-trip safe)."""
    return format(float(x), ".17g")


def dumps17(obj):
    """One-line JSON with floats rendered at 17 significant digits.

    Handles the flat-ish dicts/lists of scalars used for reports.
    """
    if isinstance(obj, dict):
        items = ", ".join(f"{dumps17(k)}: {dumps17(v)}" for k, v in obj.items())
        return "{" + items + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else list(obj)
        return "[" + ", ".join(dumps17(v) for v in seq) + "]"
    if isinstance(obj, bool) or obj is None:
        return "true" if obj is True else ("false" if obj is False else "null")
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt17(obj)
    return '"' + str(obj).replace("\\", "\\\\").replace('"', '\\"') + '"'


def compensated_mean(values):
    """Mean via exact compensated summation (order-independent to ~1 ulp)."""
    values = list(map(float, values))
    if not values:
        raise ValueError("mean of empty sequence")
    return math.fsum(values) / len(values)
