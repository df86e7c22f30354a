"""Empirical validators for the analysis machinery behind the decoder.

Everything here is a seeded Monte-Carlo check, not a proof: covering nets
with certified coverage, restricted-eigenvalue sampling over generator
images, random-projection distortion tests, Gaussian mean-width estimation,
and concentration diagnostics for the empirical covariance.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DegenerateConeError, NotSpdError, ShapeError
from .generator import forward, forward_batch, lipschitz_upper_bound
from .util import compensated_mean, symmetric_spectral_norm

_LATTICE_BUDGET = 2_000_000


@dataclass
class EpsNet:
    """Finite subset of the radius-r ball covering it to within epsilon."""

    points: np.ndarray
    epsilon: float
    r: float

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2:
            raise ShapeError("net points must form a (count, dim) array")
        norms = np.linalg.norm(self.points, axis=1)
        if np.any(norms > self.r * (1 + 1e-9) + 1e-12):
            raise ValueError("net contains points outside the ball")

    def __len__(self):
        return self.points.shape[0]

    def covering_radius_sampled(self, num_samples=10_000, seed=0):
        """Max distance from random ball points to the net (sampled)."""
        rng = np.random.default_rng(seed)
        test = _uniform_ball(rng, num_samples, self.points.shape[1], self.r)
        return float(_max_min_dist(test, self.points))


def _uniform_ball(rng, count, dim, radius):
    g = rng.standard_normal((count, dim))
    g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
    u = rng.random(count) ** (1.0 / dim)
    return g * (radius * u)[:, None]


def _max_min_dist(points, net, block=2048):
    worst = 0.0
    for start in range(0, points.shape[0], block):
        chunk = points[start:start + block]
        d2 = (
            np.sum(chunk * chunk, axis=1)[:, None]
            - 2.0 * chunk @ net.T
            + np.sum(net * net, axis=1)[None, :]
        )
        worst = max(worst, math.sqrt(max(float(np.min(d2, axis=1).max()), 0.0)))
    return worst


def _lattice_points(k, pitch, radius):
    """All lattice points (multiples of pitch) with norm <= radius."""
    out = []
    coord = np.zeros(k)

    def recurse(dim, norm2):
        if len(out) > _LATTICE_BUDGET:
            raise CapacityError(
                "lattice enumeration exceeds the point budget; "
                "use method='random' instead")
        if dim == k:
            out.append(coord.copy())
            return
        budget = radius * radius - norm2
        if budget < 0:
            return
        top = int(math.floor(math.sqrt(budget) / pitch))
        for i in range(-top, top + 1):
            coord[dim] = i * pitch
            recurse(dim + 1, norm2 + coord[dim] ** 2)
        coord[dim] = 0.0

    recurse(0, 0.0)
    return np.array(out) if out else np.zeros((0, k))


def build_eps_net(k, r, epsilon, method="auto", seed=0):
    """Construct an epsilon-net of the radius-r ball in R^k.

    The lattice construction (k <= 8) lays down an axis-aligned grid of pitch
    epsilon/sqrt(k), whose cells have half-diagonal epsilon/2, intersects it
    with the slightly enlarged ball, projects everything back into the ball
    (projection onto a convex set can only shrink distances to interior
    points), and prunes points lying within epsilon/2 of an earlier survivor.
    Both halves of the argument leave total coverage at epsilon.

    For larger k the lattice blows up, so a random construction draws uniform
    candidates, keeps a greedy spread-out subset, and then certifies coverage
    on fresh samples, topping up with any uncovered sample until the
    certification passes.
    """
    k = int(k)
    r = float(r)
    epsilon = float(epsilon)
    if k < 1 or r <= 0:
        raise ValueError("need k >= 1 and r > 0")
    if not 0 < epsilon <= 2 * r:
        raise ValueError("need 0 < epsilon <= 2r")
    if method == "auto":
        method = "lattice" if k <= 8 else "random"
    if method == "lattice":
        if k > 8:
            raise CapacityError(
                f"lattice construction supports k <= 8 (got k={k}); "
                "use method='random' instead")
        pitch = epsilon / math.sqrt(k)
        pts = _lattice_points(k, pitch, r + 0.5 * epsilon)
        norms = np.linalg.norm(pts, axis=1)
        outside = norms > r
        pts[outside] *= (r / norms[outside])[:, None]
        kept = _greedy_prune(pts, 0.5 * epsilon)
        return EpsNet(points=kept, epsilon=epsilon, r=r)
    if method == "random":
        return _random_net(k, r, epsilon, seed)
    raise ValueError(f"unknown method {method!r}")


def _greedy_prune(points, min_sep):
    kept = np.empty((0, points.shape[1]))
    sep2 = min_sep * min_sep
    for p in points:
        if kept.shape[0] == 0 or np.min(np.sum((kept - p) ** 2, axis=1)) >= sep2:
            kept = np.vstack([kept, p[None, :]])
    return kept


def _random_net(k, r, epsilon, seed):
    rng = np.random.default_rng(seed)
    candidates = _uniform_ball(rng, max(4000, 200 * k), k, r)
    kept = _greedy_prune(candidates, 0.5 * epsilon)
    for _ in range(50):
        test = _uniform_ball(rng, 10_000, k, r)
        d2 = (
            np.sum(test * test, axis=1)[:, None]
            - 2.0 * test @ kept.T
            + np.sum(kept * kept, axis=1)[None, :]
        )
        mind = np.sqrt(np.maximum(d2.min(axis=1), 0.0))
        bad = mind > epsilon * 0.999
        if not np.any(bad):
            return EpsNet(points=kept, epsilon=epsilon, r=r)
        kept = np.vstack([kept, test[bad]])
    raise CapacityError("random net failed coverage certification")


@dataclass
class SrecReport:
    """Outcome of sampling the restricted-eigenvalue inequality over pairs."""

    gamma: float
    delta: float
    pairs_tested: int
    violations: int
    min_ratio: float


def check_srec(ens, net, gamma, delta, num_pairs, seed, r=1.0):
    """Sample latent pairs and test (1/m)||A(x1-x2)||^2 >= gamma ||x1-x2||^2 - delta.

    Pairs whose generator images are closer than 1e-9 are skipped in the
    ratio statistic (0/0); ``min_ratio`` is the smallest observed
    ((1/m)||A d||^2 + delta) / ||d||^2.
    """
    num_pairs = int(num_pairs)
    if num_pairs < 1:
        raise ValueError("need at least one pair")
    rng = np.random.default_rng(seed)
    k = net.latent_dim
    z1 = _uniform_ball(rng, num_pairs, k, r).T
    z2 = _uniform_ball(rng, num_pairs, k, r).T
    diff = forward_batch(net, z1) - forward_batch(net, z2)
    d2 = np.sum(diff * diff, axis=0)
    lhs = np.sum((ens.A @ diff) ** 2, axis=0) / ens.m
    violations = int(np.sum(lhs < gamma * d2 - delta))
    valid = d2 >= 1e-18
    if np.any(valid):
        min_ratio = float(np.min((lhs[valid] + delta) / d2[valid]))
    else:
        min_ratio = math.inf
    return SrecReport(gamma=float(gamma), delta=float(delta),
                      pairs_tested=num_pairs, violations=violations,
                      min_ratio=min_ratio)


def _inv_sqrt(mat):
    vals, vecs = np.linalg.eigh(mat)
    if np.any(vals <= 1e-12 * vals.max()):
        raise NotSpdError("covariance is singular; cannot form its inverse square root")
    return (vecs / np.sqrt(vals)) @ vecs.T


def check_jl(ens, point_set, epsilon):
    """Distortion of the whitened projection t -> (1/sqrt(m)) A Sigma^(-1/2) t.

    Measures max over point pairs of |ratio - 1| where ratio compares image
    distance to original distance; passes when every ratio lies in
    [1-epsilon, 1+epsilon]. Pairs at identical points are skipped.
    """
    T = np.asarray(point_set, dtype=np.float64)
    if T.ndim != 2 or T.shape[0] < 2:
        raise ShapeError("need a (count, n) point set with count >= 2")
    if T.shape[1] != ens.n:
        raise ShapeError(f"points have dim {T.shape[1]}, ensemble expects {ens.n}")
    W = _inv_sqrt(ens.cov.dense())
    images = (ens.A @ (W @ T.T)) / math.sqrt(ens.m)  # (m, count)
    count = T.shape[0]
    max_distortion = 0.0
    compared = 0
    for i in range(count):
        d_orig = np.linalg.norm(T[i + 1:] - T[i], axis=1)
        d_img = np.linalg.norm(images[:, i + 1:] - images[:, i:i + 1], axis=0)
        ok = d_orig > 1e-12
        if np.any(ok):
            ratios = d_img[ok] / d_orig[ok]
            max_distortion = max(max_distortion, float(np.max(np.abs(ratios - 1.0))))
            compared += int(np.sum(ok))
    if compared == 0:
        raise ValueError("all points coincide; no pairs to compare")
    return {"max_distortion": max_distortion, "pass": bool(max_distortion <= epsilon)}


@dataclass
class MeanWidthEstimate:
    """Monte-Carlo estimate of the Gaussian mean width of a direction set."""

    omega_hat: float
    std_err: float
    gaussians_used: int
    net_size: int
    gamma_scale: float
    theoretical_bound: float = math.nan


def mean_width_of_directions(directions, num_gaussians, seed):
    """E max over the given unit directions of <g, v>, g standard normal.

    The mean uses exact compensated summation so the reported value does not
    depend on reduction order beyond a final rounding.
    """
    D = np.asarray(directions, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] < 1:
        raise DegenerateConeError("direction set is empty")
    rng = np.random.default_rng(seed)
    num = int(num_gaussians)
    maxima = []
    block = max(1, min(num, 20_000_000 // max(D.size, 1)))
    done = 0
    while done < num:
        take = min(block, num - done)
        G = rng.standard_normal((take, D.shape[1]))
        maxima.extend((G @ D.T).max(axis=1).tolist())
        done += take
    omega = compensated_mean(maxima)
    var = math.fsum((v - omega) ** 2 for v in maxima) / max(len(maxima) - 1, 1)
    bound = math.sqrt(2.0 * math.log(max(D.shape[0], 2)))
    return MeanWidthEstimate(omega_hat=float(omega),
                             std_err=math.sqrt(var / len(maxima)),
                             gaussians_used=num, net_size=D.shape[0],
                             gamma_scale=0.0, theoretical_bound=bound)


def estimate_local_mean_width(net, z_bar, gamma_scale, num_gaussians,
                              net_epsilon, seed, r=1.0):
    """Mean width of the normalized generator-difference cone around z_bar.

    Builds an epsilon-net of the latent ball, keeps directions
    (G(u) - G(z_bar)) / ||G(u) - G(z_bar)|| whose length clears gamma_scale,
    and Monte-Carlo estimates E sup <g, v>. The reported theoretical bound is
    sqrt(2k log(16 L r / (gamma epsilon))) + sqrt(n) epsilon with L the
    generator's Lipschitz upper bound.
    """
    if gamma_scale <= 0 or net_epsilon <= 0 or num_gaussians < 2:
        raise ValueError("gamma_scale, net_epsilon must be positive; need >= 2 gaussians")
    k = net.latent_dim
    u_net = build_eps_net(k, r, net_epsilon)
    images = forward_batch(net, u_net.points.T)
    base = forward(net, np.asarray(z_bar, dtype=np.float64))
    diffs = images - base[:, None]
    lens = np.linalg.norm(diffs, axis=0)
    keep = lens >= gamma_scale
    if not np.any(keep):
        raise DegenerateConeError(
            "every net image lies within gamma of the base point; the "
            "direction cone is empty")
    directions = (diffs[:, keep] / lens[keep]).T
    est = mean_width_of_directions(directions, num_gaussians, seed)
    lip = lipschitz_upper_bound(net)
    arg = 16.0 * lip * r / (gamma_scale * net_epsilon)
    bound = math.sqrt(2.0 * k * math.log(arg)) if arg > 1.0 else 0.0
    bound += math.sqrt(net.signal_dim) * net_epsilon
    return MeanWidthEstimate(omega_hat=est.omega_hat, std_err=est.std_err,
                             gaussians_used=est.gaussians_used,
                             net_size=len(u_net), gamma_scale=float(gamma_scale),
                             theoretical_bound=float(bound))


def default_gamma_scale(tau, k, m, lipschitz, r, n):
    """Documented default for the cone threshold:
    max(tau, (k/m) log(L r n / k) + sqrt(log(n) / m))."""
    return max(float(tau),
               (k / m) * math.log(max(lipschitz * r * n / k, math.e))
               + math.sqrt(math.log(max(n, 2)) / m))


def concentration_diagnostics(ens, obs):
    """Deviation statistics of the sampled ensemble from its population law.

    Returns ``linf_grad`` = || A^T y / m - E[a y] ||_inf (with E[a y] computed
    from the truth record), ``linf_cov`` = max-entry deviation of the
    empirical covariance, and ``spec_cov`` = its spectral-norm deviation
    (power iteration).
    """
    A = ens.A
    m = ens.m
    sigma_mat = ens.cov.dense()
    x_star = obs.x_star
    sig_norm2 = float(x_star @ (sigma_mat @ x_star))
    # population mean of a*y for y = eta*sign(a.x* + eps):
    # (2q-1) sqrt(2/pi) Sigma x* / sqrt(||x*||_Sigma^2 + sigma^2)
    denom = math.sqrt(sig_norm2 + ens.sigma ** 2)
    if denom == 0.0:
        raise ValueError("ground truth has zero covariance norm and no noise")
    expected_ay = (2.0 * ens.q - 1.0) * math.sqrt(2.0 / math.pi) * (sigma_mat @ x_star) / denom
    linf_grad = float(np.max(np.abs(A.T @ obs.y / m - expected_ay)))
    dev = A.T @ A / m - sigma_mat
    return {
        "linf_grad": linf_grad,
        "linf_cov": float(np.max(np.abs(dev))),
        "spec_cov": symmetric_spectral_norm(dev),
    }
