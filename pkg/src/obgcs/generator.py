"""ReLU multilayer generators: evaluation, latent gradients, Lipschitz bounds.

A generator maps a low-dimensional latent vector to a high-dimensional signal
through affine layers with ReLU activations on every hidden layer and a
configurable final activation. Networks are treated as immutable after
construction; the only mutation is the one-time caching of the Lipschitz
bound.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .util import spectral_norm

ACTIVATIONS = ("identity", "relu", "sigmoid")


@dataclass
class GeneratorNetwork:
    """Layered affine+ReLU map from latent space R^k to signal space R^n.

    ``layer_dims`` is ``[k, d1, ..., n]``; ``weights[i]`` has shape
    ``(layer_dims[i+1], layer_dims[i])`` and ``biases[i]`` has shape
    ``(layer_dims[i+1],)``. Hidden layers use ReLU; the output layer applies
    ``final_activation``. With ``normalize_output`` the output is rescaled to
    unit Euclidean norm after the final activation, so the image lies on the
    unit sphere.
    """

    layer_dims: list
    weights: list
    biases: list
    final_activation: str = "identity"
    normalize_output: bool = False
    lipschitz_bound: float | None = field(default=None, compare=False)

    def __post_init__(self):
        dims = [int(d) for d in self.layer_dims]
        if len(dims) < 2 or any(d < 1 for d in dims):
            raise ShapeError(f"layer_dims must hold >= 2 positive sizes, got {dims}")
        if self.final_activation not in ACTIVATIONS:
            raise ShapeError(f"unknown final activation {self.final_activation!r}")
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ShapeError("need one weight matrix and one bias per layer transition")
        ws, bs = [], []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            w = np.asarray(w, dtype=np.float64)
            b = np.asarray(b, dtype=np.float64)
            if w.shape != (dims[i + 1], dims[i]):
                raise ShapeError(
                    f"layer {i}: weight shape {w.shape} != {(dims[i + 1], dims[i])}"
                )
            if b.shape != (dims[i + 1],):
                raise ShapeError(f"layer {i}: bias shape {b.shape} != {(dims[i + 1],)}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ShapeError(f"layer {i}: non-finite entries")
            ws.append(w)
            bs.append(b)
        self.layer_dims = dims
        self.weights = ws
        self.biases = bs

    @property
    def latent_dim(self):
        return self.layer_dims[0]

    @property
    def signal_dim(self):
        return self.layer_dims[-1]


@dataclass
class LatentPoint:
    """A latent vector, optionally certified to lie in a centered L2 ball."""

    z: np.ndarray
    radius_bound: float | None = None

    def __post_init__(self):
        self.z = np.atleast_1d(np.asarray(self.z, dtype=np.float64))
        if self.radius_bound is not None:
            r = float(self.radius_bound)
            if r < 0:
                raise ValueError("radius_bound must be nonnegative")
            if np.linalg.norm(self.z) > r * (1 + 1e-12) + 1e-15:
                raise ValueError("latent vector lies outside its declared ball")
            self.radius_bound = r


def _as_latent_array(net, z):
    z = z.z if isinstance(z, LatentPoint) else np.asarray(z, dtype=np.float64)
    z = np.atleast_1d(z)
    if z.shape[0] != net.latent_dim:
        raise ShapeError(f"latent length {z.shape[0]} != expected {net.latent_dim}")
    return z


def _apply_final(net, h):
    if net.final_activation == "relu":
        h = np.maximum(h, 0.0)
    elif net.final_activation == "sigmoid":
        h = 1.0 / (1.0 + np.exp(-h))
    if net.normalize_output:
        nrm = np.linalg.norm(h, axis=0)
        if np.any(nrm == 0.0):
            raise ZeroDivisionError("cannot normalize a zero output vector")
        h = h / nrm
    return h


def forward(net, z):
    """Evaluate the generator at a single latent vector."""
    h = _as_latent_array(net, z)
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = w @ h + b
        if i < last:
            h = np.maximum(h, 0.0)
    return _apply_final(net, h)


def forward_batch(net, zs):
    """Evaluate the generator column-wise on a (k, batch) array."""
    h = np.asarray(zs, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] != net.latent_dim:
        raise ShapeError(f"batch must be (k, batch) with k={net.latent_dim}")
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = w @ h + b[:, None]
        if i < last:
            h = np.maximum(h, 0.0)
    return _apply_final(net, h)


def _forward_with_preacts(net, h):
    preacts = []
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = w @ h + (b[:, None] if h.ndim == 2 else b)
        preacts.append(h)
        if i < last:
            h = np.maximum(h, 0.0)
    return h, preacts


def latent_vjp(net, z, cotangent):
    """Transpose-Jacobian product J(z)^T v with the convention relu'(0) = 0."""
    z = _as_latent_array(net, z)
    v = np.asarray(cotangent, dtype=np.float64)
    if v.shape != (net.signal_dim,):
        raise ShapeError(f"cotangent shape {v.shape} != {(net.signal_dim,)}")
    return _vjp_impl(net, z, v)


def latent_vjp_batch(net, zs, cotangents):
    """Column-wise transpose-Jacobian products for (k, batch) and (n, batch)."""
    zs = np.asarray(zs, dtype=np.float64)
    vs = np.asarray(cotangents, dtype=np.float64)
    if zs.ndim != 2 or zs.shape[0] != net.latent_dim:
        raise ShapeError("latent batch must be (k, batch)")
    if vs.shape != (net.signal_dim, zs.shape[1]):
        raise ShapeError("cotangent batch must be (n, batch)")
    return _vjp_impl(net, zs, vs)


def _vjp_impl(net, z, v):
    out, preacts = _forward_with_preacts(net, z)
    g = v.copy()
    if net.normalize_output:
        # d(x/|x|)^T v = (v - u <u, v>) / |x| with u = x/|x|
        pre_norm = preacts[-1]
        if net.final_activation == "relu":
            pre_norm = np.maximum(pre_norm, 0.0)
        elif net.final_activation == "sigmoid":
            pre_norm = 1.0 / (1.0 + np.exp(-pre_norm))
        nrm = np.linalg.norm(pre_norm, axis=0)
        u = pre_norm / nrm
        g = (g - u * np.sum(u * g, axis=0)) / nrm
    if net.final_activation == "relu":
        g = g * (preacts[-1] > 0)
    elif net.final_activation == "sigmoid":
        s = 1.0 / (1.0 + np.exp(-preacts[-1]))
        g = g * s * (1.0 - s)
    for i in range(len(net.weights) - 1, -1, -1):
        g = net.weights[i].T @ g
        if i > 0:
            g = g * (preacts[i - 1] > 0)
    return g


def lipschitz_upper_bound(net):
    """Product of layer spectral norms; caches the value on the network.

    Valid as a Lipschitz upper bound whenever the activations are 1-Lipschitz
    (identity, relu). A final sigmoid contributes its slope bound 1/4. Output
    normalization is excluded: the bound covers the un-normalized map.
    """
    if net.lipschitz_bound is not None:
        return net.lipschitz_bound
    bound = 1.0
    for w in net.weights:
        bound *= spectral_norm(w, iters=200, tol=1e-8, min_iters=30)
    if net.final_activation == "sigmoid":
        bound *= 0.25
    net.lipschitz_bound = float(bound)
    return net.lipschitz_bound


def synth_generator(k, n, hidden_dims=(), seed=0, scale=1.0, unit_sphere=False,
                    unit_l1_image=False, final_activation="identity"):
    """Random dense generator with Gaussian weights of std scale/sqrt(fan_in).

    Biases are zero, which makes the map positively homogeneous: scaling the
    latent by a > 0 scales the output by a, so the image is a cone that is
    closed under positive rescaling. ``unit_sphere`` adds output
    normalization so every output lies on the unit sphere; ``unit_l1_image``
    instead rescales the final layer by 1/(sqrt(n) L) so the image of the
    unit latent ball is guaranteed inside the unit L1 ball (the two options
    are mutually exclusive). Deterministic in ``seed``.
    """
    k, n = int(k), int(n)
    if k < 1 or n < 1:
        raise ShapeError("latent and signal dimensions must be >= 1")
    if unit_sphere and unit_l1_image:
        raise ValueError("unit_sphere and unit_l1_image are mutually exclusive")
    dims = [k] + [int(d) for d in hidden_dims] + [n]
    if any(d < 1 for d in dims):
        raise ShapeError(f"invalid hidden dims in {dims}")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.standard_normal((fan_out, fan_in)) * (scale / np.sqrt(fan_in)))
        biases.append(np.zeros(fan_out))
    if unit_l1_image:
        # |G(z)|_1 <= sqrt(n) |G(z)|_2 <= sqrt(n) L |z|, so this rescaling
        # pins the image of the unit ball inside the unit L1 ball
        lip = 1.0
        for w in weights:
            lip *= spectral_norm(w)
        if lip > 0:
            weights[-1] = weights[-1] / (np.sqrt(n) * lip)
    return GeneratorNetwork(dims, weights, biases, final_activation=final_activation,
                            normalize_output=bool(unit_sphere))


def identity_generator(n):
    """The trivial generator G(z) = z on R^n (useful as a no-prior baseline)."""
    return GeneratorNetwork([n, n], [np.eye(n)], [np.zeros(n)])


def architecture_summary(net):
    """Independent structural accounting of a network's size.

    Returns a dict with ``affine_layers`` (the number of weight matrices,
    i.e. depth counted in affine transformations), ``hidden_layers``, and
    ``max_width`` (largest hidden layer size; 0 if there are none).
    """
    hidden = net.layer_dims[1:-1]
    return {
        "affine_layers": len(net.weights),
        "hidden_layers": len(hidden),
        "max_width": max(hidden) if hidden else 0,
    }
