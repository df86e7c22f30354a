"""One-bit measurement model: correlated Gaussian sensing plus sign flips.

The observation of a signal x* is y = eta * sign(A x* + eps), where the rows
of A are i.i.d. N(0, Sigma), eps is N(0, sigma^2 I) pre-quantization noise,
and eta flips each sign independently (eta = +1 with probability q). The
convention sign(0) = +1 makes observations exactly reproducible.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotSpdError, ShapeError


@dataclass
class CovarianceSpec:
    """Row covariance of the sensing matrix: identity, toeplitz, or explicit."""

    kind: str
    n: int
    nu: float = 0.0
    matrix: np.ndarray | None = None

    @classmethod
    def identity(cls, n):
        return cls(kind="identity", n=int(n))

    @classmethod
    def toeplitz(cls, n, nu):
        nu = float(nu)
        if not -1.0 < nu < 1.0:
            raise ValueError(f"toeplitz correlation must lie in (-1, 1), got {nu}")
        return cls(kind="toeplitz", n=int(n), nu=nu)

    @classmethod
    def explicit(cls, matrix):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ShapeError(f"covariance must be square, got {matrix.shape}")
        if not np.allclose(matrix, matrix.T, atol=1e-10):
            raise NotSpdError("covariance is not symmetric")
        spec = cls(kind="explicit", n=matrix.shape[0], matrix=matrix)
        spec.cholesky()  # fail fast on non-SPD input
        return spec

    def dense(self):
        """Materialize Sigma as a dense matrix."""
        if self.kind == "identity":
            return np.eye(self.n)
        if self.kind == "toeplitz":
            idx = np.arange(self.n)
            return self.nu ** np.abs(idx[:, None] - idx[None, :])
        return np.array(self.matrix, dtype=np.float64)

    def cholesky(self):
        """Lower Cholesky factor of Sigma; raises NotSpdError on failure."""
        try:
            return np.linalg.cholesky(self.dense())
        except np.linalg.LinAlgError as exc:
            raise NotSpdError(f"covariance is not positive definite: {exc}") from exc

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.dense()).min())


@dataclass
class MeasurementEnsemble:
    """A sampled sensing matrix together with its noise and flip parameters."""

    A: np.ndarray
    cov: CovarianceSpec
    sigma: float
    q: float
    seed: int

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=np.float64)
        if self.A.ndim != 2:
            raise ShapeError("measurement matrix must be 2-D")
        if self.A.shape[0] < 1:
            raise ShapeError("need at least one measurement row")
        if self.A.shape[1] != self.cov.n:
            raise ShapeError(
                f"matrix has {self.A.shape[1]} columns but covariance is {self.cov.n}-dimensional")
        if self.sigma < 0:
            raise ValueError("noise level must be nonnegative")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError("flip-keep probability must lie in [0, 1]")

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]


@dataclass
class BinaryObservation:
    """Signs seen by the decoder plus the ground-truth record for scoring."""

    y: np.ndarray
    x_star: np.ndarray
    eta: np.ndarray
    eps: np.ndarray

    def __post_init__(self):
        for name in ("y", "x_star", "eta", "eps"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if not np.all(np.abs(self.y) == 1.0):
            raise ValueError("observed signs must all be +1 or -1")
        if self.eta.shape != self.y.shape or self.eps.shape != self.y.shape:
            raise ShapeError("eta and eps must match the observation length")

    @property
    def truth(self):
        return {"x_star": self.x_star, "eta": self.eta, "eps": self.eps}


def sign_pm1(v):
    """Componentwise sign with sign(0) = +1, valued in {-1.0, +1.0}."""
    return np.where(np.asarray(v) >= 0, 1.0, -1.0)


def sample_ensemble(m, cov, sigma, q, seed):
    """Draw A = Z C^T with Z iid standard normal and C the Cholesky factor.

    Rows of A are then i.i.d. N(0, Sigma). Deterministic in ``seed``; the
    matrix uses sub-stream 0 of the seed so observation noise (sub-stream 1)
    and flips (sub-stream 2) can be varied independently.
    """
    m = int(m)
    if m < 1:
        raise ValueError("need m >= 1 measurements")
    chol = cov.cholesky()
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, 0]))
    Z = rng.standard_normal((m, cov.n))
    A = Z @ chol.T
    return MeasurementEnsemble(A=A, cov=cov, sigma=float(sigma), q=float(q), seed=int(seed))


def observe(ens, x_star, seed):
    """Generate y = eta * sign(A x* + eps) and keep the truth record.

    ``eps`` is N(0, sigma^2 I) from sub-stream 1 of ``seed`` and ``eta`` is
    +1 with probability q (else -1) from sub-stream 2, so the three
    randomness sources (matrix, noise, flips) are independent and any one can
    be held fixed while the others vary.
    """
    x_star = np.asarray(x_star, dtype=np.float64)
    if x_star.shape != (ens.n,):
        raise ShapeError(f"signal shape {x_star.shape} != {(ens.n,)}")
    rng_eps = np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, 1]))
    rng_eta = np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, 2]))
    eps = ens.sigma * rng_eps.standard_normal(ens.m)
    eta = np.where(rng_eta.random(ens.m) < ens.q, 1.0, -1.0)
    y = eta * sign_pm1(ens.A @ x_star + eps)
    return BinaryObservation(y=y, x_star=x_star, eta=eta, eps=eps)


def scaling_constant(sigma, q):
    """Scale factor (2q-1) sqrt(2 / (pi (sigma^2 + 1))).

    One-bit observations identify the signal only up to this constant (and
    not at all when q = 1/2). Negative q-side flips make it negative.
    """
    sigma = float(sigma)
    q = float(q)
    if sigma < 0 or not 0.0 <= q <= 1.0:
        raise ValueError("need sigma >= 0 and q in [0, 1]")
    return (2.0 * q - 1.0) * math.sqrt(2.0 / (math.pi * (sigma * sigma + 1.0)))


def sigma_norm(cov, x):
    """Covariance-weighted norm sqrt(x^T Sigma x)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (cov.n,):
        raise ShapeError(f"vector shape {x.shape} != {(cov.n,)}")
    quad = float(x @ (cov.dense() @ x))
    if quad < -1e-12:
        raise NotSpdError(f"quadratic form came out negative ({quad})")
    return math.sqrt(max(quad, 0.0))
