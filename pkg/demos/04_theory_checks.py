#!/usr/bin/env python3
"""Monte-Carlo checks of the random-matrix machinery behind the decoder.

Covering nets with certified coverage, restricted-eigenvalue sampling over a
generator's image, random-projection distortion, and local mean width
against its dimension-based bound.
"""

import math

import numpy as np

from obgcs import (CovarianceSpec, build_eps_net, check_jl, check_srec,
                   estimate_local_mean_width, lipschitz_upper_bound,
                   mean_width_of_directions, sample_ensemble, synth_generator)

# covering nets: count vs the k log(4r/eps) envelope, coverage by sampling
print("covering nets of the unit ball:")
for k, eps in [(2, 0.5), (3, 0.6), (4, 0.8)]:
    net = build_eps_net(k, 1.0, eps)
    print(f"  k={k} eps={eps}: {len(net):>4} points, "
          f"log count {math.log(len(net)):.2f} <= {k * math.log(4 / eps):.2f}, "
          f"sampled covering radius {net.covering_radius_sampled():.3f}")

# restricted eigenvalue over generator differences
k, n = 4, 50
gnet = synth_generator(k=k, n=n, hidden_dims=[16], seed=0)
lip = lipschitz_upper_bound(gnet)
delta = 1e-3
m = round(5 * k * math.log(lip / delta))
cov = CovarianceSpec.identity(n)
clean = 0
for run in range(20):
    ens = sample_ensemble(m, cov, 0.0, 1.0, seed=run)
    rep = check_srec(ens, gnet, 0.5, delta, 10_000, seed=100 + run)
    clean += rep.violations == 0
print(f"\nrestricted eigenvalue at m={m}: {clean}/20 runs with zero violations")
rep = check_srec(sample_ensemble(m, cov, 0.0, 1.0, seed=99), gnet, 10.0, 0.0,
                 1000, seed=5)
print(f"falsification control (gamma=10): {rep.violations}/1000 pairs violate")

# random-projection distortion on a 40-point cloud
size, eps_jl = 40, 0.5
m_jl = math.ceil(8 * math.log(size) / eps_jl ** 2)
cov_t = CovarianceSpec.toeplitz(n, 0.3)
passes = 0
for run in range(20):
    T = np.random.default_rng(run).standard_normal((size, n))
    ens = sample_ensemble(m_jl, cov_t, 0.0, 1.0, seed=500 + run)
    passes += check_jl(ens, T, eps_jl)["pass"]
print(f"projection distortion at m={m_jl}: {passes}/20 runs inside 1 +- {eps_jl}")

# mean width: closed-form sanity then a generator cone vs its bound
D = np.zeros((2, 6))
D[0, 0], D[1, 0] = 1.0, -1.0
est = mean_width_of_directions(D, 4000, seed=1)
print(f"\nmean width of {{+-e1}}: {est.omega_hat:.4f} "
      f"(half-normal mean {math.sqrt(2 / math.pi):.4f}, se {est.std_err:.4f})")
gen_est = estimate_local_mean_width(gnet, np.zeros(k), gamma_scale=0.05,
                                    num_gaussians=2000, net_epsilon=0.5, seed=2)
print(f"generator cone: {gen_est.omega_hat:.3f} <= bound "
      f"{gen_est.theoretical_bound:.3f} over {gen_est.net_size} net points")
