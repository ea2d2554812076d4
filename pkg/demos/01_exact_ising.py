"""
Exact Ising computations on a few nodes
=======================================

With up to ~20 nodes every pattern can be enumerated, so the log partition
function, the moments and the Fisher information are exact.
"""

import numpy as np

from mgising import ising

# two nodes: biases (0.5, -0.5) and a coupling of 1
j = np.array([0.5, -0.5, 1.0])
print("log partition:", round(ising.log_partition(j), 6))
for x, p in zip(ising.all_patterns(2), ising.pattern_probabilities(j)):
    print("  p(%s) = %.4f" % ("".join(map(str, x)), p))

# moments are firing and co-firing rates, the Fisher matrix their covariance
print("moments:", ising.moments(j).round(4))
print("fisher:\n", ising.fisher_info(j).round(4))

# where the pair (2, 5) lives in a 6-node graph vector
print("index of (2, 5) with N=6:", ising.canonical_index(2, 5, 6))

# a multi-graph model mixes graphs through weights; only J @ theta matters,
# so recombining the graphs with any invertible Z leaves the law unchanged
rng = np.random.default_rng(0)
J = rng.standard_normal((ising.n_features(4), 2))
theta = np.array([0.8, -0.3])
Z = np.array([[2.0, 1.0], [0.5, 1.0]])
p1 = ising.multi_graph_probabilities(theta, J)
p2 = ising.multi_graph_probabilities(Z @ theta, J @ np.linalg.inv(Z))
print("max |p1 - p2| after recombining graphs:", np.abs(p1 - p2).max())

X = ising.sample_patterns(theta, J, 5, seed=1)
print("five exact samples:\n", X)
