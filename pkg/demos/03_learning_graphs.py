"""
Learning two graphs from a mixture
==================================

Data alternate between a '+' and a 'T' on a 3x3 grid. The learner starts
from random graphs and updates them online while filtering the weights.
Only a few epochs are run here to keep the demo short; the correlation with
the generating graphs keeps rising with more epochs.
"""

from mgising import ising, selection, synth
from mgising.filtering import FilterConfig
from mgising.learning import LearnerConfig, match_columns, run_online

EPOCHS, T_EP = 10, 1500

J_true = synth.plus_tee_graphs()
for k in range(2):
    print("mode of graph %d:" % (k + 1))
    print(ising.most_probable_pattern(J_true[:, k]).reshape(3, 3))

ds = synth.generate_dataset(J_true, synth.sinusoid_weights(T_EP, EPOCHS), seed=1)
res = run_online(ds.raster, 2, FilterConfig(lam=1000.0),
                 LearnerConfig(epsilon=1e-3, mc_samples=100, seed=1, snapshot_every=T_EP))

print("\nepoch  mean loglik  corr(+)  corr(T)")
avg = selection.epoch_average_loglik(res.trace, T_EP)
for (t, Js), ll in zip(res.graph_snapshots, avg):
    _, corr = match_columns(Js, J_true)
    print("%5d  %10.3f  %7.3f  %7.3f" % (t // T_EP, ll, corr[0], corr[1]))

order, corr = match_columns(res.final_graphs, J_true)
print("\nlearned modes:")
for k in order:
    print(ising.most_probable_pattern(res.final_graphs[:, k]).reshape(3, 3))
