"""
How many graphs?
================

Fit 1..3 graphs to data generated from two random graphs and compare them
by AIC on the last epoch, together with the full model that gives every
Ising parameter its own weight.
"""

from mgising import ising, selection, synth
from mgising.filtering import FilterConfig
from mgising.learning import LearnerConfig

T_EP, EPOCHS = 1500, 8

J = synth.random_graphs(9, 2, seed=11)
ds = synth.generate_dataset(J, synth.sinusoid_weights(T_EP, EPOCHS), seed=11)
fcfg = FilterConfig(lam=1000.0)

report = selection.sweep(ds.raster, [1, 2, 3], fcfg, LearnerConfig(mc_samples=0, seed=11),
                         window="last-epoch", epoch_len=T_EP)
print(report.table())

full = selection.fit_full_model(ds.raster, fcfg)
ll = selection.window_loglik(full, "last-epoch", T_EP)
print("\nfull model (m = %d): AIC %.1f" % (ising.n_features(9), selection.aic(ll, ising.n_features(9))))

# principal directions of the full-model estimates, compared with the truth
pca = selection.pca_baseline(full, 2, J)
print("PCA |corr| with the generating graphs:", pca.abs_corr.round(3))
