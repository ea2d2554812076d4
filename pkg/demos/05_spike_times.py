"""
From spike times to a raster
============================

Spike-time exports are binned into 10 ms bins; several spikes in one bin
count once. Only the most active units are kept.
"""

import numpy as np

from mgising.raster import bin_spike_times, select_top_units

rng = np.random.default_rng(4)
rates = {"u1": 40.0, "u2": 5.0, "u3": 25.0, "u4": 12.0}   # Hz
duration = 2.0
events = []
for unit, rate in rates.items():
    for t in np.sort(rng.uniform(0, duration, rng.poisson(rate * duration))):
        events.append((unit, float(t)))

raster, dropped = bin_spike_times(events, 0.010, 0.0, duration)
print("raster %d x %d, %d events dropped" % (*raster.shape, dropped))
for label, p in zip(raster.labels, raster.data.mean(axis=0)):
    print("  %s fires in %.1f%% of bins" % (label, 100 * p))

top = select_top_units(raster, 2)
print("two most active units:", top.labels)
print(top.data[:20].T)
