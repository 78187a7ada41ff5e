"""Feature-based clustering with a self-organizing map

Curves are summarised by nine numbers (length, middle value, median, mean,
variance and the half-curve means and variances). The map is trained on the
standardised features, its code vectors are grouped by Ward agglomeration,
and the number of groups is the smallest one reaching 80% explained variance.
"""
import json

import numpy as np

import curvanom as ca
from curvanom.som import assign, explained_variance_curve

ds = ca.generate(ca.GeneratorConfig(n_signals=300, n_anomalies=0, seed=4))
feats = np.vstack([ca.extract_features(s.x) for s in ds])
z, standardizer = ca.standardize_features(feats)

codebook = ca.train_som(z, ca.SomConfig(grid_rows=8, grid_cols=8, epochs=20, seed=4))
print("quantization error:", round(codebook.quantization_error(z), 3))

ev = explained_variance_curve(codebook)
for k in range(1, 9):
    print(f"k={k}: explained variance {ev[k - 1]:.3f}")

k = ca.choose_k(codebook, 0.8)
units = ca.hac_superclusters(codebook, k)
clusters = assign(ds.ids, z, codebook, units)
print(f"\nchosen k = {k}, cluster sizes {clusters.sizes()}")

# how the generator's four normal shapes spread over the clusters
shapes = json.loads(ds.metadata["shapes"])
for cl in sorted(clusters.sizes()):
    ids = clusters.members(cl)
    counts = {}
    for sid in ids:
        counts[shapes[sid]] = counts.get(shapes[sid], 0) + 1
    print(f"cluster {cl}: {dict(sorted(counts.items()))}")
