"""Confidence tubes versus conditional quantiles

Forty aligned ramps with different offsets form a training set. A curve that
stays inside the pointwise envelope but moves in an unusual way is missed by
the tube and caught by the lag-1 conditional quantile check, while a curve
that leaves the envelope briefly is the reverse case.
"""
import numpy as np

import curvanom as ca

rng = np.random.default_rng(1)
t = np.arange(200)
train = np.array([t * 0.5 + rng.uniform(-20, 20) + rng.normal(0, 0.3, t.size)
                  for _ in range(40)])

tube = ca.fit_ct(train, alpha=0.05, channel="X")
table = ca.fit_cq(train, alpha=0.05, n_bins=20, min_bin_count=30, channel="X")
print("tube width at t=100:", round(tube.upper[100] - tube.lower[100], 2))
print("CQ bins after merging:", table.n_bins)

# oscillates inside the tube: values are plausible, steps are not
wiggle = t * 0.5 + 12 * np.sign(np.sin(t / 3))
# one typical ramp with a short excursion above the tube
spike = t * 0.5 + rng.normal(0, 0.3, t.size)
spike[90:110] += 40

for name, curve in (("training ramp", train[0]), ("wiggle", wiggle), ("spike", spike)):
    ct = ca.detect_ct(curve, tube)
    cq = ca.detect_cq(curve, table)
    print(f"{name:>13}: CT score {ct.score:.2f} anomaly={ct.is_anomaly!s:5}  "
          f"CQ score {cq.score:.2f} anomaly={cq.is_anomaly}")
