"""Local-global alignment pulls client trajectories back together.

Two clients minimize quadratics with different centers; after K private
local steps their parameters drift apart. The server's alignment
direction Delta_G (the negative average descent direction of the last
round) is added to every local step with coefficient gamma, which
systematically reduces the drift metric: the mean squared distance of
client endpoints from their mean.
"""
from dataclasses import replace

import numpy as np

from dpfed import RunConfig, run

base = RunConfig(variant="dp_fedadamw", model="quadratic",
                 dataset="quadratics", dim=5, num_clients=2, rounds=30,
                 local_steps=10, sample_rate=0.2, samples_per_client=50,
                 heterogeneity=1.0, clip_norm=1.0, noise_multiplier=1.0,
                 lr=0.05, weight_decay=0.0, adam_eps=1e-2, beta2=0.9,
                 output_dir="runs/demo_drift")

print("mean client drift over rounds 5-30 (2 heterogeneous clients):\n")
print(f"{'seed':>4} {'gamma=0':>12} {'gamma=0.5':>12} {'reduction':>10}")
wins = 0
for seed in range(5):
    drift = {}
    for gamma in (0.0, 0.5):
        summary = run(replace(base, seed=seed, gamma=gamma))
        drift[gamma] = np.mean([r.drift for r in summary.metrics[4:]])
    rel = 1 - drift[0.5] / drift[0.0]
    wins += drift[0.5] < drift[0.0]
    print(f"{seed:>4} {drift[0.0]:>12.4e} {drift[0.5]:>12.4e} {rel:>9.1%}")
print(f"\nalignment reduced drift on {wins}/5 seeds.")
