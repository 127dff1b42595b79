"""Head-to-head: aggregated AdamW vs local AdamW vs FedAvg SGD.

Ten clients hold a Dirichlet(0.1)-partitioned 10-class blob problem and
train a softmax classifier under per-sample clipping and sigma = 1
noise. The aggregated variant shares block means of v, corrects the
DP-induced bias of the preconditioner, and aligns local steps with the
global direction; the baselines drop those pieces.
"""
from dataclasses import replace

import numpy as np

from dpfed import RunConfig, run

base = RunConfig(model="logistic", dataset="blobs", num_classes=10,
                 num_clients=10, rounds=30, local_steps=10, sample_rate=0.2,
                 clip_norm=0.1, noise_multiplier=1.0, lr=1e-2,
                 weight_decay=0.01, gamma=0.5, adam_eps=1e-2, beta2=0.9,
                 alpha=0.1, output_dir="runs/demo_variants")

init_loss = run(replace(base, rounds=0)).final_loss
print(f"loss at random init: {init_loss:.4f}\n")
print(f"{'variant':<16} {'final loss':>10} {'accuracy':>9} "
      f"{'eps (ledger)':>13}")
for variant in ("dp_fedadamw", "dp_local_adamw", "dp_fedavg_sgd"):
    losses, accs = [], []
    for seed in range(3):
        s = run(replace(base, variant=variant, seed=seed))
        losses.append(s.final_loss)
        accs.append(s.final_accuracy)
        eps = s.eps_rdp
    print(f"{variant:<16} {np.mean(losses):>10.4f} {np.mean(accs):>9.3f} "
          f"{eps:>13.2f}")
print("\n(all variants spend the same privacy budget; the aggregated")
print(" variant converges lowest on this non-IID problem)")
