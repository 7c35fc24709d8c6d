"""
Basket completion from a basket file
====================================

Load baskets, split 80/20, train both models and compare mean percentile
rank of a held-out item. Writes a small synthetic basket file first so the
script runs anywhere; point ``path`` at a real file to use your own data.
"""
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from nsdpp import data, evaluation, synthetic, trainer
from nsdpp.kernel import assemble_L

tmp = Path(tempfile.mkdtemp())
spec = synthetic.OracleSpec(M=60, n_groups=4, basket_size=5, min_basket_size=2, n_baskets=600)
generated, _ = synthetic.generate(spec)
path = tmp / "baskets.txt"
data.write(generated, path)

ds = data.split(data.load(path), seed=0)
print(f"{ds.M} items, {len(ds.train)} train / {len(ds.validation)} validation / {len(ds.test)} test")

cfg = trainer.TrainConfig(D_prime=10, max_epochs=500)
for name, c in (("nonsymmetric", cfg), ("symmetric", replace(cfg, symmetric_only=True))):
    trace = trainer.fit(c, ds)
    L = assemble_L(trace.final_params).entries
    ranks, skipped = evaluation.percentile_ranks(L, ds.test, seed=0)
    lo, hi = evaluation.bootstrap_ci(np.mean, ranks, n_boot=500, seed=0)
    print(f"{name:12s} MPR {ranks.mean():.1f} (95% CI {lo:.1f}-{hi:.1f}), {trace.epochs_run} epochs")

# Recommend for one test basket.
basket = ds.test[0]
items, scores = evaluation.next_item_scores(L, basket[:-1])
top = items[np.argsort(-scores)[:5]]
print("observed", [ds.item_id(i) for i in basket[:-1]], "-> suggestions", [ds.item_id(i) for i in top])
