"""Show how the winning strategy depends on how train and test samples are split.

Training on alternate samples leaves every test sample next to a training
sample, which favors nearest-neighbor lookup.  Training on the first half of
the track forces extrapolation into a region with different community mixtures,
where shared community structure pays off.

Run with ``python3 demos/regime_comparison.py [seed ...]``.  About 30 s per seed.
"""
import sys

from hotspot_topics.benchmark import BenchmarkConfig, run_benchmark

seeds = [int(a) for a in sys.argv[1:]] or [1]
cfg = BenchmarkConfig()
print(f"{'seed':>4} {'regime':12} {'bayes':>6} {'topic':>6} {'nn':>6} {'kmeans':>6}  K")
for seed in seeds:
    for regime in ("interleaved", "halves"):
        r = run_benchmark(seed, regime, cfg)
        a = r.auc
        print(f"{seed:>4} {regime:12} {r.bayes_auc:6.3f} {a['topic']:6.3f} {a['nn']:6.3f} {a['kmeans']:6.3f}  {r.n_topics}")
