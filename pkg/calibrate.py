"""Dev harness: measure per-toggle accuracy of the synthetic benchmark."""

import sys
import time

import numpy as np

from tata.adaptation import StreamRecord, process_stream
from tata.config import RunConfig
from tata.fixtures import WorldEncoder, make_world, sample_domain
from tata.textspace import TextBank

CUMULATIVE = [
    ("zero-shot", dict(use_aap=False, use_bdc=False, use_mac=False, use_sv=False)),
    ("+AAP", dict(use_aap=True, use_bdc=False, use_mac=False, use_sv=False)),
    ("+AAP+BDC", dict(use_aap=True, use_bdc=True, use_mac=False, use_sv=False)),
    ("+AAP+BDC+MAC", dict(use_aap=True, use_bdc=True, use_mac=True, use_sv=False)),
    ("full", dict(use_aap=True, use_bdc=True, use_mac=True, use_sv=True)),
]


def run_one(world, records, toggles, theta):
    cfg = RunConfig(theta=theta, seed=world.seed, **toggles).validate()
    noun_bank = TextBank.from_rows(world.noun_texts, world.noun_vectors)
    attr_bank = TextBank.from_rows(world.attribute_texts, world.attribute_vectors)
    results, summary = process_stream(
        records, world.class_names, world.class_anchors, cfg,
        noun_bank=noun_bank, attribute_bank=attr_bank, encoder=WorldEncoder(world),
    )
    return summary.accuracy, summary.admitted


def main():
    kw = {}
    for arg in sys.argv[1:]:
        k, v = arg.split("=")
        kw[k] = float(v) if "." in v else int(v)
    n_seeds = kw.pop("seeds", 10)
    n_per_class = kw.pop("n_per_class", 20)
    theta = kw.pop("theta", 0.4)

    table = {name: [] for name, _ in CUMULATIVE}
    admits = {name: [] for name, _ in CUMULATIVE}
    t0 = time.time()
    for seed in range(n_seeds):
        world = make_world(seed=seed, **kw)
        vectors, ids, labels = sample_domain(world, n_per_class, shifted=True, seed=seed + 1)
        records = [StreamRecord(i, v, l) for i, v, l in zip(ids, vectors, labels)]
        for name, toggles in CUMULATIVE:
            acc, admitted = run_one(world, records, toggles, theta)
            table[name].append(acc)
            admits[name].append(admitted)
    elapsed = time.time() - t0

    print(f"seeds={n_seeds} n_per_class={n_per_class} theta={theta} extra={kw} ({elapsed:.1f}s)")
    prev = None
    for name, _ in CUMULATIVE:
        accs = np.array(table[name])
        mean = accs.mean() * 100
        delta = "" if prev is None else f"  d={mean - prev:+.2f}"
        print(f"{name:>14}: {mean:6.2f}%  (min {accs.min()*100:.1f}, max {accs.max()*100:.1f})"
              f"  admits ~{np.mean(admits[name]):.0f}{delta}")
        prev = mean
    print(f"full - zero-shot = {np.mean(table['full']) * 100 - np.mean(table['zero-shot']) * 100:+.2f} points")


if __name__ == "__main__":
    main()
