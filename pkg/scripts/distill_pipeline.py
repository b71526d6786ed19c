"""Teacher-student distillation comparison on a synthetic text corpus.

Clusters a merge-stressed embedding corpus with the balance-regularized
model and with Euclidean k-means, curates a pseudo-labeled text set from
each teacher (influence-ranked picks for the mixture, balanced random picks
for k-means), trains the same hashed n-gram student on both, and compares
held-out accuracy against the teacher's own labels.
"""

import argparse

import numpy as np

from spheremix.baselines import kmeans_fit
from spheremix.distill import (
    FeaturizerSpec,
    balanced_random_sample,
    build_pseudo_labeled,
    evaluate_student,
    split_dataset,
    train_student,
)
from spheremix.gis import GisConfig
from spheremix.inference import FitConfig, fit
from spheremix.synth import crowded_trio_corpus, make_text_corpus


def student_heldout(ds, seed, epochs, lr, buckets):
    train, _, test = split_dataset(ds, seed=seed)
    model = train_student(
        train, epochs=epochs, lr=lr, seed=seed, spec=FeaturizerSpec(buckets=buckets)
    )
    return evaluate_student(model, test)[0]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2400)
    ap.add_argument("--d", type=int, default=16)
    ap.add_argument("--k", type=int, default=6)
    ap.add_argument("--lambda", dest="lam", type=float, default=5000.0)
    ap.add_argument("--distill-m", type=int, default=150)
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--lr", type=float, default=0.5)
    ap.add_argument("--buckets", type=int, default=1 << 15)
    ap.add_argument("--seeds", type=int, default=10)
    args = ap.parse_args()

    print(f"n={args.n} d={args.d} k={args.k} lambda={args.lam} m={args.distill_m}")
    print("seed\tregularized\tkmeans")
    gem_accs, km_accs = [], []
    for seed in range(args.seeds):
        X, y = crowded_trio_corpus(args.n, args.d, seed)
        texts = make_text_corpus(y, args.k, seed=seed)

        res = fit(X, FitConfig(k=args.k, lam=args.lam, seed=seed))
        ds_gem = build_pseudo_labeled(
            res.theta, res.gamma, X, texts, args.distill_m, GisConfig(), seed=seed
        )
        acc_gem = student_heldout(ds_gem, seed, args.epochs, args.lr, args.buckets)

        km = kmeans_fit(X, args.k, seed=seed)
        ds_km = balanced_random_sample(km.labels, texts, args.k, args.distill_m, seed=seed)
        acc_km = student_heldout(ds_km, seed, args.epochs, args.lr, args.buckets)

        gem_accs.append(acc_gem)
        km_accs.append(acc_km)
        print(f"{seed}\t{acc_gem:.4f}\t{acc_km:.4f}")
    print(f"mean\t{np.mean(gem_accs):.4f}\t{np.mean(km_accs):.4f}")


if __name__ == "__main__":
    main()
