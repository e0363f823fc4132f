#!/usr/bin/env python3
"""Generate a surrogate mushroom table in the UCI agaricus-lepiota format.

This is NOT the UCI data. It exists so the loader, tests and desk-scale runs
work on machines without the real file. Rows are drawn from a seeded
class-conditional categorical model: odor is close to decisive (as in the
real table, where a linear classifier separates the classes), every other
attribute has weakly informative class-conditional frequencies, stalk-root
carries '?' for roughly 30% of rows and veil-type is constant.

    python3 scripts/make_mushroom_surrogate.py [--out data/mushroom_surrogate.data]
"""
import argparse
import random

ATTRIBUTES = [
    ("cap-shape", "bcxfks"),
    ("cap-surface", "fgys"),
    ("cap-color", "nbcgrpuewy"),
    ("bruises", "tf"),
    ("odor", "alcyfmnps"),
    ("gill-attachment", "adfn"),
    ("gill-spacing", "cwd"),
    ("gill-size", "bn"),
    ("gill-color", "knbhgropuewy"),
    ("stalk-shape", "et"),
    ("stalk-root", "bcuezr"),
    ("stalk-surface-above-ring", "fyks"),
    ("stalk-surface-below-ring", "fyks"),
    ("stalk-color-above-ring", "nbcgopewy"),
    ("stalk-color-below-ring", "nbcgopewy"),
    ("veil-type", "pu"),
    ("veil-color", "nowy"),
    ("ring-number", "not"),
    ("ring-type", "ceflnpsz"),
    ("spore-print-color", "knbhrouwy"),
    ("population", "acnsvy"),
    ("habitat", "glmpuwd"),
]

ODOR = {
    "e": {"a": 0.1, "l": 0.1, "n": 0.8},
    "p": {"f": 0.55, "y": 0.14, "s": 0.14, "p": 0.07, "c": 0.05, "m": 0.01, "n": 0.04},
}


def dirichlet(rng, n, alpha):
    draws = [rng.gammavariate(alpha, 1.0) for _ in range(n)]
    total = sum(draws)
    return [d / total for d in draws]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/mushroom_surrogate.data")
    ap.add_argument("--seed", type=int, default=20200604)
    ap.add_argument("--edible", type=int, default=4208)
    ap.add_argument("--poisonous", type=int, default=3916)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    tables = {}
    for name, symbols in ATTRIBUTES:
        if name == "odor":
            tables[name] = {c: (list(ODOR[c]), list(ODOR[c].values())) for c in "ep"}
        elif name == "veil-type":
            tables[name] = {c: (["p"], [1.0]) for c in "ep"}
        else:
            tables[name] = {c: (list(symbols), dirichlet(rng, len(symbols), 0.6)) for c in "ep"}

    labels = ["e"] * args.edible + ["p"] * args.poisonous
    rng.shuffle(labels)
    with open(args.out, "w", newline="\n") as fh:
        for label in labels:
            row = [label]
            for name, _ in ATTRIBUTES:
                symbols, weights = tables[name][label]
                value = rng.choices(symbols, weights)[0]
                if name == "stalk-root" and rng.random() < 0.3:
                    value = "?"
                row.append(value)
            fh.write(",".join(row) + "\n")
    print(f"wrote {len(labels)} rows to {args.out}")


if __name__ == "__main__":
    main()
