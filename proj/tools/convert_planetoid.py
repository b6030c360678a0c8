#!/usr/bin/env python3
"""Convert a raw Planetoid citation dataset (ind.<name>.*) to the TSV
dataset-directory format this project loads.

Usage: convert_planetoid.py <raw_dir> <name> <out_dir>

Expects the eight standard files (x, y, tx, ty, allx, ally, graph,
test.index). Split tags follow the public protocol: the first 140 (Cora)
labeled nodes are "train", the canonical 1000 index-file nodes are "test".
Nodes outside the public train/test sets are tagged "val" (this format has
no "unused" tag); the canonical 500-node validation range is a prefix of
that set, and the test measurement is unaffected.
"""

import pickle
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def load_pickle(path: Path):
    with open(path, "rb") as f:
        return pickle.load(f, encoding="latin1")


def main() -> int:
    if len(sys.argv) != 4:
        print(__doc__.strip(), file=sys.stderr)
        return 1
    raw, name, out = Path(sys.argv[1]), sys.argv[2], Path(sys.argv[3])

    objs = {k: load_pickle(raw / f"ind.{name}.{k}") for k in
            ("x", "y", "tx", "ty", "allx", "ally", "graph")}
    test_idx = np.array(
        [int(line) for line in (raw / f"ind.{name}.test.index").read_text().split()])
    test_range = np.sort(test_idx)

    features = sp.vstack((objs["allx"], objs["tx"])).tolil()
    labels = np.vstack((objs["ally"], objs["ty"]))
    # The test rows arrive in index-file order; put them at their node ids.
    features[test_idx, :] = features[test_range, :]
    labels[test_idx, :] = labels[test_range, :]

    n = features.shape[0]
    n_train = objs["y"].shape[0]

    # Isolated-in-index-gap nodes (citeseer) keep zero features and get a
    # dummy label row; give them class 0 so the file stays well-formed.
    label_ids = labels.argmax(axis=1)

    split = np.full(n, "val", dtype=object)
    split[:n_train] = "train"
    split[test_range] = "test"

    out.mkdir(parents=True, exist_ok=True)
    adjacency = objs["graph"]
    with open(out / "graph.tsv", "w") as f:
        for u in sorted(adjacency):
            for v in adjacency[u]:
                if u < v:
                    f.write(f"{u}\t{v}\n")
    dense = features.toarray()
    with open(out / "features.tsv", "w") as f:
        for row in dense:
            f.write("\t".join(f"{v:.17g}" for v in row) + "\n")
    with open(out / "labels.tsv", "w") as f:
        f.writelines(f"{c}\n" for c in label_ids)
    with open(out / "splits.tsv", "w") as f:
        f.writelines(f"{s}\n" for s in split)

    print(f"wrote {out}: n={n}, train={n_train}, test={len(test_range)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
