#!/usr/bin/env python3
"""Convert an .npz citation-graph archive into a text bundle directory.

The archive layout is the common one for these datasets: CSR arrays
adj_{data,indices,indptr,shape}, attr_{data,indices,indptr,shape} (or a dense
attr_matrix), and a labels vector. The graph is standardized the usual way:
edge weights dropped, edges symmetrized, self-loops removed, and everything
restricted to the largest connected component.

Usage: convert_npz.py input.npz output_dir dataset_name
"""
import json
import sys

import numpy as np
import scipy.sparse as sp


def csr_from(f, keys, stem):
    if f"{stem}.data" in keys:
        return sp.csr_matrix((f[f"{stem}.data"], f[f"{stem}.indices"], f[f"{stem}.indptr"]),
                             shape=f[f"{stem}.shape"])
    if f"{stem}_data" in keys:
        return sp.csr_matrix((f[f"{stem}_data"], f[f"{stem}_indices"], f[f"{stem}_indptr"]),
                             shape=f[f"{stem}_shape"])
    if stem in keys:
        return sp.csr_matrix(f[stem])
    raise KeyError(f"no CSR arrays for '{stem}' in archive")


def load_npz(path):
    with np.load(path, allow_pickle=True) as f:
        keys = set(f.keys())
        adj = csr_from(f, keys, "adj_matrix" if "adj_matrix.data" in keys else "adj")
        attr = csr_from(f, keys, "attr_matrix" if "attr_matrix.data" in keys else "attr")
        labels = f["labels"]
    return adj, attr, labels


def standardize(adj, attr, labels):
    adj = adj.copy()
    adj.data[:] = 1.0
    adj = adj.maximum(adj.T).tocsr()
    adj.setdiag(0)
    adj.eliminate_zeros()
    ncomp, comp = sp.csgraph.connected_components(adj, directed=False)
    if ncomp > 1:
        sizes = np.bincount(comp)
        keep = np.where(comp == sizes.argmax())[0]
        adj = adj[keep][:, keep].tocsr()
        attr = attr[keep]
        labels = labels[keep]
    return adj, attr.tocsr(), labels


def main():
    if len(sys.argv) != 4:
        sys.exit(__doc__)
    npz_path, out_dir, name = sys.argv[1:]
    adj, attr, labels = standardize(*load_npz(npz_path))
    n = adj.shape[0]
    d = attr.shape[1]
    c = int(labels.max()) + 1

    import os
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "meta.json"), "w") as f:
        json.dump({"c": c, "d": d, "format_version": 1, "n": n, "name": name},
                  f, indent=2, sort_keys=True)
        f.write("\n")

    coo = sp.triu(adj, k=1).tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(os.path.join(out_dir, "edges.tsv"), "w") as f:
        for i, j in zip(coo.row[order], coo.col[order]):
            f.write(f"{i}\t{j}\n")

    attr = attr.tocoo()
    order = np.lexsort((attr.col, attr.row))
    with open(os.path.join(out_dir, "features.tsv"), "w") as f:
        for i, j, v in zip(attr.row[order], attr.col[order], attr.data[order]):
            f.write(f"{i}\t{j}\t{float(v)!r}\n")

    with open(os.path.join(out_dir, "labels.tsv"), "w") as f:
        for i, y in enumerate(labels):
            f.write(f"{i}\t{int(y)}\n")

    print(f"{name}: n={n} undirected_edges={adj.nnz // 2} d={d} c={c}")


if __name__ == "__main__":
    main()
