#!/usr/bin/env python3
"""Generates the bundled sample datasets under crates/core/data/samples.

Each dataset evolves a hairpin-rich ancestor into a handful of descendants with
substitutions (compensatory inside stems), deletions and insertions, and writes
the true evolutionary alignment as the Clustal reference.
"""
import os
import random
import sys

COMP = {"A": "U", "U": "A", "G": "C", "C": "G"}
PAIRS = [("G", "C"), ("C", "G"), ("A", "U"), ("U", "A"), ("G", "U"), ("U", "G")]


def ancestor(rng, length):
    seq, partner = [], {}
    while len(seq) < length:
        room = length - len(seq)
        if room >= 16 and rng.random() < 0.6:
            stem = rng.randint(4, min(7, (room - 4) // 2))
            loop = rng.randint(4, 7)
            if 2 * stem + loop > room:
                loop = 4
            left = [rng.choice("ACGU") for _ in range(stem)]
            start = len(seq)
            seq += left
            seq += [rng.choice("ACGUA") for _ in range(loop)]
            for k, b in enumerate(reversed(left)):
                partner[start + stem - 1 - k] = len(seq)
                partner[len(seq)] = start + stem - 1 - k
                seq.append(COMP[b])
        else:
            seq += [rng.choice("ACGU") for _ in range(rng.randint(1, 5))]
    return seq[:length], {i: j for i, j in partner.items() if i < length and j < length}


def descend(rng, anc, partner, sub, dele, ins):
    cols = list(anc)
    for i in range(len(cols)):
        if rng.random() < sub:
            j = partner.get(i)
            if j is not None and rng.random() < 0.7:
                a, b = rng.choice(PAIRS)
                cols[min(i, j)], cols[max(i, j)] = a, b
            else:
                cols[i] = rng.choice([c for c in "ACGU" if c != cols[i]])
    for i in range(len(cols)):
        if rng.random() < dele:
            cols[i] = "-"
    inserts = {}
    for i in range(len(cols)):
        if rng.random() < ins:
            inserts[i] = "".join(rng.choice("ACGU") for _ in range(rng.randint(1, 3)))
    if all(c == "-" for c in cols):
        cols[0] = anc[0]
    return cols, inserts


def build(rng, n, length, sub, dele, ins):
    anc, partner = ancestor(rng, length)
    descendants = [descend(rng, anc, partner, sub, dele, ins) for _ in range(n)]
    rows = [[] for _ in range(n)]
    for c in range(length):
        for r, (cols, _) in enumerate(descendants):
            rows[r].append(cols[c])
        for r, (_, inserts) in enumerate(descendants):
            if c in inserts:
                block = inserts[c]
                for q in range(n):
                    rows[q].extend(block if q == r else "-" * len(block))
    rows = ["".join(r) for r in rows]
    keep = [c for c in range(len(rows[0])) if any(r[c] != "-" for r in rows)]
    return ["".join(r[c] for c in keep) for r in rows]


def write(root, name, rows):
    d = os.path.join(root, name)
    os.makedirs(d, exist_ok=True)
    ids = [f"{name}_{k + 1}" for k in range(len(rows))]
    with open(os.path.join(d, "seqs.fasta"), "w") as f:
        for i, r in zip(ids, rows):
            f.write(f">{i}\n{r.replace('-', '')}\n")
    pad = max(map(len, ids))
    with open(os.path.join(d, "ref.aln"), "w") as f:
        f.write("CLUSTAL W multiple sequence alignment\n\n")
        for s in range(0, len(rows[0]), 60):
            for i, r in zip(ids, rows):
                f.write(f"{i:<{pad}}  {r[s:s + 60]}\n")
            f.write("\n")


SPECS = [
    ("trna_like_01", 5, 75, 0.10, 0.02, 0.015),
    ("trna_like_02", 6, 76, 0.15, 0.03, 0.02),
    ("hairpins_03", 5, 66, 0.12, 0.03, 0.02),
    ("hairpins_04", 7, 90, 0.10, 0.02, 0.02),
    ("hairpins_05", 8, 100, 0.18, 0.03, 0.02),
    ("srp_like_06", 6, 110, 0.12, 0.03, 0.02),
    ("srp_like_07", 5, 120, 0.20, 0.04, 0.03),
    ("u5_like_08", 8, 70, 0.25, 0.04, 0.03),
    ("rrna_like_09", 6, 140, 0.08, 0.02, 0.01),
    ("intron_like_10", 5, 142, 0.15, 0.03, 0.02),
]

if __name__ == "__main__":
    root = sys.argv[1] if len(sys.argv) > 1 else "crates/core/data/samples"
    for seed, (name, n, length, sub, dele, ins) in enumerate(SPECS):
        rng = random.Random(1000 + seed)
        write(root, name, build(rng, n, length, sub, dele, ins))
