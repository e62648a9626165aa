#!/usr/bin/env python3
"""Brute-force node and edge counts for a news corpus plus feature manifest.

Usage: toy_counts.py NEWS_JSONL FEATURES_JSONL [TAU ...]

Re-derives the graph from the construction rules without the C++ code and
prints a JSON summary. Counts do not depend on the node permutation.
"""
import itertools
import json
import math
import sys

import numpy as np

VIEW_OF = {}
for c in range(80):
    VIEW_OF[c] = "I_in"
for c in range(80, 98):
    VIEW_OF[c] = "T_in"
for c in (98, 99, 100, 101):
    VIEW_OF[c] = "fact"
for c in (102, 103, 104):
    VIEW_OF[c] = "IT_cross"
VIEW_OF[105] = "I_in"
for c in (106, 107, 109, 110, 111, 113):
    VIEW_OF[c] = "T_cross"
for c in (108, 112):
    VIEW_OF[c] = "I_cross"


def load(news_path, feat_path):
    news = [json.loads(l) for l in open(news_path, encoding="utf-8") if l.strip()]
    feats = {}
    for l in open(feat_path, encoding="utf-8"):
        if not l.strip():
            continue
        r = json.loads(l)
        key = (r["owner"]["fact_id"], r["owner"]["selector"])
        feats.setdefault(key, {})[r["kind"]] = r["payload"]
    return news, feats


def cos(u, v):
    # float32 storage, float64 arithmetic, left-to-right sums
    u = [float(x) for x in np.asarray(u, dtype=np.float32)]
    v = [float(x) for x in np.asarray(v, dtype=np.float32)]
    dot = sum(a * b for a, b in zip(u, v))
    uu = sum(a * a for a in u)
    vv = sum(b * b for b in v)
    return dot / math.sqrt(uu * vv)


def main():
    news_path, feat_path = sys.argv[1], sys.argv[2]
    taus = [float(t) for t in sys.argv[3:]] or [0.8]
    news, feats = load(news_path, feat_path)

    nodes = []  # keys
    edges = set()  # (code, a, b); a/b node keys, unordered codes use sorted pairs

    def sym(code, a, b):
        edges.add((code,) + tuple(sorted([a, b])))

    def directed(code, a, b):
        edges.add((code, a, b))

    sim_nodes = []  # (key, role, fact_id, vector)
    for r in news:
        f = r["fact_id"]
        nodes.append(("fact", f))
        for sel in ("title", "content"):
            nodes.append((sel, f))
        imgs = [("image", f, k) for k in range(len(r["image_paths"]))]
        descs = [("image_desc", f, k) if d else None
                 for k, d in enumerate(r["image_descriptions"])]
        nodes += imgs + [d for d in descs if d]

        directed(98, ("fact", f), ("title", f))
        directed(99, ("fact", f), ("content", f))
        for k, img in enumerate(imgs):
            directed(100, ("fact", f), img)
            if descs[k]:
                directed(102, img, descs[k])
            directed(103, img, ("title", f))
            directed(104, img, ("content", f))

        # L3
        for key, sel in [(("title", f), "title"), (("content", f), "content")] + [
                (d, "image_desc[%d]" % d[2]) for d in descs if d]:
            ents = feats.get((f, sel), {}).get("entity", [])
            seen = []
            for e in ents:
                tag = (e["surface"], e["ner_index"])
                if tag not in seen:
                    seen.append(tag)
            for i, (surface, ner) in enumerate(seen):
                ent = ("entity", key, i)
                nodes.append(ent)
                directed(80 + ner, key, ent)
        for img in imgs:
            dets = feats.get((f, "image[%d]" % img[2]), {}).get("detection", [])
            for i, d in enumerate(dets):
                obj = ("object", img, i)
                nodes.append(obj)
                directed(d["class_index"], img, obj)

        for key, sel, role in [(("title", f), "title", "title"),
                               (("content", f), "content", "content")] + [
                                   (img, "image[%d]" % img[2], "image") for img in imgs]:
            vec = feats.get((f, sel), {}).get("embedding")
            if vec is not None:
                sim_nodes.append((key, role, f, vec))

    by_fine = {}
    for r in news:
        fine = r["event"].split("→", 1)[1] if "→" in r["event"] else ""
        if fine:
            by_fine.setdefault(fine, []).append(r)
    for group in by_fine.values():
        for a, b in itertools.combinations(group, 2):
            fa, fb = a["fact_id"], b["fact_id"]
            sym(101, ("fact", fa), ("fact", fb))
            sym(106, ("title", fa), ("title", fb))
            for i in range(len(a["image_paths"])):
                for j in range(len(b["image_paths"])):
                    sym(108, ("image", fa, i), ("image", fb, j))
            directed(109, ("content", fa), ("title", fb))
            directed(109, ("content", fb), ("title", fa))

    by_coarse = {}
    for r in news:
        by_coarse.setdefault(r["event"].split("→", 1)[0], []).append(r)
    for group in by_coarse.values():
        group = sorted(group, key=lambda r: (r["time"], r["fact_id"]))
        for a, b in zip(group, group[1:]):
            directed(107, ("content", a["fact_id"]), ("content", b["fact_id"]))

    pair_cos = []
    for (ka, ra, fa, va), (kb, rb, fb, vb) in itertools.combinations(sim_nodes, 2):
        if ra == "image" and rb == "image":
            code = 105 if fa == fb else 112
        elif fa == fb:
            continue
        elif ra == rb == "title":
            code = 111
        elif ra == rb == "content":
            code = 110
        elif {ra, rb} == {"title", "content"}:
            code = 113
        else:
            continue
        pair_cos.append((code, ka, kb, cos(va, vb)))

    base = len(edges)
    out = {"num_nodes": len(nodes), "base_edges": base, "per_tau": {}}
    for tau in taus:
        sim = {(c,) + tuple(sorted([a, b])) for c, a, b, x in pair_cos if x >= tau}
        allv = {}
        for e in list(edges) + list(sim):
            allv[VIEW_OF[e[0]]] = allv.get(VIEW_OF[e[0]], 0) + 1
        total = base + len(sim)
        out["per_tau"]["%g" % tau] = {
            "similarity_edges": len(sim),
            "num_triples": total,
            "views": dict(sorted(allv.items())),
            "rho_mean": 2.0 * total / len(nodes),
        }
    print(json.dumps(out, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
