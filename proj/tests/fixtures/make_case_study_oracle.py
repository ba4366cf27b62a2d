#!/usr/bin/env python3
"""Regenerates the case-study score table and its frozen expected values.

Scores are a deterministic hash of the rendered turn text. Expected nugget
scores are recomputed here by brute force (every size-K subset is tried and
the one with the largest total wins), independently of the C++ engine.

    python3 tests/fixtures/make_case_study_oracle.py
"""

import hashlib
import itertools
import json
import math
import pathlib

HERE = pathlib.Path(__file__).resolve().parent
K, L = 5, 3
W_PHI, W_DIFF, W_SAME = 10.0, 5.0, 2.0


def score_of(text):
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    unit = int.from_bytes(digest[:8], "big") / 2**64
    return round(0.2 + 0.75 * unit, 6)


def render(nuggets, slot=None, replacement=None, delete=False):
    parts = []
    for i, n in enumerate(nuggets):
        if i == slot:
            if delete:
                continue
            parts.append(replacement)
        else:
            parts.append(n["text"])
    return " ".join(parts)


def brute_mean_difference(s_t, scores, k):
    size = min(k, len(scores))
    best = max(itertools.combinations(scores, size), key=sum)
    return sum(s_t - s for s in best) / size


def main():
    annotation = json.loads((HERE / "case_study.json").read_text(encoding="utf-8"))
    nuggets = annotation["nuggets"]
    table = {}

    original = render(nuggets)
    assert original == annotation["canonical_text"]
    table[original] = score_of(original)

    expected = {"s_original": table[original], "nuggets": []}
    for pos, n in enumerate(nuggets):
        cands = annotation["candidates"].get(n["id"], {"diff": [], "same": []})
        deleted = render(nuggets, pos, delete=True)
        table[deleted] = score_of(deleted)
        diff_texts = [render(nuggets, pos, c["text"]) for c in cands["diff"]]
        same_texts = [render(nuggets, pos, t) for t in cands["same"]]
        for t in diff_texts + same_texts:
            table[t] = score_of(t)

        s_t = table[original]
        d_phi = s_t - table[deleted]
        diff_scores = [table[t] for t in diff_texts]
        same_scores = [table[t] for t in same_texts]
        md_diff = brute_mean_difference(s_t, diff_scores, K) if diff_scores else None
        md_same = brute_mean_difference(s_t, same_scores, L) if same_scores else None
        x = W_PHI * d_phi + W_DIFF * (md_diff or 0.0) + W_SAME * (md_same or 0.0)
        ns = 1.0 / (1.0 + math.exp(-x))
        expected["nuggets"].append({
            "nugget_id": n["id"],
            "s_deleted": table[deleted],
            "d_phi": d_phi,
            "md_diff": md_diff,
            "md_same": md_same,
            "effective_k": min(K, len(diff_scores)),
            "effective_l": min(L, len(same_scores)),
            "ns": ns,
        })

    (HERE / "case_study_scores.json").write_text(
        json.dumps(table, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    (HERE / "case_study_expected.json").write_text(
        json.dumps(expected, indent=2) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
