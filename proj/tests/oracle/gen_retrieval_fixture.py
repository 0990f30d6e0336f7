#!/usr/bin/env python3
"""Freezes brute-force retrieval expectations for the sparse and dense
indices: 5 toy knowledge bases x 20 queries each, top-10 per query.

Run from tests/oracle/:  python3 gen_retrieval_fixture.py
Writes tests/fixtures/retrieval/.
"""

import os
import random

import oracle_lib as oracle

OUT = os.path.join(os.path.dirname(__file__), "..", "fixtures", "retrieval")

WORDS = [
    "gastric", "ulcer", "carcinoma", "renal", "failure", "acute", "chronic",
    "hepatitis", "viral", "infection", "cardiac", "arrest", "myocardial",
    "infarction", "diabetes", "mellitus", "insulin", "receptor", "syndrome",
    "anemia", "aplastic", "fever", "typhoid", "pulmonary", "embolism",
    "fibrosis", "cystic", "lupus", "erythematosus", "nephritis", "migraine",
    "aura", "asthma", "bronchial", "sclerosis", "multiple", "lateral",
    "hypertension", "arterial", "pneumonie", "aiguë", "fièvre",
    "hépatique", "insuffisance", "rénale", "diabète",
    "anémie", "Lungenentzündung", "Nierenversagen", "Blutarmut",
]

TYPES = ["T047", "T046", "T184", "T061", "T121", "T023", "T007"]
LANGS = ["en", "fr", "de", "es"]


def make_kb(rng, n_concepts):
    kb = {}
    for i in range(n_concepts):
        cid = "C%04d" % (i + 1)
        n_alias = rng.randint(1, 4)
        aliases = set()
        while len(aliases) < n_alias:
            n_words = rng.randint(1, 3)
            value = " ".join(rng.choice(WORDS) for _ in range(n_words))
            lang = rng.choice(LANGS)
            if all(a[1].lower() != value.lower() for a in aliases):
                aliases.add((lang, value))
        aliases = sorted(aliases)
        canonical = aliases[0][1]
        kb[cid] = {
            "canonical_name": canonical,
            "semantic_types": [rng.choice(TYPES)],
            "aliases": [{"language": l, "value": v} for l, v in aliases],
        }
    return kb


def make_queries(rng, kb, n_queries):
    queries = []
    cids = sorted(kb)
    for _ in range(n_queries):
        mode = rng.random()
        if mode < 0.4:  # exact alias
            c = kb[rng.choice(cids)]
            queries.append(rng.choice(c["aliases"])["value"])
        elif mode < 0.8:  # perturbed alias
            c = kb[rng.choice(cids)]
            text = rng.choice(c["aliases"])["value"]
            pos = rng.randrange(len(text))
            queries.append(text[:pos] + rng.choice("aeiou") + text[pos + 1:])
        else:  # random words
            queries.append(" ".join(rng.choice(WORDS)
                                    for _ in range(rng.randint(1, 2))))
    return queries


def check_margins(ranked, k, min_gap):
    """Adjacent score gaps within the frozen top-k must exceed min_gap (or
    be exact ties, which both sides break by concept id), and the gap at the
    truncation boundary must be a strict margin, so float round-off cannot
    change the frozen list. `ranked` is retrieved k+1 deep."""
    for i in range(min(len(ranked), k) - 1):
        gap = ranked[i][1] - ranked[i + 1][1]
        if 0 < gap < min_gap:
            return False
    if len(ranked) > k and ranked[k - 1][1] - ranked[k][1] < min_gap:
        return False
    return True


def main():
    os.makedirs(OUT, exist_ok=True)
    rng = random.Random(20260826)
    k = 10
    expected = {"k": k, "kbs": []}
    kb_index = 0
    while len(expected["kbs"]) < 5:
        kb = make_kb(rng, 30 + 5 * kb_index)
        queries = make_queries(rng, kb, 20)
        model = oracle.tfidf_model(kb)
        entry = {"kb_file": "kb_%d.jsonl" % len(expected["kbs"]),
                 "queries": []}
        ok = True
        for q in queries:
            sparse = oracle.query_sparse(kb, model, q, k + 1)[:k]
            dense = oracle.query_dense(kb, q, k + 1)
            # dense scores are bit-exact across implementations (single-
            # precision vectors, double accumulation in a fixed order), so
            # only the sparse side needs a round-off margin
            if not check_margins(oracle.query_sparse(kb, model, q, k + 1), k, 1e-9) or \
               not check_margins(dense, k, 0.0):
                ok = False
                break
            dense = dense[:k]
            entry["queries"].append({
                "text": q,
                "sparse": [{"concept_id": c, "score": s} for c, s in sparse],
                "dense": [{"concept_id": c, "score": s} for c, s in dense],
            })
        kb_index += 1
        if not ok:
            continue  # reroll this KB; margins too tight for a frozen oracle
        oracle.kb_to_jsonl(kb, os.path.join(OUT, entry["kb_file"]))
        expected["kbs"].append(entry)
    oracle.write_json(os.path.join(OUT, "expected.json"), expected)
    print("wrote", OUT)


if __name__ == "__main__":
    main()
