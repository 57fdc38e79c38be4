#!/usr/bin/env python3
"""Builds the synthetic manifesto corpus and cached predictions in synthetic/.

Each manifesto gets a position k in {-2..2}. Right/left counts are chosen so
that ln((R+.5)/(L+.5)) = k ln 3, and coder codes are tuned so that the expert
mean is exactly 0.2k and the crowd mean exactly 0.12k. A backend that echoes
expert gold therefore correlates perfectly with both benchmarks.

Usage: generate_fixture.py <batch_list prompt hash> <nli_prompt1 prompt hash>
"""

import csv
import json
import random
import sys
from pathlib import Path

OUT = Path(__file__).resolve().parent / "synthetic"
SEED = 1987

PARTIES = ["Con", "Lab", "LD"]
YEARS = [1987, 1992, 1997, 2001, 2005, 2010]
POSITIONS = {
    "Con": [2, 1, 1, 0, 1, 2],
    "Lab": [-2, -1, 0, -1, 0, 1],
    "LD": [0, -1, 0, 1, 0, -1],
}
COUNTS = {2: [(4, 0)], 1: [(1, 0), (4, 1)], 0: [(0, 0), (1, 1), (2, 2), (3, 3)], -1: [(0, 1), (1, 4)], -2: [(0, 4)]}
ECON_PER_MANIFESTO = 10

# slot value -> codes; value is the shift of the sentence code sum from the base
EXPERT = {
    "right": {-1: [1, 1, 0], 0: [1, 1, 1], 1: [2, 1, 1], 2: [2, 2, 1]},
    "left": {-2: [-2, -2, -1], -1: [-2, -1, -1], 0: [-1, -1, -1], 1: [-1, -1, 0]},
    "neutral": {-1: [0, 0, -1], 0: [0, 0, 0], 1: [0, 0, 1]},
}
CROWD = {
    "right": {-1: [1, 1, 1, 0, -1], 0: [1, 1, 1, 0, 0], 1: [1, 1, 1, 1, 0], 2: [2, 1, 1, 1, 0]},
    "left": {-2: [-2, -1, -1, -1, 0], -1: [-1, -1, -1, -1, 0], 0: [-1, -1, -1, 0, 0], 1: [-1, -1, -1, 0, 1]},
    "neutral": {-2: [0, 0, 0, -1, -1], -1: [0, 0, 0, 0, -1], 0: [0, 0, 0, 0, 0], 1: [0, 0, 0, 0, 1],
                2: [0, 0, 0, 1, 1]},
}
CROWD_TIE = [1, 1, -1, -1, 0]
BASE = {"right": 1, "left": -1, "neutral": 0}

RIGHT_PHRASES = [
    "cut taxes for hard-working families", "free market", "the private sector", "reduce red tape for small businesses",
    "lower corporation tax", "deregulation of financial services", "competition and choice", "enterprise zones",
    "privatisation of state industries", "a balanced budget", "free trade", "wealth creators",
]
LEFT_PHRASES = [
    "a national minimum wage", "public services", "trade unions", "redistribution of wealth", "invest in the NHS",
    "tax the richest", "the welfare state", "public ownership of the railways", "workers’ rights",
    "tackle inequality", "council housing", "universal child benefit",
]
NEUTRAL_PHRASES = [
    "the economy", "the next parliament", "local communities", "productivity figures", "the Treasury",
    "regional development", "the spending review", "economic statistics", "the Bank of England", "pension rules",
]
SOCIAL = [
    "We will protect the green belt and support rural communities.",
    "Every child deserves a good school close to home.",
    "Our police will be visible on every street.",
    "We will reform the House of Lords.",
    "Britain's place in the world depends on strong alliances.",
    "We will improve care for older people and their families.",
    "Crime has fallen, but there is more to do.",
    "We will make the café culture of our towns thrive again.",
]
OPENERS = ["We will", "Our plan is to", "The next government must", "We promise to", "Britain needs to",
           "We pledge to", "Our programme will"]


def sentence_text(rng, cls):
    pool = {"right": RIGHT_PHRASES, "left": LEFT_PHRASES, "neutral": NEUTRAL_PHRASES}[cls]
    a, b = rng.sample(pool, 2)
    extra = ""
    if rng.random() < 0.15:
        extra = f", costing £{rng.randint(2, 40)} billion"
    if rng.random() < 0.1:
        extra += ", as the government’s own figures show"
    shape = rng.randrange(4)
    if shape == 0:
        return f"{rng.choice(OPENERS)} deliver {a} and {b}{extra}."
    if shape == 1:
        return f"{a[0].upper() + a[1:]} matters, and so does {b}{extra}."
    if shape == 2:
        return f"{rng.choice(OPENERS)} put {a} first, with \"{b}\" at the heart of policy{extra}."
    return f"For {rng.choice(['ten', 'five', 'twenty'])} years we have argued for {a}; now {b} too{extra}."


def assign(rng, kinds, table, target):
    """Picks one slot value per sentence so the values sum to `target`."""
    values = [0] * len(kinds)
    for _ in range(len(kinds)):  # random balanced noise
        i, j = rng.randrange(len(kinds)), rng.randrange(len(kinds))
        if i != j and values[i] + 1 in table[kinds[i]] and values[j] - 1 in table[kinds[j]]:
            values[i] += 1
            values[j] -= 1
    remaining = target - sum(values)
    while remaining:
        step = 1 if remaining > 0 else -1
        movable = [i for i in range(len(kinds)) if values[i] + step in table[kinds[i]]]
        if not movable:
            raise SystemExit("no slot can absorb the adjustment")
        values[rng.choice(movable)] += step
        remaining -= step
    return values


def vote(codes):
    counts = {"left": 0, "neutral": 0, "right": 0}
    for c in codes:
        counts["left" if c < 0 else "right" if c > 0 else "neutral"] += 1
    top = max(counts.values())
    winners = [k for k, v in counts.items() if v == top]
    return winners[0] if len(winners) == 1 else None


def main():
    batch_hash, nli_hash = sys.argv[1], sys.argv[2]
    rng = random.Random(SEED)
    OUT.mkdir(parents=True, exist_ok=True)
    rows = []
    sentences = []  # (sid, gold)
    extra_social = {("Lab", 1997), ("LD", 2005)}
    for party in PARTIES:
        for year, k in zip(YEARS, POSITIONS[party]):
            r, l = rng.choice(COUNTS[k])
            kinds = ["right"] * r + ["left"] * l + ["neutral"] * (ECON_PER_MANIFESTO - r - l)
            rng.shuffle(kinds)
            base = sum(BASE[x] for x in kinds)
            ev = assign(rng, kinds, EXPERT, 6 * k - 3 * base)   # expert sum = 2k in units of 1/3
            cv = assign(rng, kinds, CROWD, 6 * k - 3 * base)    # crowd sum = 6k/5 in units of 1/5
            n_social = 2 if (party, year) in extra_social else 1
            order = [("econ", i) for i in range(len(kinds))] + [("social", i) for i in range(n_social)]
            rng.shuffle(order)
            for pos, (area, i) in enumerate(order, start=1):
                sid = f"{party}{year}-{pos:02d}"
                if area == "social":
                    text = rng.choice(SOCIAL)
                    pa = rng.choice(["Social", "Other"])
                    code = "NA" if rng.random() < 0.7 else str(rng.choice([-1, 0, 1]))
                    rows.append([sid, party, year, text, pa, "E01", "Experts", code])
                    continue
                kind = kinds[i]
                text = sentence_text(rng, kind)
                ecodes = list(EXPERT[kind][ev[i]])
                ccodes = list(CROWD[kind][cv[i]])
                if kind == "neutral" and cv[i] == 0 and rng.random() < 0.25:
                    ccodes = list(CROWD_TIE)
                rng.shuffle(ecodes)
                rng.shuffle(ccodes)
                assert vote(ecodes) == kind
                assert vote(ccodes) in (kind, None)
                sentences.append((sid, kind))
                experts = rng.sample(["E01", "E02", "E03", "E04", "E05", "E06"], 3)
                crowd = rng.sample([f"C{n:03d}" for n in range(1, 60)], 5)
                for coder, code in zip(experts, ecodes):
                    rows.append([sid, party, year, text, "Economic", coder, "Experts", str(code)])
                for coder, code in zip(crowd, ccodes):
                    rows.append([sid, party, year, text, "Economic", coder, "Crowd", str(code)])

    # two defective rows that ingestion must reject
    first = next(r for r in rows if r[4] == "Economic")
    rows.append(first[:5] + ["E09", "Experts", "7"])
    rows.append([first[0], first[1], "19x7", first[3], first[4], "E10", "Experts", "1"])

    with open(OUT / "corpus.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
        w.writerow(["sentence_id", "party", "year", "text", "policy_area", "coder", "coder_type", "econ_code"])
        w.writerows(rows)

    (OUT / "schema.ini").write_text(
        "[format]\ndelimiter = comma\n\n"
        "[columns]\nsentence_id = sentence_id\nparty = party\nyear = year\ntext = text\n"
        "policy_area = policy_area\ncoder_id = coder\ncoder_source = coder_type\ncode = econ_code\n\n"
        "[policy_area]\neconomic = Economic\nsocial = Social\nother = Other\n\n"
        "[coder_source]\nexpert = Experts\ncrowd = Crowd\n\n"
        "[codes]\nvalues = -2,-1,0,1,2\n\n"
        "[years]\nmin = 1945\nmax = 2030\n",
        encoding="utf-8")

    classes = ["left", "neutral", "right"]
    display = {"left": "left-wing", "neutral": "neutral", "right": "right-wing"}

    def noisy(accuracy, parse_failures, seed, raw_ok, prompt_hash, path):
        r2 = random.Random(seed)
        failed = set(r2.sample(range(len(sentences)), parse_failures))
        with open(path, "w", encoding="utf-8") as f:
            for idx, (sid, gold) in enumerate(sentences):
                if idx in failed:
                    line = {"sentence_id": sid, "label": None,
                            "raw_response": "As an AI language model, I cannot determine the ideology of this text.",
                            "prompt_hash": prompt_hash, "status": "parse_failed"}
                else:
                    label = gold if r2.random() < accuracy else r2.choice([c for c in classes if c != gold])
                    line = {"sentence_id": sid, "label": label, "raw_response": raw_ok(idx, label, r2),
                            "prompt_hash": prompt_hash, "status": "ok"}
                f.write(json.dumps(line, ensure_ascii=False) + "\n")

    def batch_raw(idx, label, r2):
        return "{text_number: %d, label: %s}" % (idx % 20 + 1, display[label])

    def nli_raw(idx, label, r2):
        s = sorted([r2.random() for _ in range(2)])
        probs = sorted([s[0], s[1] - s[0], 1 - s[1]], reverse=True)
        others = [c for c in classes if c != label]
        r2.shuffle(others)
        return json.dumps({"labels": [display[label]] + [display[o] for o in others],
                           "scores": [round(p, 4) for p in probs]})

    noisy(0.8, 4, 11, batch_raw, batch_hash, OUT / "predictions_llm_batch.jsonl")
    noisy(0.62, 2, 12, nli_raw, nli_hash, OUT / "predictions_nli_zero.jsonl")

    config = {
        "corpus": {"path": "corpus.csv", "schema": "schema.ini"},
        "seed": 20240601,
        "benchmarks": ["expert", "crowd"],
        "output_dir": "out",
        "backends": [
            {"id": "gold_echo", "kind": "mock", "mock_source": "expert"},
            {"id": "llm_batch", "kind": "cached_file", "path": "predictions_llm_batch.jsonl"},
            {"id": "nli_zero", "kind": "cached_file", "path": "predictions_nli_zero.jsonl"},
        ],
        "keyness": {"top_n": 30, "reference": "rest"},
    }
    (OUT / "run.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    print(f"{len(sentences)} economic sentences, {len(rows)} rows")


if __name__ == "__main__":
    main()
