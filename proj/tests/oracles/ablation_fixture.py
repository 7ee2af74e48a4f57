#!/usr/bin/env python3
"""Generate the ablation mock knowledge base and its expected accuracies.

Agent coverage is complementary and one-sided: most recallable names are
known to both agents, a few to only one, and the remainder to neither (those
fall back to a fixed direct answer). Expected Top-1 accuracy per
configuration comes from an independent re-implementation of the vote:
merge person then media entries, count labels, take the maximum count with
ties broken by first appearance, and use the direct answer when nothing was
recalled.

usage: ablation_fixture.py TAXONOMY_TSV OUT_KB_JSON OUT_NAMES_TSV OUT_EXPECTED_JSON
"""
import json
import random
import sys

M = 4
CONFIGS = {
    "full": (True, True),
    "wo_person": (False, True),
    "wo_media": (True, False),
    "wo_completion": (True, True),
    "wo_recall": (False, False),
}


def nationalities(path):
    labels, header_seen = [], False
    for line in open(path, encoding="utf-8"):
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            header_seen = True
            continue
        labels.append(line.split("\t")[0])
    return labels


def top1(person, media, direct, use_person, use_media):
    recalled = (person[:M] if use_person else []) + (media[:M] if use_media else [])
    if not recalled:
        return direct[0]
    best, best_count = None, -1
    for label in recalled:  # first appearance wins ties
        c = recalled.count(label)
        if c > best_count:
            best, best_count = label, c
    return best


def main():
    taxonomy, out_kb, out_names, out_expected = sys.argv[1:5]
    labels = nationalities(taxonomy)
    rng = random.Random(7)

    def other(gold):
        while True:
            pick = rng.choice(labels)
            if pick != gold:
                return pick

    # (category, count): see the module docstring.
    plan = [("both", 60), ("person_majority", 10), ("person_only", 4), ("media_only", 4),
            ("tie", 6), ("none_direct_right", 80), ("none_direct_wrong", 36)]
    kb = {"person_domain": {}, "media_domain": {}, "direct_answers": {}, "completion_answers": {}}
    samples = []
    serial = 0
    for category, count in plan:
        for _ in range(count):
            serial += 1
            name = f"Abl{serial:03d} {category.split('_')[0].capitalize()}"
            key = name.lower()
            gold = rng.choice(labels)
            wrong = other(gold)
            person, media = [], []
            if category == "both":
                person, media = [gold], [gold]
            elif category == "person_majority":
                person, media = [gold, gold], [wrong]
            elif category == "person_only":
                person = [gold]
            elif category == "media_only":
                media = [gold]
            elif category == "tie":
                person, media = [gold], [wrong]
            direct = [gold if category == "none_direct_right" else wrong]
            direct += [l for l in rng.sample(labels, 6) if l not in direct][:4]
            if person:
                kb["person_domain"][key] = [{"name": f"{name} P{i}", "nationality": l}
                                            for i, l in enumerate(person)]
            if media:
                kb["media_domain"][key] = [{"name": f"{name} M{i}", "nationality": l}
                                           for i, l in enumerate(media)]
            kb["direct_answers"][key] = direct
            kb["completion_answers"][key] = rng.sample(labels, 4)
            samples.append((name, gold, person, media, direct))

    expected = {}
    for config, (use_person, use_media) in CONFIGS.items():
        hits = sum(top1(p, m, d, use_person, use_media) == g for _, g, p, m, d in samples)
        expected[config] = {"correct": hits, "samples": len(samples)}

    with open(out_kb, "w", encoding="utf-8") as f:
        json.dump(kb, f, indent=1, sort_keys=True)
        f.write("\n")
    with open(out_names, "w", encoding="utf-8") as f:
        for name, gold, *_ in samples:
            f.write(f"{name}\t{gold}\n")
    with open(out_expected, "w", encoding="utf-8") as f:
        json.dump(expected, f, indent=2)
        f.write("\n")
    print(json.dumps(expected))


if __name__ == "__main__":
    main()
