#!/usr/bin/env python3
"""Generate posts_1k.jsonl: 1,000 record lines, 3 of them malformed.

The mix covers every filter and dedup path: on-topic posts matching each of
the four queries, off-topic posts, retweets, posts with URLs and duplicates
that differ only in case or spacing. Deterministic (fixed seed).
"""
import json
import random
import sys

rng = random.Random(20160301)

QUERY_BITS = ["@BernieSanders", "#FeelTheBern", "#Bernie", "Bernie Sanders", "Senator Sanders and Bernie"]
TOPICS = [
    "free college tuition for public university students",
    "raise the minimum wage to 15 for workers",
    "break up the big banks on wall street",
    "medicare for all universal healthcare",
    "good jobs and income for the middle class",
    "stop bad trade deals like the tpp and nafta",
    "tax billionaires and close loopholes",
    "rebuild roads bridges and infrastructure",
    "comprehensive immigration reform",
    "cut the national debt and deficit spending",
]
POSITIVE = ["love", "support", "great", "hope", "thanks", "proud", "agree", "inspiring", "winning", "happy"]
NEGATIVE = ["hate", "bad", "lies", "corrupt", "rigged", "fear", "awful", "loser", "sad", "failing"]
OFF_TOPIC = [
    "having coffee this morning",
    "the game last night was something",
    "new phone who dis",
    "traffic on the bridge again",
    "cannot wait for the weekend",
]


def sentence():
    parts = [rng.choice(TOPICS)]
    for pool, p in ((POSITIVE, 0.6), (NEGATIVE, 0.4), (POSITIVE, 0.2)):
        if rng.random() < p:
            parts.insert(rng.randrange(len(parts) + 1), rng.choice(pool))
    return " ".join(parts)


def on_topic():
    q = rng.choice(QUERY_BITS)
    s = sentence()
    return f"{q} {s}" if rng.random() < 0.5 else f"{s} {q}"


def text(i, history):
    r = rng.random()
    if r < 0.10:
        return "RT @" + rng.choice(["news", "BernieSanders", "fan2016"]) + ": " + on_topic()
    if r < 0.18:
        return on_topic() + " " + rng.choice(["https://t.co/abc" + str(i), "http://example.com/p/" + str(i), "t.co/x" + str(i)])
    if r < 0.26 and history:
        prev = rng.choice(history)
        return rng.choice([prev.upper(), "  " + prev.replace(" ", "   ") + " ", prev.title()])
    if r < 0.36:
        t = rng.choice(OFF_TOPIC) + " " + rng.choice(POSITIVE + NEGATIVE + [""])
        return t.strip()
    if r < 0.40:
        return "sanders " + sentence()  # keyword alone: no query matches it
    return on_topic()


def main(path):
    lines = []
    history = []
    next_id = 1
    malformed_at = {137: '{"id": "bad1", "text": "unterminated', 512: '{"id": "bad2"}', 876: '{"text": "no id here #Bernie"}'}
    for i in range(1000):
        if i in malformed_at:
            lines.append(malformed_at[i])
            continue
        t = text(i, history)
        if not t.startswith("RT @"):
            history.append(t)
        rec = {"id": str(next_id), "text": t, "created_at": f"2016-03-{1 + i % 28:02d}T{i % 24:02d}:00:00Z"}
        if i % 7 == 0:
            rec["lang"] = "en"
        next_id += 1
        lines.append(json.dumps(rec, ensure_ascii=False))
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "posts_1k.jsonl")
