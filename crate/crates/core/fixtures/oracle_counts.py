#!/usr/bin/env python3
"""Independent counts for posts_1k.jsonl: validation, filtering, dedup and
sentiment. Prints a JSON object; the frozen values live in tests/cli.rs.

Usage: oracle_counts.py posts_1k.jsonl ../data/demo_lexicon.tsv
"""
import json
import re
import sys
import unicodedata

QUERIES = [("mention", ["berniesanders"]), ("hashtag", ["feelthebern"]), ("hashtag", ["bernie"]),
           ("and", ["bernie", "sanders"])]
RFC3339 = re.compile(r"^\d{4}-\d{2}-\d{2}[Tt ]\d{2}:\d{2}:\d{2}(\.\d+)?([Zz]|[+-]\d{2}:\d{2})$")
TOKEN = re.compile(r"[#@]?[^\W_]+")
URL = re.compile(r"(https?://|t\.co/)", re.IGNORECASE)


def validate(path):
    posts, skipped, ids = [], 0, set()
    with open(path, "rb") as f:
        for raw in f:
            line = raw.rstrip(b"\r\n")
            if not line.strip():
                continue
            try:
                rec = json.loads(line.decode("utf-8"))
                ok = (isinstance(rec, dict) and isinstance(rec.get("text"), str)
                      and isinstance(rec.get("id"), (str, int)) and str(rec["id"]) not in ids
                      and (rec.get("created_at") is None or RFC3339.match(rec["created_at"])))
            except (ValueError, UnicodeDecodeError):
                ok = False
            if ok:
                ids.add(str(rec["id"]))
                posts.append((str(rec["id"]), rec["text"]))
            else:
                skipped += 1
    return posts, skipped


def tokens(text, min_len):
    text = unicodedata.normalize("NFC", unicodedata.normalize("NFC", text).lower())
    out = []
    for piece in text.split():
        m = URL.search(piece)
        if m:
            piece = piece[: m.start()]
        for t in TOKEN.findall(piece):
            if len(t) >= min_len:
                out.append(t)
    return out


def matches(text):
    toks = set(tokens(text, 1))
    for kind, terms in QUERIES:
        if kind == "mention" and "@" + terms[0] in toks:
            return True
        if kind == "hashtag" and "#" + terms[0] in toks:
            return True
        if kind == "and" and all(t in toks for t in terms):
            return True
    return False


def norm(text):
    return " ".join(unicodedata.normalize("NFC", text).lower().split())


def polarity(token, lexicon):
    if token in lexicon["exact"]:
        return lexicon["exact"][token]
    best = None
    for stem, p in lexicon["stem"].items():
        if token.startswith(stem) and (best is None or len(stem) > len(best[0])):
            best = (stem, p)
    return best[1] if best else None


def main(posts_path, lexicon_path):
    posts, skipped = validate(posts_path)
    matched = [(i, t) for i, t in posts if matches(t)]
    removed = {"retweet": 0, "url": 0, "duplicate": 0}
    kept, seen = [], set()
    for i, t in matched:
        n = norm(t)
        if n.startswith("rt @"):
            removed["retweet"] += 1
        elif "http://" in n or "https://" in n or "t.co/" in n:
            removed["url"] += 1
        elif n in seen:
            removed["duplicate"] += 1
        else:
            seen.add(n)
            kept.append((i, t))
    lexicon = {"exact": {}, "stem": {}}
    for line in open(lexicon_path, encoding="utf-8"):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        pattern, cat = line.split("\t")
        if pattern.endswith("*"):
            lexicon["stem"][pattern[:-1]] = cat
        else:
            lexicon["exact"][pattern] = cat
    counts = {"positive": 0, "negative": 0, "neutral": 0}
    positive_ids = []
    for i, t in kept:
        hits = [polarity(tok, lexicon) for tok in tokens(t, 2)]
        pos, neg = hits.count("positive"), hits.count("negative")
        label = "positive" if pos > neg else "negative" if neg > pos else "neutral"
        counts[label] += 1
        if label == "positive":
            positive_ids.append(i)
    print(json.dumps({
        "posts": len(posts), "skipped": skipped, "matched": len(matched), "removed": removed,
        "kept": len(kept), "sentiment": counts,
        "lexicon": {"positive": sum(1 for d in lexicon.values() for c in d.values() if c == "positive"),
                    "negative": sum(1 for d in lexicon.values() for c in d.values() if c == "negative")},
        "first_positive_ids": positive_ids[:5],
    }, indent=2))


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
