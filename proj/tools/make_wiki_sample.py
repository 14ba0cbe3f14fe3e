#!/usr/bin/env python3
"""Build tests/data/wiki_sample.txt from a MediaWiki XML dump.

Strips markup (templates, tables, refs, links, files) and writes
WikiText-style whitespace-tokenized prose, one paragraph per line.

    python3 tools/make_wiki_sample.py dump.xml[.bz2] out.txt [max_tokens]
"""
import bz2
import html
import re
import sys


def strip_nested(text, open_tok, close_tok):
    out, depth, i = [], 0, 0
    while i < len(text):
        if text.startswith(open_tok, i):
            depth += 1
            i += len(open_tok)
        elif depth and text.startswith(close_tok, i):
            depth -= 1
            i += len(close_tok)
        else:
            if depth == 0:
                out.append(text[i])
            i += 1
    return "".join(out)


def clean(page):
    t = html.unescape(page)
    t = re.sub(r"<!--.*?-->", " ", t, flags=re.S)
    t = re.sub(r"<ref[^>]*/>", " ", t)
    t = re.sub(r"<ref[^>]*>.*?</ref>", " ", t, flags=re.S)
    t = strip_nested(t, "{{", "}}")
    t = strip_nested(t, "{|", "|}")
    t = re.sub(r"<[^>]+>", " ", t)
    t = re.sub(r"\[\[(?:File|Image|Category|[a-z\-]{2,12}):[^\[\]]*(?:\[\[[^\]]*\]\][^\[\]]*)*\]\]", " ", t)
    t = re.sub(r"\[\[(?:[^\]|]*\|)?([^\]]*)\]\]", r"\1", t)
    t = re.sub(r"\[https?://\S+\s*([^\]]*)\]", r"\1", t)
    t = re.sub(r"'{2,}", "", t)
    lines = []
    for line in t.split("\n"):
        line = line.strip()
        if not line or line[0] in "*#:;|!" or line.startswith("#REDIRECT"):
            continue
        m = re.match(r"^(=+)\s*(.*?)\s*=+$", line)
        if m:
            bar = " ".join("=" * len(m.group(1)))
            lines.append(f"{bar} {m.group(2)} {bar}")
            continue
        if len(line.split()) < 8:
            continue
        lines.append(line)
    return lines


def tokenize(line):
    line = re.sub(r"(\d)-(\d)", r"\1 @-@ \2", line)
    line = re.sub(r"([A-Za-z])-([A-Za-z])", r"\1 @-@ \2", line)
    line = re.sub(r"([.,;:!?()\"])", r" \1 ", line)
    line = re.sub(r"'s\b", " 's", line)
    return " ".join(line.split())


def main():
    src, dst = sys.argv[1], sys.argv[2]
    limit = int(sys.argv[3]) if len(sys.argv) > 3 else 320000
    raw = bz2.open(src, "rt").read() if src.endswith(".bz2") else open(src).read()
    pages = re.findall(r"<text[^>]*>(.*?)</text>", raw, re.S)
    total, out = 0, []
    for page in pages:
        for line in clean(page):
            tok = tokenize(line)
            out.append(tok)
            total += len(tok.split())
        if total >= limit:
            break
    with open(dst, "w") as f:
        f.write("\n".join(out) + "\n")
    print(f"{total} tokens, {len(out)} lines")


if __name__ == "__main__":
    main()
