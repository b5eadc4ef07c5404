"""Reference recursive splitter; writes tests/data/splitter_golden.json."""
import json, re, sys
from pathlib import Path

WS = " \t\n\r\f\v"


def split(text, size, overlap, seps):
    def cut(s, seps):
        i = next(i for i, sep in enumerate(seps) if sep == "" or sep in s)
        sep, rest = seps[i], seps[i + 1:]
        if sep == "":
            parts = list(s)
        else:
            idx = [0] + [m.start() for m in re.finditer(re.escape(sep), s) if m.start()] + [len(s)]
            parts = [s[a:b] for a, b in zip(idx, idx[1:])]
        return [q for p in parts for q in ([p] if len(p) <= size else cut(p, rest))]

    chunks, win = [], []
    for p in cut(text, seps) if text else []:
        if win and sum(map(len, win)) + len(p) > size:
            chunks.append("".join(win))
            while win and (sum(map(len, win)) > overlap or sum(map(len, win)) + len(p) > size):
                win.pop(0)
        win.append(p)
    if win:
        chunks.append("".join(win))
    return [c.strip(WS) for c in chunks if c.strip(WS)]
