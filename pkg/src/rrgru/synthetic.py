"""Synthetic corpora in the official task file format.

Each directional label has a few cue phrases placed between the nominals,
surrounded by random filler. Useful for smoke runs when the real dataset
is not available; it says nothing about accuracy on real text.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .corpus import RELATIONS

# cue phrases per relation, for (e1,e2) and (e2,e1)
_CUES = {
    "Cause-Effect": (["caused", "led to", "triggered"], ["was caused by", "resulted from", "came from the"]),
    "Component-Whole": (["is part of the", "belongs to the", "of the"], ["has a", "contains a", "includes the"]),
    "Content-Container": (["was inside the", "was stored in a", "sat in the"], ["full of", "holding the", "filled with"]),
    "Entity-Destination": (["went into the", "was moved to the", "was sent to the"], ["received the", "took in the", "welcomed the"]),
    "Entity-Origin": (["was extracted from", "came out of the", "derives from"], ["is the source of", "releases", "yields the"]),
    "Instrument-Agency": (["was used by the", "is operated by the", "serves the"], ["used a", "wielded the", "operated the"]),
    "Member-Collection": (["joined the", "is a member of the", "belongs in the"], ["of many", "made up of", "consists of"]),
    "Message-Topic": (["is about", "discusses the", "describes the"], ["is the subject of the", "is discussed in the", "is covered by the"]),
    "Product-Producer": (["was made by the", "was built by the", "was produced by"], ["produces", "manufactures the", "built the"]),
}
_OTHER_CUES = ["stood near the", "and the", "was seen with the", "appeared next to", "during the", "without the"]
_FILLER = (
    "the a an this that some old new big small red blue yesterday today later very quite "
    "people city house road river sky tree stone paper music light night day morning"
).split()
_NOUNS = (
    "phone washer fire smoke engine car tire keyboard laptop apple basket bottle milk child school "
    "oil seed river water pen writer knife chef player team flock bird lecture history book cake baker "
    "factory toy storm damage roof door handle letter envelope machine worker tool farmer song report"
).split()


def generate(n: int, seed: int, other_fraction: float = 0.17, start_id: int = 1) -> list[tuple[int, str, str]]:
    """Return ``(id, marked sentence, label)`` triples."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        a, b = rng.choice(_NOUNS, size=2, replace=False)
        pre = " ".join(rng.choice(_FILLER, size=rng.integers(0, 5)))
        post = " ".join(rng.choice(_FILLER, size=rng.integers(0, 5)))
        if rng.random() < other_fraction:
            cue, label = rng.choice(_OTHER_CUES), "Other"
        else:
            rel = RELATIONS[rng.integers(len(RELATIONS))]
            direction = int(rng.integers(2))
            cue = rng.choice(_CUES[rel][direction])
            label = rel + ("(e1,e2)" if direction == 0 else "(e2,e1)")
        mid = " ".join(rng.choice(_FILLER, size=rng.integers(0, 2)))
        body = f"<e1>{a}</e1> {mid} {cue} <e2>{b}</e2>"
        text = " ".join(s for s in (pre, body, post) if s).replace("  ", " ")
        out.append((start_id + i, text[0].upper() + text[1:] + ".", label))
    return out


def write_semeval(triples, path) -> None:
    with open(Path(path), "w", encoding="utf-8", newline="\n") as fh:
        for ex_id, text, label in triples:
            fh.write(f'{ex_id}\t"{text}"\n{label}\nComment:\n\n')
