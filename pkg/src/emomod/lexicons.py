"""Modifier cue lexicons and the emotion lexicon."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus_io import CorpusError, Emotion, EMOTION_NAMES


class ModifierKind(enum.Enum):
    NEGATION = "negation"
    AMPLIFIER = "amplifier"
    DOWNTONER = "downtoner"

    @property
    def priority(self) -> int:
        """Lower wins when two kinds compete for a token."""
        return _PRIORITY[self]

    @property
    def prefix(self) -> str:
        return _PREFIX[self]

    @classmethod
    def parse(cls, name: str) -> "ModifierKind":
        name = name.strip().lower()
        for kind in cls:
            if name in (kind.value, kind.prefix):
                return kind
        raise ValueError(f"unknown modifier kind {name!r}")


_PRIORITY = {ModifierKind.NEGATION: 0, ModifierKind.AMPLIFIER: 1, ModifierKind.DOWNTONER: 2}
_PREFIX = {ModifierKind.NEGATION: "neg", ModifierKind.AMPLIFIER: "amp", ModifierKind.DOWNTONER: "down"}
KINDS = tuple(sorted(ModifierKind, key=lambda k: k.priority))

# term -> kind; term -> frozenset of emotions
CueLexicon = dict
EmotionLexicon = dict


class LexiconError(ValueError):
    pass


@dataclass
class UsageSample:
    term: str
    occurrences: list  # (doc_id, used_as_modifier)


def compute_cue_ratio(sample: UsageSample) -> float:
    if not sample.occurrences:
        raise LexiconError(f"no usage occurrences for {sample.term!r}")
    hits = sum(1 for _, used in sample.occurrences if used)
    return hits / len(sample.occurrences)


def filter_cues(candidates, samples, threshold: float = 0.5, trusted=()) -> CueLexicon:
    """Keep candidates used as a modifier in more than ``threshold`` of
    their sampled occurrences. Terms in ``trusted`` skip the check."""
    trusted = {t.lower() for t in trusted}
    lexicon: CueLexicon = {}
    for term, kind in candidates:
        term = term.strip().lower()
        if not term:
            continue
        if term not in trusted:
            if term not in samples:
                raise LexiconError(f"no usage sample for candidate {term!r}")
            if not compute_cue_ratio(samples[term]) > threshold:
                continue
        old = lexicon.get(term)
        if old is None or kind.priority < old.priority:
            lexicon[term] = kind
    return lexicon


def read_term_list(path):
    """One term per line; ``#`` starts a comment. A second tab-separated
    column reading ``trusted`` marks the term as exempt from filtering.
    Returns (terms, trusted_terms)."""
    with open(path, encoding="utf-8") as f:
        return _parse_terms(f)


def _parse_terms(lines):
    terms, trusted = [], []
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        term, _, flag = line.partition("\t")
        term = term.strip().lower()
        terms.append(term)
        if flag.strip().lower() == "trusted":
            trusted.append(term)
    return terms, trusted


def read_usage_samples(path) -> dict[str, UsageSample]:
    samples: dict[str, UsageSample] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3 or parts[2].strip() not in ("0", "1"):
                raise CorpusError("expected term<TAB>doc_id<TAB>0|1", path, lineno)
            term = parts[0].strip().lower()
            samples.setdefault(term, UsageSample(term, [])).occurrences.append(
                (parts[1], parts[2].strip() == "1"))
    return samples


def write_term_list(terms, path):
    with open(path, "w", encoding="utf-8") as f:
        for t in sorted(terms):
            f.write(t + "\n")


def load_cue_lexicon(directory=None) -> CueLexicon:
    """Read ``negation.txt``, ``amplifier.txt`` and ``downtoner.txt`` from
    ``directory`` (the shipped lists when None)."""
    lexicon: CueLexicon = {}
    for kind in KINDS:
        name = f"{kind.value}.txt"
        if directory is None:
            text = resources.files("emomod.data").joinpath(name).read_text(encoding="utf-8")
            terms, _ = _parse_terms(text.splitlines())
        else:
            terms, _ = read_term_list(Path(directory) / name)
        for t in terms:
            lexicon.setdefault(t, kind)
    return lexicon


def load_emotion_lexicon(path) -> EmotionLexicon:
    """Read an NRC-style ``term<TAB>emotion<TAB>0|1`` file, keeping only
    positive associations with the six target emotions."""
    entries: dict[str, set] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3 or parts[2].strip() not in ("0", "1"):
                raise CorpusError("expected term<TAB>emotion<TAB>0|1", path, lineno)
            term, emo, flag = parts[0].strip().lower(), parts[1].strip().lower(), parts[2].strip()
            if flag != "1" or emo not in EMOTION_NAMES or not term:
                continue
            entries.setdefault(term, set()).add(Emotion.parse(emo))
    return {t: frozenset(e) for t, e in entries.items()}
