"""Corpus ingestion: tweet normalization, hashtag self-labeling, CoNLL-U
reading and reproducible train/test splits."""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterable


class Emotion(IntEnum):
    # canonical order; used for matrix indexing and argmax tie-breaking
    JOY = 0
    ANGER = 1
    FEAR = 2
    SADNESS = 3
    SURPRISE = 4
    DISGUST = 5

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, name: str) -> "Emotion":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown emotion {name!r}") from None


EMOTIONS = tuple(Emotion)
EMOTION_NAMES = tuple(e.label for e in EMOTIONS)


class CorpusError(ValueError):
    """Malformed corpus input. ``line`` is 1-based when known."""

    def __init__(self, message: str, path=None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.path = path
        self.line = line


@dataclass(frozen=True)
class Token:
    index: int          # 1-based position in its sentence
    surface: str
    normalized: str
    pos: str = "_"
    head: int | None = None     # 0 = root; None when no parse is available
    deprel: str | None = None


@dataclass(frozen=True)
class Document:
    id: str
    tokens: tuple[Token, ...]
    sentence_bounds: tuple[tuple[int, int], ...]
    label: Emotion | None = None

    def __post_init__(self):
        pos = 0
        for start, end in self.sentence_bounds:
            if start != pos or end < start:
                raise CorpusError(f"document {self.id}: sentence bounds do not partition the tokens")
            pos = end
        if pos != len(self.tokens):
            raise CorpusError(f"document {self.id}: sentence bounds do not cover all tokens")
        if self.has_dependencies:
            for start, end in self.sentence_bounds:
                _check_tree(self.id, self.tokens[start:end])

    @property
    def has_dependencies(self) -> bool:
        return bool(self.tokens) and all(t.head is not None for t in self.tokens)

    @property
    def words(self) -> list[str]:
        return [t.normalized for t in self.tokens]

    def sentence_of(self, i: int) -> tuple[int, int]:
        for start, end in self.sentence_bounds:
            if start <= i < end:
                return start, end
        raise IndexError(i)

    def head_of(self, i: int) -> int | None:
        """Document-level index of token ``i``'s head, or None for a root."""
        tok = self.tokens[i]
        if tok.head is None:
            raise CorpusError(f"document {self.id} has no dependency annotation")
        if tok.head == 0:
            return None
        start, _ = self.sentence_of(i)
        return start + tok.head - 1

    def children(self) -> list[list[int]]:
        kids: list[list[int]] = [[] for _ in self.tokens]
        for i in range(len(self.tokens)):
            h = self.head_of(i)
            if h is not None:
                kids[h].append(i)
        return kids


def _check_tree(doc_id, sentence: Iterable[Token]):
    sentence = list(sentence)
    n = len(sentence)
    roots = 0
    for tok in sentence:
        if not 0 <= tok.head <= n or tok.head == tok.index:
            raise CorpusError(f"document {doc_id}: token {tok.index} has invalid head {tok.head}")
        roots += tok.head == 0
    if roots != 1:
        raise CorpusError(f"document {doc_id}: sentence has {roots} roots, expected 1")


# ----------------------------------------------------------------------
# normalization and self-labeling

URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
USER_RE = re.compile(r"(?<!\w)@\w+")
HASHTAG_RE = re.compile(r"(?<!\w)#(\w+)")
SPACE_RE = re.compile(r"\s+")

URL, USER, HASHTAG = "<url>", "<user>", "<hashtag>"
PLACEHOLDERS = frozenset((URL, USER, HASHTAG))


def _until_stable(fn, text):
    # replacing "@a" in "@a@b" exposes "@b" to the lookbehind, so repeat
    while True:
        new = fn(text)
        if new == text:
            return text
        text = new


def _replace_entities(text):
    text = URL_RE.sub(f" {URL} ", text)
    text = USER_RE.sub(f" {USER} ", text)
    return HASHTAG_RE.sub(f" {HASHTAG} ", text)


def normalize_text(raw: str) -> str:
    text = _until_stable(_replace_entities, raw)
    return SPACE_RE.sub(" ", text.lower()).strip()


def self_label(raw: str, hashtags: dict[str, Emotion]) -> tuple[str, Emotion] | None:
    """Label a tweet by its emotion hashtags.

    Returns None when no label hashtag is present or when the hashtags
    disagree. Label hashtags are removed from the text so the label does
    not leak into the features.
    """
    if not hashtags:
        raise ValueError("empty hashtag map")
    found = set()

    def drop(match):
        emo = hashtags.get(match.group(1).lower())
        if emo is None:
            return match.group(0)
        found.add(emo)
        return " "

    # URLs first so fragments like example.com/#tag stay inside the URL
    text = URL_RE.sub(f" {URL} ", raw)
    text = _until_stable(lambda t: HASHTAG_RE.sub(drop, t), text)
    if len(found) != 1:
        return None
    return normalize_text(text), found.pop()


def load_hashtag_map(path) -> dict[str, Emotion]:
    mapping: dict[str, Emotion] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise CorpusError("expected hashtag<TAB>emotion", path, lineno)
            tag = parts[0].lstrip("#").lower()
            try:
                emo = Emotion.parse(parts[1])
            except ValueError as exc:
                raise CorpusError(str(exc), path, lineno) from None
            if mapping.get(tag, emo) != emo:
                raise CorpusError(f"hashtag {tag!r} mapped to two emotions", path, lineno)
            mapping[tag] = emo
    return mapping


# ----------------------------------------------------------------------
# tokenization of raw text

EDGE_PUNCT = ".,;:!?—()\"…"
_EDGE_RE = re.compile(rf"^([{re.escape(EDGE_PUNCT)}]*)(.*?)([{re.escape(EDGE_PUNCT)}]*)$", re.DOTALL)
_SENT_END_RE = re.compile(r"^[.!?…]+$")


def tokenize(text: str) -> list[str]:
    """Whitespace split, with leading/trailing punctuation runs split off."""
    out = []
    for chunk in text.split():
        if chunk in PLACEHOLDERS:
            out.append(chunk)
            continue
        lead, core, trail = _EDGE_RE.match(chunk).groups()
        out.extend(t for t in (lead, core, trail) if t)
    return out


def document_from_text(doc_id: str, text: str, label: Emotion | None = None) -> Document:
    """Build a dependency-less Document; sentences end at ., ! or ? runs."""
    words = tokenize(normalize_text(text))
    tokens, bounds = [], []
    start = 0
    for i, w in enumerate(words):
        tokens.append(Token(index=i - start + 1, surface=w, normalized=w))
        if _SENT_END_RE.match(w):
            bounds.append((start, i + 1))
            start = i + 1
    if start < len(words):
        bounds.append((start, len(words)))
    return Document(doc_id, tuple(tokens), tuple(bounds), label)


def load_jsonl(path) -> list[Document]:
    docs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                label = rec.get("label")
                docs.append(document_from_text(
                    str(rec["id"]), rec["text"],
                    Emotion.parse(label) if label else None))
            except (KeyError, ValueError, TypeError) as exc:
                raise CorpusError(f"bad record: {exc}", path, lineno) from None
    return docs


def write_jsonl(records: Iterable[dict], path):
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


# ----------------------------------------------------------------------
# CoNLL-U

def load_conllu(path) -> list[Document]:
    """Read a CoNLL-U file.

    ``# newdoc id = ...`` groups the following sentences into one
    document; sentences outside any newdoc become documents of their own.
    Multiword-token ranges and empty nodes are skipped.
    """
    docs: list[Document] = []
    labels: dict[str, Emotion] = {}
    current_doc: dict | None = None
    sentence: list[Token] = []
    sent_id = None
    pending_newdoc = None
    standalone = 0

    def flush_sentence():
        nonlocal sentence, sent_id, current_doc, standalone
        if not sentence:
            return
        if current_doc is None:
            standalone += 1
            doc_id = sent_id or f"s{standalone}"
            docs.append(_make_doc(doc_id, [sentence], labels.get(doc_id)))
        else:
            current_doc["sentences"].append(sentence)
        sentence, sent_id = [], None

    def flush_doc():
        nonlocal current_doc
        if current_doc is not None and current_doc["sentences"]:
            did = current_doc["id"]
            docs.append(_make_doc(did, current_doc["sentences"], current_doc["label"]))
        current_doc = None

    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                flush_sentence()
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                key, value = key.strip(), value.strip()
                if key == "newdoc id" or key == "newdoc":
                    flush_sentence()
                    flush_doc()
                    current_doc = {"id": value or f"d{len(docs) + 1}", "sentences": [], "label": None}
                elif key == "sent_id":
                    sent_id = value
                elif key == "label":
                    try:
                        emo = Emotion.parse(value)
                    except ValueError as exc:
                        raise CorpusError(str(exc), path, lineno) from None
                    if current_doc is not None:
                        current_doc["label"] = emo
                    elif sent_id:
                        labels[sent_id] = emo
                continue
            cols = line.split("\t")
            if len(cols) != 10:
                raise CorpusError(f"expected 10 tab-separated columns, got {len(cols)}", path, lineno)
            tid = cols[0]
            if "-" in tid or "." in tid:
                continue
            try:
                index = int(tid)
            except ValueError:
                raise CorpusError(f"non-integer token id {tid!r}", path, lineno) from None
            try:
                head = int(cols[6])
            except ValueError:
                raise CorpusError(f"non-integer HEAD {cols[6]!r}", path, lineno) from None
            if index != len(sentence) + 1:
                raise CorpusError(f"token id {index} out of sequence", path, lineno)
            form = cols[1]
            pos = cols[4] if cols[4] != "_" else cols[3]
            norm = normalize_text(form) or form.lower() or "_"
            sentence.append(Token(index, form, norm, pos, head, cols[7]))
    flush_sentence()
    flush_doc()
    return docs


def _make_doc(doc_id, sentences, label):
    tokens, bounds = [], []
    for sent in sentences:
        bounds.append((len(tokens), len(tokens) + len(sent)))
        tokens.extend(sent)
    return Document(doc_id, tuple(tokens), tuple(bounds), label)


def load_corpus(path) -> list[Document]:
    """Dispatch on file suffix: ``.conllu`` is parsed, anything else is JSON-lines."""
    if Path(path).suffix.lower() in (".conllu", ".conll"):
        return load_conllu(path)
    return load_jsonl(path)


# ----------------------------------------------------------------------
# splits

@dataclass
class Split:
    seed: int
    train_repr: list[Document]
    test_repr: list[Document]
    train_balanced: list[Document] = field(default_factory=list)

    def manifest(self) -> dict:
        return {
            "seed": self.seed,
            "train_repr": [d.id for d in self.train_repr],
            "test_repr": [d.id for d in self.test_repr],
            "train_balanced": [d.id for d in self.train_balanced],
        }


def split_corpus(docs, seed: int, ratios=(2 / 3, 1 / 3), balanced_per_class: int = 0,
                 emotion_lexicon=None, cues=None) -> Split:
    """Uniform random train/test split plus a class-balanced subset of train.

    When lexicons are given, a document only qualifies for the balanced
    subset if it contains an emotion-lexicon word and a modifier cue.
    """
    train_frac, test_frac = ratios
    if abs(train_frac + test_frac - 1.0) > 1e-9 or not 0 < train_frac < 1:
        raise ValueError(f"split ratios must be in (0,1) and sum to 1, got {ratios}")
    docs = list(docs)
    unlabeled = [d.id for d in docs if d.label is None]
    if unlabeled:
        raise CorpusError(f"{len(unlabeled)} unlabeled documents, e.g. {unlabeled[0]!r}")

    rng = random.Random(seed)
    order = list(range(len(docs)))
    rng.shuffle(order)
    n_train = int(round(len(docs) * train_frac))
    train = [docs[i] for i in sorted(order[:n_train])]
    test = [docs[i] for i in sorted(order[n_train:])]

    balanced = []
    if balanced_per_class:
        def qualifies(doc):
            if emotion_lexicon is None and cues is None:
                return True
            words = doc.words
            has_emo = emotion_lexicon is None or any(w in emotion_lexicon for w in words)
            has_cue = cues is None or any(w in cues for w in words)
            return has_emo and has_cue

        pools = {e: [d for d in train if d.label == e and qualifies(d)] for e in EMOTIONS}
        short = [f"{e.label} ({len(p)})" for e, p in pools.items() if len(p) < balanced_per_class]
        if short:
            raise CorpusError(
                f"not enough qualifying documents for {balanced_per_class} per class: "
                + ", ".join(short))
        for e in EMOTIONS:
            pick = sorted(rng.sample(range(len(pools[e])), balanced_per_class))
            balanced.extend(pools[e][i] for i in pick)
    return Split(seed, train, test, balanced)


def write_manifest(split: Split, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(split.manifest(), f, indent=1)
        f.write("\n")


def read_manifest(path) -> dict:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def select(docs, ids) -> list[Document]:
    by_id = {d.id: d for d in docs}
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise CorpusError(f"{len(missing)} manifest ids not in corpus, e.g. {missing[0]!r}")
    return [by_id[i] for i in ids]
