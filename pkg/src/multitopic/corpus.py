"""Corpus ingestion: tokenized JSON-lines documents, vocabulary building
with stopword and frequency filtering, hard-link resolution, and a
versioned serialization format.

Input documents are assumed pre-tokenized and pre-stemmed; no text
normalization happens here.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, DataError

logger = logging.getLogger(__name__)

CORPUS_FORMAT_VERSION = 1


class Vocabulary:
    """Bijection between word strings and dense integer ids for one language."""

    def __init__(self, language: str, words: list[str]):
        self.language = language
        self.word_of_id: list[str] = list(words)
        self.id_of_word: dict[str, int] = {w: i for i, w in enumerate(words)}
        if len(self.id_of_word) != len(self.word_of_id):
            raise DataError(f"vocabulary for {language!r} contains duplicate words")

    @property
    def size(self) -> int:
        return len(self.word_of_id)

    def __len__(self) -> int:
        return len(self.word_of_id)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Vocabulary)
            and self.language == other.language
            and self.word_of_id == other.word_of_id
        )

    def __repr__(self) -> str:
        return f"Vocabulary({self.language!r}, {self.size} types)"


@dataclass
class Document:
    doc_id: str
    language: str
    tokens: list[int]
    labels: frozenset[str] | None = None
    link_id: str | None = None

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class Corpus:
    """Immutable-by-convention collection of id-encoded documents."""

    language: str
    vocabulary: Vocabulary
    documents: list[Document]

    @property
    def token_total(self) -> int:
        return sum(len(d.tokens) for d in self.documents)

    def __len__(self) -> int:
        return len(self.documents)

    def doc_types(self) -> list[set[int]]:
        """Distinct word ids per document."""
        return [set(d.tokens) for d in self.documents]


@dataclass
class BilingualCorpus:
    side1: Corpus
    side2: Corpus
    # (doc index in side1, doc index in side2), sorted; each doc in at most one pair
    hard_links: list[tuple[int, int]] = field(default_factory=list)

    @property
    def languages(self) -> tuple[str, str]:
        return (self.side1.language, self.side2.language)


@dataclass
class LoaderOptions:
    """Knobs for `load_corpus`.

    top_frequent removes the N most frequent remaining word types after
    stopword removal; frequency is token frequency, ties broken by word
    string so the cut is deterministic.
    """

    stopwords: frozenset[str] = frozenset()
    top_frequent: int = 100
    keep_empty: bool = False


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Read a one-word-per-line stopword file."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if word:
                words.add(word)
    return frozenset(words)


def _parse_records(path: str | Path, language: str) -> list[dict]:
    records = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(rec, dict):
                raise DataError(f"{path}:{lineno}: record is not an object")
            for key in ("id", "lang", "tokens"):
                if key not in rec:
                    raise DataError(f"{path}:{lineno}: missing field {key!r}")
            if rec["lang"] != language:
                raise DataError(
                    f"{path}:{lineno}: language {rec['lang']!r} does not match expected {language!r}"
                )
            if not isinstance(rec["tokens"], list) or not all(
                isinstance(t, str) for t in rec["tokens"]
            ):
                raise DataError(f"{path}:{lineno}: 'tokens' must be a list of strings")
            doc_id = rec["id"]
            if not isinstance(doc_id, str) or not doc_id:
                raise DataError(f"{path}:{lineno}: 'id' must be a non-empty string")
            if doc_id in seen_ids:
                raise DataError(f"{path}:{lineno}: duplicate doc_id {doc_id!r}")
            seen_ids.add(doc_id)
            records.append(rec)
    return records


def load_corpus(
    path: str | Path,
    language: str,
    options: LoaderOptions | None = None,
    vocabulary: Vocabulary | None = None,
) -> Corpus:
    """Load a JSON-lines corpus and encode it against a vocabulary.

    Without `vocabulary`, the vocabulary is built from this file: stopwords
    are removed first, then the `options.top_frequent` most frequent
    remaining word types; ids are assigned in first-occurrence order.
    With `vocabulary` (held-out encoding), no frequency filtering happens
    and out-of-vocabulary tokens are silently dropped.
    """
    opts = options or LoaderOptions()
    records = _parse_records(path, language)
    if not records:
        raise DataError(f"{path}: empty corpus")

    if vocabulary is None:
        counts: Counter[str] = Counter()
        for rec in records:
            counts.update(t for t in rec["tokens"] if t not in opts.stopwords)
        if opts.top_frequent > 0:
            ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
            removed = {w for w, _ in ranked[: opts.top_frequent]}
        else:
            removed = set()
        keep = lambda t: t not in opts.stopwords and t not in removed
        vocab_words: list[str] = []
        seen: set[str] = set()
        for rec in records:
            for tok in rec["tokens"]:
                if keep(tok) and tok not in seen:
                    seen.add(tok)
                    vocab_words.append(tok)
        vocabulary = Vocabulary(language, vocab_words)
    else:
        if vocabulary.language != language:
            raise ConfigError(
                f"vocabulary language {vocabulary.language!r} does not match {language!r}"
            )

    id_of_word = vocabulary.id_of_word
    documents: list[Document] = []
    dropped_docs = 0
    for rec in records:
        tokens = [id_of_word[t] for t in rec["tokens"] if t in id_of_word]
        if not tokens and not opts.keep_empty:
            dropped_docs += 1
            continue
        labels = frozenset(rec["labels"]) if rec.get("labels") else None
        documents.append(
            Document(
                doc_id=rec["id"],
                language=language,
                tokens=tokens,
                labels=labels,
                link_id=rec.get("link") or None,
            )
        )
    if dropped_docs:
        logger.warning("%s: dropped %d documents empty after filtering", path, dropped_docs)
    if not documents:
        raise DataError(f"{path}: no documents left after filtering")
    return Corpus(language=language, vocabulary=vocabulary, documents=documents)


def pair_corpora(c1: Corpus, c2: Corpus) -> BilingualCorpus:
    """Join two corpora on matching link ids.

    Unmatched link ids are logged as warnings; a link id appearing on two
    documents of the same side is an error.
    """
    if c1.language == c2.language:
        raise ConfigError(f"both corpora have language {c1.language!r}")

    def link_index(corpus: Corpus) -> dict[str, int]:
        index: dict[str, int] = {}
        for i, doc in enumerate(corpus.documents):
            if doc.link_id is None:
                continue
            if doc.link_id in index:
                raise DataError(
                    f"duplicate link id {doc.link_id!r} in corpus {corpus.language!r}"
                )
            index[doc.link_id] = i
        return index

    links1 = link_index(c1)
    links2 = link_index(c2)
    matched = sorted(set(links1) & set(links2))
    for side, unmatched in ((c1.language, set(links1) - set(links2)),
                            (c2.language, set(links2) - set(links1))):
        if unmatched:
            logger.warning(
                "%d link ids on side %s have no partner (e.g. %s)",
                len(unmatched), side, sorted(unmatched)[0],
            )
    hard_links = sorted((links1[key], links2[key]) for key in matched)
    return BilingualCorpus(side1=c1, side2=c2, hard_links=hard_links)


def corpus_to_json(corpus: Corpus) -> dict:
    return {
        "format_version": CORPUS_FORMAT_VERSION,
        "language": corpus.language,
        "vocabulary": corpus.vocabulary.word_of_id,
        "documents": [
            {
                "id": d.doc_id,
                "tokens": d.tokens,
                "labels": sorted(d.labels) if d.labels else None,
                "link": d.link_id,
            }
            for d in corpus.documents
        ],
    }


def corpus_from_json(payload: dict) -> Corpus:
    if payload.get("format_version") != CORPUS_FORMAT_VERSION:
        raise DataError(
            f"unsupported corpus format_version {payload.get('format_version')!r}"
        )
    language = payload["language"]
    vocab = Vocabulary(language, payload["vocabulary"])
    documents = []
    for rec in payload["documents"]:
        labels = frozenset(rec["labels"]) if rec.get("labels") else None
        documents.append(
            Document(
                doc_id=rec["id"],
                language=language,
                tokens=list(rec["tokens"]),
                labels=labels,
                link_id=rec.get("link"),
            )
        )
    return Corpus(language=language, vocabulary=vocab, documents=documents)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(corpus_to_json(corpus), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_serialized_corpus(path: str | Path) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        return corpus_from_json(json.load(fh))


def write_corpus_jsonl(corpus: Corpus, path: str | Path) -> None:
    """Write documents back out in the loader's JSON-lines input format."""
    words = corpus.vocabulary.word_of_id
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus.documents:
            rec: dict = {
                "id": doc.doc_id,
                "lang": corpus.language,
                "tokens": [words[t] for t in doc.tokens],
            }
            if doc.labels:
                rec["labels"] = sorted(doc.labels)
            if doc.link_id:
                rec["link"] = doc.link_id
            fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")))
            fh.write("\n")
