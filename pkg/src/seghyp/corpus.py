"""JSON-lines corpus I/O and a seeded synthetic nested-mention generator.

One record per line::

    {"id": "s1", "tokens": ["the", "Seattle", "zoo"], "pos": ["DT", "NNP", "NN"],
     "mentions": [{"start": 0, "end": 2, "type": "FAC"}, {"start": 1, "end": 1, "type": "GPE"}]}

``pos`` and ``mentions`` are optional; spans are 0-based and inclusive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import Mention, SegHypError, Sentence, TypeVocab, canonicalize


class CorpusError(SegHypError):
    def __init__(self, path, errors):
        self.errors = errors
        shown = "\n".join(errors[:20])
        more = f"\n... {len(errors) - 20} more" if len(errors) > 20 else ""
        super().__init__(f"{path}: {len(errors)} error(s)\n{shown}{more}")


@dataclass
class Record:
    sentence: Sentence
    spans: list | None      # [(start, end, type name)] or None when unannotated


def _str_list(value, what):
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        raise ValueError(f"{what} must be a list of strings")
    return value


def parse_record(line: str, default_id: str) -> Record:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise ValueError("record must be a JSON object")
    tokens = _str_list(obj.get("tokens"), "tokens")
    if not tokens:
        raise ValueError("tokens must be non-empty")
    pos = obj.get("pos")
    if pos is not None:
        _str_list(pos, "pos")
        if len(pos) != len(tokens):
            raise ValueError(f"pos length {len(pos)} does not match {len(tokens)} tokens")
    sid = obj.get("id", default_id)
    if not isinstance(sid, str):
        raise ValueError("id must be a string")
    spans = None
    if "mentions" in obj:
        raw = obj["mentions"]
        if not isinstance(raw, list):
            raise ValueError("mentions must be a list")
        spans = []
        for m in raw:
            if not isinstance(m, dict):
                raise ValueError("mention must be an object")
            start, end, typ = m.get("start"), m.get("end"), m.get("type")
            if type(start) is not int or type(end) is not int or not isinstance(typ, str):
                raise ValueError(f"mention {m} needs integer start/end and string type")
            if not 0 <= start <= end < len(tokens):
                raise ValueError(f"span out of range: ({start}, {end}) with {len(tokens)} tokens")
            spans.append((start, end, typ))
    return Record(Sentence(tuple(tokens), tuple(pos) if pos is not None else None, sid), spans)


def read_corpus(path) -> list:
    """Parse every non-empty line; all bad lines are reported together."""
    records, errors = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                records.append(parse_record(line, f"line{lineno}"))
            except (ValueError, SegHypError) as exc:
                errors.append(f"line {lineno}: {exc}")
    if errors:
        raise CorpusError(path, errors)
    return records


def corpus_types(*corpora) -> TypeVocab:
    return TypeVocab.from_names(t for records in corpora for r in records
                                for _, _, t in (r.spans or ()))


def typed(records, types: TypeVocab) -> list:
    """(Sentence, MentionSet) pairs; unannotated records get the empty set."""
    return [(r.sentence, canonicalize(Mention(s, e, types.index(t)) for s, e, t in r.spans or ()))
            for r in records]


def parse_corpus(path, types: TypeVocab | None = None):
    """Return ``(pairs, types)`` with type names interned in ``types``."""
    records = read_corpus(path)
    types = types or corpus_types(records)
    return typed(records, types), types


def record_dict(sentence: Sentence, mentions, types: TypeVocab) -> dict:
    obj = {"id": sentence.id, "tokens": list(sentence.tokens)}
    if sentence.pos is not None:
        obj["pos"] = list(sentence.pos)
    obj["mentions"] = [{"start": s, "end": e, "type": types.name(k)}
                       for s, e, k in canonicalize(mentions)]
    return obj


def write_corpus(path, pairs, types: TypeVocab):
    with open(path, "w", encoding="utf-8") as fh:
        for sentence, mentions in pairs:
            fh.write(json.dumps(record_dict(sentence, mentions, types)) + "\n")


# -- synthetic data -----------------------------------------------------------

SYNTH_TYPES = ("FAC", "GPE", "PER")
TITLES = ("mr", "ms", "dr")
_ONSETS = "b d f g k l m n p r s t v z".split()
_VOWELS = "a e i o u".split()


@dataclass
class SynthConfig:
    sentences: int = 700
    vocab: int = 200
    nesting_prob: float = 0.5
    max_sentence_len: int = 16
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.nesting_prob <= 1.0:
            raise ValueError("nesting_prob must be in [0, 1]")
        if self.vocab < 20:
            raise ValueError("vocab must be at least 20")
        if self.max_sentence_len < 4:
            raise ValueError("max_sentence_len must be at least 4")


def _pseudo_words(rng, count, taken):
    words = []
    while len(words) < count:
        syl = rng.integers(2, 4)
        w = "".join(_ONSETS[rng.integers(len(_ONSETS))] + _VOWELS[rng.integers(len(_VOWELS))]
                    for _ in range(syl))
        if w not in taken:
            taken.add(w)
            words.append(w)
    return words


class _Lexicon:
    """Disjoint word classes; the sizes add up to the requested vocabulary."""

    def __init__(self, size, rng):
        fixed = ["the"] + list(TITLES)
        rest = size - len(fixed)
        n_per = rest // 5
        n_gpe = rest // 6
        n_fac = rest // 10
        n_suf = rest // 20
        n_fill = rest - n_per - n_gpe - n_fac - n_suf
        taken = set(fixed)
        self.fillers = _pseudo_words(rng, n_fill, taken)
        self.filler_pos = [("VB", "IN", "JJ", "RB")[i % 4] for i in range(n_fill)]
        self.names = [w.capitalize() for w in _pseudo_words(rng, n_per, taken)]
        self.places = [w.capitalize() for w in _pseudo_words(rng, n_gpe, taken)]
        self.fac_nouns = _pseudo_words(rng, n_fac, taken)
        self.fac_suffixes = _pseudo_words(rng, n_suf, taken)


def _choice(rng, seq):
    return seq[rng.integers(len(seq))]


def synth_corpus(config: SynthConfig):
    """Generate ``(pairs, types)``.  Every sentence has a GPE; with probability
    ``nesting_prob`` it sits inside a FAC ("the GPE noun"), and half of those
    FACs are themselves inside a longer FAC ("the GPE noun suffix")."""
    rng = np.random.default_rng(config.seed)
    lex = _Lexicon(config.vocab, rng)
    types = TypeVocab.from_names(SYNTH_TYPES)
    FAC, GPE, PER = (types.index(t) for t in SYNTH_TYPES)
    pairs = []
    for idx in range(config.sentences):
        budget = config.max_sentence_len
        phrases = []

        # the GPE, possibly wrapped
        u = rng.random()
        place = _choice(rng, lex.places)
        if u < config.nesting_prob / 2 and budget >= 4:
            toks = ["the", place, _choice(rng, lex.fac_nouns), _choice(rng, lex.fac_suffixes)]
            tags = ["DT", "NNP", "NN", "NN"]
            spans = [(1, 1, GPE), (0, 2, FAC), (0, 3, FAC)]
        elif u < config.nesting_prob and budget >= 3:
            toks = ["the", place, _choice(rng, lex.fac_nouns)]
            tags = ["DT", "NNP", "NN"]
            spans = [(1, 1, GPE), (0, 2, FAC)]
        else:
            toks, tags, spans = [place], ["NNP"], [(0, 0, GPE)]
        phrases.append((toks, tags, spans))
        budget -= len(toks)

        # an optional person
        if rng.random() < 0.6:
            names = [_choice(rng, lex.names) for _ in range(rng.integers(1, 3))]
            toks = [_choice(rng, TITLES)] + names
            if len(toks) <= budget:
                phrases.append((toks, ["NNP"] * len(toks), [(1, len(toks) - 1, PER)]))
                budget -= len(toks)
        if len(phrases) > 1 and rng.random() < 0.5:
            phrases.reverse()

        # interleave filler words
        tokens, pos, mentions = [], [], []
        for phrase in phrases + [None]:
            fill = min(int(rng.integers(0, 3)), budget)
            budget -= fill
            for _ in range(fill):
                w = int(rng.integers(len(lex.fillers)))
                tokens.append(lex.fillers[w])
                pos.append(lex.filler_pos[w])
            if phrase is None:
                break
            toks, tags, spans = phrase
            off = len(tokens)
            tokens += toks
            pos += tags
            mentions += [Mention(s + off, e + off, k) for s, e, k in spans]
        pairs.append((Sentence(tuple(tokens), tuple(pos), f"synth-{idx}"), canonicalize(mentions)))
    return pairs, types
