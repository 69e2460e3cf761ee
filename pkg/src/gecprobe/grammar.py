"""Paired CFG generation of minimal (errorful, corrected) sentence pairs.

Every error-variant rule names its grammatical counterpart. A derivation
expands the error rule exactly once; the reference realizes the same
derivation with the counterpart substituted and identical lexical choices,
so each pair differs in exactly one contiguous region: the gold edit.

Grammar file format (two sections plus directives, '#' starts a comment):

    file       = { line } ;
    line       = [ statement ] [ comment ] ;
    statement  = directive | "rules:" | "lexicon:" | rule | entry ;
    directive  = "tense" ERRORTYPE ( "present" | "past" )
               | "start" NTNAME ;
    rule       = NTNAME "->" rhs { "|" rhs }                 (* grammatical *)
               | NTNAME "@" ERRORTYPE "->" rhs "=>" rhs ;    (* error + counterpart *)
    rhs        = symbol { symbol } ;
    symbol     = NTNAME | CATEGORY [ "[" flag { "," flag } "]" ] ;
    CATEGORY   = "Q" | "N" | "IV" | "TV" | "Adj" | "Adv" ;
    flag       = "sg" | "pl" | "sg!" | "pl!"                 (* number; ! = exact *)
               | "agr" | "base" | "3sg" | "past" | "prog"    (* verb form *)
               | "adj" | "adv" ;                             (* adverb realization *)
    entry      = "Q"   lemma ( "sg" | "pl" | "any" )
               | "N"   singular plural
               | "IV"  base thirdsg past progressive
               | "TV"  base thirdsg past progressive
               | "Adj" form
               | "Adv" adjective adverb ;

Verb slots marked agr inflect by the sentence tense declared for the error
type being generated (present: sg -> 3sg form, pl -> base; past: past form).
A Q number flag with "!" admits only quantifiers of exactly that number,
excluding number-ambiguous ones, so quantifier-noun mismatches are real
errors. Counterpart symbols correspond to error symbols by category (for
word-order errors the correspondence is a permutation); nonterminals
correspond in order and may rename (e.g. VP_pl => VP_sg), in which case both
nonterminals must expand alternative-for-alternative in parallel shapes.

The first token of each realized sentence is capitalized, so a word-order
swap at the sentence start changes capitalization ("White every dog ...").
"""

from __future__ import annotations

import hashlib
import itertools
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

from .data import ERROR_TYPES, ORIGIN_SYNTHETIC, SentencePair
from .edits import align
from .errors import (
    CapacityExceeded,
    GrammarFormatError,
    GrammarIncomplete,
    MissingForm,
    NonFiniteGrammar,
    ValidationError,
)


class Category(Enum):
    QUANTIFIER = "Q"
    NOUN = "N"
    INTRANSITIVE_VERB = "IV"
    TRANSITIVE_VERB = "TV"
    ADJECTIVE = "Adj"
    ADVERB = "Adv"


_VERBS = (Category.INTRANSITIVE_VERB, Category.TRANSITIVE_VERB)


class Number(Enum):
    SINGULAR = "sg"
    PLURAL = "pl"
    ANY = "any"


class VerbForm(Enum):
    BASE = "base"
    THIRD_SG_PRESENT = "3sg"
    PAST = "past"
    PROGRESSIVE = "prog"
    NOT_APPLICABLE = "na"


@dataclass(frozen=True)
class FeatureBundle:
    number: Number = Number.ANY
    verb_form: VerbForm = VerbForm.NOT_APPLICABLE
    adverbial: bool = False


@dataclass(frozen=True)
class LexicalEntry:
    """One lexeme: a lemma plus its surface forms keyed by form name.

    Form keys: nouns sg/pl; verbs base/3sg/past/prog; adjectives adj;
    adverb lexemes adj/adv (the MORPH pairing, e.g. quick/quickly);
    quantifiers sg and/or pl (both present for number-ambiguous ones).
    """

    lemma: str
    category: Category
    forms: dict[str, str] = field(hash=False)


def _form_key(category: Category, features: FeatureBundle) -> str:
    if category in (Category.QUANTIFIER, Category.NOUN):
        if features.number is Number.ANY:
            raise MissingForm(f"{category.value} needs a definite number, got 'any'")
        return features.number.value
    if category in _VERBS:
        if features.verb_form is VerbForm.NOT_APPLICABLE:
            raise MissingForm(f"{category.value} needs a verb form")
        return features.verb_form.value
    return "adv" if features.adverbial else "adj"


def inflect(entry: LexicalEntry, features: FeatureBundle) -> str:
    """Surface form of `entry` under `features`; raises MissingForm."""
    key = _form_key(entry.category, features)
    try:
        return entry.forms[key]
    except KeyError:
        raise MissingForm(
            f"{entry.category.value} entry '{entry.lemma}' has no '{key}' form"
        ) from None


@dataclass(frozen=True)
class NonTerminal:
    name: str


@dataclass(frozen=True)
class Slot:
    """A lexical-category position in a rule RHS, with realization features."""

    category: Category
    number: str | None = None  # "sg" | "pl"
    exact_number: bool = False  # exclude number-ambiguous quantifiers
    verb_form: str | None = None  # "base" | "3sg" | "past" | "prog" | "agr"
    adverbial: bool | None = None


Symbol = NonTerminal | Slot


@dataclass(frozen=True)
class GrammarRule:
    lhs: str
    rhs: tuple[Symbol, ...]
    error_type: str | None = None  # None = grammatical variant
    counterpart: tuple[Symbol, ...] | None = None
    # correspondence[p] = position in counterpart of error RHS position p
    correspondence: tuple[int, ...] | None = None
    line: int = 0

    @property
    def is_error(self) -> bool:
        return self.error_type is not None


@dataclass
class Grammar:
    start: str
    rules: tuple[GrammarRule, ...]
    lexicon: dict[Category, tuple[LexicalEntry, ...]]
    tenses: dict[str, str]
    text: str = ""
    sha256: str = ""
    _alts: dict[str, tuple[GrammarRule, ...]] = field(default_factory=dict, repr=False)
    _error_alts: dict[tuple[str, str], tuple[GrammarRule, ...]] = field(default_factory=dict, repr=False)
    _pair_cache: dict[str, list[tuple[tuple[str, ...], tuple[str, ...]]]] = field(
        default_factory=dict, repr=False
    )
    _rec_cache: dict[str, "_CompiledRecognizer"] = field(default_factory=dict, repr=False)

    def alternatives(self, nt: str) -> tuple[GrammarRule, ...]:
        return self._alts.get(nt, ())

    def error_alternatives(self, nt: str, error_type: str) -> tuple[GrammarRule, ...]:
        return self._error_alts.get((nt, error_type), ())

    def error_rules(self, error_type: str) -> tuple[GrammarRule, ...]:
        return tuple(r for r in self.rules if r.error_type == error_type)

    def tense_for(self, error_type: str) -> str:
        return self.tenses.get(error_type, "past")

    def entries(self, category: Category) -> tuple[LexicalEntry, ...]:
        return self.lexicon.get(category, ())


# ---------------------------------------------------------------------------
# Realization


def _slot_bundle(slot: Slot, tense: str) -> FeatureBundle:
    cat = slot.category
    if cat in (Category.QUANTIFIER, Category.NOUN):
        return FeatureBundle(number=Number(slot.number))
    if cat in _VERBS:
        if slot.verb_form == "agr":
            if tense == "present":
                vf = VerbForm.THIRD_SG_PRESENT if slot.number == "sg" else VerbForm.BASE
            else:
                vf = VerbForm.PAST
        else:
            vf = VerbForm(slot.verb_form)
        return FeatureBundle(verb_form=vf)
    if cat is Category.ADVERB:
        return FeatureBundle(adverbial=bool(slot.adverbial))
    return FeatureBundle()


def _realize(entry: LexicalEntry, slot: Slot, tense: str) -> str:
    return inflect(entry, _slot_bundle(slot, tense))


def _compatible(grammar: Grammar, slot: Slot) -> tuple[LexicalEntry, ...]:
    entries = grammar.entries(slot.category)
    if slot.category is Category.QUANTIFIER:
        if slot.exact_number:
            return tuple(e for e in entries if set(e.forms) == {slot.number})
        return tuple(e for e in entries if slot.number in e.forms)
    return entries


def _cap(tokens: tuple[str, ...]) -> tuple[str, ...]:
    head = tokens[0]
    return (head[0].upper() + head[1:],) + tokens[1:]


def _decap(tokens: Sequence[str]) -> tuple[str, ...]:
    head = tokens[0]
    return (head[0].lower() + head[1:],) + tuple(tokens[1:])


def _make_pair(src: tuple[str, ...], ref: tuple[str, ...], error_type: str) -> SentencePair:
    src, ref = _cap(src), _cap(ref)
    edits = align(src, ref)
    if len(edits) != 1:
        raise ValidationError(
            f"grammar produced a pair with {len(edits)} edits instead of 1: "
            f"{' '.join(src)!r} / {' '.join(ref)!r}"
        )
    edit = replace(edits[0], type_label=error_type)
    return SentencePair(
        source=src,
        reference=ref,
        error_type=error_type,
        gold_edits=(edit,),
        noisy=False,
        origin=ORIGIN_SYNTHETIC,
    )


# ---------------------------------------------------------------------------
# Enumeration (exhaustive, memoized on fragment lists)


def _check_finite(grammar: Grammar, error_type: str) -> None:
    edges: dict[str, set[str]] = {}
    rules = [r for r in grammar.rules if r.error_type in (None, error_type)]
    for r in rules:
        dests = edges.setdefault(r.lhs, set())
        for sym in r.rhs:
            if isinstance(sym, NonTerminal):
                dests.add(sym.name)
    state: dict[str, int] = {}  # 1 = on stack, 2 = done

    def visit(nt: str, trail: tuple[str, ...]) -> None:
        if state.get(nt) == 2:
            return
        if state.get(nt) == 1:
            cycle = trail[trail.index(nt):] + (nt,)
            raise NonFiniteGrammar("recursive nonterminals: " + " -> ".join(cycle))
        state[nt] = 1
        for dest in sorted(edges.get(nt, ())):
            visit(dest, trail + (nt,))
        state[nt] = 2

    visit(grammar.start, ())


def _enumerate_pairs(grammar: Grammar, error_type: str) -> list[tuple[tuple[str, ...], tuple[str, ...]]]:
    """All distinct (source, reference) realizations, lexicographically sorted."""
    if error_type in grammar._pair_cache:
        return grammar._pair_cache[error_type]
    if not grammar.error_rules(error_type):
        raise GrammarIncomplete(f"grammar has no error rule for {error_type}")
    _check_finite(grammar, error_type)
    tense = grammar.tense_for(error_type)

    frag0_memo: dict[Symbol, list[tuple[str, ...]]] = {}
    par_memo: dict[tuple[Symbol, Symbol], list[tuple[tuple[str, ...], tuple[str, ...]]]] = {}
    frag1_memo: dict[str, list[tuple[tuple[str, ...], tuple[str, ...]]]] = {}

    def frag0(sym: Symbol) -> list[tuple[str, ...]]:
        if sym in frag0_memo:
            return frag0_memo[sym]
        if isinstance(sym, Slot):
            out = [(_realize(e, sym, tense),) for e in _compatible(grammar, sym)]
        else:
            out = []
            for rule in grammar.alternatives(sym.name):
                for parts in itertools.product(*(frag0(s) for s in rule.rhs)):
                    out.append(sum(parts, ()))
        frag0_memo[sym] = out
        return out

    def parallel(x: Symbol, y: Symbol) -> list[tuple[tuple[str, ...], tuple[str, ...]]]:
        """Lockstep realizations of x (error side) and y (counterpart side)."""
        key = (x, y)
        if key in par_memo:
            return par_memo[key]
        out: list[tuple[tuple[str, ...], tuple[str, ...]]] = []
        if isinstance(x, Slot):
            for e in _compatible(grammar, x):
                if e in _compatible(grammar, y):
                    out.append(((_realize(e, x, tense),), (_realize(e, y, tense),)))
        elif x == y:
            out = [(f, f) for f in frag0(x)]
        else:
            for rx, ry in zip(grammar.alternatives(x.name), grammar.alternatives(y.name)):
                for parts in itertools.product(*(parallel(sx, sy) for sx, sy in zip(rx.rhs, ry.rhs))):
                    out.append((sum((p[0] for p in parts), ()), sum((p[1] for p in parts), ())))
        par_memo[key] = out
        return out

    def expand_error(rule: GrammarRule) -> Iterator[tuple[tuple[str, ...], tuple[str, ...]]]:
        assert rule.counterpart is not None and rule.correspondence is not None
        per_pos = [
            parallel(sym, rule.counterpart[rule.correspondence[p]])
            for p, sym in enumerate(rule.rhs)
        ]
        n_cp = len(rule.counterpart)
        for parts in itertools.product(*per_pos):
            src = sum((p[0] for p in parts), ())
            ref_parts: list[tuple[str, ...]] = [()] * n_cp
            for p, (_, y) in enumerate(parts):
                ref_parts[rule.correspondence[p]] = y
            yield src, sum(ref_parts, ())

    def frag1(nt: str) -> list[tuple[tuple[str, ...], tuple[str, ...]]]:
        if nt in frag1_memo:
            return frag1_memo[nt]
        out: list[tuple[tuple[str, ...], tuple[str, ...]]] = []
        for rule in grammar.alternatives(nt):
            nt_positions = [p for p, s in enumerate(rule.rhs) if isinstance(s, NonTerminal)]
            for carrier in nt_positions:
                per_pos: list[list[tuple[tuple[str, ...], tuple[str, ...]]]] = []
                for p, sym in enumerate(rule.rhs):
                    if p == carrier:
                        per_pos.append(frag1(sym.name))  # type: ignore[union-attr]
                    else:
                        per_pos.append([(f, f) for f in frag0(sym)])
                for parts in itertools.product(*per_pos):
                    out.append((sum((p[0] for p in parts), ()), sum((p[1] for p in parts), ())))
        for rule in grammar.error_alternatives(nt, error_type):
            out.extend(expand_error(rule))
        frag1_memo[nt] = out
        return out

    seen: set[tuple[tuple[str, ...], tuple[str, ...]]] = set()
    pairs = []
    for src, ref in frag1(grammar.start):
        key = (_cap(src), _cap(ref))
        if key[0] != key[1] and key not in seen:
            seen.add(key)
            pairs.append(key)
    pairs.sort()
    grammar._pair_cache[error_type] = pairs
    return pairs


def enumerate_all(grammar: Grammar, error_type: str) -> list[SentencePair]:
    """Every derivable pair for `error_type`, deduplicated, canonical order."""
    return [_make_pair(s, r, error_type) for s, r in _enumerate_pairs(grammar, error_type)]


def capacity(grammar: Grammar, error_type: str) -> int:
    return len(_enumerate_pairs(grammar, error_type))


def generate_corpus(
    grammar: Grammar, error_type: str, count: int, seed: int
) -> list[SentencePair]:
    """`count` distinct pairs sampled without replacement, seed-deterministic."""
    if count < 1:
        raise ValidationError(f"count must be >= 1, got {count}")
    space = _enumerate_pairs(grammar, error_type)
    if len(space) < count:
        raise CapacityExceeded(
            f"{error_type}: grammar capacity {len(space)} is below requested {count}"
        )
    rng = random.Random(seed)
    return [_make_pair(s, r, error_type) for s, r in rng.sample(space, count)]


# ---------------------------------------------------------------------------
# Single random derivation


class _Reject(Exception):
    pass


def derive_pair(grammar: Grammar, error_type: str, rng_seed: int) -> SentencePair:
    """One random derivation applying an `error_type` rule exactly once."""
    if not grammar.error_rules(error_type):
        raise GrammarIncomplete(f"grammar has no error rule for {error_type}")
    tense = grammar.tense_for(error_type)
    rng = random.Random(rng_seed)

    def sample_frag0(sym: Symbol) -> tuple[str, ...]:
        if isinstance(sym, Slot):
            entries = _compatible(grammar, sym)
            if not entries:
                raise _Reject
            return (_realize(rng.choice(entries), sym, tense),)
        rules = grammar.alternatives(sym.name)
        if not rules:
            raise _Reject
        rule = rng.choice(rules)
        return sum((sample_frag0(s) for s in rule.rhs), ())

    def sample_parallel(x: Symbol, y: Symbol) -> tuple[tuple[str, ...], tuple[str, ...]]:
        if isinstance(x, Slot):
            entries = [e for e in _compatible(grammar, x) if e in _compatible(grammar, y)]
            if not entries:
                raise _Reject
            e = rng.choice(entries)
            return (_realize(e, x, tense),), (_realize(e, y, tense),)
        if x == y:
            f = sample_frag0(x)
            return f, f
        ax, ay = grammar.alternatives(x.name), grammar.alternatives(y.name)
        k = rng.randrange(len(ax))
        parts = [sample_parallel(sx, sy) for sx, sy in zip(ax[k].rhs, ay[k].rhs)]
        return sum((p[0] for p in parts), ()), sum((p[1] for p in parts), ())

    def sample_error(rule: GrammarRule) -> tuple[tuple[str, ...], tuple[str, ...]]:
        assert rule.counterpart is not None and rule.correspondence is not None
        ref_parts: list[tuple[str, ...]] = [()] * len(rule.counterpart)
        src = ()
        for p, sym in enumerate(rule.rhs):
            x, y = sample_parallel(sym, rule.counterpart[rule.correspondence[p]])
            src += x
            ref_parts[rule.correspondence[p]] = y
        return src, sum(ref_parts, ())

    def sample(nt: str, pending: list[bool]) -> tuple[tuple[str, ...], tuple[str, ...]]:
        gram = grammar.alternatives(nt)
        err = grammar.error_alternatives(nt, error_type) if pending[0] else ()
        options: list[GrammarRule] = list(gram) + list(err)
        if not options:
            raise _Reject
        rule = rng.choice(options)
        if rule.is_error:
            pending[0] = False
            return sample_error(rule)
        src: tuple[str, ...] = ()
        ref: tuple[str, ...] = ()
        for sym in rule.rhs:
            if isinstance(sym, Slot):
                f = sample_frag0(sym)
                src, ref = src + f, ref + f
            else:
                s, r = sample(sym.name, pending)
                src, ref = src + s, ref + r
        return src, ref

    for _ in range(10_000):
        pending = [True]
        try:
            src, ref = sample(grammar.start, pending)
        except _Reject:
            continue
        if not pending[0] and src != ref:
            return _make_pair(src, ref, error_type)
    raise CapacityExceeded(
        f"{error_type}: could not derive a pair in 10000 attempts; "
        "the grammar may lack compatible lexical entries"
    )


# ---------------------------------------------------------------------------
# Recognition (chart parser counting error-rule applications)


class _CompiledRecognizer(NamedTuple):
    """Integer-indexed grammar view so repeated recognition avoids hashing
    Slot/NonTerminal dataclasses (the dominant cost at corpus scale)."""

    start: int
    # surfaces[s]: realizable-token set when symbol s is a slot, None when
    # it is a nonterminal.
    surfaces: tuple[frozenset[str] | None, ...]
    rules: tuple[tuple[tuple[int, ...], ...], ...]
    error_rules: tuple[tuple[tuple[int, ...], ...], ...]


def _compile_recognizer(grammar: Grammar, error_type: str) -> _CompiledRecognizer:
    cached = grammar._rec_cache.get(error_type)
    if cached is not None:
        return cached
    tense = grammar.tense_for(error_type)
    ids: dict[Symbol, int] = {}
    surfaces: list[frozenset[str] | None] = []
    rules: list[tuple[tuple[int, ...], ...]] = []
    error_rules: list[tuple[tuple[int, ...], ...]] = []
    todo: list[Symbol] = []

    def intern(sym: Symbol) -> int:
        got = ids.get(sym)
        if got is None:
            got = ids[sym] = len(surfaces)
            surfaces.append(None)
            rules.append(())
            error_rules.append(())
            todo.append(sym)
        return got

    start = intern(NonTerminal(grammar.start))
    while todo:
        sym = todo.pop()
        s = ids[sym]
        if isinstance(sym, Slot):
            surfaces[s] = frozenset(
                _realize(e, sym, tense) for e in _compatible(grammar, sym)
            )
        else:
            rules[s] = tuple(
                tuple(intern(r) for r in rule.rhs)
                for rule in grammar.alternatives(sym.name)
            )
            error_rules[s] = tuple(
                tuple(intern(r) for r in rule.rhs)
                for rule in grammar.error_alternatives(sym.name, error_type)
            )
    compiled = _CompiledRecognizer(
        start, tuple(surfaces), tuple(rules), tuple(error_rules)
    )
    grammar._rec_cache[error_type] = compiled
    return compiled


def recognize(grammar: Grammar, error_type: str, tokens: Sequence[str]) -> set[int]:
    """Achievable error-rule application counts ({0}, {1}, {0,1}, or empty).

    The first token is lowercased before matching, mirroring the generator's
    sentence-initial capitalization.
    """
    if not tokens:
        return set()
    toks = _decap(tokens)
    comp = _compile_recognizer(grammar, error_type)
    surfaces, rules, error_rules = comp.surfaces, comp.rules, comp.error_rules
    n = len(toks)

    derivable_memo: dict[tuple[int, int, int, int], bool] = {}
    # id() keys are stable here: the rhs tuples live on `comp` for the whole call.
    fits_memo: dict[tuple[int, int, int, int, int], bool] = {}

    def derivable(s: int, i: int, j: int, c: int) -> bool:
        key = (s, i, j, c)
        got = derivable_memo.get(key)
        if got is not None:
            return got
        derivable_memo[key] = False  # cycle guard; grammars here are finite anyway
        surf = surfaces[s]
        if surf is not None:
            out = c == 0 and j == i + 1 and toks[i] in surf
        else:
            out = False
            for rhs in rules[s]:
                if fits(rhs, 0, i, j, c):
                    out = True
                    break
            if not out and c >= 1:
                for rhs in error_rules[s]:
                    if fits(rhs, 0, i, j, c - 1):
                        out = True
                        break
        derivable_memo[key] = out
        return out

    def fits(rhs: tuple[int, ...], pos: int, i: int, j: int, c: int) -> bool:
        key = (id(rhs), pos, i, j, c)
        got = fits_memo.get(key)
        if got is not None:
            return got
        if pos == len(rhs):
            out = i == j and c == 0
        elif pos == len(rhs) - 1:
            out = derivable(rhs[pos], i, j, c)
        else:
            out = False
            for m in range(i + 1, j + 1):
                for b in range(c + 1):
                    if derivable(rhs[pos], i, m, b) and fits(rhs, pos + 1, m, j, c - b):
                        out = True
                        break
                if out:
                    break
        fits_memo[key] = out
        return out

    return {c for c in (0, 1) if derivable(comp.start, 0, n, c)}


# ---------------------------------------------------------------------------
# Grammar file parsing


_NUMBER_FLAGS = {"sg", "pl", "sg!", "pl!"}
_VFORM_FLAGS = {"agr", "base", "3sg", "past", "prog"}
_ADV_FLAGS = {"adj", "adv"}
_CATEGORY_BY_SYMBOL = {c.value: c for c in Category}
_ENTRY_ARITY = {
    Category.QUANTIFIER: 2,
    Category.NOUN: 2,
    Category.INTRANSITIVE_VERB: 4,
    Category.TRANSITIVE_VERB: 4,
    Category.ADJECTIVE: 1,
    Category.ADVERB: 2,
}


def _parse_symbol(text: str, line: int) -> Symbol:
    base, feats = text, []
    if "[" in text:
        if not text.endswith("]"):
            raise GrammarFormatError(f"line {line}: malformed symbol {text!r}")
        base, flag_text = text[:-1].split("[", 1)
        feats = [f.strip() for f in flag_text.split(",") if f.strip()]
    if base not in _CATEGORY_BY_SYMBOL:
        if feats:
            raise GrammarFormatError(f"line {line}: nonterminal {base!r} cannot take features")
        if not base or not base[0].isalpha():
            raise GrammarFormatError(f"line {line}: bad symbol {text!r}")
        return NonTerminal(base)

    cat = _CATEGORY_BY_SYMBOL[base]
    number = vform = None
    exact = False
    adverbial = None
    for f in feats:
        if f in _NUMBER_FLAGS:
            number, exact = f.rstrip("!"), f.endswith("!")
        elif f in _VFORM_FLAGS:
            vform = f
        elif f in _ADV_FLAGS:
            adverbial = f == "adv"
        else:
            raise GrammarFormatError(f"line {line}: unknown feature {f!r} in {text!r}")

    if cat in (Category.QUANTIFIER, Category.NOUN):
        if number is None or vform or adverbial is not None:
            raise GrammarFormatError(f"line {line}: {base} slot needs exactly a number flag: {text!r}")
    elif cat in _VERBS:
        if vform is None or adverbial is not None:
            raise GrammarFormatError(f"line {line}: {base} slot needs a verb-form flag: {text!r}")
        if vform == "agr" and number is None:
            raise GrammarFormatError(f"line {line}: agr requires sg or pl: {text!r}")
        if vform != "agr" and number is not None:
            raise GrammarFormatError(f"line {line}: explicit verb form takes no number: {text!r}")
    elif cat is Category.ADJECTIVE:
        if feats:
            raise GrammarFormatError(f"line {line}: Adj takes no features: {text!r}")
    else:  # Adverb
        if adverbial is None or number or vform:
            raise GrammarFormatError(f"line {line}: Adv slot needs adj or adv: {text!r}")
    return Slot(cat, number=number, exact_number=exact, verb_form=vform, adverbial=adverbial)


def _base_key(sym: Symbol) -> tuple[str, str]:
    if isinstance(sym, Slot):
        return ("T", sym.category.value)
    return ("N", "")


def _correspondence(err: tuple[Symbol, ...], cp: tuple[Symbol, ...], line: int) -> tuple[int, ...]:
    groups_err: dict[tuple[str, str], list[int]] = {}
    groups_cp: dict[tuple[str, str], list[int]] = {}
    for p, s in enumerate(err):
        groups_err.setdefault(_base_key(s), []).append(p)
    for q, s in enumerate(cp):
        groups_cp.setdefault(_base_key(s), []).append(q)
    if {k: len(v) for k, v in groups_err.items()} != {k: len(v) for k, v in groups_cp.items()}:
        raise GrammarFormatError(
            f"line {line}: error RHS and counterpart do not carry the same symbols"
        )
    corr = [0] * len(err)
    for key, ps in groups_err.items():
        for p, q in zip(ps, groups_cp[key]):
            corr[p] = q
    return tuple(corr)


def _split_top(text: str, sep: str) -> list[str]:
    return [part.strip() for part in text.split(sep)]


def parse_grammar(text: str, name: str = "<string>") -> Grammar:
    start = "S"
    tenses: dict[str, str] = {}
    rules: list[GrammarRule] = []
    lexicon: dict[Category, list[LexicalEntry]] = {c: [] for c in Category}
    section = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "rules:":
            section = "rules"
            continue
        if line == "lexicon:":
            section = "lexicon"
            continue
        head = line.split()[0]
        if head == "tense":
            parts = line.split()
            if len(parts) != 3 or parts[2] not in ("present", "past"):
                raise GrammarFormatError(f"line {lineno}: expected 'tense <type> present|past'")
            if parts[1] not in ERROR_TYPES:
                raise GrammarFormatError(f"line {lineno}: unknown error type {parts[1]!r}")
            tenses[parts[1]] = parts[2]
            continue
        if head == "start":
            parts = line.split()
            if len(parts) != 2:
                raise GrammarFormatError(f"line {lineno}: expected 'start <nonterminal>'")
            start = parts[1]
            continue
        if section == "rules":
            rules.extend(_parse_rule_line(line, lineno))
            continue
        if section == "lexicon":
            _parse_entry_line(line, lineno, lexicon)
            continue
        raise GrammarFormatError(f"line {lineno}: statement outside rules:/lexicon: section: {line!r}")

    grammar = Grammar(
        start=start,
        rules=tuple(rules),
        lexicon={c: tuple(v) for c, v in lexicon.items()},
        tenses=tenses,
        text=text,
        sha256=hashlib.sha256(text.encode("utf-8")).hexdigest(),
    )
    _index_and_validate(grammar, name)
    return grammar


def _parse_rule_line(line: str, lineno: int) -> list[GrammarRule]:
    if "->" not in line:
        raise GrammarFormatError(f"line {lineno}: expected '->' in rule: {line!r}")
    lhs_text, rhs_text = line.split("->", 1)
    lhs_parts = lhs_text.split("@")
    lhs = lhs_parts[0].strip()
    error_type = None
    if len(lhs_parts) == 2:
        error_type = lhs_parts[1].strip()
        if error_type not in ERROR_TYPES:
            raise GrammarFormatError(f"line {lineno}: unknown error type {error_type!r}")
    elif len(lhs_parts) > 2:
        raise GrammarFormatError(f"line {lineno}: more than one '@' in rule head")
    if not lhs or not lhs[0].isalpha() or lhs in _CATEGORY_BY_SYMBOL:
        raise GrammarFormatError(f"line {lineno}: bad rule head {lhs!r}")

    if error_type is None:
        if "=>" in rhs_text:
            raise GrammarFormatError(f"line {lineno}: '=>' counterpart only allowed on @error rules")
        out = []
        for alt in _split_top(rhs_text, "|"):
            syms = tuple(_parse_symbol(t, lineno) for t in alt.split())
            if not syms:
                raise GrammarFormatError(f"line {lineno}: empty right-hand side")
            out.append(GrammarRule(lhs, syms, line=lineno))
        return out

    if "=>" not in rhs_text:
        raise GrammarFormatError(f"line {lineno}: @error rule needs a '=>' counterpart")
    if "|" in rhs_text:
        raise GrammarFormatError(f"line {lineno}: write one @error alternative per line")
    err_text, cp_text = rhs_text.split("=>", 1)
    err = tuple(_parse_symbol(t, lineno) for t in err_text.split())
    cp = tuple(_parse_symbol(t, lineno) for t in cp_text.split())
    if not err or not cp:
        raise GrammarFormatError(f"line {lineno}: empty right-hand side")
    corr = _correspondence(err, cp, lineno)
    return [GrammarRule(lhs, err, error_type=error_type, counterpart=cp, correspondence=corr, line=lineno)]


def _parse_entry_line(line: str, lineno: int, lexicon: dict[Category, list[LexicalEntry]]) -> None:
    parts = line.split()
    if parts[0] not in _CATEGORY_BY_SYMBOL:
        raise GrammarFormatError(f"line {lineno}: unknown lexical category {parts[0]!r}")
    cat = _CATEGORY_BY_SYMBOL[parts[0]]
    forms = parts[1:]
    if len(forms) != _ENTRY_ARITY[cat]:
        raise GrammarFormatError(
            f"line {lineno}: {cat.value} entry takes {_ENTRY_ARITY[cat]} fields, got {len(forms)}"
        )
    if any(not f for f in forms):
        raise GrammarFormatError(f"line {lineno}: empty surface form")

    if cat is Category.QUANTIFIER:
        lemma, num = forms
        if num not in ("sg", "pl", "any"):
            raise GrammarFormatError(f"line {lineno}: quantifier number must be sg, pl, or any")
        fmap = {"sg": lemma, "pl": lemma} if num == "any" else {num: lemma}
        entry = LexicalEntry(lemma, cat, fmap)
    elif cat is Category.NOUN:
        sg, pl = forms
        if sg == pl:
            raise GrammarFormatError(f"line {lineno}: noun '{sg}' needs distinct sg/pl forms")
        entry = LexicalEntry(sg, cat, {"sg": sg, "pl": pl})
    elif cat in _VERBS:
        base, third, past, prog = forms
        entry = LexicalEntry(base, cat, {"base": base, "3sg": third, "past": past, "prog": prog})
    elif cat is Category.ADJECTIVE:
        entry = LexicalEntry(forms[0], cat, {"adj": forms[0]})
    else:
        adj, adv = forms
        if adj == adv:
            raise GrammarFormatError(f"line {lineno}: adverb '{adv}' needs a distinct adjective counterpart")
        entry = LexicalEntry(adj, cat, {"adj": adj, "adv": adv})

    if any(e.lemma == entry.lemma for e in lexicon[cat]):
        raise GrammarFormatError(f"line {lineno}: duplicate {cat.value} entry '{entry.lemma}'")
    lexicon[cat].append(entry)


def _index_and_validate(grammar: Grammar, name: str) -> None:
    alts: dict[str, list[GrammarRule]] = {}
    err_alts: dict[tuple[str, str], list[GrammarRule]] = {}
    for r in grammar.rules:
        if r.is_error:
            err_alts.setdefault((r.lhs, r.error_type), []).append(r)  # type: ignore[arg-type]
        else:
            alts.setdefault(r.lhs, []).append(r)
    grammar._alts = {k: tuple(v) for k, v in alts.items()}
    grammar._error_alts = {k: tuple(v) for k, v in err_alts.items()}

    defined = set(grammar._alts)
    referenced = {grammar.start}
    for r in grammar.rules:
        for sym in r.rhs + (r.counterpart or ()):
            if isinstance(sym, NonTerminal):
                referenced.add(sym.name)
    missing = sorted(referenced - defined)
    if missing:
        raise GrammarFormatError(f"{name}: nonterminals without grammatical rules: {', '.join(missing)}")

    untensed = sorted(
        {r.error_type for r in grammar.rules if r.is_error} - set(grammar.tenses)
    )
    if untensed:
        raise GrammarFormatError(
            f"{name}: missing tense directive for error type(s): {', '.join(untensed)}"
        )

    # Counterpart checks: shape exists among grammatical alternatives; renamed
    # nonterminal pairs must expand in parallel.
    checked: set[tuple[str, str]] = set()
    for r in grammar.rules:
        if not r.is_error:
            continue
        assert r.counterpart is not None and r.correspondence is not None
        cp_shape = tuple(_base_key(s) for s in r.counterpart)
        if not any(
            tuple(_base_key(s) for s in g.rhs) == cp_shape for g in grammar.alternatives(r.lhs)
        ):
            raise GrammarFormatError(
                f"{name} line {r.line}: counterpart of @{r.error_type} rule matches no "
                f"grammatical alternative of {r.lhs}"
            )
        for p, sym in enumerate(r.rhs):
            cp_sym = r.counterpart[r.correspondence[p]]
            if isinstance(sym, NonTerminal) and isinstance(cp_sym, NonTerminal) and sym != cp_sym:
                _check_parallel(grammar, sym.name, cp_sym.name, r.line, checked, name)


def _check_parallel(
    grammar: Grammar, x: str, y: str, line: int, checked: set[tuple[str, str]], name: str
) -> None:
    if (x, y) in checked:
        return
    checked.add((x, y))
    ax, ay = grammar.alternatives(x), grammar.alternatives(y)
    ok = len(ax) == len(ay)
    if ok:
        for rx, ry in zip(ax, ay):
            if len(rx.rhs) != len(ry.rhs):
                ok = False
                break
            for sx, sy in zip(rx.rhs, ry.rhs):
                if _base_key(sx) != _base_key(sy):
                    ok = False
                    break
                if isinstance(sx, NonTerminal) and isinstance(sy, NonTerminal) and sx != sy:
                    _check_parallel(grammar, sx.name, sy.name, line, checked, name)
            if not ok:
                break
    if not ok:
        raise GrammarFormatError(
            f"{name} line {line}: {x} and {y} must expand in parallel "
            "(same number of alternatives with matching shapes)"
        )


def load_grammar(path: str | Path) -> Grammar:
    path = Path(path)
    return parse_grammar(path.read_text(encoding="utf-8"), name=str(path))


def default_grammar_path() -> Path:
    """The packaged controlled-vocabulary grammar."""
    return Path(__file__).parent / "grammars" / "appendix_a.cfg"
