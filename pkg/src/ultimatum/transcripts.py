"""Log parsing and the canonical transcript format.

Raw game logs arrive in two shapes: a single combined log covering both
strategies and all rounds, or a pair of per-agent logs that each record
one player's view. Parsing is two-tier:

* tier 1 reads the structured markers the prompts ask for (``STRATEGY``,
  ``OFFER:``, ``DECISION:`` and bracket labels like ``[Round 1]``);
* tier 2 falls back to keyword and regex heuristics over free text when
  markers are absent or incomplete.

Diagnostics report Exact confidence only when every extracted value came
from a marker; if any heuristic fired the parse is Heuristic. Parsing
never invents data: a round whose offer or decision cannot be located is
an error, not a guess. Payoff lines in logs are advisory only; payoffs
are always recomputed by the engine and mismatches become warnings.

The canonical format is a versioned, line-oriented rendering of a parsed
transcript that round-trips losslessly (see docs/transcript-format.md for
the field order).
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass

from . import engine
from .engine import Decision, GameConfig, Money, RoundOutcome
from .strategy import (
    AdjustKind,
    AdjustRule,
    CutoffRule,
    FinalRoundRule,
    PersonalityPair,
    ProposerStrategy,
    ReceiverStrategy,
    Role,
    StrategySpec,
)


class Structure(enum.Enum):
    SINGLE_MODEL = "single_model"
    MULTI_AGENT = "multi_agent"


class Confidence(enum.Enum):
    EXACT = "exact"
    HEURISTIC = "heuristic"


class UnparseableLogError(Exception):
    """The log does not contain a recoverable, legal game."""


class InconsistentLogsError(Exception):
    """The two agent logs disagree about what happened."""


class SchemaVersionError(Exception):
    """Canonical transcript written under an unknown format version."""


class MalformedRecordError(Exception):
    """Canonical transcript text violates the v1 schema."""


@dataclass(frozen=True)
class ParseDiagnostics:
    confidence: Confidence
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class Transcript:
    """A fully parsed game: who played, what was declared, what happened.

    rounds are engine-recomputed outcomes in round order; raw_logs carries
    the original text(s) opaquely as (label, text) pairs so any transcript
    can be re-parsed and re-graded later.
    """

    config: GameConfig
    pair: PersonalityPair
    structure: Structure
    strategies: tuple[StrategySpec, StrategySpec]  # (proposer, receiver)
    rounds: tuple[RoundOutcome, ...]
    raw_logs: tuple[tuple[str, str], ...] = ()


# ---------------------------------------------------------------------------
# Money amounts
# ---------------------------------------------------------------------------

# Alternatives are ordered so "$0.50" is consumed whole rather than as "$0".
# Accepted forms: $0.50  $.50  $1  $1.25  50 cents  5 cents
_AMOUNT_RE = re.compile(
    r"""
      \$(?P<dollars>\d+)\.(?P<frac>\d{1,2})   # $0.50, $1.25, $1.5
    | \$\.(?P<frac_only>\d{1,2})              # $.50
    | \$(?P<whole>\d+)                        # $1
    | (?P<cents>\d+)\s*cents?\b               # 50 cents
    """,
    re.VERBOSE | re.IGNORECASE,
)


@dataclass(frozen=True)
class AmountMatch:
    cents: Money
    span: tuple[int, int]
    text: str


def _frac_to_cents(frac: str) -> Money:
    # One decimal digit means tenths of a dollar: $0.5 is 50 cents.
    return int(frac) * 10 if len(frac) == 1 else int(frac)


def extract_amounts(text: str) -> list[AmountMatch]:
    """All money amounts in the text, in document order, as integer cents."""
    out: list[AmountMatch] = []
    for m in _AMOUNT_RE.finditer(text):
        if m.group("dollars") is not None:
            cents = int(m.group("dollars")) * 100 + _frac_to_cents(m.group("frac"))
        elif m.group("frac_only") is not None:
            cents = _frac_to_cents(m.group("frac_only"))
        elif m.group("whole") is not None:
            cents = int(m.group("whole")) * 100
        else:
            cents = int(m.group("cents"))
        out.append(AmountMatch(cents=cents, span=m.span(), text=m.group(0)))
    return out


# ---------------------------------------------------------------------------
# Decisions in free text
# ---------------------------------------------------------------------------

_ACCEPT_WORDS = {"accept", "accepts", "accepted", "accepting"}
_REJECT_WORDS = {
    "reject",
    "rejects",
    "rejected",
    "rejecting",
    "decline",
    "declines",
    "declined",
    "refuse",
    "refuses",
    "refused",
}
_NEGATIONS = {"not", "no", "never", "cannot"}
# Words that mark a hypothetical rather than an actual decision ("if you
# reject this...", "you should accept"). Such mentions are skipped.
_CONDITIONALS = {"if", "unless", "whether", "should", "might", "may", "could"}

_WORD_RE = re.compile(r"[a-zA-Z']+")


def _decision_hits(line: str) -> list[Decision]:
    tokens = [t.lower() for t in _WORD_RE.findall(line)]
    hits: list[Decision] = []
    for i, tok in enumerate(tokens):
        if tok in _ACCEPT_WORDS:
            base = Decision.ACCEPT
        elif tok in _REJECT_WORDS:
            base = Decision.REJECT
        else:
            continue
        if any(t in _CONDITIONALS for t in tokens[max(0, i - 4) : i]):
            continue
        flips = sum(
            1 for t in tokens[max(0, i - 3) : i] if t in _NEGATIONS or t.endswith("n't")
        )
        if flips % 2:
            base = Decision.REJECT if base is Decision.ACCEPT else Decision.ACCEPT
        hits.append(base)
    return hits


# ---------------------------------------------------------------------------
# Markers (tier 1)
# ---------------------------------------------------------------------------

_OFFER_MARKER_RE = re.compile(r"^\s*\W*offer\s*:\s*(?P<rest>.*)$", re.IGNORECASE)
_DECISION_MARKER_RE = re.compile(r"^\s*\W*decision\s*:\s*(?P<rest>.*)$", re.IGNORECASE)
_STRATEGY_MARKER_RE = re.compile(
    r"^\s*strategy\s*[\(\[]?\s*(?P<role>proposer|receiver)\s*[\)\]]?\s*:?\s*(?P<rest>.*)$",
    re.IGNORECASE,
)
_BRACKET_LABEL_RE = re.compile(r"^\s*\[(?P<label>[a-zA-Z ]+)\]\s*(?P<rest>.*)$")


def _is_marker_line(line: str) -> bool:
    return bool(
        _STRATEGY_MARKER_RE.match(line)
        or _OFFER_MARKER_RE.match(line)
        or _DECISION_MARKER_RE.match(line)
        or _BRACKET_LABEL_RE.match(line)
        or _ROUND_HEADING_RE.match(line)
    )


# ---------------------------------------------------------------------------
# Round segmentation
# ---------------------------------------------------------------------------

_ROUND_HEADING_RE = re.compile(r"^[^\w\n]*round\s+(\d+)\b", re.IGNORECASE | re.MULTILINE)
_ROUND_INLINE_RE = re.compile(r"\bround\s+(\d+)\b", re.IGNORECASE)


def _round_candidates(text: str) -> list[tuple[int, int, int]]:
    """(start, end, number) for every plausible round heading.

    Line-initial headings ("Round 3:", "[Round 3]", "**Round 3**") always
    qualify; an inline mention qualifies only when it starts a sentence,
    which keeps "accept anything in round 5" inside strategy prose from
    being mistaken for the round-5 section.
    """
    by_start: dict[int, tuple[int, int, int]] = {}
    for m in _ROUND_HEADING_RE.finditer(text):
        by_start[m.start()] = (m.start(), m.end(), int(m.group(1)))
    for m in _ROUND_INLINE_RE.finditer(text):
        if m.start() in by_start:
            continue
        head = text[: m.start()].rstrip(" \t*#>[(\"'")
        if not head or head[-1] in ".!?\n":
            by_start[m.start()] = (m.start(), m.end(), int(m.group(1)))
    return sorted(by_start.values())


def _round_chain(text: str, rounds: int) -> list[tuple[int, int, int]]:
    """Choose one heading per round 1..rounds, in order.

    Works backwards from the last mention of the final round so that
    strategy text mentioning early rounds does not steal a heading; falls
    back to a forward scan, and returns the longest prefix found (callers
    decide whether a short chain is an error).
    """
    cands = _round_candidates(text)
    chosen: dict[int, tuple[int, int, int]] = {}
    limit = len(text) + 1
    for n in range(rounds, 0, -1):
        best = None
        for cand in cands:
            if cand[2] == n and cand[0] < limit:
                best = cand
        if best is None:
            break
        chosen[n] = best
        limit = best[0]
    if len(chosen) == rounds:
        return [chosen[n] for n in range(1, rounds + 1)]
    # Forward scan: first heading for each successive number.
    chain: list[tuple[int, int, int]] = []
    pos = -1
    for n in range(1, rounds + 1):
        nxt = next((c for c in cands if c[2] == n and c[0] > pos), None)
        if nxt is None:
            break
        chain.append(nxt)
        pos = nxt[0]
    return chain


def _segments(text: str, chain: list[tuple[int, int, int]]) -> tuple[str, list[str]]:
    """Split the text into (preamble, one segment per chained round)."""
    pre = text[: chain[0][0]] if chain else text
    segs = []
    for i, (_, end, _) in enumerate(chain):
        stop = chain[i + 1][0] if i + 1 < len(chain) else len(text)
        segs.append(text[end:stop])
    return pre, segs


# ---------------------------------------------------------------------------
# Per-segment extraction
# ---------------------------------------------------------------------------

_OFFER_VERB_RE = re.compile(r"\b(offer|offers|offered|offering|propose|proposes|proposed|proposing)\b", re.IGNORECASE)
_OFFER_SKIP_RE = re.compile(r"threshold|strateg", re.IGNORECASE)
_PAYOFF_LINE_RE = re.compile(r"\b(receive|receives|received|gets|get|earn|earns|payoff|pocket|pockets|keeps)\b", re.IGNORECASE)


def _unlabel(line: str) -> str:
    """Drop a leading bracket label so "[Say] OFFER: $1" reads as its content."""
    m = _BRACKET_LABEL_RE.match(line)
    return m.group("rest") if m else line


def _extract_offer(segment: str) -> tuple[Money | None, bool, list[str]]:
    """Locate the offer in a round segment: (cents, from_marker, warnings)."""
    warnings: list[str] = []
    fallback: Money | None = None
    for line in segment.split("\n"):
        line = _unlabel(line)
        m = _OFFER_MARKER_RE.match(line)
        if m:
            amounts = extract_amounts(m.group("rest"))
            if amounts:
                return amounts[0].cents, True, warnings
            warnings.append("OFFER marker without a readable amount")
        if fallback is None and _OFFER_VERB_RE.search(line) and not _OFFER_SKIP_RE.search(line):
            amounts = extract_amounts(line)
            if amounts:
                fallback = amounts[0].cents
    if fallback is not None:
        return fallback, False, warnings
    amounts = extract_amounts(segment)
    if amounts:
        warnings.append("offer taken without an offer verb nearby")
        return amounts[0].cents, False, warnings
    return None, False, warnings


def _extract_decision(segment: str) -> tuple[Decision | None, bool, list[str]]:
    warnings: list[str] = []
    hits: list[Decision] = []
    for line in segment.split("\n"):
        line = _unlabel(line)
        m = _DECISION_MARKER_RE.match(line)
        if m:
            marker_hits = _decision_hits(m.group("rest"))
            if marker_hits:
                return marker_hits[0], True, warnings
            warnings.append("DECISION marker without a readable decision")
        hits.extend(_decision_hits(line))
    if not hits:
        return None, False, warnings
    if any(h is not hits[0] for h in hits):
        warnings.append("conflicting decision words; using the first")
    return hits[0], False, warnings


def _check_payoffs(
    segment: str, offer: Money, decision: Decision, pot: Money, round_no: int
) -> list[str]:
    """Compare any payoff sentence against the engine's arithmetic."""
    if decision is Decision.ACCEPT:
        expected = sorted((pot - offer, offer))
    else:
        expected = [0, 0]
    for line in segment.split("\n"):
        line = _unlabel(line)
        if not _PAYOFF_LINE_RE.search(line) or _OFFER_VERB_RE.search(line):
            continue
        amounts = [a.cents for a in extract_amounts(line)]
        if len(amounts) >= 2 and sorted(amounts[:2]) != expected:
            return [
                f"round {round_no}: payoff line says {amounts[:2]}, engine computes {expected}"
            ]
    return []


# ---------------------------------------------------------------------------
# Strategy text -> structured fields
# ---------------------------------------------------------------------------

_CLAUSE_SPLIT_RE = re.compile(r"(?:\.(?!\d))|[!?;\n]+")
_BULLET_PREFIX_RE = re.compile(r"^[\s\-\*\d\)\.:#]+")

_CONDITIONAL_RE = re.compile(
    r"\b(if|when|whenever|once|after|upon|should|unless|following|in case|every time|each time|while)\b"
)
_REJECT_STEM_RE = re.compile(r"\b(reject\w*|declin\w*|refus\w*|turn(?:s|ed)? down)\b")
_ACCEPT_STEM_RE = re.compile(r"\baccept\w*\b")
_NEGATED_ACCEPT_RE = re.compile(r"(?:\bnot\b|\bnever\b|\bno\b|n't)[^.;,]{0,24}accept")

_INCREASE_RE = re.compile(r"\b(increas\w*|rais\w*|bump\w*|add\w*|sweeten\w*|improv\w*)\b")
_DECREASE_RE = re.compile(r"\b(lower\w*|decreas\w*|reduc\w*|drop\w*|shav\w*)\b")
_KEEP_RE = re.compile(
    r"\b(keep\w*|same|maintain\w*|unchanged|stick\w*|continu\w*|hold\w*|repeat\w*)\b"
)
_CUTOFF_RE = re.compile(
    r"cut-?\s?off|no (?:higher|more) than|at most|stop (?:increas|rais|conced)|ceiling|"
    r"(?:not|n't|never) go (?:above|beyond|over|past)"
)

_WORD_NUMBERS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10,
}
_ORDINALS = {
    "first": 1, "second": 2, "third": 3, "fourth": 4, "fifth": 5,
    "sixth": 6, "seventh": 7, "eighth": 8, "ninth": 9, "tenth": 10,
}


def _split_clauses(text: str) -> list[str]:
    clauses = []
    for chunk in _CLAUSE_SPLIT_RE.split(text):
        chunk = _BULLET_PREFIX_RE.sub("", chunk.strip())
        if chunk:
            clauses.append(chunk)
    return clauses


def _mentions_rejection(low: str) -> bool:
    if _NEGATED_ACCEPT_RE.search(low):
        return True
    return bool(_REJECT_STEM_RE.search(low)) and bool(_CONDITIONAL_RE.search(low))


def _mentions_acceptance(low: str) -> bool:
    if _NEGATED_ACCEPT_RE.search(low):
        return False
    return bool(_ACCEPT_STEM_RE.search(low)) and bool(_CONDITIONAL_RE.search(low))


def _amount_after_by(clause: str, amounts: list[AmountMatch]) -> Money | None:
    m = re.search(r"\bby\b", clause.lower())
    if not m:
        return None
    for a in amounts:
        if a.span[0] >= m.end():
            return a.cents
    return None


def _adjust_rule(low: str, clause: str, amounts: list[AmountMatch]) -> AdjustRule | None:
    vals = [a.cents for a in amounts]
    step = _amount_after_by(clause, amounts)
    if step is None and vals:
        step = vals[-1]
    if _INCREASE_RE.search(low):
        return AdjustRule(AdjustKind.INCREASE_BY, step)
    if _DECREASE_RE.search(low):
        return AdjustRule(AdjustKind.DECREASE_BY, step)
    if _KEEP_RE.search(low):
        return AdjustRule(AdjustKind.KEEP)
    if _OFFER_VERB_RE.search(low) and vals:
        return AdjustRule(AdjustKind.SET_TO, vals[0])
    return None


def _parse_proposer_text(text: str) -> ProposerStrategy:
    initial = None
    on_accept = None
    on_reject = None
    cutoff = None
    for clause in _split_clauses(text):
        low = clause.lower()
        amounts = extract_amounts(clause)
        vals = [a.cents for a in amounts]
        if _CUTOFF_RE.search(low):
            if cutoff is None:
                cutoff = CutoffRule(limit=vals[0] if vals else None)
            continue
        rejection = _mentions_rejection(low)
        acceptance = _mentions_acceptance(low)
        if rejection or acceptance:
            rule = _adjust_rule(low, clause, amounts)
            if rule is not None:
                if rejection and on_reject is None:
                    on_reject = rule
                if acceptance and on_accept is None:
                    on_accept = rule
            continue
        if initial is None and vals and _OFFER_VERB_RE.search(low):
            initial = vals[0]
    return ProposerStrategy(
        initial_offer=initial, on_accept=on_accept, on_reject=on_reject, cutoff=cutoff
    )


_ADJUSTMENT_VERB_RE = re.compile(
    r"\b(lower\w*|reduc\w*|decreas\w*|rais\w*|increas\w*|adjust\w*)\b"
)
_REJECT_ALL_RE = re.compile(r"\b(?:reject|decline|refuse)\w*\s+(?:any|all|every)\b")


def _threshold_value(low: str, vals: list[Money], pot: Money) -> Money | None:
    """Accept-from threshold implied by one clause, or None."""
    if not vals:
        if _REJECT_ALL_RE.search(low) or "never accept" in low:
            return pot + 1
        return None
    if _ADJUSTMENT_VERB_RE.search(low) and "adjusting" not in low:
        return None
    if re.search(r"\b(below|under|less than)\b", low):
        return vals[0]
    if re.search(r"\bat least\b|\bor more\b|\bor higher\b|\bor above\b|\bor better\b|\bminimum\b|\bat or above\b", low):
        return vals[0]
    if re.search(r"\b(above|over|more than|greater than|exceeding|beyond)\b", low):
        return vals[0] if "or equal" in low else vals[0] + 1
    if re.search(r"\bor less\b|\bat or below\b", low):
        return vals[0] + 1
    if "threshold" in low or _ACCEPT_STEM_RE.search(low):
        return vals[0]
    return None


def _round_scope(low: str, rounds: int) -> list[int] | None:
    """Rounds a clause names, or None when it applies to every round."""
    m = re.search(r"rounds?\s+(\d+)\s*(?:-|–|to|through)\s*(\d+)", low)
    if m:
        return list(range(int(m.group(1)), int(m.group(2)) + 1))
    m = re.search(r"first\s+(\w+)\s+rounds", low)
    if m and m.group(1) in _WORD_NUMBERS:
        return list(range(1, _WORD_NUMBERS[m.group(1)] + 1))
    m = re.search(r"\bround\s+(\d+)\b", low)
    if m:
        return [int(m.group(1))]
    m = re.search(r"\b(first|second|third|fourth|fifth|sixth|seventh|eighth|ninth|tenth)\s+round\b", low)
    if m:
        return [_ORDINALS[m.group(1)]]
    return None


_BEFORE_FINAL_RE = re.compile(
    r"\b(?:before|until|up to|prior to)\s+(?:the\s+)?(?:final|last)\s+round\b"
)


def _is_final_round_clause(low: str, rounds: int) -> bool:
    # "until the last round" scopes the rounds before the final one, so a
    # mention inside that phrase must not mark the clause as final-round.
    low = _BEFORE_FINAL_RE.sub(" ", low)
    if "final round" in low or "last round" in low:
        return True
    if re.search(rf"\bround\s+{rounds}\b", low):
        return True
    ordinal = next((w for w, n in _ORDINALS.items() if n == rounds), None)
    return ordinal is not None and f"{ordinal} round" in low


def _parse_receiver_text(text: str, config: GameConfig) -> ReceiverStrategy:
    threshold: Money | None = None
    round_thresholds: dict[int, Money] = {}
    final_rule: FinalRoundRule | None = None
    for clause in _split_clauses(text):
        low = clause.lower()
        amounts = extract_amounts(clause)
        vals = [a.cents for a in amounts]
        if _is_final_round_clause(low, config.rounds):
            if final_rule is None:
                if re.search(r"accept\w*[^.;]{0,40}\bany\w*\b", low) or "anything" in low:
                    final_rule = FinalRoundRule.ACCEPT_ANY_NONZERO
                elif re.search(r"\b(keep|maintain|hold|stick|same)\b", low) and "threshold" in low:
                    final_rule = FinalRoundRule.KEEP_THRESHOLD
            if vals and config.rounds not in round_thresholds:
                t = _threshold_value(low, vals, config.pot)
                if t is not None:
                    round_thresholds[config.rounds] = t
            continue
        t = _threshold_value(low, vals, config.pot)
        if t is None:
            continue
        scope = _round_scope(low, config.rounds)
        if scope is None:
            if threshold is None:
                threshold = t
        else:
            for r in scope:
                round_thresholds.setdefault(r, t)
    return ReceiverStrategy(
        threshold=threshold, round_thresholds=round_thresholds, final_round_rule=final_rule
    )


def parse_strategy_text(
    text: str, role: Role, config: GameConfig | None = None
) -> ProposerStrategy | ReceiverStrategy:
    """Map free-text strategy prose onto structured fields.

    Clause-level: each sentence or bullet is classified independently
    (opening offer, accept branch, reject branch, cut-off, threshold,
    final-round rule), so reordering clauses never changes the result.
    Unrecognized clauses are ignored; fields they would have filled stay
    absent and surface later as completeness gaps.
    """
    config = config if config is not None else GameConfig()
    if role is Role.PROPOSER:
        return _parse_proposer_text(text)
    return _parse_receiver_text(text, config)


# ---------------------------------------------------------------------------
# Reply extraction (single agent utterances)
# ---------------------------------------------------------------------------


def extract_offer_reply(text: str) -> Money | None:
    """The offer stated in one agent reply, or None if there is none."""
    amount, _, _ = _extract_offer(text)
    return amount


def extract_decision_reply(text: str) -> Decision | None:
    """The decision stated in one agent reply, or None if there is none."""
    decision, _, _ = _extract_decision(text)
    return decision


# ---------------------------------------------------------------------------
# Single combined log
# ---------------------------------------------------------------------------


def _strategy_marker_blocks(pre: str) -> dict[Role, str]:
    """STRATEGY (Proposer): ... blocks from the pre-round text."""
    blocks: dict[Role, str] = {}
    lines = pre.split("\n")
    current: Role | None = None
    buf: list[str] = []
    for line in lines:
        m = _STRATEGY_MARKER_RE.match(line)
        if m:
            if current is not None and current not in blocks:
                blocks[current] = "\n".join(buf).strip()
            current = Role(m.group("role").lower())
            buf = [m.group("rest")]
            continue
        if current is not None:
            if _is_marker_line(line):
                blocks[current] = "\n".join(buf).strip()
                current = None
                buf = []
            else:
                buf.append(line)
    if current is not None and current not in blocks:
        blocks[current] = "\n".join(buf).strip()
    return blocks


_SECTION_WORD_RE = re.compile(r"\b(proposer|receiver)\b", re.IGNORECASE)


def _player_sections(pre: str) -> tuple[str, str]:
    """Heuristic split of the pre-round text into proposer/receiver parts.

    Heading lines that name a player together with "strategy" ("Proposer
    Strategy:", "Strategy of the receiver") take precedence; otherwise the
    first mention of each player word starts its section.
    """
    headings: dict[str, int] = {}
    offset = 0
    for line in pre.split("\n"):
        if re.search(r"strateg", line, re.IGNORECASE):
            m = _SECTION_WORD_RE.search(line)
            if m:
                headings.setdefault(m.group(1).lower(), offset)
        offset += len(line) + 1
    if len(headings) == 2:
        prop, recv = headings["proposer"], headings["receiver"]
    else:
        low = pre.lower()
        prop = low.find("proposer")
        recv = low.find("receiver")
        if prop < 0 or recv < 0:
            missing = "proposer" if prop < 0 else "receiver"
            raise UnparseableLogError(f"{missing} strategy section not found")
    if prop < recv:
        return pre[prop:recv], pre[recv:]
    return pre[prop:], pre[recv:prop]


def parse_single_model_log(
    text: str, pair: PersonalityPair, config: GameConfig | None = None
) -> tuple[Transcript, ParseDiagnostics]:
    """Parse one combined log holding both strategies and all rounds.

    Raises UnparseableLogError naming the first thing that could not be
    recovered (missing strategy section, missing round, unreadable offer
    or decision, offer outside the pot).
    """
    config = config if config is not None else GameConfig()
    warnings: list[str] = []
    exact = True

    chain = _round_chain(text, config.rounds)
    if len(chain) < config.rounds:
        raise UnparseableLogError(
            f"found {len(chain)} of {config.rounds} round sections"
        )
    pre, segments = _segments(text, chain)

    blocks = _strategy_marker_blocks(pre)
    if Role.PROPOSER in blocks and Role.RECEIVER in blocks:
        prop_text, recv_text = blocks[Role.PROPOSER], blocks[Role.RECEIVER]
    else:
        exact = False
        prop_text, recv_text = _player_sections(pre)

    actions: list[tuple[Money, Decision]] = []
    for n, segment in enumerate(segments, start=1):
        offer, from_marker, w = _extract_offer(segment)
        warnings.extend(w)
        if offer is None:
            raise UnparseableLogError(f"round {n}: no offer found")
        if not 0 <= offer <= config.pot:
            raise UnparseableLogError(
                f"round {n}: offer {offer} outside [0, {config.pot}]"
            )
        exact = exact and from_marker
        decision, from_marker, w = _extract_decision(segment)
        warnings.extend(w)
        if decision is None:
            raise UnparseableLogError(f"round {n}: no decision found")
        exact = exact and from_marker
        actions.append((offer, decision))
        warnings.extend(_check_payoffs(segment, offer, decision, config.pot, n))

    _, outcomes = engine.replay(config, actions)
    strategies = (
        StrategySpec(Role.PROPOSER, prop_text.strip(), parse_strategy_text(prop_text, Role.PROPOSER, config)),
        StrategySpec(Role.RECEIVER, recv_text.strip(), parse_strategy_text(recv_text, Role.RECEIVER, config)),
    )
    transcript = Transcript(
        config=config,
        pair=pair,
        structure=Structure.SINGLE_MODEL,
        strategies=strategies,
        rounds=tuple(outcomes),
        raw_logs=(("single_model", text),),
    )
    confidence = Confidence.EXACT if exact else Confidence.HEURISTIC
    return transcript, ParseDiagnostics(confidence, tuple(warnings))


# ---------------------------------------------------------------------------
# Per-agent log pair
# ---------------------------------------------------------------------------


def _agent_strategy_text(pre: str, who: str) -> tuple[str, bool]:
    """The agent's own strategy from its pre-round text: (text, from_marker)."""
    lines = pre.split("\n")
    buf: list[str] = []
    collecting = False
    for line in lines:
        m = _BRACKET_LABEL_RE.match(line)
        if m:
            if m.group("label").strip().lower() == "strategy":
                collecting = True
                buf.append(m.group("rest"))
            elif collecting:
                break
            continue
        if collecting:
            buf.append(line)
    if buf:
        return "\n".join(buf).strip(), True
    # No [Strategy] label: keep everything except architecture chatter.
    kept = [
        ln
        for ln in lines
        if not _BRACKET_LABEL_RE.match(ln) or _BRACKET_LABEL_RE.match(ln).group("rest")
    ]
    text = "\n".join(
        _BRACKET_LABEL_RE.match(ln).group("rest") if _BRACKET_LABEL_RE.match(ln) else ln
        for ln in kept
        if not (_BRACKET_LABEL_RE.match(ln) and _BRACKET_LABEL_RE.match(ln).group("label").strip().lower() == "plan")
    ).strip()
    if not text:
        raise UnparseableLogError(f"{who} log: strategy section not found")
    return text, False


def parse_agent_log(
    logs: tuple[str, str], pair: PersonalityPair, config: GameConfig | None = None
) -> tuple[Transcript, ParseDiagnostics]:
    """Parse a (proposer log, receiver log) pair into one transcript.

    Each agent's strategy is taken from its own log only. Offers and
    decisions are aligned across the two logs by round; any disagreement
    about a shared fact (round count, an amount, a decision) raises
    InconsistentLogsError.
    """
    config = config if config is not None else GameConfig()
    prop_log, recv_log = logs
    warnings: list[str] = []
    exact = True

    prop_chain = _round_chain(prop_log, config.rounds)
    recv_chain = _round_chain(recv_log, config.rounds)
    if len(prop_chain) != len(recv_chain):
        raise InconsistentLogsError(
            f"proposer log has {len(prop_chain)} round sections, receiver log has {len(recv_chain)}"
        )
    if len(prop_chain) < config.rounds:
        raise UnparseableLogError(
            f"found {len(prop_chain)} of {config.rounds} round sections"
        )
    prop_pre, prop_segs = _segments(prop_log, prop_chain)
    recv_pre, recv_segs = _segments(recv_log, recv_chain)

    actions: list[tuple[Money, Decision]] = []
    for n in range(1, config.rounds + 1):
        p_seg, r_seg = prop_segs[n - 1], recv_segs[n - 1]
        p_offer, p_mk, w1 = _extract_offer(p_seg)
        r_offer, r_mk, w2 = _extract_offer(r_seg)
        warnings.extend(w1 + w2)
        if p_offer is None and r_offer is None:
            raise UnparseableLogError(f"round {n}: no offer found in either log")
        if p_offer is not None and r_offer is not None and p_offer != r_offer:
            raise InconsistentLogsError(
                f"round {n}: logs disagree on the offer ({p_offer} vs {r_offer})"
            )
        if (p_offer is None) != (r_offer is None):
            warnings.append(f"round {n}: offer appears in only one log")
        offer = p_offer if p_offer is not None else r_offer
        assert offer is not None
        if not 0 <= offer <= config.pot:
            raise UnparseableLogError(
                f"round {n}: offer {offer} outside [0, {config.pot}]"
            )
        exact = exact and (p_mk or r_mk)

        p_dec, p_mk, w1 = _extract_decision(p_seg)
        r_dec, r_mk, w2 = _extract_decision(r_seg)
        warnings.extend(w1 + w2)
        if p_dec is None and r_dec is None:
            raise UnparseableLogError(f"round {n}: no decision found in either log")
        if p_dec is not None and r_dec is not None and p_dec is not r_dec:
            raise InconsistentLogsError(
                f"round {n}: logs disagree on the decision ({p_dec.value} vs {r_dec.value})"
            )
        if (p_dec is None) != (r_dec is None):
            warnings.append(f"round {n}: decision appears in only one log")
        decision = r_dec if r_dec is not None else p_dec
        assert decision is not None
        exact = exact and (r_mk or p_mk)
        actions.append((offer, decision))
        warnings.extend(_check_payoffs(p_seg, offer, decision, config.pot, n))

    prop_text, p_mk = _agent_strategy_text(prop_pre, "proposer")
    recv_text, r_mk = _agent_strategy_text(recv_pre, "receiver")
    exact = exact and p_mk and r_mk

    _, outcomes = engine.replay(config, actions)
    strategies = (
        StrategySpec(Role.PROPOSER, prop_text, parse_strategy_text(prop_text, Role.PROPOSER, config)),
        StrategySpec(Role.RECEIVER, recv_text, parse_strategy_text(recv_text, Role.RECEIVER, config)),
    )
    transcript = Transcript(
        config=config,
        pair=pair,
        structure=Structure.MULTI_AGENT,
        strategies=strategies,
        rounds=tuple(outcomes),
        raw_logs=(("proposer", prop_log), ("receiver", recv_log)),
    )
    confidence = Confidence.EXACT if exact else Confidence.HEURISTIC
    return transcript, ParseDiagnostics(confidence, tuple(warnings))


# ---------------------------------------------------------------------------
# Canonical format (v1)
# ---------------------------------------------------------------------------

CANONICAL_TAG = "ultimatum-transcript"
CANONICAL_VERSION = "v1"

_DECODER = json.JSONDecoder()


def _adjust_to_json(rule: AdjustRule | None):
    if rule is None:
        return None
    return {"kind": rule.kind.value, "amount": rule.amount}


def _adjust_from_json(obj) -> AdjustRule | None:
    if obj is None:
        return None
    return AdjustRule(AdjustKind(obj["kind"]), obj.get("amount"))


def _fields_to_json(spec: StrategySpec) -> dict:
    if spec.role is Role.PROPOSER:
        plan = spec.parsed
        assert isinstance(plan, ProposerStrategy)
        return {
            "initial_offer": plan.initial_offer,
            "on_accept": _adjust_to_json(plan.on_accept),
            "on_reject": _adjust_to_json(plan.on_reject),
            "cutoff": None if plan.cutoff is None else {"limit": plan.cutoff.limit},
        }
    plan = spec.parsed
    assert isinstance(plan, ReceiverStrategy)
    return {
        "threshold": plan.threshold,
        "round_thresholds": {str(k): v for k, v in sorted(plan.round_thresholds.items())},
        "final_round_rule": None if plan.final_round_rule is None else plan.final_round_rule.value,
    }


def _fields_from_json(role: Role, obj: dict):
    try:
        if role is Role.PROPOSER:
            cutoff = obj["cutoff"]
            return ProposerStrategy(
                initial_offer=obj["initial_offer"],
                on_accept=_adjust_from_json(obj["on_accept"]),
                on_reject=_adjust_from_json(obj["on_reject"]),
                cutoff=None if cutoff is None else CutoffRule(limit=cutoff.get("limit")),
            )
        rule = obj["final_round_rule"]
        return ReceiverStrategy(
            threshold=obj["threshold"],
            round_thresholds={int(k): v for k, v in obj["round_thresholds"].items()},
            final_round_rule=None if rule is None else FinalRoundRule(rule),
        )
    except (KeyError, ValueError, TypeError, AttributeError) as exc:
        raise MalformedRecordError(f"bad strategy fields: {exc}") from None


def serialize_canonical(transcript: Transcript) -> str:
    """Render a transcript in the canonical v1 line format.

    Deterministic: the same transcript always yields identical bytes. All
    strings are JSON-escaped to ASCII so every record stays on one line.
    """
    cfg = transcript.config
    lines = [
        f"{CANONICAL_TAG} {CANONICAL_VERSION} pot={cfg.pot} rounds={cfg.rounds} "
        f"pair={transcript.pair.label()} structure={transcript.structure.value}"
    ]
    for spec in transcript.strategies:
        fields = json.dumps(_fields_to_json(spec), sort_keys=True, separators=(",", ":"))
        lines.append(f"strategy {spec.role.value} {fields} {json.dumps(spec.raw_text)}")
    for o in transcript.rounds:
        lines.append(
            f"round {o.round} offer={o.offer} decision={o.decision.value} "
            f"payoffs={o.proposer_payoff}/{o.receiver_payoff}"
        )
    for label, text in transcript.raw_logs:
        lines.append(f"rawlog {json.dumps(label)} {json.dumps(text)}")
    return "\n".join(lines) + "\n"


def _parse_kv(token: str, key: str) -> str:
    if not token.startswith(key + "="):
        raise MalformedRecordError(f"expected {key}=..., got {token!r}")
    return token[len(key) + 1 :]


def _read_json_pair(rest: str) -> tuple[object, object]:
    try:
        first, idx = _DECODER.raw_decode(rest)
        second, end = _DECODER.raw_decode(rest[idx:].lstrip(), 0)
        trailing = rest[idx:].lstrip()[end:].strip()
    except json.JSONDecodeError as exc:
        raise MalformedRecordError(f"bad JSON payload: {exc}") from None
    if trailing:
        raise MalformedRecordError(f"trailing data after record: {trailing!r}")
    return first, second


def parse_canonical(text: str) -> Transcript:
    """Parse canonical v1 text back into a Transcript.

    Raises SchemaVersionError for an unknown version tag and
    MalformedRecordError for any structural violation (field order, round
    numbering, payoffs that do not match the decision).
    """
    if not text.endswith("\n"):
        raise MalformedRecordError("canonical text must end with a newline")
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise MalformedRecordError("empty transcript text")
    header = lines[0].split(" ")
    if len(header) != 6 or header[0] != CANONICAL_TAG:
        raise MalformedRecordError(f"bad header line: {lines[0]!r}")
    if header[1] != CANONICAL_VERSION:
        raise SchemaVersionError(f"unsupported transcript version {header[1]!r}")
    try:
        config = GameConfig(
            pot=int(_parse_kv(header[2], "pot")), rounds=int(_parse_kv(header[3], "rounds"))
        )
        pair = PersonalityPair.from_label(_parse_kv(header[4], "pair"))
        structure = Structure(_parse_kv(header[5], "structure"))
    except (ValueError, engine.InvalidConfigError) as exc:
        raise MalformedRecordError(f"bad header values: {exc}") from None

    strategies: list[StrategySpec] = []
    rounds: list[RoundOutcome] = []
    raw_logs: list[tuple[str, str]] = []
    for line in lines[1:]:
        kind, _, rest = line.partition(" ")
        if kind == "strategy":
            role_token, _, payload = rest.partition(" ")
            try:
                role = Role(role_token)
            except ValueError:
                raise MalformedRecordError(f"bad strategy role {role_token!r}") from None
            fields, raw_text = _read_json_pair(payload)
            if not isinstance(fields, dict) or not isinstance(raw_text, str):
                raise MalformedRecordError("strategy line must hold fields object and raw text")
            if rounds or raw_logs:
                raise MalformedRecordError("strategy lines must precede round lines")
            strategies.append(StrategySpec(role, raw_text, _fields_from_json(role, fields)))
        elif kind == "round":
            tokens = rest.split(" ")
            if len(tokens) != 4:
                raise MalformedRecordError(f"bad round line: {line!r}")
            try:
                number = int(tokens[0])
                offer = int(_parse_kv(tokens[1], "offer"))
                decision = Decision(_parse_kv(tokens[2], "decision"))
                prop_pay, _, recv_pay = _parse_kv(tokens[3], "payoffs").partition("/")
                payoffs = (int(prop_pay), int(recv_pay))
            except ValueError as exc:
                raise MalformedRecordError(f"bad round line: {exc}") from None
            if number != len(rounds) + 1 or number > config.rounds:
                raise MalformedRecordError(f"round {number} out of sequence")
            if not 0 <= offer <= config.pot:
                raise MalformedRecordError(f"round {number}: offer {offer} outside pot")
            expected = (config.pot - offer, offer) if decision is Decision.ACCEPT else (0, 0)
            if payoffs != expected:
                raise MalformedRecordError(
                    f"round {number}: payoffs {payoffs} inconsistent with {decision.value}"
                )
            rounds.append(RoundOutcome(number, offer, decision, *payoffs))
        elif kind == "rawlog":
            label, logtext = _read_json_pair(rest)
            if not isinstance(label, str) or not isinstance(logtext, str):
                raise MalformedRecordError("rawlog line must hold two strings")
            raw_logs.append((label, logtext))
        else:
            raise MalformedRecordError(f"unknown record kind {kind!r}")

    if len(strategies) != 2 or strategies[0].role is not Role.PROPOSER or strategies[1].role is not Role.RECEIVER:
        raise MalformedRecordError("expected proposer then receiver strategy lines")
    if len(rounds) != config.rounds:
        raise MalformedRecordError(f"expected {config.rounds} rounds, got {len(rounds)}")
    return Transcript(
        config=config,
        pair=pair,
        structure=structure,
        strategies=(strategies[0], strategies[1]),
        rounds=tuple(rounds),
        raw_logs=tuple(raw_logs),
    )
