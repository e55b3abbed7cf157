"""Shared builders for the test suite."""

from __future__ import annotations

import json
import pathlib
import random

from ultimatum import engine
from ultimatum.agents import oracle_strategy
from ultimatum.engine import Decision, GameConfig
from ultimatum.strategy import Personality, PersonalityPair, Role, StrategySpec
from ultimatum.transcripts import Structure, Transcript, parse_strategy_text

FIXTURES = pathlib.Path(__file__).parent / "fixtures"
CORPUS = FIXTURES / "corpus"

ACC = Decision.ACCEPT
REJ = Decision.REJECT


def oracle_text(role: Role, personality: Personality, pot: int = 100, rounds: int = 5) -> str:
    raw, _ = oracle_strategy(role, personality, GameConfig(pot=pot, rounds=rounds))
    return raw


def build_transcript(
    offers,
    decisions,
    pair="fair-fair",
    proposer_text: str | None = None,
    receiver_text: str | None = None,
    pot: int = 100,
    rounds: int | None = None,
    structure: Structure = Structure.SINGLE_MODEL,
) -> Transcript:
    """A Transcript from explicit actions, with strategies parsed from text.

    Defaults to the oracle strategy texts for the pair, so a test only
    spells out the parts it is exercising.
    """
    if isinstance(pair, str):
        pair = PersonalityPair.from_label(pair)
    config = GameConfig(pot=pot, rounds=rounds if rounds is not None else len(offers))
    if proposer_text is None:
        proposer_text = oracle_text(Role.PROPOSER, pair.proposer, config.pot, config.rounds)
    if receiver_text is None:
        receiver_text = oracle_text(Role.RECEIVER, pair.receiver, config.pot, config.rounds)
    _, outcomes = engine.replay(config, list(zip(offers, decisions)))
    strategies = (
        StrategySpec(Role.PROPOSER, proposer_text, parse_strategy_text(proposer_text, Role.PROPOSER, config)),
        StrategySpec(Role.RECEIVER, receiver_text, parse_strategy_text(receiver_text, Role.RECEIVER, config)),
    )
    return Transcript(
        config=config,
        pair=pair,
        structure=structure,
        strategies=strategies,
        rounds=tuple(outcomes),
    )


def load_corpus_cases() -> list[dict]:
    """The hand-written messy-log cases, sidecar fields plus file contents."""
    cases = []
    for sidecar in sorted(CORPUS.glob("*.json")):
        meta = json.loads(sidecar.read_text())
        texts = {
            slot: (CORPUS / name).read_text() for slot, name in meta["files"].items()
        }
        meta["texts"] = texts
        meta["name"] = sidecar.stem
        cases.append(meta)
    return cases


# ---------------------------------------------------------------------------
# Generated messy logs
# ---------------------------------------------------------------------------

_GEN_HEADINGS = ("Round {n}:", "ROUND {n}", "**Round {n}**", "[Round {n}]", "round {n} -")
_GEN_OFFER_LINES = (
    ("OFFER: {amt}", True),
    ("The proposer offers {amt}.", False),
    ("The proposer proposes {amt} to the receiver.", False),
)
_GEN_ACCEPT_LINES = (
    ("DECISION: accept", True),
    ("The receiver accepts.", False),
    ("The receiver does not reject it.", False),
)
_GEN_REJECT_LINES = (
    ("DECISION: reject", True),
    ("The receiver rejects the offer.", False),
    ("The receiver does not accept.", False),
    ("Declined.", False),
)


def _amount_text(rng: random.Random, cents: int) -> str:
    forms = ["decimal"]
    if cents < 100:
        forms.append("cents")
    if cents % 100 == 0:
        forms.append("plain")
    form = rng.choice(forms)
    if form == "cents":
        return f"{cents} cents"
    if form == "plain":
        return f"${cents // 100}"
    return f"${cents / 100:.2f}"


def generate_corpus_case(rng: random.Random) -> dict:
    """A synthetic single-model log in a randomized style, with its answer key."""
    pot = 100
    rounds = rng.randint(3, 7)
    pair = rng.choice(["fair-fair", "fair-greedy", "greedy-fair", "greedy-greedy"])
    heading = rng.choice(_GEN_HEADINGS)
    offers = [rng.randint(1, pot - 1) for _ in range(rounds)]
    decisions = [rng.choice(["accept", "reject"]) for _ in range(rounds)]
    exact = True
    lines = [
        f"STRATEGY (Proposer): I will offer {_amount_text(rng, offers[0])} in the first round. "
        "If an offer is rejected, I will increase the offer by $0.05 in the next round. "
        "If an offer is accepted, I will keep the offer the same.",
        f"STRATEGY (Receiver): I will accept offers of {_amount_text(rng, 40)} or more in every round.",
        "",
    ]
    for n in range(1, rounds + 1):
        lines.append(heading.format(n=n))
        offer_tpl, offer_marker = rng.choice(_GEN_OFFER_LINES)
        lines.append(offer_tpl.format(amt=_amount_text(rng, offers[n - 1])))
        pool = _GEN_ACCEPT_LINES if decisions[n - 1] == "accept" else _GEN_REJECT_LINES
        decision_tpl, decision_marker = rng.choice(pool)
        lines.append(decision_tpl)
        lines.append("")
        exact = exact and offer_marker and decision_marker
    return {
        "name": f"generated-{rng.getrandbits(32):08x}",
        "structure": "single_model",
        "pair": pair,
        "pot": pot,
        "rounds": rounds,
        "texts": {"single": "\n".join(lines)},
        "offers": offers,
        "decisions": decisions,
        "confidence": "exact" if exact else "heuristic",
        "warnings_contain": [],
    }


def full_corpus(generated: int = 12, seed: int = 20260814) -> list[dict]:
    rng = random.Random(seed)
    return load_corpus_cases() + [generate_corpus_case(rng) for _ in range(generated)]
