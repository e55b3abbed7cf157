import dataclasses
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import ACC, REJ, build_transcript, full_corpus, load_corpus_cases, oracle_text
from ultimatum.engine import Decision, GameConfig
from ultimatum.strategy import (
    ALL_PAIRS,
    AdjustKind,
    AdjustRule,
    FinalRoundRule,
    PersonalityPair,
    ProposerStrategy,
    ReceiverStrategy,
    Role,
)
from ultimatum.transcripts import (
    Confidence,
    InconsistentLogsError,
    MalformedRecordError,
    SchemaVersionError,
    Structure,
    UnparseableLogError,
    extract_amounts,
    extract_decision_reply,
    extract_offer_reply,
    parse_agent_log,
    parse_canonical,
    parse_single_model_log,
    parse_strategy_text,
    serialize_canonical,
)

CONFIG = GameConfig()
FAIR_FAIR = PersonalityPair.from_label("fair-fair")


class TestAmounts:
    @pytest.mark.parametrize(
        "text,cents",
        [
            ("$0.50", 50),
            ("$.50", 50),
            ("$1", 100),
            ("$1.25", 125),
            ("$1.5", 150),
            ("50 cents", 50),
            ("5 cents", 5),
            ("$0.05", 5),
        ],
    )
    def test_single_amount_forms(self, text, cents):
        amounts = extract_amounts(f"I will offer {text} now")
        assert [a.cents for a in amounts] == [cents]

    def test_amounts_keep_document_order(self):
        amounts = extract_amounts("raise from $0.20 to 35 cents, not $1")
        assert [a.cents for a in amounts] == [20, 35, 100]

    def test_plain_numbers_are_not_amounts(self):
        assert extract_amounts("round 3 of 5") == []


class TestReplyExtraction:
    def test_offer_reply_marker(self):
        assert extract_offer_reply("OFFER: $0.40") == 40

    def test_offer_reply_prose(self):
        assert extract_offer_reply("I offer $0.40 this round.") == 40

    def test_offer_reply_missing(self):
        assert extract_offer_reply("Let me think about it.") is None

    @pytest.mark.parametrize(
        "text,decision",
        [
            ("DECISION: accept", Decision.ACCEPT),
            ("DECISION: reject", Decision.REJECT),
            ("I accept the offer.", Decision.ACCEPT),
            ("I must decline.", Decision.REJECT),
            ("I will not accept this.", Decision.REJECT),
            ("I don't reject it.", Decision.ACCEPT),
        ],
    )
    def test_decision_replies(self, text, decision):
        assert extract_decision_reply(text) is decision

    def test_conditional_mentions_are_not_decisions(self):
        assert extract_decision_reply("If I reject, we both get nothing.") is None


def single_model_log(offers, decisions, pot=100):
    lines = [
        "STRATEGY (Proposer): I will offer $0.50 in the first round. "
        "If an offer is rejected, I will increase the offer by $0.05 in the next round. "
        "If an offer is accepted, I will keep the offer the same.",
        "STRATEGY (Receiver): I will accept offers of $0.40 or more in every round.",
    ]
    for n, (offer, decision) in enumerate(zip(offers, decisions), start=1):
        lines.append(f"ROUND {n}")
        lines.append(f"OFFER: {offer} cents")
        lines.append(f"DECISION: {decision.value}")
    return "\n".join(lines)


class TestSingleModelParsing:
    def test_marker_log_parses_exact(self):
        text = single_model_log([50, 50, 50, 50, 50], [ACC] * 5)
        transcript, diag = parse_single_model_log(text, FAIR_FAIR)
        assert diag.confidence is Confidence.EXACT
        assert [o.offer for o in transcript.rounds] == [50] * 5
        assert all(o.decision is ACC for o in transcript.rounds)
        assert transcript.raw_logs == (("single_model", text),)

    def test_round_count_must_match_the_config(self):
        text = single_model_log([50, 50], [ACC, ACC])
        with pytest.raises(UnparseableLogError):
            parse_single_model_log(text, FAIR_FAIR)

    def test_rounds_are_never_invented(self):
        text = single_model_log([50, 50], [ACC, ACC])
        transcript, _ = parse_single_model_log(text, FAIR_FAIR, GameConfig(rounds=2))
        assert len(transcript.rounds) == 2

    def test_offer_beyond_the_pot_is_an_error(self):
        text = single_model_log([150, 50], [ACC, ACC])
        with pytest.raises(UnparseableLogError):
            parse_single_model_log(text, FAIR_FAIR, GameConfig(rounds=2))

    def test_round_numbers_out_of_order_use_the_chain(self):
        # A stray "round 3" mention inside narration must not displace the
        # true heading sequence 1..5.
        text = single_model_log([50, 50, 50, 50, 50], [ACC] * 5)
        text = text.replace(
            "DECISION: accept\nROUND 5",
            "DECISION: accept\nThe receiver recalls round 3 fondly.\nROUND 5",
        )
        transcript, _ = parse_single_model_log(text, FAIR_FAIR)
        assert [o.round for o in transcript.rounds] == [1, 2, 3, 4, 5]

    def test_stray_round_heading_after_the_chain_is_dropped(self):
        # A sentence-initial "Round 3 ..." in closing narration looks like a
        # heading; the chain must still be the ascending run 1..5.
        text = single_model_log([50, 50, 50, 50, 50], [ACC] * 5)
        text += "\nRound 3 was the turning point, the receiver thought."
        transcript, _ = parse_single_model_log(text, FAIR_FAIR)
        assert [o.round for o in transcript.rounds] == [1, 2, 3, 4, 5]
        assert [o.offer for o in transcript.rounds] == [50] * 5

    def test_missing_decision_is_an_error(self):
        text = single_model_log([50, 50, 50, 50, 50], [ACC] * 5)
        text = text.replace("DECISION: accept\nROUND 2", "ROUND 2")
        with pytest.raises(UnparseableLogError):
            parse_single_model_log(text, FAIR_FAIR)


def agent_logs(offers, decisions):
    prop = ["[Strategy] I will offer $0.50 in the first round. "
            "If an offer is rejected, I will increase the offer by $0.05. "
            "If an offer is accepted, I will keep the offer the same."]
    recv = ["[Strategy] I will accept offers of $0.40 or more in every round."]
    for n, (offer, decision) in enumerate(zip(offers, decisions), start=1):
        prop.append(f"[Round {n}]")
        prop.append(f"[Say] OFFER: {offer} cents")
        prop.append(f"[Hear] DECISION: {decision.value}")
        recv.append(f"[Round {n}]")
        recv.append(f"[Hear] OFFER: {offer} cents")
        recv.append(f"[Say] DECISION: {decision.value}")
    return "\n".join(prop), "\n".join(recv)


class TestAgentLogParsing:
    def test_matching_logs_parse_exact(self):
        prop, recv = agent_logs([50, 45, 45, 45, 45], [REJ, ACC, ACC, ACC, ACC])
        transcript, diag = parse_agent_log((prop, recv), FAIR_FAIR)
        assert diag.confidence is Confidence.EXACT
        assert [o.offer for o in transcript.rounds] == [50, 45, 45, 45, 45]
        assert transcript.structure is Structure.MULTI_AGENT
        assert transcript.raw_logs == (("proposer", prop), ("receiver", recv))

    def test_disagreeing_offers_raise(self):
        prop, recv = agent_logs([50] * 5, [ACC] * 5)
        recv = recv.replace("OFFER: 50 cents", "OFFER: 60 cents", 1)
        with pytest.raises(InconsistentLogsError):
            parse_agent_log((prop, recv), FAIR_FAIR)

    def test_disagreeing_decisions_raise(self):
        prop, recv = agent_logs([50] * 5, [ACC] * 5)
        recv = recv.replace("DECISION: accept", "DECISION: reject", 1)
        with pytest.raises(InconsistentLogsError):
            parse_agent_log((prop, recv), FAIR_FAIR)

    def test_one_sided_values_parse_with_a_warning(self):
        prop, recv = agent_logs([50] * 5, [ACC] * 5)
        prop = prop.replace("[Hear] DECISION: accept", "[Hear] The receiver nodded.", 1)
        transcript, diag = parse_agent_log((prop, recv), FAIR_FAIR)
        assert [o.decision for o in transcript.rounds] == [ACC] * 5
        assert any("decision appears in only one log" in w for w in diag.warnings)


class TestStrategyTextParsing:
    @pytest.mark.parametrize("pair", ALL_PAIRS, ids=lambda p: p.label())
    def test_oracle_texts_round_trip(self, pair):
        from ultimatum.agents import oracle_strategy

        for role, personality in ((Role.PROPOSER, pair.proposer), (Role.RECEIVER, pair.receiver)):
            raw, parsed = oracle_strategy(role, personality, CONFIG)
            assert parse_strategy_text(raw, role, CONFIG) == parsed

    @given(
        st.permutations(
            [
                "I will offer $0.50 in the first round.",
                "If an offer is accepted, I will keep the offer the same in the next round.",
                "If an offer is rejected, I will increase the offer by $0.05 in the next round.",
            ]
        )
    )
    def test_proposer_clause_order_is_irrelevant(self, sentences):
        parsed = parse_strategy_text(" ".join(sentences), Role.PROPOSER, CONFIG)
        assert parsed == ProposerStrategy(
            initial_offer=50,
            on_accept=AdjustRule(AdjustKind.KEEP),
            on_reject=AdjustRule(AdjustKind.INCREASE_BY, 5),
        )

    @given(
        st.permutations(
            [
                "I will only accept offers of at least $0.40 in rounds 1 through 4.",
                "In the final round, I will accept any non-zero offer.",
            ]
        )
    )
    def test_receiver_clause_order_is_irrelevant(self, sentences):
        parsed = parse_strategy_text(" ".join(sentences), Role.RECEIVER, CONFIG)
        assert parsed == ReceiverStrategy(
            round_thresholds={1: 40, 2: 40, 3: 40, 4: 40},
            final_round_rule=FinalRoundRule.ACCEPT_ANY_NONZERO,
        )

    @pytest.mark.parametrize(
        "text,expected",
        [
            ("I will reject any offer.", ReceiverStrategy(threshold=CONFIG.pot + 1)),
            ("I will accept any offer above $0.30.", ReceiverStrategy(threshold=31)),
            ("I will accept $0.30 or more.", ReceiverStrategy(threshold=30)),
            ("I will reject anything below $0.35.", ReceiverStrategy(threshold=35)),
        ],
    )
    def test_receiver_threshold_wordings(self, text, expected):
        assert parse_strategy_text(text, Role.RECEIVER, CONFIG) == expected

    def test_open_adjustment_has_no_amount(self):
        text = (
            "I will offer $0.50 first. If the offer is accepted, I may lower it a little. "
            "If the offer is rejected, I will increase the offer by $0.05."
        )
        parsed = parse_strategy_text(text, Role.PROPOSER, CONFIG)
        assert parsed.on_accept == AdjustRule(AdjustKind.DECREASE_BY)
        assert parsed.on_reject == AdjustRule(AdjustKind.INCREASE_BY, 5)

    def test_cutoff_of_unstated_size(self):
        text = (
            "I will offer $0.10 first. If the offer is rejected, I will increase the offer by $0.05. "
            "There is a cut-off point past which raising is not worth it."
        )
        parsed = parse_strategy_text(text, Role.PROPOSER, CONFIG)
        assert parsed.cutoff is not None
        assert parsed.cutoff.limit is None


class TestCorpus:
    @pytest.mark.parametrize("case", load_corpus_cases(), ids=lambda c: c["name"])
    def test_hand_written_cases_recover_the_game(self, case):
        self._check(case)

    @pytest.mark.parametrize("case", full_corpus()[len(load_corpus_cases()):], ids=lambda c: c["name"])
    def test_generated_cases_recover_the_game(self, case):
        self._check(case)

    @staticmethod
    def _check(case):
        config = GameConfig(pot=case["pot"], rounds=case["rounds"])
        pair = PersonalityPair.from_label(case["pair"])
        if "single" in case["texts"]:
            transcript, diag = parse_single_model_log(case["texts"]["single"], pair, config)
        else:
            transcript, diag = parse_agent_log(
                (case["texts"]["proposer"], case["texts"]["receiver"]), pair, config
            )
        assert [o.offer for o in transcript.rounds] == case["offers"]
        assert [o.decision.value for o in transcript.rounds] == case["decisions"]
        assert len(transcript.rounds) == case["rounds"]
        assert diag.confidence.value == case["confidence"]
        for needle in case["warnings_contain"]:
            assert any(needle in w for w in diag.warnings), diag.warnings


@st.composite
def random_transcripts(draw):
    pot = draw(st.integers(min_value=1, max_value=300))
    rounds = draw(st.integers(min_value=1, max_value=7))
    offers = [draw(st.integers(min_value=0, max_value=pot)) for _ in range(rounds)]
    decisions = [draw(st.sampled_from(Decision)) for _ in range(rounds)]
    pair = draw(st.sampled_from(ALL_PAIRS))
    structure = draw(st.sampled_from(Structure))
    transcript = build_transcript(
        offers, decisions, pair=pair, pot=pot, structure=structure
    )
    label = "single_model" if structure is Structure.SINGLE_MODEL else "proposer"
    raw = draw(
        st.text(
            alphabet=st.characters(blacklist_categories=("Cs",)),
            max_size=80,
        )
    )
    return dataclasses.replace(transcript, raw_logs=((label, raw),))


class TestCanonicalFormat:
    def test_round_trip_is_byte_stable(self):
        transcript = build_transcript([50, 55, 55, 55, 55], [REJ, ACC, ACC, ACC, ACC])
        text = serialize_canonical(transcript)
        parsed = parse_canonical(text)
        assert parsed == transcript
        assert serialize_canonical(parsed) == text

    def test_serialized_form_is_ascii_lines(self):
        transcript = build_transcript([50], [ACC])
        transcript = dataclasses.replace(transcript, raw_logs=(("single_model", "café\nline2"),))
        text = serialize_canonical(transcript)
        assert text.isascii()
        assert text.endswith("\n")
        assert "café" not in text  # escaped, not raw

    @given(random_transcripts())
    def test_random_round_trips(self, transcript):
        text = serialize_canonical(transcript)
        parsed = parse_canonical(text)
        assert parsed == transcript
        assert serialize_canonical(parsed) == text

    def test_unknown_version_is_rejected(self):
        text = serialize_canonical(build_transcript([50], [ACC]))
        with pytest.raises(SchemaVersionError):
            parse_canonical(text.replace("ultimatum-transcript v1", "ultimatum-transcript v2", 1))

    def test_unknown_tag_is_rejected(self):
        text = serialize_canonical(build_transcript([50], [ACC]))
        with pytest.raises(MalformedRecordError):
            parse_canonical(text.replace("ultimatum-transcript", "other-transcript", 1))

    @pytest.mark.parametrize(
        "mutate",
        [
            lambda s: s.replace("payoffs=50/50", "payoffs=49/51", 1),
            lambda s: s.replace("round 1 ", "round 2 ", 1),
            lambda s: s.rstrip("\n"),
            lambda s: s + "junk\n",
            lambda s: s.replace("strategy proposer", "strategy receiver", 1),
        ],
        ids=["payoff-lie", "round-gap", "missing-newline", "trailing-junk", "role-swap"],
    )
    def test_tampered_records_are_rejected(self, mutate):
        transcript = build_transcript([50, 50, 50, 50, 50], [ACC] * 5)
        text = serialize_canonical(transcript)
        with pytest.raises(MalformedRecordError):
            parse_canonical(mutate(text))

    def test_plain_random_round_trips(self):
        rng = random.Random(5)
        for _ in range(50):
            rounds = rng.randint(1, 6)
            pot = rng.randint(1, 200)
            offers = [rng.randint(0, pot) for _ in range(rounds)]
            decisions = [rng.choice([ACC, REJ]) for _ in range(rounds)]
            transcript = build_transcript(offers, decisions, pot=pot)
            text = serialize_canonical(transcript)
            assert parse_canonical(text) == transcript
