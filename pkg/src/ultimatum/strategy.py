"""Structured player strategies and checks against them.

A strategy is the plan a player declares before the game starts. Proposer
plans name an opening offer plus an adjustment for each of the two things
that can happen to it (acceptance, rejection), optionally capped by a
cut-off the proposer will not concede past. Receiver plans are per-round
acceptance thresholds, optionally replaced in the final round by a
capitulation rule.

Three independent questions are asked of a strategy:

* completeness - does it prescribe a move for every reachable state?
* personality consistency - does its opening intent match the assigned
  personality (fair or greedy)?
* adherence - did the observed play follow it?

A strategy may be complete yet inconsistent, or consistent yet ignored in
play; the grading rubric combines these verdicts, this module only
computes them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Mapping, Sequence, Union

from .engine import Decision, GameConfig, Money, RoundOutcome

if TYPE_CHECKING:  # only for annotations; transcripts imports this module
    from .transcripts import Transcript


class Personality(enum.Enum):
    FAIR = "fair"
    GREEDY = "greedy"


class Role(enum.Enum):
    PROPOSER = "proposer"
    RECEIVER = "receiver"


@dataclass(frozen=True)
class PersonalityPair:
    """Assigned personalities for one game, proposer first."""

    proposer: Personality
    receiver: Personality

    def label(self) -> str:
        return f"{self.proposer.value}-{self.receiver.value}"

    @classmethod
    def from_label(cls, label: str) -> "PersonalityPair":
        try:
            p, r = label.lower().split("-")
            return cls(Personality(p), Personality(r))
        except ValueError:
            raise ValueError(f"bad personality pair label: {label!r}") from None


ALL_PAIRS = tuple(
    PersonalityPair(p, r) for p in Personality for r in Personality
)


class AdjustKind(enum.Enum):
    KEEP = "keep"
    INCREASE_BY = "increase_by"
    DECREASE_BY = "decrease_by"
    SET_TO = "set_to"


# When a plan says "increase the offer" without naming a step, any step in
# this range (cents, inclusive) counts as following the plan.
OPEN_STEP_RANGE: tuple[Money, Money] = (1, 15)


@dataclass(frozen=True)
class AdjustRule:
    """How the next offer relates to the previous one.

    amount is None for KEEP, and for INCREASE_BY/DECREASE_BY whose
    magnitude the plan left open ("raise the offer a little").
    """

    kind: AdjustKind
    amount: Money | None = None

    def __post_init__(self) -> None:
        if self.kind is AdjustKind.KEEP and self.amount is not None:
            raise ValueError("KEEP takes no amount")
        if self.kind is AdjustKind.SET_TO and self.amount is None:
            raise ValueError("SET_TO requires an amount")
        if self.amount is not None and self.amount < 0:
            raise ValueError(f"adjustment amount must be >= 0, got {self.amount}")


@dataclass(frozen=True)
class CutoffRule:
    """Ceiling past which the proposer stops conceding.

    A plan can declare a cut-off without naming a number ("there is a
    point where it is no longer worth it"); then limit is None.
    """

    limit: Money | None = None


@dataclass(frozen=True)
class ProposerStrategy:
    initial_offer: Money | None = None
    on_accept: AdjustRule | None = None
    on_reject: AdjustRule | None = None
    cutoff: CutoffRule | None = None


class FinalRoundRule(enum.Enum):
    KEEP_THRESHOLD = "keep_threshold"
    ACCEPT_ANY_NONZERO = "accept_any_nonzero"


@dataclass(frozen=True)
class ReceiverStrategy:
    """Per-round acceptance thresholds.

    threshold applies to every round not named in round_thresholds. A
    threshold of pot+1 encodes "reject everything". final_round_rule, when
    present, governs the last round instead of the threshold.
    """

    threshold: Money | None = None
    round_thresholds: Mapping[int, Money] = field(default_factory=dict)
    final_round_rule: FinalRoundRule | None = None

    def threshold_for(self, round_no: int) -> Money | None:
        return self.round_thresholds.get(round_no, self.threshold)


@dataclass(frozen=True)
class StrategySpec:
    """A parsed strategy together with the raw text it came from."""

    role: Role
    raw_text: str
    parsed: Union[ProposerStrategy, ReceiverStrategy]

    def __post_init__(self) -> None:
        expected = ProposerStrategy if self.role is Role.PROPOSER else ReceiverStrategy
        if not isinstance(self.parsed, expected):
            raise ValueError(f"{self.role.value} spec holds {type(self.parsed).__name__}")


# ---------------------------------------------------------------------------
# Completeness
# ---------------------------------------------------------------------------


class GapKind(enum.Enum):
    NO_INITIAL_OFFER = "no_initial_offer"
    NO_ACCEPT_BRANCH = "no_accept_branch"
    NO_REJECT_BRANCH = "no_reject_branch"
    UNCOVERED_ROUND = "uncovered_round"


@dataclass(frozen=True)
class Gap:
    kind: GapKind
    round: int | None = None

    def describe(self) -> str:
        if self.kind is GapKind.UNCOVERED_ROUND:
            return f"no threshold for round {self.round}"
        return {
            GapKind.NO_INITIAL_OFFER: "no opening offer",
            GapKind.NO_ACCEPT_BRANCH: "no rule for after an acceptance",
            GapKind.NO_REJECT_BRANCH: "no rule for after a rejection",
        }[self.kind]


@dataclass(frozen=True)
class CompletenessReport:
    complete: bool
    missing_cases: tuple[Gap, ...] = ()


def check_completeness(spec: StrategySpec, config: GameConfig) -> CompletenessReport:
    """Decide whether the strategy prescribes a move for every reachable state.

    A proposer plan is complete when it names an opening offer and covers
    both continuations (previous offer accepted / rejected). Cut-offs are
    optional refinements and never counted against completeness. A
    receiver plan is complete when every round has a threshold (a blanket
    threshold covers all rounds; a final-round rule covers the last).
    """
    gaps: list[Gap] = []
    if spec.role is Role.PROPOSER:
        plan = spec.parsed
        assert isinstance(plan, ProposerStrategy)
        if plan.initial_offer is None:
            gaps.append(Gap(GapKind.NO_INITIAL_OFFER))
        if plan.on_accept is None:
            gaps.append(Gap(GapKind.NO_ACCEPT_BRANCH))
        if plan.on_reject is None:
            gaps.append(Gap(GapKind.NO_REJECT_BRANCH))
    else:
        plan = spec.parsed
        assert isinstance(plan, ReceiverStrategy)
        for r in range(1, config.rounds + 1):
            covered = plan.threshold_for(r) is not None
            if r == config.rounds and plan.final_round_rule is not None:
                covered = True
            if not covered:
                gaps.append(Gap(GapKind.UNCOVERED_ROUND, round=r))
    return CompletenessReport(complete=not gaps, missing_cases=tuple(gaps))


# ---------------------------------------------------------------------------
# Personality consistency
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConsistencyBands:
    """Numeric bands (cents, for the 100-cent pot) defining which opening
    intents count as fair or greedy.

    The fair receiver band admits thresholds up to 50 because insisting on
    an even split is fair behavior, even though the gameplay boundary for
    judging fair receivers' decisions sits at 40.
    """

    fair_proposer: tuple[Money, Money] = (40, 60)
    greedy_proposer_below: Money = 50  # opening offer strictly below
    fair_receiver: tuple[Money, Money] = (40, 50)
    greedy_receiver_min: Money = 51  # integer form of "more than 50"


DEFAULT_BANDS = ConsistencyBands()


@dataclass(frozen=True)
class ConsistencyReport:
    """consistent is None when the deciding field is absent from the plan;
    that absence is charged to completeness, not consistency."""

    consistent: bool | None
    reason: str


def check_personality_consistency(
    spec: StrategySpec,
    personality: Personality,
    bands: ConsistencyBands = DEFAULT_BANDS,
) -> ConsistencyReport:
    """Judge the declared first-round intent against the personality.

    Only the opening matters here: later-round adjustments are judged
    against observed play, not against the personality.
    """
    if spec.role is Role.PROPOSER:
        plan = spec.parsed
        assert isinstance(plan, ProposerStrategy)
        opening = plan.initial_offer
        if opening is None:
            return ConsistencyReport(None, "no opening offer declared")
        if personality is Personality.FAIR:
            lo, hi = bands.fair_proposer
            if lo <= opening <= hi:
                return ConsistencyReport(True, f"opening offer {opening} within [{lo}, {hi}]")
            return ConsistencyReport(False, f"opening offer {opening} outside [{lo}, {hi}]")
        if opening < bands.greedy_proposer_below:
            return ConsistencyReport(True, f"opening offer {opening} below {bands.greedy_proposer_below}")
        return ConsistencyReport(
            False, f"opening offer {opening} not below {bands.greedy_proposer_below}"
        )

    plan = spec.parsed
    assert isinstance(plan, ReceiverStrategy)
    opening = plan.threshold_for(1)
    if opening is None:
        return ConsistencyReport(None, "no round-1 threshold declared")
    if personality is Personality.FAIR:
        lo, hi = bands.fair_receiver
        if lo <= opening <= hi:
            return ConsistencyReport(True, f"round-1 threshold {opening} within [{lo}, {hi}]")
        return ConsistencyReport(False, f"round-1 threshold {opening} outside [{lo}, {hi}]")
    if opening >= bands.greedy_receiver_min:
        return ConsistencyReport(True, f"round-1 threshold {opening} at least {bands.greedy_receiver_min}")
    return ConsistencyReport(
        False, f"round-1 threshold {opening} below {bands.greedy_receiver_min}"
    )


# ---------------------------------------------------------------------------
# Prescribed actions and adherence
# ---------------------------------------------------------------------------


class UncoveredStateError(Exception):
    """The strategy has no rule for the queried state.

    The gap is a completeness problem, so callers checking adherence skip
    the state rather than counting a deviation.
    """

    def __init__(self, role: Role, round_no: int, reason: str) -> None:
        super().__init__(f"{role.value} strategy uncovered at round {round_no}: {reason}")
        self.role = role
        self.round_no = round_no
        self.reason = reason


@dataclass(frozen=True)
class PrescribedOffer:
    """Offer range sanctioned by the plan; exact rules have lo == hi."""

    lo: Money
    hi: Money

    def contains(self, offer: Money, slack: Money = 0) -> bool:
        return self.lo - slack <= offer <= self.hi + slack


@dataclass(frozen=True)
class PrescribedDecision:
    decision: Decision


PrescribedAction = Union[PrescribedOffer, PrescribedDecision]


def prescribed_action(
    spec: StrategySpec,
    config: GameConfig,
    history: Sequence[RoundOutcome],
    round_no: int,
    pending_offer: Money | None = None,
    open_step: tuple[Money, Money] = OPEN_STEP_RANGE,
) -> PrescribedAction:
    """The move the strategy dictates at the given state.

    Pure function of its inputs. history holds the completed rounds before
    round_no; receivers additionally need the offer on the table.

    Raises:
        UncoveredStateError: the plan has no rule for this state.
        ValueError: the query itself is malformed (history too short,
            receiver query without a pending offer).
    """
    if not 1 <= round_no <= config.rounds:
        raise ValueError(f"round {round_no} outside 1..{config.rounds}")
    if len(history) < round_no - 1:
        raise ValueError(f"history has {len(history)} rounds, need {round_no - 1}")

    if spec.role is Role.PROPOSER:
        plan = spec.parsed
        assert isinstance(plan, ProposerStrategy)
        if round_no == 1:
            if plan.initial_offer is None:
                raise UncoveredStateError(spec.role, round_no, "no opening offer")
            return PrescribedOffer(plan.initial_offer, plan.initial_offer)
        prev = history[round_no - 2]
        rule = plan.on_accept if prev.decision is Decision.ACCEPT else plan.on_reject
        if rule is None:
            branch = "acceptance" if prev.decision is Decision.ACCEPT else "rejection"
            raise UncoveredStateError(spec.role, round_no, f"no rule after {branch}")
        lo, hi = _apply_adjust(rule, prev.offer, open_step)
        if plan.cutoff is not None and plan.cutoff.limit is not None:
            lo = min(lo, plan.cutoff.limit)
            hi = min(hi, plan.cutoff.limit)
        lo = max(0, min(lo, config.pot))
        hi = max(0, min(hi, config.pot))
        return PrescribedOffer(lo, hi)

    plan = spec.parsed
    assert isinstance(plan, ReceiverStrategy)
    if pending_offer is None:
        raise ValueError("receiver prescription needs the pending offer")
    if (
        round_no == config.rounds
        and plan.final_round_rule is FinalRoundRule.ACCEPT_ANY_NONZERO
        and pending_offer >= 1
    ):
        return PrescribedDecision(Decision.ACCEPT)
    threshold = plan.threshold_for(round_no)
    if threshold is None:
        if round_no == config.rounds and plan.final_round_rule is not None:
            # Capitulation rule with a zero offer on the table: nothing to gain.
            return PrescribedDecision(Decision.REJECT)
        raise UncoveredStateError(spec.role, round_no, "no threshold for this round")
    if pending_offer >= threshold:
        return PrescribedDecision(Decision.ACCEPT)
    return PrescribedDecision(Decision.REJECT)


def _apply_adjust(
    rule: AdjustRule, prev_offer: Money, open_step: tuple[Money, Money]
) -> tuple[Money, Money]:
    if rule.kind is AdjustKind.KEEP:
        return prev_offer, prev_offer
    if rule.kind is AdjustKind.SET_TO:
        assert rule.amount is not None
        return rule.amount, rule.amount
    lo_step, hi_step = (rule.amount, rule.amount) if rule.amount is not None else open_step
    if rule.kind is AdjustKind.INCREASE_BY:
        return prev_offer + lo_step, prev_offer + hi_step
    return prev_offer - hi_step, prev_offer - lo_step


# Default slack (cents) when comparing observed offers to prescriptions.
# Proposer plans are often qualitative ("around half"), so offers within a
# nickel count as following the plan; decisions are discrete, so the
# receiver default is exact.
PROPOSER_TOLERANCE: Money = 5
RECEIVER_TOLERANCE: Money = 0


@dataclass(frozen=True)
class Deviation:
    round: int
    role: Role
    expected: str
    actual: str


@dataclass(frozen=True)
class AdherenceReport:
    proposer_adherent: bool
    receiver_adherent: bool
    deviations: tuple[Deviation, ...] = ()


def check_adherence(
    specs: tuple[StrategySpec, StrategySpec],
    transcript: "Transcript",
    proposer_tolerance: Money = PROPOSER_TOLERANCE,
    receiver_tolerance: Money = RECEIVER_TOLERANCE,
) -> AdherenceReport:
    """Compare observed play against what the declared strategies dictate.

    States the strategy does not cover are skipped (the gap is already
    charged to completeness). An offer counts as adherent when it falls
    within proposer_tolerance of the prescribed range; a decision deviates
    unless it matches the prescription, with receiver_tolerance cents of
    slack around the threshold boundary.
    """
    proposer_spec, receiver_spec = specs
    if proposer_spec.role is not Role.PROPOSER or receiver_spec.role is not Role.RECEIVER:
        raise ValueError("specs must be (proposer, receiver)")
    config = transcript.config
    deviations: list[Deviation] = []
    for outcome in transcript.rounds:
        r = outcome.round
        history = transcript.rounds[: r - 1]
        try:
            prescribed = prescribed_action(proposer_spec, config, history, r)
        except UncoveredStateError:
            prescribed = None
        if isinstance(prescribed, PrescribedOffer) and not prescribed.contains(
            outcome.offer, slack=proposer_tolerance
        ):
            expected = (
                f"offer in [{prescribed.lo}, {prescribed.hi}]"
                if prescribed.lo != prescribed.hi
                else f"offer {prescribed.lo}"
            )
            deviations.append(
                Deviation(r, Role.PROPOSER, expected, f"offer {outcome.offer}")
            )
        try:
            prescribed = prescribed_action(
                receiver_spec, config, history, r, pending_offer=outcome.offer
            )
        except UncoveredStateError:
            prescribed = None
        if (
            isinstance(prescribed, PrescribedDecision)
            and outcome.decision is not prescribed.decision
        ):
            plan = receiver_spec.parsed
            assert isinstance(plan, ReceiverStrategy)
            threshold = plan.threshold_for(r)
            near_boundary = (
                receiver_tolerance > 0
                and threshold is not None
                and abs(outcome.offer - threshold) <= receiver_tolerance
            )
            if not near_boundary:
                deviations.append(
                    Deviation(
                        r,
                        Role.RECEIVER,
                        prescribed.decision.value,
                        outcome.decision.value,
                    )
                )
    return AdherenceReport(
        proposer_adherent=not any(d.role is Role.PROPOSER for d in deviations),
        receiver_adherent=not any(d.role is Role.RECEIVER for d in deviations),
        deviations=tuple(deviations),
    )
