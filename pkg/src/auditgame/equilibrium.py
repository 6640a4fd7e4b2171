"""Equilibrium constructions, budget-regime analysis, and verification.

The two-type game has a closed-form unique equilibrium; a budgeted
two-type single-user game has an equilibrium for every budget, switching
between a budget-exhausting branch and the closed form at a threshold.
General games dispatch through a budget-regime classification; below the
applicable threshold no equilibrium exists and callers get a structured
error rather than a bogus profile.

Equilibria here lean on the audit rule resolving exact indifference to
no-audit.  If an administrator instead audited with positive probability
at indifference, no exact equilibrium would survive, but strategies with
misreporting mass just below the indifference point come within any
epsilon of the optimal utility, so near-equilibria always exist.  This
library models the no-audit tie-break only.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import core, lp
from .core import AuditPolicy, GameConfig, Strategy, StrategyProfile, two_type_strategy
from .errors import InputError, NonexistenceError
from .numeric import sig15


class Regime(enum.Enum):
    UNCONSTRAINED = "UNCONSTRAINED"
    SUFFICIENT = "SUFFICIENT"
    TWO_TYPE_SUFFICIENT = "TWO_TYPE_SUFFICIENT"
    TWO_TYPE_ANY_BUDGET_SINGLE_USER = "TWO_TYPE_ANY_BUDGET_SINGLE_USER"
    NONEXISTENCE_POSSIBLE = "NONEXISTENCE_POSSIBLE"


@dataclass(frozen=True)
class EquilibriumResult:
    """A per-user equilibrium together with its headline quantities.

    All users play the same strategy (multi-user games with a sufficient
    budget decompose into identical single-user games), so the utilities
    and excess are per user; aggregate totals live in the cost module.
    """

    profile: StrategyProfile
    user_utilities: tuple        # aligned with cfg.types
    admin_utility: Fraction
    excess: Fraction
    provenance: str              # lp | closed_form_two_type | budgeted_two_type
    multiplicity: bool = False
    unique: bool = False
    notes: tuple = ()

    def strategy(self) -> Strategy:
        return self.profile.strategies[0]

    def audit(self) -> AuditPolicy:
        return self.profile.audits[0]

    def user_utility_avg(self, cfg: GameConfig) -> Fraction:
        return sum((q * u for q, u in zip(cfg.prior, self.user_utilities)), Fraction(0))

    def to_text(self, cfg: GameConfig) -> str:
        lines = [
            f"provenance: {self.provenance}",
            f"types: {','.join(cfg.types)}",
        ]
        for m, label in enumerate(cfg.types):
            row = ",".join(sig15(p) for p in self.strategy().rows[m])
            lines.append(f"strategy[{label}]: {row}")
            exact = ",".join(str(p) for p in self.strategy().rows[m])
            lines.append(f"strategy_exact[{label}]: {exact}")
        lines.append("audit: " + ",".join(sig15(p) for p in self.audit().probs))
        for label, u in zip(cfg.types, self.user_utilities):
            lines.append(f"user_utility[{label}]: {sig15(u)}")
        lines.append(f"user_utility_avg: {sig15(self.user_utility_avg(cfg))}")
        lines.append(f"admin_utility: {sig15(self.admin_utility)}")
        lines.append(f"excess: {sig15(self.excess)}")
        lines.append(f"excess_exact: {self.excess}")
        lines.append(f"multiplicity: {str(self.multiplicity).lower()}")
        lines.append(f"unique: {str(self.unique).lower()}")
        for note in self.notes:
            lines.append(f"note: {note}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class BudgetAnalysis:
    threshold_general: Fraction
    threshold_two_type: Optional[Fraction]
    threshold_coalition: Fraction
    regime: Regime


def _two_type_params(cfg: GameConfig):
    lo, hi = cfg.low_high_indices()
    q_lo, q_hi = cfg.prior[lo], cfg.prior[hi]
    df = cfg.alloc[hi] - cfg.alloc[lo]
    return lo, hi, q_lo, q_hi, df


def two_type_misreport_prob(cfg: GameConfig) -> Fraction:
    """Equilibrium probability that the low type claims the high credit."""
    _, _, q_lo, q_hi, df = _two_type_params(cfg)
    denom = q_lo * (cfg.fine - cfg.audit_cost + df)
    if denom <= 0:
        return Fraction(1)
    return min(Fraction(1), q_hi * cfg.audit_cost / denom)


def two_type_closed_form(cfg: GameConfig) -> EquilibriumResult:
    """Unique no-audit equilibrium of the two-type game."""
    if not cfg.is_two_type:
        raise InputError("the closed form applies to two-type games only")
    p = two_type_misreport_prob(cfg)
    pi = two_type_strategy(cfg, p)
    sigma = AuditPolicy.zero(2)
    user_utils = tuple(core.user_utility_type(pi, sigma, t, cfg) for t in cfg.types)
    return EquilibriumResult(
        profile=StrategyProfile.replicated(pi, sigma, cfg.num_users),
        user_utilities=user_utils,
        admin_utility=core.admin_utility(pi, sigma, cfg),
        excess=core.excess_payments(pi, sigma, cfg),
        provenance="closed_form_two_type",
        unique=True,
    )


def budget_thresholds(cfg: GameConfig) -> BudgetAnalysis:
    """Existence thresholds and the regime the configured budget falls in."""
    df = cfg.delta_f_max
    general = cfg.audit_cost * df / (cfg.fine + df) if df > 0 else Fraction(0)
    two_type = None
    if cfg.is_two_type:
        p = two_type_misreport_prob(cfg)
        two_type = general * (1 - p)
    coalition = cfg.coalition_size * general

    budget = cfg.budget
    if budget is None:
        regime = Regime.UNCONSTRAINED
    elif budget >= coalition:
        regime = Regime.SUFFICIENT
    elif cfg.is_two_type and cfg.num_users == 1:
        regime = Regime.TWO_TYPE_ANY_BUDGET_SINGLE_USER
    elif cfg.is_two_type and budget >= two_type:
        regime = Regime.TWO_TYPE_SUFFICIENT
    else:
        regime = Regime.NONEXISTENCE_POSSIBLE
    return BudgetAnalysis(
        threshold_general=general,
        threshold_two_type=two_type,
        threshold_coalition=coalition,
        regime=regime,
    )


def budgeted_two_type_equilibrium(cfg: GameConfig) -> EquilibriumResult:
    """Two-type equilibrium under any finite budget.

    At or below the two-type threshold the low type misreports always and
    the administrator exhausts its budget on the high signal; above it the
    closed form applies with no audits.  With more than one user the
    below-threshold region (for positive budgets) admits no equilibrium.
    """
    if not cfg.is_two_type:
        raise InputError("the budgeted construction applies to two-type games only")
    if cfg.budget is None:
        raise InputError("budgeted construction needs a finite budget; use the closed form")
    analysis = budget_thresholds(cfg)
    threshold = analysis.threshold_two_type
    # Single user: budgets up to and including the threshold take the
    # budget-exhausting branch.  With several users the threshold itself
    # is enough for the no-audit closed form, and anything strictly
    # between zero and the threshold has no equilibrium at all.
    if cfg.budget > threshold or (cfg.num_users > 1 and cfg.budget == threshold):
        return two_type_closed_form(cfg)

    if cfg.num_users > 1 and cfg.budget > 0:
        raise NonexistenceError(
            f"no signaling equilibrium: {cfg.num_users} users with budget "
            f"{cfg.budget} strictly between 0 and the two-type existence "
            f"threshold {threshold}",
            budget=cfg.budget,
            threshold_two_type=threshold,
            threshold_general=analysis.threshold_general,
        )

    lo, hi, q_lo, q_hi, df = _two_type_params(cfg)
    pi = two_type_strategy(cfg, 1)
    if cfg.audit_cost == 0:
        sigma_hi = Fraction(1)
    else:
        sigma_hi = min(Fraction(1), cfg.budget / cfg.audit_cost)
    probs = [Fraction(0), Fraction(0)]
    probs[hi] = sigma_hi
    sigma = AuditPolicy(tuple(probs))
    user_utils = tuple(core.user_utility_type(pi, sigma, t, cfg) for t in cfg.types)
    return EquilibriumResult(
        profile=StrategyProfile.replicated(pi, sigma, cfg.num_users),
        user_utilities=user_utils,
        admin_utility=core.admin_utility(pi, sigma, cfg),
        excess=core.excess_payments(pi, sigma, cfg),
        provenance="budgeted_two_type",
        unique=False,
        notes=(f"budget-exhausting branch; threshold {threshold}",),
    )


def signaling_equilibrium(cfg: GameConfig) -> EquilibriumResult:
    """Administrator-least-favorable signaling equilibrium for the regime.

    The returned excess is the tight upper bound on excess payments over
    all signaling equilibria of the instance.
    """
    analysis = budget_thresholds(cfg)
    regime = analysis.regime
    if regime in (Regime.UNCONSTRAINED, Regime.SUFFICIENT):
        result = lp.bp_equilibrium(cfg)
    elif regime is Regime.TWO_TYPE_ANY_BUDGET_SINGLE_USER:
        result = budgeted_two_type_equilibrium(cfg)
    elif regime is Regime.TWO_TYPE_SUFFICIENT:
        result = two_type_closed_form(cfg)
    else:
        raise NonexistenceError(
            f"no signaling equilibrium: budget {cfg.budget} lies below the "
            f"applicable existence thresholds (two-type "
            f"{analysis.threshold_two_type}, coalition-scaled "
            f"{analysis.threshold_coalition})",
            budget=cfg.budget,
            threshold_two_type=analysis.threshold_two_type,
            threshold_general=analysis.threshold_general,
        )
    note = "excess is the tight upper bound over all signaling equilibria"
    if note not in result.notes:
        result = EquilibriumResult(
            profile=result.profile,
            user_utilities=result.user_utilities,
            admin_utility=result.admin_utility,
            excess=result.excess,
            provenance=result.provenance,
            multiplicity=result.multiplicity,
            unique=result.unique,
            notes=result.notes + (note, f"regime {regime.value}"),
        )
    return result


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of checking a profile against the equilibrium conditions."""

    br_matches: bool
    expected_audit: tuple
    actual_audit: tuple
    per_type_gain: dict       # type label -> best utility improvement found
    grid_slack: Fraction
    notes: tuple = ()

    @property
    def max_gain(self):
        return max(self.per_type_gain.values())

    @property
    def deviations_ok(self) -> bool:
        return all(g <= self.grid_slack for g in self.per_type_gain.values())

    @property
    def passed(self) -> bool:
        return self.br_matches and self.deviations_ok

    def to_text(self) -> str:
        lines = [
            f"passed: {str(self.passed).lower()}",
            f"audit_best_response_matches: {str(self.br_matches).lower()}",
            f"expected_audit: {','.join(sig15(p) for p in self.expected_audit)}",
            f"actual_audit: {','.join(sig15(p) for p in self.actual_audit)}",
            f"grid_slack: {sig15(self.grid_slack)}",
        ]
        for label, gain in self.per_type_gain.items():
            lines.append(f"max_gain[{label}]: {sig15(gain)}")
        for note in self.notes:
            lines.append(f"note: {note}")
        return "\n".join(lines) + "\n"


def verify_equilibrium(result: EquilibriumResult, cfg: GameConfig,
                       resolution: int = 200) -> VerificationReport:
    """Check the audit best response and search for per-type deviations.

    Deviations are scanned on a probability grid, so improvements below
    the reported grid slack are indistinguishable from discretization.
    Failures come back in the report rather than as exceptions.
    """
    from . import oracle

    if resolution < 10:
        raise InputError("verification resolution must be at least 10")
    pi = result.strategy()
    sigma = result.audit()
    expected = core.best_response(pi, cfg, budget_cap=cfg.budget)
    br_matches = expected.probs == sigma.probs
    grid = oracle.GridSpec(resolution=resolution)
    gains = oracle.deviation_search(result.profile, cfg, grid)
    notes = []
    if not br_matches:
        notes.append("profile audit policy is not the best response to its strategy")
    return VerificationReport(
        br_matches=br_matches,
        expected_audit=expected.probs,
        actual_audit=sigma.probs,
        per_type_gain=gains,
        grid_slack=oracle.grid_slack(cfg, resolution),
        notes=tuple(notes),
    )
