"""Causal and decision consistency tests over total states.

Causal rules are grouped per head feature; each group is read under program
completion, i.e. the "if" rules become "if and only if": a head value is
satisfied exactly when one of its bodies fires.  A fired alternative entails
its head value; an alternative whose bodies all fail excludes it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .domain import DatasetConfig, FeatureSpec, State, Value
from .errors import CausalProgramError, ConfigError
from .rules import Rule, RuleProgram, program_decides, rule_fires, unparse_rule


@dataclass(frozen=True)
class CausalAlternative:
    value: Value
    rules: tuple[Rule, ...]


@dataclass(frozen=True)
class CausalGroup:
    """All causal rules sharing one head feature, keyed by head value.

    ``exhaustive`` is not decidable from syntax alone; it is left None here
    and can be measured on small spaces with :func:`group_is_exhaustive`.
    """

    feature: str
    alternatives: tuple[CausalAlternative, ...]
    exhaustive: bool | None = None


@dataclass(frozen=True)
class Entailment:
    """What the causal program demands of one feature, given a state.

    ``required`` is the fired head value (None when no alternative fired);
    ``excluded`` lists head values whose bodies all failed and which the
    feature must therefore not satisfy.
    """

    feature: str
    required: Value | None
    excluded: tuple[Value, ...] = ()
    provenance: tuple[str, ...] = ()

    @property
    def unconstrained(self) -> bool:
        return self.required is None and not self.excluded


def build_causal_groups(
    config: DatasetConfig, causal: RuleProgram
) -> tuple[CausalGroup, ...]:
    """Group causal rules per head feature, validating heads against config."""
    if causal.kind != "causal":
        raise ConfigError("expected a causal program")
    by_feature: dict[str, dict[Value, list[Rule]]] = {}
    order: list[str] = []
    for rule in causal.rules:
        name = rule.head.predicate
        if not config.has_feature(name):
            raise ConfigError(f"causal head {name!r} is not a feature")
        spec = config.feature(name)
        value = rule.head.value
        if spec.kind == "numeric":
            if not isinstance(value, float):
                raise ConfigError(
                    f"causal head for numeric feature {name!r} must be numeric"
                )
            lo, hi = spec.numeric_range  # type: ignore[misc]
            if not lo <= value <= hi:
                raise ConfigError(f"causal head value {value} outside {name!r} range")
        elif value not in spec.domain:
            raise ConfigError(
                f"causal head value {value!r} is not in the domain of {name!r}"
            )
        for lit in rule.body:
            if lit.predicate is not None and lit.predicate == name:
                raise ConfigError(f"causal rule for {name!r} reads its own feature")
        if name not in by_feature:
            by_feature[name] = {}
            order.append(name)
        by_feature[name].setdefault(value, []).append(rule)
    groups = []
    for name in order:
        alts = tuple(
            CausalAlternative(value, tuple(rs)) for value, rs in by_feature[name].items()
        )
        groups.append(CausalGroup(feature=name, alternatives=alts))
    return tuple(groups)


def _entailment_for_group(
    config: DatasetConfig,
    group: CausalGroup,
    state_map: Mapping[str, Value],
    causal: RuleProgram,
) -> Entailment:
    fired: list[CausalAlternative] = []
    fired_rules: list[Rule] = []
    excluded: list[Value] = []
    for alt in group.alternatives:
        firing = [r for r in alt.rules if rule_fires(r, state_map, causal)]
        if firing:
            fired.append(alt)
            fired_rules.extend(firing)
        else:
            excluded.append(alt.value)
    if len(fired) > 1:
        offending = "; ".join(unparse_rule(r) for r in fired_rules)
        raise CausalProgramError(
            f"two alternatives for feature {group.feature!r} fired simultaneously: "
            f"{offending}"
        )
    required = fired[0].value if fired else None
    return Entailment(
        feature=group.feature,
        required=required,
        excluded=tuple(excluded),
        provenance=tuple(unparse_rule(r) for r in fired_rules),
    )


def entailed_assignments(
    config: DatasetConfig,
    groups: Sequence[CausalGroup],
    causal: RuleProgram,
    state: State,
) -> tuple[Entailment, ...]:
    """One entailment per causally governed feature, evaluated on ``state``.

    Bodies never read their own head feature (enforced at load), so each
    group is decided by the state's other features alone.
    """
    state_map = config.state_dict(state)
    return tuple(
        _entailment_for_group(config, g, state_map, causal) for g in groups
    )


def entailment_satisfied(spec: FeatureSpec, value: Value, ent: Entailment) -> bool:
    if ent.required is not None and not spec.satisfies(value, ent.required):
        return False
    return all(not spec.satisfies(value, ex) for ex in ent.excluded)


def causally_consistent(
    config: DatasetConfig,
    groups: Sequence[CausalGroup],
    causal: RuleProgram,
    state: State,
) -> bool:
    """Membership test for the causally consistent subspace."""
    for ent in entailed_assignments(config, groups, causal, state):
        spec = config.feature(ent.feature)
        if not entailment_satisfied(spec, state.values[config.feature_index(ent.feature)], ent):
            return False
    return True


def decision_positive(decision: RuleProgram, state_map: Mapping[str, Value]) -> bool:
    """True iff the state carries the undesired outcome.

    For rule sets written in terms of the desired label (German 'good'),
    the polarity flips: undesired means no rule fires.
    """
    decided = program_decides(decision, state_map)
    return decided if decision.describes_undesired else not decided


def is_counterfactual(
    config: DatasetConfig,
    groups: Sequence[CausalGroup],
    causal: RuleProgram,
    decision: RuleProgram,
    state: State,
) -> bool:
    """Goal-set membership: satisfies all causal rules and escapes the decision."""
    if not causally_consistent(config, groups, causal, state):
        return False
    return not decision_positive(decision, config.state_dict(state))


def causal_repair_values(
    config: DatasetConfig,
    groups: Sequence[CausalGroup],
    causal: RuleProgram,
    state: State,
    feature: str,
) -> tuple[Value, ...]:
    """Domain values that would make ``feature``'s causal group consistent,
    holding the other features of ``state`` fixed.

    A fired alternative's own head value (the declared representative) comes
    first; remaining group-consistent values follow in domain order.
    """
    spec = config.feature(feature)
    state_map = config.state_dict(state)
    for group in groups:
        if group.feature != feature:
            continue
        ent = _entailment_for_group(config, group, state_map, causal)
        ok = [v for v in spec.domain if entailment_satisfied(spec, v, ent)]
        if ent.required is not None and ent.required in ok:
            ok.remove(ent.required)
            ok.insert(0, ent.required)
        return tuple(ok)
    return ()


def group_is_exhaustive(
    config: DatasetConfig, group: CausalGroup, causal: RuleProgram, cap: int = 100000
) -> bool:
    """Measure whether the group's bodies cover every state (small spaces)."""
    from .domain import enumerate_states, search_space_size
    from .errors import SpaceTooLargeError

    if search_space_size(config) > cap:
        raise SpaceTooLargeError("state space too large to decide exhaustiveness")
    for state in enumerate_states(config):
        state_map = config.state_dict(state)
        if not any(
            rule_fires(r, state_map, causal) for alt in group.alternatives for r in alt.rules
        ):
            return False
    return True
