"""Independent re-implementations used as test oracles.

Everything here recomputes results through a different code path than the
implementation under test: plain nested loops, no pruning, no shared
bookkeeping, so a bug in the streaming search or the planner's ledger cannot
hide itself.
"""

from __future__ import annotations

import itertools

from p2c.consistency import causal_repair_values
from p2c.domain import State, enumerate_states
from p2c.planner import CAUSAL, DIRECT, PlanPath, direct_action_problem
from p2c.search import adjust_weights, compute_weighted_lp


def exhaustive_min_cf(dataset, instance, *, weights=None, p=None, mode="p2c"):
    """Plain double-loop minimum over the goal set (no streaming, no bounds)."""
    config = dataset.config
    weights = dict(weights) if weights is not None else config.weights()
    p = config.norm_p if p is None else p
    heads = dataset.causal_head_features
    per_feature = []
    for spec, cur in zip(config.features, instance.values):
        if not spec.mutable:
            vals = (cur,)
        elif spec.name in heads:
            vals = spec.domain
        elif not spec.directly_actionable:
            vals = (cur,)
        elif spec.monotone == "nondecreasing":
            vals = spec.domain[spec.index_of(cur):]
        elif spec.monotone == "nonincreasing":
            vals = spec.domain[: spec.index_of(cur) + 1]
        else:
            vals = spec.domain
        per_feature.append(vals)
    best = None
    for combo in itertools.product(*per_feature):
        state = State(combo)
        if not dataset.is_goal(state):
            continue
        if mode == "p2c":
            adj, _ = adjust_weights(dataset, instance, state, weights)
        else:
            adj = weights
        cost = compute_weighted_lp(config, instance, state, adj, p)
        key = (cost, config.lex_key(state))
        if best is None or key < best[0]:
            best = (key, state, cost)
    return best  # None, or ((cost, lexkey), state, cost)


def exhaustive_knearest(config, q, k, p, weights=None):
    """Sort the whole space by (distance, lexicographic position)."""
    weights = dict(weights) if weights is not None else config.weights()
    scored = sorted(
        (
            (compute_weighted_lp(config, q, s, weights, p), config.lex_key(s), s)
            for s in enumerate_states(config)
        ),
        key=lambda t: (t[0], t[1]),
    )
    return [(s, d) for d, _, s in scored[:k]]


def replay_transition(dataset, before: State, actions, after: State) -> list[str]:
    """Check one consecutive path pair against the transition semantics.

    The recorded actions must drive ``before`` to ``after`` through causally
    inconsistent intermediates only, every direct action plausible and every
    causal action compelled where it is applied.
    """
    config = dataset.config
    problems: list[str] = []
    if not actions:
        problems.append("consecutive states with no recorded action")
        return problems
    current = before
    for idx, action in enumerate(actions):
        fi = config.feature_index(action.feature)
        spec = config.features[fi]
        if action.kind == DIRECT:
            why = direct_action_problem(spec, current.values[fi], action.new_value)
            if why:
                problems.append(f"direct action {idx}: {why}")
        elif action.kind == CAUSAL:
            allowed = causal_repair_values(
                config, dataset.groups, dataset.causal, current, action.feature
            )
            if action.new_value not in allowed:
                problems.append(f"causal action {idx}: value not compelled here")
        else:
            problems.append(f"action {idx}: unknown kind {action.kind}")
        current = current.replace_value(fi, action.new_value)
        if idx < len(actions) - 1 and dataset.consistent(current):
            problems.append(
                f"action {idx}: intermediate state is already causally consistent"
            )
    if current != after:
        problems.append("replaying the actions does not reach the recorded state")
    if not dataset.consistent(after):
        problems.append("transition target is not causally consistent")
    return problems


def verify_solution_path(dataset, instance: State, path: PlanPath) -> list[str]:
    """The five soundness clauses, each checked from scratch."""
    problems: list[str] = []
    states = path.states()
    if not states:
        return ["empty path"]
    if states[0] != instance:
        problems.append("clause 1: path does not start at the initial state")
    if not dataset.is_goal(states[-1]):
        problems.append("clause 2: path does not end in the goal set")
    for j, s in enumerate(states):
        if not dataset.consistent(s):
            problems.append(f"clause 3: state {j} is causally inconsistent")
    for j, s in enumerate(states[:-1]):
        if dataset.is_goal(s):
            problems.append(f"clause 4: interior state {j} is already a goal state")
    for j in range(1, len(states)):
        sub = replay_transition(dataset, states[j - 1], path.steps[j].actions, states[j])
        problems.extend(f"clause 5 (step {j}): {m}" for m in sub)
    return problems


def one_direct_action_reaches_goal(dataset, instance: State) -> bool:
    """Whether a single plausible direct change lands in the goal set.

    Only meaningful for causal-rule-free datasets, where no cascade follows.
    """
    config = dataset.config
    for fi, spec in enumerate(config.features):
        for value in spec.domain:
            if value == instance.values[fi]:
                continue
            if direct_action_problem(spec, instance.values[fi], value):
                continue
            if dataset.is_goal(instance.replace_value(fi, value)):
                return True
    return False
