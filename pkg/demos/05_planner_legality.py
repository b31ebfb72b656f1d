"""Causal planner vs causally blind baseline, judged by action legality.

The baseline BFS rewrites whatever features differ from the target, including
ones nobody can edit directly (a credit score, a marital status, an
employment status).  The causal planner reaches those values the only way the
world allows: by changing their causes and letting the causal rules fire.
"""

from pathlib import Path

from p2c import find_path, load_dataset, min_cf, naive_find_path, path_is_legal, validate_state

DATA = Path(__file__).resolve().parent.parent / "data"

german = load_dataset(DATA / "german")

# a real-looking record that violates the causal model: the employment field
# says unemployed while the job field says skilled
raw = dict(german.config.instance_defaults)
raw["present_employment_since"] = "unemployed"
instance = validate_state(german.config, raw)
print("start:", {k: raw[k] for k in ("present_employment_since", "job")})
print("causally consistent?", german.consistent(instance))

target = min_cf(german, instance, on_inconsistent="allow").target
print("target employment:", german.config.state_dict(target)["present_employment_since"])

plan = find_path(german, instance, target, on_inconsistent="repair")
ok, violations = path_is_legal(german, plan)
print(f"\ncausal planner: {len(plan.steps)} step(s), legal={ok}")
for action in plan.actions():
    print(f"   {action.kind}: {action.feature} -> {action.new_value}")

naive = naive_find_path(german, instance, target)
ok_naive, violations_naive = path_is_legal(german, naive)
print(f"\nnaive planner: {len(naive.steps) - 1} step(s), legal={ok_naive}")
for v in violations_naive:
    print("   violation:", v)
