"""Two loan-application walkthroughs, start to finish.

Scenario 1 needs a single direct change (raise the bank balance).
Scenario 2 adds a second rejection rule on the credit score, which cannot be
edited directly: the plan has to clear the debt and let the causal rule lift
the score, and the cost model prices that lifted score at zero.
"""

from pathlib import Path

from p2c import find_path, load_dataset, min_cf

DATA = Path(__file__).resolve().parent.parent / "data"


def show_path(dataset, path):
    for step_no, step in enumerate(path.steps):
        for action in step.actions:
            print(f"   {action.kind:>6}: {action.feature} -> {action.new_value}")
        values = dataset.config.state_dict(step.state)
        print(f"   state {step_no}: {values}")


# -- Scenario 1: one direct action ------------------------------------------

ds1 = load_dataset(DATA / "example1")
john = ds1.default_instance()
print("Scenario 1 applicant:", ds1.config.state_dict(john))
print("rejected?", ds1.decision_positive(john))

best = min_cf(ds1, john)
print("cheapest approval:", ds1.config.state_dict(best.target))
print("weighted L1 cost:", best.cost)

path = find_path(ds1, john, best.target)
print("plan:")
show_path(ds1, path)

# -- Scenario 2: a causal dependency does part of the work -------------------

ds2 = load_dataset(DATA / "example2")
john2 = ds2.default_instance()
print("\nScenario 2 applicant:", ds2.config.state_dict(john2))

p2c_cost = min_cf(ds2, john2, p=0)
all_cost = min_cf(ds2, john2, p=0, mode="all_changes")
print("changes needed, pricing causal effects at zero:", p2c_cost.cost)
print("changes needed, pricing every change:          ", all_cost.cost)
print("free (causally induced):", sorted(p2c_cost.causal_free_features))

path2 = find_path(ds2, john2, p2c_cost.target)
print("plan:")
show_path(ds2, path2)
print("note: the debt -> 0 step briefly violates the causal rule, so the")
print("credit-score repair rides along as a causal action at no cost.")
