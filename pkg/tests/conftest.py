from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).resolve().parent
REPO = TESTS_DIR.parent
DATA = REPO / "data"
SUPPLEMENT = TESTS_DIR / "fixtures" / "supplement"

sys.path.insert(0, str(TESTS_DIR))

from p2c import load_dataset  # noqa: E402
from p2c.dataset import build_dataset  # noqa: E402
from p2c.domain import DatasetConfig, FeatureSpec  # noqa: E402
from p2c.rules import parse_rule_program  # noqa: E402


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def supplement_dir():
    return SUPPLEMENT


@pytest.fixture(scope="session")
def example1():
    return load_dataset(DATA / "example1")


@pytest.fixture(scope="session")
def example2():
    return load_dataset(DATA / "example2")


@pytest.fixture(scope="session")
def adult():
    return load_dataset(DATA / "adult")


@pytest.fixture(scope="session")
def german():
    return load_dataset(DATA / "german")


@pytest.fixture(scope="session")
def cars():
    return load_dataset(DATA / "cars")


def make_dataset(feature_domains, decision_text, causal_text="", **config_kwargs):
    """Small helper to assemble an in-memory dataset for targeted tests.

    ``feature_domains`` maps name -> domain tuple (categorical) or
    FeatureSpec for full control.
    """
    features = []
    for name, dom in feature_domains.items():
        if isinstance(dom, FeatureSpec):
            features.append(dom)
        else:
            features.append(FeatureSpec(name=name, kind="categorical", domain=tuple(dom)))
    defaults = dict(
        name="inline",
        features=tuple(features),
        undesired_decision="bad",
        norm_p=1,
    )
    defaults.update(config_kwargs)
    config = DatasetConfig(**defaults)
    decision = parse_rule_program(decision_text, "decision")
    causal = parse_rule_program(causal_text, "causal")
    return build_dataset(config, decision, causal)


def random_dataset(seed: int, *, max_features=5, max_values=6, with_causal=True,
                   with_plausibility=True):
    """A random stratified rule setup over categorical features.

    Causal alternatives are guarded by complementary literals on one other
    feature, so no two alternatives of a group can fire at once.
    Returns None when the generated program leaves no decision-positive,
    causally consistent instance to start from.
    """
    rng = random.Random(seed)
    nf = rng.randint(2, max_features)
    names = [f"f{i}" for i in range(nf)]
    domains = {n: tuple(f"v{j}" for j in range(rng.randint(2, max_values))) for n in names}

    def lit(feature):
        value = rng.choice(domains[feature])
        neg = "not " if rng.random() < 0.4 else ""
        return f"{neg}{feature}(X,'{value}')"

    decision_rules = []
    for _ in range(rng.randint(1, 3)):
        k = rng.randint(1, min(3, nf))
        feats = rng.sample(names, k)
        decision_rules.append("label(X,'bad') :- " + ", ".join(lit(f) for f in feats) + ".")

    causal_rules = []
    causal_heads = []
    if with_causal and nf >= 2:
        for head in rng.sample(names, rng.randint(0, min(2, nf - 1))):
            guards = [n for n in names if n != head]
            guard = rng.choice(guards)
            gv = rng.choice(domains[guard])
            values = list(domains[head])
            rng.shuffle(values)
            causal_rules.append(f"{head}(X,'{values[0]}') :- {guard}(X,'{gv}').")
            if len(values) > 1 and rng.random() < 0.7:
                causal_rules.append(f"{head}(X,'{values[1]}') :- not {guard}(X,'{gv}').")
            causal_heads.append(head)

    features = []
    for n in names:
        mutable = True
        actionable = True
        monotone = "none"
        if with_plausibility:
            roll = rng.random()
            if roll < 0.08:
                mutable = False
            elif roll < 0.20 and n in causal_heads:
                actionable = False
            elif roll < 0.28:
                monotone = rng.choice(("nondecreasing", "nonincreasing"))
        features.append(
            FeatureSpec(
                name=n,
                kind="categorical",
                domain=domains[n],
                mutable=mutable,
                monotone=monotone,
                directly_actionable=actionable,
            )
        )
    config = DatasetConfig(
        name=f"random{seed}",
        features=tuple(features),
        undesired_decision="bad",
        norm_p=rng.choice((0, 1, 2)),
    )
    try:
        dataset = build_dataset(
            config,
            parse_rule_program("\n".join(decision_rules), "decision"),
            parse_rule_program("\n".join(causal_rules), "causal"),
        )
    except Exception:
        return None
    from p2c.domain import enumerate_states

    starts = [
        s
        for s in enumerate_states(config)
        if dataset.decision_positive(s) and dataset.consistent(s)
    ]
    if not starts:
        return None
    return dataset, starts[rng.randrange(len(starts))]
