"""Shared corpus generation for the equivalence and gradient suites."""

import numpy as np

from stlmask.core import (
    NamedSignals,
    PaddingPolicy,
    SemanticsConfig,
    StepInterval,
)
from stlmask.formula import TRUE, Always, And, Eventually, Not, Or, Pred, Until

CHANNELS = ("x", "y")


def random_formula(rng, depth, max_window=6, until_ok=True):
    """Random AST; leaves are predicates over CHANNELS, plus occasional TRUE."""
    ops = ["pred", "true", "not", "and", "or", "F", "G"] + (["U"] if until_ok else [])
    weights = np.array([0.26, 0.04, 0.10, 0.13, 0.13, 0.12, 0.12] + ([0.10] if until_ok else []))
    op = "pred" if depth == 0 and rng.random() > 0.08 else (
        "true" if depth == 0 else rng.choice(ops, p=weights / weights.sum()))

    def interval(L_hint=20):
        if rng.random() < 0.35:
            return None
        a = int(rng.integers(0, L_hint + 2))
        return StepInterval(a, a + int(rng.integers(0, max_window)))

    if op == "pred":
        return Pred(str(rng.choice(CHANNELS)), str(rng.choice([">", "<", ">=", "<="])),
                    float(np.round(rng.normal(0, 1.5), 3)))
    if op == "true":
        return TRUE
    if op == "not":
        return Not(random_formula(rng, depth - 1, max_window, until_ok))
    if op == "and":
        return And(random_formula(rng, depth - 1, max_window, until_ok),
                   random_formula(rng, depth - 1, max_window, until_ok))
    if op == "or":
        return Or(random_formula(rng, depth - 1, max_window, until_ok),
                  random_formula(rng, depth - 1, max_window, until_ok))
    if op == "F":
        return Eventually(random_formula(rng, depth - 1, max_window, until_ok), interval())
    if op == "G":
        return Always(random_formula(rng, depth - 1, max_window, until_ok), interval())
    return Until(random_formula(rng, depth - 1, max_window, until_ok),
                 random_formula(rng, depth - 1, max_window, until_ok), interval())


def random_signals(rng, max_len=40) -> NamedSignals:
    length = int(rng.integers(1, max_len + 1))
    return NamedSignals.from_arrays(
        {name: rng.normal(0, 2, length) for name in CHANNELS})


def random_padding(rng) -> PaddingPolicy:
    if rng.random() < 0.5:
        return PaddingPolicy.last_value()
    return PaddingPolicy.constant(float(np.round(rng.uniform(-5, 5), 3)))


def corpus_config(rng, mode) -> SemanticsConfig:
    # top_value kept small so pairwise-vs-flat LSE rounding stays far below
    # the 1e-9 equivalence tolerance
    return SemanticsConfig(mode=mode, padding=random_padding(rng), top_value=100.0)


def equivalence_case(rng, depth=3, max_len=40):
    signals = random_signals(rng, max_len)
    f = random_formula(rng, int(rng.integers(1, depth + 1)))
    return f, signals
