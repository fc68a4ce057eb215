"""Possibilistic structure: global sections, contextuality classes, Liar cycles.

Works on the support skeleton only. Probabilities enter once, when a support
is extracted from an empirical model; afterwards everything is combinatorics
over outcome tuples.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .qstate import Distribution
from .scenario import (
    ContextKey,
    EmpiricalModel,
    Observable,
    PossibilisticModel,
    Scenario,
)

MAX_ASSIGNMENTS = 2**24

__all__ = [
    "MAX_ASSIGNMENTS",
    "Classification",
    "GlobalAssignment",
    "ImplicationStep",
    "LiarCycle",
    "global_sections",
    "extends_to_global",
    "classify",
    "liar_cycles",
    "cycle_model",
    "cycle_empirical_model",
]


class Classification(str, Enum):
    GLOBALLY_EXTENDABLE = "GloballyExtendable"
    LOGICALLY_CONTEXTUAL = "LogicallyContextual"
    STRONGLY_CONTEXTUAL = "StronglyContextual"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class GlobalAssignment:
    """One outcome per observable, in scenario observable order."""

    labels: tuple[str, ...]
    values: tuple[str, ...]

    def __getitem__(self, label: str) -> str:
        return self.values[self.labels.index(label)]

    def restrict(self, context: Sequence[str]) -> tuple[str, ...]:
        return tuple(self[l] for l in context)

    def as_dict(self) -> dict[str, str]:
        return dict(zip(self.labels, self.values))


def _guard(sc: Scenario) -> None:
    if sc.assignment_space() > MAX_ASSIGNMENTS:
        raise ValueError(
            f"assignment space {sc.assignment_space()} exceeds the "
            f"2**24 enumeration guard"
        )


def _search(
    p: PossibilisticModel,
    fixed: Mapping[str, str],
    stop_at_first: bool,
) -> list[tuple[str, ...]]:
    """Backtracking enumeration in lexicographic order (observables in
    scenario order, outcomes in declared order). A context is checked as soon
    as its last observable gets a value."""
    sc = p.scenario
    _guard(sc)
    n = len(sc.observables)
    position = {o.label: i for i, o in enumerate(sc.observables)}
    ctx_at: list[list[tuple[ContextKey, list[int]]]] = [[] for _ in range(n)]
    for ctx in sc.contexts:
        idxs = [position[l] for l in ctx]
        ctx_at[max(idxs)].append((ctx, idxs))
    values: list[str] = [""] * n
    found: list[tuple[str, ...]] = []

    def consistent_at(i: int) -> bool:
        for ctx, idxs in ctx_at[i]:
            if tuple(values[k] for k in idxs) not in p.supports[ctx]:
                return False
        return True

    def dfs(i: int) -> bool:
        if i == n:
            found.append(tuple(values))
            return stop_at_first
        obs = sc.observables[i]
        choices = (
            (fixed[obs.label],) if obs.label in fixed else obs.outcomes
        )
        for v in choices:
            values[i] = v
            if consistent_at(i) and dfs(i + 1):
                return True
        return False

    dfs(0)
    return found


def global_sections(p: PossibilisticModel) -> list[GlobalAssignment]:
    """All global assignments consistent with every context's support, in
    lexicographic order. Guarded at 2**24 total assignments."""
    labels = tuple(o.label for o in p.scenario.observables)
    return [GlobalAssignment(labels, v) for v in _search(p, {}, False)]


def _check_seed(p: PossibilisticModel, context, outcome) -> tuple[ContextKey, tuple[str, ...]]:
    ctx = tuple(str(l) for l in context)
    t = tuple(str(v) for v in outcome)
    if ctx not in p.supports:
        raise ValueError(f"unknown context {ctx}")
    if len(t) != len(ctx):
        raise ValueError(f"outcome {t} does not fit context {ctx}")
    if t not in p.supports[ctx]:
        raise ValueError(f"seed outcome {t} is not possible in context {ctx}")
    return ctx, t


def extends_to_global(
    p: PossibilisticModel, context: Sequence[str], outcome: Sequence[str]
) -> bool:
    """Does this locally possible outcome occur in some global section?"""
    ctx, t = _check_seed(p, context, outcome)
    return bool(_search(p, dict(zip(ctx, t)), True))


def classify(p: PossibilisticModel) -> Classification:
    """GloballyExtendable / LogicallyContextual / StronglyContextual."""
    sections = global_sections(p)
    if not sections:
        return Classification.STRONGLY_CONTEXTUAL
    for ctx, sup in p.supports.items():
        covered = {s.restrict(ctx) for s in sections}
        if sup - covered:
            return Classification.LOGICALLY_CONTEXTUAL
    return Classification.GLOBALLY_EXTENDABLE


# ------------------------------------------------------------- Liar cycles


@dataclass(frozen=True)
class ImplicationStep:
    """premise forces conclusion inside `context`: every support tuple of the
    context carrying the premise value carries the conclusion value."""

    context: ContextKey
    premise: tuple[str, str]
    conclusion: tuple[str, str]

    def holds_in(self, p: PossibilisticModel) -> bool:
        ctx = self.context
        ix = ctx.index(self.premise[0])
        iy = ctx.index(self.conclusion[0])
        rows = [r for r in p.supports[ctx] if r[ix] == self.premise[1]]
        return bool(rows) and all(r[iy] == self.conclusion[1] for r in rows)


@dataclass(frozen=True)
class LiarCycle:
    """A seed event plus a chain of certain implications whose last step
    assigns some observable a value conflicting with the seed or with an
    earlier step of the same chain."""

    seed: tuple[ContextKey, tuple[str, ...]]
    steps: tuple[ImplicationStep, ...]
    contradiction: tuple[str, str, str]  # observable, established, forced

    def verify(self, p: PossibilisticModel) -> bool:
        """Independent check: seed possible, every step witnessed, chain
        linked, and the final value clashes with an established one."""
        ctx, t = self.seed
        if t not in p.supports[ctx]:
            return False
        established = dict(zip(ctx, t))
        prev: tuple[str, str] | None = None
        for step in self.steps:
            if not step.holds_in(p):
                return False
            if prev is not None and step.premise != prev:
                # chains are linear: each premise is the previous conclusion
                # (the first premise must come from the seed)
                return False
            if prev is None and step.premise[0] not in established:
                return False
            prev = step.conclusion
        obs, old, new = self.contradiction
        if old == new or prev is None or prev != (obs, new):
            return False
        # walk the chain backwards for the established value
        for step in reversed(self.steps[:-1]):
            if step.conclusion[0] == obs:
                return step.conclusion[1] == old
        return established.get(obs) == old


def liar_cycles(
    p: PossibilisticModel,
    seed: tuple[Sequence[str], Sequence[str]],
) -> LiarCycle | None:
    """Shortest chain of certain implications from the seed event to a
    contradiction, breadth-first over forced values; None when propagation
    closes without conflict.

    The seed premise may assign several observables (its whole context); each
    subsequent step is a single-observable implication. Ties are broken by
    scenario context order and in-context observable order, which makes the
    result deterministic.
    """
    ctx, t = _check_seed(p, *seed)
    seed_vals = dict(zip(ctx, t))
    # node = (observable, value); parent links rebuild the linear chain
    parent: dict[tuple[str, str], tuple[tuple[str, str] | None, ImplicationStep | None]] = {}
    queue: deque[tuple[str, str]] = deque()
    for node in zip(ctx, t):
        if node not in parent:
            parent[node] = (None, None)
            queue.append(node)

    def chain_to(node: tuple[str, str]) -> list[ImplicationStep]:
        steps: list[ImplicationStep] = []
        cur: tuple[str, str] | None = node
        while cur is not None:
            up, step = parent[cur]
            if step is not None:
                steps.append(step)
            cur = up
        steps.reverse()
        return steps

    def value_on_path(node: tuple[str, str], obs: str) -> str | None:
        cur: tuple[str, str] | None = node
        while cur is not None:
            if cur[0] == obs:
                return cur[1]
            cur = parent[cur][0]
        return None

    while queue:
        x_node = queue.popleft()
        x_obs, x_val = x_node
        for c in p.scenario.contexts:
            if x_obs not in c:
                continue
            ix = c.index(x_obs)
            rows = [r for r in p.supports[c] if r[ix] == x_val]
            if not rows:
                continue
            for y_obs in c:
                if y_obs == x_obs:
                    continue
                iy = c.index(y_obs)
                y_vals = {r[iy] for r in rows}
                if len(y_vals) != 1:
                    continue
                y_val = next(iter(y_vals))
                step = ImplicationStep(c, (x_obs, x_val), (y_obs, y_val))
                if y_obs in seed_vals and seed_vals[y_obs] != y_val:
                    return LiarCycle(
                        (ctx, t),
                        tuple(chain_to(x_node)) + (step,),
                        (y_obs, seed_vals[y_obs], y_val),
                    )
                on_path = value_on_path(x_node, y_obs)
                if on_path is not None and on_path != y_val:
                    return LiarCycle(
                        (ctx, t),
                        tuple(chain_to(x_node)) + (step,),
                        (y_obs, on_path, y_val),
                    )
                if (y_obs, y_val) not in parent:
                    parent[(y_obs, y_val)] = (x_node, step)
                    queue.append((y_obs, y_val))
    return None


# ------------------------------------------------------------ cycle models


def _cycle_scenario(n: int) -> Scenario:
    obs = tuple(Observable(f"S{i}", ("0", "1")) for i in range(1, n + 1))
    ctxs = tuple(
        (f"S{i}", f"S{i % n + 1}") for i in range(1, n + 1)
    )
    return Scenario(obs, ctxs)


def _cycle_supports(n: int, parity: str) -> dict[ContextKey, frozenset]:
    if parity not in ("odd", "even"):
        raise ValueError(f"parity must be 'odd' or 'even', got {parity!r}")
    equal = frozenset({("0", "0"), ("1", "1")})
    unequal = frozenset({("0", "1"), ("1", "0")})
    sc = _cycle_scenario(n)
    sups = {ctx: equal for ctx in sc.contexts}
    if parity == "odd":
        sups[sc.contexts[-1]] = unequal
    return sups


def cycle_model(n: int, parity: str = "odd") -> PossibilisticModel:
    """n-cycle of certain implications: contexts {S_i, S_{i+1 mod n}}, every
    edge forcing equality except, for odd parity, the closing edge which
    forces inequality. n >= 3."""
    if n < 3:
        raise ValueError(f"cycle needs n >= 3, got {n}")
    return PossibilisticModel(_cycle_scenario(n), _cycle_supports(n, parity))


def cycle_empirical_model(n: int, parity: str = "odd") -> EmpiricalModel:
    """Probabilistic companion of cycle_model: each context puts weight 1/2
    on each of its two possible tuples."""
    if n < 3:
        raise ValueError(f"cycle needs n >= 3, got {n}")
    sc = _cycle_scenario(n)
    sups = _cycle_supports(n, parity)
    tables = {}
    for ctx in sc.contexts:
        probs = {}
        exact = {}
        for tup in sc.joint_outcomes(ctx):
            p = 0.5 if tup in sups[ctx] else 0.0
            probs[tup] = p
            exact[tup] = Fraction(1, 2) if tup in sups[ctx] else Fraction(0)
        tables[ctx] = Distribution(probs, exact)
    return EmpiricalModel(sc, tables)
