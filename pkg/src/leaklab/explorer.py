"""Exhaustive bounded exploration of schedules and attacker knowledge.

The attacker model is possibilistic: an observation is the sequence of
printed payloads (with timestamps unless timing-blind), and the knowledge
set of an observation is the set of secret valuations that can produce it
under some schedule.  An observation leaks when its knowledge set is a
strict subset of the full secret domain.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from . import lang, semantics
from .errors import LeakLabError

SecretValuation = tuple[tuple[str, semantics.Value], ...]


@dataclass(frozen=True)
class Observation:
    """What the attacker sees of one maximal execution."""

    events: tuple[tuple[str, Optional[int]], ...]  # (payload, timestamp or None)

    @property
    def letters(self) -> str:
        return " ".join(p for p, _ in self.events)

    def timing_blind(self) -> "Observation":
        return Observation(tuple((p, None) for p, _ in self.events))

    def sort_key(self):
        return tuple((p, -1 if t is None else t) for p, t in self.events)


@dataclass(frozen=True)
class ExploreBounds:
    max_steps: int = 200
    max_configs: int = 200_000
    timing_blind: bool = False
    observe_thread_ids: bool = False

    def __post_init__(self) -> None:
        if self.max_steps <= 0 or self.max_configs <= 0:
            raise LeakLabError("exploration bounds must be positive")


@dataclass(frozen=True)
class ExploreResult:
    observations: frozenset[tuple[Observation, bool]]  # (observation, terminated?)
    complete: bool
    truncated: int
    deadlocked: int


@dataclass
class KnowledgeReport:
    secret_domain: tuple[SecretValuation, ...]
    knowledge: dict[Observation, frozenset[SecretValuation]]
    leaky: dict[Observation, bool]
    verdict: str  # "leak-found" | "no-leak" | "inconclusive"
    complete: bool
    timing_blind: bool

    def leaky_observations(self) -> list[Observation]:
        return sorted((o for o, f in self.leaky.items() if f),
                      key=Observation.sort_key)

    def to_json(self) -> dict:
        obs_rows = []
        for obs in sorted(self.knowledge, key=Observation.sort_key):
            obs_rows.append({
                "letters": obs.letters,
                "events": [
                    {"payload": p, "timestamp": t} if t is not None else {"payload": p}
                    for p, t in obs.events
                ],
                "knowledge": [dict(val) for val in sorted(self.knowledge[obs])],
                "leaky": self.leaky[obs],
            })
        return {
            "secret_domain": [dict(v) for v in self.secret_domain],
            "observations": obs_rows,
            "verdict": self.verdict,
            "complete": self.complete,
            "timing_blind": self.timing_blind,
        }


def secret_domain_of(program: lang.Program) -> tuple[SecretValuation, ...]:
    """Cartesian product of the declared secret variables' domains."""
    secrets = [d for d in program.declarations if d.secret]
    if not secrets:
        return ()
    combos = itertools.product(*(d.domain for d in secrets))
    return tuple(
        tuple(zip((d.name for d in secrets), combo)) for combo in combos
    )


def _project(config: semantics.Configuration, bounds: ExploreBounds) -> Observation:
    events = []
    for ev in config.trace:
        payload = ev.payload
        if bounds.observe_thread_ids:
            payload = f"{ev.thread}:{payload}"
        events.append((payload, None if bounds.timing_blind else ev.timestamp))
    return Observation(tuple(events))


def explore(program: lang.Program, init_public: semantics.Store,
            secret_val: dict, bounds: ExploreBounds,
            costs: semantics.CostModel = semantics.CostModel(),
            jobs: int = 1) -> ExploreResult:
    """All observations reachable under any schedule, within bounds.

    Depth-first traversal of the schedule tree with deduplication of
    identical (configuration, steps-used) pairs, which collapses the
    diamonds produced by commuting independent steps.  With ``jobs`` > 1
    the top-level subtrees run in parallel and the configuration budget
    applies per subtree; results merge associatively, so reports for a
    given (bounds, jobs) pair are deterministic.
    """
    store = dict(program.initial_store())
    store.update(init_public)
    for name, value in secret_val.items():
        if value not in program.decl(name).domain:
            raise LeakLabError(f"secret value {name}={value!r} outside domain")
        store[name] = value
    root = semantics.initial_configuration(program, store)

    def walk_subtree(start: semantics.Configuration, start_steps: int) -> tuple:
        observations: set[tuple[Observation, bool]] = set()
        counters = {"configs": 0, "truncated": 0, "deadlocked": 0, "incomplete": False}
        visited: set = set()
        stack = [(start, start_steps)]
        while stack:
            config, steps_used = stack.pop()
            key = (config, steps_used)
            if key in visited:
                continue
            visited.add(key)
            counters["configs"] += 1
            if counters["configs"] > bounds.max_configs:
                counters["incomplete"] = True
                break
            if config.all_done():
                observations.add((_project(config, bounds), True))
                continue
            if steps_used >= bounds.max_steps:
                counters["truncated"] += 1
                counters["incomplete"] = True
                observations.add((_project(config, bounds), False))
                continue
            choices = semantics.enabled(program, config)
            if not choices:
                counters["deadlocked"] += 1
                observations.add((_project(config, bounds), False))
                continue
            for choice in sorted(choices, key=lambda c: c.thread, reverse=True):
                stack.append((semantics.step(program, config, choice, costs),
                              steps_used + 1))
        return observations, counters

    first_choices = sorted(semantics.enabled(program, root), key=lambda c: c.thread)
    if jobs > 1 and len(first_choices) > 1:
        # Disjoint top-level subtrees explored in parallel, each with its own
        # accumulator; results merge associatively so the final report is
        # independent of completion order.
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(
                lambda ch: walk_subtree(semantics.step(program, root, ch, costs), 1),
                first_choices))
    else:
        parts = [walk_subtree(root, 0)]

    observations: set[tuple[Observation, bool]] = set()
    truncated = deadlocked = 0
    incomplete = False
    for obs, counters in parts:
        observations |= obs
        truncated += counters["truncated"]
        deadlocked += counters["deadlocked"]
        incomplete = incomplete or counters["incomplete"]

    return ExploreResult(
        observations=frozenset(observations),
        complete=not incomplete,
        truncated=truncated,
        deadlocked=deadlocked,
    )


def knowledge_partition(program: lang.Program, init_public: semantics.Store,
                        secret_domain: Optional[tuple[SecretValuation, ...]],
                        bounds: ExploreBounds,
                        costs: semantics.CostModel = semantics.CostModel(),
                        jobs: int = 1) -> KnowledgeReport:
    """Knowledge set K(o) per observation o, and the leak verdict."""
    if secret_domain is None:
        secret_domain = secret_domain_of(program)
    knowledge: dict[Observation, set[SecretValuation]] = {}
    complete = True
    for valuation in secret_domain:
        result = explore(program, init_public, dict(valuation), bounds, costs, jobs)
        complete = complete and result.complete
        for obs, _terminated in result.observations:
            knowledge.setdefault(obs, set()).add(valuation)
    if not secret_domain:
        result = explore(program, init_public, {}, bounds, costs, jobs)
        complete = complete and result.complete
        for obs, _terminated in result.observations:
            knowledge.setdefault(obs, set())

    full = frozenset(secret_domain)
    leaky = {obs: bool(vals) and frozenset(vals) < full
             for obs, vals in knowledge.items()}
    if any(leaky.values()):
        verdict = "leak-found"
    elif complete:
        verdict = "no-leak"
    else:
        verdict = "inconclusive"
    return KnowledgeReport(
        secret_domain=tuple(secret_domain),
        knowledge={o: frozenset(v) for o, v in knowledge.items()},
        leaky=leaky,
        verdict=verdict,
        complete=complete,
        timing_blind=bounds.timing_blind,
    )


@dataclass
class DurationStats:
    """Achievable clock differences between two locations, per secret value."""

    durations: dict[SecretValuation, frozenset[int]]
    unreached: list[SecretValuation] = field(default_factory=list)
    complete: bool = True


def duration_stats(program: lang.Program, loc_from: lang.LocationId,
                   loc_to: lang.LocationId,
                   secret_domain: Optional[tuple[SecretValuation, ...]],
                   bounds: ExploreBounds,
                   costs: semantics.CostModel = semantics.CostModel(),
                   init_public: Optional[semantics.Store] = None) -> DurationStats:
    """For each secret valuation, the set of achievable ``t@to - t@from``.

    Each arrival at ``loc_from`` pairs with the next arrival at ``loc_to``
    after it, within every maximal execution reachable under the bounds.
    """
    if loc_from.thread != loc_to.thread:
        raise LeakLabError("duration endpoints must lie in the same thread")
    if loc_from.index >= loc_to.index:
        raise LeakLabError("duration start must precede the end location")
    if secret_domain is None:
        secret_domain = secret_domain_of(program)
    if not secret_domain:
        secret_domain = ((),)

    store_base = dict(program.initial_store())
    if init_public:
        store_base.update(init_public)

    stats: dict[SecretValuation, set[int]] = {v: set() for v in secret_domain}
    unreached: list[SecretValuation] = []
    complete = True

    for valuation in secret_domain:
        store = dict(store_base)
        store.update(dict(valuation))
        root = semantics.initial_configuration(program, store)
        seen_any = False
        visited: set = set()
        stack = [(root, 0)]
        while stack:
            config, steps_used = stack.pop()
            key = (config, steps_used)
            if key in visited:
                continue
            visited.add(key)
            if len(visited) > bounds.max_configs:
                complete = False
                break
            choices = semantics.enabled(program, config)
            maximal = config.all_done() or not choices
            if not maximal and steps_used >= bounds.max_steps:
                complete = False
                maximal = True
            if maximal:
                snaps = config.snapshot_dict()
                starts = snaps.get(loc_from, ())
                ends = snaps.get(loc_to, ())
                for start in starts:
                    nxt = [e for e in ends if e >= start]
                    if nxt:
                        stats[valuation].add(min(nxt) - start)
                        seen_any = True
                continue
            for choice in choices:
                stack.append((semantics.step(program, config, choice, costs),
                              steps_used + 1))
        if not seen_any:
            unreached.append(valuation)

    return DurationStats(
        durations={v: frozenset(s) for v, s in stats.items()},
        unreached=unreached,
        complete=complete,
    )
