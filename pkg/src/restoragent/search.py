"""Depth-first subtask-order search with reflection, rollback and compromise."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .core import DegradationProfile, degradation_for
from .envsim import Environment, FailBoost, SideEffect, apply_tool
from .execution import (
    ExecutionPolicy,
    Status,
    default_comparator,
    execute_subtask,
)
from .perception import evaluate_agenda
from .rng import Stream
from .scheduling import Unschedulable, reschedule


class NondeterministicEnv(ValueError):
    """The brute-force oracle requires a fully deterministic environment."""


@dataclass
class Counters:
    rollbacks: int = 0
    reschedules: int = 0
    compromises: int = 0
    invocations: int = 0
    nodes: int = 0

    def to_dict(self) -> dict:
        return {
            "rollbacks": self.rollbacks,
            "reschedules": self.reschedules,
            "compromises": self.compromises,
            "invocations": self.invocations,
            "nodes": self.nodes,
        }


@dataclass
class SearchTrace:
    status: str = "success"  # "success" | "compromise" | "error"
    counters: Counters = field(default_factory=Counters)
    agenda: list = field(default_factory=list)
    tree: list = field(default_factory=list)
    final: dict = field(default_factory=dict)
    error: str = ""

    def to_dict(self) -> dict:
        data = {
            "status": self.status,
            "counters": self.counters.to_dict(),
            "agenda": self.agenda,
            "tree": self.tree,
            "final": self.final,
        }
        if self.error:
            data["error"] = self.error
        return data


@dataclass(frozen=True)
class SearchResult:
    """A profile annotated with the path bookkeeping compromise needs."""

    profile: DegradationProfile
    completed: frozenset  # tasks whose reflection passed on the producing path
    branch_root: object  # first-level subtask of the producing branch, or None


@dataclass
class WorkflowDeps:
    scheduler: object
    evaluator: object
    tools: dict  # TaskKind -> [ToolAdapter]
    policy: ExecutionPolicy = field(default_factory=ExecutionPolicy)
    use_reflection: bool = True
    use_rollback: bool = True


def dfs(profile, plan, deps: WorkflowDeps, stream: Stream, trace: SearchTrace | None = None):
    """Depth-first search over subtask orders; returns (SearchResult, bool).

    Sibling branches always restart from the same pre-branch profile;
    rollback is value restoration, never undo-mutation.
    """
    trace = trace or SearchTrace()
    return _dfs(profile, tuple(plan), deps, stream, trace.counters, trace.tree)


def _dfs(profile, plan, deps, stream, counters, children):
    if not plan:
        return SearchResult(profile, frozenset(), None), True
    counters.nodes += 1
    attempts = set()
    inferiors = []
    branch = 0
    while True:
        subtask = plan[0]
        node = {"plan": [t.value for t in plan], "subtask": subtask.value}
        children.append(node)
        outcome = execute_subtask(
            subtask,
            profile,
            deps.tools,
            deps.evaluator,
            deps.policy,
            stream.child("branch", branch),
            use_reflection=deps.use_reflection,
        )
        counters.invocations += outcome.invocations
        node["tools_tried"] = list(outcome.tools_tried)
        node["invocations"] = outcome.invocations
        node["status"] = outcome.status.value
        if outcome.status is Status.SUCCESS:
            node["children"] = []
            sub_result, success = _dfs(
                outcome.result,
                plan[1:],
                deps,
                stream.child("branch", branch, "sub"),
                counters,
                node["children"],
            )
            annotated = SearchResult(
                sub_result.profile, sub_result.completed | {subtask}, subtask
            )
            if success:
                node["verdict"] = "accepted"
                return annotated, True
            node["verdict"] = "subtree-failed"
            branch_best = annotated
        else:
            node["verdict"] = "rejected"
            branch_best = SearchResult(outcome.result, frozenset(), subtask)
        attempts.add(subtask)
        inferiors.append(branch_best)
        if len(attempts) != len(plan):
            counters.rollbacks += 1
            counters.reschedules += 1
            plan = tuple(
                reschedule(
                    deps.scheduler,
                    plan,
                    attempts,
                    stream.child("reschedule", branch).generator(),
                )
            )
            branch += 1
        else:
            compare = default_comparator(
                deps.evaluator, stream.child("pickbest").generator()
            )
            best = inferiors[0]
            for challenger in inferiors[1:]:
                if compare(best.profile, challenger.profile) is not best.profile:
                    best = challenger
            return best, False


def run_workflow(initial: DegradationProfile, deps: WorkflowDeps, seed: int, run_key=()):
    """Outer control loop: evaluate, schedule, search, compromise until done."""
    stream = Stream(seed, "workflow", *run_key)
    trace = SearchTrace()
    try:
        agenda = evaluate_agenda(
            deps.evaluator, initial, stream.child("evaluate").generator()
        )
        trace.agenda = sorted(t.value for t in agenda)
        if not agenda:
            trace.final = initial.to_dict()
            return initial, trace

        if not deps.use_rollback or not deps.use_reflection:
            return _run_straight_line(initial, agenda, deps, stream, trace)

        plan = tuple(
            deps.scheduler.schedule(agenda, rng=stream.child("schedule", 0).generator())
        )
        profile = initial
        outer = 0
        while True:
            result, success = _dfs(
                profile, plan, deps, stream.child("outer", outer), trace.counters, trace.tree
            )
            profile = result.profile
            if success:
                trace.status = "success"
                break
            trace.counters.compromises += 1
            trace.status = "compromise"
            remaining = frozenset(plan) - result.completed - {result.branch_root}
            if not remaining:
                break
            outer += 1
            plan = tuple(
                deps.scheduler.schedule(
                    remaining, rng=stream.child("schedule", outer).generator()
                )
            )
        trace.final = profile.to_dict()
        return profile, trace
    except (Unschedulable, ValueError) as exc:
        trace.status = "error"
        trace.error = f"{type(exc).__name__}: {exc}"
        trace.final = initial.to_dict()
        return initial, trace


def _run_straight_line(initial, agenda, deps, stream, trace):
    """Ablated control flow: execute the plan once, keep best-effort results."""
    plan = tuple(
        deps.scheduler.schedule(agenda, rng=stream.child("schedule", 0).generator())
    )
    profile = initial
    all_passed = True
    for i, subtask in enumerate(plan):
        outcome = execute_subtask(
            subtask,
            profile,
            deps.tools,
            deps.evaluator,
            deps.policy,
            stream.child("straight", i),
            use_reflection=deps.use_reflection,
        )
        trace.counters.invocations += outcome.invocations
        trace.counters.nodes += 1
        trace.tree.append(
            {
                "plan": [t.value for t in plan[i:]],
                "subtask": subtask.value,
                "tools_tried": list(outcome.tools_tried),
                "invocations": outcome.invocations,
                "status": outcome.status.value,
                "verdict": "accepted" if outcome.status is Status.SUCCESS else "kept-best-effort",
                "children": [],
            }
        )
        if outcome.status is not Status.SUCCESS:
            all_passed = False
        profile = outcome.result
    trace.status = "success" if all_passed else "compromise"
    trace.final = profile.to_dict()
    return profile, trace


# --- exhaustive test oracle -------------------------------------------------


class _HalfRng:
    """Degenerate-distribution sampler; only valid for deterministic envs."""

    def random(self):
        return 0.5


def _check_deterministic(env: Environment):
    if env.mode != "mechanistic":
        raise NondeterministicEnv("oracle requires a mechanistic environment")
    for tool in env.tools:
        if any(p not in (0.0, 1.0) for p in tool.probs()):
            raise NondeterministicEnv(f"tool {tool.id!r} has a non-degenerate outcome")
    for rule in env.rules:
        effect = rule.effect
        if isinstance(effect, FailBoost) and effect.delta not in (0.0, 1.0):
            raise NondeterministicEnv("FailBoost delta must be 0 or 1")
        if isinstance(effect, SideEffect) and effect.p not in (0.0, 1.0):
            raise NondeterministicEnv("SideEffect probability must be 0 or 1")


def brute_force_oracle(profile, agenda, env: Environment, policy: ExecutionPolicy):
    """Enumerates every subtask order and tool-choice sequence.

    Returns (success, witness_plan).  Success means some complete sequence
    keeps every addressed degradation at or below the acceptance level.
    """
    _check_deterministic(env)
    agenda = sorted(frozenset(agenda), key=lambda t: t.value)
    if len(agenda) > 4:
        raise ValueError("oracle enumeration is limited to agendas of size 4")
    rng = _HalfRng()
    for perm in itertools.permutations(agenda):
        if _attempt_order(profile, perm, env, policy, rng):
            return True, tuple(perm)
    return False, None


def _attempt_order(state, order, env, policy, rng):
    if not order:
        return True
    task = order[0]
    for tool in env.tools_for(task):
        result = apply_tool(env, state, tool, rng)
        if result.severity(degradation_for(task)) <= policy.accept_candidate:
            if _attempt_order(result, order[1:], env, policy, rng):
                return True
    return False
