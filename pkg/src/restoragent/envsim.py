"""Simulated restoration environment.

Tools are stochastic operators on DegradationProfiles.  Two calibration
modes exist: a mechanistic mode built from per-tool outcome distributions
plus order-dependent interaction rules, and a tabular mode that replays
published per-order fail statistics directly.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

from .core import (
    Degradation,
    DegradationProfile,
    Severity,
    TaskKind,
    degradation_for,
    task_for,
)

_PROB_TOL = 1e-9


class UnknownTool(KeyError):
    """Raised when a tool is applied through an environment it is not part of."""


class Outcome(enum.Enum):
    FULL_SUCCESS = "full"  # target severity -> VERY_LOW
    PARTIAL_SUCCESS = "partial"  # target severity -> LOW
    NO_EFFECT = "none"  # target severity unchanged


@dataclass(frozen=True)
class ToolSpec:
    """A stochastic operator addressing one task."""

    id: str
    task: TaskKind
    p_full: float
    p_partial: float
    p_none: float

    def __post_init__(self):
        total = self.p_full + self.p_partial + self.p_none
        if abs(total - 1.0) > _PROB_TOL:
            raise ValueError(f"outcome probabilities of {self.id!r} sum to {total}, not 1")
        if min(self.p_full, self.p_partial, self.p_none) < 0:
            raise ValueError(f"negative outcome probability in {self.id!r}")

    def probs(self) -> tuple:
        return (self.p_full, self.p_partial, self.p_none)


# --- interaction rule conditions -------------------------------------------


@dataclass(frozen=True)
class DegradationPresent:
    degradation: Degradation
    min_severity: Severity = Severity.MEDIUM

    def matches(self, profile: DegradationProfile) -> bool:
        return profile.severity(self.degradation) >= self.min_severity


@dataclass(frozen=True)
class TaskInHistory:
    task: TaskKind

    def matches(self, profile: DegradationProfile) -> bool:
        return any(task == self.task for task, _ in profile.history)


# --- interaction rule effects ----------------------------------------------


@dataclass(frozen=True)
class FailBoost:
    """Moves probability mass from the success outcomes to NO_EFFECT."""

    delta: float

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"FailBoost delta out of range: {self.delta}")


@dataclass(frozen=True)
class SideEffect:
    """With probability p, raises another degradation by some levels."""

    degradation: Degradation
    levels: int = 1
    p: float = 1.0

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("SideEffect must raise severity by at least one level")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"SideEffect probability out of range: {self.p}")


@dataclass(frozen=True)
class InteractionRule:
    task: TaskKind  # the affected task
    condition: object  # DegradationPresent | TaskInHistory
    effect: object  # FailBoost | SideEffect


def compose_failboosts(probs: tuple, deltas) -> tuple:
    """Apply FailBoost deltas in order; clamp at zero and renormalize.

    Each delta moves mass from FULL/PARTIAL (proportionally to their
    current mass) onto NO_EFFECT.
    """
    full, partial, none = probs
    for delta in deltas:
        success = full + partial
        moved = min(delta, success)
        if success > 0:
            full -= moved * full / success
            partial -= moved * partial / success
        none += moved
    total = full + partial + none
    return (full / total, partial / total, none / total)


# --- tabular calibration ----------------------------------------------------


@dataclass(frozen=True)
class OrderStats:
    """Per-degradation fail probabilities for one execution order."""

    order: tuple  # (TaskKind, ...)
    fail: dict  # Degradation -> probability
    stated_total_pct: int | None = None  # published total, where available


@dataclass
class TabularCalibration:
    """Fail statistics keyed by (degradation set, execution order)."""

    entries: dict = field(default_factory=dict)  # frozenset[Degradation] -> [OrderStats]

    def add(self, stats: OrderStats):
        key = frozenset(degradation_for(t) for t in stats.order)
        self.entries.setdefault(key, []).append(stats)

    def orders(self, combo_key: frozenset) -> list:
        return list(self.entries.get(frozenset(combo_key), []))

    def fail_prob(self, combo_key: frozenset, prefix: tuple) -> float:
        """Fail probability of the last task in ``prefix`` under this order.

        Falls back to the marginal mean across orders when the attempted
        prefix matches no recorded order, and to 0 for unknown mixtures.
        """
        task = prefix[-1]
        degradation = degradation_for(task)
        orders = self.entries.get(frozenset(combo_key))
        if not orders:
            return 0.0
        for stats in orders:
            if stats.order[: len(prefix)] == prefix and degradation in stats.fail:
                return stats.fail[degradation]
        marginal = [s.fail[degradation] for s in orders if degradation in s.fail]
        if marginal:
            return sum(marginal) / len(marginal)
        return 0.0


def reference_calibration() -> TabularCalibration:
    """Published group-A fail statistics: 8 mixtures x 2 orders."""
    T = TaskKind
    D = Degradation
    rows = [
        # (order, {degradation: fail prob}, stated total %)
        ((T.DENOISING, T.BRIGHTENING), {D.LOW_LIGHT: 0.22, D.NOISE: 0.43}, 32),
        ((T.BRIGHTENING, T.DENOISING), {D.LOW_LIGHT: 0.28, D.NOISE: 0.42}, 35),
        ((T.DEFOCUS_DEBLURRING, T.DEHAZING), {D.DEFOCUS_BLUR: 0.00, D.HAZE: 0.36}, 18),
        ((T.DEHAZING, T.DEFOCUS_DEBLURRING), {D.DEFOCUS_BLUR: 0.00, D.HAZE: 0.40}, 20),
        ((T.JPEG_ARTIFACT_REMOVAL, T.DEFOCUS_DEBLURRING),
         {D.DEFOCUS_BLUR: 0.10, D.JPEG_ARTIFACT: 0.31}, 20),
        ((T.DEFOCUS_DEBLURRING, T.JPEG_ARTIFACT_REMOVAL),
         {D.DEFOCUS_BLUR: 0.08, D.JPEG_ARTIFACT: 0.48}, 28),
        ((T.MOTION_DEBLURRING, T.BRIGHTENING), {D.MOTION_BLUR: 0.22, D.LOW_LIGHT: 0.25}, 23),
        ((T.BRIGHTENING, T.MOTION_DEBLURRING), {D.MOTION_BLUR: 0.28, D.LOW_LIGHT: 0.25}, 26),
        ((T.MOTION_DEBLURRING, T.SUPER_RESOLUTION),
         {D.MOTION_BLUR: 0.23, D.LOW_RESOLUTION: 0.09}, 16),
        ((T.SUPER_RESOLUTION, T.MOTION_DEBLURRING),
         {D.MOTION_BLUR: 0.31, D.LOW_RESOLUTION: 0.06}, 19),
        ((T.DENOISING, T.JPEG_ARTIFACT_REMOVAL), {D.NOISE: 0.38, D.JPEG_ARTIFACT: 0.13}, 26),
        ((T.JPEG_ARTIFACT_REMOVAL, T.DENOISING), {D.NOISE: 0.38, D.JPEG_ARTIFACT: 0.14}, 26),
        ((T.DERAINING, T.DEHAZING), {D.RAIN: 0.05, D.HAZE: 0.37}, 21),
        ((T.DEHAZING, T.DERAINING), {D.RAIN: 0.25, D.HAZE: 0.24}, 24),
        ((T.DERAINING, T.SUPER_RESOLUTION), {D.RAIN: 0.26, D.LOW_RESOLUTION: 0.02}, 14),
        ((T.SUPER_RESOLUTION, T.DERAINING), {D.RAIN: 0.63, D.LOW_RESOLUTION: 0.00}, 32),
    ]
    calibration = TabularCalibration()
    for order, fail, total in rows:
        calibration.add(OrderStats(order, fail, total))
    return calibration


# --- environment ------------------------------------------------------------

TABULAR_TOOL_PREFIX = "tabular:"


@dataclass
class Environment:
    """Immutable after construction; apply_tool is reentrant given distinct streams."""

    mode: str  # "mechanistic" | "tabular"
    tools: list = field(default_factory=list)  # [ToolSpec]
    rules: list = field(default_factory=list)  # [InteractionRule]
    calibration: TabularCalibration | None = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("mechanistic", "tabular"):
            raise ValueError(f"unknown environment mode: {self.mode!r}")
        if self.mode == "tabular":
            if self.calibration is None:
                raise ValueError("tabular environment requires a calibration")
            if not self.tools:
                self.tools = [
                    ToolSpec(f"{TABULAR_TOOL_PREFIX}{task.value}", task, 1.0, 0.0, 0.0)
                    for task in TaskKind
                ]
        self._by_id = {tool.id: tool for tool in self.tools}

    def tools_for(self, task: TaskKind) -> list:
        return [tool for tool in self.tools if tool.task == task]

    def tool(self, tool_id: str) -> ToolSpec:
        try:
            return self._by_id[tool_id]
        except KeyError:
            raise UnknownTool(tool_id) from None


def _apply_outcome(profile, task, outcome):
    degradation = degradation_for(task)
    if outcome is Outcome.FULL_SUCCESS:
        return profile.with_severity(degradation, Severity.VERY_LOW)
    if outcome is Outcome.PARTIAL_SUCCESS:
        if profile.severity(degradation) > Severity.LOW:
            return profile.with_severity(degradation, Severity.LOW)
        return profile
    return profile


def _combination_key(state: DegradationProfile) -> frozenset:
    present = set(state.present())
    for task, _ in state.history:
        present.add(degradation_for(task))
    return frozenset(present)


def apply_tool(
    env: Environment,
    state: DegradationProfile,
    tool: ToolSpec,
    rng,
) -> DegradationProfile:
    """Apply one tool; returns a new profile, never mutating the input."""
    tool = env.tool(tool.id if isinstance(tool, ToolSpec) else tool)

    if env.mode == "tabular":
        combo = _combination_key(state)
        hist = state.tasks_in_history()
        if tool.task in hist:
            # Retry of an already-attempted task: same position as before.
            prefix = hist[: hist.index(tool.task) + 1]
        else:
            prefix = hist + (tool.task,)
        p_fail = env.calibration.fail_prob(combo, prefix)
        outcome = Outcome.NO_EFFECT if rng.random() < p_fail else Outcome.FULL_SUCCESS
        result = _apply_outcome(state, tool.task, outcome)
        return result.with_history_entry(tool.task, tool.id)

    matching = [r for r in env.rules if r.task == tool.task and r.condition.matches(state)]
    deltas = [r.effect.delta for r in matching if isinstance(r.effect, FailBoost)]
    probs = compose_failboosts(tool.probs(), deltas)
    draw = rng.random()
    if draw < probs[0]:
        outcome = Outcome.FULL_SUCCESS
    elif draw < probs[0] + probs[1]:
        outcome = Outcome.PARTIAL_SUCCESS
    else:
        outcome = Outcome.NO_EFFECT
    result = _apply_outcome(state, tool.task, outcome)
    for rule in matching:
        effect = rule.effect
        if isinstance(effect, SideEffect) and rng.random() < effect.p:
            current = result.severity(effect.degradation)
            result = result.with_severity(effect.degradation, current.raised(effect.levels))
    return result.with_history_entry(tool.task, tool.id)


def default_mechanistic_env(seed: int = 0) -> Environment:
    """A hand-built environment with nontrivial order structure.

    Every task has a strong and a weak tool; interactions: dehazing is
    hampered by present noise, deraining is hampered once super-resolution
    ran, and motion deblurring can worsen compression artifacts.
    """
    tools = []
    for task in TaskKind:
        name = task.value.replace(" ", "-")
        tools.append(ToolSpec(f"{name}:strong", task, 0.75, 0.20, 0.05))
        tools.append(ToolSpec(f"{name}:weak", task, 0.40, 0.30, 0.30))
    rules = [
        InteractionRule(
            TaskKind.DEHAZING,
            DegradationPresent(Degradation.NOISE, Severity.MEDIUM),
            FailBoost(0.5),
        ),
        InteractionRule(
            TaskKind.DERAINING,
            TaskInHistory(TaskKind.SUPER_RESOLUTION),
            FailBoost(0.6),
        ),
        InteractionRule(
            TaskKind.MOTION_DEBLURRING,
            DegradationPresent(Degradation.JPEG_ARTIFACT, Severity.MEDIUM),
            SideEffect(Degradation.JPEG_ARTIFACT, levels=1, p=0.5),
        ),
    ]
    return Environment("mechanistic", tools, rules, None, seed)


def reference_tabular_env(seed: int = 0) -> Environment:
    """Tabular environment replaying the published group-A statistics."""
    return Environment("tabular", [], [], reference_calibration(), seed)


# --- JSON configuration -----------------------------------------------------


def _condition_to_dict(condition) -> dict:
    if isinstance(condition, DegradationPresent):
        return {
            "kind": "degradation-present",
            "degradation": condition.degradation.value,
            "min_severity": condition.min_severity.label,
        }
    return {"kind": "task-in-history", "task": condition.task.value}


def _condition_from_dict(data: dict):
    if data["kind"] == "degradation-present":
        return DegradationPresent(
            Degradation(data["degradation"]),
            Severity.from_label(data.get("min_severity", "medium")),
        )
    if data["kind"] == "task-in-history":
        return TaskInHistory(TaskKind(data["task"]))
    raise ValueError(f"unknown condition kind: {data['kind']!r}")


def _effect_to_dict(effect) -> dict:
    if isinstance(effect, FailBoost):
        return {"kind": "fail-boost", "delta": effect.delta}
    return {
        "kind": "side-effect",
        "degradation": effect.degradation.value,
        "levels": effect.levels,
        "p": effect.p,
    }


def _effect_from_dict(data: dict):
    if data["kind"] == "fail-boost":
        return FailBoost(data["delta"])
    if data["kind"] == "side-effect":
        return SideEffect(
            Degradation(data["degradation"]), data.get("levels", 1), data.get("p", 1.0)
        )
    raise ValueError(f"unknown effect kind: {data['kind']!r}")


def env_to_dict(env: Environment) -> dict:
    data = {"mode": env.mode, "seed": env.seed}
    if env.mode == "mechanistic" or env.tools:
        data["tools"] = [
            {
                "id": t.id,
                "task": t.task.value,
                "outcome": {"full": t.p_full, "partial": t.p_partial, "none": t.p_none},
            }
            for t in env.tools
            if not t.id.startswith(TABULAR_TOOL_PREFIX)
        ]
    if env.rules:
        data["rules"] = [
            {
                "task": r.task.value,
                "condition": _condition_to_dict(r.condition),
                "effect": _effect_to_dict(r.effect),
            }
            for r in env.rules
        ]
    if env.calibration is not None:
        data["calibration"] = calibration_to_dict(env.calibration)
    return data


def env_from_dict(data: dict) -> Environment:
    tools = [
        ToolSpec(
            t["id"],
            TaskKind(t["task"]),
            t["outcome"]["full"],
            t["outcome"]["partial"],
            t["outcome"]["none"],
        )
        for t in data.get("tools", [])
    ]
    rules = [
        InteractionRule(
            TaskKind(r["task"]),
            _condition_from_dict(r["condition"]),
            _effect_from_dict(r["effect"]),
        )
        for r in data.get("rules", [])
    ]
    calibration = None
    if "calibration" in data:
        calibration = calibration_from_dict(data["calibration"])
    return Environment(data["mode"], tools, rules, calibration, data.get("seed", 0))


def calibration_to_dict(calibration: TabularCalibration) -> dict:
    rows = []
    for key in sorted(calibration.entries, key=lambda k: sorted(d.value for d in k)):
        for stats in calibration.entries[key]:
            row = {
                "order": [t.value for t in stats.order],
                "fail": {d.value: p for d, p in sorted(stats.fail.items(), key=lambda kv: kv[0].value)},
            }
            if stats.stated_total_pct is not None:
                row["stated_total_pct"] = stats.stated_total_pct
            rows.append(row)
    return {"orders": rows}


def calibration_from_dict(data: dict) -> TabularCalibration:
    calibration = TabularCalibration()
    for row in data.get("orders", []):
        calibration.add(
            OrderStats(
                tuple(TaskKind(t) for t in row["order"]),
                {Degradation(d): p for d, p in row["fail"].items()},
                row.get("stated_total_pct"),
            )
        )
    return calibration


def load_env(path) -> Environment:
    with open(path, encoding="utf-8") as fh:
        return env_from_dict(json.load(fh))


def save_env(env: Environment, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(env_to_dict(env), fh, indent=2, sort_keys=True)
        fh.write("\n")
