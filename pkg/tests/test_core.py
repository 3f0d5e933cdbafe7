import copy

import pytest
from hypothesis import given, strategies as st

from restoragent.core import (
    ALL_DEGRADATIONS,
    ALL_TASKS,
    Degradation,
    DegradationProfile,
    Severity,
    TaskKind,
    builtin_combinations,
    combinations_in_group,
    degradation_for,
    task_for,
)


def test_task_degradation_bijection():
    assert len(ALL_DEGRADATIONS) == 8
    assert len(ALL_TASKS) == 8
    for d in Degradation:
        assert degradation_for(task_for(d)) is d
    for t in TaskKind:
        assert task_for(degradation_for(t)) is t


@pytest.mark.parametrize(
    "degradation,task",
    [
        (Degradation.RAIN, TaskKind.DERAINING),
        (Degradation.LOW_RESOLUTION, TaskKind.SUPER_RESOLUTION),
        (Degradation.JPEG_ARTIFACT, TaskKind.JPEG_ARTIFACT_REMOVAL),
    ],
)
def test_task_for_examples(degradation, task):
    assert task_for(degradation) is task


def test_severity_total_order():
    levels = list(Severity)
    assert levels == sorted(levels)
    assert Severity.VERY_LOW < Severity.VERY_HIGH
    for s in Severity:
        assert not s < s
    assert Severity.VERY_HIGH.raised() is Severity.VERY_HIGH
    assert Severity.VERY_LOW.lowered() is Severity.VERY_LOW
    assert Severity.MEDIUM.raised() is Severity.HIGH
    assert Severity.from_label("Very Low") is Severity.VERY_LOW


def test_builtin_combinations_shape():
    combos = builtin_combinations()
    assert len(combos) == 16
    assert len(combinations_in_group("A")) == 8
    assert len(combinations_in_group("B")) == 4
    assert len(combinations_in_group("C")) == 4
    for combo in combos:
        expected = 3 if combo.group == "C" else 2
        assert len(combo.degradations) == expected
        assert len(set(combo.degradations)) == expected


def test_builtin_combinations_membership():
    a_keys = [c.key for c in combinations_in_group("A")]
    assert frozenset({Degradation.RAIN, Degradation.HAZE}) in a_keys
    assert frozenset({Degradation.DEFOCUS_BLUR, Degradation.JPEG_ARTIFACT}) in a_keys
    b_keys = [c.key for c in combinations_in_group("B")]
    assert frozenset({Degradation.MOTION_BLUR, Degradation.JPEG_ARTIFACT}) in b_keys
    assert frozenset({Degradation.HAZE, Degradation.NOISE}) in b_keys
    c_keys = [c.key for c in combinations_in_group("C")]
    assert frozenset(
        {Degradation.HAZE, Degradation.MOTION_BLUR, Degradation.LOW_RESOLUTION}
    ) in c_keys


def test_profile_defaults_and_presence():
    profile = DegradationProfile()
    assert profile.severity(Degradation.RAIN) is Severity.VERY_LOW
    assert profile.present() == frozenset()
    hazy = profile.with_severity(Degradation.HAZE, Severity.MEDIUM)
    assert hazy.is_present(Degradation.HAZE)
    assert not hazy.with_severity(Degradation.HAZE, Severity.LOW).is_present(Degradation.HAZE)


def test_profile_roundtrip():
    profile = DegradationProfile(
        {Degradation.NOISE: Severity.HIGH},
        ((TaskKind.DERAINING, "t1"),),
        "sample-1",
    )
    assert DegradationProfile.from_dict(profile.to_dict()) == profile


severities = st.sampled_from(list(Severity))
degradations = st.sampled_from(list(Degradation))


@given(
    initial=st.dictionaries(degradations, severities, max_size=8),
    mutations=st.lists(st.tuples(degradations, severities), max_size=10),
)
def test_profile_copy_isolation(initial, mutations):
    original = DegradationProfile(dict(initial), (), "origin")
    snapshot = copy.deepcopy(original)
    clone = original.copy()
    for degradation, severity in mutations:
        clone.severities[degradation] = severity
        clone = clone.with_history_entry(task_for(degradation), "tool")
    assert original == snapshot
