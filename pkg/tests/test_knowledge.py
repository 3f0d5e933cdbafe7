import json

import pytest

from restoragent.core import Degradation, TaskKind, task_for
from restoragent.knowledge import (
    EPSILON_TIE,
    InconsistentTrial,
    KnowledgeBase,
    PrecedenceRule,
    SchemaError,
    aggregate,
    display_percent,
    distill,
    kb_from_dict,
    kb_to_dict,
    load_kb,
    reference_kb,
    reference_records,
    render_experience_text,
    retrieve,
    save_kb,
)

D = Degradation
T = TaskKind

RAIN_HAZE = frozenset({D.RAIN, D.HAZE})


def _trials(combination, order, fail_counts, n):
    """n trials with the given per-task failure counts."""
    tasks = tuple(order)
    trials = []
    for i in range(n):
        flags = {task: i >= fail_counts.get(task, 0) for task in tasks}
        trials.append((combination, tasks, flags))
    return trials


def test_aggregate_published_rain_haze_row():
    trials = _trials(
        RAIN_HAZE,
        (T.DERAINING, T.DEHAZING),
        {T.DERAINING: 5, T.DEHAZING: 37},
        100,
    )
    (record,) = aggregate(trials)
    assert record.per_task_fail == {T.DERAINING: 0.05, T.DEHAZING: 0.37}
    assert record.total_fail == pytest.approx(0.21)
    assert display_percent(record.total_fail) == 21
    assert record.n_trials == 100


def test_aggregate_all_success():
    trials = _trials(RAIN_HAZE, (T.DEHAZING, T.DERAINING), {}, 10)
    (record,) = aggregate(trials)
    assert all(v == 0.0 for v in record.per_task_fail.values())
    assert record.total_fail == 0.0


def test_aggregate_mean_and_display_rounding():
    trials = _trials(
        frozenset({D.LOW_LIGHT, D.NOISE}),
        (T.DENOISING, T.BRIGHTENING),
        {T.BRIGHTENING: 22, T.DENOISING: 43},
        100,
    )
    (record,) = aggregate(trials)
    assert record.total_fail == pytest.approx(0.325)
    assert display_percent(record.total_fail) == 32


def test_aggregate_rejects_inconsistent_flags():
    bad = [(RAIN_HAZE, (T.DERAINING, T.DEHAZING), {T.DERAINING: True})]
    with pytest.raises(InconsistentTrial):
        aggregate(bad)


# Round-half-down applied to the mean of the two per-task integer rates.
# Three published totals (marked) sit half a point above this rule's output;
# they are unreachable from the integer per-task pairs under any single
# tie-breaking rule, so the stored stated totals differ there.
ROUNDING_ROWS = [
    ((22, 43), 32),
    ((28, 42), 35),
    ((0, 36), 18),
    ((0, 40), 20),
    ((10, 31), 20),
    ((8, 48), 28),
    ((22, 25), 23),
    ((28, 25), 26),
    ((23, 9), 16),
    ((31, 6), 18),  # published 19
    ((38, 13), 25),  # published 26
    ((38, 14), 26),
    ((5, 37), 21),
    ((25, 24), 24),
    ((26, 2), 14),
    ((63, 0), 31),  # published 32
]


@pytest.mark.parametrize("pair,expected", ROUNDING_ROWS)
def test_display_percent_half_down(pair, expected):
    a, b = pair
    assert display_percent((a / 100 + b / 100) / 2) == expected


def test_distill_published_rules():
    rules = distill(reference_records())
    strict = {(r.before, r.after) for r in rules if not r.indifferent}
    assert strict == {
        (T.DENOISING, T.BRIGHTENING),
        (T.DEFOCUS_DEBLURRING, T.DEHAZING),
        (T.JPEG_ARTIFACT_REMOVAL, T.DEFOCUS_DEBLURRING),
        (T.MOTION_DEBLURRING, T.BRIGHTENING),
        (T.MOTION_DEBLURRING, T.SUPER_RESOLUTION),
        (T.DERAINING, T.DEHAZING),
        (T.DERAINING, T.SUPER_RESOLUTION),
    }
    indifferent = [r for r in rules if r.indifferent]
    assert len(indifferent) == 1
    assert {indifferent[0].before, indifferent[0].after} == {
        T.DENOISING, T.JPEG_ARTIFACT_REMOVAL
    }
    assert indifferent[0].margin == 0.0
    derain = next(r for r in rules if r.before is T.DERAINING and r.after is T.DEHAZING)
    assert derain.margin == pytest.approx(0.035)


def test_distill_is_antisymmetric():
    rules = distill(reference_records())
    strict = {(r.before, r.after) for r in rules if not r.indifferent}
    for before, after in strict:
        assert (after, before) not in strict


def test_distill_single_order_gives_no_rule():
    records = [r for r in reference_records() if r.order[0] is T.DERAINING]
    record = next(r for r in records if r.combination == RAIN_HAZE)
    assert distill([record]) == []


def test_distill_three_task_marginalization():
    import itertools

    from restoragent.knowledge import ExperienceRecord

    tasks = (T.DERAINING, T.DEHAZING, T.DENOISING)
    combo = frozenset({D.RAIN, D.HAZE, D.NOISE})
    records = []
    for order in itertools.permutations(tasks):
        # deraining-early orders do better: total fail grows with its position
        total = 0.1 * order.index(T.DERAINING) + 0.1
        records.append(
            ExperienceRecord(combo, order, {t: total for t in order}, total, 10)
        )
    rules = distill(records)
    strict = {(r.before, r.after) for r in rules if not r.indifferent}
    assert (T.DERAINING, T.DEHAZING) in strict
    assert (T.DERAINING, T.DENOISING) in strict


def test_retrieve_exact_and_pairwise():
    kb = reference_kb()
    agenda = {T.DERAINING, T.DEHAZING}
    found = retrieve(kb, agenda)
    assert {r.order for r in found.records} == {
        (T.DERAINING, T.DEHAZING),
        (T.DEHAZING, T.DERAINING),
    }
    assert any(
        r.before is T.DERAINING and r.after is T.DEHAZING and not r.indifferent
        for r in found.rules
    )
    # invariant under agenda presentation order
    assert retrieve(kb, [T.DEHAZING, T.DERAINING]) == found


def test_retrieve_singleton_and_unknown_tasks():
    kb = reference_kb()
    assert retrieve(kb, {T.BRIGHTENING}).rules == ()
    partial = retrieve(kb, {T.DERAINING, T.DEHAZING, T.MOTION_DEBLURRING})
    assert partial.records == ()  # no exact 3-task record in the reference KB
    for rule in partial.rules:
        assert {rule.before, rule.after} <= {T.DERAINING, T.DEHAZING, T.MOTION_DEBLURRING}


def test_kb_roundtrip_empty(tmp_path):
    path = tmp_path / "kb.json"
    save_kb(KnowledgeBase(), path)
    kb = load_kb(path)
    assert kb.records == [] and kb.rules == []


def test_kb_roundtrip_reference(tmp_path):
    kb = reference_kb()
    path = tmp_path / "kb.json"
    save_kb(kb, path)
    restored = load_kb(path)
    assert restored.records == kb.records
    assert restored.rules == kb.rules
    assert restored.provenance == kb.provenance
    # byte-identical re-serialization
    again = tmp_path / "kb2.json"
    save_kb(restored, again)
    assert path.read_bytes() == again.read_bytes()


def test_kb_schema_error_names_field(tmp_path):
    path = tmp_path / "kb.json"
    data = kb_to_dict(reference_kb())
    del data["records"][0]["order"]
    path.write_text(json.dumps(data), encoding="utf-8")
    with pytest.raises(SchemaError) as err:
        load_kb(path)
    assert "records[0].order" in str(err.value)


def test_kb_malformed_json(tmp_path):
    path = tmp_path / "kb.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(SchemaError):
        load_kb(path)


def test_render_experience_text_published_phrasing():
    records = [r for r in reference_records() if r.combination == RAIN_HAZE]
    text = render_experience_text(records)
    assert "To address haze+rain in the image" in text
    assert "first deraining and then dehazing" in text
    assert "the total fail rate is 21%" in text
    assert "'5%'" in text and "'37%'" in text
