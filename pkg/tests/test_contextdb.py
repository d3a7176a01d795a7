import json
import random
from collections import Counter

import pytest

from ctxmine.contextdb import build_database, build_sequences
from ctxmine.ingest import SourceTable, load_all
from ctxmine.schema import ACTIVITY_COLUMNS, SourceDescriptor, load_schema

ACTIVITY = SourceDescriptor("activity", "core", "activity.csv", ACTIVITY_COLUMNS)


def activity(rows):
    return SourceTable(ACTIVITY, tuple(rows))


def test_sequences_follow_timestamps():
    seqs = build_sequences(activity([("s1", "R-15", 10, "view"), ("s1", "R-42", 20, "view")]))
    assert [e.resource for e in seqs["s1"]] == ["R-15", "R-42"]


def test_empty_activity_gives_empty_database():
    assert build_sequences(activity([])) == {}


def test_timestamp_ties_keep_file_order():
    # line 4 of the file holds R-3, line 5 holds R-2: both at t=10
    rows = [("s9", "R-0", 1, "view"), ("s9", "R-1", 2, "view"),
            ("s1", "R-3", 10, "view"), ("s1", "R-2", 10, "view")]
    seqs = build_sequences(activity(rows))
    assert [e.resource for e in seqs["s1"]] == ["R-3", "R-2"]


def test_sorting_matches_stable_sort_oracle():
    rng = random.Random(5)
    rows = [(rng.choice("abc"), f"R-{rng.randint(1, 9)}", rng.randint(0, 4), "view") for _ in range(300)]
    seqs = build_sequences(activity(rows))
    for student in "abc":
        mine = [rows[i] for i in range(len(rows)) if rows[i][0] == student]
        # Python's sort is stable, so sorting by timestamp alone keeps file order on ties
        expected = [r[1] for r in sorted(mine, key=lambda r: r[2])]
        assert [e.resource for e in seqs[student]] == expected
        assert Counter(e.resource for e in seqs[student]) == Counter(r[1] for r in mine)


def test_f1_contexts(f1_db):
    assert f1_db.sequences["s1"].context == {
        "student.age": {"14-years"},
        "student.gender": {"Male"},
        "curriculum.program": {"Mathematics-grade-9"},
    }
    assert f1_db.context_keys == ("curriculum.program", "student.age", "student.gender")
    assert [s.resources() for s in f1_db.sequences.values()] == [
        ["R-15", "R-42", "R-7"], ["R-15", "R-42", "R-9"], ["R-15", "R-42", "R-11"],
        ["R-3"], ["R-3", "R-15"], ["R-3"],
    ]


def test_f1_resource_attributes(f1_db):
    assert f1_db.resource_keys == ("resource.subject",)
    assert f1_db.resource_attrs["R-3"] == {"resource.subject": "History"}
    for r in ("R-7", "R-9", "R-11", "R-15", "R-42"):
        assert f1_db.resource_attrs[r] == {"resource.subject": "Mathematics"}


def _dataset(tmp_path, students, curricula, resources, events):
    files = {
        "activity.csv": "student_id,resource_id,timestamp,action\n" + "".join(
            f"{s},{r},{t},view\n" for s, r, t in events),
        "student.csv": "student_id,age,gender,curriculum_id\n" + "".join(
            ",".join(row) + "\n" for row in students),
        "curriculum.csv": "curriculum_id,program\n" + "".join(
            ",".join(row) + "\n" for row in curricula),
        "resource.csv": "resource_id,subject,type,difficulty,topic\n" + "".join(
            ",".join(row) + "\n" for row in resources),
    }
    for name, text in files.items():
        (tmp_path / name).write_text(text)
    manifest = {
        "sources": [
            {"name": "activity", "role": "core", "path": "activity.csv", "columns": list(ACTIVITY_COLUMNS)},
            {"name": "student", "role": "refining", "path": "student.csv", "key_column": "student_id",
             "columns": ["student_id", "age", "gender", "curriculum_id"]},
            {"name": "curriculum", "role": "refining", "path": "curriculum.csv",
             "key_column": "curriculum_id", "columns": ["curriculum_id", "program"]},
            {"name": "resource", "role": "generalizing", "path": "resource.csv",
             "key_column": "resource_id",
             "columns": ["resource_id", "subject", "type", "difficulty", "topic"]},
        ],
        "links": [
            {"from": "activity", "to": "student", "via": "student_id", "kind": "source_to_source"},
            {"from": "student", "to": "curriculum", "via": "curriculum_id", "kind": "source_to_source"},
            {"from": "activity", "to": "resource", "via": "resource_id", "kind": "element_to_source"},
        ],
    }
    (tmp_path / "manifest.json").write_text(json.dumps(manifest))
    schema = load_schema(tmp_path / "manifest.json")
    return build_database(schema, load_all(schema))


CURRICULA = [("C-9", "Mathematics-grade-9"), ("C-10", "History-grade-9")]
RESOURCES = [("R-7", "Mathematics", "Exercise", "Difficult", "Linear Algebra"),
             ("R-8", "Mathematics", "Video", "Easy", "unknown"),
             ("R-9", "History", "Exercise", "", "Rome")]


def test_context_vector_of_one_student(tmp_path):
    db = _dataset(tmp_path, [("s1", "14-years", "Male", "C-9")], CURRICULA, RESOURCES,
                  [("s1", "R-7", 1)])
    assert db.sequences["s1"].context == {
        "student.age": {"14-years"}, "student.gender": {"Male"},
        "curriculum.program": {"Mathematics-grade-9"},
    }
    assert db.resource_attrs["R-7"] == {
        "resource.subject": "Mathematics", "resource.type": "Exercise",
        "resource.difficulty": "Difficult", "resource.topic": "Linear Algebra",
    }


def test_unknown_demographics_give_empty_context(tmp_path):
    db = _dataset(tmp_path, [("s1", "unknown", "", "")], CURRICULA, RESOURCES, [("s1", "R-7", 1)])
    assert db.sequences["s1"].context == {}


def test_multi_enrollment_unions_curricula(tmp_path):
    # hand join: C-9 -> Mathematics-grade-9, C-10 -> History-grade-9
    db = _dataset(tmp_path, [("s1", "14-years", "Male", "C-9;C-10")], CURRICULA, RESOURCES,
                  [("s1", "R-7", 1)])
    assert db.sequences["s1"].context["curriculum.program"] == {"Mathematics-grade-9", "History-grade-9"}


def test_broken_links_are_counted_not_fatal(tmp_path):
    db = _dataset(tmp_path, [("s1", "14-years", "Male", "C-404")], CURRICULA, RESOURCES,
                  [("s1", "R-7", 1), ("s2", "R-7", 2)])
    assert db.sequences["s1"].context == {"student.age": {"14-years"}, "student.gender": {"Male"}}
    assert db.sequences["s2"].context == {}
    assert db.warnings["BrokenLink student->curriculum via curriculum_id"] == 1
    assert db.warnings["BrokenLink activity->student via student_id"] == 1


def test_undescribed_resources_resolve_to_unknown(tmp_path):
    events = [("s1", "R-7", 1), ("s1", "R-8", 2), ("s1", "R-9", 3), ("s1", "R-999", 4)]
    db = _dataset(tmp_path, [("s1", "14-years", "Male", "C-9")], CURRICULA, RESOURCES, events)
    assert db.resource_attrs["R-999"] == dict.fromkeys(
        ["resource.difficulty", "resource.subject", "resource.topic", "resource.type"])
    assert db.resource_attrs["R-8"]["resource.topic"] is None
    # scan oracle: entries whose attributes are all unknown
    all_unknown = [r for r, a in db.resource_attrs.items() if all(v is None for v in a.values())]
    assert all_unknown == ["R-999"]
    assert db.warnings["UnresolvedResource"] == 1


def test_attribute_domains_have_no_phantom_values(f1_db):
    seen = {}
    for seq in f1_db.sequences.values():
        for k, vs in seq.context.items():
            seen.setdefault(k, set()).update(vs)
    for attrs in f1_db.resource_attrs.values():
        for k, v in attrs.items():
            if v is not None:
                seen.setdefault(k, set()).add(v)
    assert f1_db.attribute_domains == seen


def test_join_is_deterministic(f1_schema):
    a = build_database(f1_schema, load_all(f1_schema))
    b = build_database(f1_schema, load_all(f1_schema))
    assert a == b
    assert list(a.sequences) == list(b.sequences) == sorted(a.sequences)


def test_unknown_never_stored_in_context(f1_db):
    for seq in f1_db.sequences.values():
        for values in seq.context.values():
            assert values and None not in values
