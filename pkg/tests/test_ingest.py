import calendar
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, strategies as st

from ctxmine.ingest import (
    BadTimestamp,
    DuplicateKey,
    HeaderMismatch,
    IngestIoError,
    RaggedRow,
    load_table,
    normalize_cell,
    normalize_timestamp,
)
from ctxmine.schema import ACTIVITY_COLUMNS, SourceDescriptor

RESOURCE = SourceDescriptor(
    "resource", "generalizing", "resource.csv",
    ("resource_id", "subject", "type", "difficulty", "topic"), "resource_id",
)
ACTIVITY = SourceDescriptor("activity", "core", "activity.csv", ACTIVITY_COLUMNS)


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_resource_row(tmp_path):
    path = write(tmp_path, "r.csv", "resource_id,subject,type,difficulty,topic\n"
                                    "R-7,Mathematics,Exercise,Difficult,Linear Algebra\n")
    table = load_table(RESOURCE, path)
    assert len(table) == 1
    assert table.lookup("R-7") == ("R-7", "Mathematics", "Exercise", "Difficult", "Linear Algebra")


def test_header_only_file_is_empty_table(tmp_path):
    path = write(tmp_path, "r.csv", "resource_id,subject,type,difficulty,topic\n")
    table = load_table(RESOURCE, path)
    assert table.rows == ()
    assert table.key_index == {}


def test_duplicate_key(tmp_path):
    path = write(tmp_path, "r.csv", "resource_id,subject,type,difficulty,topic\n"
                                    "R-7,Mathematics,Exercise,Difficult,Linear Algebra\n"
                                    "R-7,History,Video,Easy,Rome\n")
    with pytest.raises(DuplicateKey) as err:
        load_table(RESOURCE, path)
    assert err.value.key == "R-7"


def test_header_mismatch(tmp_path):
    path = write(tmp_path, "r.csv", "resource_id,subject\nR-7,Mathematics\n")
    with pytest.raises(HeaderMismatch):
        load_table(RESOURCE, path)


def test_ragged_row_reports_line(tmp_path):
    path = write(tmp_path, "r.csv", "resource_id,subject,type,difficulty,topic\n"
                                    "R-1,a,b,c,d\nR-2,a,b\n")
    with pytest.raises(RaggedRow) as err:
        load_table(RESOURCE, path)
    assert err.value.line == 3


def test_missing_file(tmp_path):
    with pytest.raises(IngestIoError):
        load_table(RESOURCE, tmp_path / "absent.csv")


def test_unknown_cells_and_quoting(tmp_path):
    path = write(tmp_path, "r.csv", 'resource_id,subject,type,difficulty,topic\n'
                                    'R-1,,UNKNOWN,Unknown,"Algebra, ""linear"""\n')
    row = load_table(RESOURCE, path).lookup("R-1")
    assert row == ("R-1", None, None, None, 'Algebra, "linear"')


@given(st.text())
def test_only_empty_or_unknown_become_unknown(cell):
    expected_unknown = cell == "" or cell.lower() == "unknown"
    assert (normalize_cell(cell) is None) == expected_unknown
    if not expected_unknown:
        assert normalize_cell(cell) == cell


def test_core_timestamps_normalized_in_file_order(tmp_path):
    path = write(tmp_path, "a.csv", "student_id,resource_id,timestamp,action\n"
                                    "s1,R-15,10,view\n"
                                    "s1,R-42,1970-01-01T00:01:00Z,view\n")
    table = load_table(ACTIVITY, path)
    assert table.rows == (("s1", "R-15", 10, "view"), ("s1", "R-42", 60, "view"))


def test_bad_core_timestamp_names_line(tmp_path):
    path = write(tmp_path, "a.csv", "student_id,resource_id,timestamp,action\ns1,R-1,yesterday,view\n")
    with pytest.raises(BadTimestamp) as err:
        load_table(ACTIVITY, path)
    assert err.value.line == 2


def test_duplicate_activity_rows_are_kept(tmp_path):
    path = write(tmp_path, "a.csv", "student_id,resource_id,timestamp,action\n"
                                    "s1,R-1,5,view\ns1,R-1,5,view\n")
    assert len(load_table(ACTIVITY, path)) == 2


@pytest.mark.parametrize("cell,expected", [
    ("0", 0),
    ("1970-01-01T00:01:00Z", 60),
    # independent oracle: calendar.timegm of the UTC wall time 06:00
    ("2018-09-03T08:00:00+02:00", calendar.timegm((2018, 9, 3, 6, 0, 0, 0, 0, 0))),
    ("2018-09-03T08:00:00+02:00", 1535954400),
])
def test_normalize_timestamp(cell, expected):
    assert normalize_timestamp(cell) == expected


@pytest.mark.parametrize("cell", ["-5", "2018-09-03T08:00:00", "3.5", "", "soon",
                                  "2018-09-03T08:00:00.5Z"])
def test_rejected_timestamps(cell):
    with pytest.raises(BadTimestamp):
        normalize_timestamp(cell)


@given(st.integers(0, 4_000_000_000), st.integers(-14 * 60, 14 * 60))
def test_iso_agrees_with_calendar_oracle(epoch, offset_minutes):
    tz = timezone(timedelta(minutes=offset_minutes))
    text = datetime.fromtimestamp(epoch, tz).isoformat()
    assert normalize_timestamp(text) == epoch
    assert normalize_timestamp(str(epoch)) == epoch


def test_load_is_deterministic(tmp_path):
    path = write(tmp_path, "r.csv", "resource_id,subject,type,difficulty,topic\n"
                                    "R-2,a,b,c,d\nR-1,e,,g,h\n")
    assert load_table(RESOURCE, path) == load_table(RESOURCE, path)
    assert [r[0] for r in load_table(RESOURCE, path).rows] == ["R-2", "R-1"]
