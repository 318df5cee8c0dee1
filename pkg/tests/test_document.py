import json

import pytest

from cbconfig.document import (
    DocumentError,
    SolutionDocument,
    SolutionEntry,
    parse,
    serialize,
)


@pytest.fixture
def document():
    return SolutionDocument(
        config={"n": 2, "mode": "cc", "seed": 1, "epsilon": 1e-8},
        solutions=[
            SolutionEntry(
                kind="base",
                index=[0],
                coordinates=[[-2.23606797749979, 0.0], [2.23606797749979, 0.0]],
                residual_inf=8.7e-19,
                lam=0.00223606797749979,
                verification={"residual_inf": 8.7e-19, "com_norm": 0.0},
            ),
            SolutionEntry(
                kind="refined",
                index=[0, 3],
                coordinates=[[-2.2, 0.0], [2.2, 0.0], [0.0, 3.9]],
                residual_inf=1.2e-17,
                delta_q0=4.4e-8,
            ),
        ],
        aggregates={"n_sol_base": 1, "delta_q0": 4.4e-8},
    )


def test_round_trip_identity(document):
    assert parse(serialize(document)) == document


def test_serialized_is_utf8_json_with_schema_keys(document):
    raw = json.loads(serialize(document).decode("utf-8"))
    assert set(raw) == {"config", "solutions", "aggregates"}
    assert raw["solutions"][0]["coordinates"][0] == [-2.23606797749979, 0.0]


def test_coordinates_round_trip_full_precision(document):
    parsed = parse(serialize(document))
    assert parsed.solutions[0].coordinates[0][0] == -2.23606797749979


def test_missing_config_names_field():
    with pytest.raises(DocumentError) as err:
        parse(json.dumps({"solutions": [], "aggregates": {}}))
    assert err.value.path == "config"


def test_bad_coordinates_path():
    raw = {
        "config": {},
        "aggregates": {},
        "solutions": [
            {
                "kind": "base",
                "index": [0],
                "coordinates": [[1.0, 2.0], [1.0]],
                "residual_inf": 0.0,
            }
        ],
    }
    with pytest.raises(DocumentError) as err:
        parse(json.dumps(raw))
    assert err.value.path == "solutions[0].coordinates[1]"


def test_unknown_kind_rejected():
    raw = {
        "config": {},
        "aggregates": {},
        "solutions": [
            {"kind": "bogus", "index": [0], "coordinates": [[0.0, 0.0]], "residual_inf": 0.0}
        ],
    }
    with pytest.raises(DocumentError, match="unknown solution kind"):
        parse(json.dumps(raw))


def test_not_json():
    with pytest.raises(DocumentError, match="not valid JSON"):
        parse(b"this is not json")


def test_entries_filter(document):
    assert len(document.entries("base")) == 1
    assert len(document.entries("refined")) == 1
    assert document.entries("direct") == []
