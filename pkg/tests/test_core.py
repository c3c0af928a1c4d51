import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gazekit.core import (
    HOME_ANGLES, N_FEATURES, Coarse5, Fine13, Movement, PersonState, SceneFrame, Taxonomy,
    ValidationError, collapse, collapse_indices, decode_features, encode_frame, feature_columns,
    index_label, is_hand, label_person, parse_label, read_feature_file, write_feature_file,
)


def _frame(*persons):
    persons = list(persons) + [PersonState()] * (4 - len(persons))
    return SceneFrame(0, tuple(persons))


def test_taxonomy_sizes_and_aliases():
    assert Taxonomy.COARSE5.size == 5 and Taxonomy.FINE13.size == 13
    assert Taxonomy.parse("13") is Taxonomy.FINE13
    assert Taxonomy.parse(" Coarse ") is Taxonomy.COARSE5
    with pytest.raises(ValidationError):
        Taxonomy.parse("seven")


def test_collapse_table():
    # hand-written table: every body and both hands go to their person
    expect = {Fine13.P1_BODY: Coarse5.P1, Fine13.P2_RIGHT_HAND: Coarse5.P2,
              Fine13.P3_LEFT_HAND: Coarse5.P3, Fine13.P4_RIGHT_HAND: Coarse5.P4,
              Fine13.P4_LEFT_HAND: Coarse5.P4, Fine13.BOX: Coarse5.BOX}
    for fine, coarse in expect.items():
        assert collapse(fine) is coarse
    assert [int(collapse(f)) for f in Fine13] == list(collapse_indices(np.arange(13)))
    assert list(collapse_indices([-1, 12])) == [-1, 4]


def test_label_helpers():
    assert label_person(Fine13.P3_LEFT_HAND) == 2
    assert label_person(Coarse5.BOX) is None
    assert is_hand(Fine13.P1_RIGHT_HAND) and not is_hand(Fine13.P1_BODY)
    assert parse_label("p2_body", "fine13") is Fine13.P2_BODY
    assert index_label(4, "coarse5") is Coarse5.BOX
    with pytest.raises(ValidationError):
        index_label(5, "coarse5")
    with pytest.raises(ValidationError):
        parse_label("P5", "coarse5")


def test_encoding_layout():
    p = PersonState(present=1, distance=2.5, waving=1, pointing=0, talking=1, angle=30.0)
    f = _frame(PersonState(), p)
    v = encode_frame(f)
    assert v.shape == (N_FEATURES,)
    assert list(v[:7]) == [0.0] * 7
    assert list(v[7:14]) == [1.0, 0.5, 1.0, 0.0, 1.0, 0.5, 0.0]
    assert feature_columns()[7] == "p2_present"


def test_angle_and_distance_saturate():
    walker = PersonState(present=1, distance=9.0, angle=-90.0, movement=Movement.ENTERING)
    v = encode_frame(_frame(walker))
    assert v[1] == 1.0 and v[5] == -1.0 and v[6] == 0.5


@pytest.mark.parametrize("person,field", [
    (PersonState(present=0, waving=1), "persons[0].waving"),
    (PersonState(present=1, distance=0.0, angle=-60.0), "persons[0].distance"),
    (PersonState(present=1, distance=1.0, angle=-45.0), "persons[0].angle"),
    (PersonState(present=2, distance=1.0, angle=-60.0), "persons[0].present"),
    (PersonState(present=1, distance=1.0, angle=120.0, movement=Movement.LEAVING), "persons[0].angle"),
])
def test_validation_names_field(person, field):
    with pytest.raises(ValidationError) as err:
        encode_frame(_frame(person))
    assert err.value.field == field


def test_non_strict_bearing_accepts_any_standing_angle():
    f = _frame(PersonState(present=1, distance=1.0, angle=-45.0))
    encode_frame(f, strict_bearing=False)


def test_frame_needs_four_slots():
    with pytest.raises(ValidationError):
        SceneFrame(0, (PersonState(),) * 3).validate()


persons = st.builds(
    lambda present, d, w, pt, t, slot, mv: (
        PersonState() if not present else
        PersonState(1, d, w, pt, t, HOME_ANGLES[slot] if mv == 0 else float(slot * 20 - 30), Movement(mv))),
    st.booleans(), st.floats(0.5, 5.0), st.integers(0, 1), st.integers(0, 1), st.integers(0, 1),
    st.integers(0, 3), st.integers(0, 2))


@given(st.lists(persons, min_size=4, max_size=4))
def test_decode_inverts_encode(ps):
    f = SceneFrame(0, tuple(ps))
    back = decode_features(encode_frame(f))
    for a, b in zip(f.persons, back.persons):
        assert a.present == b.present
        if a.present:
            assert b.distance == pytest.approx(a.distance)
            assert b.angle == pytest.approx(a.angle)
            assert (a.waving, a.pointing, a.talking, a.movement) == (b.waving, b.pointing, b.talking, b.movement)


def test_feature_file_round_trip(tmp_path, rng):
    feats = rng.random((5, N_FEATURES))
    path = tmp_path / "f.csv"
    write_feature_file(path, feats, "fine13", {"seed": 3})
    back, header = read_feature_file(path)
    np.testing.assert_array_equal(back, feats)
    assert header["taxonomy"] == "fine13" and header["seed"] == 3
    assert header["angle_scale"] == 60.0


def test_feature_file_rejects_other_version(tmp_path):
    path = tmp_path / "f.csv"
    write_feature_file(path, np.zeros((1, N_FEATURES)))
    lines = path.read_text().splitlines()
    header = json.loads(lines[0][2:])
    header["version"] = 99
    path.write_text("# " + json.dumps(header) + "\n" + "\n".join(lines[1:]) + "\n")
    with pytest.raises(ValidationError):
        read_feature_file(path)
