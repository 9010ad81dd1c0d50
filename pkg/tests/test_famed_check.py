import copy
import itertools
import json
from fractions import Fraction

import pytest

from famed.errors import MalformedInput
from famed.famed_check import (
    FamedData,
    angle_polytope_feasible,
    check_all,
    check_famed_l,
    load_input,
    lp_max,
    verify_certificate,
)
from famed.synthetic import last_column_failure
from famed.triangulation_core import renumber

from relabel import relabel


def test_lp_small():
    status, x, y, val = lp_max([1, 1], [[1, 2], [3, 1]], [4, 6])
    assert status == "optimal"
    assert val == Fraction(14, 5)
    # strong duality
    assert sum(a * b for a, b in zip(y, [4, 6])) == val


def test_fig8_angles(fig8):
    r = angle_polytope_feasible(fig8)
    assert r.feasible
    assert r.min_angle == Fraction(1, 3)
    assert r.structure.exact == ((Fraction(1, 3),) * 3,) * 2


def test_fig8_certificate(fig8):
    cert, ctx = check_all(fig8)
    assert cert.famed_l and cert.famed_lm
    w = cert.witnesses
    assert w["nullity_A_face"] == 0 and w["nullity_B"] == 0
    assert w["rref_delta"] == [] and w["rref_EA_2n"] == []
    assert w["k"] == "0"
    assert w["C"] == ["-1", "1"]
    assert verify_certificate(fig8, json.loads(json.dumps(cert.to_json())))


def test_tampered_certificate_fails(fig8):
    cert, _ = check_all(fig8)
    js = copy.deepcopy(cert.to_json())
    js["witnesses"]["scriptG"][0][0] = "5"
    assert not verify_certificate(fig8, js)
    js = copy.deepcopy(cert.to_json())
    js["witnesses"]["angle_structure_pi"][0] = ["1/2", "1/4", "1/4"]
    assert not verify_certificate(fig8, js)


def test_synthetic_is_l_only():
    data = FamedData.from_matrices(last_column_failure())
    cert, _ = check_all(data)
    assert cert.famed_l and not cert.famed_lm
    assert cert.clauses["last_column_zero"] is False
    assert verify_certificate(data, cert.to_json())


def test_bundled_fixture_matches_generator(data_dir):
    stored = json.loads((data_dir / "synthetic_last_column.json").read_text())
    assert stored == json.loads(json.dumps(last_column_failure()))


def test_no_angle_structure_not_famed():
    d = last_column_failure()
    d["edge_angle_counts"][0] = [[0, 0, 0]] * d["N"]
    cert, _ = check_famed_l(FamedData.from_matrices(d))
    assert cert.clauses["angle_structures"] is False
    assert not cert.famed_l


def test_load_input_dispatch(fig8, data_dir):
    assert isinstance(load_input((data_dir / "synthetic_last_column.json").read_text()), FamedData)
    assert load_input((data_dir / "fig8.json").read_text()).N == 2
    with pytest.raises(MalformedInput):
        load_input('{"format": "famed-matrices", "N": 2}')


@pytest.mark.parametrize("perm", list(itertools.permutations(range(2))))
@pytest.mark.parametrize("flip_labels", [False, True])
def test_fig8_verdicts_renumbering_invariant(fig8, perm, flip_labels):
    T = renumber(fig8, perm)
    data = FamedData.from_triangulation(T)
    cert, _ = check_all(data)
    base, _ = check_all(fig8)
    assert cert.clauses == base.clauses
    assert cert.witnesses["k"] == base.witnesses["k"]


CHOICE_FREE = ("angle_structures", "nullity", "delta_rows")


@pytest.mark.parametrize("seed", range(3))
def test_synthetic_choice_free_clauses_invariant(seed):
    d = last_column_failure(seed)
    base, _ = check_all(FamedData.from_matrices(d))
    for tets in itertools.permutations(range(3)):
        for faces in ([0, 1, 2, 3, 4, 5], [5, 4, 3, 2, 1, 0], [1, 0, 3, 2, 5, 4]):
            cert, _ = check_all(FamedData.from_matrices(relabel(d, tets, faces)))
            assert {k: cert.clauses[k] for k in CHOICE_FREE} == {k: base.clauses[k] for k in CHOICE_FREE}
