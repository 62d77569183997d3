import json
from fractions import Fraction as F

import pytest

import tariffmenu.instance_io as io
from tariffmenu.errors import ValidationError
from tariffmenu.instances import gen_single_param_counterexample, gen_usage_gap
from tariffmenu.model import EXCLUDE, OPT_OUT, Contract, DirectMenu, IndirectMenu, Instance
from tariffmenu.single_param import SingleParamInstance


def write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(path)


BASIC = {
    "T": 2,
    "A": 1,
    "Q": 2,
    "mu": ["1/2", "1/2"],
    "costs": [0],
    "p": [["1/2", "1/2"]],
    "v": [[1, "1/2"], ["1/2", 1]],
}


def test_rational_to_json():
    assert io.rational_to_json(F(3)) == 3
    assert io.rational_to_json(F(3, 4)) == "3/4"
    assert io.usage_to_json(EXCLUDE) == "EXCLUDE"


def test_parse_plain_instance():
    inst = io.instance_from_dict(BASIC)
    assert inst == gen_usage_gap()


def test_instance_dict_round_trip(tmp_path):
    path = str(tmp_path / "inst.json")
    io.save_instance(gen_usage_gap(), path)
    with open(path) as handle:
        data = json.load(handle)
    assert data["mu"] == ["1/2", "1/2"]
    assert data["v"] == [[1, "1/2"], ["1/2", 1]]
    assert io.load_instance(path) == gen_usage_gap()


def test_single_param_instance_file(tmp_path):
    original = gen_single_param_counterexample()
    path = str(tmp_path / "sp.json")
    io.save_instance(original, path)
    loaded = io.load_instance(path)
    assert isinstance(loaded, SingleParamInstance)
    assert loaded == original


def test_single_param_without_v_derives_valuations():
    data = {"mu": [1], "costs": [0], "p": [[1]], "alpha": [2], "baseline": [3]}
    loaded = io.instance_from_dict(data)
    assert loaded.base.valuations == ((6,),)


def test_single_param_with_inconsistent_v():
    data = {"mu": [1], "costs": [0], "p": [[1]], "alpha": [2], "baseline": [3], "v": [[5]]}
    with pytest.raises(ValidationError, match="alpha"):
        io.instance_from_dict(data)


def test_bad_probability_row_is_named():
    data = dict(BASIC, p=[["1/2", "2/5"]])
    with pytest.raises(ValidationError, match=r"p\[0\] sums to 9/10"):
        io.instance_from_dict(data)


@pytest.mark.parametrize(
    "change",
    [
        {"T": 3},
        {"Q": "2"},
        {"mu": "1/2"},
        {"v": [[1, "x"], ["1/2", 1]]},
    ],
)
def test_malformed_instances(change):
    with pytest.raises(ValidationError):
        io.instance_from_dict(dict(BASIC, **change))


def test_missing_key():
    data = dict(BASIC)
    del data["costs"]
    with pytest.raises(ValidationError, match="costs"):
        io.instance_from_dict(data)


def test_unreadable_files(tmp_path):
    with pytest.raises(ValidationError, match="malformed JSON"):
        io.load_instance(write(tmp_path, "bad.json", "{"))
    with pytest.raises(ValidationError, match="cannot read"):
        io.load_instance(str(tmp_path / "absent.json"))
    with pytest.raises(ValidationError):
        io.load_instance(write(tmp_path, "list.json", [1, 2]))
    binary = tmp_path / "binary.json"
    binary.write_bytes(b'{"mu": [\xff]}')
    with pytest.raises(ValidationError, match="not valid UTF-8"):
        io.load_instance(str(binary))
    with pytest.raises(ValidationError, match="not valid UTF-8"):
        io.load_menu(str(binary))


@pytest.mark.parametrize("literal", ["1e400", "-1e400", "NaN", "Infinity"])
def test_non_finite_numbers_are_rejected(tmp_path, literal):
    text = json.dumps(BASIC).replace('[[1, "1/2"]', f"[[{literal}, \"1/2\"]")
    with pytest.raises(ValidationError, match="not a finite rational"):
        io.load_instance(write(tmp_path, "inf.json", text))


def test_single_param_equal_alphas_are_merged():
    data = {
        "T": 2,
        "mu": ["1/2", "1/2"],
        "costs": [0],
        "p": [[1]],
        "alpha": [1, 1],
        "baseline": [2],
        "v": [[2], [2]],
    }
    loaded = io.instance_from_dict(data)
    assert loaded.alpha == (1,)
    assert loaded.base.mu == (1,)
    assert loaded.base.valuations == ((2,),)


def test_single_param_alphas_are_sorted():
    data = {"mu": ["1/4", "3/4"], "costs": [0], "p": [[1]], "alpha": [2, 1], "baseline": [3]}
    loaded = io.instance_from_dict(data)
    assert loaded.alpha == (1, 2)
    assert loaded.base.mu == (F(3, 4), F(1, 4))
    assert loaded.base.valuations == ((3,), (6,))


def test_single_param_declared_count_matches_file_rows():
    data = {"T": 1, "mu": ["1/2", "1/2"], "costs": [0], "p": [[1]], "alpha": [1, 1], "baseline": [2]}
    with pytest.raises(ValidationError, match="T = 1"):
        io.instance_from_dict(data)


def test_menu_parsing():
    menu = io.menu_from_dict(
        {
            "contracts": [
                {"action": 0, "w": "3/2", "x": [0, "EXCLUDE"]},
                {"action": None, "w": 0, "x": ["EXCLUDE", "EXCLUDE"]},
            ]
        }
    )
    assert isinstance(menu, DirectMenu)
    assert menu[0] == Contract(0, F(3, 2), (0, EXCLUDE))
    assert menu[1].action == OPT_OUT


def test_indirect_menu_flag():
    menu = io.menu_from_dict({"indirect": True, "contracts": [{"action": 0, "w": 1, "x": [0]}]})
    assert isinstance(menu, IndirectMenu)


@pytest.mark.parametrize(
    "data",
    [
        {},
        {"contracts": {}},
        {"contracts": [{"action": 0, "w": 1}]},
        {"contracts": [{"action": "0", "w": 1, "x": [0]}]},
        {"contracts": [{"action": 0, "w": -1, "x": [0]}]},
        {"contracts": [{"action": 0, "w": 1, "x": 0}]},
    ],
)
def test_malformed_menus(data):
    with pytest.raises(ValidationError):
        io.menu_from_dict(data)


def test_menu_file_round_trip(tmp_path):
    menu = IndirectMenu((Contract(1, F(1, 3), (EXCLUDE, 2)),))
    path = str(tmp_path / "menu.json")
    io.save_menu(menu, path)
    assert io.load_menu(path) == menu
    assert io.menu_to_dict(DirectMenu((Contract.opt_out(1),))) == {
        "contracts": [{"action": None, "w": 0, "x": ["EXCLUDE"]}]
    }


def test_declared_counts_must_be_integers():
    with pytest.raises(ValidationError):
        io.instance_from_dict(dict(BASIC, A=True))
    assert isinstance(io.instance_from_dict(BASIC), Instance)
