import json
from fractions import Fraction as F

import pytest

import tariffmenu.cli as cli
import tariffmenu.main_help as main_help


@pytest.fixture(autouse=True)
def isolated_defaults(tmp_path, monkeypatch):
    path = tmp_path / "config" / "defaults.json"
    monkeypatch.setenv("TARIFFMENU_CONFIG", str(path))
    return path


def generate(tmp_path, capsys, *family):
    path = str(tmp_path / f"{family[0]}.json")
    assert cli.run(["gen", *family, "-o", path]) == cli.EXIT_OK
    capsys.readouterr()
    return path


def write_json(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_compare_usage_gap_json(tmp_path, capsys):
    path = generate(tmp_path, capsys, "usage-gap")
    assert cli.run(["compare", path, "--json"]) == cli.EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["regimes"]["full"]["profit"] == "3/4"
    assert data["regimes"]["upfront"]["profit"] == "3/4"
    assert data["regimes"]["usage"]["profit"] == "1/2"
    assert data["regimes"]["mandatory"]["profit"] == "3/4"
    assert data["sandwich_holds"] is True


def test_compare_text_report(tmp_path, capsys):
    path = generate(tmp_path, capsys, "hmu", "--mu", "1/2,1/2")
    assert cli.run(["compare", path]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "Regime comparison" in out
    assert "holds" in out


@pytest.mark.parametrize("regime, profit", [("full", "3/2"), ("upfront", "1"), ("usage", "3/2"), ("mandatory", "1")])
def test_solve_each_regime(tmp_path, capsys, regime, profit):
    path = generate(tmp_path, capsys, "hmu", "--mu", "1/2,1/2")
    assert cli.run(["solve", path, "--regime", regime, "--json"]) == cli.EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["regime"] == regime
    assert data["profit"] == profit
    assert data["diagnostics"]["ok"] is True


def test_solve_with_cross_checks(tmp_path, capsys):
    path = generate(tmp_path, capsys, "usage-gap")
    assert cli.run(["solve", path, "--verify-grid"]) == cli.EXIT_OK
    assert "3/4" in capsys.readouterr().out
    assert cli.run(["solve", path, "--regime", "mandatory", "--cross-check"]) == cli.EXIT_OK


def test_solve_is_deterministic(tmp_path, capsys):
    path = generate(tmp_path, capsys, "random", "--seed", "5", "-d")
    runs = []
    for _ in range(2):
        assert cli.run(["solve", path, "--json"]) == cli.EXIT_OK
        data = json.loads(capsys.readouterr().out)
        runs.append((data["profit"], data["menu"]))
    assert runs[0] == runs[1]


def test_reduce_partition_yes(capsys):
    assert cli.run(["reduce-partition", "--items", "1,1"]) == cli.EXIT_OK
    assert "PARTITION EXISTS (profit 9/2 = 9M/4)" in capsys.readouterr().out


def test_reduce_partition_no_json(capsys):
    assert cli.run(["reduce-partition", "--items", "1,3", "--json"]) == cli.EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["partition_exists"] is False
    assert data["profit"] == "17/2"
    assert data["threshold"] == "9"


@pytest.mark.parametrize("items", ["1,x", "", "1,,2", "0,1"])
def test_reduce_partition_bad_items(capsys, items):
    assert cli.run(["reduce-partition", "--items", items]) == cli.EXIT_INVALID
    assert "Error:" in capsys.readouterr().err


def test_fptas_command(tmp_path, capsys):
    path = generate(tmp_path, capsys, "hmu", "--mu", "1/2,1/2")
    assert cli.run(["fptas", path, "--eps", "1/10", "--json"]) == cli.EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert F(data["profit"]) >= F(27, 20)
    assert data["epsilon"] == "1/10"
    assert data["trimmed"] is True


def test_fptas_uses_stored_epsilon(tmp_path, capsys):
    path = generate(tmp_path, capsys, "usage-gap")
    assert cli.run(["defaults", "--epsilon", "1/5"]) == cli.EXIT_OK
    capsys.readouterr()
    assert cli.run(["fptas", path, "--no-trim", "--json"]) == cli.EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["epsilon"] == "1/5"
    assert data["profit"] == "3/4"


def test_fptas_rejects_bad_epsilon(tmp_path, capsys):
    path = generate(tmp_path, capsys, "usage-gap")
    assert cli.run(["fptas", path, "--eps", "2"]) == cli.EXIT_INVALID


def test_single_param_command(tmp_path, capsys):
    path = generate(tmp_path, capsys, "counterexample")
    assert cli.run(["single-param", path, "--json"]) == cli.EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["M"] == "2"
    assert data["best_action"] == 1
    assert data["single_contract_revenue"] == "2"
    assert data["best_single_contract_profit"] == "1"
    assert data["zero_costs"] is False


def test_single_param_merges_equal_alphas(tmp_path, capsys):
    path = write_json(
        tmp_path,
        "merged.json",
        {"T": 2, "mu": ["1/2", "1/2"], "costs": [0], "p": [[1]], "alpha": [1, 1], "baseline": [2]},
    )
    assert cli.run(["single-param", path, "--json"]) == cli.EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["M"] == "2"
    assert data["single_contract_revenue"] == "2"


def test_single_param_needs_alpha(tmp_path, capsys):
    path = generate(tmp_path, capsys, "usage-gap")
    assert cli.run(["single-param", path]) == cli.EXIT_INVALID
    assert "alpha" in capsys.readouterr().err


def test_gen_prints_json_without_output(capsys):
    assert cli.run(["gen", "partition", "--items", "1"]) == cli.EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["v"] == [[2, 2], [0, 6]]


def test_gen_random_summary(tmp_path, capsys):
    path = str(tmp_path / "random.json")
    assert cli.run(["gen", "random", "--types", "3", "--seed", "1", "-d", "-o", path]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "Types T" in out
    assert f"Wrote random instance to {path}" in out
    with open(path) as handle:
        assert json.load(handle)["T"] == 3


def test_gen_random_uses_saved_defaults(tmp_path, capsys):
    assert cli.run(["defaults", "--types", "1", "--outcomes", "3"]) == cli.EXIT_OK
    capsys.readouterr()
    assert cli.run(["gen", "random", "-d"]) == cli.EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["T"] == 1
    assert data["Q"] == 3


def test_bad_probability_row_exit_code(tmp_path, capsys):
    path = write_json(
        tmp_path,
        "bad.json",
        {"mu": [1], "costs": [0, 0], "p": [[1, 0], ["1/2", "2/5"]], "v": [[1, 1]]},
    )
    assert cli.run(["solve", path]) == cli.EXIT_INVALID
    assert "p[1] sums to 9/10" in capsys.readouterr().err


def test_malformed_json_exit_code(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{")
    assert cli.run(["compare", str(path)]) == cli.EXIT_INVALID


@pytest.mark.parametrize("literal", ["1e400", "NaN"])
def test_non_finite_valuation_exit_code(tmp_path, capsys, literal):
    path = tmp_path / "huge.json"
    path.write_text(f'{{"mu": [1], "costs": [0], "p": [[1]], "v": [[{literal}]]}}')
    assert cli.run(["solve", str(path)]) == cli.EXIT_INVALID
    assert "not a finite rational" in capsys.readouterr().err


def test_binary_file_exit_code(tmp_path, capsys):
    path = tmp_path / "binary.json"
    path.write_bytes(b"\xff\xfe")
    assert cli.run(["solve", str(path)]) == cli.EXIT_INVALID
    assert "not valid UTF-8" in capsys.readouterr().err


def test_corrupted_defaults_keep_json_output_clean(isolated_defaults, tmp_path, capsys):
    path = generate(tmp_path, capsys, "usage-gap")
    isolated_defaults.parent.mkdir(parents=True, exist_ok=True)
    isolated_defaults.write_text("{not json")
    assert cli.run(["solve", path, "--json"]) == cli.EXIT_OK
    captured = capsys.readouterr()
    assert json.loads(captured.out)["profit"] == "3/4"
    assert "corrupted" in captured.err


def test_guard_exit_code(tmp_path, capsys):
    path = generate(
        tmp_path, capsys, "random", "--types", "3", "--actions", "1", "--outcomes", "7", "-d"
    )
    assert cli.run(["solve", path]) == cli.EXIT_GUARD
    assert "max_exact_cells" in capsys.readouterr().err


def test_guard_from_stored_limits(tmp_path, capsys):
    path = generate(tmp_path, capsys, "usage-gap")
    assert cli.run(["defaults", "--max-exact-cells", "2"]) == cli.EXIT_OK
    capsys.readouterr()
    assert cli.run(["solve", path]) == cli.EXIT_GUARD


def test_check_menu_direct(tmp_path, capsys):
    inst = generate(tmp_path, capsys, "counterexample")
    menu = write_json(
        tmp_path,
        "menu.json",
        {"contracts": [{"action": 0, "w": 1, "x": [0, 0]}, {"action": 1, "w": 3, "x": [0, 0]}]},
    )
    assert cli.run(["check-menu", inst, menu, "--json"]) == cli.EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["profit"] == "7/6"
    assert data["diagnostics"]["ok"] is True


def test_check_menu_reports_violation(tmp_path, capsys):
    inst = generate(tmp_path, capsys, "counterexample")
    menu = write_json(
        tmp_path,
        "menu.json",
        {"contracts": [{"action": 0, "w": 1, "x": [0, 0]}, {"action": 1, "w": 4, "x": [0, 0]}]},
    )
    assert cli.run(["check-menu", inst, menu]) == cli.EXIT_INVALID
    captured = capsys.readouterr()
    assert "type 1 prefers contract 0" in captured.out
    assert "IC violated" in captured.err


def test_check_menu_indirect(tmp_path, capsys):
    inst = generate(tmp_path, capsys, "hmu", "--mu", "1/2,1/2")
    menu = write_json(
        tmp_path,
        "menu.json",
        {
            "indirect": True,
            "contracts": [
                {"action": 0, "w": 2, "x": [0, "EXCLUDE"]},
                {"action": 0, "w": 1, "x": ["EXCLUDE", 0]},
            ],
        },
    )
    assert cli.run(["check-menu", inst, menu, "--json"]) == cli.EXIT_OK
    assert json.loads(capsys.readouterr().out)["profit"] == "3/2"
    assert cli.run(["check-menu", inst, menu, "--regime", "mandatory"]) == cli.EXIT_INVALID


def test_check_menu_mandatory_rejects_exclude(tmp_path, capsys):
    inst = generate(tmp_path, capsys, "usage-gap")
    menu = write_json(
        tmp_path,
        "menu.json",
        {"contracts": [{"action": 0, "w": 0, "x": [0, "EXCLUDE"]}] * 2},
    )
    assert cli.run(["check-menu", inst, menu, "--regime", "mandatory"]) == cli.EXIT_INVALID


def test_defaults_show_and_save(isolated_defaults, capsys):
    assert cli.run(["defaults"]) == cli.EXIT_OK
    assert "No values provided" in capsys.readouterr().out
    assert cli.run(["defaults", "--epsilon", "1/20", "--threads", "2"]) == cli.EXIT_OK
    assert "Saved defaults to" in capsys.readouterr().out
    assert json.loads(isolated_defaults.read_text()) == {"epsilon": "1/20", "threads": 2}
    assert cli.run(["defaults", "--show"]) == cli.EXIT_OK
    assert "1/20" in capsys.readouterr().out


def test_common_flags_follow_the_subcommand(tmp_path, capsys):
    path = generate(tmp_path, capsys, "usage-gap")
    assert cli.run(["solve", path, "-v", "--threads", "2"]) == cli.EXIT_OK
    assert "Profit" in capsys.readouterr().out


def test_parse_helpers():
    assert cli.parse_items("1, 2,3").items == (1, 2, 3)
    assert cli.parse_mu("1/4,3/4") == (F(1, 4), F(3, 4))


def test_main_help_lists_commands(capsys):
    main_help.main()
    out = capsys.readouterr().out
    for command in ("solve", "compare", "fptas", "reduce-partition", "check-menu"):
        assert command in out
