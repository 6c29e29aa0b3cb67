import json

import pytest

from renorm.cli import run


def write(path, text):
    path.write_text(text)
    return str(path)


def test_wick_vev_row(capsys):
    assert run(["wick", "--vev", "2,2"]) == 0
    assert capsys.readouterr().out.splitlines() == ["p,amp", '"2,2","2*D(1,2)^2"']


def test_star_table(capsys):
    assert run(["wick", "--star", "3;3"]) == 0
    rows = capsys.readouterr().out.splitlines()[1:]
    assert [r.split(",", 2)[2] for r in rows] == ['"6*D(1,2)^3"', '"18*D(1,2)^2"', '"9*D(1,2)"', "1"]


def test_hasse_dot(tmp_path, capsys):
    cfg = write(tmp_path / "pts.json", '{"points": [[0,0],[1,0],[2,0],[1,0]]}')
    assert run(["causal", "--hasse", cfg]) == 0
    out = capsys.readouterr().out
    assert out.startswith("digraph hasse {") and 'label="2,4"' in out


def test_mellin_pole_table(tmp_path, capsys):
    cfg = write(tmp_path / "h2.toml", "[symbol]\nexponent = -2.0\n")
    assert run(["mellin", "--poles", cfg]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "mu_pole,order,coeff_on_phi"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["1.0", "0.0", "-1.0"]


def test_unknown_key_is_a_config_error(tmp_path, capsys):
    cfg = write(tmp_path / "bad.toml", "bogus = 1\n")
    assert run(["microlocal", "--config", cfg]) == 2
    assert "unknown keys" in capsys.readouterr().err


def test_sampled_checks_need_a_seed(capsys):
    assert run(["criterion", "6"]) == 2
    assert "seed" in capsys.readouterr().err


def test_unparseable_config(tmp_path):
    cfg = write(tmp_path / "broken.toml", "seed = \n")
    assert run(["wightman", "--config", cfg]) == 2


def test_failed_check_reports_json(tmp_path, capsys):
    cfg = write(tmp_path / "ce.toml", 'seed = 3\nsamples = 2000\n[cone]\nkind = "counterexample"\nexpect = true\n')
    assert run(["microlocal", "--config", cfg]) == 1
    # stdout holds the written report followed by the failure report
    decoder = json.JSONDecoder()
    out = capsys.readouterr().out
    written, end = decoder.raw_decode(out)
    failure, _ = decoder.raw_decode(out[end:].lstrip())
    assert written["holds"] is False and written["witness"] is not None
    assert failure["summary"] == "soft landing verdict differs from expectation"


def test_outputs_are_byte_identical(tmp_path):
    cfg = write(tmp_path / "w.toml", "poisson = [[1.0, [0.5, 0.0], 3]]\ndelta_plus = [[0.0, 1.0, 1.0]]\n")
    first, second = tmp_path / "a", tmp_path / "b"
    assert run(["wightman", "--config", cfg, "--out", str(first)]) == 0
    assert run(["wightman", "--config", cfg, "--out", str(second)]) == 0
    names = sorted(p.name for p in first.iterdir())
    assert names == ["delta_plus.csv", "poisson.csv"]
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_criterion_output_has_no_timing(tmp_path, capsys):
    assert run(["criterion", "6", "--seed", "0", "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "criterion_06.json").read_text())
    assert data["passed"] and "elapsed" not in data
    assert "[PASS] criterion  6" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["wick"], ["mellin"], ["causal"]])
def test_empty_requests_are_config_errors(argv):
    assert run(argv) == 2
