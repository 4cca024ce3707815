import json
import random

import pytest

from clausenet.cli import main
from clausenet.cnf import pigeonhole, random_ksat, write_dimacs


@pytest.fixture
def sat_file(tmp_path):
    p = tmp_path / "sat.cnf"
    p.write_text("p cnf 2 2\n1 0\n-1 2 0\n")
    return p


def test_solve_sat(sat_file, capsys, tmp_path):
    stats, trace = tmp_path / "s.json", tmp_path / "t.csv"
    code = main(["solve", str(sat_file), "--stats", str(stats), "--trace", str(trace)])
    out = capsys.readouterr().out.splitlines()
    assert code == 10
    assert "s SATISFIABLE" in out and "v 1 2 0" in out
    assert json.loads(stats.read_text())["verdict"] == "SAT"
    assert trace.read_text().startswith("cycle,kind,src,dst,fields")


def test_solve_unsat(tmp_path, capsys):
    p = tmp_path / "php.cnf"
    p.write_text(write_dimacs(pigeonhole(3, 2)))
    assert main(["solve", str(p), "--topology", "flatbfly", "--grid", "2"]) == 20
    assert "s UNSATISFIABLE" in capsys.readouterr().out


def test_solve_unknown(tmp_path, capsys):
    p = tmp_path / "hard.cnf"
    p.write_text(write_dimacs(random_ksat(60, 256, rng=random.Random(50))))
    assert main(["solve", str(p), "--max-conflicts", "3"]) == 0
    assert "s UNKNOWN" in capsys.readouterr().out


def test_solve_bad_file(tmp_path):
    p = tmp_path / "bad.cnf"
    p.write_text("p cnf 1 1\n2 0\n")
    with pytest.raises(SystemExit):
        main(["solve", str(p)])


def test_solve_capacity_error(tmp_path, capsys):
    p = tmp_path / "big.cnf"
    p.write_text(write_dimacs(random_ksat(10, 20, rng=random.Random(1))))
    assert main(["solve", str(p), "--grid", "1", "--bank-size", "8"]) == 1
    assert "c error" in capsys.readouterr().err


def test_characterize(sat_file, capsys):
    assert main(["characterize", str(sat_file), "--percentiles", "0.5", "1.0", "--csv"]) == 0
    assert capsys.readouterr().out.splitlines() == [
        "percentile,clause_length,var_popularity", "0.5,1,1", "1.0,2,2"]


def test_compare(tmp_path, capsys):
    for i in range(2):
        (tmp_path / f"r{i}.cnf").write_text(write_dimacs(random_ksat(10, 40, rng=random.Random(i))))
    assert main(["compare", "--corpus", str(tmp_path)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "instance,mesh_cycles,flatbfly_cycles"
    assert out[-1].startswith("geomean,1.0000,")
    assert len(out) == 4


def test_compare_empty(tmp_path):
    assert main(["compare", "--corpus", str(tmp_path)]) == 1
