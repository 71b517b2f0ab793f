import json

import numpy as np
import pytest

from hjb_pi.cli import TRAJECTORY_HEADER, execute_command


def read_lines(path):
    return path.read_text().splitlines()


def test_argparse_failures_exit_2():
    assert execute_command([]) == 2
    assert execute_command(["run1d", "--no-such-flag"]) == 2
    assert execute_command(["frobnicate"]) == 2


def test_run1d_artifacts(tmp_path):
    out = tmp_path / "a"
    code = execute_command(
        ["run1d", "--h", "0.2", "--iterations", "5", "--out-dir", str(out)]
    )
    assert code == 0
    lines = read_lines(out / "run1d_trajectory.csv")
    assert lines[0] == ",".join(TRAJECTORY_HEADER)
    assert len(lines) == 6  # header + one row per iteration
    first = lines[1].split(",")
    assert first[0] == "0" and first[3] == "nan" and first[4] == "nan"
    assert [row.split(",")[0] for row in lines[1:]] == ["0", "1", "2", "3", "4"]

    summary = json.loads((out / "run1d_summary.json").read_text())
    assert summary["config"]["lambda"] == 1.0
    assert summary["config"]["h"] == 0.2
    assert summary["result"]["iterations_run"] == 5
    assert "timestamp" not in json.dumps(summary)


def test_run1d_reruns_are_byte_identical(tmp_path):
    args = ["run1d", "--h", "0.2", "--iterations", "5"]
    execute_command(args + ["--out-dir", str(tmp_path / "one")])
    execute_command(args + ["--out-dir", str(tmp_path / "two")])
    a = (tmp_path / "one" / "run1d_trajectory.csv").read_bytes()
    b = (tmp_path / "two" / "run1d_trajectory.csv").read_bytes()
    assert a == b


def test_run1d_rejects_incompatible_mesh(tmp_path, capsys):
    code = execute_command(
        ["run1d", "--h", "0.07", "--out-dir", str(tmp_path / "bad")]
    )
    assert code == 1
    assert capsys.readouterr().err.startswith("error:")


def test_run2d_slices(tmp_path):
    out = tmp_path / "b"
    code = execute_command(
        ["run2d", "--h", "0.2", "--iterations", "6", "--out-dir", str(out)]
    )
    assert code == 0
    for name in ("run2d_slice_x0.csv", "run2d_slice_y0.csv"):
        lines = read_lines(out / name)
        # snapshots 0 and 5 fall inside a 6-iteration run; 15 and 30 do not
        assert lines[0] == "coord,reference,v_n0,v_n5,v_final"
        assert len(lines) == 22  # header + 21 nodes per axis
        coords = np.array([float(r.split(",")[0]) for r in lines[1:]])
        assert coords[0] == -2.0 and coords[-1] == 2.0
        assert np.allclose(np.diff(coords), 0.2)
        # boundary rows carry Dirichlet data, which is the reference itself
        for row in (lines[1], lines[-1]):
            cells = row.split(",")
            assert cells[1] == cells[-1]


def test_sweep_artifacts(tmp_path):
    out = tmp_path / "c"
    code = execute_command(
        [
            "sweep",
            "--h-list", "0.5,0.25,0.125",
            "--max-iterations", "10",
            "--out-dir", str(out),
        ]
    )
    assert code == 0
    lines = read_lines(out / "sweep.csv")
    assert lines[0] == "h,n_iterations,linf_error,l2_error"
    assert len(lines) == 4
    hs = [float(r.split(",")[0]) for r in lines[1:]]
    errs = [float(r.split(",")[2]) for r in lines[1:]]
    assert hs == [0.5, 0.25, 0.125]
    assert errs[0] > errs[1] > errs[2] > 0
    summary = json.loads((out / "sweep_summary.json").read_text())
    assert summary["result"]["fitted_slope"] > 0.45
    assert summary["result"]["points_used"] == 3


def test_sweep_rejects_empty_h_list(tmp_path, capsys):
    code = execute_command(
        ["sweep", "--h-list", ",", "--out-dir", str(tmp_path / "d")]
    )
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_check_fast_passes(capsys):
    assert execute_command(["check", "--fast"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "SKIP" in out
    assert not any(line.startswith("FAIL") for line in out.splitlines())


def test_bench_writes_json_report(tmp_path, capsys):
    path = tmp_path / "bench.json"
    code = execute_command(["bench", "--repeats", "1", "--json", str(path)])
    assert code == 0
    payload = json.loads(path.read_text())
    assert "python" in payload["backends"]
    for times in payload["backends"].values():
        assert times["thomas_seconds_per_solve"] > 0
        assert times["sor_seconds_per_sweep"] > 0
    assert "us/solve" in capsys.readouterr().out
