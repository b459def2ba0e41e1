from __future__ import annotations

import json
import subprocess
import sys
import time

import pytest

from feec import io, meshes
from feec.cli import EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK, main
from feec.flux import closed_nonexact_form, layout_for
from feec.spaces.assignment import uniform_assignment
from feec.spaces.layout import GlobalForm


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--json")
    return code, json.loads(out)


def _strip_timings(data):
    data = dict(data)
    data.pop("timings", None)
    return data


def test_dims_full_p2_one_forms_on_a_tet(capsys):
    code, data = run_json(capsys, "dims", "--n", "3", "--r", "2", "--k", "1", "--family", "full", "--variant", "plain")
    assert code == EXIT_OK
    (row,) = data["rows"]
    assert row["enumerated"] == row["formula"] == 30


def test_dims_trimmed_ring_below_threshold(capsys):
    code, data = run_json(capsys, "dims", "--n", "2", "--r", "1", "--k", "1", "--family", "trimmed", "--variant", "ring")
    assert data["rows"][0]["enumerated"] == 0


def test_dims_flags_the_published_ring_formula(capsys):
    code, data = run_json(capsys, "dims", "--n", "2", "--r", "3", "--k", "0", "--family", "full", "--variant", "ring")
    (row,) = data["rows"]
    assert row["enumerated"] == 1
    assert row["formula_discrepancy"] and row["printed_formula"] != 1
    assert code == EXIT_OK


def test_dims_full_table(capsys):
    code, out, _ = run(capsys, "dims")
    assert code == EXIT_OK
    assert out.strip().splitlines()[-1] == "360 rows, 0 mismatches"


@pytest.mark.parametrize("mesh,relative,expected", [
    ("disk", False, [1, 0, 0]),
    ("annulus", False, [1, 1, 0]),
    ("disk", True, [0, 0, 1]),
])
def test_betti(capsys, mesh, relative, expected):
    args = ["betti", "--mesh", mesh] + (["--relative"] if relative else [])
    code, data = run_json(capsys, *args)
    assert code == EXIT_OK
    assert data["betti"] == data["whitney_cohomology"] == expected


def test_betti_with_a_finite_element_complex(capsys):
    code, data = run_json(capsys, "betti", "--mesh", "annulus", "--family", "trimmed", "--r", "2")
    assert code == EXIT_OK and data["fe_cohomology"] == [1, 1, 0]


def test_betti_summary_verdict(capsys):
    code, out, _ = run(capsys, "betti", "--mesh", "disk.json")
    assert "verdict: EQUAL" in out


def test_flux_random_exact(capsys, tmp_path):
    out_path = tmp_path / "xi.json"
    code, data = run_json(capsys, "flux", "--mesh", "disk", "--r", "2", "--random-exact", "42", "--output", str(out_path))
    assert code == EXIT_OK
    assert data["report"]["full_residual"] < 1e-8
    assert json.loads(out_path.read_text())["whitney"]


def test_flux_harmonic_input_exits_infeasible(capsys, tmp_path):
    c = meshes.annulus()
    layout = layout_for(uniform_assignment(c, "trimmed", 2), 1)
    path = tmp_path / "h.json"
    io.save_form(path, closed_nonexact_form(layout))
    code, data = run_json(capsys, "flux", "--mesh", "annulus", "--r", "2", "--input", str(path))
    assert code == EXIT_INFEASIBLE
    assert data["status"] == "harmonic-residual" and data["harmonic_residual"] > 1e-3


def test_flux_zero_input(capsys, tmp_path):
    c = meshes.disk()
    layout = layout_for(uniform_assignment(c, "trimmed", 2), 1)
    path = tmp_path / "zero.json"
    io.save_form(path, GlobalForm.zero(layout))
    code, data = run_json(capsys, "flux", "--mesh", "disk", "--r", "2", "--input", str(path))
    assert code == EXIT_OK
    xi = data["xi"]
    assert all(float(x) == 0 for x in xi["whitney"] + [y for b in xi["interior"].values() for y in b])


def test_flux_with_an_order_spec(capsys):
    spec = json.dumps({"default": {"family": "trimmed", "order": 1},
                       "overrides": [{"simplex": [0, 1, 6], "family": "trimmed", "order": 3}]})
    code, data = run_json(capsys, "flux", "--mesh", "square", "--order-spec", spec, "--random-exact", "1")
    assert code == EXIT_OK and data["report"]["full_residual"] < 1e-8


def test_estimate_reliability_pass(capsys):
    code, out, _ = run(capsys, "estimate", "--mesh", "disk", "--r", "1", "--manufactured", "7")
    assert code == EXIT_OK
    assert "reliability η ≥ error: PASS" in out


def test_estimate_lowest_order_agreement(capsys):
    code, data = run_json(capsys, "estimate", "--mesh", "disk", "--r", "0", "--manufactured", "3")
    assert code == EXIT_OK and data["lowest_order_difference"] < 1e-10


def test_estimate_cubic_on_two_triangles_is_fast(capsys):
    start = time.perf_counter()
    code, _, _ = run(capsys, "estimate", "--mesh", "two_triangles", "--r", "3", "--manufactured", "1")
    assert code == EXIT_OK
    assert time.perf_counter() - start < 5


@pytest.mark.parametrize("argv", [
    ["betti", "--mesh", "no_such_mesh"],
    ["flux", "--mesh", "disk", "--order-spec", '{"default": {"family": "cubic", "order": 1}}', "--random-exact", "0"],
    ["flux", "--mesh", "disk", "--k", "5", "--random-exact", "0"],
    ["flux", "--mesh", "disk"],
    ["estimate", "--mesh", "disk"],
    ["estimate", "--mesh", "tet_fan", "--manufactured", "1"],
])
def test_input_errors_exit_one(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_INPUT
    assert err.startswith("error:")


def test_bad_json_mesh_file(capsys, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    code, _, err = run(capsys, "betti", "--mesh", str(path))
    assert code == EXIT_INPUT


def test_report_file_and_determinism(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "estimate", "--mesh", "square", "--r", "2", "--manufactured", "5", "--report", str(a))
    run(capsys, "--threads", "3", "estimate", "--mesh", "square", "--r", "2", "--manufactured", "5", "--report", str(b))
    da, db = json.loads(a.read_text()), json.loads(b.read_text())
    assert io.dumps(_strip_timings(da)) == io.dumps(_strip_timings(db))
    assert da["config"]["seed"] == 5


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "feec", "dims", "--n", "1", "--r", "1", "--k", "0",
                           "--family", "full", "--variant", "plain"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "1 rows, 0 mismatches" in proc.stdout
