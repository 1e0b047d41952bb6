"""Experiment driver and command line front end."""

import csv
import json

import numpy as np
import pytest

from sembed import cli
from sembed.experiments import (
    CSV_COLUMNS,
    ExperimentSpec,
    fitted_rate,
    run,
    write_artifacts,
)


def test_spec_rejects_unknown_kind():
    with pytest.raises(ValueError, match="kind"):
        ExperimentSpec(kind="nope")


def test_spec_rejects_unknown_method():
    with pytest.raises(ValueError, match="method"):
        ExperimentSpec(kind="h_convergence", method="fdm")


def test_spec_rejects_bad_orders():
    with pytest.raises(ValueError, match="orders"):
        ExperimentSpec(kind="h_convergence", p_ladder=(0,))
    with pytest.raises(ValueError):
        ExperimentSpec(kind="h_convergence", p_ladder=())


def test_spec_rejects_invalid_form_for_bc():
    with pytest.raises(ValueError, match="form"):
        ExperimentSpec(kind="h_convergence", bc="neumann",
                       form="nitsche_nonsym")


def test_form_aliases_resolve_per_condition():
    assert ExperimentSpec(kind="h_convergence",
                          bc="dirichlet").resolve_form() == "nitsche_nonsym"
    assert ExperimentSpec(kind="h_convergence", bc="neumann",
                          form="aubin").resolve_form() == "standard"
    assert ExperimentSpec(kind="h_convergence",
                          bc="robin").resolve_form() == "nitsche_full_condition"
    # concrete form names pass through unchanged
    assert ExperimentSpec(kind="h_convergence", bc="dirichlet",
                          form="nitsche_sym").resolve_form() == "nitsche_sym"


def test_fitted_rate_recovers_exact_power():
    h = np.array([0.4, 0.2, 0.1, 0.05])
    assert fitted_rate(h, 3.0 * h**2) == pytest.approx(2.0, abs=1e-12)


def test_h_convergence_rows_and_rate():
    spec = ExperimentSpec(kind="h_convergence", method="cbm",
                          lc_ladder=(0.3, 0.15), p_ladder=(2,))
    rows, rates = run(spec)
    assert len(rows) == 2
    for row in rows:
        assert set(CSV_COLUMNS) >= set(row)
        assert row["l1_error"] > 0
    assert rows[1]["l1_error"] < rows[0]["l1_error"]
    assert rates  # one fitted slope per order


def test_artifacts_round_trip(tmp_path):
    out = tmp_path / "study"
    spec = ExperimentSpec(kind="p_convergence", method="cbm",
                          lc_ladder=(0.3,), p_ladder=(1, 2),
                          out=str(out))
    rows, rates = run(spec)
    with open(out.with_suffix(".csv")) as fh:
        got = list(csv.DictReader(fh))
    assert len(got) == len(rows)
    assert got[0]["kind"] == "p_convergence"
    meta = json.loads(out.with_suffix(".json").read_text())
    assert meta["schema_version"] == 1
    assert meta["seed"] == 0
    assert meta["spec"]["method"] == "cbm"


def test_csv_rows_deterministic(tmp_path):
    runs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        spec = ExperimentSpec(kind="h_convergence", method="sbm-i",
                              lc_ladder=(0.3,), p_ladder=(2,), out=str(out))
        run(spec)
        with open(out.with_suffix(".csv")) as fh:
            rows = [{k: v for k, v in row.items() if k != "wall_time"}
                    for row in csv.DictReader(fh)]
        runs.append(rows)
    assert runs[0] == runs[1]


def test_cli_smoke(capsys):
    rc = cli.main(["--experiment", "h_convergence", "--method", "cbm",
                   "--lc-ladder", "0.3", "0.15", "--p-ladder", "2"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "rate" in out.lower()


def test_cli_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "res"
    rc = cli.main(["--experiment", "p_convergence", "--method", "cbm",
                   "--lc-ladder", "0.3", "--p-ladder", "1", "2",
                   "--out", str(out), "--dat"])
    assert rc == 0
    assert out.with_suffix(".csv").exists()
    assert out.with_suffix(".json").exists()
    assert out.with_suffix(".dat").exists()


def test_cli_reports_invalid_combo(capsys):
    rc = cli.main(["--experiment", "h_convergence", "--bc", "neumann",
                   "--form", "nitsche_nonsym"])
    assert rc == 2
    assert "form" in capsys.readouterr().err.lower()
