import json
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levelset_lab.errors import ParseError, UnknownKey, ValidationError
from levelset_lab.harness import PRESETS, check_manifest, list_presets, parse_config, preset_config, run_experiment
from levelset_lab.harness.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_OK, main


def test_defaults_parse():
    c = parse_config("")
    assert c.n == 128 and c.T == 1.0
    assert c.output_times == (0.25, 0.5, 0.75, 1.0)
    assert c.mode.kind == "grad_preserving"


def test_small_grid_is_rejected():
    with pytest.raises(ValidationError):
        parse_config("grid.n = 4")


def test_unknown_key_is_named():
    with pytest.raises(UnknownKey, match="grd.n"):
        parse_config("grd.n = 64")


def test_parse_error_reports_line():
    with pytest.raises(ParseError) as err:
        parse_config("grid.n = 64\n\n# comment\nthis line has no separator\n")
    assert err.value.line == 4
    with pytest.raises(ParseError) as err:
        parse_config("grid.n = 64\ngrid.n = 32\n")
    assert err.value.line == 2
    with pytest.raises(ParseError):
        parse_config("grid.n = many")


def test_override_beats_file_beats_preset():
    c = parse_config("preset = vortex2d\ngrid.n = 64\n", ["grid.n=32"])
    assert c.n == 32
    assert c.field_id == "vortex"
    assert parse_config("preset = vortex2d\ngrid.n = 64\n").n == 64


def test_mode_beta_rules():
    with pytest.raises(ValidationError):
        parse_config("mode.kind = grad_bounding")
    with pytest.raises(ValidationError):
        parse_config("mode.beta = 1.0")
    with pytest.raises(ValidationError):
        parse_config("preset = nosuch")


@pytest.mark.parametrize("name", list(PRESETS))
def test_every_preset_parses(name):
    c = preset_config(name)
    assert c.preset == name
    assert parse_config(c.to_text()) == c


def test_preset_listing_matches_registry():
    assert [name for name, _ in list_presets()] == list(PRESETS)
    assert all(summary for _, summary in list_presets())


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(0.0, 0.5))
def test_gradbound_beta_override(beta, eps):
    c = preset_config("gradbound2d", [f"mode.beta={beta!r}", f"cutoff.eps={eps!r}" if eps > 0 else "cutoff.eps=auto"])
    assert c.mode.beta == beta
    assert c.eps == ("auto" if eps == 0 else eps)


def test_cli_lists_presets(capsys):
    assert main(["presets"]) == EXIT_OK
    out = capsys.readouterr().out
    assert all(name in out for name in PRESETS)


def test_cli_bad_config_writes_nothing(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("grid.n = 4\n")
    out = tmp_path / "runs"
    assert main(["run", str(bad), "--out-dir", str(out)]) == EXIT_CONFIG
    assert not out.exists()
    assert main(["run", "nosuch-preset", "--out-dir", str(out)]) == EXIT_CONFIG
    assert main(["run", "zero-field-smoke", "--out-dir", str(out), "--override", "grd.n=8"]) == EXIT_CONFIG
    assert not out.exists()


def test_cli_smoke_run_passes_quickly(tmp_path, capsys):
    start = time.perf_counter()
    code = main(["run", "zero-field-smoke", "--out-dir", str(tmp_path)])
    elapsed = time.perf_counter() - start
    assert code == EXIT_OK
    assert elapsed < 10.0
    run_dir = tmp_path / "zero-field-smoke-n32-seed0"
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert all(c["verdict"] in ("pass", "skip") for c in manifest["checks"].values())
    assert manifest["checks"]["interface"]["verdict"] == "pass"
    for name in manifest["files"]:
        assert (run_dir / name).stat().st_size > 0
    assert main(["check", str(run_dir)]) == EXIT_OK
    # no temporary directories left behind
    assert [p.name for p in tmp_path.iterdir()] == [run_dir.name]


def test_check_flags_failed_manifest(tmp_path):
    m = run_experiment(preset_config("zero-field-smoke"), tmp_path)
    path = tmp_path / m.run_id / "manifest.json"
    data = json.loads(path.read_text())
    data["checks"]["interface"]["verdict"] = "fail"
    path.write_text(json.dumps(data))
    ok, problems = check_manifest(path)
    assert not ok and problems == ["check failed: interface"]
    assert main(["check", str(path)]) == EXIT_CHECK


def test_smoke_run_is_deterministic(preset_run):
    first, _, _ = preset_run("zero-field-smoke")
    second, _, _ = preset_run("zero-field-smoke", ("seed=0",))
    assert first.keys() == second.keys()
    assert all(first[k] == second[k] for k in first)


def test_vortex2d_dumps_every_output(preset_run):
    files, constants, _ = preset_run("vortex2d")
    dumps = sorted(k for k in files if k.startswith("grid_grad_preserving_"))
    assert len(dumps) >= 4
    assert constants["h"] == pytest.approx(1 / 128)
    assert constants["V0"] > 0 and np.isfinite(constants["alpha"])
