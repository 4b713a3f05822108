import json

import numpy as np
import pytest

from conftest import blur_rgb, save_png, texture_rgb
from resift.cli import main

HEADER = "ref,dist,mos,database,category\n"


@pytest.fixture(scope="module")
def image_pair(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli_imgs")
    ref = texture_rgb(90, 64)
    ref_path = d / "ref.png"
    dist_path = d / "dist.png"
    save_png(ref, ref_path)
    save_png(blur_rgb(ref, 1.5), dist_path)
    return str(ref_path), str(dist_path)


def test_score_identity_stdout(image_pair, capsys):
    ref, _ = image_pair
    code = main(["score", "--ref", ref, "--dist", ref])
    out = capsys.readouterr().out
    assert code == 0
    assert "score=100" in out
    assert "matches=" in out and "dist=" in out


def test_score_missing_input(image_pair, capsys):
    ref, _ = image_pair
    code = main(["score", "--ref", ref, "--dist", "no_such_file.png"])
    err = capsys.readouterr().err
    assert code == 2
    assert "no_such_file.png" in err


def test_score_json_schema(image_pair, capsys):
    ref, dist = image_pair
    code = main(["score", "--ref", ref, "--dist", dist, "--json"])
    out = capsys.readouterr().out
    assert code == 0
    payload = json.loads(out)
    assert set(payload) >= {"score", "matches", "dist"}
    assert isinstance(payload["score"], float)
    assert isinstance(payload["matches"], int)


def test_internal_error_exit_code(image_pair, capsys, monkeypatch):
    ref, dist = image_pair
    import resift.cli as cli_mod

    def boom(*args, **kwargs):
        raise RuntimeError("synthetic failure")

    monkeypatch.setattr(cli_mod, "resift_score", boom)
    code = main(["score", "--ref", ref, "--dist", dist])
    assert code == 1
    assert "internal error" in capsys.readouterr().err


def test_usage_error_exit_code(capsys):
    assert main(["score", "--ref", "x.png"]) == 2


def test_config_show_table_values(capsys):
    code = main(["config", "--show"])
    out = capsys.readouterr().out
    assert code == 0
    lines = out.splitlines()
    for expected in ("perc = 5", "C1 = 100000", "f_size = 4", "h_sigma = 3.8"):
        assert expected in lines


def test_config_env_var(tmp_path, capsys, monkeypatch):
    p = tmp_path / "env.cfg"
    p.write_text("perc = 9\n")
    monkeypatch.setenv("RESIFT_CONFIG", str(p))
    code = main(["config", "--show"])
    out = capsys.readouterr().out
    assert code == 0
    assert "perc = 9" in out.splitlines()


def test_config_flag_overrides_env(tmp_path, capsys, monkeypatch):
    env_cfg = tmp_path / "env.cfg"
    env_cfg.write_text("perc = 9\n")
    flag_cfg = tmp_path / "flag.cfg"
    flag_cfg.write_text("perc = 11\n")
    monkeypatch.setenv("RESIFT_CONFIG", str(env_cfg))
    main(["config", "--config", str(flag_cfg)])
    assert "perc = 11" in capsys.readouterr().out.splitlines()


def test_maps_dump(image_pair, tmp_path, capsys):
    ref, _ = image_pair
    out_dir = tmp_path / "maps"
    code = main(["maps", "--ref", ref, "--dump-dir", str(out_dir)])
    assert code == 0
    for name in ("lightness", "lnorm", "saliency", "pooled"):
        assert (out_dir / f"{name}.f32").exists()
        assert (out_dir / f"{name}.f32.meta").exists()
    assert (out_dir / "dog_o0_l0.f32").exists()
    from resift.imageio import load_map

    lightness = load_map(out_dir / "lightness.f32")
    assert lightness.width == 64 and lightness.height == 64


def test_batch(image_pair, tmp_path, capsys):
    ref, dist = image_pair
    manifest = tmp_path / "m.csv"
    manifest.write_text(
        HEADER
        + f"{ref},{ref},5.0,SYN,gblur\n"
        + f"{ref},{dist},3.0,SYN,gblur\n"
        + f"{ref},{tmp_path / 'missing.png'},1.0,SYN,gblur\n"
    )
    out_csv = tmp_path / "scores.csv"
    code = main(["batch", "--manifest", str(manifest), "--out", str(out_csv)])
    assert code == 0
    lines = out_csv.read_text().splitlines()
    assert lines[0] == "ref,dist,score,matches,dist_threshold"
    assert len(lines) == 4
    assert lines[1].split(",")[2] == "100.0"
    assert lines[3].split(",")[2] == "NA"
    assert (tmp_path / "scores.csv.errors").exists()


def test_batch_bad_manifest(tmp_path, capsys):
    manifest = tmp_path / "bad.csv"
    manifest.write_text("not,a,header\n")
    code = main(["batch", "--manifest", str(manifest), "--out", str(tmp_path / "o.csv")])
    assert code == 2


def test_bench_report_schema(image_pair, tmp_path, capsys):
    ref, dist = image_pair
    rows = [f"{ref},{dist},2.5,SYN,gblur", f"{dist},{ref},4.0,SYN,wn", f"{ref},{ref},5.0,SYN,jpeg"]
    manifest = tmp_path / "m.csv"
    manifest.write_text(HEADER + "\n".join(rows) + "\n")
    report_path = tmp_path / "report.json"
    code = main(
        ["bench", "--manifest", str(manifest), "--report", str(report_path),
         "--scatter-dir", str(tmp_path / "sc")]
    )
    assert code == 0
    report = json.loads(report_path.read_text())
    entry = report["SYN"]
    assert set(entry) >= {"pearson_fitted", "spearman_raw", "n", "categories", "beta", "errors"}
    assert entry["n"] == 3
    assert (tmp_path / "sc" / "scatter_SYN.csv").exists()
