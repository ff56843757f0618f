import json

import numpy as np
import pytest
from PIL import Image

from imchaos import __version__, cli
from imchaos.errors import FactorizationFailure
from imchaos.reports import FAIL, PASS, MomentReport


@pytest.fixture(autouse=True)
def one_worker(monkeypatch):
    monkeypatch.setenv("IMCHAOS_WORKERS", "1")


def _manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_unknown_flag_writes_nothing(tmp_path):
    out = tmp_path / "o"
    assert cli.run(["onsager", "--bogus", "1", "--out", str(out)]) == 2
    assert not out.exists()
    assert cli.run(["no-such-command"]) == 2
    # abbreviations are not accepted either
    assert cli.run(["onsager", "--conf", "10", "--out", str(out)]) == 2
    assert not out.exists()


def test_number_parsing():
    assert cli.number("1/128") == pytest.approx(1 / 128)
    assert cli.number("0.25") == 0.25
    assert cli.count("1e6") == 1_000_000
    with pytest.raises(Exception):
        cli.count("1.5")


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# small batch\nconfigs = 50\nnmax=8\nvariant = gff-global\n")
    out = tmp_path / "o"
    code = cli.run(["onsager", "--config", str(cfg), "--nmax", "12", "--seed", "3", "--out", str(out)])
    assert code in (0, 3)
    m = _manifest(out)
    assert m["params"]["configs"] == 50
    assert m["params"]["nmax"] == 12  # the flag wins
    assert m["params"]["variant"] == "gff-global"
    assert m["seed"] == 3 and m["version"] == __version__
    assert {"cmd", "params", "seed", "version", "started", "finished", "verdicts"} <= set(m)


def test_config_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("configs = 50\ncolour = red\n")
    out = tmp_path / "o"
    assert cli.run(["onsager", "--config", str(cfg), "--out", str(out)]) == 2
    assert not out.exists()
    cfg.write_text("variant = nope\n")
    assert cli.run(["onsager", "--config", str(cfg), "--out", str(out)]) == 2


def _fake(verdict):
    def cmd(args, ctx):
        return [("fake", MomentReport("fake", 1.0, 0.1, 10, 1.0, verdict, "", {"x": np.arange(2)}))]

    return cmd


def test_exit_codes(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "cmd_onsager", _fake(PASS))
    assert cli.run(["onsager", "--out", str(tmp_path / "a")]) == 0
    monkeypatch.setattr(cli, "cmd_onsager", _fake(FAIL))
    assert cli.run(["onsager", "--out", str(tmp_path / "b")]) == 3
    assert _manifest(tmp_path / "b")["verdicts"] == [{"check": "fake", "verdict": "FAIL"}]
    rows = (tmp_path / "b" / "results.csv").read_text().splitlines()
    assert rows[0] == "check,params,value,oracle,verdict"

    def broken(args, ctx):
        raise FactorizationFailure("covariance is not positive definite")

    monkeypatch.setattr(cli, "cmd_onsager", broken)
    assert cli.run(["onsager", "--out", str(tmp_path / "c")]) == 4


def test_bad_worker_count(tmp_path):
    assert cli.run(["onsager", "--workers", "0", "--out", str(tmp_path / "o")]) == 2


def test_figure1_writes_two_pngs(tmp_path):
    out = tmp_path / "fig"
    assert cli.run(["figure1", "--modes", "40", "--beta", "0.70710678", "--pixels", "48", "--seed", "1", "--out", str(out)]) == 0
    for name in ("gff.png", "cosine.png"):
        im = Image.open(out / name)
        assert im.size == (48, 48) and im.mode == "RGB"
    assert set(_manifest(out)["files"]) >= {"gff.png", "cosine.png", "figure1.json"}


def test_onsager_gff_global_example(tmp_path):
    out = tmp_path / "ons"
    assert cli.run(["onsager", "--variant", "gff-global", "--configs", "10000", "--nmax", "64", "--out", str(out)]) == 0
    rep = json.loads((out / "onsager_gff_global.json").read_text())
    assert rep["verdict"] == "PASS"
    assert _manifest(out)["verdicts"] == [{"check": "onsager_gff_global", "verdict": "PASS"}]


def test_sample_field_outputs(tmp_path):
    from imchaos.field.io import decode_field

    out = tmp_path / "sf"
    assert cli.run(["sample-field", "--domain", "square", "--modes", "8", "--grid-points", "16", "--out", str(out)]) == 0
    r = decode_field((out / "field.imcf").read_bytes())
    assert r.values.size == 256
    assert (out / "field.csv").read_text().startswith("x,y,value,variance")
