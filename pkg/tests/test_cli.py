import json
import os
import subprocess
import sys

import pytest

from finbisim import __version__
from finbisim.artifact import load_fub, save_fub
from finbisim.cli import main
from finbisim.dfm import build_dfm
from finbisim.errors import DigestMismatch

SPECS = os.path.join(os.path.dirname(__file__), "..", "specs")
FIVE = os.path.join(SPECS, "triangular_five_letter.yaml")
STRIPS = os.path.join(SPECS, "unstable_strips.yaml")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_analyze_five_letter(capsys):
    code, out, _ = run(capsys, "analyze", FIVE)
    d = json.loads(out)
    assert code == 0
    s = d["summary"]
    assert s["hypotheses"]["schur_stable"]
    assert s["one_step_disjointness"]["verdict"] == "DisjointCertified"
    assert s["necessary_conditions"]["warnings"] == []
    assert s["reach_norm_bound"] == pytest.approx(4 / 3)
    assert s["h"] == 1.0


def test_analyze_strips_warns(capsys):
    code, out, _ = run(capsys, "analyze", STRIPS)
    d = json.loads(out)
    assert code == 0
    codes = [w["code"] for w in d["summary"]["necessary_conditions"]["warnings"]]
    assert codes == ["unstable-no-bounded-regular-fub"]
    assert d["verdicts"]["necessary_conditions"] == "WARN"


def test_malformed_spec(capsys, tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("format: finbisim-spec/1\nn: 2\nm: 2\nA: [[1, 2], [3]]\nB: [[1, 0], [0, 1]]\nU: [[0, 0]]\n")
    code, _, err = run(capsys, "analyze", str(p))
    assert code == 2
    assert "line 4" in err and "SpecError" in err


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "analyze", str(tmp_path / "nope.yaml"))
    assert code == 2 and "error" in err


@pytest.mark.parametrize("z, count", [(4, 5), (24, 25)])
def test_compute_counts(capsys, tmp_path, z, count):
    code, out, _ = run(capsys, "compute", FIVE, "--algorithm", "2", "--min-classes", str(z),
                       "--out", str(tmp_path))
    assert code == 0
    d = json.loads(out)
    assert d["summary"]["classes"] == count
    assert d["verdicts"]["certificate"] == "PASS"
    names = sorted(os.listdir(tmp_path))
    assert names == ["dfm.dot", "dfm.tsv", "fub.json", "geometry.json", "summary.json"]
    fub = load_fub(tmp_path / "fub.json")
    assert len(fub) == count
    for name in names:
        text = (tmp_path / name).read_text()
        assert fub.sys.digest() in text and __version__ in text


def test_compute_alphabet_too_small(capsys, tmp_path):
    code, _, err = run(capsys, "compute", STRIPS, "--algorithm", "1", "--out", str(tmp_path))
    assert code == 2
    assert "AlphabetTooSmall" in err and "hint" in err


def test_compute_gate_and_force(capsys, tmp_path):
    cantor = os.path.join(SPECS, "cantor_segments.yaml")
    code, _, err = run(capsys, "compute", cantor, "--out", str(tmp_path))
    assert code == 2 and "not invertible" in err
    code, out, _ = run(capsys, "compute", cantor, "--algorithm", "1", "--out", str(tmp_path))
    assert code == 0
    assert json.loads(out)["summary"]["provenance"]["k_tilde"] == 4


def test_no_separation_hint(capsys, tmp_path):
    code, _, err = run(capsys, "compute", FIVE, "--k-max", "1", "--out", str(tmp_path))
    assert code == 2
    assert "NoSeparationWithinBudget" in err and "--k-max" in err


def test_outputs_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run(capsys, "compute", FIVE, "--min-classes", "24", "--out", str(out))[0] == 0
    for name in ("fub.json", "geometry.json", "dfm.dot", "dfm.tsv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    sa = json.loads((a / "summary.json").read_text())
    sb = json.loads((b / "summary.json").read_text())
    sa.pop("created"), sb.pop("created")
    sa.pop("outputs"), sb.pop("outputs")
    assert sa == sb


def test_artifact_round_trip(tmp_path, fub25):
    save_fub(fub25, tmp_path / "f.json")
    back = load_fub(tmp_path / "f.json", expect_digest=fub25.sys.digest())
    assert back.sys == fub25.sys
    assert (back.cell_centers == fub25.cell_centers).all()
    assert back.provenance == fub25.provenance
    assert build_dfm(back) == build_dfm(fub25)
    save_fub(back, tmp_path / "g.json")
    assert (tmp_path / "f.json").read_bytes() == (tmp_path / "g.json").read_bytes()
    with pytest.raises(DigestMismatch):
        load_fub(tmp_path / "f.json", expect_digest="0" * 64)


def _compute(capsys, out, z="4"):
    assert run(capsys, "compute", FIVE, "--min-classes", z, "--out", str(out))[0] == 0
    return out / "fub.json"


def test_verify_fresh_artifact(capsys, tmp_path):
    art = _compute(capsys, tmp_path)
    code, out, _ = run(capsys, "verify", str(art), FIVE, "--samples", "2000", "--depth", "20")
    d = json.loads(out)
    assert code == 0
    assert set(d["verdicts"].values()) == {"PASS"}
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert report["format"] == "finbisim-audit/1"
    assert report["spec_digest"] == d["spec_digest"]


def test_verify_hand_edited_radius(capsys, tmp_path):
    art = _compute(capsys, tmp_path)
    doc = json.loads(art.read_text())
    for c in doc["classes"]:
        c["radius"] *= 10
    art.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "verify", str(art), FIVE, "--samples", "1000", "--depth", "10")
    d = json.loads(out)
    assert code == 1
    assert d["verdicts"]["disjointness"] == "FAIL"
    audits = {a["property"]: a for a in d["summary"]["audits"]}
    assert audits["disjointness"]["violations"]


def test_verify_zero_samples(capsys, tmp_path):
    art = _compute(capsys, tmp_path)
    code, out, _ = run(capsys, "verify", str(art), FIVE, "--samples", "0")
    d = json.loads(out)
    assert code == 0
    assert d["summary"]["no_evidence"] is True


def test_verify_digest_mismatch(capsys, tmp_path):
    art = _compute(capsys, tmp_path)
    code, _, err = run(capsys, "verify", str(art), STRIPS)
    assert code == 2 and "DigestMismatch" in err


def test_exports(capsys, tmp_path):
    art = _compute(capsys, tmp_path)
    code, out, _ = run(capsys, "export-dfm", str(art))
    assert code == 0 and out.count("->") == 25
    code, out, _ = run(capsys, "export-dfm", str(art), "--format", "tsv")
    assert out.splitlines()[0] == "state\tletter\tnext" and len(out.splitlines()) == 26
    code, out, _ = run(capsys, "export-geometry", str(art))
    g = json.loads(out)
    assert g["format"] == "finbisim-geometry/1"
    assert len(g["classes"]) == 5
    assert len(g["classes"][0]["cells"][0]["vertices"]) == 4


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "finbisim", "analyze", FIVE],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["command"] == "analyze"
