import io
import json
import shutil

import numpy as np
import pytest

from nsfit.analysis import TABLE1, calibrate, concentration
from nsfit.cli import main
from nsfit.io import parse_spectrum_file, write_spectrum_file


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue()


@pytest.fixture
def table1_csv(tmp_path):
    path = tmp_path / "table1.csv"
    path.write_text("ppm,mu270\n" + "".join(f"{p},{m}\n" for _, p, m in TABLE1))
    return path


def test_conc(capsys):
    code, text = run("conc", "--mu270", 5.9, "--convention", "decadic")
    assert code == 0
    assert "3.01 ± 0.23 ppm" in text


def test_conc_json_matches_library():
    code, text = run("conc", "--mu270", 10.0, "--convention", "natural", "--json")
    est = concentration(10.0, cs=__import__("nsfit").SIGMA_NATURAL)
    data = json.loads(text)
    assert code == 0
    assert data["ppm"] == est.ppm
    assert data["ppm_uncertainty"] == est.ppm_uncertainty


def test_calibrate(table1_csv):
    code, text = run("calibrate", table1_csv, "--through-origin", "--json")
    data = json.loads(text)
    assert code == 0
    assert data["slope"] == calibrate([(p, m) for _, p, m in TABLE1]).slope
    assert abs(data["slope"] - 1.96) <= 0.02
    code, text = run("calibrate", table1_csv)
    assert "slope = 1.9623" in text


def test_calibrate_with_intercept(table1_csv):
    code, text = run("calibrate", table1_csv, "--with-intercept", "--json")
    assert code == 0
    assert json.loads(text)["intercept"] is not None


def test_range():
    code, text = run("range", "--thickness", "300 um")
    assert code == 0
    assert "0.01 ppm to 39.1 ppm" in text


def test_synth_then_fit(tmp_path):
    fixture = tmp_path / "s.csv"
    code, _ = run("synth", "-o", fixture, "--a270", 12.0, "--sample-id", "S")
    assert code == 0
    spec, meta = parse_spectrum_file(fixture)
    assert meta.thickness_cm == pytest.approx(0.03)
    code, text = run("fit", fixture, "--report", tmp_path / "r.json", "--plot", tmp_path / "p")
    assert code == 0
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["mu270"] == pytest.approx(12.0, rel=1e-6)
    assert report["fit"]["reliable"] is True
    assert (tmp_path / "p.csv").exists() and (tmp_path / "p.svg").exists()


def test_synth_round_trip_bitwise(tmp_path):
    fixture = tmp_path / "abs.csv"
    run("synth", "-o", fixture, "--quantity", "absorption_decadic", "--noise", 0.01, "--seed", 3)
    spec, meta = parse_spectrum_file(fixture)
    copy = tmp_path / "copy.csv"
    write_spectrum_file(copy, spec, meta)
    assert copy.read_bytes() == fixture.read_bytes()


def test_synth_noisy_transmission_refused(tmp_path):
    fixture = tmp_path / "t.csv"
    code, _ = run("synth", "-o", fixture, "--noise", 0.05, "--seed", 1)
    assert code == 1
    assert not fixture.exists()


def test_synth_config_file(tmp_path):
    cfg = tmp_path / "truth.json"
    cfg.write_text(json.dumps({"truth": {"a270": 7.0, "b270": 269.5}, "extra_bands": [[3.0, 800.0, 40.0]]}))
    out = tmp_path / "c.csv"
    assert run("synth", "-o", out, "--config", cfg, "--quantity", "absorption_decadic")[0] == 0
    code, text = run("fit", out, "--cutoff-650", "--report", tmp_path / "c.json")
    report = json.loads((tmp_path / "c.json").read_text())
    assert report["mu270"] == pytest.approx(7.0, rel=1e-4)
    assert report["fit"]["window_nm"] == [200.0, 650.0]


def test_strict_boundary_hit_exit_3(tmp_path):
    fixture = tmp_path / "b.csv"
    run("synth", "-o", fixture, "--b270", 280)
    code, text = run("fit", fixture, "--strict")
    assert code == 3
    assert "b270" in text
    assert run("fit", fixture)[0] == 0


def test_four_component_flag(tmp_path):
    fixture = tmp_path / "f.csv"
    run("synth", "-o", fixture, "--four-component")
    run("fit", fixture, "--four-component", "--report", tmp_path / "f.json")
    report = json.loads((tmp_path / "f.json").read_text())
    assert report["fit"]["mode"] == "four"
    assert "a520" not in report["fit"]["parameters"]


def test_convert(tmp_path):
    fixture = tmp_path / "t.csv"
    run("synth", "-o", fixture, "--quantity", "transmission_percent")
    out = tmp_path / "a.csv"
    assert run("convert", fixture, "-o", out, "--convention", "natural")[0] == 0
    spec, meta = parse_spectrum_file(out)
    assert spec.quantity.value == "absorption_natural"
    assert meta.thickness_cm == pytest.approx(0.03)


def test_convert_absorption_is_data_error(tmp_path):
    fixture = tmp_path / "a.csv"
    run("synth", "-o", fixture, "--quantity", "absorption_decadic")
    assert run("convert", fixture)[0] == 2


def test_missing_thickness_is_data_error(tmp_path):
    path = tmp_path / "n.csv"
    path.write_text("# quantity: transmission_percent\n200,50\n201,50\n")
    assert run("fit", path)[0] == 2


def test_user_reference(tmp_path):
    ref = tmp_path / "ref.csv"
    wl = np.arange(190.0, 901.0, 1.0)
    vals = 20.0 / (1.0 + np.exp((wl - 230.0) / 3.0))
    ref.write_text("# quantity: absorption_decadic\n" + "".join(f"{w!r},{v!r}\n" for w, v in zip(wl.tolist(), vals.tolist())))
    fixture = tmp_path / "s.csv"
    run("synth", "-o", fixture, "--a270", 9.0)
    code, _ = run("fit", fixture, "--reference", ref, "--report", tmp_path / "r.json")
    report = json.loads((tmp_path / "r.json").read_text())
    assert code == 0
    assert report["fit"]["reference_origin"] == "user_file"
    assert report["mu270"] == pytest.approx(9.0, rel=1e-4)


def test_usage_error_exit_1(capsys):
    assert run("fit")[0] == 1
    assert run("conc")[0] == 1
    assert run("bogus")[0] == 1


def _batch_dir(tmp_path, names):
    d = tmp_path / "spectra"
    d.mkdir()
    for i, name in enumerate(names):
        run("synth", "-o", d / f"{name}.csv", "--sample-id", name, "--a270", 5.0 + i, "--seed", i)
    return d


def test_batch_summary_and_failures(tmp_path):
    d = _batch_dir(tmp_path, ["zeta", "alpha", "mid"])
    (d / "broken.csv").write_text("# quantity: absorption_decadic\n200,1\n199,2\n")
    code, text = run("batch", d, "--out-dir", tmp_path / "out", "--jobs", 2)
    assert code == 0
    lines = text.strip().splitlines()
    assert lines[0].startswith("sample_id,")
    ids = [line.split(",")[0] for line in lines[1:]]
    assert ids == sorted(ids)
    assert "broken" in ids
    assert (tmp_path / "out" / "alpha.json").exists()
    assert (tmp_path / "out" / "summary.csv").read_text() == text


def test_batch_order_independent(tmp_path):
    (tmp_path / "one").mkdir()
    d1 = _batch_dir(tmp_path / "one", ["b", "a", "c"])
    d2 = tmp_path / "two"
    d2.mkdir()
    for i, p in enumerate(sorted(d1.iterdir(), reverse=True)):
        shutil.copy(p, d2 / f"{i}_{p.name}")
    _, t1 = run("batch", d1, "--out-dir", tmp_path / "o1")
    _, t2 = run("batch", d2, "--out-dir", tmp_path / "o2", "--jobs", 3)

    def strip_file(text):
        return [line.split(",", 2)[::2] for line in text.splitlines()]

    assert strip_file(t1) == strip_file(t2)


def test_batch_all_fail(tmp_path):
    d = tmp_path / "bad"
    d.mkdir()
    (d / "x.csv").write_text("garbage\n")
    assert run("batch", d, "--out-dir", tmp_path / "o")[0] == 2


def test_batch_strict(tmp_path):
    d = tmp_path / "s"
    d.mkdir()
    run("synth", "-o", d / "ok.csv")
    run("synth", "-o", d / "bad.csv", "--b270", 280, "--sample-id", "bad")
    assert run("batch", d, "--out-dir", tmp_path / "o", "--strict")[0] == 3
