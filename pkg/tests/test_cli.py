import json

import pytest

from stokescert.complex_interval import ComplexBox
from stokescert.stokes_cli import (
    FAST,
    RIGOROUS,
    NotCertified,
    StokesEstimate,
    cmd_initial_set,
    cmd_report,
    cmd_verify,
    content_hash,
    main,
    richardson,
    run_crossing,
)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestExitCodes:
    def test_certify_ok(self, capsys):
        code, out, _ = run(capsys, "certify")
        doc = json.loads(out)
        assert code == 0 and doc["result"]["verdict"] == "Certified"
        assert doc["result"]["values"]["L"]["anchor"] == "<= 0.93"

    def test_certify_fails(self, capsys):
        code, out, err = run(capsys, "certify", "--kappa", "6", "--rho1", "40", "--rho2", "2")
        assert code == 1 and "g1 < 0" in err

    def test_bad_params(self, capsys):
        code, _, err = run(capsys, "certify", "--kappa", "2")
        assert code == 2 and "error" in err

    def test_scan(self, capsys):
        code, out, _ = run(capsys, "certify", "--scan-rho2", "--eta", "1000")
        v = json.loads(out)["result"]["values"]
        assert code == 0 and v["b1_tilde"]["hi"] <= 0.7 and v["b2_tilde"]["hi"] <= 0.71

    def test_constant_a(self, capsys):
        code, out, _ = run(capsys, "constant-a")
        A = json.loads(out)["result"]["A"]
        assert code == 0 and A["lo"] <= 0.177744 <= A["hi"]

    def test_missing_report_input(self, capsys, tmp_path):
        code, _, err = run(capsys, "report", str(tmp_path / "nope.json"))
        assert code == 1 and "missing run" in err


class TestInitialSet:
    def test_radii(self):
        boxes, info = cmd_initial_set()
        q = abs(complex(-2000, -7.12)) ** (1 / 3)
        assert info["W_radius"] <= 0.7 / q ** 8 and info["XY_radius"] <= 0.71 / q ** 4
        assert boxes[1].re.hi == info["W_radius"] and boxes[2].im.lo == -info["XY_radius"]
        assert boxes[0].contains(-2000 - 7.12j) and boxes[4].contains(1.0)

    def test_outside_tail(self):
        with pytest.raises(NotCertified):
            cmd_initial_set(re_u0=-500.0)

    def test_below_rho_star(self):
        with pytest.raises(NotCertified):
            cmd_initial_set(rho0=7.0)

    def test_round_trip_file(self, capsys, tmp_path):
        path = tmp_path / "init.json"
        assert main(["initial-set", "--out", str(path)]) == 0
        doc = json.loads(path.read_text())
        assert set(doc["result"]["boxes"]) == {"U", "W", "X", "Y", "A", "B"}


class TestReport:
    def test_sections_and_determinism(self, tmp_path):
        paths = []
        for cmd in (["certify"], ["constant-a"], ["initial-set"]):
            p = tmp_path / ("%s.json" % cmd[0])
            assert main(cmd + ["--out", str(p)]) == 0
            paths.append(str(p))
        doc = cmd_report(paths)
        assert set(doc["sections"]) == {"certify", "constant-a", "initial-set"}
        # reruns agree byte for byte once timing is dropped
        again = tmp_path / "again.json"
        main(["certify", "--out", str(again)])
        a, b = (json.loads(open(p).read()) for p in (paths[0], again))
        for d in (a, b):
            d["manifest"].pop("timing")
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
        assert a["manifest"]["config_hash"] == b["manifest"]["config_hash"]


class TestHash:
    def test_git_blob(self):
        # git hash-object of the two bytes "{}"
        assert content_hash({}) == "9e26dfeeb6e641a33dae4961196235bdb965b21b"

    def test_key_order(self):
        assert content_hash({"a": 1, "b": 2}) == content_hash({"b": 2, "a": 1})


class TestRuns:
    def test_short_rigorous_leg(self):
        cr, cfg, _, guard = run_crossing(RIGOROUS, section=-1995.0)
        assert cr.bolzano_ok() and cr.section == -1995.0
        assert cr.U_at_section.im.contains(-7.12) or cr.U_at_section.im.hi < -7.11
        assert guard is not None and cr.guard_ok

    def test_fast_crossing_dump(self, tmp_path):
        dump = tmp_path / "traj.csv"
        cr, _, _, _ = run_crossing(FAST, dump=str(dump))
        assert cr.section == 0.0 and cr.bolzano_ok()
        lines = dump.read_text().splitlines()
        assert lines[0].startswith("t,re_U,im_U") and len(lines) > 100

    def test_verify_fast(self, capsys):
        code, out, _ = run(capsys, "verify")
        doc = json.loads(out)["result"]
        assert code == 1 and doc["verdict"] == "rigorous-leg-only"
        assert doc["caveat"].startswith("rigorous-leg-only")

    def test_verify_leg_only(self):
        chain, doc = cmd_verify(FAST)
        assert not chain and doc["certificate"]["verdict"] == "Certified"

    def test_richardson(self):
        ests = [StokesEstimate(r, 0j, 1.6 + 0.3 / r - 0.5 / r ** 2) for r in (7.0, 8.0, 9.0)]
        assert abs(richardson(ests) - 1.6) < 1e-12
        assert richardson(ests[:2]) is None
