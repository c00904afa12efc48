import math

import pytest

from cornerindex import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_chi(tmp_path, capsys):
    code, out, _ = run(capsys, "chi", "--domain", "A", "--out", str(tmp_path))
    assert code == 0
    assert out.splitlines()[0] == "0" and out.splitlines()[-1] == "VERDICT: PASS"
    assert (tmp_path / "chi.csv").exists() and (tmp_path / "chi.svg").exists()


@pytest.mark.parametrize("domain, chi", [("P'", "-1"), ("Q'", "-1"), ("square", "1")])
def test_chi_other_domains(tmp_path, capsys, domain, chi):
    code, out, _ = run(capsys, "chi", "--domain", domain, "--out", str(tmp_path))
    assert code == 0 and out.splitlines()[0] == chi


def test_turning_reflex_fails(tmp_path, capsys):
    code, out, _ = run(capsys, "turning", "--theta", "4.71238898", "--out", str(tmp_path))
    assert code == 2
    assert "FAIL" in out and out.splitlines()[-1] == "VERDICT: FAIL"


def test_turning_convex_passes(tmp_path, capsys):
    code, _, _ = run(capsys, "turning", "--theta", "pi/2,pi", "--out", str(tmp_path))
    assert code == 0


def test_angles(tmp_path, capsys):
    code, _, _ = run(capsys, "angles", "--domain", "A", "--out", str(tmp_path))
    assert code == 0


def test_usage_errors(tmp_path, capsys):
    assert run(capsys, "bogus")[0] == 1
    assert run(capsys, "chi", "--h", "a,b", "--out", str(tmp_path))[0] == 1
    assert run(capsys, "chi", "--h", "-0.1", "--out", str(tmp_path))[0] == 1
    assert run(capsys, "chi", "--config", str(tmp_path / "missing.cfg"))[0] == 1
    assert run(capsys, "chi", "--domain", "nowhere", "--out", str(tmp_path))[0] == 1


def test_config_file_and_precedence(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# comment\ndomain = square\nh = 0.3, 0.15\nbeta = 3pi/4\nm = 5\n")
    cfg = cli.make_config(["spectrum", "--config", str(cfg_file), "--h", "0.2"])
    assert cfg.domain == "square" and cfg.h == [0.2] and cfg.m == 5
    assert cfg.beta == [pytest.approx(3 * math.pi / 4)]
    cfg_file.write_text("nonsense_key = 1\n")
    with pytest.raises(cli.UsageError):
        cli.make_config(["chi", "--config", str(cfg_file)])


def test_capacity_bit_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(capsys, "capacity", "--out", str(a))[0] == 0
    assert run(capsys, "capacity", "--out", str(b))[0] == 0
    for name in ("capacity.csv", "capacity_schedule.csv", "capacity.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    header = (a / "capacity.csv").read_text().splitlines()[0]
    assert header.startswith("alpha,eps,beta,closed_form,quadrature,bound,defect")


def test_output_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("CORNERINDEX_OUT", str(tmp_path / "envdir"))
    assert run(capsys, "chi")[0] == 0
    assert (tmp_path / "envdir" / "chi.csv").exists()


def test_bochner(tmp_path, capsys):
    code, out, _ = run(capsys, "bochner", "--forms", "3", "--out", str(tmp_path))
    assert code == 0 and "f=y,g=x" in out


def test_spectrum(tmp_path, capsys):
    code, out, _ = run(capsys, "spectrum", "--domain", "A", "--h", "0.4", "--out", str(tmp_path))
    assert code == 0
    assert "degree 1: kernel 1" in out
    header = (tmp_path / "spectrum.csv").read_text().splitlines()[0]
    assert header == "degree,h,rho,bc,lambda_1,lambda_2,lambda_3,lambda_4,lambda_5,lambda_6,kernel_count,gap_ratio,verdict"


def test_index_example(tmp_path, capsys):
    code, out, _ = run(capsys, "index", "--domain", "A", "--h", "0.2,0.1,0.05", "--rho", "0.2,0.1",
                       "--out", str(tmp_path))
    assert code == 0
    assert out.count("ind = 1") == 6


def test_index_wrong_expectation(tmp_path, capsys):
    code, _, _ = run(capsys, "index", "--domain", "A", "--h", "0.4", "--rho", "0.2", "--expected", "0",
                     "--out", str(tmp_path))
    assert code == 2


def test_gap(tmp_path, capsys):
    code, out, _ = run(capsys, "gap", "--domain", "A", "--h", "0.4,0.2", "--rho", "0.2", "--out", str(tmp_path))
    assert code in (0, 2)
    assert "reported c = 0.61685" in out


def test_cornermap(tmp_path, capsys):
    code, _, _ = run(capsys, "cornermap", "--out", str(tmp_path))
    assert code == 0
    for name in ("cornermap.csv", "cornermap_validation.csv", "cornermap_pieces.txt", "cornermap.svg"):
        assert (tmp_path / name).exists()
