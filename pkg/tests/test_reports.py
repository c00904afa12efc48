import os

from cornerindex import reports


def test_csv_format(tmp_path):
    path = reports.write_csv(tmp_path / "a.csv", [{"x": 0.1, "n": 3}, {"x": True, "extra": "s"}])
    assert path.read_text() == "x,n,extra\n0.10000000000000001,3,\nTrue,,s\n"


def test_csv_header_override(tmp_path):
    path = reports.write_csv(tmp_path / "b.csv", [{"a": 1, "b": 2}], header=["b", "a"])
    assert path.read_text().splitlines() == ["b,a", "2,1"]


def test_svg_deterministic(tmp_path):
    series = [("s", [1, 2, 3], [1.0, 4.0, 9.0])]
    a = reports.write_svg(tmp_path / "a.svg", series, "t", "x", "y", logy=True, hlines=[("one", 1.0)]).read_bytes()
    b = reports.write_svg(tmp_path / "b.svg", series, "t", "x", "y", logy=True, hlines=[("one", 1.0)]).read_bytes()
    assert a == b and a.startswith(b"<?xml")
    assert b"<image" not in a  # self-contained, no external assets


def test_atomic_write_leaves_no_temp(tmp_path):
    reports.atomic_write(tmp_path / "c.txt", "hello")
    assert os.listdir(tmp_path) == ["c.txt"]
    assert (tmp_path / "c.txt").read_text() == "hello"


def test_output_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv(reports.OUTPUT_ENV, str(tmp_path / "env_out"))
    assert reports.output_dir() == tmp_path / "env_out"
    assert (tmp_path / "env_out").is_dir()
