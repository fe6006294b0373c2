import csv
import json

import pytest

from config import Config
from corf import main
from utils.errors import EXIT_INPUT, EXIT_OK, EXIT_VERIFICATION
from utils.tiling import BallRegion, resolve_polyhedron, tiles_meeting_region


def read_json(path):
    return json.loads(path.read_text())


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_thresholds(tmp_path):
    out = tmp_path / "thresholds.json"
    assert main(["thresholds", "--out", str(out)]) == EXIT_OK
    data = read_json(out)
    assert data["max_deviation"] < 1e-10
    assert data["incenter_angle"]["deviation"] < 1e-12
    assert data["seed"] == Config.DEFAULT_SEED
    assert "config" in data


def test_volumes(tmp_path):
    out = tmp_path / "volumes.json"
    assert main(["volumes", "--dim", "3", "--samples", "100000", "--seed", "5", "--out", str(out)]) == EXIT_OK
    data = read_json(out)
    assert data["seed"] == 5
    assert "agrees_3sigma" in data


def test_separate_then_verify(tmp_path):
    cert = tmp_path / "cert.json"
    assert main(["separate", "--word", "1 3", "--out", str(cert)]) == EXIT_OK
    assert read_json(cert)["alpha"] == "1 3"
    assert read_json(cert)["seed"] == Config.DEFAULT_SEED
    report = tmp_path / "report.json"
    assert main(["verify", "--cert", str(cert), "--out", str(report)]) == EXIT_OK
    assert read_json(report)["ok"] is True


def test_separate_rejects_a_reflection(tmp_path):
    assert main(["separate", "--word", "1", "--out", str(tmp_path / "c.json")]) == EXIT_INPUT


def test_separate_rejects_a_conjugate_reflection(tmp_path):
    assert main(["separate", "--word", "3 2 5 3 2", "--out", str(tmp_path / "c.json")]) == EXIT_INPUT


def test_verify_reports_a_tampered_certificate(tmp_path):
    cert = tmp_path / "cert.json"
    assert main(["separate", "--word", "1 3", "--out", str(cert)]) == EXIT_OK
    data = read_json(cert)
    data["tile_words"] = data["tile_words"][1:]
    cert.write_text(json.dumps(data))
    report = tmp_path / "report.json"
    assert main(["verify", "--cert", str(cert), "--out", str(report)]) == EXIT_VERIFICATION
    assert read_json(report)["ok"] is False


def test_verify_missing_file(tmp_path):
    assert main(["verify", "--cert", str(tmp_path / "nope.json")]) == EXIT_INPUT


def test_growth_trace_experiment(tmp_path):
    out = tmp_path / "example62.csv"
    assert main(["growth", "--experiment", "example62", "--n-max", "10", "--out", str(out)]) == EXIT_OK
    rows = read_csv(out)
    assert len(rows) == 10
    assert [int(r["trace"]) for r in rows] == [2 + 4 * n for n in range(1, 11)]
    assert all(r["source"] == "formula" for r in rows)


def test_growth_bruteforce_experiment(tmp_path):
    out = tmp_path / "bruteforce.csv"
    assert main(["growth", "--experiment", "bruteforce", "--max-len", "2", "--out", str(out)]) == EXIT_OK
    rows = {r["word"]: r["D_or_bound"] for r in read_csv(out)}
    assert rows["a"] == "2"
    assert rows["a^2"] == "3"


def test_tiling_export(tmp_path):
    out = tmp_path / "tiles.json"
    assert main(["tiling-export", "--radius", "0", "--out", str(out)]) == EXIT_OK
    assert len(read_json(out)["tiles"]) == 1
    assert read_json(out)["seed"] == Config.DEFAULT_SEED

    assert main(["tiling-export", "--radius", "1.5", "--out", str(out)]) == EXIT_OK
    P = resolve_polyhedron("pentagon")
    expected = len(tiles_meeting_region(P, BallRegion(P, P.center, 1.5)))
    tiles = read_json(out)["tiles"]
    assert len(tiles) == expected
    assert all(sum(c * c for c in t["center"]) < 1 for t in tiles)


def test_unknown_experiment_is_an_argument_error():
    with pytest.raises(SystemExit):
        main(["growth", "--experiment", "nonsense"])
