import json

import pytest

from mbshape import cli, io
from mbshape import sampler as sp


def run(args, capsys):
    code = cli.main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_density_csv(capsys):
    code, out, _ = run(["density", "--grid", "32"], capsys)
    assert code == 0
    meta, cols, rows = io.parse_csv(out)
    assert cols == ["x", "mu", "segment", "constraint_ratio"]
    assert meta["branch"] == "Case 1(ii)"
    assert abs(meta["total_mass"] - 1) <= 1e-9
    assert max(float(r[3]) for r in rows) <= 1 + 1e-10


def test_density_json_and_hard_edge(capsys):
    code, out, _ = run(["density", "--xi", "0", "--grid", "32", "--format", "json"], capsys)
    body = json.loads(out)
    assert code == 0 and body["schema_version"] == 1
    assert body["metadata"]["segments"][0]["lo"] == 0.0
    xs = [r[0] for r in body["rows"]]
    assert min(xs) > 0 and body["rows"][0][1] > body["rows"][5][1]


def test_outputs_are_byte_identical(tmp_path):
    for sub in (["density", "--grid", "16"], ["shape", "--grid", "16"], ["arctic", "--xi-steps", "5"]):
        a, b = tmp_path / "a", tmp_path / "b"
        assert cli.main(sub + ["--out", str(a)]) == 0
        assert cli.main(sub + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


def test_shape_footer_mass(capsys):
    code, out, _ = run(["shape", "--grid", "50"], capsys)
    meta, cols, rows = io.parse_csv(out)
    assert code == 0 and cols == ["lambda", "nu"]
    assert abs(meta["mass"] - 1) <= 1e-6
    assert max(float(r[1]) for r in rows) <= meta["plateau"] * (1 + 1e-10)


def test_arctic_flags_last_slice(capsys):
    code, out, _ = run(["arctic", "--xi-min", "0.5", "--xi-max", "1", "--xi-steps", "3"], capsys)
    meta, _, rows = io.parse_csv(out)
    assert code == 0 and meta["flagged"] == 1
    assert rows[-1][1] == "nan" and rows[-1][4].startswith("DegenerateSliceError")


def test_partition_fn_exit_codes(capsys):
    code, out, _ = run(["partition_fn", "--m", "2", "--n", "2", "--q", "0.3"], capsys)
    assert code == 0 and json.loads(out)["passed"] is True
    code, _, err = run(["partition_fn", "--q", "0.5", "--a", "5"], capsys)
    assert code == 3 and json.loads(err)["error"]["type"] == "DivergenceError"


def test_domain_error_record(capsys):
    code, out, err = run(["density", "--xi", "3"], capsys)
    rec = json.loads(err)
    assert code == 3 and out == ""
    assert rec["error"]["exit_code"] == 3 and rec["schema_version"] == 1


def test_usage_error_record(capsys):
    code, _, err = run(["density", "--nope"], capsys)
    assert code == 2 and json.loads(err)["error"]["type"] == "UsageError"
    code, _, err = run(["density", "--format", "xml"], capsys)
    assert code == 2


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("eta = 2\ntheta = 1\nxi = 0.1\ngrid = 8\n")
    code, out, _ = run(["density", "--config", str(cfg), "--xi", "0.3"], capsys)
    prov = io.parse_csv(out)[0]["provenance"]
    assert code == 0
    assert prov["parameters"] == {"eta": 2.0, "theta": 1.0, "gamma_sq": 0.5, "beta": 1.0, "xi": 0.3, "grid": 8}
    cfg.write_text("colour = red\n")
    assert run(["density", "--config", str(cfg)], capsys)[0] == 2


def test_sample_dump(tmp_path):
    out = tmp_path / "s.txt"
    args = ["sample", "--m", "2", "--n", "3", "--n-samples", "4", "--seed", "5", "--out", str(out)]
    assert cli.main(args) == 0
    cfg, header, pps = sp.read_samples(out)
    assert (cfg.M, cfg.N, cfg.seed) == (2, 3, 5) and len(pps) == 4
    first = out.read_bytes()
    assert cli.main(args) == 0 and out.read_bytes() == first


def test_verify_subset_and_mutation(tmp_path, capsys):
    rep = tmp_path / "r.json"
    code, _, err = run(["verify", "--only", "1", "--out", str(rep)], capsys)
    body = json.loads(rep.read_text())
    assert code == 0 and body["passed"] and [c["id"] for c in body["criteria"]] == [1]
    assert "seconds" not in body["criteria"][0] and "[PASS]" in err
    code, _, err = run(["verify", "--only", "4", "--perturb-c1", "1.01", "--out", str(rep)], capsys)
    assert code == 1 and "[FAIL]" in err
