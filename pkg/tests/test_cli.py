import json

import pytest

from bmlab.cli import (
    main_bmdist,
    main_bmlab,
    main_bounds,
    main_qx,
    main_signset,
    main_space,
)


def run_json(capsys, main, argv):
    rc = main(argv)
    out = capsys.readouterr().out
    return rc, json.loads(out)


class TestSignsetCli:
    def test_exhaustive(self, capsys):
        rc, out = run_json(capsys, main_signset, ["--n", "4", "--theta", "0.6"])
        assert rc == 0
        assert out["n"] == 4 and out["exhaustive"]
        assert out["size"] == len(out["vectors"])
        assert all(v in (-1, 1) for row in out["vectors"] for v in row)

    def test_sampled(self, capsys):
        rc, out = run_json(capsys, main_signset,
                           ["--n", "10", "--theta", "0.5", "--samples", "200", "--seed", "1"])
        assert rc == 0 and not out["exhaustive"]


class TestSpaceCli:
    def test_make_ex(self, capsys):
        rc, out = run_json(capsys, main_space,
                           ["make-ex", "--n", "6", "--theta", "0.5", "--subset", "0,1"])
        assert rc == 0
        assert out["kind"] == "polytopal"
        assert out["certification"]["sandwich_ok"]

    def test_embed_linf(self, capsys):
        rc, out = run_json(capsys, main_space,
                           ["embed-linf", "--space", "l2:2", "--delta", "0.5",
                            "--samples", "1000"])
        assert rc == 0
        assert out["m"] <= 25
        assert out["certification"]["max_observed"] <= out["certification"]["bound"]

    def test_subspace_net(self, capsys):
        rc, out = run_json(capsys, main_space,
                           ["subspace-net", "--n", "1", "--X", "linf:2", "--xi", "0.4",
                            "--test-seed", "3", "--samples", "500"])
        assert rc == 0
        assert out["tuple_count"] <= 36
        assert out["certification"]["max_observed"] <= out["R"]


class TestBmdistCli:
    def test_upper(self, capsys):
        rc, out = run_json(capsys, main_bmdist,
                           ["upper", "--E", "l1:2", "--F", "linf:2", "--effort", "4"])
        assert rc == 0 and out["value"] <= 1 + 1e-3

    def test_exact2d(self, capsys):
        rc, out = run_json(capsys, main_bmdist,
                           ["exact2d", "--E", "l2:2", "--F", "linf:2"])
        assert rc == 0
        assert abs(out["value"] - 2 ** 0.5) <= 1e-3

    def test_claim(self, capsys):
        rc, out = run_json(capsys, main_bmdist,
                           ["claim", "--n", "16", "--r", "1.5", "--theta", "0.5"])
        assert rc == 0 and out["value"]["level"] == 2

    def test_pack(self, capsys):
        rc, out = run_json(capsys, main_bmdist,
                           ["pack", "--n", "8", "--theta", "0.5", "--members", "6",
                            "--r", "1.5", "--seed", "0"])
        assert rc == 0
        assert len(out["accepted"]) == 6
        assert all(v >= 2.0 for v in out["pair_certificates"].values())


class TestQxCli:
    def test_sample_and_defect(self, capsys):
        rc, out = run_json(capsys, main_qx, ["sample", "--n", "2", "--N", "2", "--seed", "1"])
        assert rc == 0 and len(out["re"]) == 2
        rc, out = run_json(capsys, main_qx, ["defect", "--n", "4", "--N", "4", "--seed", "1"])
        assert rc == 0
        assert 0 <= out["defect"] <= 1
        assert abs(out["defect"] - out["kron_route"]) <= 1e-8

    def test_family_with_csv(self, capsys, tmp_path):
        csv_path = tmp_path / "fam.csv"
        rc, out = run_json(capsys, main_qx,
                           ["family", "--n", "4", "--N", "2", "--epsilon", "0.95",
                            "--delta", "0.05", "--max-samples", "6", "--seed", "2",
                            "--csv", str(csv_path)])
        assert rc == 0 and out["size"] >= 1
        header = csv_path.read_text().splitlines()[0]
        assert header.startswith("index,defect")

    def test_tail(self, capsys):
        rc, out = run_json(capsys, main_qx,
                           ["tail", "--n", "2", "--N", "2", "--s", "0.0",
                            "--samples", "200", "--seed", "3"])
        assert rc == 0 and abs(out["frequency"] - 0.5) < 0.15

    def test_avgdefect(self, capsys):
        rc, out = run_json(capsys, main_qx,
                           ["avgdefect", "--n-list", "1,2", "--N", "2",
                            "--samples", "5", "--seed", "4"])
        assert rc == 0 and len(out["rows"]) == 2

    def test_counterexample(self, capsys):
        rc, out = run_json(capsys, main_qx,
                           ["counterexample", "--n", "2", "--N", "2", "--delta", "0.5",
                            "--samples", "200", "--seed", "5"])
        assert rc == 0 and 0 <= out["frequency"] <= 1


class TestBoundsCli:
    def test_all_subcommands(self, capsys):
        rc, out = run_json(capsys, main_bounds,
                           ["lower", "--n", "400", "--theta", "0.5", "--r", "1.9"])
        assert rc == 0 and out["flags"]["passes"]
        rc, out = run_json(capsys, main_bounds, ["upper", "--n", "10", "--eps", "0.5"])
        assert rc == 0 and out["intermediate"]["m"] == 9765625
        rc, out = run_json(capsys, main_bounds,
                           ["claim", "--n", "16", "--r", "1.5", "--delta", "0.5"])
        assert rc == 0
        rc, out = run_json(capsys, main_bounds,
                           ["measure", "--n", "64", "--N", "4", "--delta", "0.4"])
        assert rc == 0 and out["intermediate"]["eps_prime"] == pytest.approx(1e-3)
        rc, out = run_json(capsys, main_bounds, ["hh", "--n", "32", "--N", "2", "--r", "8"])
        assert rc == 0 and out["k"] == 2
        rc, out = run_json(capsys, main_bounds,
                           ["spherical", "--n", "10", "--theta", "0.5", "--K", "10000"])
        assert rc == 0 and out["flags"]["significant"]


class TestBmlabCli:
    def test_preset_empty(self, capsys, tmp_path):
        rc, out = run_json(capsys, main_bmlab,
                           ["preset", "empty", "--out", str(tmp_path / "e.json")])
        assert rc == 0 and out["all_passed"]

    def test_run_and_verify(self, capsys, tmp_path):
        cfg = {"name": "t1-lower-desk",
               "params": {"n": 10, "theta": 0.5, "r": 1.5,
                          "antichain_samples": 10, "certificate_pairs": 5},
               "master_seed": 1}
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        rep_path = tmp_path / "rep.json"
        rc, out = run_json(capsys, main_bmlab,
                           ["run", str(cfg_path), "--out", str(rep_path)])
        assert rc == 0 and out["all_passed"]
        rc, out = run_json(capsys, main_bmlab, ["verify", str(rep_path)])
        assert rc == 0 and out["ok"]

    def test_invalid_config_exit_code(self, capsys, tmp_path):
        cfg_path = tmp_path / "bad.json"
        cfg_path.write_text(json.dumps({"name": "t1-lower-desk", "params": {"n": 40}}))
        rc = main_bmlab(["run", str(cfg_path)])
        assert rc == 2

    def test_tampered_report_exit_code(self, capsys, tmp_path):
        cfg = {"name": "t1-lower-desk",
               "params": {"n": 10, "theta": 0.5, "r": 1.5,
                          "antichain_samples": 10, "certificate_pairs": 3},
               "master_seed": 1}
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        rep_path = tmp_path / "rep.json"
        assert main_bmlab(["run", str(cfg_path), "--out", str(rep_path)]) == 0
        capsys.readouterr()
        rep = json.loads(rep_path.read_text())
        rep["certificates"][0]["witness"][0] *= 1.1
        rep_path.write_text(json.dumps(rep))
        rc = main_bmlab(["verify", str(rep_path)])
        assert rc == 1
