"""Command-line surface: file formats, determinism, exit codes."""
import csv
import json
import math

import numpy as np
import pytest

from blksurv.cli import main


def write_config(path, **overrides):
    config = {
        "grid": {"nu": 500.0, "kappa": 0.1, "r": 10},
        "prior": {"mean": [-6.0, 0.02], "variances": [1.0, 0.0004],
                  "rho": 0.92, "c0": 0.0},
        "method": "log-mode",
        "seed": 0,
    }
    config.update(overrides)
    path.write_text(json.dumps(config))
    return path


def write_dataset(path, rows, ncov=1):
    header = "id,time,status," + ",".join(f"x{k}" for k in range(1, ncov + 1))
    path.write_text(header + "\n" + "\n".join(rows) + ("\n" if rows else "\n"))
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestPartition:
    def test_paper_scale_grid(self, tmp_path):
        assert main(["partition", "--nu", "500", "--kappa", "0.1", "--r", "10",
                     "--out", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "grid.csv")
        assert rows[0] == ["j", "tau_upper"]
        taus = [float(row[1]) for row in rows[1:]]
        assert len(taus) == 10
        assert taus[0] == pytest.approx(52.68025782891314, rel=1e-11)
        assert taus[8] == pytest.approx(1151.2925464970227, rel=1e-11)
        assert math.isinf(taus[9])

    def test_from_config(self, tmp_path):
        cfg = write_config(tmp_path / "c.json")
        assert main(["partition", "--config", str(cfg),
                     "--out", str(tmp_path)]) == 0

    def test_invalid_kappa_r(self, tmp_path):
        assert main(["partition", "--nu", "500", "--kappa", "0.1", "--r", "11",
                     "--out", str(tmp_path)]) == 2


class TestElicit:
    def test_reference_judgements(self, tmp_path):
        judgements = {
            "baseline": {"low": 54, "high": 2981},
            "effects": [{"name": "age", "gap": 10, "low": 0.8, "high": 1.8}],
        }
        jpath = tmp_path / "j.json"
        jpath.write_text(json.dumps(judgements))
        assert main(["elicit", "--data", str(jpath), "--out", str(tmp_path)]) == 0
        rows = {row[0]: row for row in read_rows(tmp_path / "prior.csv")[1:]}
        assert float(rows["baseline"][1]) == pytest.approx(-6.0, abs=0.01)
        assert float(rows["baseline"][2]) == pytest.approx(1.0, abs=0.01)
        assert float(rows["age"][1]) == pytest.approx(0.02, rel=0.10)
        assert float(rows["age"][3]) == pytest.approx(0.0004, abs=5e-5)

    def test_malformed_judgements(self, tmp_path):
        jpath = tmp_path / "j.json"
        jpath.write_text(json.dumps({"effects": [{"name": "x", "gap": 0.0,
                                                  "low": 1, "high": 2}]}))
        assert main(["elicit", "--data", str(jpath), "--out", str(tmp_path)]) == 2


class TestFit:
    def _fit(self, tmp_path, rows, subdir, extra=()):
        cfg = write_config(tmp_path / "c.json")
        data = write_dataset(tmp_path / f"{subdir}.csv", rows)
        out = tmp_path / subdir
        out.mkdir()
        code = main(["fit", "--config", str(cfg), "--data", str(data),
                     "--out", str(out), *extra])
        return code, out

    def test_toy_fit_outputs(self, tmp_path):
        rows = ["a,60,1,0.5", "b,200,0,-0.3"]
        code, out = self._fit(tmp_path, rows, "run1")
        assert code == 0
        posterior = read_rows(out / "posterior.csv")
        assert posterior[0] == ["interval", "tau_upper", "coef_name", "mean", "sd"]
        assert len(posterior) == 1 + 10 * 2
        eta = read_rows(out / "eta.csv")
        assert eta[0] == ["i", "j", "f_post", "q_post", "alpha_post", "theta_post"]
        # a died in interval 2, b censored in interval 4: 2 + 4 person-intervals
        assert len(eta) == 1 + 6
        plot = read_rows(out / "plotdata.csv")
        assert plot[0] == ["interval", "tau_mid", "coef_name", "mean", "lo", "hi"]
        assert float(plot[1][1]) == pytest.approx(-500.0 * math.log(0.95), rel=1e-10)

    def test_byte_identical_reruns_and_shuffle(self, tmp_path):
        rows = ["a,60,1,0.5", "b,200,0,-0.3", "c,14,1,1.2"]
        _, out1 = self._fit(tmp_path, rows, "r1")
        _, out2 = self._fit(tmp_path, rows, "r2")
        shuffled = [rows[2], rows[0], rows[1]]
        _, out3 = self._fit(tmp_path, shuffled, "r3")
        for name in ("posterior.csv", "eta.csv", "plotdata.csv"):
            ref = (out1 / name).read_bytes()
            assert (out2 / name).read_bytes() == ref
            assert (out3 / name).read_bytes() == ref

    def test_naive_flag_matches_fast_path(self, tmp_path):
        rows = ["a,60,1,0.5", "b,200,0,-0.3"]
        _, fast = self._fit(tmp_path, rows, "fast")
        _, slow = self._fit(tmp_path, rows, "slow", extra=("--naive",))
        for fa, na in zip(read_rows(fast / "posterior.csv")[1:],
                          read_rows(slow / "posterior.csv")[1:]):
            assert float(fa[3]) == pytest.approx(float(na[3]), rel=1e-7, abs=1e-9)
            assert float(fa[4]) == pytest.approx(float(na[4]), rel=1e-7)

    def test_malformed_row_exit_2(self, tmp_path, capsys):
        rows = ["a,60,1,0.5", "b,oops,0,-0.3"]
        code, _ = self._fit(tmp_path, rows, "bad")
        assert code == 2
        assert "line 3" in capsys.readouterr().err

    def test_bad_status_exit_2(self, tmp_path):
        code, _ = self._fit(tmp_path, ["a,60,2,0.5"], "bad2")
        assert code == 2

    def test_missing_cell_exit_2(self, tmp_path):
        code, _ = self._fit(tmp_path, ["a,60,1,"], "bad3")
        assert code == 2

    def test_nonpositive_time_exit_2(self, tmp_path):
        code, _ = self._fit(tmp_path, ["a,0,1,0.5"], "bad4")
        assert code == 2

    def test_zero_deaths_warns_but_exits_zero(self, tmp_path, capsys):
        code, _ = self._fit(tmp_path, ["a,60,0,0.5"], "nodeaths")
        assert code == 0
        assert "no deaths" in capsys.readouterr().err

    def test_round_trippable_precision(self, tmp_path):
        rows = ["a,60,1,0.5", "b,200,0,-0.3"]
        cfg = write_config(tmp_path / "c.json")
        data = write_dataset(tmp_path / "d.csv", rows)
        out = tmp_path / "rt"
        out.mkdir()
        main(["fit", "--config", str(cfg), "--data", str(data), "--out", str(out)])
        from blksurv.cli import load_config, read_dataset
        from blksurv.engine import fit as engine_fit
        summary = engine_fit(read_dataset(str(data)),
                             load_config(str(cfg)).grid,
                             load_config(str(cfg)).prior)
        parsed = read_rows(out / "posterior.csv")[1:]
        for row in parsed:
            j, c = int(row[0]), int(row[2][1:])
            assert float(row[3]) == pytest.approx(
                summary.coef_means[j - 1, c], rel=1e-11, abs=1e-14)
            assert float(row[4]) == pytest.approx(
                summary.coef_sds[j - 1, c], rel=1e-11)


class TestSimulate:
    def _truth(self, tmp_path, r=10, d=2):
        rows = ["interval," + ",".join(f"b{c}" for c in range(d))]
        for j in range(1, r + 1):
            rows.append(f"{j},-6.0,0.02")
        path = tmp_path / "truth.csv"
        path.write_text("\n".join(rows) + "\n")
        return path

    def test_reproducible_by_seed(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", censor_rate=0.2,
                           covariate_ranges=[[-20, 20]])
        truth = self._truth(tmp_path)
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        out1.mkdir(), out2.mkdir()
        for out in (out1, out2):
            assert main(["simulate", "--config", str(cfg), "--truth", str(truth),
                         "--n", "50", "--seed", "4", "--out", str(out)]) == 0
        assert (out1 / "dataset.csv").read_bytes() == (out2 / "dataset.csv").read_bytes()

    def test_zero_rows(self, tmp_path):
        cfg = write_config(tmp_path / "c.json")
        truth = self._truth(tmp_path)
        assert main(["simulate", "--config", str(cfg), "--truth", str(truth),
                     "--n", "0", "--seed", "1", "--out", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "dataset.csv")
        assert rows == [["id", "time", "status", "x1"]]

    def test_death_fraction_tracks_censoring(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", censor_rate=0.25)
        truth = self._truth(tmp_path)
        assert main(["simulate", "--config", str(cfg), "--truth", str(truth),
                     "--n", "4000", "--seed", "2", "--out", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "dataset.csv")[1:]
        deaths = sum(int(row[2]) for row in rows)
        se = math.sqrt(0.25 * 0.75 / 4000)
        assert abs(deaths / 4000 - 0.75) < 3 * se

    def test_full_scale_simulate_then_fit(self, tmp_path):
        cfg = write_config(
            tmp_path / "c.json", censor_rate=0.15,
            prior={"mean": [-6.0, 0.1, 0.0, 0.1, 0.0],
                   "variances": [0.04, 0.01, 0.01, 0.01, 0.01],
                   "rho": 0.92, "c0": 0.0},
            covariate_ranges=[[-0.5, 0.5]] * 4)
        rows = ["interval," + ",".join(f"b{c}" for c in range(5))]
        for j in range(1, 11):
            rows.append(f"{j},-6.0,0.1,0.0,0.1,0.0")
        truth = tmp_path / "truth.csv"
        truth.write_text("\n".join(rows) + "\n")
        main(["simulate", "--config", str(cfg), "--truth", str(truth),
              "--n", "1000", "--seed", "3", "--out", str(tmp_path)])
        out = tmp_path / "fitdir"
        out.mkdir()
        assert main(["fit", "--config", str(cfg),
                     "--data", str(tmp_path / "dataset.csv"),
                     "--out", str(out)]) == 0
        for name in ("posterior.csv", "eta.csv", "plotdata.csv"):
            assert (out / name).stat().st_size > 0
        assert len(read_rows(out / "posterior.csv")) == 1 + 10 * 5


class TestCompare:
    def test_small_cohort_comparison(self, tmp_path):
        cfg = write_config(tmp_path / "c.json",
                           grid={"boundaries": [0.0, 150.0, 400.0]},
                           mcmc={"chains": 2, "iterations": 1500, "burn_in": 500})
        truth = tmp_path / "truth.csv"
        truth.write_text("interval,b0,b1\n1,-6.0,0.02\n2,-5.8,0.02\n3,-5.9,0.0\n")
        main(["simulate", "--config", str(cfg), "--truth", str(truth),
              "--n", "10", "--seed", "6", "--out", str(tmp_path)])
        assert main(["compare", "--config", str(cfg),
                     "--data", str(tmp_path / "dataset.csv"),
                     "--out", str(tmp_path), "--seed", "1"]) == 0
        rows = read_rows(tmp_path / "comparison.csv")
        assert rows[0] == ["interval", "coef_name", "blk_mean", "blk_sd",
                           "fb_mean", "fb_sd", "fb_mcse", "std_diff"]
        assert len(rows) == 1 + 3 * 2
        for row in rows[1:]:
            assert all(math.isfinite(float(v)) for v in row[2:])

    def test_desk_scale_cap_enforced(self, tmp_path):
        cfg = write_config(tmp_path / "c.json",
                           grid={"boundaries": [0.0, 150.0]})
        truth = tmp_path / "truth.csv"
        truth.write_text("interval,b0,b1\n1,-6.0,0.02\n2,-5.8,0.02\n")
        main(["simulate", "--config", str(cfg), "--truth", str(truth),
              "--n", "60", "--seed", "6", "--out", str(tmp_path)])
        assert main(["compare", "--config", str(cfg),
                     "--data", str(tmp_path / "dataset.csv"),
                     "--out", str(tmp_path)]) == 2


class TestConfigValidation:
    def test_both_grid_forms_rejected(self, tmp_path):
        cfg = write_config(tmp_path / "c.json",
                           grid={"nu": 500, "kappa": 0.1, "r": 10,
                                 "boundaries": [0, 1]})
        data = write_dataset(tmp_path / "d.csv", ["a,60,1,0.5"])
        assert main(["fit", "--config", str(cfg), "--data", str(data),
                     "--out", str(tmp_path)]) == 2

    def test_nonpositive_variance_rejected(self, tmp_path):
        cfg = write_config(tmp_path / "c.json",
                           prior={"mean": [-6.0, 0.0], "variances": [1.0, 0.0],
                                  "rho": 0.9, "c0": 0.0})
        data = write_dataset(tmp_path / "d.csv", ["a,60,1,0.5"])
        assert main(["fit", "--config", str(cfg), "--data", str(data),
                     "--out", str(tmp_path)]) == 2

    def test_method_flag_overrides_config(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", method="lognormal")
        data = write_dataset(tmp_path / "d.csv", ["a,60,1,0.5", "b,90,1,0.1"])
        out1, out2 = tmp_path / "m1", tmp_path / "m2"
        out1.mkdir(), out2.mkdir()
        main(["fit", "--config", str(cfg), "--data", str(data),
              "--out", str(out1)])
        main(["fit", "--config", str(cfg), "--data", str(data),
              "--out", str(out2), "--method", "log-moment"])
        assert (out1 / "posterior.csv").read_bytes() \
            != (out2 / "posterior.csv").read_bytes()
