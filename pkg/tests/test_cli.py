import json
import os

import numpy as np
import pytest

from nsbm import io
from nsbm.cli import main
from nsbm.metrics import mean_xi_nmi, min_vi_partition, nmi
from nsbm.model import Hyper, PosteriorSamples
from nsbm.samplers import ChainOptions, run_chain
from nsbm.simgen import SimConfig, gen_collection


@pytest.fixture
def sim_config(tmp_path):
    cfg = {"J": 6, "n": 18, "K": 2, "L": [2, 2], "gamma": 0.2, "lambda": 5.0, "tau": 0.0, "seed": 3}
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def read_bytes(path):
    with open(path, "rb") as f:
        return f.read()


class TestIoRoundTrips:
    def test_collection_round_trip(self, tmp_path):
        coll = gen_collection(SimConfig(J=5, n=(6, 14), K=2, L=(2, 3), gamma=0.4, lam=4.0, tau=0.3, seed=8)).collection
        path = tmp_path / "nets.ndjson"
        io.write_collection(path, coll)
        back = io.read_collection(path)
        assert back.equals(coll)

    def test_collection_without_truth(self, tmp_path):
        coll = gen_collection(SimConfig(J=3, n=8, K=1, L=(2,), gamma=0.5, lam=3.0, seed=1)).collection
        coll.z_true = None
        coll.xi_true = None
        path = tmp_path / "nets.ndjson"
        io.write_collection(path, coll)
        back = io.read_collection(path)
        assert back.equals(coll)
        assert back.z_true is None and back.xi_true is None

    def test_samples_round_trip(self, tmp_path):
        s = PosteriorSamples(kind="g", seed=0)
        s.iters = [1, 3]
        s.z_draws = [np.array([0, 1]), np.array([1, 1])]
        s.xi_draws = [[np.array([0, 1, 0]), np.array([1])], [np.array([0, 0, 0]), np.array([0])]]
        path = tmp_path / "samples.ndjson"
        io.write_samples(path, s)
        back = io.read_samples(path)
        assert back.iters == s.iters
        assert all(np.array_equal(a, b) for a, b in zip(back.z_draws, s.z_draws))

    def test_edgelist_dir(self, tmp_path):
        d = tmp_path / "nets"
        d.mkdir()
        (d / "a.txt").write_text("0 1\n1 2\n")
        (d / "b.txt").write_text("0 3\n")
        coll = io.read_edgelist_dir(d)
        assert coll.J == 2
        assert coll.networks[0].n == 3 and coll.networks[0].n_edges == 2
        assert coll.networks[1].n == 4

    def test_labels_round_trip(self, tmp_path):
        path = tmp_path / "labels.json"
        io.write_labels(path, "run-1", [0, 1, 0], [[0, 1], [2, 2, 0]])
        run_id, z, xi = io.read_labels(path)
        assert run_id == "run-1"
        assert z.tolist() == [0, 1, 0]
        assert xi[1].tolist() == [2, 2, 0]

    def test_bad_network_record(self, tmp_path):
        path = tmp_path / "bad.ndjson"
        path.write_text('{"id": "x", "n": 2}\n')
        with pytest.raises(ValueError):
            io.read_collection(path)


class TestSimulateCommand:
    def test_writes_records(self, sim_config, tmp_path):
        out = tmp_path / "nets.ndjson"
        assert main(["simulate", "--config", sim_config, "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 6
        rec = json.loads(lines[0])
        assert rec["n"] == 18 and rec["z_true"] is not None

    def test_constant_truth_single_class(self, tmp_path):
        cfg = {"J": 3, "n": 10, "K": 1, "L": [1], "gamma": 0.5, "lambda": 3.0, "seed": 0}
        cpath = tmp_path / "c.json"
        cpath.write_text(json.dumps(cfg))
        out = tmp_path / "nets.ndjson"
        assert main(["simulate", "--config", str(cpath), "--out", str(out)]) == 0
        for line in out.read_text().strip().splitlines():
            rec = json.loads(line)
            assert set(rec["xi_true"]) == {0}

    def test_deterministic_bytes(self, sim_config, tmp_path):
        o1, o2 = tmp_path / "a.ndjson", tmp_path / "b.ndjson"
        main(["simulate", "--config", sim_config, "--out", str(o1), "--seed", "5"])
        main(["simulate", "--config", sim_config, "--out", str(o2), "--seed", "5"])
        assert read_bytes(o1) == read_bytes(o2)

    def test_malformed_config_exit_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"J": 2}')
        assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
        notjson = tmp_path / "notjson"
        notjson.write_text("hello")
        assert main(["simulate", "--config", str(notjson), "--out", str(tmp_path / "y")]) == 2

    def test_personality_config(self, tmp_path):
        cfg = {"benchmark": "personality", "J_per_school": 2, "n_range": [10, 20], "seed": 1}
        cpath = tmp_path / "p.json"
        cpath.write_text(json.dumps(cfg))
        out = tmp_path / "nets.ndjson"
        assert main(["simulate", "--config", str(cpath), "--out", str(out)]) == 0
        assert len(out.read_text().strip().splitlines()) == 6


class TestFitCommand:
    def fit(self, data, out, trace=None, **kw):
        args = ["fit", "--data", str(data), "--sampler", kw.pop("sampler", "cg"), "--out", str(out)]
        defaults = dict(iters=8, burnin=2, thin=2, K=3, L=4, seed=2)
        defaults.update(kw)
        for key, val in defaults.items():
            args += [f"--{key}" if len(key) > 1 else f"-{key}", str(val)]
        if trace:
            args += ["--trace", str(trace)]
        return main(args)

    def test_single_draw(self, sim_config, tmp_path):
        data = tmp_path / "nets.ndjson"
        main(["simulate", "--config", sim_config, "--out", str(data)])
        out = tmp_path / "samples.ndjson"
        assert self.fit(data, out, iters=1, burnin=0, thin=1) == 0
        assert len(out.read_text().strip().splitlines()) == 1

    def test_trace_columns_with_truth(self, sim_config, tmp_path):
        data = tmp_path / "nets.ndjson"
        main(["simulate", "--config", sim_config, "--out", str(data)])
        out, trace = tmp_path / "s.ndjson", tmp_path / "t.csv"
        assert self.fit(data, out, trace=trace) == 0
        lines = trace.read_text().splitlines()
        header = lines[0].split(",")
        assert header == [
            "iter",
            "log_density",
            "occupied_classes",
            "mean_occupied_communities",
            "z_nmi",
            "mean_xi_nmi",
            "elapsed_ms",
        ]
        z_col = header.index("z_nmi")
        vals = [float(row.split(",")[z_col]) for row in lines[1:]]
        assert all(0.0 <= v <= 1.0 for v in vals)

    def test_deterministic_samples_bytes(self, sim_config, tmp_path):
        data = tmp_path / "nets.ndjson"
        main(["simulate", "--config", sim_config, "--out", str(data)])
        o1, o2 = tmp_path / "s1.ndjson", tmp_path / "s2.ndjson"
        assert self.fit(data, o1) == 0
        assert self.fit(data, o2) == 0
        assert read_bytes(o1) == read_bytes(o2)

    def test_invalid_sampler_exit_2(self, sim_config, tmp_path):
        data = tmp_path / "nets.ndjson"
        main(["simulate", "--config", sim_config, "--out", str(data)])
        assert self.fit(data, tmp_path / "x.ndjson", sampler="mcmc") == 2

    def test_unreadable_input_exit_2(self, tmp_path):
        assert self.fit(tmp_path / "missing.ndjson", tmp_path / "x.ndjson") == 2

    def test_replicates_merged(self, sim_config, tmp_path):
        data = tmp_path / "nets.ndjson"
        main(["simulate", "--config", sim_config, "--out", str(data)])
        out = tmp_path / "s.ndjson"
        assert self.fit(data, out, replicates=2) == 0
        recs = [json.loads(l) for l in out.read_text().strip().splitlines()]
        assert {r["replicate"] for r in recs} == {0, 1}

    def test_edgelist_format(self, tmp_path):
        d = tmp_path / "nets"
        d.mkdir()
        (d / "n0.txt").write_text("0 1\n1 2\n0 2\n")
        (d / "n1.txt").write_text("0 1\n2 3\n")
        out = tmp_path / "s.ndjson"
        assert main([
            "fit", "--data", str(d), "--format", "edgelist", "--sampler", "g",
            "--iters", "3", "--burnin", "1", "--thin", "1", "-K", "2", "-L", "3",
            "--init", "random", "--seed", "1", "--out", str(out),
        ]) == 0
        assert len(out.read_text().strip().splitlines()) == 2

    def test_env_seed_fallback(self, sim_config, tmp_path, monkeypatch):
        data = tmp_path / "nets.ndjson"
        main(["simulate", "--config", sim_config, "--out", str(data)])
        o1, o2, o3 = (tmp_path / f"s{i}.ndjson" for i in range(3))
        monkeypatch.setenv("NSBM_SEED", "17")
        args = lambda o: [
            "fit", "--data", str(data), "--sampler", "cg", "--iters", "4",
            "--burnin", "1", "--thin", "1", "-K", "2", "-L", "3", "--out", str(o),
        ]
        assert main(args(o1)) == 0
        assert main(args(o2)) == 0
        monkeypatch.setenv("NSBM_SEED", "18")
        assert main(args(o3)) == 0
        assert read_bytes(o1) == read_bytes(o2) != read_bytes(o3)


class TestSummarizeAndEval:
    def pipeline(self, tmp_path, draws):
        samples = tmp_path / "samples.ndjson"
        s = PosteriorSamples(kind="cg", seed=0)
        for i, (z, xi) in enumerate(draws):
            s.iters.append(i)
            s.z_draws.append(np.asarray(z))
            s.xi_draws.append([np.asarray(x) for x in xi])
        io.write_samples(samples, s)
        return samples

    def test_single_draw_echoed(self, tmp_path):
        samples = self.pipeline(tmp_path, [([0, 1], [[0, 0, 1], [1, 0]])])
        out = tmp_path / "labels.json"
        assert main(["summarize", "--samples", str(samples), "--out", str(out)]) == 0
        _, z, xi = io.read_labels(out)
        assert z.tolist() == [0, 1]
        assert xi[0].tolist() == [0, 0, 1]

    def test_medoid_matches_library(self, tmp_path, rng):
        draws = []
        for _ in range(7):
            z = rng.integers(0, 2, 3).tolist()
            xi = [rng.integers(0, 2, 4).tolist(), rng.integers(0, 3, 5).tolist()]
            draws.append((z, xi))
        samples = self.pipeline(tmp_path, [(z, xi) for z, xi in draws])
        out = tmp_path / "labels.json"
        assert main(["summarize", "--samples", str(samples), "--out", str(out)]) == 0
        _, z, xi = io.read_labels(out)
        assert z.tolist() == min_vi_partition([d[0] for d in draws]).tolist()
        assert xi[1].tolist() == min_vi_partition([d[1][1] for d in draws]).tolist()

    def test_empty_samples_exit_2(self, tmp_path):
        empty = tmp_path / "empty.ndjson"
        empty.write_text("")
        assert main(["summarize", "--samples", str(empty), "--out", str(tmp_path / "o")]) == 2

    def test_eval_exact_match(self, sim_config, tmp_path):
        data = tmp_path / "nets.ndjson"
        main(["simulate", "--config", sim_config, "--out", str(data)])
        coll = io.read_collection(data)
        labels = tmp_path / "labels.json"
        io.write_labels(labels, "r0", coll.z_true, coll.xi_true)
        out = tmp_path / "metrics.csv"
        assert main(["eval", "--labels", str(labels), "--truth", str(data), "--out", str(out)]) == 0
        row = out.read_text().splitlines()[1].split(",")
        assert row[0] == "r0" and float(row[1]) == 1.0 and float(row[2]) == 1.0

    def test_eval_constant_labels(self, sim_config, tmp_path):
        data = tmp_path / "nets.ndjson"
        main(["simulate", "--config", sim_config, "--out", str(data)])
        coll = io.read_collection(data)
        labels = tmp_path / "labels.json"
        io.write_labels(labels, "r1", np.zeros(coll.J, dtype=int), coll.xi_true)
        out = tmp_path / "metrics.csv"
        assert main(["eval", "--labels", str(labels), "--truth", str(data), "--out", str(out)]) == 0
        row = out.read_text().splitlines()[1].split(",")
        assert float(row[1]) == 0.0

    def test_eval_matches_metrics_module(self, sim_config, tmp_path, rng):
        data = tmp_path / "nets.ndjson"
        main(["simulate", "--config", sim_config, "--out", str(data)])
        coll = io.read_collection(data)
        z_hat = rng.integers(0, 2, coll.J)
        xi_hat = [rng.integers(0, 2, A.n) for A in coll.networks]
        labels = tmp_path / "labels.json"
        io.write_labels(labels, "r2", z_hat, xi_hat)
        out = tmp_path / "metrics.csv"
        assert main(["eval", "--labels", str(labels), "--truth", str(data), "--out", str(out)]) == 0
        row = out.read_text().splitlines()[1].split(",")
        assert np.isclose(float(row[1]), nmi(z_hat, coll.z_true))
        assert np.isclose(float(row[2]), mean_xi_nmi(xi_hat, coll.xi_true))

    def test_eval_shape_mismatch_exit_2(self, sim_config, tmp_path):
        data = tmp_path / "nets.ndjson"
        main(["simulate", "--config", sim_config, "--out", str(data)])
        labels = tmp_path / "labels.json"
        io.write_labels(labels, "r3", [0, 1], [[0], [0]])
        assert main(["eval", "--labels", str(labels), "--truth", str(data), "--out", str(tmp_path / "m")]) == 2


def test_cli_matches_library_run(sim_config, tmp_path):
    data = tmp_path / "nets.ndjson"
    main(["simulate", "--config", sim_config, "--out", str(data)])
    out = tmp_path / "s.ndjson"
    main([
        "fit", "--data", str(data), "--sampler", "cg", "--iters", "8", "--burnin", "2",
        "--thin", "2", "-K", "3", "-L", "4", "--seed", "2", "--out", str(out),
    ])
    coll = io.read_collection(data)
    samples = run_chain("cg", coll, Hyper(K=3, L=4), ChainOptions(iterations=8, burnin=2, thin=2, seed=2))
    back = io.read_samples(out)
    assert back.iters == samples.iters
    assert all(np.array_equal(a, b) for a, b in zip(back.z_draws, samples.z_draws))
