import json
import math

import numpy as np
import pytest

from signedties import io
from signedties.cli import main


def run(*argv):
    return main([str(a) for a in argv])


def read_manifest(out_dir):
    with open(out_dir / "manifest.json", "r", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture
def bundle(tmp_path):
    out = tmp_path / "bundle"
    assert run("generate", "--out", out, "--n", 10, "--t", 12,
               "--max-groups", 3, "--seed", 7) == 0
    return out


class TestGenerate:
    def test_writes_bundle_and_manifest(self, bundle):
        for name in (
            "truth_network.txt",
            "truth_partition.txt",
            "truth_rates.txt",
            "observations.txt",
            "manifest.json",
        ):
            assert (bundle / name).exists()
        manifest = read_manifest(bundle)
        assert manifest["command"] == "generate"
        assert manifest["seed"] == 7
        assert 0 <= manifest["params"]["internal_edge_fraction"] <= 1

    def test_default_config_is_64_nodes(self, tmp_path):
        out = tmp_path / "default"
        assert run("generate", "--out", out, "--seed", 1) == 0
        net = io.read_truth_network(out / "truth_network.txt")
        assert net.n == 64

    def test_same_seed_reproduces_digests(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run("generate", "--out", a, "--n", 8, "--seed", 3)
        run("generate", "--out", b, "--n", 8, "--seed", 3)
        for name in ("truth_network.txt", "observations.txt"):
            assert io.sha256_file(a / name) == io.sha256_file(b / name)

    def test_invalid_density_is_usage_error(self, tmp_path):
        assert run("generate", "--out", tmp_path / "x", "--density", 1.5) == 1

    def test_group_pin(self, tmp_path):
        out = tmp_path / "pinned"
        run("generate", "--out", out, "--n", 12, "--groups", 2, "--seed", 5)
        part = io.read_partition_file(out / "truth_partition.txt")
        assert part.gamma == 2


class TestFit:
    def test_chains_write_samples_and_marginals(self, bundle, tmp_path):
        out = tmp_path / "fit"
        code = run(
            "fit", bundle / "observations.txt", "--out", out,
            "--chains", 3, "--sweeps", 60, "--burn-in", 20, "--thin", 4,
            "--seed", 11,
        )
        assert code == 0
        for c in range(3):
            assert (out / f"chain_{c:03d}.jsonl").exists()
        assert (out / "marginals.tsv").exists()
        samples = io.read_samples(out / "chain_000.jsonl")
        assert len(samples) == 10

    def test_single_chain_reproducible(self, bundle, tmp_path):
        a, b = tmp_path / "f1", tmp_path / "f2"
        args = ["fit", bundle / "observations.txt", "--chains", 1,
                "--sweeps", 50, "--burn-in", 10, "--thin", 5, "--seed", 21]
        assert run(*args, "--out", a) == 0
        assert run(*args, "--out", b) == 0
        assert io.sha256_file(a / "chain_000.jsonl") == io.sha256_file(
            b / "chain_000.jsonl"
        )
        assert io.sha256_file(a / "marginals.tsv") == io.sha256_file(
            b / "marginals.tsv"
        )

    def test_tempering_flag(self, bundle, tmp_path):
        out = tmp_path / "tempered"
        code = run(
            "fit", bundle / "observations.txt", "--out", out, "--tempering",
            "--chains", 1, "--sweeps", 40, "--burn-in", 10, "--thin", 5,
            "--seed", 2,
        )
        assert code == 0
        assert len(io.read_samples(out / "chain_000.jsonl")) == 6

    def test_missing_obs_is_data_error(self, tmp_path):
        assert run("fit", tmp_path / "nope.txt", "--out", tmp_path / "o") == 2

    def test_directory_input_expands(self, bundle, tmp_path):
        obs_dir = tmp_path / "periods"
        obs_dir.mkdir()
        obs = io.read_observations(bundle / "observations.txt")
        io.write_observation_file(obs_dir / "p0.txt", obs[0])
        io.write_observation_file(obs_dir / "p1.txt", obs[0])
        out = tmp_path / "fitdir"
        assert run("fit", obs_dir, "--out", out, "--sweeps", 30,
                   "--burn-in", 5, "--seed", 1) == 0
        manifest = read_manifest(out)
        assert manifest["params"]["periods"] == 2


class TestEstimate:
    def test_merges_chains(self, bundle, tmp_path):
        fit_dir = tmp_path / "fit"
        run("fit", bundle / "observations.txt", "--out", fit_dir,
            "--chains", 2, "--sweeps", 40, "--burn-in", 10, "--thin", 5,
            "--seed", 3)
        out = tmp_path / "est"
        code = run("estimate", fit_dir / "chain_000.jsonl",
                   fit_dir / "chain_001.jsonl", "--out", out)
        assert code == 0
        table = io.read_marginals_table(out / "marginals.tsv")
        assert table["probs"].shape == (10, 10, 3)

    def test_bad_sample_file_is_data_error(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("not json\n")
        assert run("estimate", bad, "--out", tmp_path / "o") == 2


class TestEvaluate:
    def _fit(self, bundle, tmp_path, **kw):
        fit_dir = tmp_path / "fit"
        run("fit", bundle / "observations.txt", "--out", fit_dir,
            "--sweeps", 400, "--burn-in", 100, "--thin", 10, "--seed", 5)
        return fit_dir

    def test_auc_mode_perfect_predictions(self, bundle, tmp_path):
        truth = io.read_truth_network(bundle / "truth_network.txt")
        n = truth.n
        probs = np.zeros((n, n, 3))
        for s in (-1, 0, 1):
            probs[:, :, s + 1] = (truth.signs == s).astype(float)
        mean = probs[:, :, 2] - probs[:, :, 0]
        entropy = np.zeros((n, n))
        pred = tmp_path / "pred.tsv"
        io.write_marginals_table(pred, probs, mean, entropy)
        out = tmp_path / "auc"
        code = run("evaluate", "--mode", "auc", "--pred", pred,
                   "--truth", bundle / "truth_network.txt",
                   "--partition", bundle / "truth_partition.txt",
                   "--out", out, "--seed", 7)
        assert code == 0
        header, rows = io.read_table(out / "auc.tsv")
        assert header == ["method", "class", "auc", "internal_edge_fraction", "seed"]
        by_class = {r[1]: float(r[2]) for r in rows}
        assert by_class["positive"] == 1.0
        assert by_class["negative"] == 1.0

    def test_ppc_mode_outputs(self, bundle, tmp_path):
        fit_dir = self._fit(bundle, tmp_path)
        out = tmp_path / "ppc"
        code = run("evaluate", "--mode", "ppc",
                   "--samples", fit_dir / "chain_000.jsonl",
                   "--obs", bundle / "observations.txt",
                   "--out", out, "--seed", 1, "--day", 4)
        assert code == 0
        header, rows = io.read_table(out / "ppc.tsv")
        assert header == ["day", "period", "p_value"]
        assert rows[0][0] == "4"
        assert 0.0 <= float(rows[0][2]) <= 1.0
        header, rows = io.read_table(out / "discrepancy_period_000.tsv")
        assert header == ["draw", "d_observed", "d_replicated"]
        assert len(rows) == 30

    def test_friendship_mode(self, bundle, tmp_path):
        fit_dir = self._fit(bundle, tmp_path)
        est = tmp_path / "est"
        run("estimate", fit_dir / "chain_000.jsonl", "--out", est)
        quest = tmp_path / "questionnaire.txt"
        quest.write_text("0 1\n1 0\n2 3\n")
        out = tmp_path / "friend"
        code = run("evaluate", "--mode", "friendship",
                   "--means", est / "marginals.tsv",
                   "--questionnaire", quest,
                   "--control", 5, "--out", out, "--seed", 2)
        assert code == 0
        header, rows = io.read_table(out / "friendship_summary.tsv")
        groups = {r[0]: r for r in rows}
        assert set(groups) == {"reciprocated", "unreciprocated", "control"}
        assert int(groups["reciprocated"][2]) == 1
        assert int(groups["control"][2]) == 5
        assert (out / "friendship_hist.tsv").exists()

    def test_friendship_requires_questionnaire(self, bundle, tmp_path):
        assert run("evaluate", "--mode", "friendship",
                   "--means", bundle / "observations.txt",
                   "--out", tmp_path / "x") == 1


class TestIngest:
    @pytest.fixture
    def contact_log(self, tmp_path):
        rng = np.random.default_rng(0)
        lines = []
        day = 86_400
        for d in range(2):
            # quiet morning: in-class contacts only
            for k in range(30):
                lines.append(f"{d * day + 100 + 20 * k} 1 2 A A")
            # a 10-minute surge of cross-class contact starting at t=2000
            for k in range(120):
                ts = d * day + 2000 + 20 * (k % 30)
                i = int(rng.integers(1, 5))
                lines.append(f"{ts} {i} {i + 10} A B")
        return "\n".join(lines) + "\n"

    def test_produces_per_day_directories(self, tmp_path, contact_log):
        contacts = tmp_path / "contacts.txt"
        contacts.write_text(contact_log)
        out = tmp_path / "ingest"
        code = run("ingest", "--contacts", contacts, "--out", out,
                   "--bin-width", 300, "--threshold", 10,
                   "--window", 240, "--resolution", 20)
        assert code == 0
        manifest = read_manifest(out)
        assert len(manifest["params"]["days"]) == 2
        day0 = manifest["params"]["days"][0]
        assert day0["windows"] >= 1
        assert all(t == 12 for t in day0["t"])
        obs = io.read_observations(out / "day_0" / "period_000.txt")
        assert obs[0].counts.sum() > 0

    def test_break_override_bypasses_detection(self, tmp_path, contact_log):
        contacts = tmp_path / "contacts.txt"
        contacts.write_text(contact_log)
        out = tmp_path / "ingest2"
        code = run("ingest", "--contacts", contacts, "--out", out,
                   "--break", "00:33+8m", "--window", 240, "--resolution", 20)
        assert code == 0
        manifest = read_manifest(out)
        assert manifest["params"]["breaks_override"] == ["00:33+8m"]
        day0 = manifest["params"]["days"][0]
        assert day0["intervals"][0][1] - day0["intervals"][0][0] == 480
        assert day0["windows"] == 2

    def test_window_resolution_recorded_in_manifest(self, tmp_path, contact_log):
        contacts = tmp_path / "contacts.txt"
        contacts.write_text(contact_log)
        out = tmp_path / "ingest3"
        run("ingest", "--contacts", contacts, "--out", out,
            "--break", "00:33+8m", "--window", 240, "--resolution", 20)
        manifest = read_manifest(out)
        assert manifest["params"]["window"] == 240
        assert manifest["params"]["resolution"] == 20
        assert manifest["params"]["days"][0]["t"] == [12, 12]

    def test_parse_error_exit_code(self, tmp_path):
        contacts = tmp_path / "contacts.txt"
        contacts.write_text("100 1 2 A\n")
        assert run("ingest", "--contacts", contacts,
                   "--out", tmp_path / "x") == 2

    def test_unknown_subcommand_usage_error(self):
        assert run("frobnicate") == 1


class TestManifests:
    def test_inputs_and_outputs_digested(self, bundle, tmp_path):
        out = tmp_path / "fit"
        run("fit", bundle / "observations.txt", "--out", out,
            "--sweeps", 30, "--burn-in", 5, "--seed", 1)
        manifest = read_manifest(out)
        obs_path = str(bundle / "observations.txt")
        assert manifest["inputs"][obs_path] == io.sha256_file(obs_path)
        for path, digest in manifest["outputs"].items():
            assert io.sha256_file(path) == digest
        assert manifest["duration_s"] >= 0
