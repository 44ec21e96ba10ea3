"""On-disk formats.

Observation files: a header ``n=<int> t=<int>`` followed by ``i j count``
lines (0-based, each unordered pair at most once, missing pairs are 0).
A multi-period set is either an ordered list of such files or one file
whose header carries comma-separated per-period t values and whose rows
are ``period i j count``.

Posterior samples: one JSON record per line with the draw index, the
log-posterior, the upper-triangle sign string, and per-period group and
rate parameters.

Tables are tab-separated with a header row; configs are ``key=value``
lines.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .model import (
    ModelState,
    ObservationMatrix,
    ObservationSet,
    Partition,
    PeriodParams,
    RateParams,
    SignedNetwork,
)
from .sampler import SamplerConfig, SampleSet, TemperatureLadder

SIGN_CHARS = {-1: "-", 0: "0", 1: "+"}
CHAR_SIGNS = {v: k for k, v in SIGN_CHARS.items()}


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


# ---------------------------------------------------------------------------
# Observation files


def write_observation_file(path, obs: ObservationMatrix) -> None:
    iu, ju = np.triu_indices(obs.n, 1)
    lines = [f"n={obs.n} t={obs.t}"]
    for i, j in zip(iu, ju):
        c = obs.counts[i, j]
        if c:
            lines.append(f"{i} {j} {c}")
    _write_text(path, "\n".join(lines) + "\n")


def write_observation_set_file(path, obs_set: ObservationSet) -> None:
    ts = ",".join(str(om.t) for om in obs_set)
    lines = [f"n={obs_set.n} t={ts}"]
    iu, ju = np.triu_indices(obs_set.n, 1)
    for k, om in enumerate(obs_set):
        for i, j in zip(iu, ju):
            c = om.counts[i, j]
            if c:
                lines.append(f"{k} {i} {j} {c}")
    _write_text(path, "\n".join(lines) + "\n")


def _parse_obs_header(line: str, path) -> tuple[int, list[int]]:
    fields = dict(item.split("=", 1) for item in line.split())
    try:
        n = int(fields["n"])
        ts = [int(v) for v in fields["t"].split(",")]
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}: bad observation header {line!r}") from exc
    return n, ts


def read_observations(path) -> ObservationSet:
    """Read one observation file (single- or multi-period form)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ValueError(f"{path}: empty observation file")
    n, ts = _parse_obs_header(lines[0], path)
    counts = [np.zeros((n, n), dtype=np.int64) for _ in ts]
    for ln in lines[1:]:
        parts = ln.split()
        if len(ts) == 1 and len(parts) == 3:
            k = 0
            i, j, c = map(int, parts)
        elif len(parts) == 4:
            k, i, j, c = map(int, parts)
        else:
            raise ValueError(f"{path}: bad observation row {ln!r}")
        if not (0 <= k < len(ts)):
            raise ValueError(f"{path}: period {k} out of range")
        counts[k][i, j] = c
        counts[k][j, i] = c
    return ObservationSet(
        [ObservationMatrix(c, t) for c, t in zip(counts, ts)]
    )


def read_observation_files(paths) -> ObservationSet:
    """Concatenate several observation files into one ordered set."""
    periods = []
    for path in paths:
        periods.extend(read_observations(path).periods)
    return ObservationSet(periods)


# ---------------------------------------------------------------------------
# Posterior sample records


def signs_to_string(network: SignedNetwork) -> str:
    iu, ju = np.triu_indices(network.n, 1)
    return "".join(SIGN_CHARS[int(s)] for s in network.signs[iu, ju])


def string_to_signs(text: str, n: int) -> SignedNetwork:
    iu, ju = np.triu_indices(n, 1)
    if len(text) != iu.size:
        raise ValueError("sign string length does not match n")
    vals = np.array([CHAR_SIGNS[c] for c in text], dtype=np.int8)
    signs = np.zeros((n, n), dtype=np.int8)
    signs[iu, ju] = vals
    signs[ju, iu] = vals
    return SignedNetwork(signs)


def write_samples(path, samples: SampleSet) -> None:
    records = []
    for idx, draw in enumerate(samples.draws):
        record = {
            "draw": idx,
            "log_posterior": float(samples.log_posteriors[idx]),
            "n": draw.n,
            "signs": signs_to_string(draw.network),
            "periods": [
                {
                    "gamma": pp.partition.gamma,
                    "labels": pp.partition.labels.tolist(),
                    "p_neg": pp.rates.p_neg,
                    "p_zero": pp.rates.p_zero,
                    "p_pos": pp.rates.p_pos,
                    "q": pp.rates.q,
                }
                for pp in draw.periods
            ],
        }
        records.append(json.dumps(record))
    _write_text(path, "\n".join(records) + "\n")


def read_samples(path) -> SampleSet:
    draws, lps = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            network = string_to_signs(rec["signs"], rec["n"])
            periods = [
                PeriodParams(
                    Partition(np.array(p["labels"])),
                    RateParams(p["p_neg"], p["p_zero"], p["p_pos"], p["q"]),
                )
                for p in rec["periods"]
            ]
            draws.append(
                ModelState(network, periods, log_posterior=rec["log_posterior"])
            )
            lps.append(rec["log_posterior"])
    return SampleSet(draws, np.array(lps))


def merge_sample_sets(sets) -> SampleSet:
    draws, lps = [], []
    for s in sets:
        draws.extend(s.draws)
        lps.extend(s.log_posteriors.tolist())
    return SampleSet(draws, np.array(lps))


# ---------------------------------------------------------------------------
# Tables


def write_table(path, header, rows) -> None:
    lines = ["\t".join(header)]
    for row in rows:
        lines.append("\t".join(_fmt(v) for v in row))
    _write_text(path, "\n".join(lines) + "\n")


def read_table(path) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = lines[0].split("\t")
    return header, [ln.split("\t") for ln in lines[1:]]


MARGINALS_HEADER = ["i", "j", "p_neg", "p_zero", "p_pos", "mean", "entropy"]


def write_marginals_table(path, probs: np.ndarray, mean: np.ndarray, entropy: np.ndarray) -> None:
    n = probs.shape[0]
    iu, ju = np.triu_indices(n, 1)
    rows = [
        [
            int(i),
            int(j),
            float(probs[i, j, 0]),
            float(probs[i, j, 1]),
            float(probs[i, j, 2]),
            float(mean[i, j]),
            float(entropy[i, j]),
        ]
        for i, j in zip(iu, ju)
    ]
    write_table(path, MARGINALS_HEADER, rows)


def read_marginals_table(path) -> dict[str, np.ndarray]:
    header, rows = read_table(path)
    if header != MARGINALS_HEADER:
        raise ValueError(f"{path}: unexpected marginals header {header}")
    n = max(int(r[1]) for r in rows) + 1
    probs = np.zeros((n, n, 3))
    mean = np.zeros((n, n))
    entropy = np.zeros((n, n))
    for r in rows:
        i, j = int(r[0]), int(r[1])
        probs[i, j] = probs[j, i] = [float(r[2]), float(r[3]), float(r[4])]
        mean[i, j] = mean[j, i] = float(r[5])
        entropy[i, j] = entropy[j, i] = float(r[6])
    return {"probs": probs, "mean": mean, "entropy": entropy}


# ---------------------------------------------------------------------------
# Instance bundle pieces


def write_truth_network(path, network: SignedNetwork) -> None:
    iu, ju = np.triu_indices(network.n, 1)
    rows = [f"{i} {j} {network.signs[i, j]}" for i, j in zip(iu, ju)]
    _write_text(path, "\n".join(rows) + "\n")


def read_truth_network(path) -> SignedNetwork:
    triples = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                i, j, s = map(int, line.split())
                triples.append((i, j, s))
    n = max(max(i, j) for i, j, _ in triples) + 1
    signs = np.zeros((n, n), dtype=np.int8)
    for i, j, s in triples:
        signs[i, j] = signs[j, i] = s
    return SignedNetwork(signs)


def write_partition_file(path, partition: Partition) -> None:
    rows = [f"{i} {g}" for i, g in enumerate(partition.labels)]
    _write_text(path, "\n".join(rows) + "\n")


def read_partition_file(path) -> Partition:
    pairs = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                i, g = map(int, line.split())
                pairs[i] = g
    return Partition(np.array([pairs[i] for i in range(len(pairs))]))


def write_rates_file(path, rates: RateParams) -> None:
    text = (
        f"p_neg={rates.p_neg!r}\np_zero={rates.p_zero!r}\n"
        f"p_pos={rates.p_pos!r}\nq={rates.q!r}\n"
    )
    _write_text(path, text)


def read_rates_file(path) -> RateParams:
    kv = read_key_value_config(path)
    return RateParams(
        float(kv["p_neg"]), float(kv["p_zero"]), float(kv["p_pos"]), float(kv["q"])
    )


# ---------------------------------------------------------------------------
# Configs and manifests


def read_key_value_config(path) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


_SAMPLER_KEYS = {
    "sigma_intra": float,
    "sigma_inter": float,
    "sweeps": int,
    "burn_in": int,
    "thin": int,
    "seed": int,
    "init_sweeps": int,
    "edge_updates": int,
}


def sampler_config_from_mapping(mapping: dict) -> SamplerConfig:
    kwargs = {}
    for key, cast in _SAMPLER_KEYS.items():
        if key in mapping and mapping[key] not in (None, ""):
            kwargs[key] = cast(mapping[key])
    return SamplerConfig(**kwargs)


def ladder_from_mapping(mapping: dict) -> TemperatureLadder:
    kwargs = {}
    if mapping.get("betas"):
        value = mapping["betas"]
        betas = value if isinstance(value, (list, tuple)) else value.split(",")
        kwargs["betas"] = tuple(float(b) for b in betas)
    if mapping.get("swap_interval"):
        kwargs["swap_interval"] = int(mapping["swap_interval"])
    return TemperatureLadder(**kwargs)


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_json_atomic(path, payload) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
