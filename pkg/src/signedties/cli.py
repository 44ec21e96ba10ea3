"""Command-line pipelines tying the library together.

Subcommands: ``generate`` (synthetic benchmark bundles), ``fit`` (MCMC
chains over observation files), ``estimate`` (sample files to a marginals
table), ``evaluate`` (AUC / posterior predictive / friendship reports),
and ``ingest`` (contact logs to per-day observation sets).  Every command
writes a ``manifest.json`` recording the resolved parameters, seeds, and
input/output digests; re-running with the same parameters reproduces the
output tables byte for byte.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import baselines, estimation, evaluation, ingest, io, synthetic
from .model import ObservationSet
from .sampler import SamplerConfig, run_chain, run_tempered

WORKERS_ENV = "SIGNEDTIES_WORKERS"


class UsageError(Exception):
    exit_code = 1


class DataError(Exception):
    exit_code = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# Manifest


def _digest_map(paths) -> dict:
    return {str(p): io.sha256_file(p) for p in paths}


def _write_manifest(out_dir: Path, command: str, params: dict, seed, inputs, outputs, t0: float):
    manifest = {
        "command": command,
        "params": params,
        "seed": seed,
        "inputs": _digest_map(inputs),
        "outputs": _digest_map(outputs),
        "duration_s": time.monotonic() - t0,
    }
    io.write_json_atomic(out_dir / "manifest.json", manifest)


def _ensure_out_dir(path_str: str) -> Path:
    out = Path(path_str)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# generate


def _synth_config(args) -> synthetic.SynthConfig:
    kwargs: dict = {}
    if args.config:
        kv = io.read_key_value_config(args.config)
        casts = {
            "n": int, "edge_density": float, "max_groups": int, "t": int,
            "seed": int,
        }
        for key, cast in casts.items():
            if key in kv:
                kwargs[key] = cast(kv[key])
        for key in ("p_pos_range", "p_zero_range", "p_neg_range", "q_range"):
            if key in kv:
                lo, hi = kv[key].split(",")
                kwargs[key] = (float(lo), float(hi))
    for key in ("n", "edge_density", "max_groups", "t", "seed"):
        value = getattr(args, key if key != "edge_density" else "density")
        if value is not None:
            kwargs[key] = value
    try:
        return synthetic.SynthConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad generator configuration: {exc}") from exc


def cmd_generate(args) -> int:
    t0 = time.monotonic()
    config = _synth_config(args)
    out = _ensure_out_dir(args.out)
    rng = np.random.default_rng(config.seed)
    inst = synthetic.generate_instance(config, rng, groups=args.groups)

    io.write_truth_network(out / "truth_network.txt", inst.network)
    io.write_partition_file(out / "truth_partition.txt", inst.partition)
    io.write_rates_file(out / "truth_rates.txt", inst.rates)
    io.write_observation_file(out / "observations.txt", inst.observation)

    params = {
        "n": config.n, "edge_density": config.edge_density,
        "max_groups": config.max_groups,
        "p_pos_range": list(config.p_pos_range),
        "p_zero_range": list(config.p_zero_range),
        "p_neg_range": list(config.p_neg_range),
        "q_range": list(config.q_range),
        "t": config.t, "groups": args.groups,
        "internal_edge_fraction": synthetic.internal_edge_fraction(
            inst.network, inst.partition
        ),
    }
    outputs = [
        out / "truth_network.txt", out / "truth_partition.txt",
        out / "truth_rates.txt", out / "observations.txt",
    ]
    _write_manifest(out, "generate", params, config.seed,
                    [args.config] if args.config else [], outputs, t0)
    return 0


# ---------------------------------------------------------------------------
# fit


def _expand_obs_paths(paths) -> list[str]:
    out: list[str] = []
    for p in paths:
        path = Path(p)
        if path.is_dir():
            found = sorted(str(f) for f in path.glob("*.txt"))
            if not found:
                raise DataError(f"no observation files in directory {p}")
            out.extend(found)
        elif path.exists():
            out.append(str(path))
        else:
            raise DataError(f"observation path not found: {p}")
    return out


def _sampler_config(args) -> SamplerConfig:
    mapping: dict = {}
    if args.config:
        mapping.update(io.read_key_value_config(args.config))
    for key in ("sweeps", "burn_in", "thin", "seed", "init_sweeps", "edge_updates"):
        value = getattr(args, key, None)
        if value is not None:
            mapping[key] = value
    for key in ("sigma_intra", "sigma_inter"):
        value = getattr(args, key, None)
        if value is not None:
            mapping[key] = value
    try:
        return io.sampler_config_from_mapping(mapping)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad sampler configuration: {exc}") from exc


def _chain_seed(base_seed: int, chains: int, index: int):
    return np.random.SeedSequence(base_seed).spawn(chains)[index]


def _fit_one_chain(obs_paths, config_kwargs, ladder_kwargs, base_seed, chains, index, out_path):
    obs = io.read_observation_files(obs_paths)
    config = SamplerConfig(**config_kwargs)
    rng = np.random.default_rng(_chain_seed(base_seed, chains, index))
    if ladder_kwargs is not None:
        from .sampler import TemperatureLadder

        samples = run_tempered(obs, config, TemperatureLadder(**ladder_kwargs), rng)
    else:
        samples = run_chain(obs, config, rng)
    io.write_samples(out_path, samples)
    return out_path


def cmd_fit(args) -> int:
    t0 = time.monotonic()
    obs_paths = _expand_obs_paths(args.obs)
    config = _sampler_config(args)
    out = _ensure_out_dir(args.out)
    try:
        obs = io.read_observation_files(obs_paths)
    except ValueError as exc:
        raise DataError(str(exc)) from exc

    ladder_kwargs = None
    if args.tempering:
        mapping = io.read_key_value_config(args.config) if args.config else {}
        ladder = io.ladder_from_mapping(mapping)
        ladder_kwargs = {"betas": ladder.betas, "swap_interval": ladder.swap_interval}

    config_kwargs = {
        "sigma_intra": config.sigma_intra, "sigma_inter": config.sigma_inter,
        "sweeps": config.sweeps, "burn_in": config.burn_in, "thin": config.thin,
        "seed": config.seed, "init_sweeps": config.init_sweeps,
        "edge_updates": config.edge_updates,
    }
    chain_paths = [out / f"chain_{c:03d}.jsonl" for c in range(args.chains)]
    workers = args.workers or int(os.environ.get(WORKERS_ENV, "1"))
    failures: list[tuple[int, str]] = []

    if workers > 1 and args.chains > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(
                    _fit_one_chain, obs_paths, config_kwargs, ladder_kwargs,
                    config.seed, args.chains, c, str(chain_paths[c]),
                ): c
                for c in range(args.chains)
            }
            for future, c in futures.items():
                try:
                    future.result()
                except Exception as exc:  # noqa: BLE001 - isolate chain failures
                    failures.append((c, str(exc)))
    else:
        for c in range(args.chains):
            try:
                _fit_one_chain(
                    obs_paths, config_kwargs, ladder_kwargs,
                    config.seed, args.chains, c, str(chain_paths[c]),
                )
            except Exception as exc:  # noqa: BLE001
                failures.append((c, str(exc)))

    completed = [p for p in chain_paths if p.exists()]
    outputs = list(completed)
    if completed:
        merged = io.merge_sample_sets([io.read_samples(p) for p in completed])
        marg = estimation.edge_marginals(merged)
        io.write_marginals_table(
            out / "marginals.tsv",
            marg.probs,
            estimation.posterior_mean(marg),
            estimation.edge_entropy(marg),
        )
        outputs.append(out / "marginals.tsv")

    params = dict(config_kwargs)
    params.update({"chains": args.chains, "tempering": bool(args.tempering),
                   "obs": obs_paths, "periods": len(obs),
                   "ladder": ladder_kwargs})
    _write_manifest(out, "fit", params, config.seed, obs_paths, outputs, t0)

    if failures:
        for c, msg in failures:
            print(f"chain {c} failed: {msg}", file=sys.stderr)
        return 3
    return 0


# ---------------------------------------------------------------------------
# estimate


def cmd_estimate(args) -> int:
    t0 = time.monotonic()
    out = _ensure_out_dir(args.out)
    try:
        merged = io.merge_sample_sets([io.read_samples(p) for p in args.samples])
        marg = estimation.edge_marginals(merged)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise DataError(f"bad sample file: {exc}") from exc
    io.write_marginals_table(
        out / "marginals.tsv",
        marg.probs,
        estimation.posterior_mean(marg),
        estimation.edge_entropy(marg),
    )
    _write_manifest(out, "estimate", {"samples": list(args.samples)}, None,
                    args.samples, [out / "marginals.tsv"], t0)
    return 0


# ---------------------------------------------------------------------------
# evaluate


def _evaluate_auc(args, out: Path) -> list[Path]:
    if not args.pred or not args.truth:
        raise UsageError("auc mode needs --pred and --truth")
    try:
        table = io.read_marginals_table(args.pred)
        truth = io.read_truth_network(args.truth)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    fraction = float("nan")
    if args.partition:
        part = io.read_partition_file(args.partition)
        fraction = synthetic.internal_edge_fraction(truth, part)
    rows = []
    for cls, scores in (("positive", table["probs"][:, :, 2]),
                        ("negative", table["probs"][:, :, 0])):
        target = 1 if cls == "positive" else -1
        auc = evaluation.auc_one_vs_rest(scores, truth, target)
        rows.append([args.method, cls, auc, fraction,
                     args.seed if args.seed is not None else ""])
    path = out / "auc.tsv"
    io.write_table(path, ["method", "class", "auc", "internal_edge_fraction", "seed"], rows)
    return [path]


def _evaluate_ppc(args, out: Path) -> list[Path]:
    if not args.samples or not args.obs:
        raise UsageError("ppc mode needs --samples and --obs")
    try:
        samples = io.merge_sample_sets([io.read_samples(p) for p in args.samples])
        obs = io.read_observation_files(_expand_obs_paths(args.obs))
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    result = evaluation.posterior_predictive(obs, samples, rng)
    paths = []
    ppc_path = out / "ppc.tsv"
    io.write_table(
        ppc_path,
        ["day", "period", "p_value"],
        [[args.day, k, p] for k, p in enumerate(result.p_values)],
    )
    paths.append(ppc_path)
    for k in range(len(result.p_values)):
        scatter = out / f"discrepancy_period_{k:03d}.tsv"
        io.write_table(
            scatter,
            ["draw", "d_observed", "d_replicated"],
            [
                [ell, float(result.d_observed[k][ell]), float(result.d_replicated[k][ell])]
                for ell in range(len(result.d_observed[k]))
            ],
        )
        paths.append(scatter)
    return paths


def _load_id_map(path) -> dict[int, int]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    mapping = payload.get("id_map", payload)
    return {int(k): int(v) for k, v in mapping.items()}


def _evaluate_friendship(args, out: Path) -> list[Path]:
    if not args.means or not args.questionnaire:
        raise UsageError("friendship mode needs --means and --questionnaire")
    try:
        tables = [io.read_marginals_table(p) for p in args.means]
        with open(args.questionnaire, "r", encoding="utf-8") as fh:
            recip_raw, unrecip_raw = ingest.parse_questionnaire(fh)
    except (ValueError, ingest.ContactParseError) as exc:
        raise DataError(str(exc)) from exc
    mats = [t["mean"] for t in tables]
    n = mats[0].shape[0]
    if any(m.shape[0] != n for m in mats):
        raise DataError("per-day marginals tables disagree on node count")

    id_map = _load_id_map(args.id_map) if args.id_map else None

    def remap(pairs) -> set:
        if id_map is None:
            kept = {p for p in pairs if p[0] < n and p[1] < n}
        else:
            kept = {
                (min(id_map[i], id_map[j]), max(id_map[i], id_map[j]))
                for i, j in pairs
                if i in id_map and j in id_map
            }
        return kept

    reciprocated = remap(recip_raw)
    unreciprocated = remap(unrecip_raw)
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    exclusions = () if args.control_unconstrained else (reciprocated, unreciprocated)
    control = ingest.sample_control_pairs(n, args.control, exclusions, rng)
    report = evaluation.friendship_comparison(mats, reciprocated, unreciprocated, control)

    summary = out / "friendship_summary.tsv"
    io.write_table(
        summary,
        ["group", "mean", "pairs"],
        [
            [name, report.group_means[name], int(report.group_values[name].size)]
            for name in ("reciprocated", "unreciprocated", "control")
        ],
    )
    hist = out / "friendship_hist.tsv"
    rows = []
    for name in ("reciprocated", "unreciprocated", "control"):
        for b, count in enumerate(report.histograms[name]):
            rows.append([name, float(report.bin_edges[b]),
                         float(report.bin_edges[b + 1]), int(count)])
    io.write_table(hist, ["group", "bin_left", "bin_right", "count"], rows)
    return [summary, hist]


def cmd_evaluate(args) -> int:
    t0 = time.monotonic()
    out = _ensure_out_dir(args.out)
    if args.mode == "auc":
        outputs = _evaluate_auc(args, out)
        inputs = [args.pred, args.truth] + ([args.partition] if args.partition else [])
    elif args.mode == "ppc":
        outputs = _evaluate_ppc(args, out)
        inputs = list(args.samples) + _expand_obs_paths(args.obs)
    else:
        outputs = _evaluate_friendship(args, out)
        inputs = list(args.means) + [args.questionnaire]
    _write_manifest(out, f"evaluate:{args.mode}",
                    {k: v for k, v in vars(args).items() if k != "func"},
                    args.seed, inputs, outputs, t0)
    return 0


# ---------------------------------------------------------------------------
# ingest


def _parse_break_spec(spec: str) -> tuple[int, int]:
    """Parse 'HH:MM+<minutes>m' or 'HH:MM-HH:MM' into day-relative seconds."""

    def hm_to_seconds(text: str) -> int:
        hours, minutes = text.split(":")
        return int(hours) * 3600 + int(minutes) * 60

    if "+" in spec:
        start_text, dur = spec.split("+", 1)
        if not dur.endswith("m"):
            raise UsageError(f"break duration must end in 'm': {spec}")
        start = hm_to_seconds(start_text)
        return start, start + int(dur[:-1]) * 60
    if "-" in spec:
        start_text, end_text = spec.split("-", 1)
        return hm_to_seconds(start_text), hm_to_seconds(end_text)
    raise UsageError(f"cannot parse break spec: {spec}")


def cmd_ingest(args) -> int:
    t0 = time.monotonic()
    out = _ensure_out_dir(args.out)
    try:
        with open(args.contacts, "r", encoding="utf-8") as fh:
            events = ingest.parse_contacts(fh)
        metadata_ids = ()
        if args.metadata:
            with open(args.metadata, "r", encoding="utf-8") as fh:
                metadata_ids = tuple(ingest.parse_metadata(fh))
    except (OSError, ingest.ContactParseError) as exc:
        raise DataError(str(exc)) from exc
    if not events:
        raise DataError("contact log contains no events")

    if args.breaks:
        spans = [_parse_break_spec(s) for s in args.breaks]
        days = sorted({ev.day for ev in events})
        intervals = {
            day: sorted(
                (day * ingest.SECONDS_PER_DAY + s, day * ingest.SECONDS_PER_DAY + e)
                for s, e in spans
            )
            for day in days
        }
        schedule = ingest.BreakSchedule(intervals)
    else:
        schedule = ingest.detect_breaks(events, args.bin_width, args.threshold)

    id_map = ingest.build_id_map(events, metadata_ids)
    per_day = ingest.window_observations(
        events, schedule, args.window, args.resolution,
        id_map=id_map, keep_partial=args.keep_partial,
    )
    if not per_day:
        raise DataError("no observation windows were produced")

    outputs = []
    day_records = []
    for index, day in enumerate(sorted(per_day)):
        day_dir = out / f"day_{index}"
        day_dir.mkdir(exist_ok=True)
        obs_set = per_day[day]
        for k, om in enumerate(obs_set):
            path = day_dir / f"period_{k:03d}.txt"
            io.write_observation_file(path, om)
            outputs.append(path)
        day_records.append({
            "day": day,
            "directory": day_dir.name,
            "intervals": schedule.intervals.get(day, []),
            "windows": len(obs_set),
            "t": [om.t for om in obs_set],
        })

    manifest_extra = {
        "days": day_records,
        "id_map": {str(raw): idx for raw, idx in sorted(id_map.items())},
        "n": len(id_map),
        "window": args.window,
        "resolution": args.resolution,
        "bin_width": args.bin_width,
        "threshold": args.threshold,
        "keep_partial": args.keep_partial,
        "breaks_override": args.breaks or [],
    }
    inputs = [args.contacts] + ([args.metadata] if args.metadata else [])
    _write_manifest(out, "ingest", manifest_extra, None, inputs, outputs, t0)
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="signedties",
                     description="Signed-network inference from interaction counts")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic benchmark bundle")
    gen.add_argument("--out", required=True)
    gen.add_argument("--config")
    gen.add_argument("--n", type=int)
    gen.add_argument("--density", type=float)
    gen.add_argument("--max-groups", dest="max_groups", type=int)
    gen.add_argument("--groups", type=int, help="pin the exact group count")
    gen.add_argument("--t", type=int)
    gen.add_argument("--seed", type=int)
    gen.set_defaults(func=cmd_generate)

    fit = sub.add_parser("fit", help="run MCMC chains on observation files")
    fit.add_argument("obs", nargs="+", help="observation files or directories")
    fit.add_argument("--out", required=True)
    fit.add_argument("--config")
    fit.add_argument("--chains", type=int, default=1)
    fit.add_argument("--sweeps", type=int)
    fit.add_argument("--burn-in", dest="burn_in", type=int)
    fit.add_argument("--thin", type=int)
    fit.add_argument("--seed", type=int)
    fit.add_argument("--init-sweeps", dest="init_sweeps", type=int)
    fit.add_argument("--edge-updates", dest="edge_updates", type=int)
    fit.add_argument("--sigma-intra", dest="sigma_intra", type=float)
    fit.add_argument("--sigma-inter", dest="sigma_inter", type=float)
    fit.add_argument("--tempering", action="store_true")
    fit.add_argument("--workers", type=int,
                     help=f"worker processes (default ${WORKERS_ENV} or 1)")
    fit.set_defaults(func=cmd_fit)

    est = sub.add_parser("estimate", help="marginals table from sample files")
    est.add_argument("samples", nargs="+")
    est.add_argument("--out", required=True)
    est.set_defaults(func=cmd_estimate)

    ev = sub.add_parser("evaluate", help="score predictions or check fit")
    ev.add_argument("--mode", choices=("auc", "ppc", "friendship"), required=True)
    ev.add_argument("--out", required=True)
    ev.add_argument("--pred", help="marginals-schema table (auc)")
    ev.add_argument("--truth", help="true-sign file (auc)")
    ev.add_argument("--partition", help="true partition file (auc metadata)")
    ev.add_argument("--method", default="mcmc")
    ev.add_argument("--samples", nargs="+", help="sample files (ppc)")
    ev.add_argument("--obs", nargs="+", help="observation files (ppc)")
    ev.add_argument("--day", type=int, default=0, help="day label for ppc rows")
    ev.add_argument("--means", nargs="+", help="per-day marginals tables (friendship)")
    ev.add_argument("--questionnaire", help="nomination file (friendship)")
    ev.add_argument("--id-map", dest="id_map",
                    help="ingest manifest or JSON mapping raw ids to indices")
    ev.add_argument("--control", type=int, default=300)
    ev.add_argument("--control-unconstrained", action="store_true",
                    help="sample control pairs without excluding friends")
    ev.add_argument("--seed", type=int)
    ev.set_defaults(func=cmd_evaluate)

    ing = sub.add_parser("ingest", help="contact log to per-day observations")
    ing.add_argument("--contacts", required=True)
    ing.add_argument("--metadata")
    ing.add_argument("--out", required=True)
    ing.add_argument("--window", type=int, default=240)
    ing.add_argument("--resolution", type=int, default=20)
    ing.add_argument("--bin-width", dest="bin_width", type=int, default=300)
    ing.add_argument("--threshold", type=float)
    ing.add_argument("--keep-partial", dest="keep_partial", action="store_true")
    ing.add_argument("--break", dest="breaks", action="append",
                     help="override break detection, e.g. 08:55+15m or 11:10-13:15")
    ing.set_defaults(func=cmd_ingest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report and map to exit code 3
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
