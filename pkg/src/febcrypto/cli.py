"""Command-line harness: ``febcrypto <subcommand> [options]``.

Parameters resolve in order: explicit flag, ``--config`` TOML file,
``--preset``, built-in default.  Trial ``i`` is seeded from ``[seed, i]``,
so results do not depend on ``--jobs``.  Exit status is 0 on success, 1 on
a configuration error and 2 when a checked invariant is violated.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from functools import partial
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import experiments as ex
from .adversaries import COMPLIANT_ADVERSARIES, EVE_STRATEGIES, MEMORY_ADVERSARIES
from .games import (CountingConfig, GameConfigError, MemoryGameConfig, landauer_counting, merge_stats,
                    run_memory_game)
from .presets import PRESETS, UnknownPreset, preset
from .protocols import ConfigError, OtParams, SkeParams

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2


# parameter table: (flag, type, default, help)

SKE_OPTIONS = [
    ("nu", int, 12, "ν: budget exponent; the adversary holds 2^ν units, honest parties O(ν)"),
    ("k", int, 4, "k: register length multiplier, register is k·2^ν bits"),
    ("t", int, 2000, "t: raw-key bits sacrificed for error estimation"),
    ("s", int, 2000, "s: raw-key bits kept as key material"),
    ("delta_prime", float, 0.05, "δ′: slack added to the error rate when sizing the reconciliation hash"),
    ("eta", int, 30, "η: extra reconciliation hash bits (soundness 2^-η)"),
    ("epsilon_pa", float, 20.0, "ε: privacy-amplification security margin in bits"),
    ("delta", float, 0.02, "δ: per-bit min-entropy slack of the sampled raw key"),
    ("epsilon_est", float, 0.01, "ε (estimation): Chernoff slack on the untested error rate"),
    ("abort_threshold", float, None, "largest tolerated p_test; default is the largest value leaving m > 0"),
    ("key_bits", int, None, "m′: keep only the first m′ bits of the final key"),
    ("cap_factor", int, 2**13, "public-channel message cap, in units of ν"),
    ("noise", float, 0.0, "p: crossover probability of a binary symmetric channel on the SWAP link"),
    ("eve", str, "none", f"Eve's strategy on the SWAP link: {', '.join(EVE_STRATEGIES)}"),
    ("eve_bits", int, None, "b: bits copied by store-fraction (default 2^ν)"),
]

OT_OPTIONS = [
    ("nu", int, 10, "ν: budget exponent; registers are 4·2^ν bits"),
    ("n", int, 128, "n: message length"),
    ("eta", int, 40, "η: extra raw positions beyond n"),
    ("bob_choice", int, 0, "i: index of the message Bob receives (0 or 1)"),
    ("flips", int, 0, "f: bits a cheating Bob flips in the returned X^(0⊕1)"),
    ("classicize", bool, False, "Bob XORs both registers onto fresh random pads first"),
    ("cap_factor", int, 2**13, "public-channel message cap, in units of ν"),
]

GAME_OPTIONS = [
    ("nu", int, 3, "ν: the adversary holds 2^ν units"),
    ("k", int, 4, "k: X has k·2^ν bits"),
    ("variant", str, "exhaustive", "exhaustive (quiz all of X) or sampled (quiz t positions)"),
    ("t", int, None, "t: quiz size of the sampled game"),
    ("adversary", str, "copy-first", f"strategy: {', '.join(MEMORY_ADVERSARIES)}"),
]

COUNT_OPTIONS = [
    ("len_x", int, 12, "|x|: memory-tape length"),
    ("len_y", int, 6, "|y|: free-energy-tape length"),
    ("w_in", int, 2, "w_in: free-energy cells the machine may consume"),
    ("w_out", int, 8, "w_out: leading zeros demanded on the memory tape"),
    ("permutation", str, "random", "random, adversarial or identity reversible map"),
]

LHL_OPTIONS = [
    ("epsilon", int, None, "ε: security exponent; m = floor(H_min − 2ε). Default cycles through 1, 2, 3"),
    ("n_min", int, 6, "smallest source length n"),
    ("n_max", int, 10, "largest source length n (at most 12)"),
]

UNIV_OPTIONS = [
    ("n", int, 4, "n: hash input length"),
    ("m", int, 2, "m: hash output length"),
]

RECON_OPTIONS = [
    ("s", int, 24, "s: block length"),
    ("p", float, 0.05, "p: BSC crossover between Alice's and Bob's blocks"),
    ("delta_prime", float, 0.05, "δ′: slack added to p when sizing the hash"),
    ("eta", int, 10, "η: extra hash bits"),
    ("max_candidates", int, 1 << 22, "cap on candidates examined by exact search"),
]

SUBCOMMANDS = {
    "ske": (SKE_OPTIONS, 200, "secret-key establishment runs"),
    "ot": (OT_OPTIONS, 100, "1-2 oblivious transfer runs"),
    "memory-game": (GAME_OPTIONS, 10000, "memory game against a ledger-bounded adversary"),
    "landauer-count": (COUNT_OPTIONS, 100, "reversible-map counting (trials = random permutations)"),
    "lhl-check": (LHL_OPTIONS, 30, "exact leftover-hash distance on random sources"),
    "universality-check": (UNIV_OPTIONS, 50, "exhaustive 2-universality count on random input pairs"),
    "reconcile-bench": (RECON_OPTIONS, 100, "hash-based reconciliation on BSC blocks"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="febcrypto", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (options, trials, desc) in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=desc, description=desc)
        common = p.add_argument_group("run control")
        common.add_argument("--seed", type=int, default=None, help="master seed (64-bit, default 0)")
        common.add_argument("--trials", type=int, default=None, help=f"number of trials (default {trials})")
        common.add_argument("--jobs", type=int, default=1, help="worker processes; results do not depend on it")
        common.add_argument("--output", type=Path, default=None, help="write detailed records here")
        common.add_argument("--format", choices=("json", "csv"), default="json", help="format of --output")
        common.add_argument("--preset", default=None, help=f"named parameter set: {', '.join(sorted(PRESETS))}")
        common.add_argument("--config", type=Path, default=None, help="TOML file of parameter values")
        group = p.add_argument_group("parameters")
        for dest, typ, default, text in options:
            flag = "--" + dest.replace("_", "-")
            shown = f"{text} (default {default})" if default is not None else text
            if typ is bool:
                group.add_argument(flag, dest=dest, action="store_true", default=None, help=shown)
            else:
                group.add_argument(flag, dest=dest, type=typ, default=None, help=shown)
    return parser


PRESET_COMMANDS = {"ske-desk": "ske", "ot-desk": "ot", "landauer-exhaustive": "landauer-count"}


def _preset_values(command: str, name: str | None) -> dict:
    if name is None:
        return {}
    found = preset(name)
    if PRESET_COMMANDS[name] != command:
        raise ConfigError(f"preset {name!r} belongs to the {PRESET_COMMANDS[name]} subcommand")
    if "params" in found:
        return asdict(found["params"])
    return {k: v for k, v in found.items() if not isinstance(v, list)} | {"grid": found}


def resolve(args: argparse.Namespace) -> dict:
    options, trials, _ = SUBCOMMANDS[args.command]
    values = {dest: default for dest, _, default, _ in options}
    values.update(seed=0, trials=trials)
    values.update(_preset_values(args.command, args.preset))
    if args.config is not None:
        try:
            data = tomllib.loads(args.config.read_text())
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        data = data.get(args.command, data)
        known = set(values) | {"grid"}
        for key, val in data.items():
            key = key.replace("-", "_")
            if key not in known:
                raise ConfigError(f"unknown parameter {key!r} in {args.config}")
            values[key] = val
    for dest in list(values) + ["seed", "trials"]:
        val = getattr(args, dest, None)
        if val is not None:
            values[dest] = val
    if values["trials"] < 1:
        raise ConfigError("--trials must be at least 1")
    if values["seed"] < 0 or values["seed"] >= 2**64:
        raise ConfigError("--seed must be a 64-bit unsigned integer")
    return values


def _map_trials(func, seed: int, trials: int, jobs: int) -> list:
    seeds = [ex.trial_seed(seed, i) for i in range(trials)]
    if jobs <= 1:
        return [func(s) for s in seeds]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, seeds, chunksize=max(1, trials // (4 * jobs))))


# subcommands; each returns (summary, records, invariant_ok)


def _ske_params(v: dict) -> SkeParams:
    fields = {f: v[f] for f in SkeParams.__dataclass_fields__ if f in v}
    return SkeParams(**fields)


def cmd_ske(v: dict, jobs: int):
    params = _ske_params(v)
    params.validate()
    if v["eve"] not in EVE_STRATEGIES:
        raise ConfigError(f"unknown Eve strategy {v['eve']!r}; choose from {', '.join(EVE_STRATEGIES)}")
    if not 0.0 <= v["noise"] < 0.5:
        raise ConfigError("noise must lie in [0, 0.5)")
    records = _map_trials(partial(ex.ske_trial, params, noise=v["noise"], eve=v["eve"], eve_bits=v["eve_bits"]),
                          v["seed"], v["trials"], jobs)
    for i, r in enumerate(records):
        r["trial"] = i
    summary = ex.ske_summary(params, records)
    summary["params"] = params.to_dict()
    ok = summary["key_mismatches"] == 0 and summary["key_length_formula_holds"]
    return summary, records, ok


def cmd_ot(v: dict, jobs: int):
    params = OtParams(nu=v["nu"], n=v["n"], eta=v["eta"], cap_factor=v["cap_factor"])
    params.validate()
    if v["bob_choice"] not in (0, 1):
        raise ConfigError("--bob-choice must be 0 or 1")
    if not 0 <= v["flips"] <= params.register_len:
        raise ConfigError("--flips must lie between 0 and 4·2^ν")
    records = _map_trials(partial(ex.ot_trial, params, choice=v["bob_choice"], flips=v["flips"],
                                  classicize=bool(v["classicize"])), v["seed"], v["trials"], jobs)
    for i, r in enumerate(records):
        r["trial"] = i
    summary = ex.ot_summary(params, records)
    summary["params"] = asdict(params)
    ok = summary["wrong_deliveries"] == 0 and (v["flips"] > 0 or summary["abort_rate"] == 0)
    return summary, records, ok


def _game_chunk(cfg: MemoryGameConfig, seed: int, bounds: tuple[int, int]):
    lo, hi = bounds
    return run_memory_game(replace(cfg, trials=hi - lo), seed, keep_records=True, first_trial=lo)


def cmd_memory_game(v: dict, jobs: int):
    cfg = MemoryGameConfig(nu=v["nu"], k=v["k"], variant=v["variant"], t=v["t"],
                           adversary=v["adversary"], trials=v["trials"])
    try:
        cfg.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    n_chunks = max(1, jobs * 4) if jobs > 1 else 1
    edges = np.linspace(0, cfg.trials, n_chunks + 1).astype(int)
    chunks = [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]
    func = partial(_game_chunk, cfg, v["seed"])
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(func, chunks))
    else:
        parts = [func(c) for c in chunks]
    stats = merge_stats(parts)
    summary = stats.summary()
    compliant = cfg.adversary in COMPLIANT_ADVERSARIES
    ok = not compliant or stats.budget_violations == 0
    return summary, stats.records, ok


def _count_trial(cfg: CountingConfig, seed):
    perm_seed = int(np.random.SeedSequence(seed).generate_state(1, np.uint64)[0])
    out = landauer_counting(replace(cfg, permutation_seed=perm_seed))
    return {"w_in": cfg.w_in, "w_out": cfg.w_out, **out}


def cmd_landauer_count(v: dict, jobs: int):
    grid = v.get("grid")
    if grid is not None:
        cfgs = [CountingConfig(grid["len_x"], grid["len_y"], w_in, w_in + off, v["permutation"])
                for w_in in grid["w_in"] for off in grid["w_out_offsets"]]
    else:
        cfgs = [CountingConfig(v["len_x"], v["len_y"], v["w_in"], v["w_out"], v["permutation"])]
    for cfg in cfgs:
        try:
            cfg.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    trials = v["trials"] if v["permutation"] == "random" else 1
    records = []
    for c_idx, cfg in enumerate(cfgs):
        rows = _map_trials(partial(_count_trial, cfg), v["seed"] + c_idx, trials, jobs)
        for i, r in enumerate(rows):
            r["trial"] = i
        records.extend(rows)
    violations = sum(r["violation"] for r in records)
    summary = {
        "configs": len(cfgs),
        "trials_per_config": trials,
        "permutation": v["permutation"],
        "violations": violations,
        "rows": [
            {"len_x": c.len_x, "len_y": c.len_y, "w_in": c.w_in, "w_out": c.w_out, "bound": c.bound,
             "max_count": max(r["count_S"] for r in records if (r["w_in"], r["w_out"]) == (c.w_in, c.w_out))}
            for c in cfgs
        ],
    }
    return summary, records, violations == 0


def _lhl_trial(eps: int | None, n_range, seed):
    epsilon = eps if eps is not None else (1, 2, 3)[seed[1] % 3]
    return ex.lhl_trial(seed, epsilon, n_range)


def cmd_lhl_check(v: dict, jobs: int):
    if not 1 <= v["n_min"] <= v["n_max"] <= 12:
        raise ConfigError("need 1 <= n_min <= n_max <= 12")
    if v["epsilon"] is not None and not 2 * v["epsilon"] + 1 <= v["n_max"]:
        raise ConfigError("epsilon too large for n_max: need 2ε + 1 ≤ n_max")
    records = _map_trials(partial(_lhl_trial, v["epsilon"], (v["n_min"], v["n_max"])),
                          v["seed"], v["trials"], jobs)
    violations = sum(not r["ok"] for r in records)
    summary = {"trials": len(records), "violations": violations,
               "max_delta_over_bound": max(r["delta"] / r["bound"] for r in records)}
    return summary, records, violations == 0


def cmd_universality_check(v: dict, jobs: int):
    n, m = v["n"], v["m"]
    if not (1 <= m <= n <= 8 and n >= 2):
        raise ConfigError("need 2 <= n <= 8 and 1 <= m <= n")
    records = _map_trials(partial(ex.universality_trial, n, m), v["seed"], v["trials"], jobs)
    failures = sum(not r["exact"] for r in records)
    summary = {"n": n, "m": m, "pairs": len(records), "expected_count": records[0]["expected"],
               "failures": failures}
    return summary, records, failures == 0


def cmd_reconcile_bench(v: dict, jobs: int):
    if not (0 <= v["p"] and v["p"] + v["delta_prime"] < 0.5):
        raise ConfigError("need 0 <= p and p + δ′ < 1/2")
    records = _map_trials(partial(ex.reconcile_trial, v["s"], v["p"], v["delta_prime"], v["eta"],
                                  max_candidates=v["max_candidates"]), v["seed"], v["trials"], jobs)
    decoded = [r for r in records if r["correct"] is not None]
    routes = {}
    for r in records:
        routes[r["route"]] = routes.get(r["route"], 0) + 1
    summary = {"trials": len(records), "routes": dict(sorted(routes.items())),
               "decoded": len(decoded), "wrong": sum(not r["correct"] for r in decoded),
               "w": records[0]["w"]}
    return summary, records, True


COMMANDS = {
    "ske": cmd_ske,
    "ot": cmd_ot,
    "memory-game": cmd_memory_game,
    "landauer-count": cmd_landauer_count,
    "lhl-check": cmd_lhl_check,
    "universality-check": cmd_universality_check,
    "reconcile-bench": cmd_reconcile_bench,
}


# output


def to_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def to_csv(records: list[dict]) -> str:
    buf = io.StringIO()
    fields = sorted({k for r in records for k in r})
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for r in records:
        writer.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in fields})
    return buf.getvalue()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        values = resolve(args)
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        summary, records, ok = COMMANDS[args.command](values, args.jobs)
    except (ConfigError, GameConfigError, UnknownPreset, ValueError) as exc:
        print(f"febcrypto {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    run = {"command": args.command, "seed": values["seed"], "trials": values["trials"],
           "summary": summary, "invariants_hold": ok}
    sys.stdout.write(to_json(run))
    if args.output is not None:
        text = to_json({**run, "records": records}) if args.format == "json" else to_csv(records)
        args.output.write_text(text)
    if not ok:
        print(f"febcrypto {args.command}: invariant violated", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
