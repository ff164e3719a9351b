"""Command-line front end.

    dmfsim verify --config exp.ini --out results/
    dmfsim simulate-pdmp --config exp.ini --set model.N=4096
    dmfsim simulate-limit --config exp.ini
    dmfsim couple --coupler dyadic-kmt --n 16384
    dmfsim rate-fit gaps.csv
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .config import ExperimentConfig, default_config, load_config, parse_config
from .coupling import k_tail_profile
from .environment import DisorderLaw
from .errors import DmfError
from .harness import _clean, fmt17, provenance_header, run_suites, write_reports, write_table
from .limit import simulate_annealed
from .metrics import rate_fit
from .pdmp import simulate_ensemble
from .rng import derive_key

OUT_ENV = "DMFSIM_OUT"


def _overrides(pairs: list[str]) -> dict[str, str]:
    out = {}
    for p in pairs:
        key, sep, value = p.partition("=")
        if not sep:
            raise DmfError(f"--set expects section.key=value, got {p!r}")
        out[key.strip().lower()] = value.strip()
    return out


def _config(args) -> ExperimentConfig:
    ov = _overrides(args.set or [])
    if args.seed is not None:
        ov["experiment.master_seed"] = str(args.seed)
    if args.threads is not None:
        ov["experiment.threads"] = str(args.threads)
    if args.config:
        return load_config(args.config, ov)
    return parse_config(default_config().serialize(), ov)


def _outdir(args) -> str:
    d = args.out or os.environ.get(OUT_ENV) or "dmfsim-out"
    os.makedirs(d, exist_ok=True)
    return d


def cmd_verify(args) -> int:
    cfg = _config(args)
    out = _outdir(args)
    reports = run_suites(cfg)
    payload = write_reports(reports, cfg, out)
    for r in reports:
        for v in r.verdicts:
            print(f"{'PASS' if v.passed else 'FAIL'}  {r.suite}/{v.name}  statistic={fmt17(v.statistic)}  [{v.tolerance}]")
        if r.invalid:
            print(f"INVALID  {r.suite}: " + "; ".join(r.notes))
    print(f"report: {os.path.join(out, 'report.json')}")
    return 0 if payload["passed"] else 1


def cmd_simulate_pdmp(args) -> int:
    cfg = _config(args)
    out = _outdir(args)
    m = cfg.model
    seed = derive_key(cfg.master_seed, cfg.N, 0, "pdmp")
    ens = simulate_ensemble(m, cfg.N, np.asarray(cfg.times), cfg.n_paths, seed, threads=cfg.threads)
    rows = [
        {"path": i, "status": int(ens.status[i]), "n_events": int(ens.n_events[i]),
         **{f"x_t{t:g}": float(ens.states[i, j]) for j, t in enumerate(cfg.times)}}
        for i in range(ens.states.shape[0])
    ]
    path = os.path.join(out, "pdmp_paths.csv")
    write_table(path, rows, provenance_header(cfg) + f"# N: {cfg.N}\n")
    print(f"{len(rows)} paths, {ens.n_aborted} aborted -> {path}")
    return 0 if ens.n_aborted == 0 else 1


def cmd_simulate_limit(args) -> int:
    cfg = _config(args)
    out = _outdir(args)
    seed = derive_key(cfg.master_seed, 0, 0, "limit")
    p = simulate_annealed(cfg.model, cfg.model.init_limit.location(cfg.N), cfg.dt, seed)
    rows = [{"t": float(t), "x": float(x)} for t, x in zip(p.grid, p.states)]
    path = os.path.join(out, "limit_path.csv")
    write_table(path, rows, provenance_header(cfg) + f"# w: {fmt17(p.w_used)}\n")
    print(f"limit path with w={fmt17(p.w_used)} -> {path}")
    return 0


def cmd_couple(args) -> int:
    cfg = _config(args)
    out = _outdir(args)
    kind = args.coupler or cfg.coupler
    law = DisorderLaw.gaussian(cfg.model.law.sigma) if kind == "exact-gaussian" else cfg.model.law
    reps = args.replicates or cfg.coupling_replicates
    seed = derive_key(cfg.master_seed, args.n, 0, "coupling")
    prof = k_tail_profile(kind, args.n, reps, seed, law=law)
    header = provenance_header(cfg) + f"# coupler: {kind}\n# N: {args.n}\n"
    csv_path = os.path.join(out, f"k_tail_{kind}_N{args.n}.csv")
    write_table(csv_path, [{"x": float(x), "tail_freq": float(f)} for x, f in zip(prof.x_grid, prof.tail_freq)], header)
    fit_path = os.path.join(out, f"k_tail_{kind}_N{args.n}_fit.json")
    with open(fit_path, "w", encoding="utf-8") as fh:
        json.dump(_clean(prof.fit_record()), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(_clean(prof.fit_record()), sort_keys=True))
    return 0


def cmd_rate_fit(args) -> int:
    try:
        with open(args.gaps, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    except OSError as e:
        raise DmfError(f"cannot read {args.gaps}: {e.strerror}") from None
    if not rows or not {"N", "gap"} <= set(rows[0]):
        raise DmfError(f"{args.gaps}: expected columns N,gap[,se,kr_init]")
    n = [float(r["N"]) for r in rows]
    gaps = [float(r["gap"]) for r in rows]
    ses = [float(r["se"]) for r in rows] if "se" in rows[0] else None
    kr = [float(r["kr_init"]) for r in rows] if "kr_init" in rows[0] else None
    fit = rate_fit(n, gaps, ses, kr)
    rec = _clean(fit.record())
    out = args.out or os.environ.get(OUT_ENV)
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "rate_fit.json"), "w", encoding="utf-8") as fh:
            json.dump(rec, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(json.dumps(rec, sort_keys=True))
    print(f"loglog slope: {fmt17(fit.loglog_slope)}")
    return 1 if fit.degenerate else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dmfsim", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"dmfsim {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="experiment config file (INI sections)")
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./dmfsim-out)")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config key")
        p.add_argument("--seed", type=int, help="override experiment.master_seed")
        p.add_argument("--threads", type=int, help="worker threads (never changes results)")
        return p

    common(sub.add_parser("verify", help="run the configured suites and write a report")).set_defaults(fn=cmd_verify)
    common(sub.add_parser("simulate-pdmp", help="simulate particle paths at the config times")).set_defaults(
        fn=cmd_simulate_pdmp)
    common(sub.add_parser("simulate-limit", help="simulate one annealed limit path")).set_defaults(
        fn=cmd_simulate_limit)
    p = common(sub.add_parser("couple", help="K-tail profile for one coupler"))
    p.add_argument("--coupler", choices=("exact-gaussian", "naive-quantile", "dyadic-kmt"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--replicates", type=int)
    p.set_defaults(fn=cmd_couple)
    p = sub.add_parser("rate-fit", help="fit gap(N) from a gaps CSV")
    p.add_argument("gaps")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_rate_fit)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except DmfError as e:
        print(f"dmfsim: error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"dmfsim: error: {e.filename}: {e.strerror}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
