"""Command-line entry point: ``errfloor {info,search,boundary,simulate,report}``.

Settings come from an optional flat ``key = value`` config file; command-line
flags override it.  Exit codes: 0 success, 1 usage/config error, 2 data
error, 3 runtime diagnostic.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .boundary import (BoundaryProbe, q_function, rank_catalog, read_entry_table, select_shift_points,
                       write_class_table, write_entry_table)
from .code import AlistError, load_alist
from .decoder import ChannelModel, DecoderConfig
from .sampling import ISDensity, NoiseSource, adapt_density, is_estimate, mc_estimate
from .search import (SearchParams, TsCatalog, closed_form_decodings, read_catalog, run_search, search_cost,
                     search_roots, write_catalog)

log = logging.getLogger("errfloor")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class RuntimeDiagnostic(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# keys accepted in config files, with their types
CONFIG_KEYS = {
    "epsilon1": float, "epsilon2": float, "gamma": str, "ebno": float, "vnum": int, "depth": int,
    "degree_cutoff": int, "algorithm": str, "iters": int, "clamp": float,
    "lmin": float, "lmax": float, "p": int, "probe_ebno": float,
    "threshold": float, "cap": int, "shift": float, "psi": float,
    "snr": str, "trials": int, "seed": int, "workers": int, "batch": int,
}

DEFAULTS = {
    "epsilon1": 3.0, "epsilon2": None, "gamma": "0.6", "ebno": 6.0, "vnum": None, "depth": 1,
    "degree_cutoff": 2, "algorithm": "bp", "iters": 50, "clamp": 30.0,
    "lmin": 1.0, "lmax": 3.5, "p": 10, "probe_ebno": None,
    "threshold": None, "cap": None, "shift": 1.0, "psi": None,
    "snr": None, "trials": 10000, "seed": 0, "workers": 1, "batch": 512,
}


def read_config(path) -> dict:
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            cfg[key] = None if val.lower() in ("", "none") else CONFIG_KEYS[key](val)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {val!r}") from None
    return cfg


def parse_gamma(text: str):
    text = str(text)
    if ":" in text:
        return {int(k): float(v) for k, v in (item.split(":") for item in text.split(","))}
    return float(text)


@dataclass
class RunConfig:
    code_path: Path
    values: dict = field(default_factory=dict)
    out: Path = Path(".")

    def __getitem__(self, key):
        return self.values[key]

    @property
    def decoder(self) -> DecoderConfig:
        return DecoderConfig(self["algorithm"], self["iters"], self["clamp"])

    @property
    def search(self) -> SearchParams:
        return SearchParams(self["epsilon1"], self["epsilon2"], parse_gamma(self["gamma"]), self["ebno"],
                            self["vnum"], self["depth"], self["degree_cutoff"])

    @property
    def probe(self) -> BoundaryProbe:
        return BoundaryProbe(self["lmin"], self["lmax"], self["p"])

    @property
    def snrs(self) -> list[float]:
        if not self["snr"]:
            raise UsageError("simulate needs a non-empty --snr list")
        return [float(s) for s in str(self["snr"]).split(",") if s.strip()]


def build_config(args) -> RunConfig:
    values = dict(DEFAULTS)
    if getattr(args, "config", None):
        if not Path(args.config).exists():
            raise UsageError(f"config file not found: {args.config}")
        values.update(read_config(args.config))
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    try:
        return RunConfig(Path(args.code), values, Path(getattr(args, "out", ".") or "."))
    except ValueError as e:
        raise UsageError(str(e)) from None


def load_code(path):
    path = Path(path)
    if not path.exists():
        raise DataError(f"code file not found: {path}")
    try:
        return load_alist(path)
    except AlistError as e:
        raise DataError(f"{path}: {e}") from None


# --- commands ----------------------------------------------------------------

def cmd_info(args) -> int:
    code = load_code(args.code)
    print(f"code: {code.identity}")
    print(f"n={code.n} m={code.m} k={code.k} rate={code.rate:.4f}")
    print(f"{code.describe()}")
    print(f"variable degrees: {code.dv_profile}")
    print(f"check degrees: {code.dc_profile}")
    g = code.girth
    print(f"girth: {g if g else 'acyclic'}")
    if g == 4:
        print("warning: graph has 4-cycles; local trees contain repeated nodes")
    return EXIT_OK


def _summary_table(cat: TsCatalog, limit: int = 20) -> str:
    rows = cat.class_summary()
    out = ["error_class  multiplicity  ts_elem"]
    out += [f"({a},{b}){'':<{11 - len(f'({a},{b})')}}{m:>12}  {el:>7}" for (a, b), m, el in rows[:limit]]
    return "\n".join(out)


def cmd_search(args) -> int:
    rc = build_config(args)
    code = load_code(rc.code_path)
    try:
        params = rc.search
    except ValueError as e:
        raise UsageError(str(e)) from None
    predicted = search_cost(code, params)
    line = f"{code.describe()}; predicted decodings: {predicted}"
    dcs = set(code.dc_profile)
    if len(dcs) == 1 and params.tree_depth == 1:
        roots = search_roots(code, params)
        counts: dict[int, int] = {}
        for v in roots:
            counts[int(code.var_degrees[v])] = counts.get(int(code.var_degrees[v]), 0) + 1
        v_num = params.v_num
        if v_num is None and len(counts) == 1:
            v_num = next(iter(counts))
        if v_num is not None:
            line += f" (closed form {closed_form_decodings(counts, v_num, dcs.pop())})"
    print(line)
    if args.dry_run:
        return EXIT_OK
    cat = run_search(code, params, rc.decoder, workers=rc["workers"], batch_size=rc["batch"])
    rc.out.mkdir(parents=True, exist_ok=True)
    write_catalog(cat, rc.out / "catalog.txt", rc.out / "catalog.csv")
    print(f"decodings: {cat.decodings} (predicted {predicted}); mean iterations {cat.mean_iterations:.2f}; "
          f"{len(cat)} distinct events; {cat.wall_time:.1f} s")
    if not len(cat):
        print("no events found; increase epsilon1 (or lower gamma)")
    else:
        print(_summary_table(cat))
    return EXIT_OK


def cmd_boundary(args) -> int:
    rc = build_config(args)
    code = load_code(rc.code_path)
    try:
        cat = read_catalog(args.catalog, code)
    except (OSError, ValueError) as e:
        raise DataError(str(e)) from None
    if not len(cat):
        raise DataError("catalog is empty")
    probe_snr = rc["probe_ebno"] if rc["probe_ebno"] is not None else rc["ebno"]
    channel = ChannelModel(probe_snr, code.rate)
    rows, entries = rank_catalog(cat, code, rc.probe, rc.decoder, channel)
    rc.out.mkdir(parents=True, exist_ok=True)
    write_class_table(rows, rc.out / "classes.csv", probe_snr)
    write_entry_table(entries, rc.out / "entries.csv", probe_snr)
    print(f"probe Eb/No = {probe_snr} dB, resolution {rc.probe.resolution:.5f}")
    print("error_class  multiplicity  d2_eps(mean)  d2_eps(min)  ts_elem")
    for r in rows:
        print(f"{r.label:<12} {r.multiplicity:>12}  {r.mean_d_e2:>12.2f}  {r.min_d_e2:>11.2f}  {r.elementary:>7}")
    unb = sum(r.unbracketed for r in rows)
    if unb:
        print(f"{unb} entries were not bracketed by [lmin, lmax] and are excluded from class means")
    return EXIT_OK


RESULT_FIELDS = ["code", "rate", "source", "eb_no_db", "L", "hits", "intended_hits", "p_f_hat", "p_b_hat",
                 "v_hat", "ci_lo", "ci_hi", "new_events", "overflow_flags"]


V_HAT_CAVEAT = "v_hat is one-sided: a large value flags a poor estimate, a small value does not prove accuracy"


def _write_results(records: list[dict], timings: dict, out: Path, mode: str) -> None:
    with open(out / f"results_{mode}.csv", "w", newline="") as f:
        if mode == "is":
            f.write(f"# {V_HAT_CAVEAT}\n")
        f.write("# wall_time=" + ",".join(f"{k}:{v:.2f}" for k, v in timings.items()) + "\n")
        w = csv.DictWriter(f, RESULT_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(records)
    with open(out / f"results_{mode}.jsonl", "w") as f:
        head = {"header": True, "wall_time": timings}
        if mode == "is":
            head["v_hat_note"] = V_HAT_CAVEAT
        f.write(json.dumps(head) + "\n")
        for r in records:
            f.write(json.dumps(r) + "\n")


def cmd_simulate(args) -> int:
    rc = build_config(args)
    code = load_code(rc.code_path)
    cfg = rc.decoder
    noise = NoiseSource(rc["seed"])
    rc.out.mkdir(parents=True, exist_ok=True)
    records, timings = [], {}
    if args.mode == "mc":
        for snr in rc.snrs:
            ch = ChannelModel(snr, code.rate)
            est = mc_estimate(code, ch, rc["trials"], cfg, noise, rc["batch"])
            lo, hi = est.interval()
            records.append(dict(code=code.identity, rate=code.rate, source="mc", eb_no_db=snr, L=est.trials,
                                hits=est.errors, intended_hits="", p_f_hat=est.p_f_hat, p_b_hat=est.p_b_hat,
                                v_hat=est.p_f_hat, ci_lo=lo, ci_hi=hi, new_events="", overflow_flags=0))
            timings[snr] = est.wall_time
            print(f"Eb/No {snr} dB: {est.errors}/{est.trials} frame errors, P_f={est.p_f_hat:.3e} "
                  f"[{lo:.3e}, {hi:.3e}], P_b={est.p_b_hat:.3e}")
        _write_results(records, timings, rc.out, "mc")
        return EXIT_OK

    if not args.ranked:
        raise UsageError("--mode is requires --ranked entries.csv from the boundary command")
    try:
        ranked = read_entry_table(args.ranked, code)
    except (OSError, ValueError) as e:
        raise DataError(str(e)) from None
    try:
        shift_points = select_shift_points(ranked, rc["threshold"], rc["cap"])
    except ValueError as e:
        raise UsageError(str(e)) from None
    print(f"{len(shift_points)} shift points (of {len(ranked)} ranked events); {V_HAT_CAVEAT}")
    overflow_total = 0
    probe_cache: dict = {}
    for snr in rc.snrs:
        ch = ChannelModel(snr, code.rate)
        density = ISDensity([e.pattern for e in shift_points], ch.sigma2, rc["shift"], rc["psi"])
        est = is_estimate(code, ch, density, rc["trials"], cfg, noise, rc["batch"])
        if args.adapt and est.new_events:
            from .boundary import probe_boundary

            limit = rc["threshold"] if rc["threshold"] is not None else max(e.d_e2 for e in shift_points)
            probe_ch = ChannelModel(rc["probe_ebno"] if rc["probe_ebno"] is not None else rc["ebno"], code.rate)

            def d2(p):
                if p.support not in probe_cache:
                    probe_cache[p.support] = probe_boundary(code, p, rc.probe, cfg, probe_ch).d_e2
                return probe_cache[p.support]

            density2, _ = adapt_density(est, density, d2, limit)
            if density2.M > density.M:
                print(f"Eb/No {snr} dB: adapted M {density.M} -> {density2.M}; restarting")
                est = is_estimate(code, ch, density2, rc["trials"], cfg, noise, rc["batch"])
        lo, hi = est.interval()
        overflow_total += est.overflow_flags
        records.append(dict(code=code.identity, rate=code.rate, source="is", eb_no_db=snr, L=est.trials,
                            hits=est.hits, intended_hits=est.intended_hits, p_f_hat=est.p_f_hat,
                            p_b_hat=est.p_b_hat, v_hat=est.v_hat, ci_lo=lo, ci_hi=hi,
                            new_events=len(est.new_events), overflow_flags=est.overflow_flags))
        timings[snr] = est.wall_time
        _write_new_events(est, code, rc.out / f"new_events_{snr:g}dB.txt", snr)
        print(f"Eb/No {snr} dB: L={est.trials} hits={est.hits} intended={est.intended_hits} "
              f"P_f={est.p_f_hat:.3e} P_b={est.p_b_hat:.3e} V_hat={est.v_hat:.3e} new={len(est.new_events)}")
    _write_results(records, timings, rc.out, "is")
    if overflow_total:
        print(f"warning: {overflow_total} hits had every mixture term below exp() range before factoring",
              file=sys.stderr)
        if all(r["hits"] and r["overflow_flags"] == r["hits"] for r in records):
            raise RuntimeDiagnostic("every weight overflowed")
    return EXIT_OK


def _write_new_events(est, code, path: Path, snr: float) -> None:
    from .code import classify_pattern

    cat = TsCatalog(code.n)
    for sup, rec in sorted(est.new_events.items()):
        cat.add(rec.pattern, classify_pattern(code, rec.pattern), -1, rec.count)
    cat.meta = {"source": f"is_new_events@{snr}dB"}
    write_catalog(cat, path)


def cmd_report(args) -> int:
    d = Path(args.results)
    files = sorted(d.glob("results_*.csv")) if d.is_dir() else []
    if not files:
        raise DataError(f"no results_*.csv files in {d}")
    rows = []
    for f in files:
        with open(f) as fh:
            rows += list(csv.DictReader(line for line in fh if not line.startswith("#")))
    codes = {r["code"] for r in rows}
    if len(codes) != 1:
        raise DataError(f"results mix different codes: {sorted(codes)}")
    proxy = None
    if args.proxy:
        a, w = args.proxy.split(",")
        proxy = (float(a), float(w))
    elif (d / "classes.csv").exists():
        with open(d / "classes.csv") as fh:
            top = next(csv.DictReader(line for line in fh if not line.startswith("#")), None)
        if top:
            proxy = (float(top["multiplicity"]), float(top["min_d2_eps"]))
    out = Path(args.output) if args.output else d / "curve.csv"
    fields = ["source", "eb_no_db", "p_f_hat", "p_b_hat", "ci_lo", "ci_hi", "L", "hits", "q_proxy"]
    rows.sort(key=lambda r: (float(r["eb_no_db"]), r["source"]))
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fields, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            q = ""
            if proxy:
                es_no = float(r["rate"]) * 10 ** (float(r["eb_no_db"]) / 10)
                q = proxy[0] * float(q_function(math.sqrt(2 * proxy[1] * es_no)))
            w.writerow({**r, "q_proxy": q})
    print(f"wrote {out} ({len(rows)} rows)")
    return EXIT_OK


def _add_common(p, with_search=False, with_probe=False, with_sim=False):
    p.add_argument("code", help="alist file")
    p.add_argument("--config", help="key = value settings file")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--algorithm", choices=["bp", "min-sum"])
    p.add_argument("--iters", type=int)
    p.add_argument("--clamp", type=float)
    p.add_argument("--ebno", type=float, help="search / probe Eb/No in dB")
    p.add_argument("--workers", type=int)
    p.add_argument("--batch", type=int)
    if with_search:
        p.add_argument("--epsilon1", type=float)
        p.add_argument("--epsilon2", type=float)
        p.add_argument("--gamma", help="scalar, or degree:gamma pairs, e.g. 2:0.3,3:0.3")
        p.add_argument("--vnum", type=int)
        p.add_argument("--depth", type=int, choices=[1, 2])
        p.add_argument("--degree-cutoff", dest="degree_cutoff", type=int)
    if with_probe:
        p.add_argument("--lmin", type=float)
        p.add_argument("--lmax", type=float)
        p.add_argument("--p", type=int)
        p.add_argument("--probe-ebno", dest="probe_ebno", type=float)
    if with_sim:
        p.add_argument("--snr", help="comma-separated Eb/No list in dB")
        p.add_argument("--trials", type=int, help="MC trials, or IS trials per shift point")
        p.add_argument("--seed", type=int)
        p.add_argument("--threshold", type=float, help="keep events with d2 below this")
        p.add_argument("--cap", type=int, help="keep at most this many nearest events")
        p.add_argument("--shift", type=float)
        p.add_argument("--psi", type=float)


def make_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="errfloor", description="LDPC error-floor analysis")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("info", help="code structure summary")
    p.add_argument("code")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("search", help="error-impulse trapping-set search")
    _add_common(p, with_search=True)
    p.add_argument("--dry-run", action="store_true", help="print the predicted decoding count and stop")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("boundary", help="rank catalogued events by distance to the error boundary")
    _add_common(p, with_probe=True)
    p.add_argument("--catalog", required=True)
    p.set_defaults(func=cmd_boundary)

    p = sub.add_parser("simulate", help="Monte Carlo or importance-sampling error rates")
    _add_common(p, with_probe=True, with_sim=True)
    p.add_argument("--mode", choices=["mc", "is"], required=True)
    p.add_argument("--ranked", help="entries.csv written by the boundary command")
    p.add_argument("--adapt", action="store_true", help="add close new events as centers and rerun once")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="merge result files into one curve file")
    p.add_argument("results", help="directory with results_*.csv")
    p.add_argument("--output")
    p.add_argument("--proxy", help="A,w: add an A*Q(sqrt(2 w Es/No)) column")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except RuntimeDiagnostic as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
