"""Command-line front end.

    relayqkd qber      --scheme direct --atten-db 37.5
    relayqkd sweep     --scheme both --from-db 0 --to-db 80 --step-db 0.5 --out curve.csv
    relayqkd threshold --scheme both --target 0.20
    relayqkd mc        --scheme relay --atten-db 3 --pulses 10000000 --seed 7

Exit status: 0 success, 1 usage/config error, 2 numeric error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, TextIO

from . import model, sweep
from .errors import EmptySampleError, NumericError, ParamError
from .model import LinkParams, QberPoint, Scheme
from .simulate import McEstimate, mc_estimate

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

# config key -> LinkParams field
CONFIG_KEYS = {
    "eta": "detector_efficiency",
    "dark_count": "dark_count_prob",
    "visibility": "visibility",
    "eta_p": "polarizer_transmission",
    "pair_rate": "pair_rate_hz",
    "rep_rate": "rep_rate_hz",
    "alpha": "alpha_db_per_km",
}
_FIELD_TO_KEY = {v: k for k, v in CONFIG_KEYS.items()}

CSV_COLUMNS = ["scheme", "attenuation_db", "transmission", "distance_km", "qber", "p_sift", "sift_rate_hz"]
MC_COLUMNS = ["qber_mc", "mc_stderr", "mc_pulses"]


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class Config:
    """Optional override per LinkParams field; ``None`` keeps the default."""

    detector_efficiency: Optional[float] = None
    dark_count_prob: Optional[float] = None
    visibility: Optional[float] = None
    polarizer_transmission: Optional[float] = None
    pair_rate_hz: Optional[float] = None
    rep_rate_hz: Optional[float] = None
    alpha_db_per_km: Optional[float] = None

    def to_params(self) -> LinkParams:
        overrides = {k: v for k, v in dataclasses.asdict(self).items() if v is not None}
        try:
            return LinkParams(**overrides)
        except ParamError as exc:
            raise UsageError(f"invalid value for '{_FIELD_TO_KEY[exc.field]}': {exc}") from None


def _number(key: str, text: str) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise UsageError(f"malformed number for '{key}': {text!r}") from None


def parse_config(file_bytes: Optional[bytes], flags: Optional[dict] = None) -> Config:
    """Merge ``key = value`` file contents and flag overrides.

    Precedence is flags > file > defaults. Unknown keys, malformed numbers and
    out-of-range values raise :class:`UsageError` naming the key.
    """
    values: dict[str, float] = {}
    if file_bytes:
        try:
            text = file_bytes.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise UsageError(f"config file is not UTF-8: {exc}") from None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"config line {lineno}: expected 'key = value', got {raw.strip()!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise UsageError(f"unknown config key '{key}' (line {lineno})")
            values[key] = _number(key, val)

    for key, val in (flags or {}).items():
        if val is None:
            continue
        if key not in CONFIG_KEYS:
            raise UsageError(f"unknown config key '{key}'")
        values[key] = val if isinstance(val, float) else _number(key, val)

    cfg = Config(**{CONFIG_KEYS[k]: v for k, v in values.items()})
    cfg.to_params()  # validate now so errors name the offending key
    return cfg


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, Scheme):
        return x.value
    if isinstance(x, int) and not isinstance(x, bool):
        return str(x)
    return f"{float(x):.9g}"


def _print_kv(pairs: Iterable[tuple[str, object]], out: TextIO) -> None:
    for k, v in pairs:
        out.write(f"{k}: {fmt(v)}\n")


def point_fields(pt: QberPoint) -> list[tuple[str, object]]:
    return [(c, getattr(pt, c)) for c in CSV_COLUMNS]


def write_csv(rows: list[QberPoint], out: TextIO, include_mc: bool) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS + (MC_COLUMNS if include_mc else []))
    for pt in rows:
        record = [fmt(getattr(pt, c)) for c in CSV_COLUMNS]
        if include_mc:
            mc = pt.mc
            record += ["", "", ""] if mc is None else [fmt(mc.qber_hat), fmt(mc.stderr), fmt(mc.n_pulses)]
        writer.writerow(record)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("link parameters (override config file)")
    g.add_argument("--config", type=Path, help="file of 'key = value' lines")
    g.add_argument("--eta", help="detector efficiency")
    g.add_argument("--dark-count", help="dark-count probability per detector per window")
    g.add_argument("--visibility", help="single-photon visibility")
    g.add_argument("--eta-p", help="Bell-analyzer polarizer transmission")
    g.add_argument("--pair-rate", help="two-fold coincidence rate [1/s]")
    g.add_argument("--rep-rate", help="pump repetition rate [1/s]")
    g.add_argument("--alpha", help="fiber loss [dB/km]")

    def channel(p, required=True):
        grp = p.add_mutually_exclusive_group(required=required)
        grp.add_argument("--atten-db", type=float, help="total channel attenuation [dB]")
        grp.add_argument("--plate-transmission", type=float,
                         help="per-plate transmission; composed into the total attenuation")
        p.add_argument("--include-source", action="store_true",
                       help="with --plate-transmission, fold in the source-equivalent transmission")

    parser = _Parser(prog="relayqkd", description="Direct vs relay-assisted entanglement BB84 QBER model.")
    sub = parser.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("qber", parents=[common], help="QBER at one attenuation")
    p.add_argument("--scheme", required=True, choices=["direct", "relay"])
    channel(p)

    p = sub.add_parser("sweep", parents=[common], help="QBER curve as CSV")
    p.add_argument("--scheme", default="both", choices=["direct", "relay", "both"])
    p.add_argument("--from-db", type=float, default=0.0)
    p.add_argument("--to-db", type=float, default=80.0)
    p.add_argument("--step-db", type=float, default=0.5)
    p.add_argument("--mc-pulses", type=int, help="attach Monte Carlo columns with this many pulses per point")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shards", type=int, default=1)
    p.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")

    p = sub.add_parser("threshold", parents=[common], help="attenuation where QBER hits a bound")
    p.add_argument("--scheme", default="both", choices=["direct", "relay", "both"])
    p.add_argument("--target", type=float, default=sweep.TWO_WAY_BOUND)

    p = sub.add_parser("mc", parents=[common], help="Monte Carlo QBER estimate")
    p.add_argument("--scheme", required=True, choices=["direct", "relay"])
    channel(p)
    p.add_argument("--pulses", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shards", type=int, default=1)
    return parser


def _schemes(name: str) -> list[Scheme]:
    return [Scheme.DIRECT, Scheme.RELAY] if name == "both" else [Scheme.parse(name)]


def _load_params(args) -> LinkParams:
    file_bytes = None
    if args.config is not None:
        try:
            file_bytes = args.config.read_bytes()
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
    flags = {key: getattr(args, key) for key in CONFIG_KEYS}
    return parse_config(file_bytes, flags).to_params()


def _channel(args, scheme: Scheme, params: LinkParams) -> tuple[float, list[tuple[str, object]]]:
    """Total attenuation in dB plus any composition details to report."""
    if args.atten_db is not None:
        if args.include_source:
            raise UsageError("--include-source requires --plate-transmission")
        if not (math.isfinite(args.atten_db) and args.atten_db >= 0):
            raise UsageError("--atten-db must be a non-negative number")
        return args.atten_db, []
    t_s = model.source_equivalent_transmission(params) if args.include_source else 1.0
    try:
        t = model.total_transmission(scheme, args.plate_transmission, t_s)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    details = [("plate_transmission", args.plate_transmission)]
    if args.include_source:
        details.append(("source_transmission", t_s))
    return sweep.db_from_transmission(t), details


def _cmd_qber(args, params, out):
    scheme = Scheme.parse(args.scheme)
    a, details = _channel(args, scheme, params)
    pt = sweep.qber_point(scheme, a, params)
    _print_kv(details + point_fields(pt), out)
    return EXIT_OK


def _cmd_sweep(args, params, out):
    try:
        spec = sweep.SweepSpec(
            schemes=tuple(_schemes(args.scheme)),
            from_db=args.from_db,
            to_db=args.to_db,
            step_db=args.step_db,
            include_mc=args.mc_pulses is not None,
            mc_pulses=args.mc_pulses if args.mc_pulses is not None else 1,
            seed=args.seed,
            shard_count=args.shards,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = sweep.sweep_curve(spec, params)
    if args.out == "-":
        write_csv(rows, out, spec.include_mc)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_csv(rows, fh, spec.include_mc)
    return EXIT_OK


def _cmd_threshold(args, params, out):
    if not 0 < args.target < 0.5:
        raise UsageError("--target must lie in (0, 0.5)")
    for i, scheme in enumerate(_schemes(args.scheme)):
        res = sweep.find_threshold(scheme, args.target, params)
        if i:
            out.write("\n")
        _print_kv([(f.name, getattr(res, f.name)) for f in dataclasses.fields(res)], out)
    return EXIT_OK


def _cmd_mc(args, params, out):
    scheme = Scheme.parse(args.scheme)
    a, details = _channel(args, scheme, params)
    t = sweep.transmission_from_db(a)
    if not 0 <= args.seed < 2**64:
        raise UsageError("--seed must be an unsigned 64-bit integer")
    if args.shards < 1:
        raise UsageError("--shards must be at least 1")
    if args.pulses < 1:
        raise EmptySampleError("--pulses must be at least 1")
    est: McEstimate = mc_estimate(scheme, t, params, args.pulses, args.seed, args.shards)
    _print_kv(
        details
        + [("scheme", scheme), ("attenuation_db", a), ("transmission", t)]
        + [(f.name, getattr(est, f.name)) for f in dataclasses.fields(est)]
        + [("qber_model", model.qber(scheme, t, params))],
        out,
    )
    if est.qber_hat is None:
        raise NumericError("no sifted events; QBER estimate undefined")
    return EXIT_OK


_COMMANDS = {"qber": _cmd_qber, "sweep": _cmd_sweep, "threshold": _cmd_threshold, "mc": _cmd_mc}


def run(argv: Optional[list[str]] = None, out: Optional[TextIO] = None, err: Optional[TextIO] = None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    try:
        args = _build_parser().parse_args(argv)
        params = _load_params(args)
        return _COMMANDS[args.cmd](args, params, out)
    except (UsageError, ValueError) as exc:
        err.write(f"relayqkd: usage error: {exc}\n")
        return EXIT_USAGE
    except NumericError as exc:
        err.write(f"relayqkd: {exc}\n")
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
