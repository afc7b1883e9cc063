"""Command-line front end: ``qstego <verb> [options]``.

Exit status is 0 on success, 2 for bad configuration and 3 when the key runs out.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import (
    VERBS,
    ConfigError,
    ExperimentConfig,
    Table,
    p1_key_bits,
    p2_key_bits,
    p2_params,
    run_eve,
    run_kcr_curve,
    run_rate_table,
    run_security_sweep,
    run_simulation_p1,
    run_simulation_p2,
)
from .keysource import KeyExhaustedError, KeyStream, subset_bits
from .protocol2 import DecodeFailure, SyndromeBlock, decode_p2, encode_p2

EXIT_CONFIG = 2
EXIT_KEY = 3

# CLI flag -> config field
_OVERRIDES = {
    "p": None,
    "delta_p": "delta_p",
    "N": "N",
    "delta": "delta",
    "eps": "eps",
    "trials": "trials",
    "blocks": "blocks",
    "seed": "seed",
    "p_physical": "p_physical",
    "tail": "tail",
    "window": "window",
}


def _common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", type=Path, help="JSON file with experiment settings")
    sub.add_argument("--out", type=Path, help="output file (default: stdout)")
    sub.add_argument("--seed", type=int, help="seed for simulation randomness and the non-secret test key")
    sub.add_argument("--key-file", type=Path, help="hex-encoded shared key")
    sub.add_argument("--trials", type=int)
    sub.add_argument("--threads", type=int, default=1, help="worker processes (does not change results)")
    sub.add_argument("--figure", type=Path, help="also render a figure (kcr, rates, security, eve)")
    sub.add_argument("--p", type=float, help="channel error rate")
    sub.add_argument("--delta-p", type=float)
    sub.add_argument("--N", type=int)
    sub.add_argument("--delta", type=float)
    sub.add_argument("--eps", type=float)
    sub.add_argument("--blocks", type=int)
    sub.add_argument("--channel", choices=("bsc", "depolarizing"))
    sub.add_argument("--p-physical", type=float)
    sub.add_argument("--tail", type=float, help="largest allowed P(Q < M) when choosing M (default 1e-4)")
    sub.add_argument("--no-tail", action="store_true", help="take M from --delta instead of the tail rule")
    sub.add_argument("--window", choices=("probability", "relative"))
    sub.add_argument("--inner-code", action="store_true", help="protect the payload with the 7-qubit code")
    sub.add_argument("--noisy", action="store_true", help="simulate-p2: weight-M codebook over a BSC")
    sub.add_argument("--N-grid", type=lambda s: [int(v) for v in s.split(",")])
    sub.add_argument("--p-grid", type=lambda s: [float(v) for v in s.split(",")])
    sub.add_argument("--delta-p-grid", type=lambda s: [float(v) for v in s.split(",")])
    sub.add_argument("--trace", type=Path, help="simulate-p1: JSON-lines block trace")
    sub.add_argument("--reveal", action="store_true", help="include hidden fields in the trace (debug only)")
    sub.add_argument("--in", dest="infile", type=Path, help="p2-encode/p2-decode input file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qstego", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qstego {__version__}")
    subs = parser.add_subparsers(dest="verb", required=True)
    helps = {
        "kcr": "key consumption rate versus p",
        "rates": "stego rate table",
        "security": "diamond norms and distinguishing ceilings",
        "simulate-p1": "mixed-slot hiding, end to end",
        "simulate-p2": "typical-error hiding, end to end (or --noisy codebook)",
        "eve": "likelihood-ratio monitor versus the ceiling",
        "p2-encode": "hide a message file as a syndrome list",
        "p2-decode": "recover a message file from a syndrome list",
    }
    for verb in VERBS:
        _common(subs.add_parser(verb, help=helps[verb]))
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    doc: dict = {}
    if args.config is not None:
        try:
            doc = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
    doc["verb"] = args.verb
    for flag, key in _OVERRIDES.items():
        v = getattr(args, flag)
        if v is not None and key is not None:
            doc[key] = v
    if args.p is not None or args.channel is not None:
        ch = dict(doc.get("channel", {"kind": "depolarizing", "p": 0.1}))
        if args.channel is not None:
            ch["kind"] = args.channel
        if args.p is not None:
            ch["p"] = args.p
        doc["channel"] = ch
    for flag in ("N_grid", "p_grid", "delta_p_grid"):
        if getattr(args, flag) is not None:
            doc[flag] = getattr(args, flag)
    if args.no_tail:
        doc["tail"] = None
    if args.inner_code:
        doc["inner_code"] = True
    if args.noisy:
        doc["noisy"] = True
    return ExperimentConfig.from_dict(doc)


def _streams(cfg: ExperimentConfig, args, key_bits: int) -> tuple[KeyStream, np.random.Generator]:
    rng_seed, key_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    rng = np.random.default_rng(rng_seed)
    if args.key_file is not None:
        try:
            key = KeyStream.from_file(args.key_file)
        except OSError as exc:
            raise ConfigError(f"cannot read key file: {exc.strerror}") from None
        key.label = "key-file"
    else:
        print(
            "WARNING: NON-SECRET seeded test key in use. Anyone with the seed can read the hidden data.",
            file=sys.stderr,
        )
        key = KeyStream.from_seed(int(key_seed.generate_state(1, np.uint64)[0]), key_bits)
    return key, rng


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _report(table: Table) -> None:
    for k, v in table.summary.items():
        print(f"{k}: {v}", file=sys.stderr)


def _run_table(cfg: ExperimentConfig, args) -> tuple[Table, str | None]:
    if cfg.verb == "kcr":
        return run_kcr_curve(cfg), None
    if cfg.verb == "rates":
        return run_rate_table(cfg), None
    if cfg.verb == "security":
        return run_security_sweep(cfg), None
    if cfg.verb == "eve":
        return run_eve(cfg, threads=max(1, args.threads)), None
    if cfg.verb == "simulate-p1":
        key, rng = _streams(cfg, args, p1_key_bits(cfg))
        table = run_simulation_p1(cfg, key, rng, reveal=args.reveal)
        if args.trace is not None:
            args.trace.write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in table.trace))
        return table, key.label
    if cfg.verb == "simulate-p2":
        if cfg.noisy:
            key_bits = sum(3 * subset_bits(n, n // 2) for n in (cfg.N_grid or [cfg.N])) + 1024
        else:
            key_bits = p2_key_bits(p2_params(cfg), cfg.trials)
        key, rng = _streams(cfg, args, key_bits)
        return run_simulation_p2(cfg, key, rng), key.label
    raise AssertionError(cfg.verb)


def _p2_encode(cfg: ExperimentConfig, args) -> None:
    if args.infile is None:
        raise ConfigError("p2-encode needs --in MESSAGE_FILE")
    prm = p2_params(cfg)
    if prm.message_bits < 1:
        raise ConfigError("partition carries no message bits at these parameters")
    try:
        data = args.infile.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read message: {exc.strerror}") from None
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    mb = prm.message_bits
    bits = np.concatenate([bits, np.zeros((-bits.size) % mb, np.uint8)])
    chunks = bits.reshape(-1, mb) if bits.size else np.zeros((0, mb), np.uint8)
    key, _ = _streams(cfg, args, p2_key_bits(prm, len(chunks)))
    syndromes = []
    for chunk in chunks:
        msg = int("".join(map(str, chunk)), 2)
        syndromes.append(str(encode_p2(msg, key, prm).syndrome))
    doc = {
        "config_sha256": cfg.digest(),
        "N": prm.N,
        "message_bits": mb,
        "length_bytes": len(data),
        "syndromes": syndromes,
    }
    _emit(json.dumps(doc, indent=1) + "\n", args.out)


def _p2_decode(cfg: ExperimentConfig, args) -> None:
    if args.infile is None:
        raise ConfigError("p2-decode needs --in SYNDROME_FILE")
    try:
        doc = json.loads(args.infile.read_text())
        syndromes = [int(s) for s in doc["syndromes"]]
        length = int(doc["length_bytes"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad syndrome file: {exc}") from None
    prm = p2_params(cfg)
    if doc.get("N") != prm.N or doc.get("message_bits") != prm.message_bits:
        raise ConfigError("syndrome file was made with different parameters")
    key, _ = _streams(cfg, args, p2_key_bits(prm, len(syndromes)))
    model = prm.syndrome_model
    mb = prm.message_bits
    bits = []
    for s in syndromes:
        err = model.error_of(s)
        msg = decode_p2(SyndromeBlock(prm.N, err, s, 0, 0), key, prm)
        bits.extend(int(b) for b in format(msg, f"0{mb}b"))
    data = np.packbits(np.array(bits[: 8 * length], dtype=np.uint8)).tobytes()
    if args.out is None:
        sys.stdout.buffer.write(data)
    else:
        args.out.write_bytes(data)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        if cfg.verb == "p2-encode":
            _p2_encode(cfg, args)
            return 0
        if cfg.verb == "p2-decode":
            _p2_decode(cfg, args)
            return 0
        table, key_label = _run_table(cfg, args)
        _emit(table.to_csv(cfg, key_label), args.out)
        _report(table)
        if args.figure is not None:
            from .plotting import PLOTTERS

            if cfg.verb not in PLOTTERS:
                raise ConfigError(f"no figure for verb {cfg.verb!r}")
            PLOTTERS[cfg.verb](table, args.figure)
    except KeyExhaustedError as exc:
        print(f"error: key exhausted: {exc}", file=sys.stderr)
        return EXIT_KEY
    except DecodeFailure as exc:
        print(f"error: decode failure: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
