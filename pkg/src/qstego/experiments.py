"""Config-driven experiment runners producing plain tables for the CLI."""
from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Callable

import numpy as np

from . import __version__
from .adversary import EveExperiment, chi_square_binomial, distinguishing_experiment
from .channels import ChannelModel, binary_entropy, channel_entropy, depolarizing
from .keysource import KeyStream, kcr, kcr_beta, key_consumption_p1, subset_bits
from .pauli import PauliString
from .protocol1 import (
    StegoParams1,
    block_record,
    bsc_rate_encoding1,
    bsc_rate_main,
    decode_p1,
    encode_p1,
    encode_p1_noisy,
)
from .protocol2 import (
    DecodeFailure,
    StegoParams2,
    block_error_rate,
    build_noisy_codebook,
    decode_p2,
    encode_p2,
    noisy_rate,
)
from .security import diamond_norm_n, p2_closeness_bound, p_opt
from .syndrome import SteaneCode

VERBS = ("kcr", "rates", "security", "simulate-p1", "simulate-p2", "eve", "p2-encode", "p2-decode")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Everything that determines an experiment's output, apart from key material."""

    verb: str
    channel: dict = field(default_factory=lambda: {"kind": "depolarizing", "p": 0.1})
    N: int = 200
    delta: float = 0.1
    delta_p: float = 0.01
    eps: float = 0.01
    p_grid: list[float] | None = None
    delta_p_grid: list[float] | None = None
    N_grid: list[int] | None = None
    trials: int = 1000
    blocks: int = 1
    seed: int = 0
    tail: float | None = 1e-4
    p_physical: float = 0.0
    inner_code: bool = False
    noisy: bool = False
    window: str = "probability"

    def __post_init__(self):
        if self.verb not in VERBS:
            raise ConfigError(f"unknown verb {self.verb!r}")
        if self.N < 1 or self.trials < 1 or self.blocks < 1:
            raise ConfigError("N, trials and blocks must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        try:
            self.channel_model()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def channel_model(self) -> ChannelModel:
        return ChannelModel.from_config(self.channel)

    def canonical(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


@dataclass
class Table:
    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)
    trace: list[dict] = field(default_factory=list)

    def to_csv(self, cfg: ExperimentConfig, key_label: str | None = None) -> str:
        buf = io.StringIO()
        buf.write(f"# qstego {__version__} verb={cfg.verb} config-sha256={cfg.digest()}\n")
        if key_label:
            buf.write(f"# key={key_label}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _grid(values, default) -> list:
    return list(values) if values is not None else list(default)


# ---------------------------------------------------------------------------
# closed-form tables
# ---------------------------------------------------------------------------
DEFAULT_KCR_GRID = [round(0.05 + 0.025 * i, 3) for i in range(11)]
DEFAULT_RATE_GRID = [round(0.025 * i, 3) for i in range(1, 11)]


def run_kcr_curve(cfg: ExperimentConfig) -> Table:
    grid = _grid(cfg.p_grid, DEFAULT_KCR_GRID)
    if not grid or any(not 0 < p < 0.75 for p in grid):
        raise ConfigError("p grid must be non-empty and inside (0, 3/4)")
    t = Table(["p", "delta_p", "beta", "K_asymptotic", "K_exact_N", "N"])
    for p in grid:
        beta = kcr_beta(p, cfg.delta_p)
        if not 0 <= beta < 1:
            raise ConfigError(f"beta = {beta:.4g} at p = {p} is outside [0, 1)")
        t.rows.append([p, cfg.delta_p, beta, kcr(p, cfg.delta_p), kcr(p, cfg.delta_p, cfg.N), cfg.N])
    return t


def run_rate_table(cfg: ExperimentConfig) -> Table:
    grid = _grid(cfg.p_grid, DEFAULT_RATE_GRID)
    if not grid or any(not 0 < p < 0.5 for p in grid):
        raise ConfigError("p grid must be non-empty and inside (0, 1/2)")
    t = Table(
        [
            "p",
            "delta",
            "delta_p",
            "rate_p1",
            "rate_p2_dc",
            "rate_p2_bsc",
            "rate_p2_noisy",
            "rate_p1_noisy_main",
            "rate_p1_noisy_encoding1",
        ]
    )
    for p in grid:
        t.rows.append(
            [
                p,
                cfg.delta,
                cfg.delta_p,
                4 * p / 3,
                channel_entropy(depolarizing(p)) - cfg.delta,
                binary_entropy(p) - cfg.delta,
                noisy_rate(p, cfg.delta_p),
                bsc_rate_main(p, cfg.delta_p, cfg.delta),
                bsc_rate_encoding1(p, cfg.delta_p),
            ]
        )
    return t


def run_security_sweep(cfg: ExperimentConfig) -> Table:
    ps = _grid(cfg.p_grid, [cfg.channel_model().error_rate])
    dps = _grid(cfg.delta_p_grid, [cfg.delta_p])
    Ns = _grid(cfg.N_grid, [1, 2, 10, 100, 1000, 10000])
    t = Table(["N", "p", "delta_p", "diamond_norm", "p_opt", "s37_bound"])
    for p in ps:
        for dp in dps:
            if not (0 < p < 0.5 and 0 <= dp and p + dp < 0.5):
                raise ConfigError(f"need 0 < p <= p + delta_p < 1/2, got p={p}, delta_p={dp}")
            for N in Ns:
                d = diamond_norm_n(p, p + dp, int(N))
                t.rows.append([int(N), p, dp, d, p_opt(d), p2_closeness_bound(p, int(N), cfg.delta, cfg.eps)])
    return t


# ---------------------------------------------------------------------------
# Monte-Carlo runs
# ---------------------------------------------------------------------------
def p1_params(cfg: ExperimentConfig) -> StegoParams1:
    ch = cfg.channel_model()
    if ch.kind != "depolarizing":
        raise ConfigError("protocol 1 emulates a depolarizing channel")
    inner = SteaneCode() if cfg.inner_code else None
    try:
        if cfg.tail is not None:
            return StegoParams1.with_tail(cfg.N, ch.p, cfg.tail, p_physical=cfg.p_physical, inner_code=inner)
        return StegoParams1(cfg.N, ch.p, cfg.delta, cfg.p_physical, inner)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def p1_key_bits(cfg: ExperimentConfig) -> int:
    prm = p1_params(cfg)
    return cfg.trials * (3 * subset_bits(cfg.N, prm.M) + 2 * prm.M + 53) + 1024


def run_simulation_p1(cfg: ExperimentConfig, key: KeyStream, rng: np.random.Generator, reveal: bool = False) -> Table:
    prm = p1_params(cfg)
    capacity = prm.logical_capacity
    t = Table(["block", "Q", "weight", "recovered", "key_bits"])
    recovered, Qs, used = 0, [], 0
    bob = key.fork()
    for b in range(cfg.trials):
        payload = PauliString.from_codes(rng.integers(0, 4, size=capacity))
        start = key.cursor
        if prm.inner_code is not None:
            block = encode_p1_noisy(payload, key, prm, rng)
        else:
            block = encode_p1(payload, key, prm, rng)
        spent = key.cursor - start
        ok = decode_p1(block, bob, prm) == payload
        recovered += ok
        Qs.append(block.Q)
        used += spent
        t.rows.append([b, block.Q, block.channel_error.weight, ok, spent])
        t.trace.append(block_record(block, b, reveal=reveal))
    chi = chi_square_binomial(Qs, cfg.N, prm.mix_rate)
    t.summary = {
        "M": prm.M,
        "delta": prm.delta,
        "logical_symbols_per_block": capacity,
        "recovery_rate": recovered / cfg.trials,
        "key_bits_measured": used,
        "key_bits_closed_form_per_block": key_consumption_p1(cfg.N, prm.M).total,
        "Q_chi_square": chi.statistic,
        "Q_chi_square_dof": chi.dof,
        "Q_chi_square_p_value": chi.p_value,
    }
    return t


def p2_params(cfg: ExperimentConfig) -> StegoParams2:
    try:
        return StegoParams2.build(cfg.channel_model(), cfg.N, cfg.delta, window=cfg.window)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def p2_key_bits(prm: StegoParams2, blocks: int) -> int:
    rep = max(c.set_size for c in prm.partition.classes)
    return blocks * (2 * prm.message_bits + 3 * max(1, (rep - 1).bit_length())) + 1024


def run_simulation_p2(cfg: ExperimentConfig, key: KeyStream, rng: np.random.Generator) -> Table:
    if cfg.noisy:
        return run_noisy_codebook(cfg, key, rng)
    prm = p2_params(cfg)
    bob = key.fork()
    t = Table(["block", "message", "weight", "recovered", "pad_bits", "representative_bits"])
    recovered = pad_total = rep_total = 0
    for b in range(cfg.trials):
        msg = int(rng.integers(0, 1 << prm.message_bits)) if prm.message_bits else 0
        block = encode_p2(msg, key, prm)
        try:
            ok = decode_p2(block, bob, prm) == msg
        except DecodeFailure:
            ok = False
        recovered += ok
        pad_total += block.pad_bits
        rep_total += block.representative_bits
        t.rows.append([b, msg, block.channel_error.weight, ok, block.pad_bits, block.representative_bits])
    predicted = prm.predicted_key
    t.summary = {
        "C": prm.partition.C,
        "message_bits": prm.message_bits,
        "rate": prm.rate,
        "recovery_rate": recovered / cfg.trials,
        "pad_bits_measured": pad_total,
        "representative_bits_measured": rep_total,
        "pad_bits_predicted": predicted.twirl_bits * cfg.trials,
        "representative_bits_predicted": predicted.representative_bits * cfg.trials,
        "spare_syndrome_bits": prm.spare_syndrome_bits,
    }
    return t


def run_noisy_codebook(cfg: ExperimentConfig, key: KeyStream, rng: np.random.Generator) -> Table:
    p = cfg.channel_model().error_rate
    Ns = _grid(cfg.N_grid, [cfg.N])
    t = Table(["N", "M", "active_slots", "min_distance", "codewords", "rate", "target_rate", "block_error_rate"])
    for N in Ns:
        try:
            cb = build_noisy_codebook(int(N), p, cfg.delta_p, key)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        ber = block_error_rate(cb, cfg.trials, rng)
        t.rows.append([int(N), cb.M, cb.n_active, cb.min_distance, cb.count, cb.rate, noisy_rate(p, cfg.delta_p), ber])
    return t


def run_eve(cfg: ExperimentConfig, threads: int = 1) -> Table:
    ps = _grid(cfg.p_grid, [cfg.channel_model().error_rate])
    dps = _grid(cfg.delta_p_grid, [cfg.delta_p])
    Ns = _grid(cfg.N_grid, [cfg.N])
    t = Table(
        ["p", "delta_p", "N", "blocks", "trials", "empirical_success", "ci_halfwidth", "ceiling", "within_ceiling"]
    )
    root = np.random.SeedSequence(cfg.seed)
    cells = [(p, dp, int(N)) for p in ps for dp in dps for N in Ns]
    for (p, dp, N), seed in zip(cells, root.spawn(len(cells))):
        try:
            exp = EveExperiment(p, dp, N, cfg.blocks)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        est = distinguishing_experiment(exp, cfg.trials, seed, threads)
        t.rows.append(
            [p, dp, N, cfg.blocks, cfg.trials, est.empirical_success, est.ci_halfwidth, est.ceiling, est.within_ceiling]
        )
    t.summary = {"prior": "balanced honest/stego labels, shuffled", "cells": len(cells)}
    return t

