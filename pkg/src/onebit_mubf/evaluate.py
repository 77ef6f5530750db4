"""Rate metrics, the true nonlinear symbol chain, decoding, and experiments.

Rates come from the exact per-user SQINR; bit error rates come from pushing
IID constellation symbols through the real sign-quantizer chain (no
linearization), adding receiver noise, and minimum-distance decoding with a
blindly estimated per-user gain. The experiment driver sweeps users, power,
and estimation error over seeded channel draws, emitting one row per
(draw, precoder) combination; every random stream is derived from the master
seed through a counter-keyed SeedSequence, so tables are bit-reproducible and
independent of execution order.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import (ChannelSet, GeometricScenario, gen_geometric, gen_rayleigh,
                      load_channel, perturb_channel)
from .exceptions import BadDims, EmptyBlock, OneBitError
from .precoding import (BasePrecoder, DitheredMaxMinPrecoder, MaxMinPrecoder,
                        ZeroForcingPrecoder)
from .sqinr import SystemNoise
from .units import dbm_to_watt, thermal_noise_dbm

# ---------------------------------------------------------------------------
# constellations


@dataclass(frozen=True)
class Constellation:
    """Unit-average-power constellation with its Gray bit labeling."""

    name: str
    points: np.ndarray          # (M,) complex
    bits: np.ndarray            # (M, bits_per_symbol) uint8

    @property
    def bits_per_symbol(self) -> int:
        return self.bits.shape[1]

    @property
    def mean_abs(self) -> float:
        return float(np.mean(np.abs(self.points)))


_GRAY2 = ((0, 0), (0, 1), (1, 1), (1, 0))  # Gray order over 4 levels/phases


def _qpsk() -> Constellation:
    # counterclockwise from (1+j)/sqrt(2); adjacent points differ in one bit
    pts = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / np.sqrt(2.0)
    bits = np.array(_GRAY2, dtype=np.uint8)
    return Constellation("qpsk", pts, bits)


def _qam16() -> Constellation:
    levels = np.array([-3.0, -1.0, 1.0, 3.0]) / np.sqrt(10.0)
    pts, bits = [], []
    for i, re_lvl in enumerate(levels):
        for j, im_lvl in enumerate(levels):
            pts.append(re_lvl + 1j * im_lvl)
            bits.append(_GRAY2[i] + _GRAY2[j])
    return Constellation("16qam", np.array(pts), np.array(bits, dtype=np.uint8))


_CONSTELLATIONS = {"qpsk": _qpsk(), "16qam": _qam16()}


def constellation(kind: str) -> Constellation:
    try:
        return _CONSTELLATIONS[kind.lower()]
    except KeyError:
        raise ValueError(f"unknown constellation {kind!r}; "
                         f"pick from {sorted(_CONSTELLATIONS)}") from None


# ---------------------------------------------------------------------------
# metrics


def rates(gammas) -> tuple[float, float]:
    """Sum and minimum rate in b/s/Hz from per-user SQINR values."""
    g = np.asarray(gammas, dtype=float)
    if np.any(g < 0):
        raise BadDims("SQINR values must be non-negative")
    r = np.log2(1.0 + g)
    return float(r.sum()), float(r.min())


# ---------------------------------------------------------------------------
# symbol chain


def transmit_downlink(precoder: BasePrecoder, ch: ChannelSet, noise: SystemNoise,
                      symbols: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Received symbols for a block: true sign-quantizer chain plus noise.

    The precoder's transform applies beams, dummy symbols, dither, the 1-bit
    quantizer, and the per-antenna gains; this pushes the result through the
    channel rows and adds IID complex Gaussian receiver noise.
    """
    tx = precoder.transform(symbols, rng)
    k, n_slots = ch.n_users, tx.shape[1]
    noise_block = (rng.standard_normal((k, n_slots))
                   + 1j * rng.standard_normal((k, n_slots))) * np.sqrt(noise.sigma2 / 2.0)
    return ch.H @ tx + noise_block


def blind_gain(block, cons: Constellation) -> float:
    """Moment-matching amplitude estimate from a received symbol block."""
    block = np.asarray(block).ravel()
    if block.size == 0:
        raise EmptyBlock("cannot estimate a gain from an empty block")
    return float(np.mean(np.abs(block)) / cons.mean_abs)


def decode(rx, gains, cons: Constellation) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-distance decisions after per-user rescaling.

    Parameters
    ----------
    rx : (K, n) received symbols.
    gains : per-user positive scale factors (scalar broadcasts).
    cons : constellation to decide against.

    Returns
    -------
    (bits, indices): Gray-mapped bits (K, n, bits_per_symbol) and the decided
    constellation indices (K, n).
    """
    rx = np.atleast_2d(np.asarray(rx, dtype=np.complex128))
    g = np.broadcast_to(np.asarray(gains, dtype=float), (rx.shape[0],))
    if np.any(g <= 0):
        raise BadDims("gains must be positive")
    scaled = rx / g[:, None]
    dist = np.abs(scaled[..., None] - cons.points)  # (K, n, M)
    idx = np.argmin(dist, axis=-1)
    return cons.bits[idx], idx


# ---------------------------------------------------------------------------
# experiment driver

PRECODER_LABELS = {
    "opt": "Opt",
    "opt_dummy": "Opt Dummy",
    "zf_opt": "ZF Opt-Pwr",
    "zf_zf": "ZF ZF-Pwr",
    "zf_equal": "ZF Equal-Pwr",
}

RESULT_COLUMNS = ("draw_seed", "precoder", "K", "N", "P_dBm", "alpha",
                  "sum_rate", "min_rate", "ber", "n_iters", "n_dummies",
                  "gamma_bar")


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description (picklable, hashable content)."""

    n_bs: int
    k_values: tuple[int, ...]
    p_dbm_values: tuple[float, ...]
    precoders: tuple[str, ...] = ("opt_dummy", "zf_opt", "zf_equal")
    alpha_values: tuple[float, ...] = (0.0,)
    channel_model: str = "rayleigh"     # rayleigh | geometric | file
    channel_path: str | None = None
    f_c: float = 60e9
    targets_db: float = 3.0
    sigma2_dbm: float | None = None     # None: thermal noise over `bandwidth_hz`
    bandwidth_hz: float = 8e6
    n_draws: int = 50
    n_symbols: int = 100
    constellation: str = "qpsk"
    master_seed: int = 1
    epsilon: float = 1e-4
    zf_dither: bool = False

    def __post_init__(self):
        if self.n_symbols < 1:
            raise BadDims("need at least one symbol per draw")
        if self.n_draws < 1:
            raise BadDims("need at least one channel draw")
        for name in self.precoders:
            if name not in PRECODER_LABELS:
                raise BadDims(f"unknown precoder {name!r}; "
                              f"pick from {sorted(PRECODER_LABELS)}")
        for a in self.alpha_values:
            if not 0.0 <= a <= 1.0:
                raise BadDims(f"alpha values must lie in [0, 1], got {a}")

    def sigma2_dbm_resolved(self) -> float:
        if self.sigma2_dbm is not None:
            return self.sigma2_dbm
        return thermal_noise_dbm(self.bandwidth_hz)


@dataclass
class ResultTable:
    """Per-draw rows plus aggregate statistics, with CSV/JSON writers."""

    rows: list[dict]
    errors: list[dict] = field(default_factory=list)

    def to_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(RESULT_COLUMNS)
            for row in self.rows:
                writer.writerow([_format_cell(row[c]) for c in RESULT_COLUMNS])

    def summary(self) -> dict:
        groups: dict[tuple, list[dict]] = {}
        for row in self.rows:
            key = (row["precoder"], row["K"], row["P_dBm"], row["alpha"])
            groups.setdefault(key, []).append(row)
        out = []
        for (precoder, k, p_dbm, alpha), rows in sorted(groups.items()):
            sum_rates = np.array([r["sum_rate"] for r in rows], dtype=float)
            entry = {
                "precoder": precoder, "K": k, "P_dBm": p_dbm, "alpha": alpha,
                "n_draws": len(rows),
                "mean_sum_rate": _nanmean(sum_rates),
                "mean_min_rate": _nanmean([r["min_rate"] for r in rows]),
                "mean_ber": _nanmean([r["ber"] for r in rows]),
                "mean_gamma_bar": _nanmean([r["gamma_bar"] for r in rows]),
                "sum_rate_quantiles": {
                    f"q{int(q * 100):02d}": float(np.nanquantile(sum_rates, q))
                    for q in (0.1, 0.25, 0.5, 0.75, 0.9)
                } if np.any(np.isfinite(sum_rates)) else {},
            }
            out.append(entry)
        return {"groups": out, "errors": self.errors}

    def to_json(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _nanmean(values) -> float:
    arr = np.asarray(values, dtype=float)
    return float(np.nanmean(arr)) if np.any(np.isfinite(arr)) else math.nan


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def derive_seed(master_seed: int, *key: int) -> int:
    """Counter-style child seed: hash (master, key...) through a SeedSequence."""
    ss = np.random.SeedSequence([int(master_seed), *[int(x) for x in key]])
    return int(ss.generate_state(1, np.uint64)[0])


_STREAM_CHANNEL = 1
_STREAM_CEE = 2
_STREAM_SYMBOLS = 3


def make_precoder(name: str, cfg: ExperimentConfig, p_dbm: float) -> BasePrecoder:
    common = dict(targets_db=cfg.targets_db, p_bs_dbm=p_dbm,
                  sigma2_dbm=cfg.sigma2_dbm_resolved())
    if name == "opt":
        return MaxMinPrecoder(epsilon=cfg.epsilon, **common)
    if name == "opt_dummy":
        return DitheredMaxMinPrecoder(epsilon=cfg.epsilon, **common)
    dither = "auto" if cfg.zf_dither else None
    policy = {"zf_opt": "opt", "zf_zf": "zf", "zf_equal": "equal"}[name]
    return ZeroForcingPrecoder(power=policy, dither=dither, **common)


def _draw_channel(cfg: ExperimentConfig, k: int, seed: int) -> ChannelSet:
    if cfg.channel_model == "rayleigh":
        return gen_rayleigh(k, cfg.n_bs, seed)
    if cfg.channel_model == "geometric":
        scenario = GeometricScenario(f_c=cfg.f_c, n_bs=cfg.n_bs)
        return gen_geometric(scenario, k, seed)
    if cfg.channel_model == "file":
        if cfg.channel_path is None:
            raise BadDims("channel_model 'file' needs channel_path")
        ch = load_channel(cfg.channel_path)
        if ch.n_users != k or ch.n_antennas != cfg.n_bs:
            raise BadDims(f"channel file is {ch.H.shape}, expected ({k}, {cfg.n_bs})")
        return ch
    raise BadDims(f"unknown channel model {cfg.channel_model!r}")


def _simulate_ber(precoder: BasePrecoder, ch: ChannelSet, noise: SystemNoise,
                  cons: Constellation, n_symbols: int,
                  rng: np.random.Generator) -> float:
    k = ch.n_users
    idx = rng.integers(0, len(cons.points), size=(k, n_symbols))
    symbols = cons.points[idx]
    rx = transmit_downlink(precoder, ch, noise, symbols, rng)
    gains = np.array([blind_gain(rx[u], cons) for u in range(k)])
    _, idx_hat = decode(rx, gains, cons)
    errors = int(np.sum(cons.bits[idx] != cons.bits[idx_hat]))
    return errors / (k * n_symbols * cons.bits_per_symbol)


def run_draw(cfg: ExperimentConfig, k_idx: int, p_idx: int, a_idx: int,
             draw: int) -> tuple[list[dict], list[dict]]:
    """All precoder rows for one (K, P, alpha, draw) cell."""
    k = cfg.k_values[k_idx]
    p_dbm = cfg.p_dbm_values[p_idx]
    alpha = cfg.alpha_values[a_idx]
    channel_seed = derive_seed(cfg.master_seed, _STREAM_CHANNEL, k_idx, draw)
    ch_true = _draw_channel(cfg, k, channel_seed)
    if alpha > 0.0:
        cee_seed = derive_seed(cfg.master_seed, _STREAM_CEE, k_idx, a_idx, draw)
        ch_design = perturb_channel(ch_true, alpha, cee_seed)
    else:
        ch_design = ch_true
    noise = SystemNoise(sigma2=dbm_to_watt(cfg.sigma2_dbm_resolved()),
                        p_bs=dbm_to_watt(p_dbm))
    cons = constellation(cfg.constellation)

    rows, errors = [], []
    for name in cfg.precoders:
        base_row = {
            "draw_seed": channel_seed, "precoder": PRECODER_LABELS[name],
            "K": k, "N": cfg.n_bs, "P_dBm": float(p_dbm), "alpha": float(alpha),
        }
        try:
            precoder = make_precoder(name, cfg, p_dbm).fit(ch_design.H)
            gammas = precoder.sqinr(ch_true.H)
            sum_rate, min_rate = rates(gammas)
            sym_seed = derive_seed(cfg.master_seed, _STREAM_SYMBOLS,
                                   k_idx, p_idx, a_idx, draw)
            ber = _simulate_ber(precoder, ch_true, noise, cons, cfg.n_symbols,
                                np.random.default_rng(sym_seed))
            rows.append(base_row | {
                "sum_rate": sum_rate, "min_rate": min_rate, "ber": ber,
                "n_iters": precoder.n_iters_, "n_dummies": precoder.n_dummies_,
                "gamma_bar": float(np.min(gammas)),
            })
        except OneBitError as exc:  # flush a marker row, keep the sweep alive
            errors.append({"precoder": PRECODER_LABELS[name], "K": k,
                           "P_dBm": float(p_dbm), "alpha": float(alpha),
                           "draw": draw, "error": str(exc)})
            rows.append(base_row | {
                "sum_rate": math.nan, "min_rate": math.nan, "ber": math.nan,
                "n_iters": -1, "n_dummies": -1, "gamma_bar": math.nan,
            })
    return rows, errors


def _draw_worker(args) -> tuple[list[dict], list[dict]]:
    return run_draw(*args)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> ResultTable:
    """Execute the full sweep; the result is independent of execution order."""
    tasks = [(cfg, ki, pi, ai, draw)
             for ki in range(len(cfg.k_values))
             for pi in range(len(cfg.p_dbm_values))
             for ai in range(len(cfg.alpha_values))
             for draw in range(cfg.n_draws)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_draw_worker, tasks))
    else:
        outcomes = [run_draw(*task) for task in tasks]
    rows, errors = [], []
    for r, e in outcomes:
        rows.extend(r)
        errors.extend(e)
    return ResultTable(rows=rows, errors=errors)
