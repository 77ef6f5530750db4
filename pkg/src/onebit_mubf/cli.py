"""Experiment runner CLI: ``run``, ``repro``, and ``check`` subcommands.

``run`` executes a config-file experiment and writes results.csv,
summary.json, and manifest.json into a fresh output directory. ``repro``
regenerates the CSV behind one of the paper-style figures at desk or full
scale. ``check`` exercises the library's core identities (duality, balancing,
the arcsine law) and exits nonzero if any of them breaks.

Config grammar (INI, units as in the simulation tables):

    [channel]
    model = rayleigh            ; rayleigh | geometric | file
    n_bs = 64
    path = channels.txt         ; only for model = file
    f_c_ghz = 60

    [precoder]
    methods = opt_dummy, zf_opt ; opt | opt_dummy | zf_opt | zf_zf | zf_equal
    targets_db = 3.0
    epsilon = 1e-4
    zf_dither = false

    [sweep]
    k = 2, 4, 8
    p_bs_dbm = 24
    alpha = 0.0

    [eval]
    draws = 10
    symbols = 100
    constellation = qpsk        ; qpsk | 16qam
    bandwidth_mhz = 8
    ; sigma2_dbm = -105         ; overrides the thermal default
    seed = 1
"""

from __future__ import annotations

import argparse
import configparser
import datetime
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .channel import gen_rayleigh
from .evaluate import ExperimentConfig, ResultTable, run_experiment
from .exceptions import ConfigError, OneBitError
from .optimizer import optimize, optimize_with_dither
from .power_allocation import coupling_system, solve_balance
from .quantize import arcsine_covariance, one_bit
from .sqinr import SystemNoise, dl_sqinr_exact, distortion_diag_metric
from .units import dbm_to_watt

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

FIGURES = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9")


# ---------------------------------------------------------------------------
# config parsing


def _split_list(raw: str) -> list[str]:
    return [tok.strip() for tok in raw.split(",") if tok.strip()]


def load_config(path: str) -> ExperimentConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        chan = parser["channel"] if parser.has_section("channel") else {}
        prec = parser["precoder"] if parser.has_section("precoder") else {}
        sweep = parser["sweep"] if parser.has_section("sweep") else {}
        ev = parser["eval"] if parser.has_section("eval") else {}
        sigma2_raw = ev.get("sigma2_dbm", "").strip() if hasattr(ev, "get") else ""
        cfg = ExperimentConfig(
            n_bs=int(chan.get("n_bs", 64)),
            channel_model=chan.get("model", "rayleigh").strip().lower(),
            channel_path=chan.get("path", None),
            f_c=float(chan.get("f_c_ghz", 60.0)) * 1e9,
            precoders=tuple(_split_list(prec.get("methods", "opt_dummy, zf_opt"))),
            targets_db=float(prec.get("targets_db", 3.0)),
            epsilon=float(prec.get("epsilon", 1e-4)),
            zf_dither=str(prec.get("zf_dither", "false")).strip().lower()
            in ("1", "true", "yes", "on"),
            k_values=tuple(int(x) for x in _split_list(sweep.get("k", "4"))),
            p_dbm_values=tuple(float(x) for x in _split_list(
                sweep.get("p_bs_dbm", "24"))),
            alpha_values=tuple(float(x) for x in _split_list(sweep.get("alpha", "0"))),
            n_draws=int(ev.get("draws", 10)),
            n_symbols=int(ev.get("symbols", 100)),
            constellation=ev.get("constellation", "qpsk").strip().lower(),
            bandwidth_hz=float(ev.get("bandwidth_mhz", 8.0)) * 1e6,
            sigma2_dbm=float(sigma2_raw) if sigma2_raw else None,
            master_seed=int(ev.get("seed", 1)),
        )
    except (ValueError, KeyError, OneBitError) as exc:
        raise ConfigError(f"{path}: invalid configuration: {exc}") from exc
    return cfg


# ---------------------------------------------------------------------------
# output plumbing


def _prepare_out_dir(out_dir: str, force: bool) -> None:
    if os.path.exists(out_dir):
        if not force:
            raise ConfigError(f"output directory exists: {out_dir} (use --force)")
        return
    os.makedirs(out_dir)


def _write_manifest(out_dir: str, cfg_dict: dict, seed: int, extra: dict) -> None:
    payload = json.dumps({"config": cfg_dict, "seed": seed}, sort_keys=True)
    manifest = {
        "run_id": hashlib.sha256(payload.encode()).hexdigest()[:12],
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "version": __version__,
        "seed": seed,
        "config": cfg_dict,
        **extra,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cfg_dict(cfg: ExperimentConfig) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v)
            for k, v in cfg.__dict__.items()}


def _jobs_from(args) -> int:
    if args.jobs is not None:
        return max(1, args.jobs)
    env = os.environ.get("ONEBIT_MUBF_JOBS", "").strip()
    return max(1, int(env)) if env.isdigit() else 1


# ---------------------------------------------------------------------------
# run


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = ExperimentConfig(**{**cfg.__dict__, "master_seed": args.seed})
    _prepare_out_dir(args.out, args.force)
    table = run_experiment(cfg, jobs=_jobs_from(args))
    table.to_csv(os.path.join(args.out, "results.csv"))
    table.to_json(os.path.join(args.out, "summary.json"))
    _write_manifest(args.out, _cfg_dict(cfg), cfg.master_seed,
                    {"command": "run", "config_path": os.path.abspath(args.config),
                     "seed_override": args.seed is not None})
    print(f"wrote {len(table.rows)} rows to {args.out}/results.csv"
          + (f" ({len(table.errors)} draw errors)" if table.errors else ""))
    return EXIT_OK


# ---------------------------------------------------------------------------
# repro


def _fig_cfg(figure: str, scale: str, seed: int) -> ExperimentConfig:
    desk = scale == "desk"
    if figure == "fig3":
        return ExperimentConfig(
            n_bs=16 if desk else 128,
            k_values=(2, 4, 8) if desk else (1, 2, 5, 10, 15),
            p_dbm_values=(24.0,),
            precoders=("opt", "opt_dummy", "zf_opt", "zf_zf"),
            n_draws=3 if desk else 50, n_symbols=1, master_seed=seed)
    if figure == "fig4":
        return ExperimentConfig(
            n_bs=16 if desk else 128,
            k_values=(2, 4) if desk else (4, 10), p_dbm_values=(24.0,),
            precoders=("opt_dummy", "zf_opt"),
            n_draws=10 if desk else 100, n_symbols=1, master_seed=seed)
    if figure == "fig6":
        # noise pinned where the QPSK waterfall is visible at these dims
        return ExperimentConfig(
            n_bs=16 if desk else 128,
            k_values=(2, 4, 8) if desk else (1, 2, 5, 10, 15),
            p_dbm_values=(24.0,), sigma2_dbm=25.0,
            precoders=("opt", "opt_dummy", "zf_opt", "zf_equal"),
            n_draws=5 if desk else 100, master_seed=seed)
    if figure == "fig7":
        return ExperimentConfig(
            n_bs=16 if desk else 128,
            k_values=(2, 4, 8) if desk else (1, 2, 5, 10, 15),
            p_dbm_values=(30.0,), sigma2_dbm=0.0, constellation="16qam",
            precoders=("opt", "opt_dummy", "zf_opt", "zf_equal"),
            n_draws=5 if desk else 100, master_seed=seed)
    if figure == "fig8":
        return ExperimentConfig(
            n_bs=32 if desk else 128, k_values=(10,),
            p_dbm_values=(18.0, 24.0, 30.0) if desk
            else (12.0, 18.0, 24.0, 30.0, 36.0),
            sigma2_dbm=0.0,
            precoders=("opt", "opt_dummy", "zf_opt", "zf_equal"),
            n_draws=5 if desk else 100, master_seed=seed)
    if figure == "fig9":
        return ExperimentConfig(
            n_bs=32 if desk else 128, k_values=(10,), p_dbm_values=(30.0,),
            alpha_values=(0.0, 0.25, 0.5, 0.75, 1.0), sigma2_dbm=0.0,
            precoders=("opt_dummy", "zf_opt", "zf_equal"),
            n_draws=5 if desk else 100, master_seed=seed)
    raise ConfigError(f"unknown figure {figure!r}")


def _tag(label: str) -> str:
    return label.lower().replace(" ", "_").replace("-", "_")


def _rows_by(table: ResultTable, key_fields: tuple[str, ...]) -> dict:
    grouped: dict[tuple, list[dict]] = {}
    for row in table.rows:
        grouped.setdefault(tuple(row[f] for f in key_fields), []).append(row)
    return grouped


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    import csv as _csv
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(c) if isinstance(c, float) else str(c)
                             for c in row])


def _repro_fig2(scale: str, seed: int, out_csv: str, jobs: int) -> None:
    desk = scale == "desk"
    n_bs = 32 if desk else 128
    k_values = (1, 2, 4, 8) if desk else (1, 2, 5, 10, 15)
    n_draws = 3 if desk else 50
    noise = SystemNoise(sigma2=dbm_to_watt(-105.0), p_bs=dbm_to_watt(24.0))
    targets = 10 ** (3.0 / 10.0)
    rows = []
    for k in k_values:
        for draw in range(n_draws):
            ch = gen_rayleigh(k, n_bs, np.random.SeedSequence(
                [seed, k, draw]).generate_state(1)[0])
            plain = optimize(ch, targets, noise)
            d_no = distortion_diag_metric(plain.t_mat, plain.q)
            dith = optimize_with_dither(ch, targets, noise)
            d_yes = distortion_diag_metric(dith.t_mat, dith.q)
            rows.append([k, d_no, d_yes])
    _write_csv(out_csv, ["K", "d_metric_no_dummy", "d_metric_dummy"], rows)


def _repro_rate_vs_k(table: ResultTable, precoders: tuple[str, ...],
                     out_csv: str) -> None:
    labels = [lbl for lbl in dict.fromkeys(r["precoder"] for r in table.rows)]
    header = ["K"]
    for lbl in labels:
        header += [f"sum_rate_{_tag(lbl)}", f"min_rate_{_tag(lbl)}"]
    out = []
    for (k,), _ in sorted(_rows_by(table, ("K",)).items()):
        line: list = [k]
        for lbl in labels:
            vals = [r for r in table.rows if r["K"] == k and r["precoder"] == lbl]
            line.append(float(np.mean([r["sum_rate"] for r in vals])))
            line.append(float(np.mean([r["min_rate"] for r in vals])))
        out.append(line)
    _write_csv(out_csv, header, out)


def _repro_raw_rates(table: ResultTable, out_csv: str) -> None:
    rows = [[r["precoder"], r["K"], r["draw_seed"], r["sum_rate"]]
            for r in table.rows]
    _write_csv(out_csv, ["precoder", "K", "draw_seed", "sum_rate"], rows)


def _repro_metric_sweep(table: ResultTable, sweep_col: str, metric: str,
                        out_csv: str) -> None:
    labels = [lbl for lbl in dict.fromkeys(r["precoder"] for r in table.rows)]
    header = [sweep_col] + [f"{metric}_{_tag(lbl)}" for lbl in labels]
    out = []
    for (val,), _ in sorted(_rows_by(table, (sweep_col,)).items()):
        line = [val]
        for lbl in labels:
            vals = [r[metric] for r in table.rows
                    if r[sweep_col] == val and r["precoder"] == lbl]
            line.append(float(np.mean(vals)))
        out.append(line)
    _write_csv(out_csv, header, out)


def _repro_fig5(scale: str, seed: int, out_csv: str, jobs: int) -> None:
    desk = scale == "desk"
    antenna_counts = (8, 16, 32) if desk else (32, 64, 128)
    out_rows = []
    header = None
    for n_bs in antenna_counts:
        cfg = ExperimentConfig(
            n_bs=n_bs,
            k_values=tuple(k for k in ((2, 4, 8) if desk else (1, 2, 5, 10, 15))
                           if k <= n_bs),
            p_dbm_values=(24.0,), precoders=("opt_dummy", "zf_opt"),
            n_draws=3 if desk else 50, n_symbols=1, master_seed=seed)
        table = run_experiment(cfg, jobs=jobs)
        labels = [lbl for lbl in dict.fromkeys(r["precoder"] for r in table.rows)]
        if header is None:
            header = ["N", "K"] + [f"sum_rate_{_tag(lbl)}" for lbl in labels]
        for (k,), _ in sorted(_rows_by(table, ("K",)).items()):
            line = [n_bs, k]
            for lbl in labels:
                vals = [r["sum_rate"] for r in table.rows
                        if r["K"] == k and r["precoder"] == lbl]
                line.append(float(np.mean(vals)))
            out_rows.append(line)
    _write_csv(out_csv, header, out_rows)


def cmd_repro(args) -> int:
    _prepare_out_dir(args.out, args.force)
    seed = args.seed if args.seed is not None else 1
    jobs = _jobs_from(args)
    out_csv = os.path.join(args.out, f"{args.figure}.csv")
    meta: dict = {"command": "repro", "figure": args.figure, "scale": args.scale}
    if args.figure == "fig2":
        _repro_fig2(args.scale, seed, out_csv, jobs)
        _write_manifest(args.out, {"figure": args.figure, "scale": args.scale},
                        seed, meta)
        print(f"wrote {out_csv}")
        return EXIT_OK
    if args.figure == "fig5":
        _repro_fig5(args.scale, seed, out_csv, jobs)
        _write_manifest(args.out, {"figure": args.figure, "scale": args.scale},
                        seed, meta)
        print(f"wrote {out_csv}")
        return EXIT_OK
    cfg = _fig_cfg(args.figure, args.scale, seed)
    table = run_experiment(cfg, jobs=jobs)
    if args.figure == "fig3":
        _repro_rate_vs_k(table, cfg.precoders, out_csv)
    elif args.figure == "fig4":
        _repro_raw_rates(table, out_csv)
    elif args.figure in ("fig6", "fig7"):
        _repro_metric_sweep(table, "K", "ber", out_csv)
    elif args.figure == "fig8":
        _repro_metric_sweep(table, "P_dBm", "ber", out_csv)
    elif args.figure == "fig9":
        _repro_metric_sweep(table, "alpha", "ber", out_csv)
    _write_manifest(args.out, _cfg_dict(cfg), seed, meta)
    print(f"wrote {out_csv}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# check


def _check_duality(fault: str | None) -> tuple[bool, str]:
    from .power_allocation import CouplingSystem

    noise = SystemNoise(sigma2=1e-3, p_bs=1.0)
    worst_power, worst_level = 0.0, 0.0
    rng = np.random.default_rng(7)
    for trial in range(5):
        ch = gen_rayleigh(4, 16, 1000 + trial)
        t_mat = rng.standard_normal((16, 4)) + 1j * rng.standard_normal((16, 4))
        t_mat /= np.linalg.norm(t_mat, axis=0)
        system = coupling_system(t_mat, ch, np.full(4, 2.0), noise)
        if fault == "psi-sign":
            psi = system.psi.copy()
            psi[0, 1] *= -1.0  # corrupt one downlink coupling entry
            system = CouplingSystem(
                d=system.d, psi=psi, noise=noise,
                upsilon=_signed_extend(system.d, psi, noise),
                lam=system.lam)
        dl = solve_balance(system, "dl")
        ul = solve_balance(system, "ul")
        worst_power = max(worst_power, abs(dl.power.sum() - ul.power.sum()))
        worst_level = max(worst_level, abs(dl.level - ul.level) / dl.level)
    ok = worst_power <= 1e-8 * noise.p_bs and worst_level <= 1e-8
    return ok, (f"| ||p||_1 - ||q||_1 | <= {worst_power:.3e}, "
                f"level gap <= {worst_level:.3e}")


def _signed_extend(d, psi, noise):
    # fault-injection variant of the extended build that skips the
    # non-negativity contract (the corrupted entry must flow through)
    k = d.shape[0]
    dc = d[:, None] * psi
    rhs = (np.pi * noise.sigma2 / 2.0) * d
    ext = np.empty((k + 1, k + 1))
    ext[:k, :k] = dc
    ext[:k, k] = rhs
    ext[k, :k] = dc.sum(axis=0) / noise.p_bs
    ext[k, k] = rhs.sum() / noise.p_bs
    return ext


def _check_balancing() -> tuple[bool, str]:
    from .sqinr import dl_sqinr_approx
    noise = SystemNoise(sigma2=1e-3, p_bs=1.0)
    worst = 0.0
    for trial in range(5):
        ch = gen_rayleigh(4, 16, 2000 + trial)
        sol = optimize(ch, 2.0, noise)
        ratios = dl_sqinr_approx(sol.t_mat, sol.q, ch, noise) / 2.0
        worst = max(worst, float(ratios.max() / ratios.min() - 1.0))
    return worst <= 1e-8, f"achieved/target spread <= {worst:.3e}"


def _check_arcsine() -> tuple[bool, str]:
    rng = np.random.default_rng(11)
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    r_y = a @ a.conj().T + 4.0 * np.eye(4)
    scale = 1.0 / np.sqrt(np.diag(r_y).real)
    r_y = r_y * np.outer(scale, scale)
    model = arcsine_covariance(r_y)
    n_samples = 200_000
    chol = np.linalg.cholesky(r_y)
    z = (rng.standard_normal((4, n_samples))
         + 1j * rng.standard_normal((4, n_samples))) / np.sqrt(2.0)
    samples = one_bit(chol @ z)
    emp = samples @ samples.conj().T / n_samples
    err = float(np.max(np.abs(emp - model.r_r)))
    return err <= 1.5e-2, f"max |empirical - arcsine| = {err:.3e}"


def _check_scalar_chain() -> tuple[bool, str]:
    noise = SystemNoise(sigma2=0.1, p_bs=2.0)
    ch = gen_rayleigh(1, 1, 5)
    ch = type(ch)(np.array([[1.0 + 0.0j]]))
    sol = optimize(ch, 1.0, noise)
    got = dl_sqinr_exact(sol.t_mat, sol.q, ch, noise)[0]
    p = noise.p_bs
    want = (2 / np.pi) * p / (noise.sigma2 + (1 - 2 / np.pi) * p)
    err = abs(got - want) / want
    return err <= 1e-9, f"single-branch closed form, rel err = {err:.3e}"


def cmd_check(args) -> int:
    checks = [
        ("duality (||p||_1 = ||q||_1, equal levels)",
         lambda: _check_duality(args.fault)),
        ("balancing (equal achieved/target ratios)", _check_balancing),
        ("arcsine law (Monte-Carlo quantizer covariance)", _check_arcsine),
        ("scalar chain (closed-form SQINR)", _check_scalar_chain),
    ]
    failures = 0
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as exc:  # noqa: BLE001 - fault injection must surface
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        print(f"{'PASS' if ok else 'FAIL'}  {name}  [{detail}]")
        failures += 0 if ok else 1
    if failures:
        print(f"{failures} check(s) failed")
        return 1
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onebit-mubf",
        description="1-bit multi-user downlink beamforming experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--jobs", type=int, default=None)
    p_run.add_argument("--force", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_repro = sub.add_parser("repro", help="regenerate a figure's CSV")
    p_repro.add_argument("figure", choices=FIGURES)
    p_repro.add_argument("--scale", choices=("desk", "full"), default="desk")
    p_repro.add_argument("--out", required=True)
    p_repro.add_argument("--seed", type=int, default=None)
    p_repro.add_argument("--jobs", type=int, default=None)
    p_repro.add_argument("--force", action="store_true")
    p_repro.set_defaults(func=cmd_repro)

    p_check = sub.add_parser("check", help="run the invariant checks")
    p_check.add_argument("--fault", choices=("psi-sign",), default=None,
                         help=argparse.SUPPRESS)
    p_check.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OneBitError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
