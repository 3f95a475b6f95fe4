"""Command-line runner: ``editts synth | edit-pitch | edit-content | sweep``.

Exit codes: 0 on success, 2 on configuration or validation errors, 1 on
anything unexpected.
"""

from __future__ import annotations

import argparse
import logging
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from functools import partial
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .config import RunConfig, load_config, with_overrides
from .diffusion import make_rng, reverse_integrate, sample_prior
from .edit import apply_mel_shift, content_replace_edit, draw_content_noise, naive_concat, pitch_shift_edit
from .errors import EdittsError
from .export import export_pgm, write_manifest
from .grid import PitchKernel, write_grid
from .metrics import (
    CONTENT_COLUMNS,
    PITCH_COLUMNS,
    EditReport,
    juncture_discontinuity,
    pitch_report,
    write_csv,
)
from .oracle import GaussianMixtureDataModel, analytic_score, default_data_model, make_toy_prior

log = logging.getLogger("editts")

SWEEP_KERNELS = ("aggressive-down", "down", "up", "aggressive-up")


def data_model(cfg: RunConfig, mu: np.ndarray) -> GaussianMixtureDataModel:
    m = cfg.model
    return default_data_model(mu, m.components, m.sigma, m.stripe_amplitude, m.stripe_period)


def _map_trials(fn: Callable, cfg: RunConfig) -> list:
    """Run ``fn(cfg, seed)`` for every seed; results come back in seed order."""
    if cfg.jobs == 1 or cfg.trials == 1:
        return [fn(cfg, s) for s in cfg.seeds]
    with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(partial(fn, cfg), cfg.seeds))


def _common_manifest(cfg: RunConfig, command: str) -> dict:
    return {
        "command": command,
        "editts_version": __version__,
        "config_sha256": cfg.config_hash(),
        "base_seed": cfg.seed,
        "trials": cfg.trials,
        "schedule": f"beta0={cfg.schedule.beta0!r} beta1={cfg.schedule.beta1!r} steps={cfg.schedule.steps}",
    }


def _prepare_out(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config_used.ini").write_text(cfg.to_ini(), encoding="utf-8")
    return out


# -- synth ---------------------------------------------------------------------


def cmd_synth(cfg: RunConfig) -> Path:
    out = _prepare_out(cfg)
    mu = make_toy_prior(cfg.prior)
    provider = analytic_score(data_model(cfg, mu), cfg.schedule)
    x = reverse_integrate(cfg.schedule, mu, sample_prior(mu, make_rng(cfg.seed)), provider)
    write_grid(out / "prior.grid", mu)
    write_grid(out / "synth.grid", x)
    export_pgm(x, out / "synth.pgm")
    manifest = _common_manifest(cfg, "synth")
    manifest["files"] = "prior.grid synth.grid synth.pgm"
    write_manifest(out / "manifest.txt", manifest)
    log.info("wrote %s", out)
    return out


# -- pitch ---------------------------------------------------------------------


def pitch_trial(cfg: RunConfig, seed: int) -> tuple[EditReport, dict[str, np.ndarray]]:
    mu = make_toy_prior(cfg.prior)
    model = data_model(cfg, mu)
    provider = analytic_score(model, cfg.schedule)
    spec = cfg.edit_spec
    result = pitch_shift_edit(mu, spec, cfg.kernel_arg, cfg.schedule, provider, seed)
    # same noise draw as x_plain, so this is exactly the mel-shift ablation output
    melshift = apply_mel_shift(result.x_plain, spec, cfg.kernel_arg)
    report = pitch_report(result, melshift, model.with_mean(result.mu_edit), cfg.schedule, cfg.kernel_label)
    grids = {"mu_edit": result.mu_edit, "x_plain": result.x_plain, "x_edit": result.x_edit, "melshift": melshift}
    return report, grids


def _write_trial_grids(out: Path, seed: int, grids: dict[str, np.ndarray], pgm: Sequence[str]) -> None:
    trial_dir = out / "trials" / f"seed_{seed}"
    trial_dir.mkdir(parents=True, exist_ok=True)
    for name, grid in grids.items():
        write_grid(trial_dir / f"{name}.grid", grid)
        if name in pgm:
            export_pgm(grid, trial_dir / f"{name}.pgm")


def cmd_edit_pitch(cfg: RunConfig, csv_name: str = "pitch_report.csv") -> list[EditReport]:
    if not cfg.regions:
        raise EdittsError("edit-pitch needs at least one edit region")
    out = _prepare_out(cfg)
    trials = _map_trials(pitch_trial, cfg)
    reports = [r for r, _ in trials]
    if cfg.save_grids:
        write_grid(out / "prior.grid", make_toy_prior(cfg.prior))
        for report, grids in trials:
            _write_trial_grids(out, report.seed, grids, pgm=("x_edit",))
    rows = sorted((row for r in reports for row in r.rows()), key=lambda r: (r["seed"], r["region_start"]))
    write_csv(out / csv_name, rows, PITCH_COLUMNS)
    manifest = _common_manifest(cfg, "edit-pitch")
    manifest.update(
        kernel=cfg.kernel_label,
        regions=" ".join(f"{s}:{e}" for s, e in cfg.regions),
        ramp_g=cfg.ramp_g,
        report=csv_name,
    )
    write_manifest(out / csv_name.replace(".csv", ".manifest.txt"), manifest)
    deltas = [row["centroid_delta"] for row in rows]
    log.info(
        "%s: %d rows, median centroid delta %.4f, max leakage %r",
        csv_name,
        len(rows),
        statistics.median(deltas),
        max(r.leakage for r in reports),
    )
    return reports


def cmd_sweep(cfg: RunConfig) -> list[dict]:
    """Run the four named kernels and summarise the shift magnitudes."""
    out = _prepare_out(cfg)
    medians: dict[str, float] = {}
    summary = []
    for name in SWEEP_KERNELS:
        sub = replace(cfg, kernels=(PitchKernel.named(name),), save_grids=False)
        reports = cmd_edit_pitch(sub, csv_name=f"pitch_report_{name}.csv")
        deltas = [d for r in reports for d in r.centroid_deltas]
        medians[name] = statistics.median(deltas)
        summary.append(
            {
                "kernel": name,
                "trials": len(reports),
                "median_centroid_delta": medians[name],
                "max_leakage": max(r.leakage for r in reports),
                "nll_win_fraction": sum(r.nll_editts <= r.nll_melshift for r in reports) / len(reports),
            }
        )
    for row in summary:
        base = row["kernel"].replace("aggressive-", "")
        row["ratio_to_default"] = medians[row["kernel"]] / medians[base] if medians[base] else float("nan")
    columns = ("kernel", "trials", "median_centroid_delta", "ratio_to_default", "max_leakage", "nll_win_fraction")
    write_csv(out / "sweep_summary.csv", summary, columns)
    (out / "config_used.ini").write_text(cfg.to_ini(), encoding="utf-8")
    for row in summary:
        print(f"{row['kernel']:>16s}  median delta {row['median_centroid_delta']:+.4f}  "
              f"ratio {row['ratio_to_default']:.3f}")
    return summary


# -- content -------------------------------------------------------------------


def content_trial(cfg: RunConfig, seed: int) -> tuple[dict, dict[str, np.ndarray]]:
    mu_src = make_toy_prior(cfg.prior)
    mu_trg = make_toy_prior(cfg.target)
    provider = analytic_score(data_model(cfg, mu_src), cfg.schedule)
    # the same utterance on both sides means one noise draw
    same = mu_src.shape == mu_trg.shape and np.array_equal(mu_src, mu_trg)
    eps_src, eps_trg = draw_content_noise(make_rng(seed), mu_src.shape[0], mu_src.shape[1], mu_trg.shape[1], same)
    res = content_replace_edit(
        mu_src,
        mu_trg,
        cfg.src_gap,
        cfg.trg_chunk,
        cfg.schedule,
        provider,
        seed,
        ramp_g=cfg.ramp_g,
        ramp_c=cfg.ramp_c,
        mask_convention=cfg.alg2_mask_convention,
        noise=(eps_src, eps_trg),
    )
    x_src = reverse_integrate(cfg.schedule, mu_src, mu_src + eps_src, provider)
    naive = naive_concat(x_src, res.x_trg, cfg.src_gap, cfg.trg_chunk)
    n_trg = mu_trg.shape[1]
    row = {
        "seed": seed,
        "src_gap_start": res.src_gap[0],
        "src_gap_end": res.src_gap[1],
        "trg_chunk_start": res.trg_chunk[0],
        "trg_chunk_end": res.trg_chunk[1],
        "dst_start": res.dst_range[0],
        "dst_end": res.dst_range[1],
        "editts_disc": juncture_discontinuity(res.x_edit, res.junctures),
        "naive_disc": juncture_discontinuity(naive, res.junctures),
        "trg_disc": juncture_discontinuity(res.x_trg, [j for j in res.trg_chunk if 0 < j < n_trg]),
    }
    grids = {"mu_edit": res.mu_edit, "x_edit": res.x_edit, "x_trg": res.x_trg, "x_src": x_src, "naive": naive}
    return row, grids


def cmd_edit_content(cfg: RunConfig) -> list[dict]:
    out = _prepare_out(cfg)
    trials = _map_trials(content_trial, cfg)
    rows = sorted((row for row, _ in trials), key=lambda r: r["seed"])
    if cfg.save_grids:
        for row, grids in trials:
            _write_trial_grids(out, row["seed"], grids, pgm=("x_edit", "naive"))
    write_csv(out / "content_report.csv", rows, CONTENT_COLUMNS)
    first = rows[0]
    manifest = _common_manifest(cfg, "edit-content")
    manifest.update(
        src_gap=f"{first['src_gap_start']}:{first['src_gap_end']}",
        trg_chunk=f"{first['trg_chunk_start']}:{first['trg_chunk_end']}",
        dst_range=f"{first['dst_start']}:{first['dst_end']}",
        alg2_mask_convention=cfg.alg2_mask_convention,
        report="content_report.csv",
    )
    write_manifest(out / "content_report.manifest.txt", manifest)
    wins = sum(r["editts_disc"] < r["naive_disc"] for r in rows)
    log.info("content_report.csv: editts smoother than naive splice in %d/%d trials", wins, len(rows))
    return rows


# -- argument parsing ----------------------------------------------------------

COMMANDS = {
    "synth": cmd_synth,
    "edit-pitch": cmd_edit_pitch,
    "edit-content": cmd_edit_content,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="INI config file")
    shared.add_argument("--seed", type=int, help="base seed (trial i uses seed + i)")
    shared.add_argument("--trials", type=int, help="number of seeded trials")
    shared.add_argument("--out", help="output directory (created if missing)")
    shared.add_argument("--beta0", type=float)
    shared.add_argument("--beta1", type=float)
    shared.add_argument("--steps", type=int, help="number of reverse steps T")
    shared.add_argument("--kernel", help="up | down | aggressive-up | aggressive-down | identity | 5 weights")
    shared.add_argument("--jobs", type=int, help="worker processes for trials")
    shared.add_argument("--no-grids", action="store_true", help="skip per-trial grid dumps")
    shared.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="editts", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[shared], help="plain synthesis from the toy prior")
    sub.add_parser("edit-pitch", parents=[shared], help="pitch-shift edit plus mel-shift ablation")
    sub.add_parser("edit-content", parents=[shared], help="content replacement plus naive splice")
    sub.add_parser("sweep", parents=[shared], help="pitch edits over the four named kernels")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    cfg = with_overrides(
        cfg,
        seed=args.seed,
        trials=args.trials,
        out=args.out,
        beta0=args.beta0,
        beta1=args.beta1,
        steps=args.steps,
        kernel=args.kernel,
        jobs=args.jobs,
        save_grids=False if args.no_grids else None,
    )
    return cfg.validate()


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = config_from_args(args)
        COMMANDS[args.command](cfg)
    except EdittsError as exc:
        print(f"editts: error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        log.exception("internal error")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
