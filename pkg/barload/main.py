"""Command-line entry point: scan | load | tensor | validate."""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import config
from .errors import (
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    EXIT_RESOURCE_REFUSED,
    EXIT_VALIDATION_FAILED,
    BarloadError,
    ConfigError,
    InvalidArgumentError,
    ResourceLimitError,
    SchemaVersionError,
)
from .models import RunConfig, load_config
from .output import TableWriter, read_table, write_table
from .physics.cache import write_cache
from .physics.engine import build_machinery, build_tensor, scan_cell
from .physics.loading import run_loading
from .validation import run_validation

logger = logging.getLogger(__name__)

SCAN_COLUMNS = ["t_e", "t_g", "n_prime_minus_n", "stderr", "p_plus", "p_zero", "interference", "valid", "reason"]
LOAD_COLUMNS = ["step", "n_atoms", "fraction", "stderr", "t_g", "t_e", "valid"]
TENSOR_COLUMNS = ["nx", "ny", "nz", "completeness", "max_abs_imag", "psd_min_eigenvalue"]
VALIDATE_COLUMNS = ["check", "passed", "detail"]


def _output_path(cfg: RunConfig, command: str) -> Path:
    return Path(cfg.run.out) if cfg.run.out else config.OUTPUT_DIR / f"{command}.csv"


def _completed_scan_rows(path: Path, echo: str, seed: int, row_width: int) -> int:
    """Grid rows already on disk for this exact config, or 0 when the file must be rewritten."""
    if not path.is_file():
        return 0
    try:
        table = read_table(path)
    except SchemaVersionError:
        logger.warning("checkpoint %s is unreadable; starting over", path)
        return 0
    if table.kind != "scan" or table.echo.strip() != echo.strip() or table.seed != seed:
        logger.warning("checkpoint %s was written for another config; starting over", path)
        return 0
    done, partial = divmod(len(table.rows), row_width)
    if partial:
        lines = path.read_text(encoding="utf-8").splitlines(keepends=True)
        path.write_text("".join(lines[: len(lines) - partial]), encoding="utf-8")
        logger.info("dropped %d cells of an unfinished grid row", partial)
    return done


def cmd_scan(cfg: RunConfig) -> int:
    spec = cfg.trap.to_spec()
    alpha, status = build_tensor(spec, cfg.numerics, cfg.run.budget_gib, cfg.run.threads)
    logger.info("alpha tensor (%s)", status)
    machinery = build_machinery(alpha, spec, cfg.numerics)

    t_g_grid = cfg.scan.t_g_grid()
    echo = cfg.to_yaml()
    out = _output_path(cfg, "scan")
    done = _completed_scan_rows(out, echo, cfg.run.seed, len(t_g_grid))
    if done:
        logger.info("resuming scan at grid row %d of %d", done + 1, len(cfg.scan.t_e))

    samples = cfg.scan.samples
    with TableWriter(out, "scan", SCAN_COLUMNS, echo, cfg.run.seed, append=done > 0) as writer:
        for row_index in range(done, len(cfg.scan.t_e)):
            t_e = cfg.scan.t_e[row_index]

            def cell(col: int):
                index = row_index * len(t_g_grid) + col
                return scan_cell(
                    machinery, t_e, t_g_grid[col], samples, cfg.run.seed + index * samples,
                    threshold=cfg.validity.threshold, margin=cfg.validity.margin,
                )

            with ThreadPoolExecutor(max_workers=cfg.run.threads) as pool:
                outcomes = list(pool.map(cell, range(len(t_g_grid))))
            for t_g, o in zip(t_g_grid, outcomes):
                writer.write([
                    float(t_e), float(t_g), o.n_prime_minus_n, o.n_prime_minus_n_stderr,
                    o.p_plus, o.p_zero, o.interference, o.validity.valid, o.validity.reason,
                ])
            logger.info("scan row %d/%d done (T_e=%g)", row_index + 1, len(cfg.scan.t_e), t_e)
    logger.info("wrote %s", out)
    return EXIT_OK


def cmd_load(cfg: RunConfig) -> int:
    spec = cfg.trap.to_spec()
    ld = cfg.loading
    out = _output_path(cfg, "load")
    if ld.steps == 0:
        write_table(out, "load", LOAD_COLUMNS, [], cfg.to_yaml(), cfg.run.seed)
        return EXIT_OK
    alpha, status = build_tensor(spec, cfg.numerics, cfg.run.budget_gib, cfg.run.threads)
    logger.info("alpha tensor (%s)", status)
    trajectory = run_loading(
        spec,
        alpha,
        ld.t_e_schedule if ld.t_e_schedule is not None else ld.t_e,
        ld.initial_fraction,
        ld.steps,
        samples_per_step=ld.samples_per_step,
        rng_seed=cfg.run.seed,
        threads=cfg.run.threads,
        include_excited_energies=cfg.numerics.include_excited_energies,
        first_order=cfg.numerics.first_order,
        zero_probabilities=ld.zero_probabilities,
        threshold=cfg.validity.threshold,
        margin=cfg.validity.margin,
    )
    rows = [
        [s.step, s.n_atoms, s.fraction, s.fraction_stderr, s.t_g, s.t_e, s.validity.valid]
        for s in trajectory.steps
    ]
    write_table(out, "load", LOAD_COLUMNS, rows, cfg.to_yaml(), cfg.run.seed)
    logger.info("wrote %s", out)
    return EXIT_OK


def cmd_tensor(cfg: RunConfig) -> int:
    spec = cfg.trap.to_spec()
    alpha, status = build_tensor(spec, cfg.numerics, cfg.run.budget_gib, cfg.run.threads)
    out = _output_path(cfg, "tensor")
    cache = Path(cfg.numerics.cache) if cfg.numerics.cache else out.with_suffix(".alpha")
    if status == "nocache":
        write_cache(alpha, cache)

    psd_min = float(np.linalg.eigvalsh(alpha.real).min())
    comp = alpha.completeness()
    imag = np.abs(alpha.imag).reshape(alpha.n_excited, alpha.n_ground, -1).max(axis=(1, 2))
    rows = [
        [m.nx, m.ny, m.nz, float(comp[l]), float(imag[l]), psd_min] for l, m in enumerate(alpha.excited)
    ]
    write_table(out, "tensor", TENSOR_COLUMNS, rows, cfg.to_yaml(), cfg.run.seed)
    logger.info("wrote %s and cache %s", out, cache)
    return EXIT_OK


def cmd_validate(cfg: RunConfig) -> int:
    report = run_validation(cfg)
    rows = [[c.name, c.passed, c.detail] for c in report.checks]
    write_table(_output_path(cfg, "validate"), "validate", VALIDATE_COLUMNS, rows, cfg.to_yaml(), cfg.run.seed)
    for c in report.failures:
        logger.error("check %s failed: %s", c.name, c.detail)
    return EXIT_OK if report.passed else EXIT_VALIDATION_FAILED


COMMANDS = {"scan": cmd_scan, "load": cmd_load, "tensor": cmd_tensor, "validate": cmd_validate}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="barload",
        description="Condensate loading by spontaneous emission with reabsorption",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="YAML config, or a CSV produced by a previous run")
    parser.add_argument("--out", help="output CSV path")
    parser.add_argument("--seed", type=int, help="base RNG seed")
    parser.add_argument("--threads", type=int, help="worker threads")
    parser.add_argument("--budget-gib", type=float, dest="budget_gib", help="tensor memory budget")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("-q", "--quiet", action="store_true")
    return parser


def _configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose, args.quiet)
    try:
        cfg = load_config(args.config).with_overrides(
            seed=args.seed, threads=args.threads, budget_gib=args.budget_gib, out=args.out
        )
        return COMMANDS[args.command](cfg)
    except (ConfigError, InvalidArgumentError, SchemaVersionError) as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG_ERROR
    except ResourceLimitError as exc:
        logger.error("%s", exc)
        return EXIT_RESOURCE_REFUSED
    except BarloadError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_VALIDATION_FAILED


if __name__ == "__main__":
    sys.exit(main())
