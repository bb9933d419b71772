"""Command-line front end.

Subcommands ``sweep-loss``, ``sweep-delta``, ``fit-modulator`` and
``evaluate-defense`` read an optional ``key = value`` config file (``#``
starts a comment) and write CSV to ``--out`` or stdout.  Flags override the
file.

Exit status: 0 success, 2 configuration error, 3 measurement-data error,
4 no positive key rate anywhere in the sweep, 5 internal consistency check
failed.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .channel import ChannelParams
from .core import Decibel, DomainError, transmittance_to_db
from .countermeasures import (
    DefenseStack,
    MonitorPosition,
    minimum_defense_db,
    monitor_detects,
    power_at_modulator,
    residual_attack_strength,
)
from .decoy import delta_loss_to_k, evaluate_scenarios
from .modulator import (
    FitError,
    IngestError,
    SeriesPhase,
    base_sample_id,
    check_replicates,
    fit_model,
    ingest_series,
    load_published_dataset,
)
from .optimizer import OptimizationConfig, optimize_intensities

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NO_KEY, EXIT_INTERNAL = 0, 2, 3, 4, 5

SWEEP_LOSS_HEADER = ("total_loss_db", "delta_loss_db", "mu_s", "nu_1",
                     "r_baseline", "r_unaware", "r_secure", "r_secure_floored")
SWEEP_DELTA_HEADER = ("delta_loss_db", "k", "r_baseline", "r_unaware", "r_secure", "r_secure_floored")
FIT_HEADER = ("sample_id", "kind", "delta_loss_max_db", "p0_uW", "recovery_tau_s",
              "rms_residual_db", "validation_flags")
DEFENSE_HEADER = ("injected_uW", "defense_total_db", "power_at_modulator_uW",
                  "residual_delta_loss_db", "monitor_detected")


class ConfigError(ValueError):
    pass


class ConsistencyError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a CLI run needs.  Field names double as config-file keys."""

    mode: str = "sweep-delta"
    # channel
    link_loss_db: float | None = None
    total_loss_db: float = 12.22
    detector_efficiency: float = 0.6
    y0: float = 2.6e-5
    e_d: float = 0.01
    f_e: float = 1.12
    e_0: float = 0.5
    # total-loss sweep
    loss_min_db: float = 2.0
    loss_max_db: float = 40.0
    loss_step_db: float = 0.5
    # attack; delta_loss_db pins a single value (or a list for sweep-loss)
    delta_loss_db: tuple[float, ...] | None = None
    delta_min_db: float = 0.0
    delta_max_db: float = 6.0
    delta_step_db: float = 0.1
    sweep_loss_deltas_db: tuple[float, ...] = (0.0, 1.0, 3.0)
    # optimizer
    mu_min: float = 0.05
    mu_max: float = 1.0
    nu1_min: float = 0.005
    nu1_max: float = 0.5
    coarse_grid: int = 64
    refine_iterations: int = 4
    refine_shrink: float = 0.25
    # modulator data and defences
    data: str | None = None
    model_sample: str = "PM-5"
    injected_uw: tuple[float, ...] = tuple(float(p) for p in range(0, 2001, 200))
    isolator_db: float = 0.0
    filter_db: float = 0.0
    monitor_threshold_uw: float = 1.0
    monitor_noise_floor_uw: float = 0.0
    monitor_position: str = "before_defenses"
    budget_db: float = 0.1
    # output
    out: str | None = None
    workers: int = 1

    def channel(self, total_loss_db: float | None = None) -> ChannelParams:
        kw = dict(
            background_rate=self.y0, misalignment_error=self.e_d,
            error_correction_efficiency=self.f_e, background_error=self.e_0,
        )
        if total_loss_db is None and self.link_loss_db is not None:
            return ChannelParams(Decibel(self.link_loss_db), detector_efficiency=self.detector_efficiency, **kw)
        total = self.total_loss_db if total_loss_db is None else total_loss_db
        return ChannelParams.from_total_loss(Decibel(total), detector_efficiency=self.detector_efficiency, **kw)

    def optimization(self) -> OptimizationConfig:
        return OptimizationConfig(
            mu_range=(self.mu_min, self.mu_max), nu1_range=(self.nu1_min, self.nu1_max),
            coarse_grid=self.coarse_grid, refine_iterations=self.refine_iterations,
            refine_shrink=self.refine_shrink,
        )

    def defense_stack(self) -> DefenseStack:
        return DefenseStack(Decibel(self.isolator_db), Decibel(self.filter_db),
                            self.monitor_threshold_uw, self.monitor_noise_floor_uw)


_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


def _convert(key: str, raw: str):
    typ = _FIELD_TYPES[key]
    raw = raw.strip()
    if "tuple" in typ:
        if raw.lower() in ("", "none"):
            return None if "None" in typ else ()
        return tuple(float(x) for x in raw.split(","))
    if raw.lower() == "none" and "None" in typ:
        return None
    if typ.startswith("int"):
        return int(raw)
    if typ.startswith("float"):
        return float(raw)
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _FIELD_TYPES or key == "mode":
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _convert(key, raw)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
    return values


def build_config(mode: str, path: str | None, overrides: dict) -> ScenarioConfig:
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        values.update(parse_config_text(text, path))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ScenarioConfig(mode=mode, **values)


def _grid(lo: float, hi: float, step: float, name: str) -> np.ndarray:
    if step <= 0 or hi < lo:
        raise ConfigError(f"{name}: need step > 0 and max >= min, got [{lo}, {hi}] step {step}")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(n), 10)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, str):
        return x
    return f"{float(x) + 0.0:.12g}"


def _write_csv(header: Sequence[str], rows: Iterable[Sequence], out: str | None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    if out is None:
        sys.stdout.write(buf.getvalue())
    else:
        Path(out).write_text(buf.getvalue(), encoding="utf-8")


def _parallel_map(fn: Callable, items: list, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))  # map keeps input order


def _check_row(report, intensities, ch, delta: float) -> None:
    k = delta_loss_to_k(Decibel(delta))
    if abs(transmittance_to_db(1.0 / k).value - delta) > 1e-9:
        raise ConsistencyError(f"k <-> dLoss round trip failed at {delta} dB")
    ref = evaluate_scenarios(intensities, ch, Decibel(0.0))
    scale = max(abs(ref.baseline), 1e-300)
    if (abs(ref.unaware_estimate - ref.baseline) > 1e-12 * scale
            or abs(ref.secure - ref.baseline) > 1e-12 * scale
            or report.baseline != ref.baseline):
        raise ConsistencyError(f"no-attack rates disagree at total loss {ch.total_loss}")


def _loss_point(args):
    cfg, total = args
    ch = cfg.channel(total)
    opt = optimize_intensities(ch, cfg.optimization())
    rows = []
    for d in cfg.delta_loss_db or cfg.sweep_loss_deltas_db:
        rep = evaluate_scenarios(opt.intensities, ch, Decibel(d))
        _check_row(rep, opt.intensities, ch, d)
        rows.append((total, d, opt.intensities.mu_s, opt.intensities.nu_1,
                     rep.baseline, rep.unaware_estimate, rep.secure, max(rep.secure, 0.0)))
    return rows


def sweep_loss(cfg: ScenarioConfig) -> list[tuple]:
    """Rows of :data:`SWEEP_LOSS_HEADER` over the total-loss grid."""
    grid = _grid(cfg.loss_min_db, cfg.loss_max_db, cfg.loss_step_db, "loss grid")
    chunks = _parallel_map(_loss_point, [(cfg, float(L)) for L in grid], cfg.workers)
    return [row for chunk in chunks for row in chunk]


def _delta_point(args):
    cfg, intensities, d = args
    ch = cfg.channel()
    rep = evaluate_scenarios(intensities, ch, Decibel(d))
    _check_row(rep, intensities, ch, d)
    return (d, rep.k, rep.baseline, rep.unaware_estimate, rep.secure, max(rep.secure, 0.0))


def sweep_delta(cfg: ScenarioConfig) -> list[tuple]:
    """Rows of :data:`SWEEP_DELTA_HEADER` at fixed total loss, intensities optimized without attack."""
    if cfg.delta_loss_db is not None:
        grid = np.asarray(cfg.delta_loss_db, dtype=float)
    else:
        grid = _grid(cfg.delta_min_db, cfg.delta_max_db, cfg.delta_step_db, "delta grid")
    opt = optimize_intensities(cfg.channel(), cfg.optimization())
    return _parallel_map(_delta_point, [(cfg, opt.intensities, float(d)) for d in grid], cfg.workers)


def _load_series(cfg: ScenarioConfig):
    return load_published_dataset() if cfg.data is None else ingest_series(cfg.data)


def fit_modulator(cfg: ScenarioConfig) -> list[tuple]:
    series = _load_series(cfg)
    recovery = {s.sample_id: s for s in series if s.phase is SeriesPhase.RECOVERY}
    replicate_flags = check_replicates(series)
    rows = []
    for s in series:
        if s.phase is not SeriesPhase.ALTERATION:
            continue
        fit = fit_model(s, recovery.get(s.sample_id))
        flags = list(fit.flags) + replicate_flags.get(base_sample_id(s.sample_id), [])
        m = fit.model
        rows.append((s.sample_id, fit.kind.value, m.delta_loss_max.value, m.p0, m.recovery_tau,
                     fit.rms_residual, ";".join(flags)))
    return rows


def evaluate_defense(cfg: ScenarioConfig) -> tuple[list[tuple], dict]:
    series = _load_series(cfg)
    alt = [s for s in series if s.phase is SeriesPhase.ALTERATION and s.sample_id == cfg.model_sample]
    if not alt:
        raise ConfigError(f"model_sample {cfg.model_sample!r} has no alteration series in the data")
    rec = [s for s in series if s.phase is SeriesPhase.RECOVERY and s.sample_id == cfg.model_sample]
    model = fit_model(alt[0], rec[0] if rec else None).model
    stack = cfg.defense_stack()
    try:
        position = MonitorPosition(cfg.monitor_position)
    except ValueError:
        raise ConfigError(f"monitor_position must be one of {[p.value for p in MonitorPosition]}") from None
    rows = []
    for p in cfg.injected_uw:
        rows.append((p, stack.total_db.value, power_at_modulator(p, stack),
                     residual_attack_strength(p, stack, model).value,
                     monitor_detects(p, stack, position)))
    peak = max(cfg.injected_uw) if cfg.injected_uw else 0.0
    need = minimum_defense_db(peak, model, Decibel(cfg.budget_db))
    summary = {"model_sample": cfg.model_sample, "peak_injected_uW": peak,
               "budget_db": cfg.budget_db, "minimum_defense_db": None if need is None else need.value}
    return rows, summary


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lightinject", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("sweep-loss", "sweep-delta", "fit-modulator", "evaluate-defense"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--link-loss-db", type=float)
        sp.add_argument("--delta-loss-db", type=str, help="single value or comma-separated list")
        sp.add_argument("--total-loss-db", type=float)
        sp.add_argument("--data", help="measurement CSV (default: bundled dataset)")
        sp.add_argument("--out", help="output CSV path (default: stdout)")
        sp.add_argument("--workers", type=int)
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        overrides = dict(link_loss_db=args.link_loss_db, total_loss_db=args.total_loss_db,
                         data=args.data, out=args.out, workers=args.workers)
        if args.delta_loss_db is not None:
            overrides["delta_loss_db"] = _convert("delta_loss_db", args.delta_loss_db)
        overrides.update(parse_config_text("\n".join(args.set), "--set"))
        cfg = build_config(args.command, args.config, overrides)
        if args.command == "sweep-loss":
            rows = sweep_loss(cfg)
            _write_csv(SWEEP_LOSS_HEADER, rows, cfg.out)
            if not any(r[4] > 0 for r in rows):
                print("no positive baseline key rate anywhere on the loss grid", file=sys.stderr)
                return EXIT_NO_KEY
        elif args.command == "sweep-delta":
            rows = sweep_delta(cfg)
            _write_csv(SWEEP_DELTA_HEADER, rows, cfg.out)
            if not any(r[2] > 0 for r in rows):
                print("no positive baseline key rate at this total loss", file=sys.stderr)
                return EXIT_NO_KEY
        elif args.command == "fit-modulator":
            rows = fit_modulator(cfg)
            _write_csv(FIT_HEADER, rows, cfg.out)
            for r in rows:
                print(f"{r[0]:8s} {r[1]:9s} dL_max={r[2]:.3f} dB  p0={r[3]:.1f} uW  "
                      f"tau={r[4]:.1f} s  rms={r[5]:.3g} dB  {r[6]}", file=sys.stderr)
        else:
            rows, summary = evaluate_defense(cfg)
            _write_csv(DEFENSE_HEADER, rows, cfg.out)
            need = summary["minimum_defense_db"]
            verdict = ("no finite attenuation keeps the induced loss below the budget"
                       if need is None else f"minimum total attenuation {need:.4g} dB")
            print(f"{summary['model_sample']} at {summary['peak_injected_uW']:g} uW, "
                  f"budget {summary['budget_db']:g} dB: {verdict}", file=sys.stderr)
    except (ConfigError, DomainError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IngestError, FitError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConsistencyError as exc:
        print(f"internal check failed: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
