"""Photorefractive response of LiNbO3 modulators to injected green light.

Loss growth during stepped illumination is described by the saturating
curve ``dL(P) = dL_max * (1 - exp(-P / p0))`` in the injected power ``P``
reached at the end of each fixed-length exposure step.  Recovery under weak
(50 uW) illumination is exponential in time; recovery in the dark is linear
and taken from the single three-day observation per sample.
"""
from __future__ import annotations

import csv
import enum
import io
import math
import os
from collections import defaultdict
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, TextIO

import numpy as np
from scipy.optimize import least_squares

from .core import Decibel, DomainError, require_db

__all__ = [
    "ModulatorKind",
    "SeriesPhase",
    "RecoveryMode",
    "ModulatorRecord",
    "Step",
    "IrradiationSeries",
    "PhotorefractiveModel",
    "ModelFit",
    "IngestError",
    "SchemaError",
    "FitError",
    "PUBLISHED_RECORDS",
    "CSV_HEADER",
    "ingest_series",
    "load_published_dataset",
    "fit_model",
    "fit_recovery_tau",
    "loss_increase",
    "recovery_excess_loss",
    "phase_remap_delta",
    "extinction_penalty",
    "check_replicates",
    "base_sample_id",
    "kind_of",
    "REPLICATE_TOLERANCE_DB",
]

SECONDS_PER_DAY = 86400.0
CSV_HEADER = (
    "sample_id", "phase", "step_index", "injected_power_uW", "exposure_s", "insertion_loss_dB",
)


class ModulatorKind(str, enum.Enum):
    PHASE = "phase"
    INTENSITY = "intensity"


class SeriesPhase(str, enum.Enum):
    ALTERATION = "alteration"
    RECOVERY = "recovery"


class RecoveryMode(str, enum.Enum):
    ILLUMINATED_50UW = "illuminated_50uW"
    DARK = "dark"


# Pointwise agreement expected between repeated tests on one sample.
REPLICATE_TOLERANCE_DB = {ModulatorKind.PHASE: 0.1, ModulatorKind.INTENSITY: 0.02}

# Recovery time constants under 50 uW illumination.  PMs recover within a
# few minutes; the IMs need about an hour (IM-1) and five and a half (IM-2).
DEFAULT_RECOVERY_TAU_S = {ModulatorKind.PHASE: 45.0, ModulatorKind.INTENSITY: 900.0}
SAMPLE_RECOVERY_TAU_S = {"IM-1": 900.0, "IM-2": 4500.0}


@dataclass(frozen=True)
class ModulatorRecord:
    id: str
    kind: ModulatorKind
    vpi_before: float
    vpi_after: float
    vpi_recovered: float
    max_delta_loss: Decibel
    extinction_before: Decibel | None = None
    extinction_after: Decibel | None = None
    natural_recovery_3day: Decibel | None = None
    manufacturer: str = ""
    waveguide_process: str = ""
    doping: str = ""

    def __post_init__(self) -> None:
        require_db(self.max_delta_loss, "max_delta_loss")
        has_er = self.extinction_before is not None and self.extinction_after is not None
        if (self.kind is ModulatorKind.INTENSITY) != has_er:
            raise ValueError(f"{self.id}: extinction ratios are required for, and only for, intensity modulators")
        if any(v <= 0 for v in (self.vpi_before, self.vpi_after, self.vpi_recovered)):
            raise DomainError(f"{self.id}: half-wave voltages must be positive")

    @property
    def delta_vpi(self) -> float:
        return self.vpi_after - self.vpi_before


def _pm(id, vb, va, vr, dl, nat, manu, wg, dop):
    return ModulatorRecord(id, ModulatorKind.PHASE, vb, va, vr, Decibel(dl),
                           natural_recovery_3day=Decibel(nat),
                           manufacturer=manu, waveguide_process=wg, doping=dop)


def _im(id, vb, va, vr, dl, erb, era, manu, wg, dop):
    return ModulatorRecord(id, ModulatorKind.INTENSITY, vb, va, vr, Decibel(dl),
                           Decibel(erb), Decibel(era),
                           manufacturer=manu, waveguide_process=wg, doping=dop)


PUBLISHED_RECORDS: dict[str, ModulatorRecord] = {
    r.id: r
    for r in (
        _pm("PM-1", 4.04, 5.57, 4.03, 7.19, 1.56, "Conquer", "Ti diffusion", "Undoped"),
        _pm("PM-2", 3.90, 4.06, 3.91, 0.75, 0.08, "Conquer", "Ti diffusion", "Undoped"),
        _pm("PM-3", 4.68, 5.10, 4.70, 0.91, 0.17, "Ixblue", "Unspecified", "MgO"),
        _pm("PM-4", 2.79, 2.79, 2.78, 0.50, 0.11, "Eospace", "Unspecified", "Unspecified"),
        _pm("PM-5", 3.99, 6.80, 4.00, 19.53, 3.50, "Conquer", "Ti diffusion", "Undoped"),
        _im("IM-1", 5.00, 5.06, 5.06, 0.39, 44.39, 23.16, "Conquer", "Proton exchange", "Undoped"),
        _im("IM-2", 4.04, 4.11, 4.04, 1.31, 24.27, 17.77, "Eospace", "Unspecified", "Unspecified"),
    )
}


def base_sample_id(sample_id: str) -> str:
    """``"PM-5/3"`` (third repeated test of PM-5) -> ``"PM-5"``."""
    return sample_id.split("/", 1)[0]


def kind_of(sample_id: str) -> ModulatorKind:
    base = base_sample_id(sample_id)
    if base in PUBLISHED_RECORDS:
        return PUBLISHED_RECORDS[base].kind
    prefix = base[:2].upper()
    if prefix == "PM":
        return ModulatorKind.PHASE
    if prefix == "IM":
        return ModulatorKind.INTENSITY
    raise ValueError(f"cannot infer modulator kind from sample id {sample_id!r}")


@dataclass(frozen=True)
class Step:
    injected_power: float  # uW
    exposure: float  # s
    insertion_loss: Decibel
    line: int = 0


@dataclass(frozen=True)
class IrradiationSeries:
    sample_id: str
    phase: SeriesPhase
    steps: tuple[Step, ...]

    def __post_init__(self) -> None:
        if not self.steps:
            raise ValueError(f"{self.sample_id}: series has no steps")

    @property
    def powers(self) -> np.ndarray:
        return np.array([s.injected_power for s in self.steps])

    @property
    def losses(self) -> np.ndarray:
        return np.array([s.insertion_loss.value for s in self.steps])

    @property
    def elapsed(self) -> np.ndarray:
        """Time at the end of each step, counted from the start of the series."""
        return np.cumsum([s.exposure for s in self.steps])


@dataclass(frozen=True)
class PhotorefractiveModel:
    delta_loss_max: Decibel
    p0: float  # uW
    recovery_tau: float  # s, under 50 uW illumination
    dark_relaxation_per_day: Decibel | None = None

    def __post_init__(self) -> None:
        require_db(self.delta_loss_max, "delta_loss_max")
        if not (self.delta_loss_max.value > 0 and self.p0 > 0 and self.recovery_tau > 0):
            raise DomainError("model parameters must be positive")
        if self.dark_relaxation_per_day is not None and not self.dark_relaxation_per_day.value > 0:
            raise DomainError("dark relaxation rate must be positive")


@dataclass(frozen=True)
class ModelFit:
    sample_id: str
    kind: ModulatorKind
    model: PhotorefractiveModel
    residuals: np.ndarray  # model - data at each step, dB
    flags: tuple[str, ...] = ()

    @property
    def rms_residual(self) -> float:
        return float(np.sqrt(np.mean(self.residuals**2)))


class IngestError(ValueError):
    """Invalid measurement file.  ``issues`` holds ``(line, category, message)``."""

    def __init__(self, issues: list[tuple[int, str, str]]):
        self.issues = issues
        super().__init__("\n".join(f"line {ln}: {cat} error: {msg}" for ln, cat, msg in issues))


class SchemaError(IngestError):
    pass


class FitError(ValueError):
    pass


def _open(source) -> tuple[TextIO, bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline="", encoding="utf-8"), True
    return source, False


def ingest_series(source: str | os.PathLike | TextIO) -> list[IrradiationSeries]:
    """Parse and validate a measurement CSV into series, one per (sample, phase).

    Lines starting with ``#`` and blank lines are ignored.  All row-level
    problems are collected and raised together as an :class:`IngestError`.
    """
    fh, close = _open(source)
    try:
        rows = [(i, line) for i, line in enumerate(fh, start=1)
                if line.strip() and not line.lstrip().startswith("#")]
    finally:
        if close:
            fh.close()
    if not rows:
        raise SchemaError([(0, "schema", "file has no header")])
    header_line, header = rows[0]
    cols = [c.strip() for c in next(csv.reader([header]))]
    if tuple(cols) != CSV_HEADER:
        raise SchemaError([(header_line, "schema", f"expected header {','.join(CSV_HEADER)}, got {header.strip()}")])

    issues: list[tuple[int, str, str]] = []
    grouped: dict[tuple[str, SeriesPhase], list[tuple[int, int, Step]]] = defaultdict(list)
    for ln, line in rows[1:]:
        fields = [f.strip() for f in next(csv.reader([line]))]
        if len(fields) != len(CSV_HEADER):
            issues.append((ln, "schema", f"expected {len(CSV_HEADER)} columns, got {len(fields)}"))
            continue
        sid, phase, idx, power, exposure, loss = fields
        try:
            ph = SeriesPhase(phase)
        except ValueError:
            issues.append((ln, "schema", f"unknown phase {phase!r}"))
            continue
        try:
            idx_i = int(idx)
            p, t, l = float(power), float(exposure), float(loss)
        except ValueError as exc:
            issues.append((ln, "value", str(exc)))
            continue
        bad = [n for n, v in (("injected_power_uW", p), ("exposure_s", t), ("insertion_loss_dB", l))
               if not math.isfinite(v) or v < 0]
        if bad:
            issues.append((ln, "value", f"negative or non-finite {', '.join(bad)}"))
            continue
        if not sid:
            issues.append((ln, "schema", "empty sample_id"))
            continue
        grouped[(sid, ph)].append((ln, idx_i, Step(p, t, Decibel(l), ln)))

    series = []
    for (sid, ph), items in grouped.items():
        for (ln0, i0, s0), (ln1, i1, s1) in zip(items, items[1:]):
            if i1 <= i0:
                issues.append((ln1, "monotonicity", f"{sid} {ph.value}: step_index {i1} does not follow {i0}"))
            if ph is SeriesPhase.ALTERATION and s1.injected_power < s0.injected_power:
                issues.append((ln1, "monotonicity",
                               f"{sid}: injected power drops from {s0.injected_power} to {s1.injected_power} uW"))
        if items[0][1] != 0:
            issues.append((items[0][0], "schema", f"{sid} {ph.value}: step_index must start at 0"))
        series.append(IrradiationSeries(sid, ph, tuple(s for _, _, s in items)))
    if issues:
        raise IngestError(sorted(issues))
    return series


def load_published_dataset() -> list[IrradiationSeries]:
    """Series bundled with the package (published endpoints plus interpolated steps)."""
    text = resources.files("lightinject").joinpath("data/published_modulators.csv").read_text("utf-8")
    return ingest_series(io.StringIO(text))


def _saturating(p, amp, p0):
    return amp * -np.expm1(-np.asarray(p, dtype=float) / p0)


def fit_model(series: IrradiationSeries, recovery: IrradiationSeries | None = None) -> ModelFit:
    """Least-squares fit of the saturating loss curve, pinned to the last step.

    The amplitude is tied to ``p0`` so that the curve passes exactly through
    the final (highest-power) measurement; ``p0`` is searched between a
    thousandth of the smallest non-zero power and the largest applied power.
    A ``p0`` on either bound means the data do not resolve the saturation
    scale and is reported in ``flags``.
    """
    if series.phase is not SeriesPhase.ALTERATION:
        raise FitError(f"{series.sample_id}: loss curve needs an alteration series")
    P, L = series.powers, series.losses
    if len(np.unique(P)) < 3:
        raise FitError(f"{series.sample_id}: need at least 3 distinct powers, got {len(np.unique(P))}")
    if np.ptp(L) == 0:
        raise FitError(f"{series.sample_id}: loss is constant, saturation curve is undetermined")
    p_end, l_end = P[-1], L[-1]
    if not l_end > 0:
        raise FitError(f"{series.sample_id}: final loss increase must be positive")

    def amp(logp0):
        return l_end / -math.expm1(-p_end / math.exp(logp0))

    def resid(x):
        return _saturating(P, amp(x[0]), math.exp(x[0])) - L

    lo, hi = math.log(1e-3 * P[P > 0].min()), math.log(P.max())
    scan = np.linspace(lo, hi, 200)
    x0 = scan[np.argmin([np.sum(resid([s]) ** 2) for s in scan])]
    sol = least_squares(resid, [x0], bounds=([lo], [hi]), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    logp0 = float(sol.x[0])
    flags = []
    if hi - logp0 < 1e-6:
        flags.append("p0_at_upper_bound")
    if logp0 - lo < 1e-6:
        flags.append("p0_at_lower_bound")

    kind = kind_of(series.sample_id)
    base = base_sample_id(series.sample_id)
    if recovery is not None:
        tau = fit_recovery_tau(recovery)
    else:
        tau = SAMPLE_RECOVERY_TAU_S.get(base, DEFAULT_RECOVERY_TAU_S[kind])
        flags.append("recovery_tau_default")
    rec = PUBLISHED_RECORDS.get(base)
    dark = None
    if rec is not None and rec.natural_recovery_3day is not None:
        dark = Decibel(rec.natural_recovery_3day.value / 3.0)
    model = PhotorefractiveModel(Decibel(amp(logp0)), math.exp(logp0), tau, dark)
    return ModelFit(series.sample_id, kind, model, resid([logp0]), tuple(flags))


def fit_recovery_tau(series: IrradiationSeries) -> float:
    """Time constant of ``L0 * exp(-t / tau)`` fitted to a recovery series.

    ``t`` is the elapsed time at the end of each step, so a first row with
    zero exposure anchors the starting excess.
    """
    if series.phase is not SeriesPhase.RECOVERY:
        raise FitError(f"{series.sample_id}: expected a recovery series")
    t, L = series.elapsed, series.losses
    if len(t) < 2 or np.ptp(L) == 0 or L.max() <= 0:
        raise FitError(f"{series.sample_id}: recovery series does not decay")
    span = max(t.max(), 1.0)
    # initial guess from the time to fall below 1/e of the first value
    below = np.nonzero(L <= L[0] / math.e)[0]
    tau0 = t[below[0]] if below.size and t[below[0]] > 0 else span

    def resid(x):
        return x[0] * np.exp(-t / math.exp(x[1])) - L

    sol = least_squares(resid, [L[0], math.log(tau0)],
                        bounds=([0.0, math.log(1e-3 * span)], [np.inf, math.log(1e3 * span)]))
    return float(math.exp(sol.x[1]))


def loss_increase(model: PhotorefractiveModel, power: float) -> Decibel:
    if power < 0:
        raise DomainError(f"power must be non-negative, got {power}")
    return Decibel(float(_saturating(power, model.delta_loss_max.value, model.p0)))


def recovery_excess_loss(
    model: PhotorefractiveModel,
    initial_excess: Decibel,
    elapsed: float,
    mode: RecoveryMode = RecoveryMode.ILLUMINATED_50UW,
) -> Decibel:
    """Excess insertion loss left ``elapsed`` seconds into recovery."""
    initial_excess = require_db(initial_excess, "initial_excess")
    if initial_excess.value < 0 or elapsed < 0:
        raise DomainError("initial excess and elapsed time must be non-negative")
    mode = RecoveryMode(mode)
    if mode is RecoveryMode.ILLUMINATED_50UW:
        return Decibel(initial_excess.value * math.exp(-elapsed / model.recovery_tau))
    if model.dark_relaxation_per_day is None:
        raise DomainError("model has no dark relaxation rate")
    days = elapsed / SECONDS_PER_DAY
    return Decibel(max(0.0, initial_excess.value - model.dark_relaxation_per_day.value * days))


def phase_remap_delta(vpi_before: float, vpi_after: float) -> float:
    """Encoded phase span after the half-wave voltage moves, ``pi * Vb / Va``."""
    if vpi_before <= 0 or vpi_after <= 0:
        raise DomainError("half-wave voltages must be positive")
    return math.pi * vpi_before / vpi_after


def extinction_penalty(record: ModulatorRecord) -> Decibel:
    if record.kind is not ModulatorKind.INTENSITY:
        raise ValueError(f"{record.id} is a phase modulator; it has no extinction ratio")
    return record.extinction_before - record.extinction_after


def check_replicates(series: Iterable[IrradiationSeries]) -> dict[str, list[str]]:
    """Flag repeated tests of one sample that disagree beyond the stability bound.

    Series whose ids share a base (``PM-5``, ``PM-5/2``, ...) are compared
    step by step within each phase.  Returns ``{base_id: [flag, ...]}`` for
    samples with at least one violation.
    """
    groups: dict[tuple[str, SeriesPhase], list[IrradiationSeries]] = defaultdict(list)
    for s in series:
        groups[(base_sample_id(s.sample_id), s.phase)].append(s)
    flags: dict[str, list[str]] = {}
    for (base, phase), reps in groups.items():
        if len(reps) < 2:
            continue
        tol = REPLICATE_TOLERANCE_DB[kind_of(base)]
        n = min(len(r.steps) for r in reps)
        spread = np.ptp(np.array([r.losses[:n] for r in reps]), axis=0)
        for i in np.nonzero(spread > tol + 1e-12)[0]:
            flags.setdefault(base, []).append(
                f"replicate_spread_{phase.value}_step{i}={spread[i]:.3g}dB>{tol:g}dB"
            )
    return flags
