"""Parameter sweeps, the rate-matched classical comparison and CSV emission.

A sweep runs one session per (value, scenario) grid point and evaluates all
requested detectors on the same noise realization, emitting one CSV row per
(value, scenario, detector).  Per-point substreams are keyed on the value's
bit pattern, so any subset of a grid reproduces the full run exactly, and
rows are written in grid order regardless of worker count.

Wall time is tracked on each row for logging but never written to the CSV:
output bytes depend only on the experiment definition and the seed.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

from .config import SCENARIOS, apply_scenario
from .params import SystemParams, derive_stats, drif
from .protocol import (
    ProtocolConfig,
    SessionResult,
    run_classical_session,
    run_session,
)
from .rng import value_key

logger = logging.getLogger(__name__)

SWEEP_PARAMETERS = ("n", "beta", "alpha", "gamma", "rate")
SWEEP_DETECTORS = ("ml", "simple", "optimum")

# substream tags keep the harness streams disjoint from ad-hoc session keys
_TAG_SWEEP = 0x51
_TAG_RH_COMPARE = 0x52
_TAG_CLASSICAL = 0x53

_MIN_BITS_FOR_CI = 1_000
_MIN_ERRORS_FOR_CI = 100

Z95 = 1.959963984540054


def binomial_ci95(errors: int, n: int) -> tuple[float, float]:
    """95% interval for an error fraction; Wilson when errors are scarce."""
    if n == 0:
        return 0.0, 1.0
    p = errors / n
    if errors < 30:
        z2 = Z95 * Z95
        denom = 1.0 + z2 / n
        center = (p + z2 / (2.0 * n)) / denom
        half = Z95 * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom
        lo, hi = (0.0 if errors == 0 else center - half), center + half
    else:
        half = Z95 * math.sqrt(p * (1.0 - p) / n)
        lo, hi = p - half, p + half
    return max(0.0, lo), min(1.0, hi)


@dataclass(frozen=True)
class SweepSpec:
    """One figure-style experiment: a parameter grid times scenarios times detectors."""

    swept_parameter: str
    values: tuple[float, ...]
    detectors: tuple[str, ...] = ("optimum",)
    scenarios: tuple[str, ...] = ("good",)
    num_bits: int = 100_000
    master_seed: int = 1

    def __post_init__(self) -> None:
        if self.swept_parameter not in SWEEP_PARAMETERS:
            raise ValueError(
                f"swept_parameter must be one of {SWEEP_PARAMETERS}, got {self.swept_parameter!r}"
            )
        if not self.values:
            raise ValueError("values must be non-empty")
        diffs = [b - a for a, b in zip(self.values, self.values[1:])]
        if not (all(d > 0 for d in diffs) or all(d < 0 for d in diffs)) and len(self.values) > 1:
            raise ValueError("values must be strictly monotone")
        for d in self.detectors:
            if d not in SWEEP_DETECTORS:
                raise ValueError(f"detectors must be among {SWEEP_DETECTORS}, got {d!r}")
        for s in self.scenarios:
            if s not in SCENARIOS:
                raise ValueError(f"scenarios must be among {SCENARIOS}, got {s!r}")
        if self.num_bits < 1:
            raise ValueError("num_bits must be >= 1")
        if self.num_bits < _MIN_BITS_FOR_CI:
            logger.warning(
                "num_bits=%d is below %d; confidence intervals will be unstable",
                self.num_bits,
                _MIN_BITS_FOR_CI,
            )


@dataclass(frozen=True)
class ResultRow:
    """One CSV row of a sweep or comparison."""

    scheme: str
    swept_parameter: str
    value: float
    scenario: str
    detector: str
    alpha: float
    beta: float
    gamma: float
    m_l: float
    samples: int
    chips_per_bit: int
    num_bits: int
    seed: int
    total_units: int
    kept_units: int
    errors: int
    bep: float
    bep_ci_lo: float
    bep_ci_hi: float
    discard_fraction: float
    eve_accuracy: float
    drif: float
    wall_time: float  # seconds; logged, never serialized


CSV_COLUMNS = (
    "scheme",
    "swept_parameter",
    "value",
    "scenario",
    "detector",
    "alpha",
    "beta",
    "gamma",
    "m_l",
    "samples",
    "chips_per_bit",
    "num_bits",
    "seed",
    "total_units",
    "kept_units",
    "errors",
    "bep",
    "bep_ci_lo",
    "bep_ci_hi",
    "discard_fraction",
    "eve_accuracy",
    "drif",
)


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def write_csv(rows, out) -> None:
    """Write rows with the fixed header and column order, 9 significant digits."""
    out.write(",".join(CSV_COLUMNS) + "\n")
    for row in rows:
        out.write(",".join(_fmt(getattr(row, col)) for col in CSV_COLUMNS) + "\n")


def _point_params(base: SystemParams, parameter: str, value: float) -> SystemParams:
    if parameter == "n":
        n = int(round(value))
        if n < 1:
            raise ValueError(f"samples per chip must be >= 1, got {value}")
        return base.replace(samples_per_chip=n)
    if parameter == "rate":
        n = int(round(value * base.chip_duration))
        if n < 1:
            raise ValueError(f"rate {value:g} gives no samples within a chip")
        return base.replace(samples_per_chip=n)
    return base.replace(**{parameter: float(value)})


def _session_rows(
    result: SessionResult,
    scheme: str,
    spec_param: str,
    value: float,
    scenario: str,
    params: SystemParams,
    samples: int,
    num_bits: int,
    seed: int,
    detectors,
    drif_value: float,
    wall_time: float,
) -> list[ResultRow]:
    rows = []
    for name in detectors:
        tally = result.tally(name)
        lo, hi = binomial_ci95(tally.sub_bit_errors, tally.kept_chips)
        if tally.sub_bit_errors < _MIN_ERRORS_FOR_CI:
            logger.warning(
                "%s=%g %s/%s: only %d errors observed; BEP below the Monte Carlo floor",
                spec_param,
                value,
                scenario,
                name,
                tally.sub_bit_errors,
            )
        rows.append(
            ResultRow(
                scheme=scheme,
                swept_parameter=spec_param,
                value=float(value),
                scenario=scenario,
                detector=name,
                alpha=params.alpha,
                beta=params.beta,
                gamma=params.gamma,
                m_l=params.m_l,
                samples=samples,
                chips_per_bit=params.chips_per_bit,
                num_bits=num_bits,
                seed=seed,
                total_units=tally.total_chips,
                kept_units=tally.kept_chips,
                errors=tally.sub_bit_errors,
                bep=tally.bep,
                bep_ci_lo=lo,
                bep_ci_hi=hi,
                discard_fraction=tally.discard_fraction,
                eve_accuracy=tally.eve_correct_fraction,
                drif=drif_value,
                wall_time=wall_time,
            )
        )
    return rows


def run_sweep(
    spec: SweepSpec, base_params: SystemParams, jobs: int = 1, trace=None
) -> list[ResultRow]:
    """Run every grid point of ``spec`` and return rows in grid order.

    ``trace`` (a writable text file) logs every chip and requires a
    single-point grid; it forces serial execution.
    """
    if trace is not None and (len(spec.values) != 1 or len(spec.scenarios) != 1):
        raise ValueError("tracing needs a single grid point (one value, one scenario)")
    rows: list[ResultRow] = []
    for value in spec.values:
        params = _point_params(base_params, spec.swept_parameter, value)
        for scen_idx, scenario in enumerate(spec.scenarios):
            point_params = apply_scenario(params, scenario)
            cfg = ProtocolConfig(
                params=point_params,
                stats=derive_stats(point_params),
                detector=spec.detectors[0],
            )
            started = time.perf_counter()
            result = run_session(
                spec.num_bits,
                cfg,
                seed=spec.master_seed,
                detectors=spec.detectors,
                jobs=jobs,
                point_key=(_TAG_SWEEP, scen_idx, value_key(value)),
                trace=trace,
            )
            elapsed = time.perf_counter() - started
            rows.extend(
                _session_rows(
                    result,
                    scheme="rh",
                    spec_param=spec.swept_parameter,
                    value=value,
                    scenario=scenario,
                    params=point_params,
                    samples=point_params.samples_per_chip,
                    num_bits=spec.num_bits,
                    seed=spec.master_seed,
                    detectors=spec.detectors,
                    drif_value=drif(point_params.chips_per_bit),
                    wall_time=elapsed,
                )
            )
    return rows


def run_compare(
    sampling_rates: tuple[float, ...],
    scenarios: tuple[str, ...],
    num_bits: int,
    master_seed: int,
    base_params: SystemParams,
    detectors: tuple[str, ...] = ("optimum",),
    jobs: int = 1,
) -> list[ResultRow]:
    """Rate-matched comparison: per rate, one classical row plus RH rows.

    The matched condition gives the classical scheme chips_per_bit times
    the per-chip sample count of the hopping scheme, since its decision
    window is the whole bit duration.
    """
    if not sampling_rates:
        raise ValueError("sampling_rates must be non-empty")
    rows: list[ResultRow] = []
    for rate in sampling_rates:
        rh_params = _point_params(base_params, "rate", rate)
        n_rh = rh_params.samples_per_chip
        n_classical = rh_params.chips_per_bit * n_rh

        cfg = ProtocolConfig.from_params(base_params, detector=detectors[0])
        started = time.perf_counter()
        classical = run_classical_session(
            num_bits,
            n_classical,
            cfg,
            seed=master_seed,
            jobs=jobs,
            point_key=(_TAG_CLASSICAL, value_key(rate)),
        )
        elapsed = time.perf_counter() - started
        tally = classical.tally("classical")
        lo, hi = binomial_ci95(tally.sub_bit_errors, tally.kept_chips)
        rows.append(
            ResultRow(
                scheme="classical",
                swept_parameter="rate",
                value=float(rate),
                scenario="-",
                detector="classical",
                alpha=base_params.alpha,
                beta=base_params.beta,
                gamma=base_params.gamma,
                m_l=0.0,
                samples=n_classical,
                chips_per_bit=1,
                num_bits=num_bits,
                seed=master_seed,
                total_units=tally.total_chips,
                kept_units=tally.kept_chips,
                errors=tally.sub_bit_errors,
                bep=tally.bep,
                bep_ci_lo=lo,
                bep_ci_hi=hi,
                discard_fraction=tally.discard_fraction,
                eve_accuracy=tally.eve_correct_fraction,
                drif=1.0,
                wall_time=elapsed,
            )
        )

        for scen_idx, scenario in enumerate(scenarios):
            point_params = apply_scenario(rh_params, scenario)
            cfg = ProtocolConfig(
                params=point_params,
                stats=derive_stats(point_params),
                detector=detectors[0],
            )
            started = time.perf_counter()
            result = run_session(
                num_bits,
                cfg,
                seed=master_seed,
                detectors=detectors,
                jobs=jobs,
                point_key=(_TAG_RH_COMPARE, scen_idx, value_key(rate)),
            )
            elapsed = time.perf_counter() - started
            rows.extend(
                _session_rows(
                    result,
                    scheme="rh",
                    spec_param="rate",
                    value=rate,
                    scenario=scenario,
                    params=point_params,
                    samples=n_rh,
                    num_bits=num_bits,
                    seed=master_seed,
                    detectors=detectors,
                    drif_value=drif(point_params.chips_per_bit),
                    wall_time=elapsed,
                )
            )
    return rows
