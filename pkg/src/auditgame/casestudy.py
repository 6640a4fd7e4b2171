"""Presets and parameter sweeps for the transit-benefits case study.

The monthly calibration: 4000 employees, credits of 50 and 105 currency
units for the low and high commuting-cost types, audit costs between one
and five hours of local wages, fines in the range of common civil
penalties, and a reference line of 83,333 per month of claimed fraud.
Sweeps emit deterministic CSV for downstream plotting.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace
from fractions import Fraction

from . import cost as cost_mod
from .core import GameConfig
from .equilibrium import two_type_misreport_prob
from .errors import InputError
from .numeric import FLOAT, RATIONAL, as_fraction, check_mode, in_mode, sig15

COSTS_HEADER = ("q_min", "c", "k", "l", "cost_no_audit", "cost_audit",
                "budget", "excess", "dominates", "reference_line")
SURFACE_HEADER = ("q_min", "c", "k", "max_misreport_prob")


@dataclass(frozen=True)
class SweepSpec:
    base: GameConfig
    q_min_grid: tuple
    c_grid: tuple
    k_grid: tuple
    coalition_grid: tuple = (1,)
    reference_line: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("q_min_grid", "c_grid", "k_grid", "coalition_grid"):
            values = getattr(self, name)
            if not values:
                raise InputError(f"{name} must be non-empty")
        object.__setattr__(self, "q_min_grid", tuple(as_fraction(q) for q in self.q_min_grid))
        object.__setattr__(self, "c_grid", tuple(as_fraction(c) for c in self.c_grid))
        object.__setattr__(self, "k_grid", tuple(as_fraction(k) for k in self.k_grid))
        object.__setattr__(self, "coalition_grid", tuple(int(l) for l in self.coalition_grid))
        object.__setattr__(self, "reference_line", as_fraction(self.reference_line))
        if any(q <= 0 or q >= 1 for q in self.q_min_grid):
            raise InputError("q_min grid values must lie strictly between 0 and 1")


def _percent_grid():
    return tuple(Fraction(i, 100) for i in range(1, 100))


def ftbp_preset() -> SweepSpec:
    """Transit-benefits calibration: cost grids crossed with a 0.01-step prior grid."""
    base = GameConfig(
        types=("low", "high"),
        prior=(Fraction(1, 2), Fraction(1, 2)),
        alloc=(50, 105),
        audit_cost=25,
        fine=100,
        num_users=4000,
        coalition_size=1,
    )
    return SweepSpec(
        base=base,
        q_min_grid=_percent_grid(),
        c_grid=(25, 75, 125),
        k_grid=(100, 300, 500),
        coalition_grid=(1, 150),
        reference_line=83333,
    )


def surface_preset() -> SweepSpec:
    """Default grids for the misreporting-probability surface panels."""
    base = ftbp_preset().base
    return SweepSpec(
        base=base,
        q_min_grid=(Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)),
        c_grid=(25, 50, 75, 100, 125, 150),
        k_grid=tuple(range(100, 1001, 100)),
        coalition_grid=(1,),
        reference_line=83333,
    )


def _config_at(spec: SweepSpec, q_min, c, k, l) -> GameConfig:
    lo, hi = spec.base.low_high_indices()
    prior = [None, None]
    prior[lo] = q_min
    prior[hi] = 1 - q_min
    n = max(spec.base.num_users, l)
    return replace(spec.base, prior=tuple(prior), audit_cost=c, fine=k,
                   num_users=n, coalition_size=l)


def sweep_costs(spec: SweepSpec, mode: str = RATIONAL, workers: int = 1) -> list:
    """One row per (q_min, c, k, l), ordered q_min-major.

    Grid crossings are evaluated through the raw closed forms, which stay
    well defined even where an instance validator would balk (a fine
    below the audit cost); rows where the formulas truly degenerate
    (k - c + df <= 0) are annotated rather than aborting the sweep.
    """
    check_mode(mode)
    _require_two_type_base(spec)
    keys = [
        (q, c, k, l)
        for q in spec.q_min_grid
        for c in spec.c_grid
        for k in spec.k_grid
        for l in spec.coalition_grid
    ]
    if workers > 1:
        import concurrent.futures

        chunks = [keys[i::workers] for i in range(workers)]
        rows = {}
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_cost_rows_chunk, [(spec, chunk, mode) for chunk in chunks]):
                rows.update(part)
        return [rows[key] for key in keys]
    return [_cost_row(spec, key, mode) for key in keys]


def _require_two_type_base(spec: SweepSpec) -> None:
    # The q_min axis parametrizes the low type's prior, which only makes
    # sense against a two-type base game.
    if not spec.base.is_two_type:
        raise InputError("sweeps parametrize the two-type game; give a two-type base config")


def _cost_rows_chunk(args):
    spec, keys, mode = args
    return {key: _cost_row(spec, key, mode) for key in keys}


def _cost_row(spec: SweepSpec, key, mode: str) -> dict:
    q, c, k, l = key
    df = spec.base.delta_f_max
    n = max(spec.base.num_users, l)
    row = {
        "q_min": in_mode(q, mode),
        "c": in_mode(c, mode),
        "k": in_mode(k, mode),
        "l": l,
        "reference_line": in_mode(spec.reference_line, mode),
    }
    if k - c + df <= 0:
        # Only here do the closed forms degenerate; annotate, never abort.
        row.update(cost_no_audit="", cost_audit="", budget="", excess="",
                   dominates=f"error: fine {k} too small against audit cost {c}")
        return row
    if mode == FLOAT:
        q, c, k, df = float(q), float(c), float(k), float(df)
    no_audit, budget, excess, _ = cost_mod.two_type_cost_components(q, c, k, df, n, l)
    total = budget + excess
    row.update(
        cost_no_audit=in_mode(no_audit, mode),
        cost_audit=in_mode(total, mode),
        budget=in_mode(budget, mode),
        excess=in_mode(excess, mode),
        dominates=str(total <= no_audit).lower(),
    )
    return row


def sweep_misreport_surface(spec: SweepSpec, mode: str = RATIONAL) -> list:
    """One row per (q_min, c, k): the largest equilibrium misreporting probability."""
    check_mode(mode)
    _require_two_type_base(spec)
    df = spec.base.delta_f_max
    rows = []
    for q in spec.q_min_grid:
        for c in spec.c_grid:
            for k in spec.k_grid:
                if mode == FLOAT:
                    denom = float(q) * (float(k) - float(c) + float(df))
                    value = 1.0 if denom <= 0 else min(1.0, (1.0 - float(q)) * float(c) / denom)
                else:
                    cfg = _surface_config(spec, q, c, k)
                    value = two_type_misreport_prob(cfg) if cfg is not None else _raw_cap(q, c, k, df)
                rows.append({
                    "q_min": in_mode(q, mode),
                    "c": in_mode(c, mode),
                    "k": in_mode(k, mode),
                    "max_misreport_prob": value,
                })
    return rows


def _surface_config(spec: SweepSpec, q, c, k):
    # The surface grids intentionally include points with c > k, which a
    # validated game instance rejects; those evaluate the raw cap instead.
    if k < c:
        return None
    return _config_at(spec, q, c, k, 1)


def _raw_cap(q, c, k, df) -> Fraction:
    denom = q * (k - c + df)
    if denom <= 0:
        return Fraction(1)
    return min(Fraction(1), (1 - q) * c / denom)


def write_csv(rows: list, header: tuple, out) -> None:
    """Write rows as UTF-8 CSV with 15-significant-digit numbers."""

    def fmt(value):
        if isinstance(value, str):
            return value
        if isinstance(value, int):
            return str(value)
        return sig15(value)

    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(fmt(row[col]) for col in header) + "\n")


def costs_csv(rows: list) -> str:
    buf = io.StringIO()
    write_csv(rows, COSTS_HEADER, buf)
    return buf.getvalue()


def surface_csv(rows: list) -> str:
    buf = io.StringIO()
    write_csv(rows, SURFACE_HEADER, buf)
    return buf.getvalue()
