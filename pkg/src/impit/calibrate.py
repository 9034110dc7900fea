"""Stage-wise explorative calibration: sweep parameter grids, correlate each
candidate index against the response, and screen selections for stability.

Stage 1 sweeps the persistence dampening `a` with recency and timing
switched off; stage 2 fixes `a` and sweeps (m, b, c); stage 3 additionally
sweeps the timing dampening `d` against a special season. The engine never
advances stages on its own: the chosen value of each stage is explicit
input to the next.
"""

from __future__ import annotations

import datetime as dt
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .episodes import EpisodeSet
from .errors import ValidationError
from .index import EvaluationSchedule, anchor_views
from .intensity import IntensityKind
from .stats import ResponseSeries, pearson
from .timeline import Season
from .weights import WeightParams, combined_weight


def _grid(start: float, stop: float, step: float) -> Tuple[float, ...]:
    count = int(round((stop - start) / step)) + 1
    return tuple(round(start + i * step, 10) for i in range(count))


DEFAULT_A_GRID = _grid(0.0, 5.0, 0.25)  # 21 values
DEFAULT_B_GRID = _grid(0.5, 5.0, 0.5)  # 10 values
DEFAULT_C_GRID = _grid(0.0, 1.0, 0.05)  # 21 values
DEFAULT_D_GRID = (0.5, 1.0, 2.0, 3.0)


@dataclass(frozen=True)
class StageSpec:
    """Grid definition for one calibration stage.

    S1 sweeps m x a (recency/timing off); S2 sweeps m x b x c at fixed a
    (timing off); S3 sweeps m x b x c x d at fixed a with a season.
    """

    stage: str  # "S1" | "S2" | "S3"
    m_list: Tuple[int, ...]
    a_grid: Tuple[float, ...] = DEFAULT_A_GRID
    a: float = 0.0  # fixed value for S2/S3 (chosen at S1)
    b_grid: Tuple[float, ...] = DEFAULT_B_GRID
    c_grid: Tuple[float, ...] = DEFAULT_C_GRID
    d_grid: Tuple[float, ...] = DEFAULT_D_GRID
    season: Optional[Season] = None
    edge: str = "truncate"

    def __post_init__(self):
        if self.stage not in ("S1", "S2", "S3"):
            raise ValidationError(f"unknown stage {self.stage!r}")
        if not self.m_list:
            raise ValidationError("m_list must be nonempty")
        if self.stage == "S1" and not self.a_grid:
            raise ValidationError("S1 needs a nonempty a grid")
        if self.stage in ("S2", "S3") and (not self.b_grid or not self.c_grid):
            raise ValidationError(f"{self.stage} needs nonempty b and c grids")
        if self.stage == "S3":
            if not self.d_grid:
                raise ValidationError("S3 needs a nonempty d grid")
            if self.season is None:
                raise ValidationError("S3 requires a season")

    def cells(self) -> List[Tuple[int, float, float, float, float]]:
        """All (m, a, b, c, d) grid cells in lexicographic order."""
        out = []
        if self.stage == "S1":
            for m in self.m_list:
                for a in self.a_grid:
                    out.append((m, a, 0.0, 0.0, 0.0))
        elif self.stage == "S2":
            for m in self.m_list:
                for b in self.b_grid:
                    for c in self.c_grid:
                        out.append((m, self.a, b, c, 0.0))
        else:
            for m in self.m_list:
                for b in self.b_grid:
                    for c in self.c_grid:
                        for d in self.d_grid:
                            out.append((m, self.a, b, c, d))
        return sorted(out)

    def params_for(self, cell) -> WeightParams:
        m, a, b, c, d = cell
        if self.stage == "S1":
            return WeightParams(m=m, a=a, b=0.0, c=0.0, d=0.0, timing_enabled=False)
        if self.stage == "S2":
            return WeightParams(m=m, a=a, b=b, c=c, d=0.0, timing_enabled=False)
        return WeightParams(m=m, a=a, b=b, c=c, d=d, timing_enabled=True)


@dataclass(frozen=True)
class MapRecord:
    m: int
    a: float
    b: float
    c: float
    d: float
    r: Optional[float]
    p: Optional[float]
    n: int
    defined: bool
    reason: str = ""

    @property
    def cell(self):
        return (self.m, self.a, self.b, self.c, self.d)


@dataclass(frozen=True)
class Selection:
    config: dict  # {"m", "a", "b", "c", "d"}
    rule: str  # "max_abs_r" | "manual"
    rationale: str
    stable: bool
    r: Optional[float] = None
    p: Optional[float] = None
    selected_at: str = ""

    def to_dict(self) -> dict:
        return {
            "configuration": self.config,
            "rule": self.rule,
            "rationale": self.rationale,
            "stable": self.stable,
            "r": self.r,
            "p": self.p,
            "selected_at": self.selected_at,
        }


@dataclass
class CalibrationMap:
    stage: str
    records: Tuple[MapRecord, ...]
    fixed: dict = field(default_factory=dict)
    selection: Optional[Selection] = None

    @property
    def cells_evaluated(self) -> int:
        return len(self.records)

    def record_at(self, cell) -> Optional[MapRecord]:
        for rec in self.records:
            if rec.cell == cell:
                return rec
        return None


def _matched_anchor_positions(schedule: EvaluationSchedule, response: ResponseSeries):
    resp = dict(zip(response.timestamps, response.transformed_values()))
    positions = []
    y = []
    for i, anchor in enumerate(schedule.anchors):
        if anchor in resp:
            positions.append(i)
            y.append(resp[anchor])
    return np.asarray(positions, dtype=int), np.asarray(y, dtype=float)


def run_stage(
    spec: StageSpec,
    episodes: EpisodeSet,
    kind: IntensityKind,
    schedule: EvaluationSchedule,
    response: ResponseSeries,
    jobs: int = 1,
) -> CalibrationMap:
    """Evaluate every grid cell of the stage and record its association.

    Cells whose index series is constant, or with fewer than 3 matched
    pairs, are recorded as undefined with a reason code instead of failing
    the run. Output order is lexicographic in (m, a, b, c, d) regardless of
    execution order.
    """
    cells = spec.cells()
    if not cells:
        raise ValidationError("empty calibration grid")

    positions, y = _matched_anchor_positions(schedule, response)
    n_anchors = len(schedule.anchors)

    # Episode views per memory length are parameter-free; compute them once
    # and share them across all cells with that m.
    views_by_m = {}
    for m in sorted(set(spec.m_list)):
        views = anchor_views(
            episodes, m, schedule, kind,
            season=spec.season if spec.stage == "S3" else None,
            edge=spec.edge,
        )
        anchor_idx, n_arr, s_arr, tau_arr, i_arr = [], [], [], [], []
        for ai, per_anchor in enumerate(views):
            for v in per_anchor:
                anchor_idx.append(ai)
                n_arr.append(v.n)
                s_arr.append(v.s)
                tau_arr.append(v.tau)
                i_arr.append(v.value)
        views_by_m[m] = (
            np.asarray(anchor_idx, dtype=int),
            np.asarray(n_arr, dtype=float),
            np.asarray(s_arr, dtype=float),
            np.asarray(tau_arr, dtype=float),
            np.asarray(i_arr, dtype=float),
        )

    def eval_cell(cell) -> MapRecord:
        m, a, b, c, d = cell
        anchor_idx, n_arr, s_arr, tau_arr, i_arr = views_by_m[m]
        params = spec.params_for(cell)
        if len(anchor_idx):
            w = combined_weight(n_arr, s_arr, tau_arr, params)
            series = np.bincount(anchor_idx, weights=w * i_arr, minlength=n_anchors)
        else:
            series = np.zeros(n_anchors)
        x = series[positions]
        if len(x) < 3:
            return MapRecord(m, a, b, c, d, None, None, len(x), False, "too_few_pairs")
        if np.ptp(x) == 0.0:
            return MapRecord(m, a, b, c, d, None, None, len(x), False, "constant_series")
        if np.ptp(y) == 0.0:
            return MapRecord(m, a, b, c, d, None, None, len(x), False, "constant_response")
        assoc = pearson(list(zip(x.tolist(), y.tolist())))
        return MapRecord(m, a, b, c, d, assoc.r, assoc.p, assoc.n, True)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(eval_cell, cells))
    else:
        records = [eval_cell(cell) for cell in cells]

    records.sort(key=lambda rec: rec.cell)
    if all(not rec.defined for rec in records):
        raise ValidationError("no grid cell produced a defined correlation")

    fixed = {"stage": spec.stage, "edge": spec.edge}
    if spec.stage in ("S2", "S3"):
        fixed["a"] = spec.a
    if spec.stage == "S3":
        fixed["season"] = str(spec.season)
    return CalibrationMap(stage=spec.stage, records=tuple(records), fixed=fixed)


def _axes(records: Sequence[MapRecord]):
    """Sorted unique values of each parameter that actually varies."""
    axes = {}
    for i, name in enumerate(("m", "a", "b", "c", "d")):
        values = sorted({rec.cell[i] for rec in records})
        if len(values) > 1:
            axes[i] = values
    return axes


def select(
    cal_map: CalibrationMap,
    rule: str = "max_abs_r",
    stability_radius: int = 1,
    manual_config: Optional[dict] = None,
    rationale: str = "",
) -> Selection:
    """Pick a configuration from the map.

    `max_abs_r` takes the defined cell with the highest |r| among cells
    passing the stability screen: every grid neighbour within the radius
    (along each varying axis) is defined, shares the sign of r, and keeps
    |r| within 50% of the center. If no cell passes, falls back to the
    unconstrained argmax and flags the selection as unstable. `manual`
    records a human choice verbatim.
    """
    if not cal_map.records:
        raise ValidationError("empty calibration map")
    now = dt.datetime.now(dt.timezone.utc).isoformat()

    if rule == "manual":
        if manual_config is None:
            raise ValidationError("manual selection needs a configuration")
        cell = tuple(manual_config.get(k, 0.0) for k in ("m", "a", "b", "c", "d"))
        rec = cal_map.record_at(cell)
        sel = Selection(
            config=dict(manual_config), rule="manual", rationale=rationale,
            stable=True,
            r=rec.r if rec else None, p=rec.p if rec else None, selected_at=now,
        )
        cal_map.selection = sel
        return sel
    if rule != "max_abs_r":
        raise ValidationError(f"unknown selection rule {rule!r}")

    by_cell = {rec.cell: rec for rec in cal_map.records}
    axes = _axes(cal_map.records)
    defined = [rec for rec in cal_map.records if rec.defined]
    if not defined:
        raise ValidationError("no defined cells to select from")

    def passes_screen(rec: MapRecord) -> bool:
        for axis, values in axes.items():
            pos = values.index(rec.cell[axis])
            for off in range(-stability_radius, stability_radius + 1):
                if off == 0 or not (0 <= pos + off < len(values)):
                    continue
                neighbour_cell = list(rec.cell)
                neighbour_cell[axis] = values[pos + off]
                neighbour = by_cell.get(tuple(neighbour_cell))
                if neighbour is None or not neighbour.defined:
                    return False
                if neighbour.r * rec.r < 0:
                    return False
                if abs(neighbour.r) < 0.5 * abs(rec.r):
                    return False
        return True

    stable_cells = [rec for rec in defined if passes_screen(rec)]
    if stable_cells:
        best = max(stable_cells, key=lambda rec: (abs(rec.r), rec.cell))
        stable = True
    else:
        best = max(defined, key=lambda rec: (abs(rec.r), rec.cell))
        stable = False
    sel = Selection(
        config={"m": best.m, "a": best.a, "b": best.b, "c": best.c, "d": best.d},
        rule="max_abs_r",
        rationale=rationale or "automatic |r| maximum"
        + ("" if stable else " (stability screen failed; unconstrained argmax)"),
        stable=stable,
        r=best.r,
        p=best.p,
        selected_at=now,
    )
    cal_map.selection = sel
    return sel


MAP_CSV_COLUMNS = ["stage", "m", "a", "b", "c", "d", "r", "p", "n", "defined"]


def write_map(cal_map: CalibrationMap, path) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MAP_CSV_COLUMNS)
        for rec in cal_map.records:
            writer.writerow(
                [
                    cal_map.stage,
                    rec.m, repr(rec.a), repr(rec.b), repr(rec.c), repr(rec.d),
                    "" if rec.r is None else repr(rec.r),
                    "" if rec.p is None else repr(rec.p),
                    rec.n,
                    "true" if rec.defined else rec.reason or "false",
                ]
            )


def write_selection(selection: Selection, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(selection.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
