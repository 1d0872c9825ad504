"""Orientation/location co-dependence: contingency tables, per-cell 2x2
chi-square tests and Bonferroni screening."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .labels import Handedness, Location, Orientation


@dataclass(frozen=True)
class ContingencyTable:
    """Counts with rows = orientations and columns = locations."""

    counts: np.ndarray
    orientations: tuple[Orientation, ...] = tuple(Orientation)
    locations: tuple[Location, ...] = tuple(Location)
    hand: Handedness | None = None

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.shape != (len(self.orientations), len(self.locations)):
            raise ValueError(f"counts shape {c.shape} does not match the label vocabularies")
        if (c < 0).any():
            raise ValueError("counts must be non-negative")

    @property
    def total(self) -> int:
        return int(np.asarray(self.counts).sum())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["orientation"] + [loc.value for loc in self.locations])
        for o, row in zip(self.orientations, np.asarray(self.counts)):
            w.writerow([o.value] + [int(v) for v in row])
        return buf.getvalue()


def _count(pairs: Iterable[tuple[Orientation, Location]]) -> np.ndarray:
    oi = {o: i for i, o in enumerate(Orientation)}
    li = {loc: j for j, loc in enumerate(Location)}
    counts = np.zeros((len(oi), len(li)), dtype=np.int64)
    for o, loc in pairs:
        counts[oi[Orientation(o)], li[Location(loc)]] += 1
    return counts


def build_contingency(annotations: Iterable, stratify_by_hand: bool = False):
    """Count (orientation, location) pairs over annotation records.

    With ``stratify_by_hand`` the result is a ``{Handedness: table}`` dict
    holding one table per hand (both hands always present).
    """
    records = list(annotations)
    if not stratify_by_hand:
        return ContingencyTable(_count((r.orientation, r.location) for r in records))
    return {
        h: ContingencyTable(
            _count((r.orientation, r.location) for r in records if Handedness(r.handedness) is h), hand=h
        )
        for h in (Handedness.RIGHT, Handedness.LEFT)
    }


@dataclass(frozen=True)
class LocalTable2x2:
    """Cell (i, j) against the rest of the table.

    ``a`` = count(O_i, L_j), ``b`` = rest of row i, ``c`` = rest of column j,
    ``d`` = everything else.
    """

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if min(self.a, self.b, self.c, self.d) < 0:
            raise ValueError("2x2 counts must be non-negative")

    @property
    def n(self) -> int:
        return self.a + self.b + self.c + self.d


def local_2x2(table: ContingencyTable | np.ndarray, i: int, j: int) -> LocalTable2x2:
    counts = np.asarray(getattr(table, "counts", table))
    rows, cols = counts.shape
    if not (0 <= i < rows and 0 <= j < cols):
        raise IndexError(f"cell ({i}, {j}) outside a {rows}x{cols} table")
    a = int(counts[i, j])
    b = int(counts[i].sum()) - a
    c = int(counts[:, j].sum()) - a
    d = int(counts.sum()) - a - b - c
    return LocalTable2x2(a, b, c, d)


def chi2_sf_1dof(x: float) -> float:
    """Upper tail of chi-square with one degree of freedom."""
    return math.erfc(math.sqrt(x / 2.0))


def chi_square_2x2(t: LocalTable2x2) -> tuple[float, float] | None:
    """Pearson chi-square (no continuity correction) and its p-value.

    Returns None when a row or column marginal is zero (untestable).
    """
    r1, r2, c1, c2 = t.a + t.b, t.c + t.d, t.a + t.c, t.b + t.d
    if min(r1, r2, c1, c2) == 0:
        return None
    # python ints keep the numerator exact
    stat = t.n * (t.a * t.d - t.b * t.c) ** 2 / (r1 * r2 * c1 * c2)
    return stat, chi2_sf_1dof(stat)


@dataclass(frozen=True)
class CellTest:
    orientation: Orientation
    location: Location
    hand: Handedness | None
    count: int
    chi2: float
    p: float
    significant: bool
    # observed above expected; a significant cell may also be under-represented
    over_represented: bool


@dataclass(frozen=True)
class SignificanceReport:
    cells: tuple[CellTest, ...]
    alpha: float
    m: int
    threshold: float

    @property
    def significant(self) -> tuple[CellTest, ...]:
        return tuple(c for c in self.cells if c.significant)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["orientation", "location", "hand", "count", "chi2", "p", "significant"])
        for c in self.cells:
            w.writerow(
                [c.orientation.value, c.location.value, c.hand.value if c.hand else "all", c.count,
                 f"{c.chi2:.6f}", f"{c.p:.6e}", int(c.significant)]
            )
        return buf.getvalue()

    def summary(self) -> str:
        lines = [
            f"tests: {self.m}  alpha: {self.alpha:g}  bonferroni threshold: {self.threshold:.6g}",
            f"significant cells: {len(self.significant)}",
        ]
        for c in self.significant:
            hand = c.hand.value if c.hand else "all"
            kind = "over" if c.over_represented else "under"
            lines.append(
                f"  {hand:5s} {c.orientation.value:>2s} x {c.location.value:<9s} count={c.count} "
                f"chi2={c.chi2:.3f} p={c.p:.3e} ({kind}-represented)"
            )
        return "\n".join(lines) + "\n"


def bonferroni_threshold(alpha: float, m: int) -> float:
    if m < 1:
        raise ValueError("need at least one test")
    return alpha / m


def bonferroni_screen(tables: ContingencyTable | Sequence[ContingencyTable], alpha: float = 0.05) -> SignificanceReport:
    """Test every cell of every table; ``m`` is the number of testable cells."""
    if isinstance(tables, ContingencyTable):
        tables = [tables]
    tested = []
    for tab in tables:
        counts = np.asarray(tab.counts)
        for i, o in enumerate(tab.orientations):
            for j, loc in enumerate(tab.locations):
                t = local_2x2(counts, i, j)
                res = chi_square_2x2(t)
                if res is None:
                    continue
                expected = (t.a + t.b) * (t.a + t.c) / t.n
                tested.append((o, loc, tab.hand, t.a, res[0], res[1], t.a > expected))
    m = len(tested)
    if m == 0:
        return SignificanceReport((), alpha, 0, math.nan)
    thr = bonferroni_threshold(alpha, m)
    cells = tuple(
        CellTest(o, loc, h, a, stat, p, p < thr, over) for o, loc, h, a, stat, p, over in tested
    )
    return SignificanceReport(cells, alpha, m, thr)
