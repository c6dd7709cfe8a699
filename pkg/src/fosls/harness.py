"""Convergence studies: h- and p-version runs, slope fits, CSV and SVG output."""

import csv
import io
import math
import os
from contextlib import nullcontext
from dataclasses import dataclass, field, fields, replace
from typing import Optional
from xml.sax.saxutils import escape

import numpy as np
from scipy import stats

from .assembly import FoslsSolution, assemble_fosls
from .errors import NORM_NAMES, compute_errors
from .mesh import make_mesh
from .oracle import CASES, exact_solution
from .solve import SolveOptions, SolverError, solve_spd
from .spaces import ScalarSpace, VectorSpace

CSV_HEADER = (
    "level", "h", "p_s", "p_v", "ndof", "err_u_l2", "err_grad_u_l2", "err_phi_l2",
    "err_div_phi_l2", "err_phi_n_l2", "err_b", "slope_fit", "slope_pred",
)
# CSV column for each ErrorReport field
CSV_NORMS = dict(zip(NORM_NAMES, CSV_HEADER[5:11]))
# norms covered by the a-priori theory; the rest are reported only
THEORY_NORMS = ("err_u_l2", "err_grad_u", "err_phi_l2", "err_phi_n")


def predicted_exponents(family, p_s, p_v, s):
    """Guaranteed convergence exponents in h/p for data regularity ``s``.

    ``err_div_phi`` and ``err_b`` carry no theorem of their own; they get
    min(s, p_s, p_v), the rate of the best approximation in the b-norm.
    """
    family = family.upper()
    if s < 0:
        raise ValueError("regularity s must be non-negative")
    if family not in ("RT", "BDM"):
        raise ValueError(f"unknown family {family!r}")
    bump = 0.5 if family == "RT" else 1.0
    pv_phi = p_v if family == "RT" else p_v + 1
    if p_v == 1:
        u = min(s + 1, 2.0)
    else:
        u = min(s + 1, p_s, p_v + bump) + 1
    return {
        "err_u_l2": float(u),
        "err_grad_u": float(min(s + 1, p_s, p_v + bump)),
        "err_phi_l2": float(min(s + 0.5, p_s + 0.5, pv_phi)),
        "err_div_phi": float(min(s, p_s, p_v)),
        "err_phi_n": float(min(s + 0.5, p_s + 0.5, pv_phi)),
        "err_b": float(min(s, p_s, p_v)),
    }


def best_exponents(family, p_s, p_v, s):
    """Best-approximation exponents of the spaces at regularity ``s``."""
    pv_phi = p_v if family.upper() == "RT" else p_v + 1
    return {
        "err_u_l2": float(min(s + 1, p_s) + 1),
        "err_grad_u": float(min(s + 1, p_s)),
        "err_phi_l2": float(min(s + 1, pv_phi)),
        "err_div_phi": float(min(s, p_v)),
        "err_phi_n": float(min(s + 0.5, pv_phi)),
        "err_b": float(min(s, p_s, p_v)),
    }


def case_regularity(case):
    """Data regularity s used in the rate formulas (large for smooth cases)."""
    return 0.5 if case == "radial_step" else 100.0


@dataclass(frozen=True)
class StudyConfig:
    domain: str = "square"
    family: str = "RT"
    p_s: int = 1
    p_v: int = 1
    mode: str = "h"
    levels: tuple = (0, 1, 2, 3, 4)
    pmin: int = 1
    pmax: int = 8
    level: int = 0  # fixed mesh level of a p-study
    case: str = "square_smooth"
    fit_points: Optional[int] = None  # default 3 (h) or 4 (p)
    s: Optional[float] = None  # default from the case
    method: str = "direct_cholesky"
    solver_tol: float = 1e-12
    tol: Optional[float] = None  # rate tolerance for the exit code, default 0.15 (h) / 0.5 (p)
    out: str = "results"
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.domain not in ("square", "disk"):
            raise ValueError(f"unknown domain {self.domain!r}")
        object.__setattr__(self, "family", self.family.upper())
        if self.family not in ("RT", "BDM"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.mode not in ("h", "p"):
            raise ValueError("mode must be 'h' or 'p'")
        if self.p_s < 1 or self.p_v < 1:
            raise ValueError("p_s and p_v must be >= 1")
        if self.case not in CASES:
            raise ValueError(f"unknown case {self.case!r}; choose from {CASES}")
        object.__setattr__(self, "levels", tuple(int(v) for v in self.levels))
        npts = len(self.levels) if self.mode == "h" else self.pmax - self.pmin + 1
        if npts < 3:
            raise ValueError("a study needs at least 3 levels (or degrees) for rate fitting")

    @property
    def regularity(self):
        return self.s if self.s is not None else case_regularity(self.case)

    @property
    def n_fit(self):
        return self.fit_points or (3 if self.mode == "h" else 4)

    @property
    def rate_tol(self):
        return self.tol if self.tol is not None else (0.15 if self.mode == "h" else 0.5)

    @property
    def solve_options(self):
        return SolveOptions(self.method, self.solver_tol)

    def to_text(self):
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            lines.append(f"{f.name} = {'' if v is None else v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text, **overrides):
        """Parse flat ``key = value`` lines (``#`` comments allowed)."""
        kinds = {f.name: f for f in fields(cls)}
        vals = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if not sep or key not in kinds:
                raise ValueError(f"bad config line: {raw!r}")
            vals[key] = _coerce(key, val)
        vals.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**vals)


_INT = {"p_s", "p_v", "pmin", "pmax", "level", "fit_points", "seed", "threads"}
_FLOAT = {"s", "solver_tol", "tol"}


def _coerce(key, val):
    if val == "":
        return None
    if key == "levels":
        return tuple(int(v) for v in val.replace(" ", "").split(",") if v)
    if key in _INT:
        return int(val)
    if key in _FLOAT:
        return float(val)
    return val


def fit_slope(x, y):
    """OLS slope of log y against log x and its R^2."""
    x, y = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    if len(x) < 2:
        return math.nan, math.nan
    res = stats.linregress(x, y)
    return float(res.slope), float(res.rvalue**2)


@dataclass
class RateTable:
    config: StudyConfig
    rows: list = field(default_factory=list)  # ErrorReport per level / degree
    keys: list = field(default_factory=list)  # mesh level of each row

    @property
    def abscissa(self):
        """h for an h-study, p for a p-study."""
        if self.config.mode == "h":
            return np.array([r.h for r in self.rows])
        return np.array([r.p_s for r in self.rows], dtype=float)

    def series(self, norm):
        return np.array([getattr(r, norm) for r in self.rows])

    def slope(self, norm, upto=None):
        """Fitted slope over the last ``n_fit`` rows ending at row ``upto``."""
        end = len(self.rows) if upto is None else upto + 1
        start = max(0, end - self.config.n_fit)
        return fit_slope(self.abscissa[start:end], self.series(norm)[start:end])

    def predicted(self, norm, row=None):
        """Predicted slope (negative for a p-study) for the given or last row."""
        r = self.rows[-1 if row is None else row]
        e = predicted_exponents(self.config.family, r.p_s, r.p_v, self.config.regularity)[norm]
        return e if self.config.mode == "h" else -e

    def best(self, norm):
        r = self.rows[-1]
        e = best_exponents(self.config.family, r.p_s, r.p_v, self.config.regularity)[norm]
        return e if self.config.mode == "h" else -e

    def summary(self):
        """Per norm: fitted slope, R^2, predicted, best possible and the floor check."""
        out = []
        tol = self.config.rate_tol
        for norm in NORM_NAMES:
            slope, r2 = self.slope(norm)
            pred = self.predicted(norm)
            ok = slope >= pred - tol if self.config.mode == "h" else slope <= pred + tol
            out.append(
                dict(norm=norm, slope_fit=slope, r2=r2, slope_pred=pred, slope_best=self.best(norm),
                     checked=norm in THEORY_NORMS, passed=bool(ok))
            )
        return out

    def violations(self):
        return [s for s in self.summary() if s["checked"] and not s["passed"]]


def _limit_threads(n):
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        return None
    return threadpool_limits(limits=n)


def solve_level(mesh, family, p_s, p_v, exact, opts=None):
    """Assemble, solve and measure one discrete problem; returns (ErrorReport, solution)."""
    V = VectorSpace(mesh, family, p_v)
    S = ScalarSpace(mesh, p_s)
    A, b = assemble_fosls(mesh, V, S, exact.problem())
    x = solve_spd(A, b, opts)
    sol = FoslsSolution(V, S, x)
    return compute_errors(sol, exact), sol


def run_h_study(config, log=None):
    """Uniform refinement at fixed degrees; one row per level."""
    if config.mode != "h":
        config = replace(config, mode="h")
    exact = exact_solution(config.case)
    table = RateTable(config)
    with _limit_threads(config.threads) or nullcontext():
        for lev in config.levels:
            mesh = make_mesh(config.domain, lev)
            try:
                rep, _ = solve_level(mesh, config.family, config.p_s, config.p_v, exact, config.solve_options)
            except SolverError as exc:
                raise SolverError(f"level {lev}: {exc}") from exc
            table.rows.append(rep)
            table.keys.append(lev)
            if log:
                log(f"level {lev}: ndof={rep.ndof} h={rep.h:.4f} err_u={rep.err_u_l2:.3e}")
    return table


def run_p_study(config, log=None):
    """Degree elevation p_s = p_v = p on a fixed mesh; one row per p."""
    if config.mode != "p":
        config = replace(config, mode="p")
    exact = exact_solution(config.case)
    table = RateTable(config)
    mesh = make_mesh(config.domain, config.level)
    with _limit_threads(config.threads) or nullcontext():
        for p in range(config.pmin, config.pmax + 1):
            try:
                rep, _ = solve_level(mesh, config.family, p, p, exact, config.solve_options)
            except SolverError as exc:
                raise SolverError(f"p = {p}: {exc}") from exc
            table.rows.append(rep)
            table.keys.append(config.level)
            if log:
                log(f"p {p}: ndof={rep.ndof} err_u={rep.err_u_l2:.3e}")
    return table


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def table_csv(table):
    """CSV text; slope_fit is the trailing-window fit of err_u_l2 ending at each row."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for i, r in enumerate(table.rows):
        slope, _ = table.slope("err_u_l2", upto=i)
        w.writerow(
            [_fmt(v) for v in (
                table.keys[i], r.h, r.p_s, r.p_v, r.ndof, r.err_u_l2, r.err_grad_u, r.err_phi_l2,
                r.err_div_phi, r.err_phi_n, r.err_b, slope if i else None, table.predicted("err_u_l2", i),
            )]
        )
    return buf.getvalue()


def summary_csv(table):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ("norm", "slope_fit", "r2", "slope_pred", "slope_best", "checked", "passed")
    w.writerow(cols)
    if table.rows:
        for s in table.summary():
            w.writerow([_fmt(s[c]) for c in cols])
    return buf.getvalue()


def loglog_svg(x, series, title="", xlabel="", ylabel="", width=480, height=360):
    """Log-log chart; ``series`` maps a label to (y values, colour, dashed)."""
    m = 50
    lx = np.log10(np.asarray(x, float))
    ally = np.concatenate([np.log10(np.asarray(y, float)) for y, _, _ in series.values()]) if series else np.zeros(1)
    x0, x1 = (lx.min(), lx.max()) if len(lx) else (0.0, 1.0)
    y0, y1 = ally.min(), ally.max()
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def px(v):
        return m + (v - x0) / (x1 - x0) * (width - 2 * m)

    def py(v):
        return height - m - (v - y0) / (y1 - y0) * (height - 2 * m)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="{m}" y="{m}" width="{width - 2 * m}" height="{height - 2 * m}" fill="none" stroke="black"/>',
        f'<text x="{width / 2}" y="{m / 2}" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
        f'<text x="14" y="{height / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {height / 2})">{escape(ylabel)}</text>',
    ]
    for k, (label, (y, colour, dashed)) in enumerate(series.items()):
        ly = np.log10(np.asarray(y, float))
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(lx, ly))
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        out.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="1.5"{dash}/>')
        out.append(
            f'<text x="{width - m - 4}" y="{m + 16 + 14 * k}" text-anchor="end" font-size="11" '
            f'fill="{colour}">{escape(label)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _reference_line(x, y, slope, n_fit):
    """Line of the given slope through the geometric centre of the last n_fit points."""
    lx, ly = np.log(x), np.log(y)
    k = slice(max(0, len(x) - n_fit), len(x))
    cx, cy = lx[k].mean(), ly[k].mean()
    return np.exp(cy + slope * (lx - cx))


def emit_outputs(table, out_dir, stem="study"):
    """Write ``<stem>.csv``, ``<stem>_rates.csv``, ``<stem>.cfg`` and one SVG per norm.

    Returns the list of written paths.  I/O errors propagate unchanged.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = []

    def put(name, text):
        path = os.path.join(out_dir, name)
        with open(path, "w", newline="") as fh:
            fh.write(text)
        paths.append(path)

    put(f"{stem}.csv", table_csv(table))
    put(f"{stem}_rates.csv", summary_csv(table))
    put(f"{stem}.cfg", table.config.to_text())
    if len(table.rows) >= 2:
        x = table.abscissa
        xlabel = "h" if table.config.mode == "h" else "p"
        for norm in NORM_NAMES:
            y = table.series(norm)
            if np.any(y <= 0):
                continue
            slope, _ = table.slope(norm)
            n = table.config.n_fit
            series = {
                "data": (y, "#c00000", False),
                f"fit {slope:.2f}": (_reference_line(x, y, slope, n), "#404040", True),
                f"predicted {table.predicted(norm):.2f}": (_reference_line(x, y, table.predicted(norm), n), "#000000", False),
            }
            put(f"{stem}_{CSV_NORMS[norm]}.svg", loglog_svg(x, series, CSV_NORMS[norm], xlabel, "error"))
    return paths
