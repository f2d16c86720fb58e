"""Monte-Carlo estimation of bivariate renewal functions and the
creeping-time identity checks.

Three exact estimation engines live here.

* :func:`estimate_V` / :func:`biv_boxes` -- explicit killed bivariate
  subordinators.  ``V(t, u)`` is estimated either as the sampled minimum
  ``E[T^Y_u ^ T^Z_t ^ e(q)]`` or with the killing integrated in closed form
  (``route='integrate'``); the two are distinct estimators of the same
  quantity and their agreement is itself an identity check.
* :func:`fluct_boxes` -- the ladder process of a drift-creeping or compound
  Poisson fixture, without ever constructing ladder jumps: by the local-time
  change of variables, the ladder renewal measure of a box equals the
  expected real time the path spends *at its running maximum* with
  ``(time, running max)`` inside the box.  Occupations are computed in
  closed form segment by segment, so truncating at the largest finite box
  edge is exact, not a censoring.
* :func:`dual_ladder_cells` / :func:`dual_ladder_measure` -- the strictly
  descending dual ladder.  Its points are the successive strict minima of
  the path; the auxiliary rate-1 Poisson index integrates out, so
  ``Vhat`` of a box is the expected number of strict-minimum points inside
  it (plus the point mass at the origin), and ``Vhat(t, x)`` equals the
  expected index of the first ladder point leaving ``[0,t] x [0,x]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .processes import BivariateSubordinatorSpec, ProcessSpec
from .results import CheckReport, EstimateWithError, estimate_from_stats, write_csv
from .rng import RngPolicy, chunked_map, merge_mean_m2
from .passage import estimate_p, sample_biv_passages

__all__ = [
    "RenewalGrid",
    "estimate_V",
    "left_derivative",
    "check_subpint",
    "fluct_boxes",
    "biv_boxes",
    "dual_ladder_cells",
    "dual_ladder_measure",
]

Boxes = np.ndarray  # shape (nb, 4): columns t_lo, t_hi, u_lo, u_hi


def _stats_per_column(values: np.ndarray) -> list[tuple[int, float, float]]:
    n = values.shape[0]
    mean = values.mean(axis=0)
    m2 = ((values - mean) ** 2).sum(axis=0)
    return [(n, float(mean[j]), float(m2[j])) for j in range(values.shape[1])]


def _merge_columns(parts: list[list[tuple[int, float, float]]]) -> list[tuple[int, float, float]]:
    nb = len(parts[0])
    return [merge_mean_m2([p[j] for p in parts]) for j in range(nb)]


# ---------------------------------------------------------------------------
# Fluctuation ladder occupation (time at the running maximum)
# ---------------------------------------------------------------------------


def _fluct_occ_chunk(
    spec: ProcessSpec, boxes: Boxes, n: int, rng, r_guard: float
) -> tuple[list[tuple[int, float, float]], int]:
    c, lam = spec.drift, spec.rate
    if c < 0:
        raise ValueError("ladder occupation requires nonnegative drift")
    nb = boxes.shape[0]
    t_lo, t_hi, u_lo, u_hi = boxes[:, 0], boxes[:, 1], boxes[:, 2], boxes[:, 3]
    fin_t = t_hi[np.isfinite(t_hi)]
    stop_r = min(r_guard, float(fin_t.max()) if fin_t.size == nb else r_guard)
    stop_u = float(u_hi.max())

    occ = np.zeros((n, nb))
    censored = 0

    if lam == 0:
        # pure drift: always at the maximum, running max = c * r
        for j in range(nb):
            lo = max(t_lo[j], u_lo[j] / c)
            hi = min(t_hi[j], u_hi[j] / c)
            occ[:, j] = max(hi - lo, 0.0)
        return _stats_per_column(occ), 0

    sigma = np.zeros(n)
    J = np.zeros(n)
    M = np.zeros(n)
    alive = np.arange(n)

    while alive.size:
        g = rng.exponential(1.0 / lam, alive.size)
        sig_next = sigma[alive] + g
        Ja = J[alive]
        Ma = M[alive]
        if c > 0:
            w_pre = c * sig_next + Ja
            has = w_pre > Ma
            r_star = np.maximum(sigma[alive], (Ma - Ja) / c)
            for j in range(nb):
                lo = np.maximum(np.maximum(r_star, t_lo[j]), (u_lo[j] - Ja) / c)
                hi = np.minimum(np.minimum(sig_next, t_hi[j]), (u_hi[j] - Ja) / c)
                occ[alive, j] += np.where(has, np.maximum(hi - lo, 0.0), 0.0)
            M[alive] = np.maximum(Ma, w_pre)
        else:
            at_max = Ja == Ma
            for j in range(nb):
                inband = at_max & (Ma > u_lo[j]) & (Ma <= u_hi[j])
                length = np.maximum(
                    np.minimum(sig_next, t_hi[j]) - np.maximum(sigma[alive], t_lo[j]), 0.0
                )
                occ[alive, j] += np.where(inband, length, 0.0)
        Y = spec.sample_jumps(rng, alive.size)
        J[alive] += Y
        w_land = c * sig_next + J[alive]
        M[alive] = np.maximum(M[alive], w_land)
        sigma[alive] = sig_next
        stop = (sig_next > stop_r) | (M[alive] > stop_u)
        if stop.any() and stop_r >= r_guard:
            censored += int((stop & (sig_next > stop_r) & (M[alive] <= stop_u)).sum())
        alive = alive[~stop]

    return _stats_per_column(occ), censored


def fluct_boxes(
    spec: ProcessSpec,
    boxes: Sequence[Sequence[float]],
    n: int,
    policy: RngPolicy,
    workers: int = 1,
    r_guard: float = 1e7,
) -> list[EstimateWithError]:
    """Ladder renewal measure of each box (t_lo, t_hi] x (u_lo, u_hi] for the
    weakly ascending ladder process of ``spec``, via at-the-maximum
    occupation times of the raw path (common paths across boxes)."""
    arr = np.asarray([[b[0], b[1], b[2], b[3]] for b in boxes], dtype=float)
    parts = chunked_map(
        lambda i, m, rng: _fluct_occ_chunk(spec, arr, m, rng, r_guard), n, policy, workers
    )
    merged = _merge_columns([p[0] for p in parts])
    cens = sum(p[1] for p in parts) / max(n, 1)
    return [estimate_from_stats(*s, censored_mass=cens) for s in merged]


# ---------------------------------------------------------------------------
# Explicit bivariate subordinator: occupations and cell values
# ---------------------------------------------------------------------------


def _interval_weight(a: np.ndarray, b: np.ndarray, q: float) -> np.ndarray:
    """integral of e^{-q s} over [a, b] (b >= a); plain length when q == 0."""
    if q == 0:
        return np.maximum(b - a, 0.0)
    width = np.maximum(b - a, 0.0)
    return np.where(width > 0, (np.exp(-q * a) - np.exp(-q * (a + width))) / q, 0.0)


def _band_interval(
    pos: np.ndarray, drift: float, lo: float, hi: float, s0: np.ndarray, s1: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Sub-interval of [s0, s1] on which ``pos + drift * (s - s0)`` lies in (lo, hi]."""
    if drift > 0:
        a = np.maximum(s0, s0 + (lo - pos) / drift)
        b = np.minimum(s1, s0 + (hi - pos) / drift)
    else:
        inside = (pos > lo) & (pos <= hi)
        a = np.where(inside, s0, s1)
        b = s1
    return a, b


def _biv_occ_chunk(
    spec: BivariateSubordinatorSpec,
    boxes: Boxes,
    n: int,
    rng,
    route: str,
    s_guard: float,
    w_tol: float = 1e-15,
) -> tuple[list[tuple[int, float, float]], float]:
    dz, dy, q = spec.d_z, spec.d_y, spec.q
    rate = spec.total_rate
    nb = boxes.shape[0]
    t_lo, t_hi, u_lo, u_hi = boxes[:, 0], boxes[:, 1], boxes[:, 2], boxes[:, 3]
    fin_t = t_hi[np.isfinite(t_hi)]
    fin_u = u_hi[np.isfinite(u_hi)]
    stop_t = float(fin_t.max()) if fin_t.size == nb else math.inf
    stop_u = float(fin_u.max()) if fin_u.size == nb else math.inf
    qw = q if route == "integrate" else 0.0

    occ = np.zeros((n, nb))
    bias_total = 0.0

    e_life = (
        rng.exponential(1.0 / q, n)
        if (route == "sample" and q > 0)
        else np.full(n, math.inf)
    )

    s = np.zeros(n)
    z = np.zeros(n)
    y = np.zeros(n)
    alive = np.arange(n)
    while alive.size:
        if rate > 0:
            g = rng.exponential(1.0 / rate, alive.size)
        else:
            g = np.full(alive.size, math.inf)
        s0 = s[alive]
        s1 = np.minimum(s0 + g, np.minimum(e_life[alive], s_guard))
        za, ya = z[alive], y[alive]
        for j in range(nb):
            az, bz = _band_interval(za, dz, t_lo[j], t_hi[j], s0, s1)
            ay, by = _band_interval(ya, dy, u_lo[j], u_hi[j], s0, s1)
            a = np.maximum(az, ay)
            b = np.minimum(bz, by)
            occ[alive, j] += _interval_weight(a, b, qw)
        if rate == 0:
            # no jumps: every band intersection above was resolved in closed form
            break
        ended = (s0 + g > e_life[alive]) | (s0 + g > s_guard)
        z[alive] = za + dz * g
        y[alive] = ya + dy * g
        s[alive] = s0 + g
        jt, jx = spec.sample_atoms(rng, alive.size)
        z[alive] += jt
        y[alive] += jx
        done = ended | (z[alive] > stop_t) | (y[alive] > stop_u)
        if route == "integrate" and q > 0:
            w = np.exp(-q * s[alive])
            tail = w < w_tol
            bias_total += float(w[tail].sum()) / q
            done = done | tail
        alive = alive[~done]
    return _stats_per_column(occ), bias_total


def biv_boxes(
    spec: BivariateSubordinatorSpec,
    boxes: Sequence[Sequence[float]],
    n: int,
    policy: RngPolicy,
    workers: int = 1,
    route: str = "integrate",
    s_guard: float = 1e7,
) -> list[EstimateWithError]:
    """Renewal measure ``V_{Z,Y}`` of each box (t_lo,t_hi] x (u_lo,u_hi]."""
    arr = np.asarray([[b[0], b[1], b[2], b[3]] for b in boxes], dtype=float)
    parts = chunked_map(
        lambda i, m, rng: _biv_occ_chunk(spec, arr, m, rng, route, s_guard), n, policy, workers
    )
    merged = _merge_columns([p[0] for p in parts])
    bias = sum(p[1] for p in parts) / max(n, 1)
    return [estimate_from_stats(*st, bias_bound=bias) for st in merged]


def _biv_min_chunk(
    spec: BivariateSubordinatorSpec, t: float, u: float, n: int, rng, route: str, s_guard: float
) -> tuple[tuple[int, float, float], int, float]:
    """Per-path ``T^Y_u ^ T^Z_t [^ e(q)]`` resolved exactly; returns stats.

    route='min': value is the sampled triple minimum.  route='integrate':
    value is ``(1 - e^{-q m}) / q`` with ``m = T^Y_u ^ T^Z_t`` (killing
    integrated out; exact on each path).
    """
    dz, dy, q = spec.d_z, spec.d_y, spec.q
    rate = spec.total_rate
    vals = np.zeros(n)
    e_life = (
        rng.exponential(1.0 / q, n) if (route == "min" and q > 0) else np.full(n, math.inf)
    )
    censored = 0

    s = np.zeros(n)
    z = np.zeros(n)
    y = np.zeros(n)
    alive = np.arange(n)
    minval = np.full(n, math.inf)
    while alive.size:
        g = rng.exponential(1.0 / rate, alive.size) if rate > 0 else np.full(alive.size, math.inf)
        s_next = s[alive] + g
        cross_z = np.where((dz > 0) & (z[alive] + dz * g > t), s[alive] + (t - z[alive]) / max(dz, 1e-300), math.inf)
        cross_y = np.where((dy > 0) & (y[alive] + dy * g > u), s[alive] + (u - y[alive]) / max(dy, 1e-300), math.inf)
        drift_cross = np.minimum(cross_z, cross_y)
        event = np.minimum(np.minimum(drift_cross, e_life[alive]), np.minimum(s_next, s_guard))
        resolved = event < s_next
        fin = alive[resolved]
        minval[fin] = event[resolved]
        censored += int((event[resolved] >= s_guard).sum())
        keep = ~resolved
        alive, g, s_next = alive[keep], g[keep], s_next[keep]
        if alive.size == 0:
            break
        z[alive] += dz * g
        y[alive] += dy * g
        s[alive] = s_next
        jt, jx = spec.sample_atoms(rng, alive.size)
        z[alive] += jt
        y[alive] += jx
        over = (z[alive] > t) | (y[alive] > u) | (e_life[alive] <= s_next)
        fin = alive[over]
        minval[fin] = np.minimum(s_next[over], e_life[fin])
        alive = alive[~over]

    if route == "min":
        vals = minval
    else:
        vals = (1.0 - np.exp(-q * minval)) / q if q > 0 else minval
    n_eff = vals.size
    mean = float(vals.mean())
    m2 = float(((vals - mean) ** 2).sum())
    return (n_eff, mean, m2), censored, 0.0


def _biv_cell(
    spec: BivariateSubordinatorSpec,
    t: float,
    u: float,
    n: int,
    policy: RngPolicy,
    workers: int,
    route: str,
    s_guard: float,
) -> EstimateWithError:
    parts = chunked_map(
        lambda i, m, rng: _biv_min_chunk(spec, t, u, m, rng, route, s_guard), n, policy, workers
    )
    stats = merge_mean_m2([p[0] for p in parts])
    cens = sum(p[1] for p in parts) / max(n, 1)
    return estimate_from_stats(*stats, censored_mass=cens)


# ---------------------------------------------------------------------------
# Dual (strictly descending) ladder of the embedded walk / drift fixture
# ---------------------------------------------------------------------------


def _dual_cells_chunk(
    spec: ProcessSpec, cells: list[tuple[float, float]], n: int, rng
) -> list[tuple[int, float, float]]:
    """Per-path index of the first dual ladder point outside [0,t] x [0,x].

    Valid for compound Poisson fixtures: the strictly descending ladder
    process steps through the successive strict minima at the events of an
    independent rate-1 Poisson process, so E[T^Hhat_x ^ T^Lhat_t] equals the
    expected count of ladder points needed to leave the rectangle.
    """
    lam = spec.rate
    nc = len(cells)
    t_arr = np.array([c[0] for c in cells])
    x_arr = np.array([c[1] for c in cells])
    tmax = float(t_arr.max())

    counts = np.zeros((n, nc))
    resolved = np.zeros((n, nc), dtype=bool)

    sigma = np.zeros(n)
    S = np.zeros(n)
    mmin = np.zeros(n)  # current minimum (<= 0)
    kmin = np.zeros(n)  # number of strict minima so far
    alive = np.arange(n)
    while alive.size:
        g = rng.exponential(1.0 / lam, alive.size)
        sig_next = sigma[alive] + g
        for j in range(nc):
            # time passed t with no new minimum: the next ladder point has
            # sigma > t, so the rectangle is left at index kmin + 1
            hit = ~resolved[alive, j] & (sig_next > t_arr[j])
            ii = alive[hit]
            counts[ii, j] = kmin[ii] + 1.0
            resolved[ii, j] = True
        Y = spec.sample_jumps(rng, alive.size)
        S[alive] += Y
        sigma[alive] = sig_next
        new_min = S[alive] < mmin[alive]
        ii = alive[new_min]
        mmin[ii] = S[ii]
        kmin[ii] += 1.0
        if ii.size:
            depth = -S[ii]
            for j in range(nc):
                hit = ~resolved[ii, j] & (depth > x_arr[j])
                jj = ii[hit]
                counts[jj, j] = kmin[jj]
                resolved[jj, j] = True
        alive = alive[~resolved[alive].all(axis=1)]
        # paths past the largest t are always fully resolved above
        assert not ((sigma[alive] > tmax).any())
    return _stats_per_column(counts)


def dual_ladder_cells(
    spec: ProcessSpec,
    cells: Sequence[tuple[float, float]],
    n: int,
    policy: RngPolicy,
    workers: int = 1,
) -> list[EstimateWithError]:
    """MC estimates of ``Vhat(t, x)`` for a compound Poisson fixture."""
    if not spec.is_compound_poisson:
        raise ValueError("dual ladder cells require a compound Poisson fixture")
    parts = chunked_map(
        lambda i, m, rng: _dual_cells_chunk(spec, list(cells), m, rng), n, policy, workers
    )
    return [estimate_from_stats(*s) for s in _merge_columns(parts)]


def _dual_measure_chunk(
    spec: ProcessSpec, s_edges: np.ndarray, v_edges: np.ndarray, n: int, rng,
    s_guard: float,
) -> tuple[list[tuple[int, float, float]], int]:
    """Per-path counts of dual ladder points (strict minima) per
    (time, depth) bin, including the origin point of every path."""
    c, lam = spec.drift, spec.rate
    if c < 0:
        raise ValueError("dual ladder measure requires nonnegative drift")
    ns, nv = s_edges.size - 1, v_edges.size - 1
    v_guard = float(v_edges[-1])
    counts = np.zeros((n, ns * nv))
    # epoch-0 ladder point at (0, 0): first bin of each axis
    counts[:, 0] += 1.0
    dropped = 0

    sigma = np.zeros(n)
    J = np.zeros(n)
    mmin = np.zeros(n)
    alive = np.arange(n)
    while alive.size:
        g = rng.exponential(1.0 / lam, alive.size)
        sig_next = sigma[alive] + g
        over = sig_next > s_guard
        alive, sig_next = alive[~over], sig_next[~over]
        if alive.size == 0:
            break
        Y = spec.sample_jumps(rng, alive.size)
        J[alive] += Y
        sigma[alive] = sig_next
        w_land = c * sig_next + J[alive]
        new_min = w_land < mmin[alive]
        ii = alive[new_min]
        if ii.size:
            mmin[ii] = w_land[new_min]
            depth = -w_land[new_min]
            tt = sig_next[new_min]
            si = np.searchsorted(s_edges, tt, side="left") - 1
            si[tt == s_edges[0]] = 0
            vi = np.searchsorted(v_edges, depth, side="left") - 1
            vi[depth == v_edges[0]] = 0
            ok = (vi >= 0) & (vi < nv) & (si >= 0) & (si < ns)
            dropped += int((~ok).sum())
            np.add.at(counts, (ii[ok], si[ok] * nv + vi[ok]), 1.0)
        # a path whose minimum is already below every depth bin can stop
        # once its time passed the last s edge; deeper minima are dropped
        deep = mmin[alive] < -v_guard
        alive = alive[~deep]
    return _stats_per_column(counts), dropped


def dual_ladder_measure(
    spec: ProcessSpec,
    s_edges: Sequence[float],
    v_edges: Sequence[float],
    n: int,
    policy: RngPolicy,
    workers: int = 1,
    s_guard: float | None = None,
) -> tuple[np.ndarray, np.ndarray, float]:
    """``Vhat(ds, dv)`` masses on a (time, depth) bin grid, with SEs.

    Returns (mass, se, dropped_mass) with arrays of shape
    (len(s_edges)-1, len(v_edges)-1).  Points beyond the last edges (or
    after ``s_guard``, which defaults to the last time edge) are dropped
    and reported, not silently ignored; for a fixture drifting upward the
    probability of a ladder point beyond a generous guard decays
    exponentially, so the last cell can stand in for an unbounded one.
    """
    se_arr = np.asarray(s_edges, dtype=float)
    ve_arr = np.asarray(v_edges, dtype=float)
    guard = float(s_edges[-1]) if s_guard is None else float(s_guard)
    if not math.isfinite(guard):
        raise ValueError("dual ladder measure needs a finite time guard")
    parts = chunked_map(
        lambda i, m, rng: _dual_measure_chunk(spec, se_arr, ve_arr, m, rng, guard),
        n, policy, workers,
    )
    merged = _merge_columns([p[0] for p in parts])
    ns, nv = se_arr.size - 1, ve_arr.size - 1
    mass = np.zeros((ns, nv))
    se = np.zeros((ns, nv))
    for j, st in enumerate(merged):
        est = estimate_from_stats(*st)
        mass[j // nv, j % nv] = est.value
        se[j // nv, j % nv] = est.se
    dropped = sum(p[1] for p in parts) / max(n, 1)
    return mass, se, dropped


# ---------------------------------------------------------------------------
# Renewal grid, derivative, and the occupation-density identity check
# ---------------------------------------------------------------------------

SamplerSpec = Union[BivariateSubordinatorSpec, ProcessSpec]


@dataclass
class RenewalGrid:
    """MC (or exact) values of V on a (t, u) grid with per-cell errors."""

    t_values: tuple[float, ...]
    u_values: tuple[float, ...]
    value: np.ndarray
    se: np.ndarray
    n_per_cell: int
    provenance: str
    censored: np.ndarray

    def cell(self, t: float, u: float) -> EstimateWithError:
        i = self.t_values.index(t)
        j = self.u_values.index(u)
        return EstimateWithError(
            float(self.value[i, j]), float(self.se[i, j]), self.n_per_cell,
            float(self.censored[i, j]),
        )

    def to_csv(self, path: str) -> None:
        rows = [
            [t, u, self.value[i, j], self.se[i, j], self.provenance]
            for i, t in enumerate(self.t_values)
            for j, u in enumerate(self.u_values)
        ]
        write_csv(path, ["t", "u", "V", "SE", "provenance"], rows)


def estimate_V(
    spec: SamplerSpec,
    t_values: Sequence[float],
    u_values: Sequence[float],
    n_per_cell: int,
    policy: RngPolicy,
    workers: int = 1,
    route: str = "integrate",
    s_guard: float = 1e7,
) -> RenewalGrid:
    """Renewal function ``V(t, u)`` on a grid, one substream per cell.

    For an explicit :class:`BivariateSubordinatorSpec` the per-path value is
    the (killed) triple minimum; for a :class:`ProcessSpec` the grid is for
    the fixture's weakly ascending ladder process (drifts ``(1, drift)``),
    estimated from at-the-maximum occupation times of the raw path.
    """
    nt, nu = len(t_values), len(u_values)
    value = np.zeros((nt, nu))
    se = np.zeros((nt, nu))
    cens = np.zeros((nt, nu))
    for i, t in enumerate(t_values):
        for j, u in enumerate(u_values):
            sub = policy.substream(f"V[{i},{j}]")
            if isinstance(spec, BivariateSubordinatorSpec):
                est = _biv_cell(spec, t, u, n_per_cell, sub, workers, route, s_guard)
            else:
                est = fluct_boxes(spec, [(0.0, t, -1.0, u)], n_per_cell, sub, workers)[0]
            value[i, j] = est.value
            se[i, j] = est.se
            cens[i, j] = est.censored_mass
    prov = "mc-min" if route == "min" else "mc"
    return RenewalGrid(tuple(t_values), tuple(u_values), value, se, n_per_cell, prov, cens)


def left_derivative(
    grid: RenewalGrid, t: float, u: float, richardson: bool = False
) -> EstimateWithError:
    """Backward difference approximation of the left u-derivative of V.

    Uses the grid nodes at ``u`` and ``u - delta`` (and ``u - 2 delta`` for
    the two-point backward Richardson refinement).  The reported
    ``bias_bound`` is the discretisation half-width ``delta``; cells are
    independent, so SEs add in quadrature.
    """
    j = grid.u_values.index(u)
    if j == 0:
        raise ValueError("u is at the left edge of the grid; no backward difference exists")
    i = grid.t_values.index(t)
    delta = u - grid.u_values[j - 1]
    d1 = (grid.value[i, j] - grid.value[i, j - 1]) / delta
    se1 = math.hypot(grid.se[i, j], grid.se[i, j - 1]) / delta
    if not richardson:
        return EstimateWithError(d1, se1, grid.n_per_cell, bias_bound=delta)
    if j < 2 or not math.isclose(grid.u_values[j - 1] - grid.u_values[j - 2], delta):
        raise ValueError("Richardson refinement needs a third equally spaced node")
    d2 = (grid.value[i, j] - grid.value[i, j - 2]) / (2 * delta)
    se2 = math.hypot(grid.se[i, j], grid.se[i, j - 2]) / (2 * delta)
    return EstimateWithError(2 * d1 - d2, 2 * se1 + se2, grid.n_per_cell, bias_bound=delta)


def _creep_probability_nodes(
    spec: SamplerSpec,
    t: float,
    v_nodes: np.ndarray,
    n_per_node: int,
    policy: RngPolicy,
    workers: int,
) -> tuple[np.ndarray, np.ndarray, dict[str, int]]:
    """p(t, v) at each node: creep-by-t probability of the fixture."""
    p = np.zeros(v_nodes.size)
    se = np.zeros(v_nodes.size)
    monitors: dict[str, int] = {}
    for k, v in enumerate(v_nodes):
        if v == 0.0:
            # small-level limit: with positive Y-drift the path creeps over
            # level 0+ immediately, so p(t, 0+) = 1
            p[k] = 1.0
            continue
        sub = policy.substream(f"p[{k}]")
        if isinstance(spec, BivariateSubordinatorSpec):
            batch = sample_biv_passages(spec, float(v), n_per_node, sub, workers)
            hits = batch.creep & (batch.z_before + batch.dz <= t)
            p[k] = hits.mean()
            se[k] = math.sqrt(p[k] * (1 - p[k]) / batch.n)
            for key, cnt in batch.monitors.items():
                monitors[key] = monitors.get(key, 0) + cnt
        else:
            est, mon = estimate_p(spec, t, float(v), n_per_node, sub, workers)
            p[k], se[k] = est.value, est.se
            for key, cnt in mon.items():
                monitors[key] = monitors.get(key, 0) + cnt
    return p, se, monitors


def _trapezoid(nodes: np.ndarray, vals: np.ndarray) -> tuple[float, np.ndarray]:
    weights = np.zeros(nodes.size)
    dx = np.diff(nodes)
    weights[:-1] += dx / 2
    weights[1:] += dx / 2
    return float(np.sum(weights * vals)), weights


def _segment_nodes(spec: SamplerSpec, t: float, u: float, base_nodes: int) -> list[np.ndarray]:
    """v-integration segments, split at the discontinuity points of p(t, .)
    for lattice fixtures with drift (creep support is a union of intervals)."""
    breaks: list[float] = []
    if isinstance(spec, ProcessSpec) and spec.drift > 0 and spec.rate > 0:
        law = spec.jumps
        if hasattr(law, "values"):
            from .rw_ladder import LatticeWalkSpec  # lattice detection only

            h = None
            try:
                h = LatticeWalkSpec.from_process(
                    ProcessSpec(0.0, spec.rate, spec.jumps)
                ).h
            except ValueError:
                h = None
            if h is not None:
                k = 1
                while k * h < u:
                    breaks.append(k * h)
                    if k * h + spec.drift * t < u:
                        breaks.append(k * h + spec.drift * t)
                    k += 1
                if spec.drift * t < u:
                    breaks.append(spec.drift * t)
    pts = sorted(set([0.0, u] + [b for b in breaks if 0 < b < u]))
    segments = []
    for seg_idx, (a, b) in enumerate(zip(pts[:-1], pts[1:])):
        m = max(3, int(base_nodes * (b - a) / u) + 1)
        nodes = np.linspace(a, b, m)
        if seg_idx > 0:
            # p(t, .) is left continuous; a segment starting at a breakpoint
            # must sample the right limit, so nudge its first node inside
            nodes[0] = a + 1e-9
        segments.append(nodes)
    return segments


def check_subpint(
    spec: SamplerSpec,
    t: float,
    u: float,
    n_per_node: int,
    policy: RngPolicy,
    workers: int = 1,
    base_nodes: int = 12,
    fixture: str = "",
) -> CheckReport:
    """Occupation-density identity: ``integral_0^u p(t, v) dv = d_Y V(t, u)``.

    LHS by trapezoid quadrature of MC creep probabilities over a v-grid
    (split at the discontinuities of lattice fixtures); RHS from an
    independent MC estimate of V.  For a Levy fixture the Y-drift of the
    ladder process is the process drift.
    """
    d_y = spec.d_y if isinstance(spec, BivariateSubordinatorSpec) else spec.drift
    if d_y == 0:
        lhs, lhs_se, quad_bias = 0.0, 0.0, 0.0
        monitors: dict[str, int] = {}
        n_paths = 0
    else:
        segments = _segment_nodes(spec, t, u, base_nodes)
        lhs = 0.0
        var = 0.0
        quad_bias = 0.0
        monitors = {}
        n_paths = 0
        for snum, nodes in enumerate(segments):
            p, se, mon = _creep_probability_nodes(
                spec, t, nodes, n_per_node, policy.substream(f"seg{snum}"), workers
            )
            val, w = _trapezoid(nodes, p)
            coarse, _ = _trapezoid(nodes[::2], p[::2]) if nodes.size >= 5 else (val, None)
            quad_bias += abs(val - coarse) / 3.0
            lhs += val
            var += float(np.sum((w * se) ** 2))
            n_paths += n_per_node * (nodes.size - 1)
            for key, cnt in mon.items():
                monitors[key] = monitors.get(key, 0) + cnt
        lhs_se = math.sqrt(var)

    v_est = (
        _biv_cell(spec, t, u, n_per_node, policy.substream("V"), workers, "integrate", 1e7)
        if isinstance(spec, BivariateSubordinatorSpec)
        else fluct_boxes(spec, [(0.0, t, -1.0, u)], n_per_node, policy.substream("V"), workers)[0]
    )
    rhs = d_y * v_est.value
    rhs_se = d_y * v_est.se
    dist = abs(lhs - rhs)
    budget = 3.0 * math.hypot(lhs_se, rhs_se) + quad_bias + d_y * v_est.bias_bound
    return CheckReport(
        check="subpint",
        fixture=fixture,
        params={"t": t, "u": u, "n_per_node": n_per_node},
        lhs=lhs,
        rhs=rhs,
        se_lhs=lhs_se,
        se_rhs=rhs_se,
        distance=dist,
        budget=budget,
        passed=dist <= budget,
        n_paths=n_paths + n_per_node,
        details=[{"quad_bias": quad_bias, "v_bias": v_est.bias_bound}],
        monitors=monitors,
    )
