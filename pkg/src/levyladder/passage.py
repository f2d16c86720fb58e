"""Exact path-level Monte Carlo of first passage, creeping and ladder jumps.

All engines are vectorised over paths but exact in law: inter-jump gaps are
the realised exponential variates and every event (creeping, passage by
jump, killing) is resolved by algebraic comparison of exact quantities,
never by epsilon tolerances.  Creeping in particular is detected by
comparing the drift crossing time with the next jump time; hitting a level
exactly by a jump does *not* trigger passage (the passage time takes a
strict inequality), and the almost-surely-null event "creep after a jump
landed exactly on the level" has an explicit code path that is counted by a
never-observed monitor rather than being defined away.

Monitors accumulated by the engines:

* ``creep_with_undershoot`` -- a creeping passage with ``X_{tau-} < u``
  (null by the last-jump lemma for finite-activity paths).
* ``biv_z_jump_y_flat``     -- passage of a bivariate subordinator at which
  ``Z`` jumps but ``Y`` does not (null by the compensation-formula lemma).
* ``biv_jump_to_level``     -- a jump of ``Y`` landing exactly on the level
  with positive drift (null: the level is then hit continuously later).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .processes import BivariateSubordinatorSpec, ProcessSpec
from .results import EstimateWithError, binomial_estimate, write_csv
from .rng import RngPolicy, chunked_map

__all__ = [
    "PassageRecord",
    "PassageBatch",
    "first_passage",
    "sample_passages",
    "estimate_p",
    "SubPassageRecord",
    "SubPassageBatch",
    "biv_passage",
    "sample_biv_passages",
    "LadderJumpBatch",
    "ladder_jump",
    "sample_ladder_jumps",
    "kappa_from_ladder",
    "kappa_diff_from_ladder",
    "AlphaBatch",
    "alpha_experiment",
    "sample_alpha",
]


# ---------------------------------------------------------------------------
# First passage of a Levy fixture
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PassageRecord:
    """First-passage data of one path over level ``u``.

    ``tau`` is ``inf`` (with ``censored=True``) when the horizon cap was hit
    first.  The five passage variables are exposed as properties:
    overshoot ``x``, undershoot ``v``, undershoot of the last maximum ``y``,
    time since the last maximum ``s`` and time of the last maximum ``t``.
    """

    u: float
    tau: float
    x_at: float
    x_before: float
    max_before: float
    g_before: float
    creep: bool
    censored: bool = False

    def __post_init__(self) -> None:
        if self.censored:
            return
        if not (self.x_before <= self.max_before <= self.u):
            raise ValueError("record violates X_before <= max_before <= u")
        if self.g_before > self.tau:
            raise ValueError("record violates G_before <= tau")
        if self.creep and self.x_at != self.u:
            raise ValueError("creeping record must have X_at == u")

    @property
    def x(self) -> float:
        return self.x_at - self.u

    @property
    def v(self) -> float:
        return self.u - self.x_before

    @property
    def y(self) -> float:
        return self.u - self.max_before

    @property
    def s(self) -> float:
        return self.tau - self.g_before

    @property
    def t(self) -> float:
        return self.g_before


@dataclass
class PassageBatch:
    """Struct-of-arrays batch of passage records at a common level."""

    u: float
    cap: float
    tau: np.ndarray
    x_at: np.ndarray
    x_before: np.ndarray
    max_before: np.ndarray
    g_before: np.ndarray
    creep: np.ndarray
    censored: np.ndarray
    monitors: dict[str, int] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.tau.size

    @property
    def resolved(self) -> np.ndarray:
        return ~self.censored

    @property
    def censored_mass(self) -> float:
        return float(self.censored.mean()) if self.n else 0.0

    def quintuple(self) -> tuple[np.ndarray, ...]:
        """Arrays (x, v, y, s, t) over resolved records."""
        r = self.resolved
        x = self.x_at[r] - self.u
        v = self.u - self.x_before[r]
        y = self.u - self.max_before[r]
        s = self.tau[r] - self.g_before[r]
        t = self.g_before[r]
        return x, v, y, s, t

    def record(self, i: int) -> PassageRecord:
        return PassageRecord(
            self.u,
            float(self.tau[i]),
            float(self.x_at[i]),
            float(self.x_before[i]),
            float(self.max_before[i]),
            float(self.g_before[i]),
            bool(self.creep[i]),
            bool(self.censored[i]),
        )

    def validate(self) -> None:
        """Structural invariants that hold for every resolved record."""
        r = self.resolved
        if not r.any():
            return
        x, v, y, s, t = self.quintuple()
        bad = (
            (self.x_before[r] > self.max_before[r])
            | (self.max_before[r] > self.u)
            | (x < 0)
            | (y < -0.0)
            | (y > np.minimum(self.u, v))
            | (s < 0)
            | (t < 0)
            | (self.creep[r] & (self.x_at[r] != self.u))
        )
        if bad.any():
            raise RuntimeError("passage batch violates quintuple support constraints")

    def to_csv(self, path: str) -> None:
        x = self.x_at - self.u
        v = self.u - self.x_before
        y = self.u - self.max_before
        s = self.tau - self.g_before
        t = self.g_before
        rows = zip(
            [self.u] * self.n, self.tau, x, v, y, s, t,
            self.creep.astype(int), self.censored.astype(int),
        )
        write_csv(path, ["u", "tau", "x", "v", "y", "s", "t", "creep", "censored"], rows)

    @classmethod
    def concatenate(cls, parts: Sequence["PassageBatch"]) -> "PassageBatch":
        mon: dict[str, int] = {}
        for p in parts:
            for k, c in p.monitors.items():
                mon[k] = mon.get(k, 0) + c
        return cls(
            parts[0].u,
            parts[0].cap,
            np.concatenate([p.tau for p in parts]),
            np.concatenate([p.x_at for p in parts]),
            np.concatenate([p.x_before for p in parts]),
            np.concatenate([p.max_before for p in parts]),
            np.concatenate([p.g_before for p in parts]),
            np.concatenate([p.creep for p in parts]),
            np.concatenate([p.censored for p in parts]),
            mon,
        )


def _passage_chunk(spec: ProcessSpec, u: float, cap: float, n: int, rng) -> PassageBatch:
    c = spec.drift
    lam = spec.rate
    tau = np.full(n, np.inf)
    x_at = np.full(n, np.nan)
    x_before = np.full(n, np.nan)
    max_before = np.full(n, np.nan)
    g_before = np.full(n, np.nan)
    creep = np.zeros(n, dtype=bool)
    censored = np.zeros(n, dtype=bool)
    monitors = {"creep_with_undershoot": 0}

    def batch() -> PassageBatch:
        return PassageBatch(u, cap, tau, x_at, x_before, max_before, g_before, creep, censored, monitors)

    if lam == 0:
        if c > 0 and u / c <= cap:
            tau[:] = u / c
            x_at[:] = u
            x_before[:] = u
            max_before[:] = u
            g_before[:] = u / c
            creep[:] = True
        else:
            censored[:] = True
        return batch()

    sigma = np.zeros(n)  # time of the last jump processed
    J = np.zeros(n)      # sum of jumps so far
    M = np.zeros(n)      # running maximum over [0, sigma] plus resolved segment suprema
    G = np.zeros(n)      # last time at the running maximum
    active = np.arange(n)

    while active.size:
        g = rng.exponential(1.0 / lam, active.size)
        sig_next = sigma[active] + g

        if c > 0:
            # creeping iff the drift line reaches u strictly before the jump
            t_creep = (u - J[active]) / c
            hits = t_creep < sig_next
            if hits.any():
                hidx = active[hits]
                th = t_creep[hits]
                ok = th <= cap
                fin = hidx[ok]
                tau[fin] = th[ok]
                x_at[fin] = u
                x_before[fin] = u
                max_before[fin] = u
                g_before[fin] = th[ok]
                creep[fin] = True
                censored[hidx[~ok]] = True
                keep = ~hits
                active, g, sig_next = active[keep], g[keep], sig_next[keep]
                if active.size == 0:
                    break

        over = sig_next > cap
        if over.any():
            censored[active[over]] = True
            keep = ~over
            active, sig_next = active[keep], sig_next[keep]
            if active.size == 0:
                break

        w_pre = c * sig_next + J[active]
        # maximum/G bookkeeping for the segment ending at this jump
        if c > 0:
            upd = w_pre > M[active]
            ii = active[upd]
            M[ii] = w_pre[upd]
            G[ii] = sig_next[upd]
        elif c == 0:
            at_max = J[active] == M[active]
            G[active[at_max]] = sig_next[at_max]

        Y = spec.sample_jumps(rng, active.size)
        w_land = w_pre + Y
        passed = w_land > u
        if passed.any():
            fin = active[passed]
            tau[fin] = sig_next[passed]
            x_at[fin] = w_land[passed]
            x_before[fin] = w_pre[passed]
            max_before[fin] = M[fin]
            g_before[fin] = G[fin]
        inst = (w_land == u) & (c > 0)
        if inst.any():
            # jump landed exactly on u; with upward drift the passage time is
            # now and X_{tau} = u: a creep with undershoot (null event, monitored)
            fin = active[inst]
            tau[fin] = sig_next[inst]
            x_at[fin] = u
            x_before[fin] = w_pre[inst]
            max_before[fin] = M[fin]
            g_before[fin] = G[fin]
            creep[fin] = True
            monitors["creep_with_undershoot"] += int(inst.sum())
        cont = ~(passed | inst)
        ii = active[cont]
        J[ii] += Y[cont]
        sigma[ii] = sig_next[cont]
        wl = w_land[cont]
        newmax = wl > M[ii]
        jj = ii[newmax]
        M[jj] = wl[newmax]
        if c != 0:
            G[jj] = sig_next[cont][newmax]
        active = ii

    out = batch()
    out.validate()
    return out


def sample_passages(
    spec: ProcessSpec,
    u: float,
    cap: float,
    n: int,
    policy: RngPolicy,
    workers: int = 1,
) -> PassageBatch:
    """Batch of ``n`` independent passage records, deterministic per policy."""
    if not (u > 0):
        raise ValueError("level u must be positive")
    parts = chunked_map(
        lambda i, m, rng: _passage_chunk(spec, u, cap, m, rng), n, policy, workers
    )
    return PassageBatch.concatenate(parts)


def first_passage(spec: ProcessSpec, u: float, cap: float, rng) -> PassageRecord:
    """Single exact first-passage record over level ``u`` (cap = horizon)."""
    if not (u > 0):
        raise ValueError("level u must be positive")
    return _passage_chunk(spec, u, cap, 1, rng).record(0)


def estimate_p(
    spec: ProcessSpec,
    t: float,
    u: float,
    n: int,
    policy: RngPolicy,
    workers: int = 1,
) -> tuple[EstimateWithError, dict[str, int]]:
    """MC estimate of ``p(t, u) = P(tau_u <= t, X_{tau_u} = u)``.

    The horizon cap equals ``t``, so the binomial estimate is censoring-free:
    any path capped at ``t`` simply did not creep by ``t``.
    """
    if not (t > 0 and u > 0):
        raise ValueError("t and u must be positive")
    batch = sample_passages(spec, u, cap=t, n=n, policy=policy, workers=workers)
    hits = int((batch.creep & (batch.tau <= t)).sum())
    return binomial_estimate(hits, batch.n), dict(batch.monitors)


# ---------------------------------------------------------------------------
# Passage of a killed bivariate subordinator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubPassageRecord:
    """Passage data of one killed bivariate subordinator path over ``u``."""

    u: float
    T: float
    z_before: float
    dz: float
    y_before: float
    y_at: float
    killed: bool
    censored: bool = False

    @property
    def creep(self) -> bool:
        return (not self.killed) and (not self.censored) and self.y_at == self.u


@dataclass
class SubPassageBatch:
    u: float
    T: np.ndarray
    z_before: np.ndarray
    dz: np.ndarray
    y_before: np.ndarray
    y_at: np.ndarray
    killed: np.ndarray
    censored: np.ndarray
    monitors: dict[str, int] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.T.size

    @property
    def resolved(self) -> np.ndarray:
        return ~(self.killed | self.censored)

    @property
    def censored_mass(self) -> float:
        return float(self.censored.mean()) if self.n else 0.0

    @property
    def creep(self) -> np.ndarray:
        return self.resolved & (self.y_at == self.u)

    def quadruple(self) -> tuple[np.ndarray, ...]:
        """Arrays (x, y, s, t) = (overshoot, undershoot, Z-jump, Z-before)."""
        r = self.resolved
        return (
            self.y_at[r] - self.u,
            self.u - self.y_before[r],
            self.dz[r],
            self.z_before[r],
        )

    def record(self, i: int) -> SubPassageRecord:
        return SubPassageRecord(
            self.u,
            float(self.T[i]),
            float(self.z_before[i]),
            float(self.dz[i]),
            float(self.y_before[i]),
            float(self.y_at[i]),
            bool(self.killed[i]),
            bool(self.censored[i]),
        )

    def validate(self) -> None:
        r = self.resolved
        if not r.any():
            return
        if (self.y_before[r] > self.u).any() or (self.y_at[r] < self.u).any():
            raise RuntimeError("bivariate passage batch violates support constraints")

    @classmethod
    def concatenate(cls, parts: Sequence["SubPassageBatch"]) -> "SubPassageBatch":
        mon: dict[str, int] = {}
        for p in parts:
            for k, c in p.monitors.items():
                mon[k] = mon.get(k, 0) + c
        return cls(
            parts[0].u,
            np.concatenate([p.T for p in parts]),
            np.concatenate([p.z_before for p in parts]),
            np.concatenate([p.dz for p in parts]),
            np.concatenate([p.y_before for p in parts]),
            np.concatenate([p.y_at for p in parts]),
            np.concatenate([p.killed for p in parts]),
            np.concatenate([p.censored for p in parts]),
            mon,
        )


def _biv_chunk(
    spec: BivariateSubordinatorSpec, u: float, n: int, rng, s_cap: float
) -> SubPassageBatch:
    dz_drift, dy, q = spec.d_z, spec.d_y, spec.q
    rate = spec.total_rate

    T = np.full(n, np.inf)
    z_before = np.full(n, np.nan)
    dz_at = np.full(n, np.nan)
    y_before = np.full(n, np.nan)
    y_at = np.full(n, np.nan)
    killed = np.zeros(n, dtype=bool)
    censored = np.zeros(n, dtype=bool)
    monitors = {"biv_z_jump_y_flat": 0, "biv_jump_to_level": 0}

    e_life = rng.exponential(1.0 / q, n) if q > 0 else np.full(n, np.inf)

    def batch() -> SubPassageBatch:
        return SubPassageBatch(u, T, z_before, dz_at, y_before, y_at, killed, censored, monitors)

    if rate == 0:
        if dy > 0:
            t0 = u / dy
            die = e_life < t0
            killed[die] = True
            live = ~die
            T[live] = t0
            y_at[live] = u
            y_before[live] = u
            dz_at[live] = 0.0
            z_before[live] = dz_drift * t0
        else:
            killed[:] = True  # Y never moves; death resolves the path
        return batch()

    s = np.zeros(n)
    z = np.zeros(n)
    y = np.zeros(n)
    active = np.arange(n)

    while active.size:
        g = rng.exponential(1.0 / rate, active.size)
        s_next = s[active] + g

        if dy > 0:
            t_cross = s[active] + (u - y[active]) / dy
            hits = t_cross < s_next
            if hits.any():
                hidx = active[hits]
                th = t_cross[hits]
                die = e_life[hidx] < th
                dd = hidx[die]
                killed[dd] = True
                fin = hidx[~die]
                thf = th[~die]
                T[fin] = thf
                y_at[fin] = u
                y_before[fin] = u
                dz_at[fin] = 0.0
                z_before[fin] = z[fin] + dz_drift * (thf - s[fin])
                keep = ~hits
                active, g, s_next = active[keep], g[keep], s_next[keep]
                if active.size == 0:
                    break

        die = e_life[active] < s_next
        if die.any():
            killed[active[die]] = True
            keep = ~die
            active, g, s_next = active[keep], g[keep], s_next[keep]
            if active.size == 0:
                break

        over = s_next > s_cap
        if over.any():
            censored[active[over]] = True
            keep = ~over
            active, g, s_next = active[keep], g[keep], s_next[keep]
            if active.size == 0:
                break

        jt, jx = spec.sample_atoms(rng, active.size)
        y_pre = y[active] + dy * g
        z_pre = z[active] + dz_drift * g
        y_land = y_pre + jx

        passed = y_land > u
        if passed.any():
            fin = active[passed]
            T[fin] = s_next[passed]
            y_before[fin] = y_pre[passed]
            y_at[fin] = y_land[passed]
            dz_at[fin] = jt[passed]
            z_before[fin] = z_pre[passed]
        inst = (y_land == u) & (dy > 0)
        if inst.any():
            # Y reaches u exactly at a jump instant with positive drift: the
            # passage happens now with Y_T = u (creeping).  With jx > 0 this
            # is a jump landing on the level; with jx == 0 it is the
            # Z-jump/Y-flat null event.
            fin = active[inst]
            T[fin] = s_next[inst]
            y_before[fin] = y_pre[inst]
            y_at[fin] = u
            dz_at[fin] = jt[inst]
            z_before[fin] = z_pre[inst]
            jumped = jx[inst] > 0
            monitors["biv_jump_to_level"] += int(jumped.sum())
            monitors["biv_z_jump_y_flat"] += int(((~jumped) & (jt[inst] > 0)).sum())
        cont = ~(passed | inst)
        ii = active[cont]
        s[ii] = s_next[cont]
        z[ii] = z_pre[cont] + jt[cont]
        y[ii] = y_land[cont]
        active = ii

    out = batch()
    out.validate()
    return out


def sample_biv_passages(
    spec: BivariateSubordinatorSpec,
    u: float,
    n: int,
    policy: RngPolicy,
    workers: int = 1,
    s_cap: float = math.inf,
) -> SubPassageBatch:
    if not (u > 0):
        raise ValueError("level u must be positive")
    if math.isinf(s_cap) and spec.q == 0 and spec.d_y == 0:
        raise ValueError("q = 0 with d_y = 0 needs a finite cap (passage may never resolve)")
    parts = chunked_map(lambda i, m, rng: _biv_chunk(spec, u, m, rng, s_cap), n, policy, workers)
    return SubPassageBatch.concatenate(parts)


def biv_passage(
    spec: BivariateSubordinatorSpec, u: float, rng, s_cap: float = math.inf
) -> SubPassageRecord:
    if not (u > 0):
        raise ValueError("level u must be positive")
    return _biv_chunk(spec, u, 1, rng, s_cap).record(0)


# ---------------------------------------------------------------------------
# Ladder jumps of a creeping (or compound Poisson) fixture
# ---------------------------------------------------------------------------


@dataclass
class LadderJumpBatch:
    """Samples of one jump of the bivariate ladder process, i.e. draws from
    ``Pi_{L^{-1}, H} / rate``.  Censored entries are excursions that had not
    returned to the pre-jump maximum within the cap; their time component is
    recorded as ``inf``."""

    ds: np.ndarray
    dx: np.ndarray
    censored: np.ndarray
    cap: float

    @property
    def n(self) -> int:
        return self.ds.size

    @property
    def censored_mass(self) -> float:
        return float(self.censored.mean()) if self.n else 0.0

    @classmethod
    def concatenate(cls, parts: Sequence["LadderJumpBatch"]) -> "LadderJumpBatch":
        return cls(
            np.concatenate([p.ds for p in parts]),
            np.concatenate([p.dx for p in parts]),
            np.concatenate([p.censored for p in parts]),
            parts[0].cap,
        )


def _ladder_chunk(spec: ProcessSpec, n: int, rng, cap: float) -> LadderJumpBatch:
    c = spec.drift
    lam = spec.rate
    if c < 0:
        raise ValueError("ladder jumps require nonnegative drift")
    if lam == 0:
        raise ValueError("a pure-drift process has no ladder jumps")
    ds = np.zeros(n)
    dx = np.zeros(n)
    censored = np.zeros(n, dtype=bool)

    y0 = spec.sample_jumps(rng, n)
    pos = y0 > 0
    dx[pos] = y0[pos]  # jump up at the maximum: (0, Y)

    active = np.flatnonzero(~pos)
    w = y0[~pos].copy()  # position relative to the pre-jump maximum, < 0
    r = np.zeros(active.size)

    while active.size:
        g = rng.exponential(1.0 / lam, active.size)
        if c > 0:
            t_hit = -w / c
            back = t_hit <= g  # weak return: creeping to the maximum ends it
            if back.any():
                fin = active[back]
                ds[fin] = r[back] + t_hit[back]
                dx[fin] = 0.0
                keep = ~back
                active, w, r, g = active[keep], w[keep], r[keep], g[keep]
                if active.size == 0:
                    break
        w_pre = w + c * g
        y = spec.sample_jumps(rng, active.size)
        w_land = w_pre + y
        back = w_land >= 0.0  # weak return; overshoot w_land may be 0
        if back.any():
            fin = active[back]
            ds[fin] = r[back] + g[back]
            dx[fin] = w_land[back]
        cont = ~back
        active = active[cont]
        w = w_land[cont]
        r = r[cont] + g[cont]
        over = r > cap
        if over.any():
            fin = active[over]
            censored[fin] = True
            ds[fin] = np.inf
            dx[fin] = np.nan
            keep = ~over
            active, w, r = active[keep], w[keep], r[keep]

    return LadderJumpBatch(ds, dx, censored, cap)


def sample_ladder_jumps(
    spec: ProcessSpec, n: int, policy: RngPolicy, cap: float = 200.0, workers: int = 1
) -> LadderJumpBatch:
    parts = chunked_map(lambda i, m, rng: _ladder_chunk(spec, m, rng, cap), n, policy, workers)
    return LadderJumpBatch.concatenate(parts)


def ladder_jump(spec: ProcessSpec, rng, cap: float = 200.0) -> tuple[float, float, bool]:
    """One jump ``(dL^{-1}, dH)`` of the ladder process of a drift-creeping
    fixture: ``(0, Y)`` for an upward jump at the maximum, else the excursion
    duration and the overshoot at the weak return (0 iff the return creeps).
    The boolean flags censoring at ``cap``."""
    if not (spec.drift > 0):
        raise ValueError("ladder_jump requires positive drift (creeping fixture)")
    b = _ladder_chunk(spec, 1, rng, cap)
    return float(b.ds[0]), float(b.dx[0]), bool(b.censored[0])


def kappa_from_ladder(
    spec: ProcessSpec, batch: LadderJumpBatch, a: float, b: float
) -> EstimateWithError:
    """Ladder-representation estimate of the Laplace exponent
    ``kappa(a, b) = a + b c + rate * E[1 - e^{-a dL - b dH}]``.

    Censored excursions contribute 1 to the expectation (they behave like
    killing); the induced bias is at most ``rate * censored_mass`` in
    general and ``rate * censored_mass * e^{-a cap}`` when ``a > 0``, which
    is reported as ``bias_bound``.
    """
    vals = np.ones(batch.n)
    res = ~batch.censored
    vals[res] = 1.0 - np.exp(-a * batch.ds[res] - b * batch.dx[res])
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(batch.n)) if batch.n > 1 else 0.0
    cm = batch.censored_mass
    bias = spec.rate * cm * (math.exp(-a * batch.cap) if a > 0 else 1.0)
    return EstimateWithError(
        a + b * spec.drift + spec.rate * mean, spec.rate * se, batch.n, cm, bias
    )


def kappa_diff_from_ladder(
    spec: ProcessSpec, batch: LadderJumpBatch, theta: float, b1: float, b2: float
) -> EstimateWithError:
    """Low-variance estimate of ``kappa(theta, b1) - kappa(theta, b2)`` from
    one ladder sample set: ``(b1 - b2) c + rate * E[e^{-theta dL}(e^{-b2 dH} -
    e^{-b1 dH})]`` (censored entries contribute 0 when ``theta > 0``)."""
    vals = np.zeros(batch.n)
    res = ~batch.censored
    et = np.exp(-theta * batch.ds[res])
    vals[res] = et * (np.exp(-b2 * batch.dx[res]) - np.exp(-b1 * batch.dx[res]))
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(batch.n)) if batch.n > 1 else 0.0
    bias = spec.rate * batch.censored_mass * (math.exp(-theta * batch.cap) if theta > 0 else 1.0)
    return EstimateWithError(
        (b1 - b2) * spec.drift + spec.rate * mean, spec.rate * se, batch.n, batch.censored_mass, bias
    )


# ---------------------------------------------------------------------------
# The alpha experiment (appendix embedding) for compound Poisson fixtures
# ---------------------------------------------------------------------------


@dataclass
class AlphaBatch:
    """Samples of ``(-X_{alpha-}, X_alpha, alpha - sigma_1)`` where ``alpha``
    is the first return of the compound Poisson path to ``[0, inf)`` after
    its first jump."""

    v: np.ndarray
    x: np.ndarray
    s: np.ndarray
    censored: np.ndarray
    time_cap: float

    @property
    def n(self) -> int:
        return self.v.size

    @property
    def censored_mass(self) -> float:
        return float(self.censored.mean()) if self.n else 0.0

    @classmethod
    def concatenate(cls, parts: Sequence["AlphaBatch"]) -> "AlphaBatch":
        return cls(
            np.concatenate([p.v for p in parts]),
            np.concatenate([p.x for p in parts]),
            np.concatenate([p.s for p in parts]),
            np.concatenate([p.censored for p in parts]),
            parts[0].time_cap,
        )


def _alpha_chunk(spec: ProcessSpec, n: int, rng, time_cap: float, step_cap: int) -> AlphaBatch:
    lam = spec.rate
    v = np.zeros(n)
    x = np.zeros(n)
    s = np.zeros(n)
    censored = np.zeros(n, dtype=bool)

    y1 = spec.sample_jumps(rng, n)
    x[:] = y1  # immediate return when the first jump is upward
    active = np.flatnonzero(y1 < 0)
    pos = y1[y1 < 0].copy()
    t = np.zeros(active.size)
    steps = 0
    while active.size:
        steps += 1
        g = rng.exponential(1.0 / lam, active.size)
        t = t + g
        over = (t > time_cap) | (steps > step_cap)
        if over.any():
            fin = active[over]
            censored[fin] = True
            v[fin] = np.nan
            x[fin] = np.nan
            s[fin] = np.inf
            keep = ~over
            active, pos, t = active[keep], pos[keep], t[keep]
            if active.size == 0:
                break
        y = spec.sample_jumps(rng, active.size)
        land = pos + y
        back = land >= 0.0
        if back.any():
            fin = active[back]
            v[fin] = -pos[back]
            x[fin] = land[back]
            s[fin] = t[back]
        keep = ~back
        active, pos, t = active[keep], land[keep], t[keep]
    return AlphaBatch(v, x, s, censored, time_cap)


def sample_alpha(
    spec: ProcessSpec,
    n: int,
    policy: RngPolicy,
    time_cap: float = 50.0,
    step_cap: int = 10_000_000,
    workers: int = 1,
) -> AlphaBatch:
    if not spec.is_compound_poisson:
        raise ValueError("the alpha experiment requires a zero-drift compound Poisson fixture")
    parts = chunked_map(
        lambda i, m, rng: _alpha_chunk(spec, m, rng, time_cap, step_cap), n, policy, workers
    )
    return AlphaBatch.concatenate(parts)


def alpha_experiment(
    spec: ProcessSpec, rng, time_cap: float = 50.0, step_cap: int = 10_000_000
) -> tuple[float, float, float, bool]:
    """One sample ``(-X_{alpha-}, X_alpha, alpha - sigma_1, censored)``."""
    if not spec.is_compound_poisson:
        raise ValueError("the alpha experiment requires a zero-drift compound Poisson fixture")
    b = _alpha_chunk(spec, 1, rng, time_cap, step_cap)
    return float(b.v[0]), float(b.x[0]), float(b.s[0]), bool(b.censored[0])
