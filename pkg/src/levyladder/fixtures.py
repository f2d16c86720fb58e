"""Canonical process fixtures and the config schema that describes them.

Fixture config schema (JSON; used standalone or inline in runner configs)::

    {"kind": "levy", "drift": 1.0, "rate": 2.0,
     "jumps": {"variant": "discrete", "atoms": [[1.0, 0.5], [-1.0, 0.5]]}}

    {"kind": "levy", "drift": 1.0, "rate": 0.5,
     "jumps": {"variant": "exponential", "rate": 1.0, "sign": -1}}

    {"kind": "levy", "drift": 0.0, "rate": 1.0,
     "jumps": {"variant": "uniform", "lo": 0.5, "hi": 1.5}}

    {"kind": "bivariate", "d_z": 0.5, "d_y": 1.0, "q": 0.2,
     "atoms": [[1, 1, 0.3], [2, 0, 0.2], [0, 3, 0.1]]}

Shipped fixtures:

* ``P1`` -- drift 1, rate 2, jumps +-1 each with probability 1/2.  Creeps;
  its creep-time support is the union of intervals ``(n, n+t]``.
* ``P2`` -- drift 1, rate 1/2, jumps -Exp(1).  Spectrally negative with
  positive mean, so upward passage is always by creeping.
* ``P3`` -- zero drift, rate 1, jumps uniform on {-2,-1,+1,+2}.  Compound
  Poisson on the unit lattice; never creeps.
* ``B1`` -- bivariate subordinator with drifts (0.5, 1), killing 0.2 and
  atoms {(1,1,.3), (2,0,.2), (0,3,.1)}.
* ``S1`` -- increasing process: drift 1, rate 1, jumps +Exp(1); used for the
  resolvent-creeping check.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Any, Mapping, Union

from .processes import (
    BivariateSubordinatorSpec,
    DiscreteAtoms,
    ExponentialJumps,
    ProcessSpec,
    UniformJumps,
)

__all__ = ["FIXTURES", "fixture", "spec_from_config", "P1", "P2", "P3", "B1", "S1"]

AnySpec = Union[ProcessSpec, BivariateSubordinatorSpec]

P1 = ProcessSpec(
    drift=1.0,
    rate=2.0,
    jumps=DiscreteAtoms([(1.0, Fraction(1, 2)), (-1.0, Fraction(1, 2))]),
)

P2 = ProcessSpec(drift=1.0, rate=0.5, jumps=ExponentialJumps(rate=1.0, sign=-1))

P3 = ProcessSpec(
    drift=0.0,
    rate=1.0,
    jumps=DiscreteAtoms(
        [(-2.0, Fraction(1, 4)), (-1.0, Fraction(1, 4)), (1.0, Fraction(1, 4)), (2.0, Fraction(1, 4))]
    ),
)

B1 = BivariateSubordinatorSpec(
    d_z=0.5, d_y=1.0, q=0.2, atoms=((1.0, 1.0, 0.3), (2.0, 0.0, 0.2), (0.0, 3.0, 0.1))
)

S1 = ProcessSpec(drift=1.0, rate=1.0, jumps=ExponentialJumps(rate=1.0, sign=1))

FIXTURES: dict[str, AnySpec] = {"P1": P1, "P2": P2, "P3": P3, "B1": B1, "S1": S1}


def fixture(name: str) -> AnySpec:
    try:
        return FIXTURES[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; shipped fixtures: {sorted(FIXTURES)}") from None


class ConfigError(ValueError):
    """Raised when a config mapping violates the documented schema.

    The message always names the offending key path.
    """


def _reject_unknown(cfg: Mapping[str, Any], allowed: set[str], where: str) -> None:
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}; allowed {sorted(allowed)}")


def _jump_law_from_config(cfg: Mapping[str, Any], where: str):
    if "variant" not in cfg:
        raise ConfigError(f"{where}.variant: missing")
    variant = cfg["variant"]
    if variant == "discrete":
        _reject_unknown(cfg, {"variant", "atoms"}, where)
        atoms = cfg.get("atoms")
        if not atoms:
            raise ConfigError(f"{where}.atoms: missing or empty")
        return DiscreteAtoms([(float(v), Fraction(p) if isinstance(p, str) else p) for v, p in atoms])
    if variant == "exponential":
        _reject_unknown(cfg, {"variant", "rate", "sign"}, where)
        return ExponentialJumps(rate=float(cfg["rate"]), sign=int(cfg.get("sign", 1)))
    if variant == "uniform":
        _reject_unknown(cfg, {"variant", "lo", "hi"}, where)
        return UniformJumps(lo=float(cfg["lo"]), hi=float(cfg["hi"]))
    raise ConfigError(f"{where}.variant: unknown variant {variant!r}")


def spec_from_config(cfg: Mapping[str, Any], where: str = "fixture") -> AnySpec:
    """Build a process spec from its config mapping, rejecting unknown keys."""
    kind = cfg.get("kind")
    if kind == "levy":
        _reject_unknown(cfg, {"kind", "drift", "rate", "jumps"}, where)
        rate = float(cfg.get("rate", 0.0))
        jumps = _jump_law_from_config(cfg["jumps"], where + ".jumps") if rate > 0 else None
        try:
            return ProcessSpec(drift=float(cfg.get("drift", 0.0)), rate=rate, jumps=jumps)
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    if kind == "bivariate":
        _reject_unknown(cfg, {"kind", "d_z", "d_y", "q", "atoms"}, where)
        try:
            return BivariateSubordinatorSpec(
                d_z=float(cfg.get("d_z", 0.0)),
                d_y=float(cfg.get("d_y", 0.0)),
                q=float(cfg.get("q", 0.0)),
                atoms=tuple(tuple(map(float, a)) for a in cfg.get("atoms", ())),
            )
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}.kind: must be 'levy' or 'bivariate', got {kind!r}")
