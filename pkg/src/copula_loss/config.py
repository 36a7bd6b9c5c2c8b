"""JSON portfolio configs and CSV data files.

Portfolio config layout (all keys snake_case)::

    {
      "d": 1, "quad_order": 64, "delta": 1.0, "horizon": 5.0,
      "entities": [
        {"count": 125,
         "marginal": {"kind": "constant_intensity", "intensity": 0.05},
         "link": {"family": "gaussian", "params": [0.25]},
         "loss": {"kind": "constant", "k": 1}}
      ]
    }

``link`` is a copula spec or a list of weighted specs (a mixture); models
with ``d > 1`` use ``chain``, a list of ``d`` such specs.  Errors name the
offending key.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

import numpy as np

from .calibrate import QuoteSet, TrancheQuote
from .copulas import link_from_spec
from .engine import Portfolio, TrancheSpec
from .errors import ConfigError, CopulaLossError, DataError
from .factor import ConstantIntensity, FactorModel, PiecewiseCurve, SpreadImplied
from .lossmodel import (
    BernoulliLoss,
    BetaBinomialLoss,
    ConstantLoss,
    LinearLink,
    LossGrid,
    TabulatedLoss,
    linear_bb,
)
from .pricing import DiscountTable, FlatRate, TrancheContract, ZeroRate
from .quadrature import default_rule


def load_json(path: str | Path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {str(p)!r} does not exist")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {str(p)!r} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    return data


def _get(obj: dict, key: str, where: str, default: Any = ...):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object")
    if key not in obj:
        if default is ...:
            raise ConfigError(f"missing key {where}.{key}")
        return default
    return obj[key]


def _num(obj: dict, key: str, where: str, default: Any = ...) -> float:
    val = _get(obj, key, where, default)
    try:
        return float(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{key} must be a number, got {val!r}") from None


def _int(obj: dict, key: str, where: str, default: Any = ...) -> int:
    val = _num(obj, key, where, default)
    if val != int(val):
        raise ConfigError(f"{where}.{key} must be an integer, got {val!r}")
    return int(val)


def _wrap(where: str, fn, *args):
    try:
        return fn(*args)
    except ConfigError:
        raise
    except CopulaLossError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    except (TypeError, KeyError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def marginal_from_config(spec: dict, where: str):
    kind = _get(spec, "kind", where)
    if kind == "constant_intensity":
        return _wrap(where, ConstantIntensity, _num(spec, "intensity", where))
    if kind == "spread_implied":
        return _wrap(where, SpreadImplied, _num(spec, "intensity", where), _num(spec, "recovery", where, 0.0))
    if kind == "piecewise":
        knots = _get(spec, "knots", where)
        return _wrap(where, PiecewiseCurve, tuple(tuple(k) for k in knots))
    raise ConfigError(f"{where}.kind: unknown marginal kind {kind!r}")


def _grid(spec: dict, where: str) -> LossGrid:
    return _wrap(where, LossGrid, _int(spec, "n", where), _int(spec, "a", where, 1), _int(spec, "b", where, 0))


def loss_from_config(spec: dict | None, where: str):
    if spec is None:
        return ConstantLoss(1)
    kind = _get(spec, "kind", where)
    if kind == "constant":
        return _wrap(where, ConstantLoss, _int(spec, "k", where, 1))
    if kind == "beta_binomial":
        return _wrap(where, BetaBinomialLoss, _num(spec, "alpha", where), _num(spec, "beta", where), _grid(spec, where))
    if kind == "linear_bb":
        m = [_num(spec, f"m{i}", where) for i in range(1, 5)]
        return _wrap(where, linear_bb, *m, _grid(spec, where))
    if kind == "bernoulli":
        prob = _get(spec, "prob", where)
        size = _int(spec, "size", where, 1)
        if isinstance(prob, dict):
            link = LinearLink(
                _num(prob, "intercept", f"{where}.prob"),
                _num(prob, "slope", f"{where}.prob"),
                bool(prob.get("decreasing", False)),
            )
            return _wrap(where, BernoulliLoss, link, size)
        return _wrap(where, BernoulliLoss, _num(spec, "prob", where), size)
    if kind == "tabulated":
        return _wrap(where, TabulatedLoss, tuple(_get(spec, "table", where)))
    raise ConfigError(f"{where}.kind: unknown loss kind {kind!r}")


def portfolio_from_config(cfg: dict, where: str = "config") -> Portfolio:
    d = _int(cfg, "d", where, 1)
    delta = _num(cfg, "delta", where, 1.0)
    entities = _get(cfg, "entities", where)
    if not isinstance(entities, list):
        raise ConfigError(f"{where}.entities must be a list")
    chains, marginals, losses = [], [], []
    for i, ent in enumerate(entities):
        w = f"{where}.entities[{i}]"
        count = _int(ent, "count", w, 1)
        if count < 0:
            raise ConfigError(f"{w}.count must be nonnegative")
        if "chain" in ent:
            specs = _get(ent, "chain", w)
            if not isinstance(specs, list):
                raise ConfigError(f"{w}.chain must be a list of {d} copula specs")
            chain = tuple(_wrap(f"{w}.chain[{k}]", link_from_spec, s) for k, s in enumerate(specs))
        else:
            chain = (_wrap(f"{w}.link", link_from_spec, _get(ent, "link", w)),)
        if len(chain) != d:
            raise ConfigError(f"{w}: link chain has {len(chain)} copulas but d={d}")
        marginal = marginal_from_config(_get(ent, "marginal", w), f"{w}.marginal")
        loss = loss_from_config(ent.get("loss"), f"{w}.loss")
        chains += [chain] * count
        marginals += [marginal] * count
        losses += [loss] * count
    model = _wrap(where, FactorModel, tuple(chains), tuple(marginals), d)
    return _wrap(where, Portfolio, model, tuple(losses), delta)


def rule_from_config(cfg: dict, d: int, override: int | None = None):
    order = override if override is not None else cfg.get("quad_order")
    if order is not None and (int(order) != order or order < 1):
        raise ConfigError(f"quad_order must be a positive integer, got {order!r}")
    return _wrap("quad_order", default_rule, d, None if order is None else int(order))


def horizon_from_config(cfg: dict, override: float | None = None) -> float:
    t = override if override is not None else cfg.get("horizon")
    if t is None:
        raise ConfigError("missing key config.horizon (or pass --horizon)")
    t = float(t)
    if not t > 0.0:
        raise ConfigError(f"horizon must be positive, got {t}")
    return t


def curve_from_config(spec: dict, where: str = "contracts"):
    if "discount_table" in spec:
        return _wrap(where, DiscountTable, tuple(tuple(k) for k in spec["discount_table"]))
    rate = _num(spec, "rate", where, 0.0)
    return ZeroRate() if rate == 0.0 else _wrap(where, FlatRate, rate)


def tranche_from_config(spec: dict, notional: float, units: str, where: str) -> TrancheSpec:
    scale = notional if units == "fraction" else 1.0
    return _wrap(where, TrancheSpec, scale * _num(spec, "attach", where), scale * _num(spec, "detach", where))


def contracts_from_config(cfg: dict, portfolio: Portfolio) -> tuple[list[TrancheContract], Any]:
    where = "config.contracts"
    spec = _get(cfg, "contracts", "config")
    units = _get(spec, "units", where, "currency")
    if units not in ("currency", "fraction"):
        raise ConfigError(f"{where}.units must be 'currency' or 'fraction', got {units!r}")
    notional = portfolio.delta * portfolio.max_units
    maturity = _num(spec, "maturity_years", where)
    freq = _int(spec, "payment_freq", where, 4)
    dt = _num(spec, "dt", where, 1.0 / 48.0)
    out = []
    for i, tr in enumerate(_get(spec, "tranches", where)):
        w = f"{where}.tranches[{i}]"
        tranche = tranche_from_config(tr, notional, units, w)
        out.append(_wrap(w, TrancheContract, tranche, _num(tr, "spread_bp", w) / 1e4, maturity, freq, dt))
    return out, curve_from_config(spec, where)


# ---------------------------------------------------------------------------
# CSV data
# ---------------------------------------------------------------------------

QUOTE_COLUMNS = ("date", "attach", "detach", "spread_bp", "upfront_bid", "upfront_ask", "index_spread_bp")


def read_quotes_csv(path: str | Path, date: str | None = None, notional: float = 1.0) -> QuoteSet:
    """Read tranche quotes; attach/detach are fractions of notional, upfronts fractions of width."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"quotes file {str(p)!r} does not exist")
    with p.open(newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(QUOTE_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise DataError(f"quotes file lacks columns: {sorted(missing)}")
        rows = list(reader)
    dates = sorted({r["date"] for r in rows})
    if not rows:
        raise DataError("quotes file has no rows")
    if date is None:
        if len(dates) > 1:
            raise DataError(f"quotes file holds several dates {dates}; select one with --date")
        date = dates[0]
    rows = [r for r in rows if r["date"] == date]
    if not rows:
        raise DataError(f"no quotes for date {date!r}")
    try:
        quotes = []
        for r in rows:
            bid, ask = float(r["upfront_bid"]), float(r["upfront_ask"])
            quotes.append(TrancheQuote(
                attach=float(r["attach"]) * notional,
                detach=float(r["detach"]) * notional,
                spread=float(r["spread_bp"]) / 1e4,
                upfront_mid=0.5 * (bid + ask),
                upfront_bid=bid,
                upfront_ask=ask,
            ))
        index = {float(r["index_spread_bp"]) for r in rows}
    except ValueError as exc:
        raise DataError(f"malformed number in quotes file: {exc}") from None
    if len(index) != 1:
        raise DataError("index spread must be the same on every row of a date")
    return QuoteSet(tuple(quotes), index_spread=index.pop() / 1e4, date=date)


def read_recoveries(path: str | Path) -> np.ndarray:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"recoveries file {str(p)!r} does not exist")
    values = []
    for lineno, line in enumerate(p.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            values.append(float(line.split(",")[0]))
        except ValueError:
            if lineno == 1:
                continue  # header
            raise DataError(f"recoveries file line {lineno}: not a number: {line!r}") from None
    return np.array(values)
