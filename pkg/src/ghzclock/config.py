"""Flat ``key = value`` constants file.

Example::

    # overrides for a shorter link
    link_length_L = 2000
    gamma_dark = 5
"""

from __future__ import annotations

import hashlib
from dataclasses import fields
from pathlib import Path

from .params import LowerLevelRates

KNOWN_KEYS = tuple(f.name for f in fields(LowerLevelRates))


class ConfigError(ValueError):
    pass


def parse_config(text: str) -> dict[str, float]:
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = float(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: {value!r} is not a number") from None
    return values


def load_rates(path: str | Path | None) -> tuple[LowerLevelRates, str]:
    """Rates with overrides from ``path`` applied, and a digest of the result.

    The digest is taken over the resolved values, so an absent file and a
    file restating the defaults hash identically.
    """
    overrides = parse_config(Path(path).read_text()) if path else {}
    rates = LowerLevelRates(**overrides)
    return rates, rates_digest(rates)


def rates_digest(rates: LowerLevelRates) -> str:
    canon = "\n".join(f"{k}={getattr(rates, k)!r}" for k in KNOWN_KEYS)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]
