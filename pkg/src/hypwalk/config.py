"""Run configuration: group/measure specs, validation, canonical digests."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field

from .groups import FreeGroup, FreeProduct, Group, IntegerLine, make_group
from .measures import StepMeasure, step_measure

log = logging.getLogger("hypwalk")

SCHEMA_VERSION = "1"
RENORM_LOG_DRIFT = 1e-9

#: commands that draw random numbers and therefore require a seed
STOCHASTIC_COMMANDS = {"entropy", "escape", "harmonic", "obstacle-verify",
                       "lipschitz-scan", "stability"}


class ConfigError(ValueError):
    pass


def parse_word(group: Group, spec):
    """Parse one group element from its config spelling.

    Z: an integer.  Free groups: a string over a..z (generators) and
    A..Z (inverses), or a list of signed letter indices.  Free products:
    space-separated syllables like "s t2 s" (letters s, t with an optional
    exponent), or a list of [factor, exponent] pairs.
    """
    if isinstance(group, IntegerLine):
        if isinstance(spec, bool) or not isinstance(spec, int):
            raise ConfigError(f"elements of Z are integers, got {spec!r}")
        return spec
    if isinstance(group, FreeGroup):
        if isinstance(spec, str):
            letters = []
            for ch in spec:
                if ch.islower():
                    letters.append(ord(ch) - ord("a") + 1)
                elif ch.isupper():
                    letters.append(-(ord(ch) - ord("A") + 1))
                else:
                    raise ConfigError(f"bad letter {ch!r} in word {spec!r}")
            spec = letters
        if spec in ("", []):
            return group.identity
        word = tuple(int(a) for a in spec)
        try:
            group.check_element(word)
        except Exception as exc:
            raise ConfigError(f"word {spec!r} is not a normal form: {exc}") from exc
        return word
    if isinstance(group, FreeProduct):
        if isinstance(spec, str):
            syls = []
            for tok in spec.split():
                name, _, exp = tok[0], tok[1:], tok[1:] or "1"
                if name not in ("s", "t"):
                    raise ConfigError(f"bad syllable {tok!r} (use s/t)")
                syls.append([0 if name == "s" else 1, int(exp)])
            spec = syls
        word = tuple((int(f), int(e)) for f, e in spec)
        try:
            group.check_element(word)
        except Exception as exc:
            raise ConfigError(f"word {spec!r} is not a normal form: {exc}") from exc
        return word
    raise ConfigError(f"unsupported group {group!r}")


def format_word(group: Group, x) -> str:
    if isinstance(group, IntegerLine):
        return str(x)
    if isinstance(group, FreeGroup):
        out = []
        for a in x:
            out.append(chr(ord("a") + a - 1) if a > 0 else chr(ord("A") - a - 1))
        return "".join(out) or "e"
    if isinstance(group, FreeProduct):
        return " ".join(f"{'st'[f]}{e if e > 1 else ''}" for f, e in x) or "e"
    return repr(x)


@dataclass
class RunConfig:
    group: Group
    measure: StepMeasure
    seed: int | None
    params: dict
    output: str | None
    raw: dict = field(default_factory=dict)

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(self.raw, sort_keys=True).encode()
        ).hexdigest()[:16]


def load_config(data: dict, overrides: dict | None = None,
                command: str | None = None) -> RunConfig:
    """Validate and materialize a config mapping (flags > file > defaults)."""
    merged = dict(data)
    if overrides:
        for key, val in overrides.items():
            if val is None:
                continue
            if key == "params":
                merged.setdefault("params", {})
                merged["params"] = {**merged.get("params", {}), **val}
            else:
                merged[key] = val
            log.info("config override: %s = %r", key, val)
    gspec = merged.get("group")
    if not isinstance(gspec, dict) or "kind" not in gspec:
        raise ConfigError("config needs a group: {kind, ...}")
    try:
        group = make_group(**gspec)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad group spec {gspec!r}: {exc}") from exc
    mspec = merged.get("measure")
    if not isinstance(mspec, list) or not mspec:
        raise ConfigError("config needs a measure: [[word, prob], ...]")
    items = []
    total = 0.0
    for entry in mspec:
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            raise ConfigError(f"measure entries are [word, prob], got {entry!r}")
        word, prob = entry
        prob = float(prob)
        if prob <= 0:
            raise ConfigError(f"measure probability must be > 0 in {entry!r}")
        items.append((parse_word(group, word), prob))
        total += prob
    if abs(total - 1.0) > merged.get("drift_tol", 1e-6):
        raise ConfigError(
            f"measure probabilities sum to {total}, beyond drift tolerance; "
            f"field: measure"
        )
    if abs(total - 1.0) > RENORM_LOG_DRIFT:
        log.info("re-normalizing measure: mass drift %.3e", abs(total - 1.0))
    try:
        measure = step_measure(group, items)
    except ValueError as exc:
        raise ConfigError(f"bad measure: {exc}") from exc
    seed = merged.get("seed")
    if seed is not None:
        seed = int(seed)
    if command in STOCHASTIC_COMMANDS and seed is None:
        raise ConfigError(f"command {command!r} is stochastic: a seed is required")
    params = dict(merged.get("params", {}))
    return RunConfig(group, measure, seed, params, merged.get("output"), merged)
