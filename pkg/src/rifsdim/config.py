"""Reading and writing RIFS configuration files (JSON)."""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .errors import StructuralError
from .model import Ifs, Rifs, SimilarityMap
from .numfield import RATIONALS, field_make, scalar_from_json

SHIPPED = ("sec61.json", "sec63.json", "sec63_s1.json", "sec63_s2.json",
           "random_cantor.json", "golden_bernoulli.json")


def resolve_config_path(path) -> Path:
    """A filesystem path, or the bare name of one of the shipped configs."""
    p = Path(path)
    if p.exists():
        return p
    name = p.name if p.suffix else p.name + ".json"
    ref = resources.files("rifsdim") / "data" / name
    if ref.is_file():
        return Path(str(ref))
    raise FileNotFoundError(f"no config at {path!s} and no shipped config named {name}")


def rifs_from_dict(cfg: dict) -> Rifs:
    try:
        if "field" in cfg:
            fld = field_make(cfg["field"]["minpoly"], cfg["field"]["interval"])
        else:
            fld = RATIONALS
        systems = []
        for s in cfg["systems"]:
            maps = [SimilarityMap(scalar_from_json(fld, mp["ratio"]),
                                  scalar_from_json(fld, mp["translation"]))
                    for mp in s["maps"]]
            probs = [Fraction(p) for p in s["probs"]]
            if any(p == 0 for p in probs):
                raise StructuralError("zero probabilities are not allowed")
            systems.append(Ifs.build(maps, probs))
        m = len(systems)
        theta = [Fraction(t) for t in cfg.get("theta", [Fraction(1, m)] * m)]
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise StructuralError(f"malformed config: {exc}") from exc
    return Rifs(fld, tuple(systems), tuple(theta))


def load_config(path) -> tuple[Rifs, dict]:
    p = resolve_config_path(path)
    cfg = json.loads(p.read_text())
    return rifs_from_dict(cfg), cfg


def rifs_to_dict(rifs: Rifs, seed: int | None = None) -> dict:
    out = {
        "field": rifs.field.to_json(),
        "systems": [
            {"maps": [{"ratio": mp.ratio.to_json(), "translation": mp.translation.to_json()}
                      for mp in s.maps],
             "probs": [str(p) for p in s.probs]}
            for s in rifs.systems
        ],
        "theta": [str(t) for t in rifs.theta],
    }
    if seed is not None:
        out["seed"] = seed
    return out


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def system_hash(rifs: Rifs) -> str:
    """Hash of field, maps and probabilities (theta excluded: graphs do not depend on it)."""
    d = rifs_to_dict(rifs)
    d.pop("theta")
    return hashlib.sha256(canonical_json(d).encode()).hexdigest()
