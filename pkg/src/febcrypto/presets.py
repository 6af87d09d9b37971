"""Named, validated parameter sets."""

from __future__ import annotations

from .protocols import OtParams, SkeParams


class UnknownPreset(KeyError):
    def __str__(self) -> str:
        return self.args[0]


def _ske_desk() -> dict:
    return {"params": SkeParams(nu=12, k=4, t=2000, s=2000, delta_prime=0.05, eta=30)}


def _ot_desk() -> dict:
    return {"params": OtParams(nu=10, n=128, eta=40)}


def _landauer_exhaustive() -> dict:
    return {"len_x": 12, "len_y": 6, "w_in": [0, 2, 4], "w_out_offsets": list(range(1, 9))}


PRESETS = {
    "ske-desk": _ske_desk,
    "ot-desk": _ot_desk,
    "landauer-exhaustive": _landauer_exhaustive,
}


def preset(name: str) -> dict:
    if name not in PRESETS:
        raise UnknownPreset(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    out = PRESETS[name]()
    params = out.get("params")
    if params is not None:
        params.validate()
    return out
