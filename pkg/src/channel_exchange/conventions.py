"""Sign conventions that the closed-form amplitude leaves open.

Only the product of the three signs is observable in the exchange term;
`calibrate` in :mod:`channel_exchange.scan` fixes them against the
back-to-back anchor.
"""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class Conventions:
    # eps^{0123}
    levi_civita_sign: int = 1
    # sign multiplying 8i (p.pbar) eps P Pbar for an up-spin electron; down takes the opposite
    t2_up_sign: int = -1
    # x-component sign of the +z reference RCP vector (0, r_sign, -i, 0)/sqrt(2); LCP takes -r_sign
    rcp_x_sign: int = -1

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value not in (1, -1):
                raise ValueError(f"{name} must be +1 or -1, got {value!r}")

    def as_dict(self) -> dict[str, int]:
        return asdict(self)


CANONICAL = Conventions()


def all_conventions() -> list[Conventions]:
    """The 2**3 assignments, canonical first, then in fixed flip order."""
    out = []
    for flips in itertools.product((False, True), repeat=3):
        lc, t2, rl = (-s if f else s for s, f in zip((1, -1, -1), flips))
        out.append(Conventions(lc, t2, rl))
    return out
