from __future__ import annotations

import hashlib
from typing import Dict


def derive_seed(master: int, *parts: object) -> int:
    """Independent 32-bit stream per unit: sha256 over the master seed and
    the unit coordinates, so serial and parallel runs draw identically."""
    key = "|".join([str(int(master))] + [str(p) for p in parts])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


class SeedLedger:
    def __init__(self, master: int) -> None:
        self.master = int(master)
        self.entries: Dict[str, int] = {}

    def derive(self, *parts: object) -> int:
        seed = derive_seed(self.master, *parts)
        self.entries["/".join(str(p) for p in parts)] = seed
        return seed

    def to_dict(self) -> Dict[str, object]:
        return {"master": self.master, "derived": dict(sorted(self.entries.items()))}
