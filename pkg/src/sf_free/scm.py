from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.data import FeatureSpace, Scaling


logger = logging.getLogger("sf.scm")


class SCMError(ValueError):
    pass


@dataclass(frozen=True)
class Equation:
    """child = intercept + sum(coefficient * parent), in raw feature units."""

    child: str
    parents: Tuple[str, ...]
    coefficients: Tuple[float, ...]
    intercept: float = 0.0


@dataclass(frozen=True)
class SCMSpec:
    """Ordered linear structural equations; no equations means the
    non-causal setting where actions do not propagate."""

    equations: Tuple[Equation, ...] = ()

    @property
    def is_identity(self) -> bool:
        return not self.equations

    def to_dict(self) -> Dict[str, Any]:
        return {
            "equations": [
                {"child": e.child, "parents": list(e.parents), "coefficients": list(e.coefficients), "intercept": e.intercept}
                for e in self.equations
            ]
        }

    def evaluate(self, values: Dict[str, np.ndarray], noise: Optional[Dict[str, np.ndarray]] = None) -> Dict[str, np.ndarray]:
        """Generate children from parents in topological order (raw units)."""
        out = dict(values)
        for e in self.equations:
            v = np.full_like(np.asarray(out[e.parents[0]], dtype=float), e.intercept) if e.parents else e.intercept
            for p, c in zip(e.parents, e.coefficients):
                v = v + c * np.asarray(out[p], dtype=float)
            if noise and e.child in noise:
                v = v + noise[e.child]
            out[e.child] = v
        return out


def parse_scm(doc: Any) -> SCMSpec:
    """Accepts {"equations": [...]} or a bare list; equations are reordered topologically."""
    if doc is None:
        return SCMSpec()
    entries = doc.get("equations", []) if isinstance(doc, dict) else doc
    if not isinstance(entries, list):
        raise SCMError("SCM document must hold a list of equations")
    eqs: Dict[str, Equation] = {}
    for e in entries:
        try:
            child = str(e["child"])
            parents = tuple(str(p) for p in e.get("parents", []))
            coefs = tuple(float(c) for c in e.get("coefficients", []))
        except (KeyError, TypeError, ValueError) as exc:
            raise SCMError(f"malformed SCM equation {e!r}") from exc
        if len(parents) != len(coefs):
            raise SCMError(f"equation for '{child}' has {len(parents)} parents but {len(coefs)} coefficients")
        if child in eqs:
            raise SCMError(f"feature '{child}' has two structural equations")
        eqs[child] = Equation(child=child, parents=parents, coefficients=coefs, intercept=float(e.get("intercept", 0.0)))
    graph = {c: set(e.parents) for c, e in eqs.items()}
    try:
        order = list(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        raise SCMError(f"SCM contains a cycle: {exc.args[1]}") from exc
    return SCMSpec(equations=tuple(eqs[n] for n in order if n in eqs))


def load_scm(path: Optional[str]) -> SCMSpec:
    if not path:
        return SCMSpec()
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise SCMError(f"cannot read SCM '{path}': {exc}") from exc
    return parse_scm(doc)


@dataclass(frozen=True)
class BoundSCM:
    """SCM resolved to encoded columns with coefficients rescaled to the
    min-max scaled space of one training fold."""

    children: Tuple[int, ...]
    parents: Tuple[Tuple[int, ...], ...]
    coefficients: Tuple[np.ndarray, ...]

    def propagate(self, q: np.ndarray, X: np.ndarray) -> np.ndarray:
        """Push the changes X - q to causal descendants.

        Abduction keeps each unit's exogenous noise, so a child moves by
        sum(coefficient * parent change) on top of any change applied to it.
        """
        X = np.array(np.atleast_2d(X), dtype=float)
        for child, parents, coefs in zip(self.children, self.parents, self.coefficients):
            if parents:
                X[:, child] += (X[:, list(parents)] - q[list(parents)]) @ coefs
        return X


IDENTITY = BoundSCM(children=(), parents=(), coefficients=())


def bind_scm(scm: Optional[SCMSpec], space: FeatureSpace, scaling: Optional[Scaling] = None) -> BoundSCM:
    if scm is None or scm.is_identity:
        return IDENTITY
    names = space.names
    children: List[int] = []
    parents: List[Tuple[int, ...]] = []
    coefs: List[np.ndarray] = []

    def feature(name: str) -> int:
        if name not in names:
            raise SCMError(f"SCM references unknown feature '{name}'")
        i = names.index(name)
        if space.is_categorical(i):
            raise SCMError(f"SCM feature '{name}' must be continuous")
        return i

    def span(i: int) -> float:
        if scaling is None:
            return 1.0
        return float(scaling.hi[i] - scaling.lo[i])

    for e in scm.equations:
        c = feature(e.child)
        ps = [feature(p) for p in e.parents]
        sc = span(c)
        scaled = [coef * span(p) / sc if sc > 0 else 0.0 for p, coef in zip(ps, e.coefficients)]
        children.append(space.column_of(c))
        parents.append(tuple(space.column_of(p) for p in ps))
        coefs.append(np.asarray(scaled, dtype=float))
    return BoundSCM(children=tuple(children), parents=tuple(parents), coefficients=tuple(coefs))

