"""Hierarchy specifications, summing matrices and coherence checks.

Series are always ordered aggregates first (in declaration order) followed by
the bottom series (in declaration order), so the summing matrix has the block
form ``S = [A; I]`` with the identity in the trailing rows.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "HierarchySpec",
    "SummingMatrix",
    "SeriesPanel",
    "parse_hierarchy",
    "build_summing_matrix",
    "aggregate_bottom",
    "check_coherence",
    "bottom_block",
]

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class HierarchySpec:
    """Bottom series names plus aggregates defined as unions of children.

    Children may name bottoms or other aggregates (declared before or after);
    expansion is transitive. Construction validates the whole structure.
    """

    bottom_names: tuple
    aggregates: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "bottom_names", tuple(self.bottom_names))
        object.__setattr__(
            self,
            "aggregates",
            tuple((name, tuple(children)) for name, children in self.aggregates),
        )
        # expansion raises on every structural defect
        object.__setattr__(self, "_expanded", _expand_all(self))

    @property
    def n(self):
        return len(self.bottom_names)

    @property
    def m(self):
        return len(self.bottom_names) + len(self.aggregates)

    @property
    def aggregate_names(self):
        return tuple(name for name, _ in self.aggregates)

    @property
    def names(self):
        return self.aggregate_names + self.bottom_names

    def expansion(self, name):
        """Sorted bottom indices that aggregate ``name`` sums."""
        return self._expanded[name]

    def to_dict(self):
        return {
            "bottom": list(self.bottom_names),
            "aggregates": [
                {"name": name, "children": list(children)}
                for name, children in self.aggregates
            ],
        }

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ValidationError("hierarchy document must be a JSON object")
        if "bottom" not in doc:
            raise ValidationError("hierarchy document lacks the 'bottom' key")
        bottoms = doc["bottom"]
        if not isinstance(bottoms, list) or not all(isinstance(b, str) for b in bottoms):
            raise ValidationError("'bottom' must be an array of strings")
        raw_aggs = doc.get("aggregates", [])
        if not isinstance(raw_aggs, list):
            raise ValidationError("'aggregates' must be an array")
        aggs = []
        for i, agg in enumerate(raw_aggs):
            if not isinstance(agg, dict) or "name" not in agg or "children" not in agg:
                raise ValidationError(
                    f"aggregate #{i} must be an object with 'name' and 'children'"
                )
            name, children = agg["name"], agg["children"]
            if not isinstance(name, str):
                raise ValidationError(f"aggregate #{i}: name must be a string")
            if not isinstance(children, list):
                raise ValidationError(f"aggregate {name!r}: children must be an array")
            for child in children:
                if not isinstance(child, str):
                    # weighted or signed entries would show up here
                    raise ValidationError(
                        f"aggregate {name!r}: children must be plain series names "
                        f"(only unit-weight sums are supported), got {child!r}"
                    )
            aggs.append((name, children))
        return cls(bottoms, aggs)


def _expand_all(spec):
    bottoms = spec.bottom_names
    if len(bottoms) == 0:
        raise ValidationError("hierarchy has an empty bottom list")
    seen = set()
    for name in bottoms + tuple(name for name, _ in spec.aggregates):
        if name in seen:
            raise ValidationError(f"duplicate series name {name!r}")
        seen.add(name)

    bottom_index = {name: i for i, name in enumerate(bottoms)}
    children_of = dict(spec.aggregates)
    counts = {}

    def expand(name, stack):
        if name in counts:
            return counts[name]
        if name in stack:
            cycle = " -> ".join(stack[stack.index(name):] + [name])
            raise ValidationError(f"cyclic aggregate reference: {cycle}")
        total = np.zeros(len(bottoms), dtype=int)
        for child in children_of[name]:
            if child in bottom_index:
                total[bottom_index[child]] += 1
            elif child in children_of:
                total += expand(child, stack + [name])
            else:
                raise ValidationError(
                    f"aggregate {name!r} references unknown series {child!r}"
                )
        counts[name] = total
        return total

    expanded = {}
    for name, _ in spec.aggregates:
        total = expand(name, [])
        if total.sum() == 0:
            raise ValidationError(f"aggregate {name!r} expands to no bottom series")
        dup = [bottoms[j] for j in np.flatnonzero(total > 1)]
        if dup:
            raise ValidationError(
                f"aggregate {name!r} counts bottom series {dup} more than once"
            )
        expanded[name] = tuple(int(j) for j in np.flatnonzero(total))
    return expanded


def parse_hierarchy(text):
    """Parse a JSON hierarchy document into a validated :class:`HierarchySpec`.

    The document is an object ``{"bottom": [...], "aggregates": [{"name": ...,
    "children": [...]}, ...]}``.

    Raises
    ------
    ValidationError
        On malformed JSON, duplicate names, unknown children, cycles, duplicated
        bottom contributions or an empty bottom list.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"hierarchy document is not valid JSON: {exc}") from exc
    return HierarchySpec.from_dict(doc)


@dataclass(frozen=True)
class SummingMatrix:
    """``S = [A; I_n]`` together with the series names in row order."""

    S: np.ndarray
    names: tuple
    n: int

    def __post_init__(self):
        S = np.array(self.S, dtype=float)
        S.setflags(write=False)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "names", tuple(self.names))
        if S.ndim != 2 or S.shape[1] != self.n or S.shape[0] < self.n:
            raise ValidationError(f"summing matrix has bad shape {S.shape} for n={self.n}")
        if len(self.names) != S.shape[0]:
            raise ValidationError("one name per row of S is required")
        if not np.array_equal(S[-self.n:], np.eye(self.n)):
            raise ValidationError("bottom block of S must be the identity")

    @property
    def m(self):
        return self.S.shape[0]

    @property
    def n_upper(self):
        return self.S.shape[0] - self.n

    @property
    def A(self):
        return self.S[: self.n_upper]

    @property
    def upper_names(self):
        return self.names[: self.n_upper]

    @property
    def bottom_names(self):
        return self.names[self.n_upper:]

    @classmethod
    def from_spec(cls, spec):
        return build_summing_matrix(spec)


def build_summing_matrix(spec):
    """Summing matrix of ``spec``: aggregate incidence rows on top of ``I_n``."""
    A = np.zeros((len(spec.aggregates), spec.n))
    for row, (name, _) in enumerate(spec.aggregates):
        A[row, list(spec.expansion(name))] = 1.0
    S = np.vstack([A, np.eye(spec.n)])
    return SummingMatrix(S, spec.names, spec.n)


@dataclass(frozen=True)
class SeriesPanel:
    """``T x m`` matrix of observations with column names."""

    values: np.ndarray
    names: tuple

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[None, :]
        if values.ndim != 2:
            raise ValidationError("panel values must be a 2-D array")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", tuple(self.names))
        if len(self.names) != values.shape[1]:
            raise ValidationError(
                f"panel has {values.shape[1]} columns but {len(self.names)} names"
            )

    @property
    def T(self):
        return self.values.shape[0]

    def column(self, name):
        return self.values[:, self.names.index(name)]


def aggregate_bottom(bottom_panel, summing):
    """Aggregate a ``T x n`` bottom panel into the full ``T x m`` panel.

    Each row becomes ``y_t = S b_t``.
    """
    b = np.asarray(bottom_panel, dtype=float)
    if b.ndim == 1:
        b = b[None, :]
    if b.ndim != 2 or b.shape[1] != summing.n:
        raise ValidationError(
            f"bottom panel has shape {b.shape}, expected (T, {summing.n})"
        )
    return SeriesPanel(np.hstack([_sum_up(b, summing.A), b]), summing.names)


def _sum_up(b, A):
    # shared by aggregation and the coherence check so that exact-zero
    # tolerance holds for panels built here
    return b @ A.T


def bottom_block(values, summing):
    """Trailing ``n`` columns of a full panel (the bottom series)."""
    values = np.asarray(getattr(values, "values", values), dtype=float)
    return values[..., summing.n_upper:]


def check_coherence(panel, summing, tol=DEFAULT_TOL):
    """Test ``u_t == A b_t`` for every row of a full panel.

    Parameters
    ----------
    panel : SeriesPanel or array_like
        ``T x m`` values (a single ``m``-vector is accepted too).
    summing : SummingMatrix
    tol : float
        Absolute tolerance on the largest violation.

    Returns
    -------
    (bool, float)
        Whether the panel is coherent, and ``max |u - A b|``.
    """
    if tol < 0:
        raise ValidationError("tolerance must be nonnegative")
    y = np.asarray(getattr(panel, "values", panel), dtype=float)
    if y.ndim == 1:
        y = y[None, :]
    if y.shape[-1] != summing.m:
        raise ValidationError(
            f"panel has {y.shape[-1]} columns, hierarchy has {summing.m} series"
        )
    if summing.n_upper == 0 or y.shape[0] == 0:
        return True, 0.0
    u = y[:, : summing.n_upper]
    b = y[:, summing.n_upper:]
    violation = float(np.max(np.abs(u - _sum_up(b, summing.A))))
    return violation <= tol, violation
