"""Row-by-row pass/fail evidence for one named inequality or identity."""
from __future__ import annotations

import csv
import io
import json
import math
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

try:
    import gmpy2 as _gmpy2
except ImportError:  # pragma: no cover - pure-Python fallback below
    _gmpy2 = None

_RELATIONS = {
    ">=": operator.ge,
    "<=": operator.le,
    ">": operator.gt,
    "<": operator.lt,
    "==": operator.eq,
}


def _int_str(x: int) -> str:
    # CPython's int -> str is quadratic; GMP's is not, which matters for deep convergents
    if _gmpy2 is not None and x.bit_length() > 4096:
        return _gmpy2.mpz(x).digits(10)
    return str(x)


def encode_value(x: Any) -> Any:
    """JSON encoding: rationals as ``"num/den"``, infinities as ``"inf"``."""
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, Fraction):
        return f"{_int_str(x.numerator)}/{_int_str(x.denominator)}"
    if isinstance(x, int):
        return x
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, (list, tuple)):
        return [encode_value(y) for y in x]
    if isinstance(x, dict):
        return {k: encode_value(v) for k, v in x.items()}
    return str(x)


def decode_value(x: Any) -> Any:
    if x == "inf":
        return math.inf
    if isinstance(x, str) and "/" in x:
        return Fraction(x)
    return x


@dataclass
class Row:
    n: int
    lhs: Any
    rhs: Any
    satisfied: bool
    relation: str = ">="
    label: str = ""
    tight: bool = False
    certified: bool = True
    note: str = ""

    def to_dict(self) -> dict:
        d = {
            "n": self.n,
            "label": self.label,
            "lhs": encode_value(self.lhs),
            "relation": self.relation,
            "rhs": encode_value(self.rhs),
            "satisfied": self.satisfied,
            "tight": self.tight,
            "certified": self.certified,
        }
        if self.note:
            d["note"] = self.note
        return d


@dataclass
class BoundReport:
    bound_name: str
    rows: list[Row] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def check(self, n: int, lhs, relation: str, rhs, label: str = "",
              certified: bool = True, note: str = "") -> Row:
        ok = bool(_RELATIONS[relation](lhs, rhs))
        tight = relation in (">=", "<=") and ok and lhs == rhs
        row = Row(n, lhs, rhs, ok, relation, label, tight, certified, note)
        self.rows.append(row)
        return row

    def extend(self, other: "BoundReport") -> None:
        self.rows.extend(other.rows)

    @property
    def all_hold(self) -> bool:
        return all(r.satisfied for r in self.rows)

    @property
    def first_violation_index(self):
        for r in self.rows:
            if not r.satisfied:
                return r.n
        return None

    @property
    def summary(self) -> dict:
        return {
            "all_hold": self.all_hold,
            "first_violation_index": self.first_violation_index,
            "rows": len(self.rows),
            "tight_rows": sum(r.tight for r in self.rows),
        }

    def to_dict(self) -> dict:
        return {
            "bound": self.bound_name,
            "params": encode_value(self.params),
            "summary": self.summary,
            "rows": [r.to_dict() for r in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["n", "label", "lhs", "relation", "rhs", "satisfied", "tight", "certified", "note"]
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\r\n", extrasaction="ignore")
        w.writeheader()
        for r in self.rows:
            d = r.to_dict()
            d.setdefault("note", "")
            w.writerow(d)
        return buf.getvalue()

    def __str__(self):
        s = self.summary
        status = "PASS" if s["all_hold"] else f"FAIL at n={s['first_violation_index']}"
        return f"{self.bound_name}: {status} ({s['rows']} rows, {s['tight_rows']} tight)"
