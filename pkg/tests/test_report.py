import json
import math
from fractions import Fraction

from mcf_lab.report import BoundReport, decode_value, encode_value


def test_encoding_round_trip():
    vals = [Fraction(-7, 5), Fraction(3), math.inf, 4, None, True]
    enc = encode_value(vals)
    assert enc == ["-7/5", "3/1", "inf", 4, None, True]
    assert [decode_value(x) for x in enc] == vals


def test_huge_fraction_encoding():
    x = Fraction(3**20000 + 1, 5**7000)
    num, den = encode_value(x).split("/")
    assert Fraction(int(num), int(den)) == x


def test_report_rows_summary_and_tightness():
    rep = BoundReport("demo")
    rep.check(0, 3, ">=", 3, "equal")
    rep.check(1, 4, ">=", 3, "strict")
    rep.check(2, 1, ">=", 3, "broken")
    assert [r.tight for r in rep.rows] == [True, False, False]
    assert not rep.all_hold and rep.first_violation_index == 2
    assert rep.summary == {"all_hold": False, "first_violation_index": 2, "rows": 3, "tight_rows": 1}
    assert str(rep) == "demo: FAIL at n=2 (3 rows, 1 tight)"


def test_json_and_csv_are_deterministic():
    rep = BoundReport("demo", params={"x": Fraction(1, 3)})
    rep.check(0, Fraction(1, 2), "<=", 1, "half", note="a, b")
    d = json.loads(rep.to_json())
    assert d["params"] == {"x": "1/3"} and d["rows"][0]["lhs"] == "1/2"
    csv_text = rep.to_csv()
    assert csv_text.splitlines()[0] == "n,label,lhs,relation,rhs,satisfied,tight,certified,note"
    assert csv_text.endswith("\r\n") and '"a, b"' in csv_text
    assert rep.to_json() == BoundReport("demo", rep.rows, rep.params).to_json()
