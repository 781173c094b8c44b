import pytest
from hypothesis import given, strategies as st

from rankjoin import (
    Database,
    ProbeCapError,
    SchemaError,
    ScoreModel,
    Table,
    WeightError,
    check_compatible,
    gyo_join_tree,
    parse_query,
    parse_ranking,
    probe_decomposable,
)
from rankjoin.ranking import MONOIDS, MAX_IDENTITY

ints = st.integers(min_value=-(2**31), max_value=2**31 - 1)
small_pos = st.integers(min_value=1, max_value=10**6)


class TestParse:
    @pytest.mark.parametrize(
        "text,kind,op",
        [
            ("tuple_sum", "tuple", "sum"),
            ("tuple_max", "tuple", "max"),
            ("tuple_product", "tuple", "product"),
            ("vertex_sum", "vertex", "sum"),
        ],
    )
    def test_monoid_specs(self, text, kind, op):
        rf = parse_ranking(text)
        assert (rf.kind, rf.op) == (kind, op)

    def test_lex(self):
        rf = parse_ranking("lex(z,x,y)")
        assert rf.kind == "lex" and rf.lex_order == ("z", "x", "y")

    def test_bounded(self):
        rf = parse_ranking("bounded(tuple_sum; x,y)")
        assert rf.kind == "bounded"
        assert rf.inner_kind == "tuple" and rf.op == "sum"
        assert rf.bound_vars == {"x", "y"}

    def test_garbage(self):
        with pytest.raises(SchemaError):
            parse_ranking("tuple_median")

    def test_spec_roundtrip(self):
        for text in ("tuple_sum", "vertex_max", "lex(a,b)", "bounded(vertex_sum; a)"):
            assert parse_ranking(parse_ranking(text).spec()) == parse_ranking(text)


class TestMonoidLaws:
    @pytest.mark.parametrize("op", ["sum", "max"])
    @given(a=ints, b=ints, c=ints)
    def test_assoc_comm_identity(self, op, a, b, c):
        m = MONOIDS[op]
        f = m.combine
        assert f(f(a, b), c) == f(a, f(b, c))
        assert f(a, b) == f(b, a)
        assert f(a, m.identity) == a

    @given(a=small_pos, b=small_pos, c=small_pos)
    def test_product_laws(self, a, b, c):
        m = MONOIDS["product"]
        f = m.combine
        assert f(f(a, b), c) == f(a, f(b, c))
        assert f(a, m.identity) == a

    @pytest.mark.parametrize("op", ["sum", "max"])
    @given(a=ints, b=ints, c=ints)
    def test_monotone(self, op, a, b, c):
        f = MONOIDS[op].combine
        lo, hi = sorted((a, b))
        assert f(hi, c) >= f(lo, c)

    def test_product_overflow_checked(self):
        with pytest.raises(WeightError):
            MONOIDS["product"].combine(2**40, 2**40)

    def test_max_identity_below_everything(self):
        assert MAX_IDENTITY < -(2**63)


class TestCompatibility:
    def _decomp(self):
        cq = parse_query("Q(x,y,z) :- R(x,y), S(y,z)").disjuncts[0]
        return cq, gyo_join_tree(cq)

    def test_monoid_always_compatible(self):
        _, d = self._decomp()
        assert check_compatible(parse_ranking("tuple_sum"), d).compatible
        assert check_compatible(parse_ranking("vertex_max"), d).compatible

    def test_lex_always_compatible(self):
        _, d = self._decomp()
        assert check_compatible(parse_ranking("lex(z,x,y)"), d).compatible

    def test_bounded_needs_containment(self):
        _, d = self._decomp()
        report = check_compatible(parse_ranking("bounded(vertex_sum; z)"), d)
        assert not report.compatible
        assert report.failing_nodes == (0,)  # the {x,y} root bag lacks z

    def test_product_requires_positive_weights(self):
        cq = parse_query("Q(x,y) :- R(x,y)").disjuncts[0]
        t = Table.from_rows("R", ("x", "y"), [("1", "2")], weights=[-3])
        db = Database.build([t])
        with pytest.raises(WeightError):
            ScoreModel(parse_ranking("tuple_product"), db, cq, gyo_join_tree(cq))

    def test_lex_order_must_cover_head(self):
        cq = parse_query("Q(x,y) :- R(x,y)").disjuncts[0]
        db = Database.build([Table.from_rows("R", ("x", "y"), [("1", "2")])])
        with pytest.raises(SchemaError, match="every head variable"):
            ScoreModel(parse_ranking("lex(x)"), db, cq, gyo_join_tree(cq))


class TestProbe:
    DOMS = {v: ["-1", "1"] for v in ("x1", "x2", "y1", "y2")}

    @staticmethod
    def _inner_product(val):
        return int(val["x1"]) * int(val["y1"]) + int(val["x2"]) * int(val["y2"])

    def test_vertex_sum_passes_any_s(self):
        w = {"-1": 4, "1": 9}

        def scorer(val):
            return sum(w[val[v]] for v in val)

        for s in (["x1"], ["x1", "x2"], ["x1", "y2"], []):
            assert (
                probe_decomposable(scorer, list(self.DOMS), s, self.DOMS) is None
            )

    def test_inner_product_witness(self):
        wit = probe_decomposable(
            self._inner_product, list(self.DOMS), ["x1", "x2"], self.DOMS
        )
        assert wit is not None
        theta1, theta2, phi1, phi2 = wit
        # the witness really exhibits an order reversal
        s1 = self._inner_product({**theta1, **phi1})
        s2 = self._inner_product({**theta2, **phi1})
        s3 = self._inner_product({**theta1, **phi2})
        s4 = self._inner_product({**theta2, **phi2})
        assert (s1 < s2) and (s3 > s4)

    def test_empty_s_passes(self):
        assert (
            probe_decomposable(self._inner_product, list(self.DOMS), [], self.DOMS)
            is None
        )

    def test_cap(self):
        doms = {v: [str(i) for i in range(200)] for v in ("a", "b")}
        with pytest.raises(ProbeCapError):
            probe_decomposable(lambda v: 0, ["a", "b"], ["a"], doms)
