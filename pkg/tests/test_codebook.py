"""Marker family construction and the fixed Meshalkin alphabets."""

import pytest

from finicode.dyadic import (
    D_ONE,
    DyadicPolynomial,
    DyadicRational,
    entropy,
    informational_variance,
)
from finicode.codebook import (
    binomial_form_gfs,
    construct_family,
    family_invariants_report,
    meshalkin_alphabets,
)

dy = DyadicRational


class TestConstructFamily:
    def test_n1_vectors(self):
        fam = construct_family(1)
        assert [float(p) for p in fam.p.probs] == [0.5, 0.25] + [0.0625] * 4
        assert [float(q) for q in fam.q.probs] == [0.5] + [0.125] * 4

    def test_n2_profile(self):
        fam = construct_family(2)
        assert len(fam.p) == 42 and len(fam.q) == 41
        p_exps = [pr.log2_if_power_of_half() for pr in fam.p.probs]
        assert p_exps == [1, 4] + [6] * 24 + [8] * 16
        q_exps = [pr.log2_if_power_of_half() for pr in fam.q.probs]
        assert q_exps == [1] + [5] * 8 + [7] * 32

    def test_n2_entropy_and_variance(self):
        fam = construct_family(2)
        assert entropy(fam.p) == dy(7, 1)
        assert entropy(fam.q) == dy(7, 1)
        assert informational_variance(fam.p) == dy(27, 2)
        assert informational_variance(fam.q) == dy(27, 2)

    def test_n2_gf_matches_binomial_expansion(self):
        fam = construct_family(2)
        g, d = binomial_form_gfs(2)
        assert fam.source_gf() == g
        assert fam.target_gf() == d
        assert g == DyadicPolynomial({3: dy(1, 3), 5: dy(3, 2), 7: dy(1, 3)})
        assert d == DyadicPolynomial({4: dy(1, 1), 6: dy(1, 1)})

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
    def test_unit_mass_all_n(self, n):
        fam = construct_family(n)
        # ProbabilityVector enforces the exact unit sum on construction
        assert fam.source_gf().eval_at_one() == D_ONE
        assert fam.target_gf().eval_at_one() == D_ONE

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_alphabet_sizes(self, n):
        from math import comb

        fam = construct_family(n)
        a = 1 + sum(comb(2 * n, 2 * m) << (2 * m) for m in range(n + 1))
        b = 1 + sum(comb(2 * n, 2 * m + 1) << (2 * m + 1) for m in range(n))
        assert len(fam.p) == a
        assert len(fam.q) == b

    def test_rejects_bad_n(self):
        with pytest.raises(ValueError):
            construct_family(0)
        with pytest.raises(ValueError):
            construct_family(7)


class TestFamilyReport:
    def test_n2_report(self):
        rep = family_invariants_report(construct_family(2))
        assert rep.ok
        assert rep.entropy == dy(7, 1)
        assert rep.source_variance == dy(27, 2)
        assert rep.variances_equal and not rep.coding_length_bound_applies

    def test_n1_report_flags_variance_gap(self):
        rep = family_invariants_report(construct_family(1))
        assert rep.ok
        assert rep.source_variance == dy(3, 1)
        assert rep.target_variance == D_ONE
        assert not rep.variances_equal and rep.coding_length_bound_applies
        assert rep.reductions == [dy(1, 1)] * 3

    def test_n3_report(self):
        fam = construct_family(3)
        rep = family_invariants_report(fam, ladder_depth=2)
        assert rep.ok
        assert entropy(fam.p) == entropy(fam.q)
        assert informational_variance(fam.p) == informational_variance(fam.q)
        assert fam.mass_reduction == dy(1, 5)
        assert rep.reductions == [dy(1, 5)] * 2

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_gf_derivative_dichotomy(self, n):
        fam = construct_family(n)
        g, d = fam.source_gf(), fam.target_gf()
        assert g.derivative_at_one() == d.derivative_at_one()
        assert (g.second_derivative_at_one() == d.second_derivative_at_one()) == (n >= 2)


class TestMeshalkinAlphabets:
    def test_bit_columns(self):
        alpha = meshalkin_alphabets()
        assert alpha.source_bits[4] == (1, 1, 0)
        assert alpha.target_bits[1] == (0, 0)

    def test_drop_bottom_bit_of_alpha4(self):
        alpha = meshalkin_alphabets()
        remaining, bit = alpha.drop_bottom_bit(4)
        assert remaining == (1, 1) and bit == 0
        assert alpha.target_id_of_bits(remaining) == 4

    def test_append_zero_below_alpha1(self):
        alpha = meshalkin_alphabets()
        assert alpha.append_bit(1, 0) == (0, 0)
        assert alpha.target_id_of_bits((0, 0)) == 1

    def test_probabilities_from_bit_lengths(self):
        alpha = meshalkin_alphabets()
        r = alpha.source_vector()
        s = alpha.target_vector()
        assert [float(p) for p in r.probs] == [0.5, 0.125, 0.125, 0.125, 0.125]
        assert [float(p) for p in s.probs] == [0.25] * 4
