import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphon_lab.core import (
    EDGE_PATTERN,
    TRIANGLE_PATTERN,
    TWOSTAR_PATTERN,
    BipodalParams,
    DensityPoint,
    DomainError,
    PatternCostError,
    SeriesDivergenceError,
    StepFunction,
    StepGraphon,
    SubgraphPattern,
    complement,
    decompose,
    degree_function,
    edge_density,
    entropy_H,
    entropy_H_double_prime,
    entropy_S,
    entropy_via_series,
    h_even_derivative_at_half,
    moments,
    refine_common,
    subgraph_density,
    twostar_density,
)
from graphon_lab.region import anticlique_graphon, clique_graphon, er_graphon

# high-precision reference evaluations of the defining formulas
H_HALF = 0.5 * math.log(2.0)          # 0.34657359027997264
H_09 = 0.16254148669572412            # -(0.9 ln 0.9 + 0.1 ln 0.1)/2
S_BIPODAL_09 = 0.25455753848784839    # H(0.9)/4 + H(0.1)/4 + H(0.5)/2


def random_graphon(rng, max_podes=5, lo=0.0, hi=1.0):
    m = int(rng.integers(1, max_podes + 1))
    cuts = np.sort(rng.uniform(0.05, 0.95, size=m - 1))
    # keep podes comfortably separated
    cuts = np.unique(np.round(cuts, 3))
    v = rng.uniform(lo, hi, size=(len(cuts) + 1, len(cuts) + 1))
    v = 0.5 * (v + v.T)
    return StepGraphon(cuts, v)


class TestEntropyH:
    def test_endpoints_by_continuity(self):
        assert entropy_H(0.0) == 0.0
        assert entropy_H(1.0) == 0.0

    def test_half_is_half_log_two(self):
        assert entropy_H(0.5) == pytest.approx(H_HALF, abs=1e-15)

    def test_high_precision_point(self):
        assert entropy_H(0.9) == pytest.approx(H_09, abs=1e-15)

    @pytest.mark.parametrize("u", [-0.1, 1.1, 2.0])
    def test_domain_error(self, u):
        with pytest.raises(DomainError):
            entropy_H(u)

    @given(st.floats(min_value=0.0, max_value=1.0))
    @settings(derandomize=True)
    def test_symmetry(self, u):
        assert entropy_H(u) == pytest.approx(entropy_H(1.0 - u), abs=1e-15)

    def test_even_derivatives_match_finite_differences(self):
        # H''(1/2) via 3-point stencil, H''''(1/2) via 5-point stencil
        h = 1e-4
        d2 = (entropy_H(0.5 + h) - 2 * entropy_H(0.5) + entropy_H(0.5 - h)) / h**2
        assert h_even_derivative_at_half(2) == pytest.approx(d2, abs=1e-5)
        assert h_even_derivative_at_half(2) == -2.0
        h = 1e-2
        pts = [entropy_H(0.5 + k * h) for k in (-2, -1, 0, 1, 2)]
        d4 = (pts[0] - 4 * pts[1] + 6 * pts[2] - 4 * pts[3] + pts[4]) / h**4
        assert h_even_derivative_at_half(4) == pytest.approx(d4, rel=1e-3)
        assert h_even_derivative_at_half(4) == -16.0

    def test_double_prime_closed_form(self):
        assert entropy_H_double_prime(0.5) == -2.0
        mu = 0.13
        assert entropy_H_double_prime(0.5 + 2 * mu) == pytest.approx(
            -2.0 / (1.0 - 16.0 * mu**2), rel=1e-14
        )


class TestEntropyS:
    def test_constant_graphon(self):
        assert entropy_S(er_graphon(0.5)) == pytest.approx(H_HALF, abs=1e-15)

    def test_bipodal_block_formula(self):
        g = BipodalParams(0.9, 0.1, 0.5, 0.5).to_graphon()
        assert entropy_S(g) == pytest.approx(S_BIPODAL_09, abs=1e-14)

    def test_zero_one_valued_graphon_has_zero_entropy(self):
        assert entropy_S(clique_graphon(0.64)) == 0.0


class TestDensities:
    def test_constant(self):
        g = er_graphon(0.3)
        assert edge_density(g) == pytest.approx(0.3, abs=1e-15)
        dp = twostar_density(g)
        assert dp.t == pytest.approx(0.09, abs=1e-15)
        assert dp.t_tilde == pytest.approx(0.0, abs=1e-15)

    def test_clique_hits_upper_boundary(self):
        dp = twostar_density(clique_graphon(0.64))
        assert dp.e == pytest.approx(0.64, abs=1e-14)
        assert dp.t == pytest.approx(0.512, abs=1e-14)

    def test_anticlique(self):
        dp = twostar_density(anticlique_graphon(0.36))
        assert dp.e == pytest.approx(0.36, abs=1e-14)
        assert dp.t == pytest.approx(0.232, abs=1e-14)

    def test_degree_function_of_clique(self):
        d = degree_function(clique_graphon(0.64))
        assert d.values == pytest.approx((0.8, 0.0), abs=1e-15)
        assert d.measures == pytest.approx((0.8, 0.2), abs=1e-15)
        assert d.mean() == pytest.approx(0.64, abs=1e-15)

    def test_t_tilde_is_degree_variance(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            g = random_graphon(rng)
            d = degree_function(g)
            e = d.mean()
            var = float(d.measures @ (d.value_array - e) ** 2)
            assert twostar_density(g).t_tilde == pytest.approx(var, abs=1e-12)
            assert twostar_density(g).t_tilde >= -1e-12


class TestSubgraphDensity:
    def test_edge_pattern_equals_edge_density(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            g = random_graphon(rng)
            assert subgraph_density(g, EDGE_PATTERN) == pytest.approx(
                edge_density(g), abs=1e-12
            )

    def test_twostar_pattern_on_constant(self):
        assert subgraph_density(er_graphon(0.4), TWOSTAR_PATTERN) == pytest.approx(
            0.16, abs=1e-15
        )

    def test_twostar_pattern_matches_functional(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            g = random_graphon(rng)
            assert subgraph_density(g, TWOSTAR_PATTERN) == pytest.approx(
                twostar_density(g).t, abs=1e-12
            )

    def test_triangle_on_clique(self):
        # direct sum over pode assignments: only the all-ones block survives
        assert subgraph_density(clique_graphon(0.64), TRIANGLE_PATTERN) == (
            pytest.approx(0.512, abs=1e-14)
        )

    def test_cost_guard(self):
        big = SubgraphPattern(11, [(i, i + 1) for i in range(10)])
        with pytest.raises(PatternCostError):
            subgraph_density(er_graphon(0.5), big)

    def test_pattern_validation(self):
        with pytest.raises(DomainError):
            SubgraphPattern(3, [(0, 0)])
        with pytest.raises(DomainError):
            SubgraphPattern(3, [(0, 1), (1, 0)])
        with pytest.raises(DomainError):
            SubgraphPattern(2, [(0, 5)])


class TestComplement:
    def test_constant(self):
        g = complement(er_graphon(0.3))
        assert edge_density(g) == pytest.approx(0.7, abs=1e-15)
        assert entropy_S(g) == pytest.approx(entropy_S(er_graphon(0.3)), abs=1e-15)

    def test_clique_anticlique_pair(self):
        a = anticlique_graphon(0.36)
        b = complement(clique_graphon(0.64))
        assert a == b

    def test_symmetry_on_random_graphons(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            g = random_graphon(rng)
            gc = complement(g)
            assert entropy_S(gc) == pytest.approx(entropy_S(g), abs=1e-12)
            dp, dpc = twostar_density(g), twostar_density(gc)
            assert dpc.e == pytest.approx(1.0 - dp.e, abs=1e-12)
            assert dpc.t_tilde == pytest.approx(dp.t_tilde, abs=1e-12)
            back = complement(gc)
            assert back.cuts == g.cuts
            assert np.max(np.abs(back.value_matrix - g.value_matrix)) <= 1e-15


class TestMoments:
    def test_constant(self):
        nu, mu = moments(er_graphon(0.3), 2)
        assert nu[0] == pytest.approx(-0.2, abs=1e-15)
        assert mu[1] == pytest.approx(0.04, abs=1e-15)

    def test_first_two_degree_moments(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            g = random_graphon(rng)
            nu, _ = moments(g, 2)
            dp = twostar_density(g)
            assert nu[0] == pytest.approx(dp.e - 0.5, abs=1e-12)
            assert nu[1] == pytest.approx(dp.t_tilde + (dp.e - 0.5) ** 2, abs=1e-12)

    def test_fourth_moment_bound(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            g = random_graphon(rng)
            nu, _ = moments(g, 4)
            assert nu[3] >= nu[1] ** 2 - 1e-14


class TestEntropySeries:
    def test_constant_half_any_order(self):
        for kmax in (0, 1, 5, 64):
            assert entropy_via_series(er_graphon(0.5), kmax) == pytest.approx(
                H_HALF, abs=1e-15
            )

    def test_zeroth_term(self):
        g = BipodalParams(0.9, 0.1, 0.5, 0.5).to_graphon()
        assert entropy_via_series(g, 0) == pytest.approx(H_HALF, abs=1e-15)

    def test_matches_direct_entropy(self):
        g = BipodalParams(0.9, 0.1, 0.5, 0.5).to_graphon()
        assert entropy_via_series(g, 64) == pytest.approx(entropy_S(g), abs=1e-8)

    def test_random_graphons_in_series_radius(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            g = random_graphon(rng, lo=0.1, hi=0.9)
            assert entropy_via_series(g, 64) == pytest.approx(
                entropy_S(g), abs=1e-8
            )

    def test_divergence_guard(self):
        with pytest.raises(SeriesDivergenceError):
            entropy_via_series(clique_graphon(0.5), 8)


class TestDecompose:
    def test_constant_has_zero_residual(self):
        dec = decompose(er_graphon(0.4))
        assert dec.residual_l2 == pytest.approx(0.0, abs=1e-15)

    def test_zero_marginals_and_reconstruction(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            g = random_graphon(rng)
            dec = decompose(g)
            pi = dec.residual.measures
            r = dec.residual.value_matrix
            assert np.max(np.abs(r @ pi)) <= 1e-12
            d = dec.degree.value_array
            recon = d[:, None] + d[None, :] - dec.e + r
            assert np.max(np.abs(recon - g.value_matrix)) <= 1e-12

    def test_second_moment_identity(self):
        # mu_2 = 2 nu_2 - (e - 1/2)^2 + eta^2
        rng = np.random.default_rng(13)
        for _ in range(100):
            g = random_graphon(rng)
            nu, mu = moments(g, 1)
            dec = decompose(g)
            dp = twostar_density(g)
            nu2 = dp.t_tilde + (dp.e - 0.5) ** 2
            expected = 2 * nu2 - (dp.e - 0.5) ** 2 + dec.residual_l2**2
            assert mu[1] == pytest.approx(expected, abs=1e-10)

    def test_ansatz_residual_is_small(self):
        from graphon_lab.region import ansatz_graphon

        g = ansatz_graphon(0.5, 0.01).to_graphon()
        dec = decompose(g)
        pi = dec.residual.measures
        assert np.max(np.abs(dec.residual.value_matrix @ pi)) <= 1e-12
        # zeta = 0.1; the residual of the ansatz is O(zeta^2)-small
        assert dec.residual_l2 <= 0.1


class TestRefineCommon:
    def test_self_refinement(self):
        g = BipodalParams(0.2, 0.8, 0.3, 0.5).to_graphon()
        r1, r2 = refine_common(g, g)
        assert r1 == r2 == g

    def test_merged_bipodal_partitions(self):
        g1 = BipodalParams(0.2, 0.8, 0.3, 0.5).to_graphon()
        g2 = BipodalParams(0.6, 0.4, 0.5, 0.1).to_graphon()
        r1, r2 = refine_common(g1, g2)
        assert r1.cuts == r2.cuts == (0.3, 0.5)
        for orig, refined in ((g1, r1), (g2, r2)):
            assert edge_density(refined) == pytest.approx(
                edge_density(orig), abs=1e-14
            )
            assert twostar_density(refined).t == pytest.approx(
                twostar_density(orig).t, abs=1e-14
            )

    def test_functional_invariance(self):
        rng = np.random.default_rng(15)
        for _ in range(30):
            g1, g2 = random_graphon(rng), random_graphon(rng)
            r1, _ = refine_common(g1, g2)
            assert entropy_S(r1) == pytest.approx(entropy_S(g1), abs=1e-12)
            assert edge_density(r1) == pytest.approx(edge_density(g1), abs=1e-12)
            assert twostar_density(r1).t == pytest.approx(
                twostar_density(g1).t, abs=1e-12
            )
            assert subgraph_density(r1, TWOSTAR_PATTERN) == pytest.approx(
                subgraph_density(g1, TWOSTAR_PATTERN), abs=1e-12
            )

    def test_constant_stays_constant(self):
        rng = np.random.default_rng(16)
        g = er_graphon(0.37)
        other = random_graphon(rng)
        r, _ = refine_common(g, other)
        assert np.allclose(r.value_matrix, 0.37)


class TestConstruction:
    def test_zero_measure_podes_dropped(self):
        g = StepGraphon((1e-16,), [[0.9, 0.9], [0.9, 0.2]])
        assert g.n_podes == 1
        # the surviving value comes from the full-measure pode
        assert g.values[0][0] == 0.2

    def test_asymmetric_values_rejected(self):
        with pytest.raises(DomainError):
            StepGraphon((0.5,), [[0.1, 0.2], [0.3, 0.4]])

    def test_out_of_range_values_rejected(self):
        with pytest.raises(DomainError):
            StepGraphon((), [[1.5]])

    def test_bipodal_validation(self):
        with pytest.raises(DomainError):
            BipodalParams(1.2, 0.0, 0.5, 0.5)

    def test_bipodal_canonical(self):
        p = BipodalParams(0.1, 0.9, 0.7, 0.3).canonical()
        assert (p.a, p.b, p.c, p.d) == pytest.approx((0.9, 0.1, 0.3, 0.3))
        assert p.c <= 0.5
        tie = BipodalParams(0.3, 0.7, 0.5, 0.5).canonical()
        assert (tie.a, tie.b) == (0.7, 0.3)

    def test_density_point_consistency(self):
        with pytest.raises(DomainError):
            DensityPoint(0.5, 0.3, 0.2)
        dp = DensityPoint.from_e_ttilde(0.5, 0.01)
        assert dp.t == pytest.approx(0.26, abs=1e-15)

    def test_step_function_mean(self):
        f = StepFunction((0.25,), (1.0, 0.0))
        assert f.mean() == pytest.approx(0.25, abs=1e-15)


class TestJsonRoundTrip:
    def test_graphon_exact_round_trip(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            g = random_graphon(rng)
            assert StepGraphon.from_json(g.to_json()) == g

    def test_bipodal_exact_round_trip(self):
        rng = np.random.default_rng(22)
        for _ in range(20):
            vals = rng.uniform(0, 1, size=4)
            p = BipodalParams(*vals)
            assert BipodalParams.from_json(p.to_json()) == p

    def test_schema_shape(self):
        g = BipodalParams(0.2, 0.8, 0.3, 0.5).to_graphon()
        obj = json.loads(g.to_json())
        assert set(obj) == {"cuts", "values"}
        assert obj["cuts"] == [0.3]
