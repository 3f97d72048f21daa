//! Property tests for the structural identities of the discrete calculus and
//! the rate functionals.

use hydro_core::calculus::{
    corner_values, discrete_divergence, discrete_gradient, edge_inner_product, graph_energy,
    normal_derivative, solve_harmonic, vertex_inner_product,
};
use hydro_core::graph::build_sg;
use hydro_core::observables::{current_pairing, density_pairing_config};
use hydro_core::rate::{rate_symmetric, RateOptions};
use hydro_core::trajectory::Trajectory;
use hydro_core::wasep::Configuration;
use hydro_core::{EdgeFunction, VertexFunction};

use proptest::prelude::*;

fn vertex_fn(n: usize) -> impl Strategy<Value = VertexFunction> {
    proptest::collection::vec(-1.0f64..1.0, n).prop_map(VertexFunction::from_vec)
}

fn edge_fn(m: usize) -> impl Strategy<Value = EdgeFunction> {
    proptest::collection::vec(-1.0f64..1.0, m).prop_map(EdgeFunction::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_norm_equals_energy(f in vertex_fn(15)) {
        let g = build_sg(2).unwrap();
        let grad = discrete_gradient(&g, &f).unwrap();
        let norm2 = edge_inner_product(&g, &grad, &grad).unwrap();
        let energy = graph_energy(&g, &f).unwrap();
        prop_assert!((norm2 - energy).abs() <= 1e-12 * (1.0 + energy.abs()));
    }

    #[test]
    fn divergence_adjointness(f in vertex_fn(15), theta in edge_fn(27)) {
        let g = build_sg(2).unwrap();
        let grad = discrete_gradient(&g, &f).unwrap();
        let div = discrete_divergence(&g, &theta).unwrap();
        let lhs = edge_inner_product(&g, &grad, &theta).unwrap();
        let rhs = vertex_inner_product(&g, &f, &div).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn gauss_green_for_harmonic_functions(b0 in -1.0f64..1.0, b1 in -1.0f64..1.0, b2 in -1.0f64..1.0) {
        // sum_a dperp(h)(a) h(a) = E(h) when h is harmonic
        let g = build_sg(2).unwrap();
        let h = solve_harmonic(&g, &corner_values(&g, [b0, b1, b2]).unwrap()).unwrap();
        let mut boundary_sum = 0.0;
        for &a in g.boundary() {
            boundary_sum += h[a] * normal_derivative(&g, &h, a).unwrap();
        }
        let energy = graph_energy(&g, &h).unwrap();
        prop_assert!((boundary_sum - energy).abs() <= 1e-10 * (1.0 + energy.abs()));
    }

    #[test]
    fn density_pairing_linear_and_monotone(
        bits_lo in proptest::collection::vec(0u8..2, 6),
        extra in proptest::collection::vec(0u8..2, 6),
        f in vertex_fn(6),
        h in vertex_fn(6),
        alpha in -2.0f64..2.0,
    ) {
        let g = build_sg(1).unwrap();
        let eta_lo = Configuration::from_bits(bits_lo.clone()).unwrap();
        // eta_hi dominates eta_lo pointwise
        let bits_hi: Vec<u8> = bits_lo.iter().zip(&extra).map(|(a, b)| a | b).collect();
        let eta_hi = Configuration::from_bits(bits_hi).unwrap();

        // linearity in the test function
        let combo = VertexFunction::from_vec(
            f.values().iter().zip(h.values()).map(|(a, b)| a + alpha * b).collect(),
        );
        let lhs = density_pairing_config(&g, &eta_lo, &combo).unwrap();
        let rhs = density_pairing_config(&g, &eta_lo, &f).unwrap()
            + alpha * density_pairing_config(&g, &eta_lo, &h).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12);

        // monotonicity in the configuration for nonnegative tests
        let pos = VertexFunction::from_vec(f.values().iter().map(|v| v.abs()).collect());
        let lo = density_pairing_config(&g, &eta_lo, &pos).unwrap();
        let hi = density_pairing_config(&g, &eta_hi, &pos).unwrap();
        prop_assert!(lo <= hi + 1e-15);
    }

    #[test]
    fn current_pairing_kills_constants(w in edge_fn(27), c in -5.0f64..5.0) {
        let g = build_sg(2).unwrap();
        let constant = VertexFunction::constant(g.vertex_count(), c);
        let v = current_pairing(&g, &w, &constant).unwrap();
        prop_assert!(v.abs() <= 1e-12);
    }

    #[test]
    fn symmetric_rate_is_nonnegative(
        incr in proptest::collection::vec(-0.2f64..0.2, 27),
        rho_seed in proptest::collection::vec(0.05f64..0.95, 15),
    ) {
        // build a conservation-consistent synthetic path: pick the current
        // increments, then let the density change be the divergence
        let g = build_sg(2).unwrap();
        let w1 = EdgeFunction::from_vec(incr.clone());
        let rho0 = VertexFunction::from_vec(rho_seed);
        let div = discrete_divergence(&g, &w1).unwrap();
        let mut rho1 = rho0.clone();
        // conservation pointwise at interior vertices: rho1 - rho0 = div(W)
        for &x in g.interior() {
            rho1[x] = rho0[x] + div[x];
        }
        let traj = Trajectory::synthetic(
            &g,
            vec![0.0, 1.0],
            vec![rho0, rho1],
            vec![EdgeFunction::zeros(27), w1],
        ).unwrap();
        let opts = RateOptions { conservation_tol: 1e-9, ..Default::default() };
        let rate = rate_symmetric(&g, &traj, &opts).unwrap();
        if let Some(v) = rate.finite() {
            prop_assert!(v >= 0.0);
        }
    }
}
