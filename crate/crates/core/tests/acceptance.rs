//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers (run with `--nocapture` to see them on success).
//!
//! 1. exact gasket graph identities
//! 2. dense generator oracle identities on small graphs
//! 3. long simulation run against the oracle stationary state
//! 4. density-current law of large numbers against the solver reference
//! 5. solver steady state, weak-form residual order, L1 contraction
//! 6. rate functional identities
//!
//! Reproducibility of command-line artifacts is covered by the acceptance
//! suite of the driver crate.


use hydro_core::calculus::{
    corner_values, discrete_gradient, edge_inner_product, effective_resistance, graph_energy,
    graph_energy_bilinear, normal_derivative, renormalized_laplacian, solve_harmonic,
};
use hydro_core::graph::{build_sg, harmonic_extension, sg_edge_count, sg_vertex_count};
use hydro_core::observables::{
    current_pairing_ledger, current_test_battery, density_test_battery, ensemble_stats,
};
use hydro_core::oracle::{
    current_pairing_rate, generator_matrix, occupation_expectations, stationary_distribution,
};
use hydro_core::pde::{self, edge_mobility, l1_contraction_check, max_l1_increase, PdeConfig};
use hydro_core::rate::{optimize_tilt, rate_report, rate_symmetric, RateOptions, RateValue};
use hydro_core::rng::stream;
use hydro_core::tilt::{FieldSpec, TimeShape};
use hydro_core::trajectory::Trajectory;
use hydro_core::wasep::{conservation_violation, BoundaryRates, Configuration, Simulator};
use hydro_core::{EdgeFunction, VertexFunction};

use rayon::prelude::*;

fn deterministic_values(n: usize, seed: u64) -> Vec<f64> {
    let mut s = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(11);
    (0..n)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

#[test]
fn criterion_1_graph_identities() {
    // vertex and edge counts for N <= 6
    for n in 0..=6u32 {
        let g = build_sg(n).unwrap();
        assert_eq!(g.vertex_count(), sg_vertex_count(n).unwrap());
        assert_eq!(g.edge_count(), sg_edge_count(n).unwrap());
    }

    // energy is preserved by harmonic extension, to 1e-12
    let mut worst_energy = 0.0f64;
    for level in 0..=2u32 {
        let coarse = build_sg(level).unwrap();
        let fine = build_sg(level + 1).unwrap();
        let f = VertexFunction::from_vec(deterministic_values(coarse.vertex_count(), level as u64));
        let ext = harmonic_extension(&coarse, &fine, &f).unwrap();
        let e0 = graph_energy(&coarse, &f).unwrap();
        let e1 = graph_energy(&fine, &ext).unwrap();
        worst_energy = worst_energy.max((e0 - e1).abs());
    }
    assert!(worst_energy <= 1e-12, "energy self-similarity defect {worst_energy}");

    // 1/5 - 2/5 harmonic interpolation on level 1, exact
    let g1 = build_sg(1).unwrap();
    let h = solve_harmonic(&g1, &corner_values(&g1, [1.0, 0.0, 0.0]).unwrap()).unwrap();
    let a0 = g1.boundary()[0];
    let mut worst_harmonic = 0.0f64;
    for &x in g1.interior() {
        let expect = if g1.edge_between(x, a0).is_some() { 0.4 } else { 0.2 };
        worst_harmonic = worst_harmonic.max((h[x] - expect).abs());
    }
    assert!(worst_harmonic <= 1e-12, "1/5-2/5 defect {worst_harmonic}");

    // corner-to-corner effective resistance (2/3) (5/3)^N for N <= 2
    let mut worst_reff = 0.0f64;
    for n in 0..=2u32 {
        let g = build_sg(n).unwrap();
        let b = g.boundary();
        let expect = (2.0 / 3.0) * (5.0f64 / 3.0).powi(n as i32);
        for (x, y) in [(b[0], b[1]), (b[0], b[2]), (b[1], b[2])] {
            let r = effective_resistance(&g, x, y).unwrap();
            worst_reff = worst_reff.max((r - expect).abs());
        }
    }
    assert!(worst_reff <= 1e-12, "effective resistance defect {worst_reff}");

    // normal derivative of the harmonic profile is level-independent
    let mut worst_perp = 0.0f64;
    let mut reference = [0.0f64; 3];
    for level in 0..=3u32 {
        let g = build_sg(level).unwrap();
        let h = solve_harmonic(&g, &corner_values(&g, [0.8, 0.2, 0.5]).unwrap()).unwrap();
        for (k, &a) in g.boundary().iter().enumerate() {
            let d = normal_derivative(&g, &h, a).unwrap();
            if level == 0 {
                reference[k] = d;
            } else {
                worst_perp = worst_perp.max((d - reference[k]).abs());
            }
        }
    }
    assert!(worst_perp <= 1e-12, "normal derivative drift {worst_perp}");

    println!(
        "ACCEPTANCE 1 graph identities: PASS (energy {worst_energy:.2e}, harmonic {worst_harmonic:.2e}, \
         resistance {worst_reff:.2e}, normal derivative {worst_perp:.2e})"
    );
}

#[test]
fn criterion_2_generator_oracle() {
    // equal reservoirs: product Bernoulli is a left null vector, to 1e-12
    let mut worst_product = 0.0f64;
    for level in [0u32, 1] {
        let g = build_sg(level).unwrap();
        let rho = 0.35;
        let rates = BoundaryRates::from_rho_bar(&g, &[rho; 3], 1.1).unwrap();
        let gen = generator_matrix(&g, None, Some(&rates)).unwrap();
        let n = g.vertex_count();
        let mut pi = nalgebra::DVector::zeros(1usize << n);
        for s in 0..(1usize << n) {
            let mut p = 1.0;
            for v in 0..n {
                p *= if (s >> v) & 1 == 1 { rho } else { 1.0 - rho };
            }
            pi[s] = p;
        }
        let residual = (gen.transpose() * &pi).abs().max();
        worst_product = worst_product.max(residual);
    }
    assert!(worst_product <= 1e-12, "product measure residual {worst_product}");

    // unequal reservoirs on level 1: stationary profile is interior-harmonic
    let g = build_sg(1).unwrap();
    let rates = BoundaryRates::from_rho_bar(&g, &[0.8, 0.2, 0.5], 1.0).unwrap();
    let gen = generator_matrix(&g, None, Some(&rates)).unwrap();
    let pi = stationary_distribution(&gen).unwrap();
    let profile = occupation_expectations(&g, &pi);
    let lap = renormalized_laplacian(&g);
    let harmonicity = lap.interior_residual(&profile).unwrap() / lap.scale();
    assert!(harmonicity <= 1e-10, "stationary interior harmonicity {harmonicity}");

    // stationary current-pairing rate equals the energy form against the
    // stationary harmonic profile: d/dt E<W, grad F> = -E(h, F), to 1e-10.
    // The sign is the one dictated by the generator: the current flows down
    // the density gradient.
    let accel = g.time_acceleration();
    let mut worst_rate = 0.0f64;
    for corners in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.3, -0.2, 0.9]] {
        let f = solve_harmonic(&g, &corner_values(&g, corners).unwrap()).unwrap();
        let rate = current_pairing_rate(&g, &pi, None, &f, accel).unwrap();
        let energy = graph_energy_bilinear(&g, &profile, &f).unwrap();
        worst_rate = worst_rate.max((rate + energy).abs());
    }
    assert!(worst_rate <= 1e-10, "stationary current identity defect {worst_rate}");

    println!(
        "ACCEPTANCE 2 generator oracle: PASS (product {worst_product:.2e}, \
         harmonicity {harmonicity:.2e}, current identity {worst_rate:.2e})"
    );
}

#[test]
fn criterion_3_simulation_vs_oracle() {
    // Long boundary-driven run on level 1 against the exact stationary state.
    let g = build_sg(1).unwrap();
    let rho_bar = [0.8, 0.2, 0.5];
    let rates = BoundaryRates::from_rho_bar(&g, &rho_bar, 1.0).unwrap();
    let gen = generator_matrix(&g, None, Some(&rates)).unwrap();
    let pi = stationary_distribution(&gen).unwrap();
    let target = occupation_expectations(&g, &pi);

    let field = FieldSpec::zero(&g, f64::INFINITY);
    let sim = Simulator::new(&g, &rates, &field, g.time_acceleration()).unwrap();
    let t_end = 1e5;
    let burn_in = 200.0;
    let batches = 250usize;
    let batch_len = (t_end - burn_in) / batches as f64;

    let mut rng = stream(20260809, "oracle-match", 0);
    let rho_half = VertexFunction::constant(g.vertex_count(), 0.5);
    let eta0 = Configuration::sample_profile(&rho_half, &mut rng);
    let mut st = hydro_core::wasep::SimState::new(&g, eta0.clone(), rng).unwrap();

    let n = g.vertex_count();
    let mut batch_means: Vec<Vec<f64>> = Vec::with_capacity(batches);
    let mut occupied = vec![0.0f64; n];
    let mut batch_idx = 0usize;
    let mut worst_conservation = 0i64;
    while batch_idx < batches {
        let before = st.clock;
        let bits: Vec<u8> = st.config.bits().to_vec();
        sim.step(&mut st).unwrap();
        let batch_end = burn_in + (batch_idx + 1) as f64 * batch_len;
        let segment_end = st.clock.min(batch_end);
        let weight = (segment_end - before.max(burn_in)).max(0.0);
        for v in 0..n {
            occupied[v] += weight * bits[v] as f64;
        }
        if st.clock >= batch_end {
            batch_means.push(occupied.iter().map(|o| o / batch_len).collect());
            occupied = vec![0.0; n];
            batch_idx += 1;
            // the partial segment after the batch boundary
            let carry = (st.clock - batch_end).min(batch_len).max(0.0);
            for v in 0..n {
                occupied[v] += carry * bits[v] as f64;
            }
            worst_conservation = worst_conservation.max(conservation_violation(
                &g,
                &eta0,
                st.config.bits(),
                &st.current,
            ));
        }
    }
    assert_eq!(worst_conservation, 0, "mass conservation must be exact in integers");

    let mut worst_z = 0.0f64;
    for v in 0..n {
        let vals: Vec<f64> = batch_means.iter().map(|b| b[v]).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
            / (vals.len() as f64 - 1.0);
        let se = (var / vals.len() as f64).sqrt();
        let z = (mean - target[v as u32]).abs() / se;
        worst_z = worst_z.max(z);
        assert!(
            z <= 3.0,
            "vertex {v}: time average {mean} vs oracle {} is {z:.2} s.e. away",
            target[v as u32]
        );
    }

    println!(
        "ACCEPTANCE 3 simulation vs oracle: PASS (worst z-score {worst_z:.2}, \
         conservation exact over {} candidates)",
        st.candidates
    );
}

struct LlnLeg {
    name: &'static str,
    density_fail: usize,
    current_fail: usize,
    worst_density_gap: f64,
    worst_current_rel: f64,
}

fn lln_leg(
    g: &hydro_core::WeightedGraph,
    field: &FieldSpec,
    name: &'static str,
    replicas: u64,
    seed: u64,
) -> LlnLeg {
    let rho_bar = [0.8, 0.2, 0.5];
    let kappa = 100.0;
    let bv = corner_values(g, rho_bar).unwrap();
    let rho0 = solve_harmonic(g, &bv).unwrap();
    let rates = BoundaryRates::from_rho_bar(g, &rho_bar, kappa).unwrap();
    let sim = Simulator::new(g, &rates, field, g.time_acceleration()).unwrap();
    let sample_times = [0.1, 0.5];
    let t_end = 0.5;

    let g_battery = density_test_battery(g);
    let f_battery = current_test_battery(g).unwrap();

    // replicas are independent RNG streams; order of completion is irrelevant
    let per_replica: Vec<Vec<Vec<f64>>> = (0..replicas)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream(seed, "lln", rep);
            let eta0 = Configuration::sample_profile(&rho0, &mut rng);
            let out = sim.run(&eta0, t_end, rng, &sample_times).unwrap();
            out.snapshots
                .iter()
                .map(|snap| {
                    let mut row = Vec::with_capacity(g_battery.len() + f_battery.len());
                    for (_, gf) in &g_battery {
                        let v: f64 = snap
                            .eta
                            .iter()
                            .zip(gf.values())
                            .map(|(&b, t)| b as f64 * t)
                            .sum::<f64>()
                            / g.vertex_count() as f64;
                        row.push(v);
                    }
                    for (_, ff) in &f_battery {
                        row.push(current_pairing_ledger(g, &snap.current, ff).unwrap());
                    }
                    row
                })
                .collect()
        })
        .collect();

    // solver reference in the particle clock
    let tau = g.particle_clock_factor();
    let cfg = PdeConfig { dt: 1e-3, t_end, time_scale: tau, ..Default::default() };
    let traj = pde::solve(g, cfg, field, rho0, &bv).unwrap();

    let mut leg = LlnLeg {
        name,
        density_fail: 0,
        current_fail: 0,
        worst_density_gap: 0.0,
        worst_current_rel: 0.0,
    };
    for (si, &t) in sample_times.iter().enumerate() {
        let k = traj.index_at(t);
        for (oi, (gname, gf)) in g_battery.iter().enumerate() {
            let reference: f64 = traj.rho[k]
                .values()
                .iter()
                .zip(gf.values())
                .map(|(r, w)| r * w)
                .sum::<f64>()
                / g.vertex_count() as f64;
            let vals: Vec<f64> = per_replica.iter().map(|r| r[si][oi]).collect();
            let stats = ensemble_stats(&vals, reference, 0.02).unwrap();
            let gap = (stats.mean - reference).abs();
            let tol = (3.0 * stats.stderr).max(0.02);
            leg.worst_density_gap = leg.worst_density_gap.max(gap);
            if gap > tol {
                leg.density_fail += 1;
                eprintln!("{name} t={t} G={gname}: |{} - {reference}| > {tol}", stats.mean);
            }
        }
        for (oi, (fname, ff)) in f_battery.iter().enumerate() {
            let grad_f = discrete_gradient(g, ff).unwrap();
            let reference = edge_inner_product(g, &traj.flux[k], &grad_f).unwrap() / tau;
            let vals: Vec<f64> = per_replica.iter().map(|r| r[si][g_battery.len() + oi]).collect();
            let stats = ensemble_stats(&vals, reference, 0.05 * reference.abs()).unwrap();
            let gap = (stats.mean - reference).abs();
            let tol = (3.0 * stats.stderr).max(0.05 * reference.abs());
            if reference.abs() > 1e-12 {
                leg.worst_current_rel = leg.worst_current_rel.max(gap / reference.abs());
            }
            if gap > tol {
                leg.current_fail += 1;
                eprintln!("{name} t={t} F={fname}: |{} - {reference}| > {tol}", stats.mean);
            }
        }
    }
    leg
}

#[test]
fn criterion_4_law_of_large_numbers() {
    let g = build_sg(4).unwrap();
    assert_eq!(g.vertex_count(), 123);
    let t_end = 0.5;
    let replicas = 100;

    let sep = lln_leg(&g, &FieldSpec::zero(&g, t_end), "sep", replicas, 20260809);
    let tilted_field =
        FieldSpec::harmonic(&g, [0.8, -0.4, 0.0], TimeShape::Const, t_end).unwrap();
    let wasep = lln_leg(&g, &tilted_field, "wasep", replicas, 20260810);

    for leg in [&sep, &wasep] {
        assert_eq!(
            leg.density_fail, 0,
            "{}: {} density pairings out of tolerance",
            leg.name, leg.density_fail
        );
        assert_eq!(
            leg.current_fail, 0,
            "{}: {} current pairings out of tolerance",
            leg.name, leg.current_fail
        );
    }
    println!(
        "ACCEPTANCE 4 law of large numbers: PASS \
         (sep density gap {:.4}, current rel {:.3}; wasep density gap {:.4}, current rel {:.3}; \
         {} replicas per leg)",
        sep.worst_density_gap,
        sep.worst_current_rel,
        wasep.worst_density_gap,
        wasep.worst_current_rel,
        replicas
    );
}

#[test]
fn criterion_5_pde_solver() {
    // relaxation to the harmonic steady state on level 3
    let g = build_sg(3).unwrap();
    let bv = corner_values(&g, [0.8, 0.2, 0.5]).unwrap();
    let field = FieldSpec::zero(&g, 10.0);
    let h = solve_harmonic(&g, &bv).unwrap();
    let mut rho0 = h.clone();
    for &x in g.interior() {
        rho0[x] = 0.5;
    }
    let cfg = PdeConfig { dt: 1e-3, t_end: 10.0, ..Default::default() };
    let traj = pde::solve(&g, cfg, &field, rho0.clone(), &bv).unwrap();
    let sup = traj
        .final_rho()
        .values()
        .iter()
        .zip(h.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(sup <= 1e-8, "steady-state distance {sup}");

    // weak-form residual drops by at least 1.8x under dt halving (theta = 1)
    let resid = |dt: f64| {
        let cfg = PdeConfig { dt, t_end: 0.5, theta: 1.0, ..Default::default() };
        pde::solve(&g, cfg, &field, rho0.clone(), &bv).unwrap().weak_residual
    };
    let r_coarse = resid(1e-3);
    let r_fine = resid(5e-4);
    let ratio = r_coarse / r_fine;
    assert!(ratio >= 1.8, "residual ratio {ratio} ({r_coarse:.3e} -> {r_fine:.3e})");

    // L1 distances between solutions never increase beyond 1e-10 per step
    let cfg = PdeConfig { dt: 1e-3, t_end: 0.3, ..Default::default() };
    let mut worst_increase = 0.0f64;
    for pair in 0..10u64 {
        let vals = deterministic_values(2 * g.interior().len(), 1000 + pair);
        let mut a0 = h.clone();
        let mut b0 = h.clone();
        for (k, &x) in g.interior().iter().enumerate() {
            a0[x] = vals[2 * k];
            b0[x] = vals[2 * k + 1];
        }
        let ta = pde::solve(&g, cfg, &field, a0, &bv).unwrap();
        let tb = pde::solve(&g, cfg, &field, b0, &bv).unwrap();
        let d = l1_contraction_check(&g, &ta, &tb).unwrap();
        worst_increase = worst_increase.max(max_l1_increase(&d));
    }
    assert!(worst_increase <= 1e-10, "L1 increase {worst_increase}");

    println!(
        "ACCEPTANCE 5 pde solver: PASS (steady state {sup:.2e}, residual ratio {ratio:.2}, \
         L1 increase {worst_increase:.2e})"
    );
}

#[test]
fn criterion_6_rate_function() {
    let g = build_sg(2).unwrap();
    let bv = corner_values(&g, [0.8, 0.2, 0.5]).unwrap();
    let opts = RateOptions::default();

    // relaxation trajectory: the rate vanishes as dt -> 0
    let mut rho0 = solve_harmonic(&g, &bv).unwrap();
    for &x in g.interior() {
        rho0[x] = 0.5;
    }
    let zero_field = FieldSpec::zero(&g, 0.5);
    let sep_rate = |dt: f64| {
        let cfg = PdeConfig { dt, t_end: 0.5, ..Default::default() };
        let t = pde::solve(&g, cfg, &zero_field, rho0.clone(), &bv).unwrap();
        let traj = Trajectory::from_pde(&g, &t).unwrap();
        rate_symmetric(&g, &traj, &opts).unwrap().finite().expect("finite rate")
    };
    let r_coarse = sep_rate(1e-3);
    let r_fine = sep_rate(5e-4);
    assert!(r_coarse <= 1e-4, "relaxation-flow rate {r_coarse}");
    assert!(r_fine < r_coarse, "rate must decrease under halving: {r_coarse} -> {r_fine}");

    // tilted trajectory: rate = 1/2 int <chi grad H, grad H> within 5%
    let bv_t = corner_values(&g, [0.6, 0.4, 0.5]).unwrap();
    let field = FieldSpec::harmonic(&g, [0.8, -0.4, 0.0], TimeShape::Const, 0.4).unwrap();
    let rho_t = solve_harmonic(&g, &bv_t).unwrap();
    let cfg = PdeConfig { dt: 5e-4, t_end: 0.4, ..Default::default() };
    let ptraj = pde::solve(&g, cfg, &field, rho_t, &bv_t).unwrap();
    let traj = Trajectory::from_pde(&g, &ptraj).unwrap();
    let tilted_rate = rate_symmetric(&g, &traj, &opts).unwrap().finite().unwrap();
    let mut quadratic = 0.0;
    for k in 0..traj.times.len() - 1 {
        let dt = traj.times[k + 1] - traj.times[k];
        let rho_mid = VertexFunction::from_vec(
            traj.rho[k]
                .values()
                .iter()
                .zip(traj.rho[k + 1].values())
                .map(|(a, b)| 0.5 * (a + b))
                .collect(),
        );
        let chi = edge_mobility(&g, &rho_mid).unwrap();
        let gh = discrete_gradient(&g, &field.profile_at(0.5 * (traj.times[k] + traj.times[k + 1])))
            .unwrap();
        let weighted =
            EdgeFunction::from_vec(chi.iter().zip(gh.values()).map(|(c, v)| c * v).collect());
        quadratic += 0.5 * dt * edge_inner_product(&g, &weighted, &gh).unwrap();
    }
    let rel = (tilted_rate - quadratic).abs() / quadratic;
    assert!(rel <= 0.05, "tilted rate {tilted_rate} vs {quadratic} (rel {rel})");

    // conservation check rejects a frozen current under a moving density
    let times = vec![0.0, 0.25];
    let rho_a = VertexFunction::constant(g.vertex_count(), 0.3);
    let mut rho_b = rho_a.clone();
    rho_b[g.interior()[0]] = 0.9;
    let zeros = EdgeFunction::zeros(g.edge_count());
    let synth =
        Trajectory::synthetic(&g, times, vec![rho_a, rho_b], vec![zeros.clone(), zeros]).unwrap();
    let rejected = rate_symmetric(&g, &synth, &opts).unwrap();
    assert!(matches!(rejected, RateValue::Infinite(_)), "synthetic path must be rejected");

    // single-edge closed form a^2 / (4 chi) to 1e-12
    let single = hydro_core::WeightedGraph::new(
        vec![(0.0, 0.0), (1.0, 0.0)],
        vec![(0, 1, 1.0)],
        vec![0, 1],
    )
    .unwrap();
    let straj = Trajectory::synthetic(
        &single,
        vec![0.0, 1.0],
        vec![VertexFunction::constant(2, 0.5), VertexFunction::constant(2, 0.5)],
        vec![EdgeFunction::zeros(1), EdgeFunction::from_vec(vec![1.0])],
    )
    .unwrap();
    let opt = optimize_tilt(&single, &straj, &opts).unwrap();
    let closed_form_defect = (opt.total - 1.0).abs();
    assert!(closed_form_defect <= 1e-12, "closed form defect {closed_form_defect}");

    // variational optimum over tilts is half the symmetric form
    let report = rate_report(&g, &traj, &opts).unwrap();
    let ratio = report.variational_vs_symmetric_ratio.expect("finite ratio");
    assert!((ratio - 0.5).abs() <= 0.01, "variational/symmetric ratio {ratio}");

    println!(
        "ACCEPTANCE 6 rate function: PASS (relaxation rate {r_coarse:.2e} -> {r_fine:.2e}, \
         tilted rel {rel:.3}, closed form {closed_form_defect:.2e}, ratio {ratio:.4})"
    );
}
