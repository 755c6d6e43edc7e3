//! Cross-validation: the structured six-family solver and the dense
//! master-equation reference must produce the same steady state, component
//! by component, across damping regimes — and a tampered generator must be
//! caught by exactly this comparison.

use approx::assert_relative_eq;
use nalgebra::DMatrix;
use num_complex::Complex64;
use phonon_stats::hierarchy::{
    assemble_generator, selftest_corrupt, solve_steady_state, statistics, HierarchyState,
};
use phonon_stats::model::{dress, Mode, SystemParams};
use phonon_stats::oracle::{build_liouvillian, project_to_hierarchy, steady_state_density};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn reference_params(kappa: f64) -> SystemParams {
    SystemParams::new(12.5, -17.5, 35.0, 15.0, 1.0, 0.1, kappa, 0.04).unwrap()
}

fn max_gap(a: &HierarchyState, b: &HierarchyState) -> f64 {
    assert_eq!(a.p.len(), b.p.len());
    a.p.iter()
        .zip(&b.p)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[test]
fn hierarchy_matches_dense_reference_across_regimes() {
    let n_max = 12;
    for kappa in [5e-3, 1.0, 5.0] {
        for mode in [Mode::Secular, Mode::BeyondSecular] {
            let p = reference_params(kappa);
            let f = dress(&p, mode);
            let gen = assemble_generator(&f, &p, n_max);
            let ours = solve_steady_state(&gen).unwrap();

            let l = build_liouvillian(&f, &p, n_max).unwrap();
            let rho = steady_state_density(&l).unwrap();
            let theirs = project_to_hierarchy(&rho);

            let gap = max_gap(&ours, &theirs);
            assert!(
                gap < 1e-8,
                "kappa={kappa} mode={mode:?}: componentwise gap {gap:.3e}"
            );
            // the projected dense solution must satisfy the structured
            // equations — the truncation closures of the two paths coincide
            let defect = gen.residual_inf(&theirs.p);
            assert!(
                defect < 1e-8,
                "kappa={kappa} mode={mode:?}: projected defect {defect:.3e}"
            );

            let (n_a, g2_a) = statistics(&ours).unwrap();
            let (n_b, g2_b) = statistics(&theirs).unwrap();
            assert_relative_eq!(n_a, n_b, max_relative = 1e-9);
            assert_relative_eq!(g2_a, g2_b, max_relative = 1e-9);
        }
    }
}

#[test]
fn randomized_parameter_sets_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0f0e_555);
    let n_max = 10;
    for trial in 0..8 {
        let p = SystemParams::new(
            rng.gen_range(5.0..20.0),
            rng.gen_range(-25.0..25.0),
            rng.gen_range(20.0..50.0),
            rng.gen_range(0.0..18.0),
            1.0,
            rng.gen_range(0.0..0.3),
            10f64.powf(rng.gen_range(-3.0..0.7)),
            rng.gen_range(0.0..0.3),
        )
        .unwrap();
        for mode in [Mode::Secular, Mode::BeyondSecular] {
            let f = dress(&p, mode);
            let gen = assemble_generator(&f, &p, n_max);
            let ours = solve_steady_state(&gen).unwrap();
            let l = build_liouvillian(&f, &p, n_max).unwrap();
            let theirs = project_to_hierarchy(&steady_state_density(&l).unwrap());
            let gap = max_gap(&ours, &theirs);
            assert!(gap < 1e-8, "trial {trial} mode={mode:?}: gap {gap:.3e}");
        }
    }
}

#[test]
fn decoupled_point_agrees_to_machine_precision() {
    let p = SystemParams::new(12.5, -17.5, 35.0, 0.0, 1.0, 0.1, 0.7, 0.04).unwrap();
    let f = dress(&p, Mode::BeyondSecular);
    let gen = assemble_generator(&f, &p, 12);
    let ours = solve_steady_state(&gen).unwrap();
    let l = build_liouvillian(&f, &p, 12).unwrap();
    let theirs = project_to_hierarchy(&steady_state_density(&l).unwrap());
    assert!(max_gap(&ours, &theirs) < 1e-12);
}

#[test]
fn corrupted_generator_is_caught_by_the_cross_check() {
    let p = reference_params(1.0);
    let f = dress(&p, Mode::BeyondSecular);
    let mut gen = assemble_generator(&f, &p, 12);
    selftest_corrupt(&mut gen);
    let ours = solve_steady_state(&gen).unwrap();
    let l = build_liouvillian(&f, &p, 12).unwrap();
    let theirs = project_to_hierarchy(&steady_state_density(&l).unwrap());
    let gap = max_gap(&ours, &theirs);
    assert!(gap > 1e-6, "tampering must be visible, gap {gap:.3e}");
}

#[test]
fn dense_kernel_agrees_with_full_svd() {
    let p = reference_params(1.0);
    let f = dress(&p, Mode::BeyondSecular);
    let n_max = 6;
    let l = build_liouvillian(&f, &p, n_max).unwrap();
    let d = l.dim;
    let rho = steady_state_density(&l).unwrap();

    let svd = l.m.clone().svd(true, true);
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[a].partial_cmp(&sv[b]).unwrap());
    let (smallest, second) = (order[0], order[1]);
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    assert!(sv[smallest] < 1e-10 * sigma_max, "kernel direction missing");
    assert!(sv[second] > 1e-6 * sigma_max, "kernel unexpectedly degenerate");

    // null direction = column of V for the smallest singular value
    let v_t = svd.v_t.unwrap();
    let null: Vec<Complex64> = v_t.row(smallest).iter().map(|z| z.conj()).collect();
    let raw = DMatrix::from_column_slice(d, d, &null);
    let tr = raw.trace();
    assert!(tr.norm() > 1e-8);
    let candidate = raw * (Complex64::new(1.0, 0.0) / tr);
    let gap = (&candidate - &rho.rho)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    assert!(gap < 1e-8, "SVD kernel vs inverse iteration: {gap:.3e}");
}
