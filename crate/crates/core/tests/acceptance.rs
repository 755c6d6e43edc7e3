//! End-to-end acceptance suite. Each test prints exactly one
//! `criterion N: PASS/FAIL — detail` line (run with `--nocapture` to see the
//! lines on success) and then asserts. Tests share a lock so the wall-clock
//! budgets are measured one at a time.

use phonon_stats::hierarchy::{
    assemble_generator, auto_truncate, solve_steady_state, statistics, HierarchyState,
};
use phonon_stats::model::{dress, DressedFrame, Mode, SystemParams};
use phonon_stats::oracle::{build_liouvillian, project_to_hierarchy, steady_state_density};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;

static GATE: Mutex<()> = Mutex::new(());

fn gate() -> std::sync::MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn reference_params(g: f64, kappa: f64, nbar: f64) -> SystemParams {
    SystemParams::new(12.5, -17.5, 35.0, g, 1.0, 0.1, kappa, nbar).unwrap()
}

fn observables_at(params: &SystemParams, mode: Mode) -> (f64, f64) {
    let frame = dress(params, mode);
    let (_, obs) = auto_truncate(&frame, params, 1e-8, 8).unwrap();
    (obs.n_mean, obs.g2)
}

#[test]
fn criterion_1_decoupled_thermal_anchor() {
    let _g = gate();
    let t0 = Instant::now();
    let p = reference_params(0.0, 5e-3, 0.04);
    let (n_mean, g2) = observables_at(&p, Mode::BeyondSecular);
    let dt = t0.elapsed().as_secs_f64();
    let ok = (n_mean - 0.04).abs() < 1e-10 && (g2 - 2.0).abs() < 1e-9 && dt < 0.1;
    println!(
        "criterion 1: {} — zero-coupling thermal point: ⟨n⟩ = {:.12}, g²(0) = {:.12}, {:.3} s",
        verdict(ok),
        n_mean,
        g2,
        dt
    );
    assert!(ok, "⟨n⟩ = {n_mean:.12e}, g²(0) = {g2:.12e}, {dt:.3} s");
}

#[test]
fn criterion_2_dense_reference_equivalence() {
    let _g = gate();
    let t0 = Instant::now();
    let n_max = 12;
    let mut worst_gap = 0.0f64;
    let mut worst_defect = 0.0f64;
    let mut worst_obs = 0.0f64;
    for kappa in [5e-3, 1.0, 5.0] {
        for mode in [Mode::Secular, Mode::BeyondSecular] {
            let p = reference_params(15.0, kappa, 0.04);
            let f = dress(&p, mode);
            let gen = assemble_generator(&f, &p, n_max);
            let ours = solve_steady_state(&gen).unwrap();
            let rho = steady_state_density(&build_liouvillian(&f, &p, n_max).unwrap()).unwrap();
            let theirs = project_to_hierarchy(&rho);
            let gap = ours
                .p
                .iter()
                .zip(&theirs.p)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            worst_gap = worst_gap.max(gap);
            worst_defect = worst_defect.max(gen.residual_inf(&theirs.p));
            let (n_a, g2_a) = statistics(&ours).unwrap();
            let (n_b, g2_b) = statistics(&theirs).unwrap();
            worst_obs = worst_obs
                .max((n_a - n_b).abs() / n_b.abs())
                .max((g2_a - g2_b).abs() / g2_b.abs());
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    let ok = worst_gap < 1e-8 && worst_defect < 1e-8 && worst_obs < 1e-9 && dt < 30.0;
    println!(
        "criterion 2: {} — dense-reference equivalence over six regimes: worst component gap {:.2e}, projected defect {:.2e}, observable drift {:.2e}, {:.2} s",
        verdict(ok),
        worst_gap,
        worst_defect,
        worst_obs,
        dt
    );
    assert!(ok, "gap {worst_gap:.3e}, defect {worst_defect:.3e}, obs {worst_obs:.3e}, {dt:.2} s");
}

#[test]
fn criterion_3_sub_poissonian_window_and_bath_ordering() {
    let _g = gate();
    let t0 = Instant::now();
    let kappa = 5.0;
    let occupations = [0.01, 0.04, 0.08, 0.16, 0.64];
    let g2: Vec<f64> = occupations
        .iter()
        .map(|&nb| observables_at(&reference_params(15.0, kappa, nb), Mode::BeyondSecular).1)
        .collect();
    let sub_at_001 = g2[0] < 1.0 - 1e-3;
    let sub_at_004 = g2[1] < 1.0 - 1e-3;
    let monotone = g2.windows(2).all(|w| w[1] - w[0] >= 1e-3);
    let dt = t0.elapsed().as_secs_f64();
    let ok = sub_at_001 && sub_at_004 && monotone && dt < 60.0;
    let mut detail = String::new();
    for (nb, v) in occupations.iter().zip(&g2) {
        let _ = write!(detail, " g²({nb}) = {v:.6},");
    }
    println!(
        "criterion 3: {} — strong-damping statistics:{} sub-unity at 0.01: {}, sub-unity at 0.04: {}, ordering: {}, {:.2} s",
        verdict(ok),
        detail,
        sub_at_001,
        sub_at_004,
        monotone,
        dt
    );
    assert!(
        ok,
        "g² over occupations {occupations:?} = {g2:?} (sub-unity at 0.04 requires g² < 1 − 1e−3), {dt:.2} s"
    );
}

fn inset_kappas() -> Vec<f64> {
    let (lo, hi, count) = (1e-3f64, 1e-2f64, 15usize);
    (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            10f64.powf(lo.log10() + t * (hi.log10() - lo.log10()))
        })
        .collect()
}

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("golden")
        .join("fig2_inset.csv")
}

fn compute_inset() -> Vec<(f64, f64, f64)> {
    inset_kappas()
        .into_iter()
        .map(|kappa| {
            let p = reference_params(15.0, kappa, 0.04);
            let (_, g2_sec) = observables_at(&p, Mode::Secular);
            let (_, g2_bey) = observables_at(&p, Mode::BeyondSecular);
            (kappa, g2_sec, g2_bey)
        })
        .collect()
}

#[test]
fn criterion_4_mode_splitting_and_frozen_inset() {
    let _g = gate();
    let t0 = Instant::now();

    // frozen-reference comparison
    let golden = std::fs::read_to_string(golden_path())
        .expect("frozen inset reference missing; run the ignored regenerate_golden_inset test");
    let mut frozen: Vec<(f64, f64, f64)> = Vec::new();
    for line in golden.lines().skip(1) {
        let mut it = line.split(',');
        let k: f64 = it.next().unwrap().parse().unwrap();
        let s: f64 = it.next().unwrap().parse().unwrap();
        let b: f64 = it.next().unwrap().parse().unwrap();
        frozen.push((k, s, b));
    }
    let current = compute_inset();
    assert_eq!(frozen.len(), current.len());
    let mut drift = 0.0f64;
    for ((_, fs, fb), (_, cs, cb)) in frozen.iter().zip(&current) {
        drift = drift.max(((fs - cs) / fs).abs()).max(((fb - cb) / fb).abs());
    }
    let frozen_ok = drift < 1e-6;

    // splitting magnitudes at the window edges
    let p_slow = reference_params(15.0, 3e-3, 0.04);
    let split_slow = (observables_at(&p_slow, Mode::BeyondSecular).1
        - observables_at(&p_slow, Mode::Secular).1)
        .abs();
    let p_fast = reference_params(15.0, 5.0, 0.04);
    let split_fast = (observables_at(&p_fast, Mode::BeyondSecular).1
        - observables_at(&p_fast, Mode::Secular).1)
        .abs();
    let amplification = split_slow > 10.0 * split_fast;

    // sign of the splitting in the slow-damping window
    let crossing = current.iter().any(|&(_, s, b)| b < s);

    let dt = t0.elapsed().as_secs_f64();
    let ok = frozen_ok && amplification && crossing;
    println!(
        "criterion 4: {} — inset drift {:.2e} (frozen: {}), |Δg²|(κ=3e−3) = {:.3e} vs 10×|Δg²|(κ=5) = {:.3e} (amplification: {}), beyond-below-secular in window: {}, {:.2} s",
        verdict(ok),
        drift,
        frozen_ok,
        split_slow,
        10.0 * split_fast,
        amplification,
        crossing,
        dt
    );
    assert!(
        ok,
        "drift {drift:.3e}, split(3e−3) {split_slow:.3e}, split(5) {split_fast:.3e}, crossing {crossing}"
    );
}

/// Writes the frozen inset reference from the current implementation.
/// Run explicitly when the physics is intentionally changed:
/// `cargo test --test acceptance regenerate_golden_inset -- --ignored`
#[test]
#[ignore = "writes the frozen reference"]
fn regenerate_golden_inset() {
    let rows = compute_inset();
    let mut out = String::from("kappa,g2_secular,g2_beyond\n");
    for (k, s, b) in rows {
        let _ = writeln!(out, "{k:.12e},{s:.12e},{b:.12e}");
    }
    let path = golden_path();
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(&path, out).unwrap();
    println!("wrote {}", path.display());
}

#[test]
fn criterion_5_detuning_window_statistics() {
    let _g = gate();
    let t0 = Instant::now();
    let two_omega: f64 = 25.0;
    let mut all_sub_unity = true;
    let mut all_ordered = true;
    let mut worst_margin = f64::INFINITY;
    for ratio in [-0.9, -0.85, -0.8, -0.75, -0.7, -0.65, -0.6] {
        let detuning = ratio * two_omega;
        let p =
            SystemParams::new(0.5 * two_omega, detuning, 35.0, 15.0, 1.0, 0.1, 5e-3, 0.04).unwrap();
        let (_, g2_bey) = observables_at(&p, Mode::BeyondSecular);
        let (_, g2_sec) = observables_at(&p, Mode::Secular);
        all_sub_unity &= g2_bey < 1.0 - 1e-3;
        all_ordered &= g2_sec - g2_bey > 1e-3;
        worst_margin = worst_margin.min(1.0 - g2_bey).min(g2_sec - g2_bey);
    }
    let dt = t0.elapsed().as_secs_f64();
    let ok = all_sub_unity && all_ordered && dt < 300.0;
    println!(
        "criterion 5: {} — red-detuned window: beyond-secular sub-unity {}, secular above beyond {}, worst margin {:.3e}, {:.2} s",
        verdict(ok),
        all_sub_unity,
        all_ordered,
        worst_margin,
        dt
    );
    assert!(ok, "sub-unity {all_sub_unity}, ordered {all_ordered}, margin {worst_margin:.3e}, {dt:.2} s");
}

#[test]
fn criterion_6_state_invariants_on_random_sets() {
    let _g = gate();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xace5);
    let n_max = 12;
    let mut worst_imag = 0.0f64;
    let mut worst_real = 0.0f64;
    let mut worst_pop = 0.0f64;
    let mut worst_trace = 0.0f64;
    for _ in 0..50 {
        let p = SystemParams::new(
            rng.gen_range(5.0..20.0),
            rng.gen_range(-25.0..25.0),
            rng.gen_range(20.0..50.0),
            rng.gen_range(0.0..18.0),
            1.0,
            rng.gen_range(0.0..0.3),
            10f64.powf(rng.gen_range(-3.0..0.7)),
            rng.gen_range(0.0..0.64),
        )
        .unwrap();
        let mode = if rng.gen_bool(0.5) {
            Mode::Secular
        } else {
            Mode::BeyondSecular
        };
        let f = dress(&p, mode);
        let gen = assemble_generator(&f, &p, n_max);
        let st = solve_steady_state(&gen).unwrap();
        let trace: num_complex::Complex64 = (0..=n_max).map(|n| st.get(1, n)).sum();
        worst_trace = worst_trace.max((trace - num_complex::Complex64::new(1.0, 0.0)).norm());
        for n in 0..=n_max {
            worst_pop = worst_pop.max(-st.population(n));
            for fam in [1usize, 2, 4, 6] {
                worst_imag = worst_imag.max(st.get(fam, n).im.abs());
            }
            for fam in [3usize, 5] {
                worst_real = worst_real.max(st.get(fam, n).re.abs());
            }
        }
    }

    // truncation idempotence on a few converged points
    let mut worst_shift = 0.0f64;
    for kappa in [5e-3, 0.5, 5.0] {
        let p = reference_params(15.0, kappa, 0.04);
        let f = dress(&p, Mode::BeyondSecular);
        let (_, obs) = auto_truncate(&f, &p, 1e-8, 8).unwrap();
        let gen = assemble_generator(&f, &p, 2 * obs.n_max_used);
        let st = solve_steady_state(&gen).unwrap();
        let (n2, g2) = statistics(&st).unwrap();
        worst_shift = worst_shift
            .max(((n2 - obs.n_mean) / n2).abs())
            .max(((g2 - obs.g2) / g2).abs());
    }

    let dt = t0.elapsed().as_secs_f64();
    let ok = worst_imag < 1e-9
        && worst_real < 1e-9
        && worst_pop < 1e-10
        && worst_trace < 1e-12
        && worst_shift < 1e-7;
    println!(
        "criterion 6: {} — invariants on 50 random sets: reality defect {:.2e}, negativity {:.2e}, trace defect {:.2e}, post-convergence shift {:.2e}, {:.2} s",
        verdict(ok),
        worst_imag.max(worst_real),
        worst_pop,
        worst_trace,
        worst_shift,
        dt
    );
    assert!(
        ok,
        "imag {worst_imag:.3e}, real {worst_real:.3e}, pop {worst_pop:.3e}, trace {worst_trace:.3e}, shift {worst_shift:.3e}"
    );
}

#[test]
fn criterion_7_weak_coupling_modes_coincide() {
    let _g = gate();
    let t0 = Instant::now();
    let p = reference_params(0.1, 5e-3, 0.04);
    let (_, g2_bey) = observables_at(&p, Mode::BeyondSecular);
    let (_, g2_sec) = observables_at(&p, Mode::Secular);
    let split = (g2_bey - g2_sec).abs();
    let dt = t0.elapsed().as_secs_f64();
    let ok = split < 1e-3;
    println!(
        "criterion 7: {} — weak coupling: g²(0) beyond = {:.9}, secular = {:.9}, |Δ| = {:.3e}, {:.2} s",
        verdict(ok),
        g2_bey,
        g2_sec,
        split,
        dt
    );
    assert!(ok, "|Δg²| = {split:.3e}");
}

#[test]
fn criterion_8_performance_envelope() {
    let _g = gate();

    // single large fixed-truncation point
    let t0 = Instant::now();
    let p = reference_params(15.0, 5e-3, 0.04);
    let f = dress(&p, Mode::BeyondSecular);
    let gen = assemble_generator(&f, &p, 200);
    let st = solve_steady_state(&gen).unwrap();
    let (n_mean, _) = statistics(&st).unwrap();
    let point_dt = t0.elapsed().as_secs_f64();
    let point_ok = point_dt < 1.0 && n_mean > 0.0;

    // full damping sweep, five bath occupations, both modes, serial
    let t1 = Instant::now();
    let count = 61;
    let mut solved = 0usize;
    for i in 0..count {
        let t = i as f64 / (count - 1) as f64;
        let kappa = 10f64.powf(-3.0 + t * 4.0); // 1e−3 … 10, log-spaced
        for nbar in [0.01, 0.04, 0.08, 0.16, 0.64] {
            let p = reference_params(15.0, kappa, nbar);
            for mode in [Mode::Secular, Mode::BeyondSecular] {
                let frame: DressedFrame = dress(&p, mode);
                let (state, _): (HierarchyState, _) =
                    auto_truncate(&frame, &p, 1e-8, 8).unwrap();
                solved += state.n_max;
            }
        }
    }
    let sweep_dt = t1.elapsed().as_secs_f64();
    let sweep_ok = sweep_dt < 300.0;

    let ok = point_ok && sweep_ok;
    println!(
        "criterion 8: {} — fixed point at 200 levels in {:.3} s, {} damping-sweep solves in {:.1} s (levels touched {})",
        verdict(ok),
        point_dt,
        count * 10,
        sweep_dt,
        solved
    );
    assert!(ok, "point {point_dt:.3} s, sweep {sweep_dt:.1} s");
}
