//! Acceptance criteria, one test each. Every test prints a single
//! `PASS`/`FAIL` line with the measured quantity before asserting.

mod common;

use std::time::Instant;

use kintraffic::sampling::{rng, simplex_point, DEFAULT_SEED};
use kintraffic::{
    classify_state, default_grid, detect_sigma, equilibrium_bruteforce, equilibrium_recursive,
    rescale_dimensional, sweep, IntegrationConfig, KineticModel, Method, ModelParams, SweepOptions,
    Verdict,
};

fn report(id: u32, passed: bool, what: &str, detail: String) {
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id:>2}: {what}: {detail}");
}

fn model(n: usize) -> KineticModel {
    KineticModel::new(ModelParams::new(n).unwrap()).unwrap()
}

/// Densities 0.1, 0.3, ..., 0.9 with 20 seeded simplex starts each, integrated
/// to t = 200. Shared by the attractivity and conservation criteria.
struct AttractivityRun {
    n: usize,
    rho: f64,
    distance: f64,
    drift: f64,
    min_pre_clamp: f64,
}

fn attractivity_runs() -> Vec<AttractivityRun> {
    let config = IntegrationConfig {
        t_final: 200.0,
        steady_tol: f64::MIN_POSITIVE,
        ..Default::default()
    };
    let mut r = rng(DEFAULT_SEED);
    let mut runs = Vec::new();
    for n in 2..=6 {
        let m = model(n);
        for rho in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let eq = equilibrium_recursive(n, rho).unwrap();
            for _ in 0..20 {
                let f0 = simplex_point(&mut r, n, rho).unwrap();
                let out = m.integrate_to_steady(&f0, &config).unwrap();
                runs.push(AttractivityRun {
                    n,
                    rho,
                    distance: common::l1(&out.state.f, &eq.f_inf),
                    drift: out.max_density_drift,
                    min_pre_clamp: out.min_pre_clamp,
                });
            }
        }
    }
    runs
}

#[test]
fn criterion_01_triangular_two_class_diagram() {
    let start = Instant::now();
    let d = sweep(2, &default_grid(200), &SweepOptions::default()).unwrap();
    let mut worst = 0.0f64;
    for p in &d.points {
        let (q, u) = if p.rho <= 0.5 {
            (p.rho, 1.0)
        } else {
            (1.0 - p.rho, 1.0 / p.rho - 1.0)
        };
        worst = worst.max((p.q - q).abs()).max((p.u - u).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    let passed = worst <= 1e-9 && d.points.len() >= 201;
    report(
        1,
        passed,
        "triangular n=2 diagram",
        format!(
            "{} points, max |dq|,|du| = {worst:e}, {secs:.3} s",
            d.points.len()
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_02_critical_density_invariance() {
    let start = Instant::now();
    let grid = default_grid(200);
    let mut worst = 0.0f64;
    for n in 2..=10 {
        let d = sweep(n, &grid, &SweepOptions::default()).unwrap();
        let s = detect_sigma(&d).unwrap();
        worst = worst.max((s.sigma - 0.5).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    let passed = worst <= 0.005;
    report(
        2,
        passed,
        "sigma = 0.5 for n = 2..10",
        format!("max |sigma - 0.5| = {worst:e}, {secs:.3} s"),
    );
    assert!(passed);
}

#[test]
fn criterion_03_free_phase_law() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for n in 2..=10 {
        for rho in default_grid(200).into_iter().filter(|&r| r <= 0.5) {
            let eq = equilibrium_recursive(n, rho).unwrap();
            worst = worst.max((eq.q() - rho).abs()).max((eq.u() - 1.0).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let passed = worst <= 1e-12;
    report(
        3,
        passed,
        "free phase q = rho, u = 1",
        format!("max deviation = {worst:e}, {secs:.3} s"),
    );
    assert!(passed);
}

#[test]
fn criterion_04_unique_stable_equilibrium() {
    let start = Instant::now();
    let mut cases = 0;
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for n in 2..=8 {
        for i in 1..=20 {
            let rho = i as f64 * 0.05;
            let report = equilibrium_bruteforce(n, rho).unwrap();
            let eq = equilibrium_recursive(n, rho).unwrap();
            let stable: Vec<_> = report.stable().collect();
            cases += 1;
            if stable.len() != 1 {
                failures.push(format!("n={n} rho={rho:.2}: {} stable", stable.len()));
                continue;
            }
            let d = common::l1(&stable[0].f, &eq.f_inf);
            worst = worst.max(d);
            if d > 1e-10 {
                failures.push(format!("n={n} rho={rho:.2}: distance {d:e}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let passed = failures.is_empty();
    report(
        4,
        passed,
        "exactly one stable admissible equilibrium",
        format!(
            "{cases} cases, {} failures, max distance to recursive = {worst:e}, {secs:.3} s {}",
            failures.len(),
            failures.join("; ")
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_05_attractivity_by_t200() {
    let start = Instant::now();
    let runs = attractivity_runs();
    let secs = start.elapsed().as_secs_f64();
    let mut by_density = Vec::new();
    for rho in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let worst = runs
            .iter()
            .filter(|r| r.rho == rho)
            .map(|r| r.distance)
            .fold(0.0, f64::max);
        let misses = runs
            .iter()
            .filter(|r| r.rho == rho && r.distance > 1e-6)
            .count();
        by_density.push(format!("rho={rho}: max {worst:.3e} ({misses} misses)"));
    }
    let worst_case = runs
        .iter()
        .max_by(|a, b| a.distance.total_cmp(&b.distance))
        .unwrap();
    let misses = runs.iter().filter(|r| r.distance > 1e-6).count();
    let passed = misses == 0;
    report(
        5,
        passed,
        "attractivity within 1e-6 by t = 200",
        format!(
            "{} runs, {misses} misses, worst n={} rho={} at {:e}; {}; {secs:.1} s",
            runs.len(),
            worst_case.n,
            worst_case.rho,
            worst_case.distance,
            by_density.join(", ")
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_06_conservation_and_positivity() {
    let runs = attractivity_runs();
    let drift = runs.iter().map(|r| r.drift).fold(0.0, f64::max);
    let min_pre = runs
        .iter()
        .map(|r| r.min_pre_clamp)
        .fold(f64::INFINITY, f64::min);
    let passed = drift <= 1e-10 && min_pre >= -1e-12;
    report(
        6,
        passed,
        "conservation and positivity",
        format!(
            "{} trajectories, max drift = {drift:e}, min pre-clamp = {min_pre:e}",
            runs.len()
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_07_continuity_estimate() {
    let mut r = rng(DEFAULT_SEED ^ 0x7);
    let config = IntegrationConfig::default();
    let (mut cases, mut violations, mut tightest) = (0, 0, 0.0f64);
    for pair in 0..100 {
        let n = 2 + pair % 5;
        let m = model(n);
        let rho = (pair as f64 + 0.5) / 100.0;
        let f0 = simplex_point(&mut r, n, rho).unwrap();
        let g0 = simplex_point(&mut r, n, rho).unwrap();
        for t in [0.5, 1.0, 2.0] {
            let gap = m.continuity_gap(&f0, &g0, t, &config).unwrap();
            cases += 1;
            if !gap.holds() {
                violations += 1;
            }
            if gap.bound > 0.0 {
                tightest = tightest.max(gap.lhs / gap.bound);
            }
        }
    }
    let passed = violations == 0;
    report(
        7,
        passed,
        "a priori continuity estimate",
        format!("{cases} cases, {violations} violations, max lhs/bound = {tightest:.4}"),
    );
    assert!(passed);
}

#[test]
fn criterion_08_two_class_bifurcation() {
    let m = model(2);
    let mut wrong = Vec::new();
    for i in 1..=99 {
        let rho = i as f64 / 100.0;
        if rho == 0.5 {
            continue;
        }
        let free = classify_state(&m, &[0.0, rho]).verdict;
        let want = if rho < 0.5 {
            Verdict::Stable
        } else {
            Verdict::Unstable
        };
        if free != want {
            wrong.push(format!("(0, {rho}) {free:?}"));
        }
        if rho > 0.5 {
            let congested = classify_state(&m, &[2.0 * rho - 1.0, 1.0 - rho]).verdict;
            if congested != Verdict::Stable {
                wrong.push(format!("(2rho-1, 1-rho) at {rho} {congested:?}"));
            }
        }
    }
    let passed = wrong.is_empty();
    report(
        8,
        passed,
        "supercritical bifurcation at n=2",
        format!(
            "98 densities, {} misclassified {}",
            wrong.len(),
            wrong.join("; ")
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_09_physical_critical_density() {
    let params = ModelParams::new(2).unwrap();
    let d = sweep(2, &default_grid(200), &SweepOptions::default()).unwrap();
    let phys = rescale_dimensional(&d, &params);
    let sigma = phys.sigma.unwrap_or(f64::NAN);
    let passed = (sigma - 100.0).abs() <= 1e-9;
    report(
        9,
        passed,
        "sigma in physical units",
        format!("sigma = {sigma} veh/km"),
    );
    assert!(passed);
}

#[test]
fn criterion_10_recursive_and_integrated_sweeps_agree() {
    let start = Instant::now();
    let grid = default_grid(50);
    let mut misses = Vec::new();
    let mut worst = 0.0f64;
    let mut worst_off_kink = 0.0f64;
    for n in 2..=6 {
        let rec = sweep(n, &grid, &SweepOptions::default()).unwrap();
        let int = sweep(
            n,
            &grid,
            &SweepOptions {
                method: Method::Integrate,
                jobs: 4,
                ..Default::default()
            },
        )
        .unwrap();
        for (a, b) in rec.points.iter().zip(&int.points) {
            let dq = (a.q - b.q).abs();
            worst = worst.max(dq);
            if a.rho != 0.5 {
                worst_off_kink = worst_off_kink.max(dq);
            }
            if dq > 1e-5 {
                misses.push(format!("n={n} rho={} |dq|={dq:.3e}", a.rho));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let passed = misses.is_empty();
    report(
        10,
        passed,
        "recursive vs integrate within 1e-5 in q",
        format!(
            "{} grid points x 5 class counts, max |dq| = {worst:e} (excluding rho = 0.5: {worst_off_kink:e}), {secs:.1} s; misses: {}",
            grid.len(),
            misses.join("; ")
        ),
    );
    assert!(passed);
}
