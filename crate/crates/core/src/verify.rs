//! Invariant suite: each group checks one structural property of the model
//! over a range of class counts and reports a single pass/fail line.

use std::fmt;

use crate::diagrams::{default_grid, detect_sigma, sweep, SweepOptions};
use crate::dynamics::{IntegrationConfig, KineticModel};
use crate::equilibrium::{equilibrium_bruteforce, equilibrium_recursive, BRUTEFORCE_MAX_N};
use crate::error::Result;
use crate::lattice::{build_game_table, GameTable, ModelParams, DEFAULT_ETA0};
use crate::sampling::{rng, simplex_point, DEFAULT_SEED};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Class counts `2..=n_max` are checked.
    pub n_max: usize,
    pub seed: u64,
    /// Negative control: perturb one table row before the stochasticity check.
    pub corrupt_table: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            n_max: 6,
            seed: DEFAULT_SEED,
            corrupt_table: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupOutcome {
    pub group: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for GroupOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag}  {:<26} {}", self.group, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub groups: Vec<GroupOutcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.groups.iter().all(|g| g.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &GroupOutcome> {
        self.groups.iter().filter(|g| !g.passed)
    }
}

fn outcome(group: &'static str, passed: bool, detail: String) -> GroupOutcome {
    GroupOutcome {
        group,
        passed,
        detail,
    }
}

fn model(n: usize) -> Result<KineticModel> {
    KineticModel::new(ModelParams::new(n)?)
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn grid101() -> impl Iterator<Item = f64> {
    (0..=100).map(|i| i as f64 / 100.0)
}

/// Runs every group in order. Numerical errors inside a group are reported as
/// a failure of that group rather than aborting the suite.
pub fn run_verify(opts: &VerifyOptions) -> VerifyReport {
    let n_max = opts.n_max.max(2);
    type Group = fn(usize, &VerifyOptions) -> Result<GroupOutcome>;
    let groups: [(&'static str, Group); 9] = [
        ("stochasticity", stochasticity),
        ("rhs-sum", rhs_sum),
        ("conservation-positivity", conservation),
        ("continuity-estimate", continuity),
        ("equilibrium-residual", residual),
        ("free-phase", free_phase),
        ("uniqueness", uniqueness),
        ("attractivity", attractivity),
        ("critical-density", critical_density),
    ];
    let groups = groups
        .iter()
        .map(|(name, check)| {
            check(n_max, opts).unwrap_or_else(|e| outcome(name, false, format!("error: {e}")))
        })
        .collect();
    VerifyReport { groups }
}

fn stochasticity(n_max: usize, opts: &VerifyOptions) -> Result<GroupOutcome> {
    let mut worst = 0.0f64;
    let mut first_bad = None;
    for n in 2..=n_max {
        for rho in grid101() {
            let mut table = build_game_table(n, rho)?;
            if opts.corrupt_table && n == 2 && rho == 0.5 {
                let mut entries: Vec<f64> = (1..=n)
                    .flat_map(|h| (1..=n).flat_map(move |k| (1..=n).map(move |j| (h, k, j))))
                    .map(|(h, k, j)| table.get(h, k, j))
                    .collect();
                entries[0] += 1e-3;
                table = GameTable::from_raw(n, rho, entries)?;
            }
            for h in 1..=n {
                for k in 1..=n {
                    worst = worst.max((table.row_sum(h, k) - 1.0).abs());
                }
            }
            if let Err((h, k, s)) = table.check_stochastic(0.0) {
                first_bad.get_or_insert((n, rho, h, k, s));
            }
        }
    }
    let detail = match first_bad {
        None => format!("n 2..{n_max}, 101 densities, max |row sum - 1| = {worst:e}"),
        Some((n, rho, h, k, s)) => {
            format!("n = {n}, rho = {rho}: row ({h},{k}) sums to {s}")
        }
    };
    Ok(outcome("stochasticity", first_bad.is_none(), detail))
}

fn rhs_sum(n_max: usize, opts: &VerifyOptions) -> Result<GroupOutcome> {
    let mut r = rng(opts.seed);
    let mut worst = 0.0f64;
    for n in 2..=n_max {
        let m = model(n)?;
        for rho in grid101() {
            let f = simplex_point(&mut r, n, rho)?;
            let s: f64 = m.rhs(&f.f).iter().sum();
            worst = worst.max(s.abs());
        }
    }
    let tol = 1e-13 * DEFAULT_ETA0;
    Ok(outcome(
        "rhs-sum",
        worst <= tol,
        format!("max |sum rhs| = {worst:e} (tol {tol:e})"),
    ))
}

fn conservation(n_max: usize, opts: &VerifyOptions) -> Result<GroupOutcome> {
    let mut r = rng(opts.seed ^ 0x1);
    let config = IntegrationConfig {
        t_final: 50.0,
        steady_tol: f64::MIN_POSITIVE,
        ..Default::default()
    };
    let (mut drift, mut min_pre) = (0.0f64, f64::INFINITY);
    for n in 2..=n_max {
        let m = model(n)?;
        for rho in [0.1, 0.3, 0.5, 0.7, 0.9, 1.0] {
            let f0 = simplex_point(&mut r, n, rho)?;
            let out = m.integrate_to_steady(&f0, &config)?;
            drift = drift.max(out.max_density_drift);
            min_pre = min_pre.min(out.min_pre_clamp);
        }
    }
    Ok(outcome(
        "conservation-positivity",
        drift <= 1e-10 && min_pre >= -1e-12,
        format!("max drift = {drift:e}, min pre-clamp component = {min_pre:e}"),
    ))
}

fn continuity(n_max: usize, opts: &VerifyOptions) -> Result<GroupOutcome> {
    let mut r = rng(opts.seed ^ 0x2);
    let config = IntegrationConfig::default();
    let (mut cases, mut violations, mut tightest) = (0, 0, 0.0f64);
    for n in 2..=n_max {
        let m = model(n)?;
        for rho in [0.2, 0.5, 0.8] {
            for _ in 0..4 {
                let f0 = simplex_point(&mut r, n, rho)?;
                let g0 = simplex_point(&mut r, n, rho)?;
                for t in [0.5, 1.0, 2.0] {
                    let gap = m.continuity_gap(&f0, &g0, t, &config)?;
                    cases += 1;
                    if !gap.holds() {
                        violations += 1;
                    }
                    if gap.bound > 0.0 {
                        tightest = tightest.max(gap.lhs / gap.bound);
                    }
                }
            }
        }
    }
    Ok(outcome(
        "continuity-estimate",
        violations == 0,
        format!("{cases} cases, {violations} violations, max lhs/bound = {tightest:.3}"),
    ))
}

fn residual(n_max: usize, _: &VerifyOptions) -> Result<GroupOutcome> {
    let mut worst = 0.0f64;
    for n in 2..=n_max {
        let m = model(n)?;
        for rho in grid101() {
            let eq = equilibrium_recursive(n, rho)?;
            let res: f64 = m.rhs(&eq.f_inf).iter().map(|x| x.abs()).sum();
            worst = worst.max(res);
        }
    }
    Ok(outcome(
        "equilibrium-residual",
        worst <= 1e-12,
        format!("max ||rhs(f_inf)||_1 = {worst:e}"),
    ))
}

fn free_phase(n_max: usize, _: &VerifyOptions) -> Result<GroupOutcome> {
    let mut worst = 0.0f64;
    for n in 2..=n_max {
        for rho in grid101().take_while(|&r| r <= 0.5) {
            let eq = equilibrium_recursive(n, rho)?;
            worst = worst.max((eq.q() - rho).abs());
            if rho > 0.0 {
                worst = worst.max((eq.u() - 1.0).abs());
            }
        }
    }
    Ok(outcome(
        "free-phase",
        worst <= 1e-12,
        format!("max deviation from q = rho, u = 1: {worst:e}"),
    ))
}

fn uniqueness(n_max: usize, _: &VerifyOptions) -> Result<GroupOutcome> {
    let top = n_max.min(BRUTEFORCE_MAX_N);
    let (mut cases, mut bad) = (0, Vec::new());
    for n in 2..=top {
        for i in 1..=20 {
            let rho = i as f64 * 0.05;
            let report = equilibrium_bruteforce(n, rho)?;
            let eq = equilibrium_recursive(n, rho)?;
            let stable: Vec<_> = report.stable().collect();
            cases += 1;
            let ok = stable.len() == 1 && l1(&stable[0].f, &eq.f_inf) <= 1e-10;
            if !ok {
                bad.push(format!("n={n} rho={rho:.2} stable={}", stable.len()));
            }
        }
    }
    let detail = if bad.is_empty() {
        format!("{cases} cases, one stable admissible equilibrium each (n 2..{top})")
    } else {
        format!("{} of {cases} cases fail: {}", bad.len(), bad.join(", "))
    };
    Ok(outcome("uniqueness", bad.is_empty(), detail))
}

/// Densities are kept away from `1/2`, where the approach to equilibrium is
/// algebraic rather than exponential.
fn attractivity(n_max: usize, opts: &VerifyOptions) -> Result<GroupOutcome> {
    let mut r = rng(opts.seed ^ 0x3);
    let config = IntegrationConfig {
        dt: 0.05,
        ..Default::default()
    };
    let (mut cases, mut worst) = (0, 0.0f64);
    let mut unconverged = 0;
    for n in 2..=n_max {
        let m = model(n)?;
        for rho in [0.3, 0.7, 0.9] {
            let eq = equilibrium_recursive(n, rho)?;
            for _ in 0..3 {
                let f0 = simplex_point(&mut r, n, rho)?;
                let out = m.integrate_to_steady(&f0, &config)?;
                cases += 1;
                if !out.converged {
                    unconverged += 1;
                }
                worst = worst.max(l1(&out.state.f, &eq.f_inf));
            }
        }
    }
    Ok(outcome(
        "attractivity",
        unconverged == 0 && worst <= 1e-6,
        format!("{cases} runs, {unconverged} unconverged, max distance = {worst:e}"),
    ))
}

fn critical_density(n_max: usize, _: &VerifyOptions) -> Result<GroupOutcome> {
    let grid = default_grid(200);
    let mut worst = 0.0f64;
    let mut missing = Vec::new();
    for n in 2..=n_max {
        let d = sweep(n, &grid, &SweepOptions::default())?;
        match detect_sigma(&d) {
            Ok(s) => worst = worst.max((s.sigma - 0.5).abs()),
            Err(_) => missing.push(n),
        }
    }
    let passed = missing.is_empty() && worst <= 0.005;
    let detail = if missing.is_empty() {
        format!("max |sigma - 0.5| = {worst:e}")
    } else {
        format!("no free phase detected for n in {missing:?}")
    };
    Ok(outcome("critical-density", passed, detail))
}
