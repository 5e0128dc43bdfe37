//! Closed-form equilibria of the homogeneous system and a brute-force
//! enumeration of every admissible equilibrium.
//!
//! On the hyperplane `sum f = rho`, the equation for class `j < n` involves
//! only `f_1 .. f_j`. Written in the unknown `x = f_j`,
//!
//! ```text
//! -rho x^2 + b_j x + c_j = 0
//! b_j = (1 - 3 rho) S_{j-1} + rho (2 rho - 1)
//! c_j = (1 - rho) f_{j-1} (rho - S_{j-2})
//! ```
//!
//! where `S_m = f_1 + .. + f_m` (and `c_1 = 0`). The stable equilibrium takes
//! the larger root at every level; `f_n` follows from mass conservation.

use serde::Serialize;

use crate::dynamics::{observables, KineticModel, DENSITY_SLACK};
use crate::error::{Error, Result};
use crate::lattice::{build_lattice, check_density, ModelParams};
use crate::stability::{classify_state, StabilityReport};

/// Largest `n` accepted by [`equilibrium_bruteforce`] (`2^(n-1)` branches).
pub const BRUTEFORCE_MAX_N: usize = 12;

/// Residual `||rhs||_1` an enumerated candidate must reach to be kept.
pub const CANDIDATE_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Free,
    Congested,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Free => "free",
            Phase::Congested => "congested",
        }
    }

    /// Free phase up to and including `rho = 1/2`.
    pub fn of_density(rho: f64) -> Phase {
        if rho <= 0.5 {
            Phase::Free
        } else {
            Phase::Congested
        }
    }
}

/// `rho - s`, with round-off deficits below [`DENSITY_SLACK`] read as zero.
fn remaining_mass(rho: f64, s: f64) -> f64 {
    let left = rho - s;
    if left < 0.0 && left > -DENSITY_SLACK {
        0.0
    } else {
        left
    }
}

/// `-rho x^2 + b x + c` for one speed class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassQuadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ClassQuadratic {
    pub fn first(rho: f64) -> Self {
        ClassQuadratic {
            a: -rho,
            b: rho * (2.0 * rho - 1.0),
            c: 0.0,
        }
    }

    /// Coefficients for class `prefix.len() + 1 >= 2` given `f_1 .. f_{j-1}`.
    pub fn for_class(rho: f64, prefix: &[f64]) -> Self {
        let (last, earlier) = prefix.split_last().expect("class index >= 2");
        let s_prev: f64 = prefix.iter().sum();
        let s_earlier: f64 = earlier.iter().sum();
        ClassQuadratic {
            a: -rho,
            b: (1.0 - 3.0 * rho) * s_prev + rho * (2.0 * rho - 1.0),
            c: (1.0 - rho) * last * remaining_mass(rho, s_earlier),
        }
    }

    pub fn discriminant(&self) -> f64 {
        self.b * self.b + 4.0 * (-self.a) * self.c
    }

    /// `(larger, smaller)` roots, computed without cancellation. `None` when
    /// the discriminant is negative.
    pub fn roots(&self) -> Option<(f64, f64)> {
        let delta = self.discriminant();
        if delta < 0.0 {
            return None;
        }
        let rho = -self.a;
        let sq = delta.sqrt();
        let q = if self.b >= 0.0 {
            self.b + sq
        } else {
            self.b - sq
        };
        if q == 0.0 {
            return Some((0.0, 0.0));
        }
        // roots of rho x^2 - b x - c: q / (2 rho) and -2c / q
        let r1 = q / (2.0 * rho);
        let r2 = -2.0 * self.c / q;
        Some(if r1 >= r2 { (r1, r2) } else { (r2, r1) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchRecord {
    /// Speed class, 1-based.
    pub j: usize,
    pub discriminant: f64,
    /// Coefficients of `a x^2 + b x + c`.
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub root: f64,
    /// Whether `root` is the larger of the two roots.
    pub larger_root: bool,
}

/// Quadratic data of each class `1..n-1` evaluated at the given vector.
pub fn branch_records(f: &[f64], rho: f64) -> Vec<BranchRecord> {
    let n = f.len();
    (1..n)
        .map(|j| {
            let quad = if j == 1 {
                ClassQuadratic::first(rho)
            } else {
                ClassQuadratic::for_class(rho, &f[..j - 1])
            };
            let root = f[j - 1];
            let larger_root = quad
                .roots()
                .map(|(hi, lo)| (root - hi).abs() <= (root - lo).abs())
                .unwrap_or(false);
            BranchRecord {
                j,
                discriminant: quad.discriminant(),
                a: quad.a,
                b: quad.b,
                c: quad.c,
                root,
                larger_root,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub n: usize,
    pub rho: f64,
    pub f_inf: Vec<f64>,
    pub branch_data: Vec<BranchRecord>,
    pub phase: Phase,
    pub stable: bool,
    pub stability: StabilityReport,
}

pub fn equilibrium_f1(rho: f64) -> f64 {
    if rho <= 0.5 {
        0.0
    } else {
        2.0 * rho - 1.0
    }
}

/// Larger root and discriminant of the quadratic for class `j` (1-based,
/// `2 <= j <= n-1`) given the already determined `f_1 .. f_{j-1}`.
pub fn equilibrium_quadratic(j: usize, rho: f64, prefix: &[f64]) -> Result<(f64, f64)> {
    if j < 2 || prefix.len() != j - 1 {
        return Err(Error::InvalidParameter(format!(
            "class {j} needs {} prefix components, got {}",
            j.saturating_sub(1),
            prefix.len()
        )));
    }
    check_density(rho)?;
    if rho == 0.0 {
        return Err(Error::InvalidParameter(
            "quadratic is degenerate at zero density".into(),
        ));
    }
    if prefix.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidParameter(
            "prefix components must be nonnegative".into(),
        ));
    }
    let quad = ClassQuadratic::for_class(rho, prefix);
    let delta = quad.discriminant();
    let Some((larger, _)) = quad.roots() else {
        return Err(Error::NegativeDiscriminant { j, delta });
    };
    if prefix.iter().sum::<f64>() > rho + DENSITY_SLACK {
        return Err(Error::InvalidParameter(format!(
            "prefix mass exceeds the density {rho}"
        )));
    }
    Ok((larger, delta))
}

fn default_model(n: usize) -> Result<KineticModel> {
    KineticModel::new(ModelParams::new(n)?)
}

/// The unique stable equilibrium, built class by class.
///
/// The `stable` flag uses the default `eta0 = 1`; `eta0` only rescales time,
/// see [`classify_stability`] for other values.
pub fn equilibrium_recursive(n: usize, rho: f64) -> Result<EquilibriumResult> {
    let model = default_model(n)?;
    check_density(rho)?;
    let mut f = vec![0.0; n];
    if rho > 0.0 {
        f[0] = equilibrium_f1(rho);
        for j in 2..n {
            let (root, _) = equilibrium_quadratic(j, rho, &f[..j - 1])?;
            f[j - 1] = root;
        }
        let head: f64 = f[..n - 1].iter().sum();
        f[n - 1] = remaining_mass(rho, head);
    }
    let branch_data = if rho > 0.0 {
        branch_records(&f, rho)
    } else {
        Vec::new()
    };
    let stability = classify_state(&model, &f);
    Ok(EquilibriumResult {
        n,
        rho,
        stable: stability.is_attracting(),
        f_inf: f,
        branch_data,
        phase: Phase::of_density(rho),
        stability,
    })
}

pub fn classify_stability(eq: &EquilibriumResult, params: &ModelParams) -> Result<StabilityReport> {
    let model = KineticModel::new(ModelParams { n: eq.n, ..*params })?;
    Ok(classify_state(&model, &eq.f_inf))
}

impl EquilibriumResult {
    pub fn q(&self) -> f64 {
        self.observables().q
    }

    pub fn u(&self) -> f64 {
        self.observables().u
    }

    pub fn observables(&self) -> crate::dynamics::Observables {
        let lattice = build_lattice(self.n).expect("n >= 2 by construction");
        observables(&self.f_inf, &lattice)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub f: Vec<f64>,
    pub residual: f64,
    pub branch_data: Vec<BranchRecord>,
    pub stability: StabilityReport,
}

impl Candidate {
    pub fn is_stable(&self) -> bool {
        self.stability.is_attracting()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceReport {
    pub n: usize,
    pub rho: f64,
    /// Distinct admissible equilibria.
    pub candidates: Vec<Candidate>,
    /// Root combinations that survived the sign filters before deduplication.
    pub branches_admissible: usize,
    /// Admissible combinations dropped for failing the residual check.
    pub rejected_by_residual: usize,
}

impl BruteForceReport {
    pub fn stable(&self) -> impl Iterator<Item = &Candidate> {
        self.candidates.iter().filter(|c| c.is_stable())
    }

    pub fn stable_count(&self) -> usize {
        self.stable().count()
    }
}

/// Enumerates both roots at every level, keeps the nonnegative vectors that
/// satisfy the equilibrium equation, and classifies each one.
pub fn equilibrium_bruteforce(n: usize, rho: f64) -> Result<BruteForceReport> {
    if n > BRUTEFORCE_MAX_N {
        return Err(Error::Capability(format!(
            "brute-force enumeration is limited to n <= {BRUTEFORCE_MAX_N}, got {n}"
        )));
    }
    let model = default_model(n)?;
    check_density(rho)?;
    if rho == 0.0 {
        return Err(Error::InvalidParameter(
            "brute-force enumeration needs a positive density".into(),
        ));
    }

    let mut raw: Vec<Vec<f64>> = Vec::new();
    let mut prefix = Vec::with_capacity(n);
    enumerate(n, rho, &mut prefix, &mut raw);
    let branches_admissible = raw.len();

    let mut rejected_by_residual = 0;
    let mut candidates: Vec<Candidate> = Vec::new();
    for f in raw {
        let residual: f64 = model.rhs(&f).iter().map(|x| x.abs()).sum();
        if residual > CANDIDATE_RESIDUAL_TOL {
            rejected_by_residual += 1;
            continue;
        }
        let duplicate = candidates.iter().any(|c| {
            c.f.iter()
                .zip(&f)
                .all(|(a, b)| (a - b).abs() <= DENSITY_SLACK)
        });
        if duplicate {
            continue;
        }
        candidates.push(Candidate {
            branch_data: branch_records(&f, rho),
            stability: classify_state(&model, &f),
            residual,
            f,
        });
    }
    Ok(BruteForceReport {
        n,
        rho,
        candidates,
        branches_admissible,
        rejected_by_residual,
    })
}

fn enumerate(n: usize, rho: f64, prefix: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
    let level = prefix.len() + 1;
    if level == n {
        let head: f64 = prefix.iter().sum();
        let last = remaining_mass(rho, head);
        if last >= 0.0 {
            let mut f = prefix.clone();
            f.push(last);
            out.push(f);
        }
        return;
    }
    let quad = if level == 1 {
        ClassQuadratic::first(rho)
    } else {
        ClassQuadratic::for_class(rho, prefix)
    };
    let Some((hi, lo)) = quad.roots() else {
        return;
    };
    let roots = if hi == lo { vec![hi] } else { vec![hi, lo] };
    for root in roots {
        if root < 0.0 {
            continue;
        }
        prefix.push(root);
        enumerate(n, rho, prefix, out);
        prefix.pop();
    }
}
