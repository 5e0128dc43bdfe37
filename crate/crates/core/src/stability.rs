//! Analytic Jacobian of the kinetic right-hand side and linear stability on
//! the conserved-density hyperplane.
//!
//! Both Jacobians here have zero column sums, so they map every vector into
//! the hyperplane `{sum df = 0}`. One eigenvalue is therefore structurally
//! zero (the mass mode) and the stability-relevant spectrum is that of the
//! restriction to the hyperplane. The two Jacobians differ by a rank-one term
//! `c 1^T` that vanishes on the hyperplane, so their restrictions coincide.

use nalgebra::{DMatrix, Schur};
use serde::Serialize;

use crate::dynamics::KineticModel;
use crate::equilibrium::{branch_records, BranchRecord};

/// Eigenvalues with real part in `[-EIG_TOL, EIG_TOL]` are treated as zero.
pub const EIG_TOL: f64 = 1e-9;

/// Discriminant and root size under which a class counts as sitting on a
/// double root at zero.
const DOUBLE_ROOT_TOL: f64 = 1e-12;

impl KineticModel {
    /// Jacobian of the full right-hand side, including the dependence of the
    /// table and of the interaction rate on `rho = sum f`.
    pub fn jacobian(&self, f: &[f64]) -> DMatrix<f64> {
        let rho: f64 = f.iter().sum();
        self.jacobian_impl(f, rho, true)
    }

    /// Jacobian with the table and interaction rate frozen at `rho`.
    pub fn jacobian_at_density(&self, f: &[f64], rho: f64) -> DMatrix<f64> {
        self.jacobian_impl(f, rho, false)
    }

    fn jacobian_impl(&self, f: &[f64], rho: f64, composite: bool) -> DMatrix<f64> {
        let n = self.n();
        let r = rho.clamp(0.0, 1.0);
        let mass: f64 = f.iter().sum();
        let eta0 = self.params().eta0;
        let table = self.table();

        // gain[j], d gain[j] / d rho, d gain[j] / d f_i
        let mut gain = vec![0.0; n];
        let mut gain_r = vec![0.0; n];
        let mut dgain = DMatrix::<f64>::zeros(n, n);
        for h in 0..n {
            for k in 0..n {
                for t in table.pair(h, k) {
                    let p = t.prob(r);
                    gain[t.to] += p * f[h] * f[k];
                    gain_r[t.to] += t.slope * f[h] * f[k];
                    dgain[(t.to, h)] += p * f[k];
                    dgain[(t.to, k)] += p * f[h];
                }
            }
        }

        DMatrix::from_fn(n, n, |j, i| {
            let delta = if i == j { mass } else { 0.0 };
            let frozen = eta0 * r * (dgain[(j, i)] - f[j] - delta);
            if composite {
                frozen + eta0 * (gain[j] - f[j] * mass) + eta0 * r * gain_r[j]
            } else {
                frozen
            }
        })
    }
}

/// Restriction of a column-sum-free matrix to `{sum x = 0}` in the basis
/// `e_i - e_n`, with coordinates `x_1 .. x_{n-1}`.
pub fn restrict_to_hyperplane(jac: &DMatrix<f64>) -> DMatrix<f64> {
    let n = jac.nrows();
    DMatrix::from_fn(n - 1, n - 1, |a, i| jac[(a, i)] - jac[(a, n - 1)])
}

fn is_lower_triangular(m: &DMatrix<f64>) -> bool {
    let scale = 1.0 + m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    (0..m.nrows()).all(|a| ((a + 1)..m.ncols()).all(|b| m[(a, b)].abs() <= 1e-13 * scale))
}

/// Iteration cap for the Schur decomposition; defective matrices can keep the
/// unbounded default from ever returning.
const SCHUR_MAX_ITER: usize = 10_000;

/// Real parts of the eigenvalues of `m`, or `None` if the QR iteration does
/// not settle. Triangular input is read off the diagonal, which stays exact
/// where a nilpotent part would make a general eigensolver noisy.
fn eigen_real_parts(m: &DMatrix<f64>) -> Option<Vec<f64>> {
    if m.nrows() == 0 {
        return Some(Vec::new());
    }
    if is_lower_triangular(m) {
        return Some(m.diagonal().iter().copied().collect());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER)?;
    Some(schur.complex_eigenvalues().iter().map(|z| z.re).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    /// Real parts of all `n` eigenvalues of the full Jacobian.
    pub jacobian_eigen_real_parts: Vec<f64>,
    /// Index into `jacobian_eigen_real_parts` of the mass mode (smallest |Re|).
    pub zero_mode_index: usize,
    /// Real parts on the conserved-density hyperplane (`n - 1` values).
    pub restricted_real_parts: Vec<f64>,
    pub verdict: Verdict,
    /// The kernel direction has nonzero sum, i.e. the zero eigenvalue belongs
    /// to the mass mode alone.
    pub mass_mode_transverse: bool,
    /// For a marginal verdict: every neutral direction is a class sitting on a
    /// double root at zero, so admissible perturbations (which can only raise
    /// that class) are pulled back by `-rho x^2`.
    pub semistable: bool,
    pub note: Option<String>,
}

impl StabilityReport {
    /// Stable, or marginal but attracting from the admissible side.
    pub fn is_attracting(&self) -> bool {
        match self.verdict {
            Verdict::Stable => true,
            Verdict::Marginal => self.semistable,
            Verdict::Unstable => false,
        }
    }
}

/// Linear stability of the equilibrium candidate `f` (with `rho = sum f`).
pub fn classify_state(model: &KineticModel, f: &[f64]) -> StabilityReport {
    let rho: f64 = f.iter().sum();
    let jac = model.jacobian(f);
    let restricted = restrict_to_hyperplane(&jac);
    let restricted_real =
        eigen_real_parts(&restricted).unwrap_or_else(|| vec![f64::NAN; f.len() - 1]);

    // The hyperplane is invariant and the quotient map is zero, so the full
    // spectrum is the restricted one plus the mass mode.
    let full = eigen_real_parts(&jac).unwrap_or_else(|| {
        let mut v = restricted_real.clone();
        v.push(0.0);
        v
    });
    let zero_mode_index = full
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);

    let mass_mode_transverse = restricted_real.iter().all(|re| re.abs() > EIG_TOL);

    if rho <= 0.0 {
        return StabilityReport {
            jacobian_eigen_real_parts: full,
            zero_mode_index,
            restricted_real_parts: restricted_real,
            verdict: Verdict::Marginal,
            mass_mode_transverse,
            semistable: false,
            note: Some("empty road: zero interaction rate freezes the dynamics".into()),
        };
    }

    let verdict = if restricted_real.iter().any(|re| re.is_nan()) {
        Verdict::Marginal
    } else if restricted_real.iter().any(|&re| re > EIG_TOL) {
        Verdict::Unstable
    } else if restricted_real.iter().all(|&re| re < -EIG_TOL) {
        Verdict::Stable
    } else {
        Verdict::Marginal
    };

    let (semistable, note) = if verdict == Verdict::Marginal {
        let records = branch_records(f, rho);
        let triangular = is_lower_triangular(&restricted);
        let ok = triangular
            && restricted_real
                .iter()
                .zip(&records)
                .filter(|(re, _)| re.abs() <= EIG_TOL)
                .all(|(_, rec)| on_double_root_at_zero(rec));
        let note = if ok {
            "neutral linearization; attracting from the admissible side (double root at zero)"
        } else {
            "neutral linearization; not resolved"
        };
        (ok, Some(note.to_string()))
    } else {
        (false, None)
    };

    StabilityReport {
        jacobian_eigen_real_parts: full,
        zero_mode_index,
        restricted_real_parts: restricted_real,
        verdict,
        mass_mode_transverse,
        semistable,
        note,
    }
}

fn on_double_root_at_zero(rec: &BranchRecord) -> bool {
    rec.discriminant.abs() <= DOUBLE_ROOT_TOL && rec.root.abs() <= DOUBLE_ROOT_TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ModelParams;

    fn model(n: usize) -> KineticModel {
        KineticModel::new(ModelParams::new(n).unwrap()).unwrap()
    }

    #[test]
    fn two_class_bifurcation_verdicts() {
        let m = model(2);
        assert_eq!(classify_state(&m, &[0.4, 0.3]).verdict, Verdict::Stable);
        assert_eq!(classify_state(&m, &[0.0, 0.7]).verdict, Verdict::Unstable);
        assert_eq!(classify_state(&m, &[0.0, 0.3]).verdict, Verdict::Stable);
    }

    #[test]
    fn two_class_spectrum_at_stable_equilibrium() {
        let m = model(2);
        let r = classify_state(&m, &[0.4, 0.3]);
        let mut re = r.jacobian_eigen_real_parts.clone();
        re.sort_by(f64::total_cmp);
        // mass mode, and the scalar rate -eta0 rho^2 |2 rho - 1|
        assert!(re[1].abs() < 1e-12);
        assert!((re[0] + 0.49 * 0.4).abs() < 1e-12);
        assert!(r.jacobian_eigen_real_parts[r.zero_mode_index].abs() < 1e-12);
        assert!(r.mass_mode_transverse);
    }

    #[test]
    fn bifurcation_point_is_marginal_but_semistable() {
        let m = model(2);
        let r = classify_state(&m, &[0.0, 0.5]);
        assert_eq!(r.verdict, Verdict::Marginal);
        assert!(r.semistable);
        assert!(r.is_attracting());
    }

    #[test]
    fn empty_road_is_marginal() {
        let r = classify_state(&model(3), &[0.0, 0.0, 0.0]);
        assert_eq!(r.verdict, Verdict::Marginal);
        assert!(!r.is_attracting());
        assert!(r.note.is_some());
    }

    #[test]
    fn frozen_jacobian_has_zero_column_sums() {
        let m = model(5);
        let f = [0.1, 0.2, 0.05, 0.3, 0.1];
        for jac in [m.jacobian_at_density(&f, 0.75), m.jacobian(&f)] {
            for i in 0..5 {
                let s: f64 = jac.column(i).iter().sum();
                assert!(s.abs() <= 1e-13, "column {i} sums to {s}");
            }
        }
    }

    #[test]
    fn conventions_agree_on_the_hyperplane() {
        let m = model(4);
        let f = [0.2, 0.1, 0.25, 0.15];
        let a = restrict_to_hyperplane(&m.jacobian(&f));
        let b = restrict_to_hyperplane(&m.jacobian_at_density(&f, 0.7));
        assert!((a - b).abs().max() < 1e-14);
    }
}
