//! Right-hand side of the spatially homogeneous kinetic system and its
//! fixed-step time integration.
//!
//! The evolution of the class densities is
//!
//! ```text
//! df_j/dt = eta[rho] * ( sum_{h,k} A^j_{hk}[rho] f_h f_k  -  f_j * sum_k f_k )
//! ```
//!
//! with `rho = sum_k f_k` conserved by the flow.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{build_lattice, ModelParams, SparseTable, SpeedLattice};

/// Components in `(-POSITIVITY_FLOOR, 0)` are clamped to zero after a step;
/// anything below `-POSITIVITY_FLOOR` aborts the integration.
pub const POSITIVITY_FLOOR: f64 = 1e-12;

/// Slack allowed on `sum f <= 1` and on density equality checks.
pub const DENSITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KineticState {
    pub f: Vec<f64>,
    pub t: f64,
}

impl KineticState {
    pub fn new(f: Vec<f64>) -> Result<Self> {
        Self::at_time(f, 0.0)
    }

    pub fn at_time(f: Vec<f64>, t: f64) -> Result<Self> {
        if f.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "state needs at least 2 classes, got {}",
                f.len()
            )));
        }
        if let Some((j, &v)) = f
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidParameter(format!(
                "f_{} = {v} is not a nonnegative number",
                j + 1
            )));
        }
        let rho: f64 = f.iter().sum();
        if rho > 1.0 + DENSITY_SLACK {
            return Err(Error::DensityOutOfRange(rho));
        }
        Ok(KineticState { f, t })
    }

    /// Equal share `rho / n` in every class.
    pub fn uniform(n: usize, rho: f64) -> Result<Self> {
        crate::lattice::check_density(rho)?;
        Self::new(vec![rho / n as f64; n])
    }

    pub fn n(&self) -> usize {
        self.f.len()
    }

    pub fn density(&self) -> f64 {
        self.f.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observables {
    pub rho: f64,
    pub q: f64,
    pub u: f64,
}

pub fn observables(f: &[f64], lattice: &SpeedLattice) -> Observables {
    let rho: f64 = f.iter().sum();
    let q: f64 = f.iter().zip(lattice.speeds()).map(|(f, v)| f * v).sum();
    // mean speed extended by continuity to the empty road
    let u = if rho > 0.0 { q / rho } else { 1.0 };
    Observables { rho, q, u }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Stop once `||rhs||_1` drops below this.
    pub steady_tol: f64,
    pub max_steps: usize,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            dt: 0.01,
            t_final: 1.0e5,
            steady_tol: 1e-10,
            max_steps: 10_000_000,
        }
    }
}

impl IntegrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.steady_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "steady_tol must be positive, got {}",
                self.steady_tol
            )));
        }
        if !(self.t_final >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_final must be nonnegative, got {}",
                self.t_final
            )));
        }
        Ok(())
    }
}

/// Per-step diagnostics of the positivity policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepReport {
    /// Smallest component before clamping.
    pub min_pre_clamp: f64,
    /// Largest absolute change applied by the clamp.
    pub clamp_adjust: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyOutcome {
    pub state: KineticState,
    pub converged: bool,
    pub steps: usize,
    /// `||rhs||_1` at the returned state.
    pub residual: f64,
    /// `max_t |sum f(t) - rho(0)|` over the recorded steps.
    pub max_density_drift: f64,
    /// Smallest component seen before clamping.
    pub min_pre_clamp: f64,
    pub max_clamp_adjust: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuityGap {
    /// `||g(t) - f(t)||_1 + ||g'(t) - f'(t)||_1`
    pub lhs: f64,
    /// `(1 + 3 eta0) exp(3 eta0 t) ||g0 - f0||_1`
    pub bound: f64,
}

impl ContinuityGap {
    pub fn holds(&self) -> bool {
        self.lhs <= self.bound
    }
}

fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// The kinetic model for a fixed number of classes: lattice, table layout and
/// parameters bundled together so the hot loop does not rebuild them.
#[derive(Debug, Clone)]
pub struct KineticModel {
    params: ModelParams,
    lattice: SpeedLattice,
    table: SparseTable,
}

impl KineticModel {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        Ok(KineticModel {
            lattice: build_lattice(params.n)?,
            table: SparseTable::new(params.n)?,
            params,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn lattice(&self) -> &SpeedLattice {
        &self.lattice
    }

    pub fn table(&self) -> &SparseTable {
        &self.table
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.n() {
            return Err(Error::InvalidParameter(format!(
                "state has {} classes, model has {}",
                f.len(),
                self.n()
            )));
        }
        Ok(())
    }

    /// Time derivative with the table and the interaction rate frozen at the
    /// density parameter `rho`, and loss term `f_j * sum_k f_k`.
    ///
    /// For any `f`, `sum_j out_j = 0` because every row of the table sums to one.
    pub fn rhs_at_density(&self, f: &[f64], rho: f64, out: &mut [f64]) {
        let n = self.n();
        let r = rho.clamp(0.0, 1.0);
        out.fill(0.0);
        for h in 0..n {
            let fh = f[h];
            if fh == 0.0 {
                continue;
            }
            for k in 0..n {
                let w = fh * f[k];
                if w == 0.0 {
                    continue;
                }
                for t in self.table.pair(h, k) {
                    out[t.to] += t.prob(r) * w;
                }
            }
        }
        let mass: f64 = f.iter().sum();
        let eta = self.params.eta0 * r;
        for (o, fj) in out.iter_mut().zip(f) {
            *o = eta * (*o - fj * mass);
        }
    }

    /// Time derivative of the full system, where the table and the interaction
    /// rate are evaluated at the state's own density.
    pub fn rhs_into(&self, f: &[f64], out: &mut [f64]) {
        let rho: f64 = f.iter().sum();
        self.rhs_at_density(f, rho, out);
    }

    pub fn rhs(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        self.rhs_into(f, &mut out);
        out
    }

    pub fn observables(&self, state: &KineticState) -> Observables {
        observables(&state.f, &self.lattice)
    }

    /// One classical RK4 step followed by the positivity policy.
    pub fn step(&self, state: &KineticState, dt: f64) -> Result<KineticState> {
        self.step_with_report(state, dt).map(|(s, _)| s)
    }

    pub fn step_with_report(
        &self,
        state: &KineticState,
        dt: f64,
    ) -> Result<(KineticState, StepReport)> {
        self.check_len(&state.f)?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {dt}"
            )));
        }
        let mut ws = Workspace::new(self.n());
        self.rhs_into(&state.f, &mut ws.k1);
        let mut f = state.f.clone();
        let report = self.rk4_from_k1(&mut f, state.t, dt, &mut ws)?;
        Ok((KineticState { f, t: state.t + dt }, report))
    }

    /// Advances `f` in place by `dt`, assuming `ws.k1` already holds `rhs(f)`.
    fn rk4_from_k1(
        &self,
        f: &mut [f64],
        t: f64,
        dt: f64,
        ws: &mut Workspace,
    ) -> Result<StepReport> {
        let n = f.len();
        let half = 0.5 * dt;
        for i in 0..n {
            ws.tmp[i] = f[i] + half * ws.k1[i];
        }
        self.rhs_into(&ws.tmp, &mut ws.k2);
        for i in 0..n {
            ws.tmp[i] = f[i] + half * ws.k2[i];
        }
        self.rhs_into(&ws.tmp, &mut ws.k3);
        for i in 0..n {
            ws.tmp[i] = f[i] + dt * ws.k3[i];
        }
        self.rhs_into(&ws.tmp, &mut ws.k4);
        let sixth = dt / 6.0;
        for i in 0..n {
            f[i] += sixth * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
        }
        enforce_positivity(f, t + dt)
    }

    fn run<F>(
        &self,
        f0: &KineticState,
        config: &IntegrationConfig,
        mut observe: F,
    ) -> Result<SteadyOutcome>
    where
        F: FnMut(&KineticState, usize),
    {
        config.validate()?;
        self.check_len(&f0.f)?;
        let rho0 = f0.density();
        let mut ws = Workspace::new(self.n());
        let mut f = f0.f.clone();
        let mut t = f0.t;
        let t_end = f0.t + config.t_final;
        let mut steps = 0usize;
        let mut max_drift = 0.0f64;
        let mut min_pre = f.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut max_adjust = 0.0f64;

        loop {
            self.rhs_into(&f, &mut ws.k1);
            let residual: f64 = ws.k1.iter().map(|x| x.abs()).sum();
            if !residual.is_finite() {
                return Err(Error::IntegrationDiverged {
                    t,
                    reason: "non-finite right-hand side".into(),
                });
            }
            let converged = residual < config.steady_tol;
            let remaining = t_end - t;
            let out_of_time = remaining <= config.dt * 1e-9 || steps >= config.max_steps;
            if converged || out_of_time {
                let state = KineticState { f, t };
                observe(&state, steps);
                return Ok(SteadyOutcome {
                    state,
                    converged,
                    steps,
                    residual,
                    max_density_drift: max_drift,
                    min_pre_clamp: min_pre,
                    max_clamp_adjust: max_adjust,
                });
            }
            if steps == 0 {
                observe(&KineticState { f: f.clone(), t }, 0);
            }
            let dt = config.dt.min(remaining);
            let report = self.rk4_from_k1(&mut f, t, dt, &mut ws)?;
            steps += 1;
            t = if dt == config.dt {
                f0.t + steps as f64 * config.dt
            } else {
                t_end
            };
            min_pre = min_pre.min(report.min_pre_clamp);
            max_adjust = max_adjust.max(report.clamp_adjust);
            let rho: f64 = f.iter().sum();
            max_drift = max_drift.max((rho - rho0).abs());
            observe(&KineticState { f: f.clone(), t }, steps);
        }
    }

    /// Integrates until `||rhs||_1 < steady_tol`, the horizon `t_final`, or
    /// `max_steps`, whichever comes first.
    pub fn integrate_to_steady(
        &self,
        f0: &KineticState,
        config: &IntegrationConfig,
    ) -> Result<SteadyOutcome> {
        self.run(f0, config, |_, _| {})
    }

    /// Same as [`integrate_to_steady`](Self::integrate_to_steady), recording
    /// every `stride`-th step plus the final state.
    pub fn trajectory(
        &self,
        f0: &KineticState,
        config: &IntegrationConfig,
        stride: usize,
    ) -> Result<(Vec<KineticState>, SteadyOutcome)> {
        let stride = stride.max(1);
        let mut rows: Vec<KineticState> = Vec::new();
        let outcome = self.run(f0, config, |s, step| {
            let duplicate = rows.last().is_some_and(|last| last.t == s.t);
            if step % stride == 0 && !duplicate {
                rows.push(s.clone());
            }
        })?;
        if rows.last().map(|r| r.t) != Some(outcome.state.t) {
            rows.push(outcome.state.clone());
        }
        Ok((rows, outcome))
    }

    /// Integrates over a fixed horizon `t`, ignoring the steady-state test.
    pub fn integrate_for(&self, f0: &KineticState, t: f64, dt: f64) -> Result<KineticState> {
        let config = IntegrationConfig {
            dt,
            t_final: t,
            steady_tol: f64::MIN_POSITIVE,
            max_steps: usize::MAX,
        };
        Ok(self.integrate_to_steady(f0, &config)?.state)
    }

    /// Both sides of the a priori continuity estimate at time `t` for two
    /// initial data of equal density.
    ///
    /// The estimate's constant is the supremum of `eta[rho]` over `[0, 1]`,
    /// which for `eta = eta0 * rho` is `eta0` itself.
    pub fn continuity_gap(
        &self,
        f0: &KineticState,
        g0: &KineticState,
        t: f64,
        config: &IntegrationConfig,
    ) -> Result<ContinuityGap> {
        self.check_len(&f0.f)?;
        self.check_len(&g0.f)?;
        let (rf, rg) = (f0.density(), g0.density());
        if (rf - rg).abs() > DENSITY_SLACK {
            return Err(Error::DensityMismatch {
                left: rf,
                right: rg,
            });
        }
        let f = self.integrate_for(f0, t, config.dt)?;
        let g = self.integrate_for(g0, t, config.dt)?;
        let lhs = l1_distance(&g.f, &f.f) + l1_distance(&self.rhs(&g.f), &self.rhs(&f.f));
        let eta0 = self.params.eta0;
        let bound = (1.0 + 3.0 * eta0) * (3.0 * eta0 * t).exp() * l1_distance(&g0.f, &f0.f);
        Ok(ContinuityGap { lhs, bound })
    }
}

struct Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

/// Clamps round-off negatives to zero, moving the removed mass onto the
/// largest component so the density is unchanged.
fn enforce_positivity(f: &mut [f64], t: f64) -> Result<StepReport> {
    let mut min_pre = f64::INFINITY;
    let mut largest = 0usize;
    for (j, &v) in f.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::IntegrationDiverged {
                t,
                reason: format!("f_{} became {v}", j + 1),
            });
        }
        min_pre = min_pre.min(v);
        if v > f[largest] {
            largest = j;
        }
    }
    if min_pre < -POSITIVITY_FLOOR {
        let index = f.iter().position(|&v| v == min_pre).unwrap_or(0) + 1;
        return Err(Error::PositivityViolation {
            index,
            value: min_pre,
            t,
        });
    }
    let mut clamp_adjust = 0.0f64;
    if min_pre < 0.0 {
        let mut removed = 0.0;
        for v in f.iter_mut() {
            if *v < 0.0 {
                removed += *v;
                clamp_adjust = clamp_adjust.max(-*v);
                *v = 0.0;
            }
        }
        f[largest] += removed;
        clamp_adjust = clamp_adjust.max(-removed);
    }
    Ok(StepReport {
        min_pre_clamp: min_pre,
        clamp_adjust,
    })
}
