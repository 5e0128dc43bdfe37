//! Fundamental (flux-density) and speed-density diagrams assembled from
//! equilibria, and detection of the critical density.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{IntegrationConfig, KineticModel, KineticState};
use crate::equilibrium::{equilibrium_recursive, Phase};
use crate::error::{Error, Result};
use crate::lattice::ModelParams;

/// Speed deficit below which a point counts as free flow.
pub const FREE_SPEED_TOL: f64 = 1e-9;

/// Free-flow tolerance for integrated diagrams, whose points are only settled
/// to the steady-state residual.
pub const INTEGRATED_FREE_SPEED_TOL: f64 = 1e-5;

pub fn free_speed_tol(method: Method) -> f64 {
    match method {
        Method::Recursive => FREE_SPEED_TOL,
        Method::Integrate => INTEGRATED_FREE_SPEED_TOL,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Recursive,
    Integrate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Dimensionless,
    Physical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagramPoint {
    pub rho: f64,
    pub q: f64,
    pub u: f64,
    pub phase: Phase,
    /// False when long-time integration hit its horizon before settling.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagram {
    pub n: usize,
    pub method: Method,
    pub units: Units,
    pub points: Vec<DiagramPoint>,
    pub sigma: Option<f64>,
    pub q_max: f64,
}

impl Diagram {
    pub fn unconverged(&self) -> impl Iterator<Item = &DiagramPoint> {
        self.points.iter().filter(|p| !p.converged)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaDetection {
    pub sigma: f64,
    /// The free phase covers every sampled density.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub method: Method,
    pub eta0: f64,
    pub integration: IntegrationConfig,
    /// Worker threads; 1 runs on the calling thread.
    pub jobs: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            method: Method::Recursive,
            eta0: 1.0,
            integration: IntegrationConfig::default(),
            jobs: 1,
        }
    }
}

/// `intervals + 1` uniform points on `[0, 1]`, with `1/2` inserted when the
/// spacing misses it.
pub fn default_grid(intervals: usize) -> Vec<f64> {
    let intervals = intervals.max(1);
    let mut grid: Vec<f64> = (0..=intervals)
        .map(|i| i as f64 / intervals as f64)
        .collect();
    if !grid.contains(&0.5) {
        grid.push(0.5);
        grid.sort_by(f64::total_cmp);
    }
    grid
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty density grid".into()));
    }
    if let Some(bad) = grid
        .iter()
        .find(|r| !(r.is_finite() && (0.0..=1.0).contains(*r)))
    {
        return Err(Error::DensityOutOfRange(*bad));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "density grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn point(model: &KineticModel, rho: f64, opts: &SweepOptions) -> Result<DiagramPoint> {
    let (obs, converged) = match opts.method {
        Method::Recursive => {
            let eq = equilibrium_recursive(model.n(), rho)?;
            (eq.observables(), true)
        }
        Method::Integrate => {
            let f0 = KineticState::uniform(model.n(), rho)?;
            let out = model.integrate_to_steady(&f0, &opts.integration)?;
            (model.observables(&out.state), out.converged)
        }
    };
    let phase = if obs.u >= 1.0 - free_speed_tol(opts.method) {
        Phase::Free
    } else {
        Phase::Congested
    };
    Ok(DiagramPoint {
        rho,
        q: obs.q,
        u: obs.u,
        phase,
        converged,
    })
}

/// One diagram point per grid density, in grid order.
pub fn sweep(n: usize, grid: &[f64], opts: &SweepOptions) -> Result<Diagram> {
    validate_grid(grid)?;
    let params = ModelParams::new(n)?.with_eta0(opts.eta0)?;
    let model = KineticModel::new(params)?;

    let points = if opts.jobs <= 1 {
        grid.iter()
            .map(|&rho| point(&model, rho, opts))
            .collect::<Result<Vec<_>>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| {
            grid.par_iter()
                .map(|&rho| point(&model, rho, opts))
                .collect::<Result<Vec<_>>>()
        })?
    };

    let q_max = points.iter().map(|p| p.q).fold(0.0, f64::max);
    let mut diagram = Diagram {
        n,
        method: opts.method,
        units: Units::Dimensionless,
        points,
        sigma: None,
        q_max,
    };
    diagram.sigma = detect_sigma(&diagram).ok().map(|d| d.sigma);
    Ok(diagram)
}

/// End of the free phase: the largest density of the leading run of points
/// whose mean speed is still maximal. Points flagged as unconverged are
/// skipped.
pub fn detect_sigma(diagram: &Diagram) -> Result<SigmaDetection> {
    let pts: Vec<&DiagramPoint> = diagram.points.iter().filter(|p| p.converged).collect();
    let tol = free_speed_tol(diagram.method);
    if pts.len() < 3 {
        return Err(Error::MalformedDiagram(format!(
            "need at least 3 points, got {}",
            pts.len()
        )));
    }
    let u_top = match diagram.units {
        Units::Dimensionless => 1.0,
        Units::Physical => {
            return Err(Error::MalformedDiagram(
                "detect the critical density before rescaling".into(),
            ))
        }
    };
    let first = pts
        .iter()
        .find(|p| p.rho > 0.0)
        .ok_or_else(|| Error::MalformedDiagram("no positive density sampled".into()))?;
    if first.u < u_top - tol {
        return Err(Error::MalformedDiagram(format!(
            "no free phase: u = {} at rho = {}",
            first.u, first.rho
        )));
    }
    let run = pts.iter().take_while(|p| p.u >= u_top - tol).count();
    Ok(SigmaDetection {
        sigma: pts[run - 1].rho,
        degenerate: run == pts.len(),
    })
}

/// Densities in vehicles/km, speeds in km/h, fluxes in vehicles/h.
pub fn rescale_dimensional(diagram: &Diagram, params: &ModelParams) -> Diagram {
    if diagram.units == Units::Physical {
        return diagram.clone();
    }
    let (rm, vm) = (params.rho_max, params.v_max);
    Diagram {
        n: diagram.n,
        method: diagram.method,
        units: Units::Physical,
        points: diagram
            .points
            .iter()
            .map(|p| DiagramPoint {
                rho: p.rho * rm,
                q: p.q * rm * vm,
                u: p.u * vm,
                ..*p
            })
            .collect(),
        sigma: diagram.sigma.map(|s| s * rm),
        q_max: diagram.q_max * rm * vm,
    }
}
