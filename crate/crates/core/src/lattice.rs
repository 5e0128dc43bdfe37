//! Speed lattice, interaction rate and the density-parameterized table of games.
//!
//! All public indices are 1-based: `GameTable::get(h, k, j)` is the probability
//! that a candidate vehicle in class `h`, interacting with a field vehicle in
//! class `k`, ends up in class `j`. Storage is 0-based internally.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_RHO_MAX: f64 = 200.0;
pub const DEFAULT_V_MAX: f64 = 100.0;
pub const DEFAULT_ETA0: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Number of speed classes.
    pub n: usize,
    /// Maximum density in vehicles/km. Only used to rescale output.
    pub rho_max: f64,
    /// Maximum speed in km/h. Only used to rescale output.
    pub v_max: f64,
    /// Interaction-rate constant, `eta = eta0 * rho`.
    pub eta0: f64,
}

impl ModelParams {
    pub fn new(n: usize) -> Result<Self> {
        let params = ModelParams {
            n,
            rho_max: DEFAULT_RHO_MAX,
            v_max: DEFAULT_V_MAX,
            eta0: DEFAULT_ETA0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_eta0(mut self, eta0: f64) -> Result<Self> {
        self.eta0 = eta0;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 speed classes, got {}",
                self.n
            )));
        }
        for (name, v) in [
            ("eta0", self.eta0),
            ("rho_max", self.rho_max),
            ("v_max", self.v_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn check_density(rho: f64) -> Result<()> {
    if rho.is_finite() && (0.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::DensityOutOfRange(rho))
    }
}

/// Uniformly spaced dimensionless speeds `v_j = (j - 1) / (n - 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedLattice {
    speeds: Vec<f64>,
}

impl SpeedLattice {
    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds.is_empty()
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    /// Speed of class `j` (1-based).
    pub fn speed(&self, j: usize) -> f64 {
        self.speeds[j - 1]
    }
}

pub fn build_lattice(n: usize) -> Result<SpeedLattice> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 speed classes, got {n}"
        )));
    }
    let last = (n - 1) as f64;
    let speeds = (0..n).map(|j| j as f64 / last).collect();
    Ok(SpeedLattice { speeds })
}

pub fn interaction_rate(rho: f64, params: &ModelParams) -> Result<f64> {
    check_density(rho)?;
    Ok(params.eta0 * rho)
}

/// One nonzero entry of the table for a fixed `(h, k)` pair.
///
/// The probability is affine in the density: `prob(rho) = offset + slope * rho`,
/// with `(offset, slope)` one of `(0, 1)`, `(1, -1)`, `(1, 0)` or `(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    /// Target class, 0-based.
    pub to: usize,
    pub offset: f64,
    pub slope: f64,
}

impl Transition {
    #[inline]
    pub fn prob(&self, rho: f64) -> f64 {
        self.offset + self.slope * rho
    }
}

/// The table of games in its two-entries-per-pair form, independent of `rho`.
///
/// `pair(h, k)` (0-based) yields the two possible outcomes of the encounter.
/// The pair `(n, n)` keeps its speed with probability one; its second slot
/// carries a zero-probability placeholder.
#[derive(Debug, Clone)]
pub struct SparseTable {
    n: usize,
    pairs: Vec<[Transition; 2]>,
}

impl SparseTable {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 speed classes, got {n}"
            )));
        }
        let congested = |to| Transition {
            to,
            offset: 0.0,
            slope: 1.0,
        };
        let free = |to| Transition {
            to,
            offset: 1.0,
            slope: -1.0,
        };
        let mut pairs = Vec::with_capacity(n * n);
        for h in 0..n {
            for k in 0..n {
                let rule = if h <= k {
                    if h == n - 1 {
                        // k == h == n - 1: nowhere faster to go.
                        [
                            Transition {
                                to: h,
                                offset: 1.0,
                                slope: 0.0,
                            },
                            Transition {
                                to: h,
                                offset: 0.0,
                                slope: 0.0,
                            },
                        ]
                    } else {
                        // keep speed, or accelerate to the next class
                        [congested(h), free(h + 1)]
                    }
                } else {
                    // queue behind the field vehicle, or overtake
                    [congested(k), free(h)]
                };
                pairs.push(rule);
            }
        }
        Ok(SparseTable { n, pairs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn pair(&self, h: usize, k: usize) -> &[Transition; 2] {
        &self.pairs[h * self.n + k]
    }
}

/// Dense `n x n x n` table of transition probabilities at a fixed density.
#[derive(Debug, Clone, PartialEq)]
pub struct GameTable {
    n: usize,
    rho: f64,
    entries: Vec<f64>,
}

impl GameTable {
    /// Wraps raw entries laid out as `[(h * n + k) * n + j]` (0-based) without
    /// checking them. Used to exercise the stochasticity checks.
    pub fn from_raw(n: usize, rho: f64, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n * n {
            return Err(Error::InvalidParameter(format!(
                "expected {} entries, got {}",
                n * n * n,
                entries.len()
            )));
        }
        Ok(GameTable { n, rho, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    #[inline]
    fn idx(&self, h: usize, k: usize, j: usize) -> usize {
        ((h - 1) * self.n + (k - 1)) * self.n + (j - 1)
    }

    /// `P(v_h -> v_j | v_k)`, 1-based.
    pub fn get(&self, h: usize, k: usize, j: usize) -> f64 {
        self.entries[self.idx(h, k, j)]
    }

    pub fn row(&self, h: usize, k: usize) -> &[f64] {
        let start = self.idx(h, k, 1);
        &self.entries[start..start + self.n]
    }

    pub fn row_sum(&self, h: usize, k: usize) -> f64 {
        self.row(h, k).iter().sum()
    }

    /// Checks bounds and row sums of every `(h, k)` pair, returning the first
    /// offending pair (1-based) with its row sum.
    pub fn check_stochastic(&self, tol: f64) -> std::result::Result<(), (usize, usize, f64)> {
        for h in 1..=self.n {
            for k in 1..=self.n {
                let row = self.row(h, k);
                let sum: f64 = row.iter().sum();
                let in_bounds = row.iter().all(|&a| (0.0..=1.0).contains(&a));
                if !in_bounds || (sum - 1.0).abs() > tol {
                    return Err((h, k, sum));
                }
            }
        }
        Ok(())
    }
}

pub fn build_game_table(n: usize, rho: f64) -> Result<GameTable> {
    check_density(rho)?;
    let sparse = SparseTable::new(n)?;
    let mut entries = vec![0.0; n * n * n];
    for h in 0..n {
        for k in 0..n {
            for t in sparse.pair(h, k) {
                entries[(h * n + k) * n + t.to] += t.prob(rho);
            }
        }
    }
    Ok(GameTable { n, rho, entries })
}
