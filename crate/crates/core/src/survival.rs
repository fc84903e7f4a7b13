use crate::grid::AgeGrid;
use crate::lattice::LatticeFunction;
use crate::{Error, Result};

/// Lower clamp for survival probabilities.
///
/// The change of variables `u = p / pi` would blow up where `pi` reaches
/// zero near the maximum age; the floor keeps the transform finite while
/// leaving demographically relevant ages untouched.
pub const PI_FLOOR: f64 = 1e-12;

/// Age-specific mortality modulus sampled on the lattice (rate per year).
#[derive(Debug, Clone, PartialEq)]
pub struct MortalityCurve {
    mu: LatticeFunction,
}

impl MortalityCurve {
    pub fn new(mu: LatticeFunction) -> Result<MortalityCurve> {
        if mu.values().iter().any(|&v| v < 0.0) {
            return Err(Error::invalid_argument(
                "mortality modulus must be nonnegative",
            ));
        }
        Ok(MortalityCurve { mu })
    }

    pub fn grid(&self) -> &AgeGrid {
        self.mu.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.mu.values()
    }
}

/// Survival probability `pi(a)` per lattice node, in `(0, 1]`, non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    grid: AgeGrid,
    pi: Vec<f64>,
}

impl SurvivalCurve {
    fn from_raw(grid: AgeGrid, pi: Vec<f64>) -> Result<SurvivalCurve> {
        debug_assert_eq!(pi.len(), grid.n() + 1);
        if pi[0] != 1.0 {
            return Err(Error::invalid_argument("survival at age 0 must be 1"));
        }
        if pi.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::invalid_argument("survival must be non-increasing"));
        }
        Ok(SurvivalCurve { grid, pi })
    }

    pub fn grid(&self) -> &AgeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.pi
    }

    /// Survival from cumulative trapezoid integration of a mortality curve:
    /// `pi_i = exp(-Q_i)` with `Q_i` the trapezoid integral of `mu` up to node `i`.
    pub fn from_mortality(mu: &MortalityCurve) -> Result<SurvivalCurve> {
        let grid = mu.grid().clone();
        let h = grid.h();
        let m = mu.values();
        let mut pi = Vec::with_capacity(grid.n() + 1);
        let mut q = 0.0;
        pi.push(1.0);
        for i in 1..=grid.n() {
            q += 0.5 * h * (m[i - 1] + m[i]);
            pi.push(f64::max((-q).exp(), PI_FLOOR));
        }
        SurvivalCurve::from_raw(grid, pi)
    }

    /// Survival from single-year death probabilities: `pi_j = prod (1 - qx_i)`.
    ///
    /// The result lives on the single-year grid with `a_dag = qx.len()` years.
    pub fn from_life_table(qx: &[f64]) -> Result<SurvivalCurve> {
        if qx.len() < 2 {
            return Err(Error::invalid_argument(
                "life table needs at least two ages",
            ));
        }
        if qx.iter().any(|&q| !(0.0..1.0).contains(&q)) {
            return Err(Error::invalid_argument(
                "death probabilities must lie in [0, 1)",
            ));
        }
        let grid = AgeGrid::new(qx.len() as f64, qx.len())?;
        let mut pi = Vec::with_capacity(qx.len() + 1);
        let mut p = 1.0;
        pi.push(1.0);
        for &q in qx {
            p *= 1.0 - q;
            pi.push(f64::max(p, PI_FLOOR));
        }
        SurvivalCurve::from_raw(grid, pi)
    }

    /// Linear interpolation of annual survival values onto a finer grid.
    ///
    /// `pi_annual[j]` is the survival at exact age `j`; ages beyond the table
    /// keep decaying with the last annual ratio.
    pub fn from_annual(pi_annual: &[f64], grid: AgeGrid) -> Result<SurvivalCurve> {
        if pi_annual.len() < 2 || pi_annual[0] != 1.0 {
            return Err(Error::invalid_argument(
                "annual survival must start at 1 and have at least two entries",
            ));
        }
        let last = pi_annual.len() - 1;
        let last_ratio = if pi_annual[last - 1] > 0.0 {
            pi_annual[last] / pi_annual[last - 1]
        } else {
            1.0
        };
        let mut pi = Vec::with_capacity(grid.n() + 1);
        for a in grid.nodes() {
            let v = if a <= last as f64 {
                let j = (a.floor() as usize).min(last - 1);
                let frac = a - j as f64;
                pi_annual[j] + frac * (pi_annual[j + 1] - pi_annual[j])
            } else {
                pi_annual[last] * last_ratio.powf(a - last as f64)
            };
            pi.push(f64::max(v, PI_FLOOR));
        }
        pi[0] = 1.0;
        SurvivalCurve::from_raw(grid, pi)
    }

    pub fn as_lattice(&self) -> LatticeFunction {
        LatticeFunction::new(self.grid.clone(), self.pi.clone()).expect("survival values finite")
    }
}
