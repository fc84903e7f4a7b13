use crate::grid::AgeGrid;
use crate::{Error, Result};

/// Index range for discrete inner products and norms.
///
/// `Full` runs over all nodes `0..=n`, `Interior` over `1..=n` (the nodes the
/// transported state lives on; node 0 is the birth boundary).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Range {
    Full,
    Interior,
}

/// A real-valued function sampled on an age lattice (one value per node).
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFunction {
    grid: AgeGrid,
    values: Vec<f64>,
}

impl LatticeFunction {
    pub fn new(grid: AgeGrid, values: Vec<f64>) -> Result<LatticeFunction> {
        if values.len() != grid.n() + 1 {
            return Err(Error::invalid_argument(format!(
                "lattice function needs {} values, got {}",
                grid.n() + 1,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid_argument(
                "lattice function values must be finite",
            ));
        }
        Ok(LatticeFunction { grid, values })
    }

    /// Samples `f` at every node of `grid`.
    pub fn sample(grid: AgeGrid, f: impl FnMut(f64) -> f64) -> Result<LatticeFunction> {
        let values = grid.nodes().map(f).collect();
        LatticeFunction::new(grid, values)
    }

    pub fn constant(grid: AgeGrid, c: f64) -> Result<LatticeFunction> {
        let n = grid.n();
        LatticeFunction::new(grid, vec![c; n + 1])
    }

    pub fn grid(&self) -> &AgeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest absolute value over all nodes (lattice sup norm).
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Discrete L2 inner product `h * sum u_k v_k` over the requested node range.
pub fn discrete_l2_inner(u: &LatticeFunction, v: &LatticeFunction, range: Range) -> Result<f64> {
    if u.grid() != v.grid() {
        return Err(Error::invalid_argument(
            "inner product requires matching grids",
        ));
    }
    let start = match range {
        Range::Full => 0,
        Range::Interior => 1,
    };
    let h = u.grid().h();
    let sum: f64 = u.values[start..]
        .iter()
        .zip(&v.values[start..])
        .map(|(a, b)| a * b)
        .sum();
    Ok(h * sum)
}

/// Backward difference `(u_k - u_{k-1}) / h` on the interior nodes `k = 1..=n`.
pub fn backward_diff(u: &LatticeFunction) -> Vec<f64> {
    let h = u.grid().h();
    u.values.windows(2).map(|w| (w[1] - w[0]) / h).collect()
}

/// Forward difference `(u_{k+1} - u_k) / h` on the nodes `k = 0..n`.
pub fn forward_diff(u: &LatticeFunction) -> Vec<f64> {
    let h = u.grid().h();
    u.values.windows(2).map(|w| (w[1] - w[0]) / h).collect()
}
