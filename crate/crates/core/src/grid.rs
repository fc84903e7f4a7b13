use crate::{Error, Result};

/// Equidistant age lattice on `[0, a_dag]` with `n` cells of width `h`.
///
/// Node `i` sits at age `i * h`; node 0 is the boundary (age zero), nodes
/// `1..=n` form the interior on which the transported state lives.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeGrid {
    a_dag: f64,
    n: usize,
    h: f64,
}

impl AgeGrid {
    /// Builds the equidistant lattice with `h = a_dag / n`.
    pub fn new(a_dag: f64, n: usize) -> Result<AgeGrid> {
        if !(a_dag > 0.0) || !a_dag.is_finite() {
            return Err(Error::invalid_argument(format!(
                "maximum age must be positive and finite, got {a_dag}"
            )));
        }
        if n < 2 {
            return Err(Error::invalid_argument(format!(
                "age grid needs at least 2 cells, got {n}"
            )));
        }
        Ok(AgeGrid {
            a_dag,
            n,
            h: a_dag / n as f64,
        })
    }

    pub fn a_dag(&self) -> f64 {
        self.a_dag
    }

    /// Number of cells; the lattice has `n + 1` nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Age of node `i`, `0 <= i <= n`.
    pub fn node(&self, i: usize) -> f64 {
        debug_assert!(i <= self.n);
        i as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(|i| self.node(i))
    }
}

/// Equidistant time lattice on `[0, horizon]` with `n_steps` steps of size `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
    tau: f64,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<TimeGrid> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::invalid_argument(format!(
                "time horizon must be positive and finite, got {horizon}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::invalid_argument("need at least one time step"));
        }
        Ok(TimeGrid {
            horizon,
            n_steps,
            tau: horizon / n_steps as f64,
        })
    }

    /// Grid with a prescribed step; `horizon / tau` must be close to an integer.
    pub fn with_step(horizon: f64, tau: f64) -> Result<TimeGrid> {
        if !(tau > 0.0) {
            return Err(Error::invalid_argument(format!(
                "time step must be positive, got {tau}"
            )));
        }
        let steps = horizon / tau;
        let rounded = steps.round();
        if (steps - rounded).abs() > 1e-9 * steps.max(1.0) || rounded < 1.0 {
            return Err(Error::invalid_argument(format!(
                "time step {tau} does not divide horizon {horizon}"
            )));
        }
        TimeGrid::new(horizon, rounded as usize)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Time of lattice point `k`, `0 <= k <= n_steps`.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.tau
    }
}
