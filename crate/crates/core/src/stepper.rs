use crate::grid::TimeGrid;
use crate::operators::{stability_window, DiscreteOperators};
use crate::sex::SexPair;
use crate::solver::BorderedSolver;
use crate::{Error, Result};

/// Time discretization parameters of the one-parameter implicit scheme.
#[derive(Debug, Clone)]
pub struct SchemeConfig {
    theta: f64,
    time: TimeGrid,
}

/// Stability diagnostics for a configured run: the dissipativity constant,
/// the sufficient step bound `tau_bar = 1/(2 theta omega0)` (when defined),
/// and whether the chosen step satisfies it.
///
/// A violated bound does not abort the run — the estimate is sufficient, not
/// necessary, and practically relevant configurations routinely exceed it —
/// but callers should surface `satisfied = false` to the user.
#[derive(Debug, Clone, Copy)]
pub struct StabilityReport {
    pub omega0: f64,
    pub tau_bar: Option<f64>,
    pub tau: f64,
    pub satisfied: bool,
}

impl SchemeConfig {
    pub fn new(theta: f64, time: TimeGrid) -> Result<SchemeConfig> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::invalid_argument(format!(
                "theta must lie in [0, 1], got {theta}"
            )));
        }
        Ok(SchemeConfig { theta, time })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn tau(&self) -> f64 {
        self.time.tau()
    }

    pub fn stability_report(&self, ops: &DiscreteOperators) -> StabilityReport {
        let omega0 = ops.omega0();
        let tau_bar = stability_window(self.theta, omega0).ok();
        StabilityReport {
            omega0,
            tau_bar,
            tau: self.tau(),
            satisfied: tau_bar.map_or(false, |tb| self.tau() <= tb),
        }
    }
}

/// External source term in transformed units, evaluated on the interior
/// lattice (male nodes first, then female).
pub enum Forcing<'a> {
    None,
    /// `f(t)` returns the interior vector at time `t`.
    Time(&'a dyn Fn(f64) -> Vec<f64>),
}

impl Forcing<'_> {
    fn eval(&self, t: f64, n: usize) -> Result<Option<Vec<f64>>> {
        match self {
            Forcing::None => Ok(None),
            Forcing::Time(f) => {
                let v = f(t);
                if v.len() != n {
                    return Err(Error::invalid_argument(format!(
                        "forcing must produce {n} values, got {}",
                        v.len()
                    )));
                }
                Ok(Some(v))
            }
        }
    }
}

/// One discrete trajectory: the interior state, the boundary (birth) values
/// and the interior L2 norm at every time-lattice point.
#[derive(Debug, Clone)]
pub struct Trajectory {
    time: TimeGrid,
    states: Vec<Vec<f64>>,
    boundaries: Vec<SexPair<f64>>,
    norms: Vec<f64>,
}

impl Trajectory {
    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    /// Number of stored time-lattice points (`n_steps + 1`).
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k]
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn boundary(&self, k: usize) -> SexPair<f64> {
        self.boundaries[k]
    }

    pub fn norm(&self, k: usize) -> f64 {
        self.norms[k]
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn max_norm(&self) -> f64 {
        self.norms.iter().fold(0.0, |m, &v| m.max(v))
    }
}

/// A configured stepper: the assembled operators plus the factored stepping
/// matrix, built once and reused across all time steps.
pub struct StepperWorkspace {
    ops: DiscreteOperators,
    config: SchemeConfig,
    solver: BorderedSolver,
}

impl StepperWorkspace {
    pub fn new(ops: DiscreteOperators, config: SchemeConfig) -> Result<StepperWorkspace> {
        let solver = BorderedSolver::factor(&ops, config.theta(), config.tau())?;
        Ok(StepperWorkspace {
            ops,
            config,
            solver,
        })
    }

    pub fn ops(&self) -> &DiscreteOperators {
        &self.ops
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn stability(&self) -> StabilityReport {
        self.config.stability_report(&self.ops)
    }

    /// Advances one step: solves
    /// `(1/tau - theta A) u_next = (1/tau + (1-theta) A) u + theta f_next + (1-theta) f_prev`.
    pub fn step(
        &self,
        u: &[f64],
        f_prev: Option<&[f64]>,
        f_next: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        let tau = self.config.tau();
        let theta = self.config.theta();
        let au = self.ops.apply_generator(u)?;
        let mut rhs: Vec<f64> = u
            .iter()
            .zip(&au)
            .map(|(ui, aui)| ui / tau + (1.0 - theta) * aui)
            .collect();
        if theta != 0.0 {
            if let Some(fk) = f_next {
                for (r, f) in rhs.iter_mut().zip(fk) {
                    *r += theta * f;
                }
            }
        }
        if theta != 1.0 {
            if let Some(fk) = f_prev {
                for (r, f) in rhs.iter_mut().zip(fk) {
                    *r += (1.0 - theta) * f;
                }
            }
        }
        self.solver.solve(&rhs)
    }

    /// Runs the full time loop from the transformed interior state `u0`,
    /// recording every lattice point.
    pub fn run(&self, u0: &[f64], forcing: Forcing<'_>) -> Result<Trajectory> {
        let n = self.ops.n();
        if u0.len() != n {
            return Err(Error::invalid_argument(format!(
                "initial state must have length {n}, got {}",
                u0.len()
            )));
        }
        let time = self.config.time().clone();
        let steps = time.n_steps();
        let mut states = Vec::with_capacity(steps + 1);
        let mut boundaries = Vec::with_capacity(steps + 1);
        let mut norms = Vec::with_capacity(steps + 1);

        let push = |states: &mut Vec<Vec<f64>>,
                        boundaries: &mut Vec<SexPair<f64>>,
                        norms: &mut Vec<f64>,
                        u: Vec<f64>|
         -> Result<()> {
            boundaries.push(self.ops.apply_birth(&u)?);
            norms.push(self.ops.interior_norm(&u)?);
            states.push(u);
            Ok(())
        };

        push(&mut states, &mut boundaries, &mut norms, u0.to_vec())?;
        let mut f_prev = forcing.eval(time.time(0), n)?;
        for k in 1..=steps {
            let f_next = forcing.eval(time.time(k), n)?;
            let u_next = self.step(
                states.last().expect("non-empty"),
                f_prev.as_deref(),
                f_next.as_deref(),
            )?;
            push(&mut states, &mut boundaries, &mut norms, u_next)?;
            f_prev = f_next;
        }
        Ok(Trajectory {
            time,
            states,
            boundaries,
            norms,
        })
    }
}
