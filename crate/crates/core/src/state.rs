use crate::grid::AgeGrid;
use crate::sex::{Sex, SexPair};
use crate::survival::SurvivalCurve;
use crate::{Error, Result};

/// Units a population state is expressed in.
///
/// `Natural` holds the population density `p`; `Transformed` holds
/// `u = p / pi` after dividing out the survival probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Units {
    Natural,
    Transformed,
}

/// The population at one moment of time: per-sex interior values on nodes
/// `1..=n` and the scalar boundary value at age zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    time: f64,
    grids: SexPair<AgeGrid>,
    interior: SexPair<Vec<f64>>,
    boundary: SexPair<f64>,
    units: Units,
}

impl PopulationState {
    pub fn new(
        time: f64,
        grids: SexPair<AgeGrid>,
        interior: SexPair<Vec<f64>>,
        boundary: SexPair<f64>,
        units: Units,
    ) -> Result<PopulationState> {
        for sex in Sex::BOTH {
            let vals = interior.get(sex);
            if vals.len() != grids.get(sex).n() {
                return Err(Error::invalid_argument(format!(
                    "interior for {sex} needs {} values, got {}",
                    grids.get(sex).n(),
                    vals.len()
                )));
            }
            if vals.iter().any(|v| !v.is_finite()) || !boundary.get(sex).is_finite() {
                return Err(Error::invalid_argument(
                    "population state entries must be finite",
                ));
            }
        }
        Ok(PopulationState {
            time,
            grids,
            interior,
            boundary,
            units,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn grids(&self) -> &SexPair<AgeGrid> {
        &self.grids
    }

    pub fn interior(&self, sex: Sex) -> &[f64] {
        self.interior.get(sex)
    }

    pub fn boundary(&self) -> &SexPair<f64> {
        &self.boundary
    }

    pub fn units(&self) -> Units {
        self.units
    }

    /// Full lattice values for one sex: boundary value followed by the interior.
    pub fn full_values(&self, sex: Sex) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grids.get(sex).n() + 1);
        out.push(*self.boundary.get(sex));
        out.extend_from_slice(self.interior.get(sex));
        out
    }

    /// Concatenated interior vector, male nodes first then female.
    pub fn to_interior_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.interior.male.len() + self.interior.female.len());
        v.extend_from_slice(&self.interior.male);
        v.extend_from_slice(&self.interior.female);
        v
    }

    fn convert(
        &self,
        pi: &SexPair<SurvivalCurve>,
        expect: Units,
        produce: Units,
        op: impl Fn(f64, f64) -> f64,
    ) -> Result<PopulationState> {
        if self.units != expect {
            return Err(Error::InvalidState(format!(
                "state is already in {:?} units",
                self.units
            )));
        }
        let mut interior = self.interior.clone();
        let mut boundary = self.boundary;
        for sex in Sex::BOTH {
            let surv = pi.get(sex);
            if surv.grid() != self.grids.get(sex) {
                return Err(Error::invalid_argument(
                    "survival curve grid does not match the state grid",
                ));
            }
            let pi_vals = surv.values();
            *boundary.get_mut(sex) = op(*self.boundary.get(sex), pi_vals[0]);
            for (i, v) in interior.get_mut(sex).iter_mut().enumerate() {
                *v = op(*v, pi_vals[i + 1]);
            }
        }
        PopulationState::new(self.time, self.grids.clone(), interior, boundary, produce)
    }

    /// Natural -> transformed units: `u = p / pi` per node.
    pub fn to_transformed(&self, pi: &SexPair<SurvivalCurve>) -> Result<PopulationState> {
        self.convert(pi, Units::Natural, Units::Transformed, |p, s| p / s)
    }

    /// Transformed -> natural units: `p = pi * u` per node.
    pub fn from_transformed(&self, pi: &SexPair<SurvivalCurve>) -> Result<PopulationState> {
        self.convert(pi, Units::Transformed, Units::Natural, |u, s| u * s)
    }
}
