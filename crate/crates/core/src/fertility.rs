use crate::grid::AgeGrid;
use crate::lattice::LatticeFunction;
use crate::sex::{Sex, SexPair};
use crate::survival::SurvivalCurve;
use crate::{Error, Result};

/// Age- and sex-specific fertility moduli `beta[child][parent]` plus the sex
/// ratio at birth.
///
/// Each modulus is sampled on the parent sex's age grid and counts children
/// of the given sex per parent-person-year.
#[derive(Debug, Clone, PartialEq)]
pub struct FertilityModuli {
    beta: SexPair<SexPair<LatticeFunction>>,
    sex_ratio: f64,
}

impl FertilityModuli {
    pub fn new(beta: SexPair<SexPair<LatticeFunction>>, sex_ratio: f64) -> Result<FertilityModuli> {
        if !(sex_ratio > 0.0) || !sex_ratio.is_finite() {
            return Err(Error::invalid_argument(format!(
                "sex ratio at birth must be positive, got {sex_ratio}"
            )));
        }
        for (_, per_child) in beta.iter() {
            for (_, b) in per_child.iter() {
                if b.values().iter().any(|&v| v < 0.0) {
                    return Err(Error::invalid_argument(
                        "fertility moduli must be nonnegative",
                    ));
                }
            }
        }
        Ok(FertilityModuli { beta, sex_ratio })
    }

    /// Builds the moduli from a single mother-age birth-rate schedule.
    ///
    /// Male influence is taken as purely nonlinear and dropped from the
    /// linearized model: `beta[m][m] = beta[f][m] = 0`, while the mother-side
    /// moduli split the schedule by the sex ratio `s`,
    /// `beta[m][f] = s/(1+s) * beta` and `beta[f][f] = 1/(1+s) * beta`.
    pub fn from_mother_schedule(
        beta_by_mother_age: &LatticeFunction,
        male_grid: AgeGrid,
        sex_ratio: f64,
    ) -> Result<FertilityModuli> {
        let s = sex_ratio;
        let scale = |c: f64| -> Result<LatticeFunction> {
            let values = beta_by_mother_age.values().iter().map(|&v| c * v).collect();
            LatticeFunction::new(beta_by_mother_age.grid().clone(), values)
        };
        let zero_m = LatticeFunction::constant(male_grid, 0.0)?;
        let beta = SexPair::new(
            // children: male
            SexPair::new(zero_m.clone(), scale(s / (1.0 + s))?),
            // children: female
            SexPair::new(zero_m, scale(1.0 / (1.0 + s))?),
        );
        FertilityModuli::new(beta, sex_ratio)
    }

    /// `beta[child][parent]`, sampled on the parent grid.
    pub fn get(&self, child: Sex, parent: Sex) -> &LatticeFunction {
        self.beta.get(child).get(parent)
    }

    pub fn sex_ratio(&self) -> f64 {
        self.sex_ratio
    }
}

/// Maternity functions `m[child][parent] = pi_parent * beta[child][parent]`,
/// the kernels of the transformed birth law.
#[derive(Debug, Clone, PartialEq)]
pub struct MaternityModuli {
    m: SexPair<SexPair<LatticeFunction>>,
}

impl MaternityModuli {
    pub fn new(m: SexPair<SexPair<LatticeFunction>>) -> Result<MaternityModuli> {
        for (_, per_child) in m.iter() {
            for (_, f) in per_child.iter() {
                if f.values().iter().any(|&v| v < 0.0) {
                    return Err(Error::invalid_argument(
                        "maternity moduli must be nonnegative",
                    ));
                }
            }
        }
        Ok(MaternityModuli { m })
    }

    /// Weights every fertility modulus by the survival of the parent sex.
    pub fn from_fertility(
        beta: &FertilityModuli,
        pi: &SexPair<SurvivalCurve>,
    ) -> Result<MaternityModuli> {
        let build = |child: Sex| -> Result<SexPair<LatticeFunction>> {
            SexPair::new((), ()).try_map(|parent, _| {
                let b = beta.get(child, parent);
                let surv = pi.get(parent);
                if b.grid() != surv.grid() {
                    return Err(Error::invalid_argument(
                        "fertility and survival grids must match per parent sex",
                    ));
                }
                let values = b
                    .values()
                    .iter()
                    .zip(surv.values())
                    .map(|(&bv, &pv)| pv * bv)
                    .collect();
                LatticeFunction::new(b.grid().clone(), values)
            })
        };
        MaternityModuli::new(SexPair::new(build(Sex::Male)?, build(Sex::Female)?))
    }

    /// All four moduli zero on the given grids.
    pub fn zero(grids: &SexPair<AgeGrid>) -> MaternityModuli {
        let per_child = grids
            .map(|g| LatticeFunction::constant(g.clone(), 0.0).expect("zero lattice"));
        MaternityModuli {
            m: SexPair::splat(per_child),
        }
    }

    /// `m[child][parent]`, sampled on the parent grid.
    pub fn get(&self, child: Sex, parent: Sex) -> &LatticeFunction {
        self.m.get(child).get(parent)
    }

    /// Sup norm over the four moduli per (child, parent) pair.
    pub fn sup_norm(&self, child: Sex, parent: Sex) -> f64 {
        self.get(child, parent).sup_norm()
    }

    /// Global bound `M = max over pairs of the lattice sup norm`.
    pub fn global_sup(&self) -> f64 {
        let mut m = 0.0f64;
        for child in Sex::BOTH {
            for parent in Sex::BOTH {
                m = m.max(self.sup_norm(child, parent));
            }
        }
        m
    }
}
