use crate::fertility::MaternityModuli;
use crate::grid::AgeGrid;
use crate::sex::{Sex, SexPair};
use crate::state::{PopulationState, Units};
use crate::stepper::Trajectory;
use crate::{Error, Result};

fn require_transformed(state: &PopulationState) -> Result<()> {
    if state.units() != Units::Transformed {
        return Err(Error::InvalidState(
            "energy functionals are defined on transformed states".into(),
        ));
    }
    Ok(())
}

/// Energy `E = 1/2 (||u_m||^2 + ||u_f||^2)` of a transformed state
/// (interior discrete L2 norms).
pub fn energy(state: &PopulationState) -> Result<f64> {
    require_transformed(state)?;
    let mut e = 0.0;
    for sex in Sex::BOTH {
        let h = state.grids().get(sex).h();
        let s: f64 = state.interior(sex).iter().map(|u| u * u).sum();
        e += h * s;
    }
    Ok(0.5 * e)
}

/// Lyapunov functional `F = sum_sex integral (2 a_dag - a) u^2 da`, evaluated
/// as the interior Riemann sum.
pub fn lyapunov(state: &PopulationState) -> Result<f64> {
    require_transformed(state)?;
    let mut f = 0.0;
    for sex in Sex::BOTH {
        let g = state.grids().get(sex);
        let h = g.h();
        let two_adag = 2.0 * g.a_dag();
        let s: f64 = state
            .interior(sex)
            .iter()
            .enumerate()
            .map(|(i, u)| (two_adag - g.node(i + 1)) * u * u)
            .sum();
        f += h * s;
    }
    Ok(f)
}

/// Upper constant of the energy–Lyapunov sandwich.
///
/// The weight `2 a_dag - a` lies in `[a_dag, 2 a_dag]`, so
/// `||u||^2 <= F <= 2 max{a_dag} ||u||^2` whenever `min a_dag >= 1`;
/// in terms of `E = ||u||^2 / 2` the upper bound reads `F <= 4 max{a_dag} E`.
pub fn sandwich_upper(grids: &SexPair<AgeGrid>, e: f64) -> f64 {
    4.0 * grids.male.a_dag().max(grids.female.a_dag()) * e
}

/// Exponential-decay diagnostics of the maternity-coupled system.
#[derive(Debug, Clone, Copy)]
pub struct DecayReport {
    /// Per child sex: `sum_parent a_dag_child * a_dag_parent * ||m||_inf^2`.
    pub condition_value: SexPair<f64>,
    /// Both condition values strictly below 1/4.
    pub condition_met: bool,
    /// Decay rate `alpha = min{1 - 4 condition} / (2 max a_dag)`; zero when
    /// the condition fails.
    pub alpha: f64,
    /// Prefactor of the decay bound. The proof chain
    /// `E <= F <= e^{-2 alpha t} F(0) <= C e^{-2 alpha t} E(0)` forces
    /// `C = 2 max{a_dag}` for equal maximum ages.
    pub c: f64,
    /// Dissipativity shift `beta0 = sum over pairs of 2 a_dag_parent ||m||_inf^2`.
    pub beta0: f64,
}

pub fn decay_report(maternity: &MaternityModuli, grids: &SexPair<AgeGrid>) -> DecayReport {
    let a_dag = grids.map(|g| g.a_dag());
    let condition_for = |child: Sex| {
        let mut s = 0.0;
        for parent in Sex::BOTH {
            let m = maternity.sup_norm(child, parent);
            s += a_dag.get(child) * a_dag.get(parent) * m * m;
        }
        s
    };
    let condition_value = SexPair::new(condition_for(Sex::Male), condition_for(Sex::Female));
    let condition_met = condition_value.male < 0.25 && condition_value.female < 0.25;
    let max_adag = a_dag.male.max(a_dag.female);
    let alpha = if condition_met {
        let min_gap = (1.0 - 4.0 * condition_value.male).min(1.0 - 4.0 * condition_value.female);
        min_gap / (2.0 * max_adag)
    } else {
        0.0
    };
    let mut beta0 = 0.0;
    for child in Sex::BOTH {
        for parent in Sex::BOTH {
            let m = maternity.sup_norm(child, parent);
            beta0 += 2.0 * a_dag.get(parent) * m * m;
        }
    }
    DecayReport {
        condition_value,
        condition_met,
        alpha,
        c: 2.0 * max_adag,
        beta0,
    }
}

/// Outcome of checking `E(t_k) <= C e^{-2 alpha t_k} E(0)` along a trajectory.
#[derive(Debug, Clone, Copy)]
pub struct DecayCheck {
    pub pass: bool,
    /// Largest ratio `E(t_k) / bound(t_k)` observed (1 would be tight).
    pub worst_ratio: f64,
    pub worst_step: usize,
}

/// Verifies the exponential decay bound on an unforced trajectory, with a
/// `1 + 1e-6` multiplicative slack on the bound.
pub fn verify_energy_decay(traj: &Trajectory, report: &DecayReport) -> Result<DecayCheck> {
    if !report.condition_met {
        return Err(Error::NotApplicable(
            "the quarter smallness condition on maternity is not met".into(),
        ));
    }
    let e0 = 0.5 * traj.norm(0) * traj.norm(0);
    let slack = 1.0 + 1e-6;
    let mut worst_ratio = 0.0f64;
    let mut worst_step = 0;
    let mut pass = true;
    for k in 0..traj.len() {
        let t = traj.time().time(k);
        let e = 0.5 * traj.norm(k) * traj.norm(k);
        let bound = report.c * (-2.0 * report.alpha * t).exp() * e0;
        if e0 == 0.0 {
            if e > 0.0 {
                pass = false;
                worst_ratio = f64::INFINITY;
                worst_step = k;
            }
            continue;
        }
        let ratio = e / (bound * slack);
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_step = k;
        }
        if ratio > 1.0 {
            pass = false;
        }
    }
    Ok(DecayCheck {
        pass,
        worst_ratio,
        worst_step,
    })
}

/// Absolute and relative discrepancies of one annual series in the discrete
/// L1, L2 and sup norms (unweighted sums over single-year ages).
#[derive(Debug, Clone, Copy, Default)]
pub struct NormErrors {
    pub l1_abs: f64,
    pub l2_abs: f64,
    pub linf_abs: f64,
    pub l1_rel: f64,
    pub l2_rel: f64,
    pub linf_rel: f64,
}

/// Per-sex error norms between a simulated and a reported annual series.
#[derive(Debug, Clone, Copy)]
pub struct ErrorReport {
    pub per_sex: SexPair<NormErrors>,
}

pub fn error_norms(
    simulated: &SexPair<Vec<f64>>,
    reported: &SexPair<Vec<f64>>,
) -> Result<ErrorReport> {
    let per_sex = SexPair::new((), ()).try_map(|sex, _| {
        let sim = simulated.get(sex);
        let rep = reported.get(sex);
        if sim.len() != rep.len() {
            return Err(Error::invalid_argument(format!(
                "series for {sex} differ in length: {} vs {}",
                sim.len(),
                rep.len()
            )));
        }
        let mut l1 = 0.0;
        let mut l2 = 0.0;
        let mut linf = 0.0f64;
        let mut r1 = 0.0;
        let mut r2 = 0.0;
        let mut rinf = 0.0f64;
        for (s, r) in sim.iter().zip(rep) {
            let d = (s - r).abs();
            l1 += d;
            l2 += d * d;
            linf = linf.max(d);
            r1 += r.abs();
            r2 += r * r;
            rinf = rinf.max(r.abs());
        }
        let l2 = l2.sqrt();
        let r2 = r2.sqrt();
        let rel = |abs: f64, norm: f64| if abs == 0.0 { 0.0 } else { abs / norm };
        Ok(NormErrors {
            l1_abs: l1,
            l2_abs: l2,
            linf_abs: linf,
            l1_rel: rel(l1, r1),
            l2_rel: rel(l2, r2),
            linf_rel: rel(linf, rinf),
        })
    })?;
    Ok(ErrorReport { per_sex })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::lattice::LatticeFunction;
    use crate::operators::DiscreteOperators;
    use crate::stepper::{Forcing, SchemeConfig, StepperWorkspace};
    use rand::{Rng, SeedableRng};

    fn state(a_dag: f64, n: usize, values: Vec<f64>) -> PopulationState {
        let grids = SexPair::splat(AgeGrid::new(a_dag, n).unwrap());
        PopulationState::new(
            0.0,
            grids,
            SexPair::new(values.clone(), values),
            SexPair::splat(0.0),
            Units::Transformed,
        )
        .unwrap()
    }

    #[test]
    fn energy_of_zero_and_ones() {
        assert_eq!(energy(&state(1.0, 4, vec![0.0; 4])).unwrap(), 0.0);
        // u == 1, a_dag = 1 per sex: E = (1 + 1) / 2 = 1
        assert!((energy(&state(1.0, 8, vec![1.0; 8])).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn energy_matches_inner_product_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(67);
        let n = 9;
        let vals: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let s = state(3.0, n, vals.clone());
        let h = 3.0 / n as f64;
        let oracle: f64 = h * vals.iter().map(|v| v * v).sum::<f64>(); // one sex
        let got = energy(&s).unwrap();
        assert!((got - oracle).abs() <= 1e-13 * oracle); // two identical sexes halve the 1/2
    }

    #[test]
    fn energy_rejects_natural_units() {
        let grids = SexPair::splat(AgeGrid::new(1.0, 3).unwrap());
        let p = PopulationState::new(
            0.0,
            grids,
            SexPair::splat(vec![1.0; 3]),
            SexPair::splat(1.0),
            Units::Natural,
        )
        .unwrap();
        assert!(matches!(energy(&p), Err(Error::InvalidState(_))));
        assert!(matches!(lyapunov(&p), Err(Error::InvalidState(_))));
    }

    #[test]
    fn lyapunov_of_ones_approximates_integral() {
        // u == 1, a_dag = 1: integral of (2 - a) over [0,1] is 1.5 per sex,
        // Riemann error O(h)
        let n = 2000;
        let f = lyapunov(&state(1.0, n, vec![1.0; n])).unwrap();
        assert!((f - 3.0).abs() < 2.0 / n as f64, "F = {f}");
        assert_eq!(lyapunov(&state(1.0, 4, vec![0.0; 4])).unwrap(), 0.0);
    }

    #[test]
    fn sandwich_on_random_states() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(71);
        for _ in 0..200 {
            let a_dag = rng.gen_range(1.0..5.0);
            let n = rng.gen_range(2..40);
            let vals: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = state(a_dag, n, vals);
            let e = energy(&s).unwrap();
            let f = lyapunov(&s).unwrap();
            let upper = sandwich_upper(s.grids(), e);
            assert!(e >= 0.0);
            assert!(e <= f + 1e-12 * f.abs());
            assert!(f <= upper + 1e-12 * upper.abs());
        }
    }

    fn constant_maternity(a_dag: f64, n: usize, c: f64) -> (MaternityModuli, SexPair<AgeGrid>) {
        let grids = SexPair::splat(AgeGrid::new(a_dag, n).unwrap());
        let per_child = grids.map(|g| LatticeFunction::constant(g.clone(), c).unwrap());
        (
            MaternityModuli::new(SexPair::splat(per_child)).unwrap(),
            grids,
        )
    }

    #[test]
    fn decay_report_zero_maternity() {
        let (m, grids) = constant_maternity(1.0, 4, 0.0);
        let r = decay_report(&m, &grids);
        assert_eq!(r.condition_value.male, 0.0);
        assert!(r.condition_met);
        assert_eq!(r.alpha, 0.5);
        assert_eq!(r.beta0, 0.0);
        assert_eq!(r.c, 2.0);
    }

    #[test]
    fn decay_report_arithmetic_examples() {
        // all four sup norms squared equal 1/32 on a_dag = (1,1):
        // condition = 2/32 = 1/16 per sex, alpha = (1 - 1/4)/2 = 3/8
        let (m, grids) = constant_maternity(1.0, 4, (1.0f64 / 32.0).sqrt());
        let r = decay_report(&m, &grids);
        assert!((r.condition_value.male - 1.0 / 16.0).abs() < 1e-15);
        assert!(r.condition_met);
        assert!((r.alpha - 0.375).abs() < 1e-15);

        // sup norm 0.5 everywhere: beta0 = 4 pairs * 2 * 1 * 0.25 = 2
        let (m2, grids2) = constant_maternity(1.0, 4, 0.5);
        let r2 = decay_report(&m2, &grids2);
        assert!((r2.beta0 - 2.0).abs() < 1e-15);
    }

    #[test]
    fn decay_condition_boundary() {
        // one pair carries the whole condition; push it just past 1/4
        let val = (0.25f64 + 1e-9).sqrt();
        let (m, grids) = constant_maternity(1.0, 4, val);
        let r = decay_report(&m, &grids);
        assert!(!r.condition_met);
        assert_eq!(r.alpha, 0.0);
    }

    #[test]
    fn decay_report_monotone_in_maternity_scale() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(73);
        for _ in 0..20 {
            let c = rng.gen_range(0.0..0.2);
            let lambda = rng.gen_range(1.0..3.0);
            let (m, grids) = constant_maternity(rng.gen_range(1.0..3.0), 4, c);
            let (ml, _) = constant_maternity(grids.male.a_dag(), 4, c * lambda);
            let r = decay_report(&m, &grids);
            let rl = decay_report(&ml, &grids);
            assert!(rl.beta0 >= r.beta0);
            assert!(rl.alpha <= r.alpha);
        }
    }

    #[test]
    fn verify_decay_zero_data_passes() {
        let (m, grids) = constant_maternity(1.0, 8, 0.1);
        let ops = DiscreteOperators::assemble(m.clone(), grids.clone()).unwrap();
        let n = ops.n();
        let ws = StepperWorkspace::new(
            ops,
            SchemeConfig::new(1.0, TimeGrid::new(1.0, 10).unwrap()).unwrap(),
        )
        .unwrap();
        let traj = ws.run(&vec![0.0; n], Forcing::None).unwrap();
        let report = decay_report(&m, &grids);
        assert!(verify_energy_decay(&traj, &report).unwrap().pass);
    }

    #[test]
    fn verify_decay_requires_condition() {
        let (m, grids) = constant_maternity(1.0, 4, 1.0);
        let ops = DiscreteOperators::assemble(m.clone(), grids.clone()).unwrap();
        let n = ops.n();
        let ws = StepperWorkspace::new(
            ops,
            SchemeConfig::new(1.0, TimeGrid::new(1.0, 4).unwrap()).unwrap(),
        )
        .unwrap();
        let traj = ws.run(&vec![1.0; n], Forcing::None).unwrap();
        let report = decay_report(&m, &grids);
        assert!(matches!(
            verify_energy_decay(&traj, &report),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn implicit_transport_energy_is_nonincreasing() {
        // zero maternity, backward Euler: each step is a contraction
        let grids = SexPair::splat(AgeGrid::new(1.0, 32).unwrap());
        let m = MaternityModuli::zero(&grids);
        let ops = DiscreteOperators::assemble(m, grids).unwrap();
        let n = ops.n();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(79);
        let u0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ws = StepperWorkspace::new(
            ops,
            SchemeConfig::new(1.0, TimeGrid::new(2.0, 50).unwrap()).unwrap(),
        )
        .unwrap();
        let traj = ws.run(&u0, Forcing::None).unwrap();
        for w in traj.norms().windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn decay_bound_holds_on_admissible_runs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(83);
        for _ in 0..5 {
            let a_dag = rng.gen_range(1.0..2.0);
            let n = 24;
            let c = rng.gen_range(0.0..0.3) / (2.0 * a_dag); // keep condition well under 1/4
            let (m, grids) = constant_maternity(a_dag, n, c);
            let report = decay_report(&m, &grids);
            assert!(report.condition_met);
            let ops = DiscreteOperators::assemble(m, grids).unwrap();
            let dim = ops.n();
            let tau_bar = 1.0 / (2.0 * ops.omega0());
            let horizon = 5.0 * a_dag;
            let steps = (horizon / tau_bar).ceil() as usize + 1;
            let ws = StepperWorkspace::new(
                ops,
                SchemeConfig::new(1.0, TimeGrid::new(horizon, steps).unwrap()).unwrap(),
            )
            .unwrap();
            let u0: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect();
            let traj = ws.run(&u0, Forcing::None).unwrap();
            let check = verify_energy_decay(&traj, &report).unwrap();
            assert!(check.pass, "worst ratio {}", check.worst_ratio);
        }
    }

    #[test]
    fn error_norms_identical_series() {
        let s = SexPair::splat(vec![1.0, 2.0, 3.0]);
        let r = error_norms(&s, &s).unwrap();
        for sex in Sex::BOTH {
            let e = r.per_sex.get(sex);
            assert_eq!(e.l1_abs, 0.0);
            assert_eq!(e.l2_abs, 0.0);
            assert_eq!(e.linf_abs, 0.0);
            assert_eq!(e.l1_rel, 0.0);
        }
    }

    #[test]
    fn error_norms_constant_offset() {
        let rep = SexPair::splat(vec![10.0; 5]);
        let sim = SexPair::splat(vec![12.5; 5]);
        let r = error_norms(&sim, &rep).unwrap();
        let e = r.per_sex.male;
        assert!((e.linf_abs - 2.5).abs() < 1e-14);
        assert!((e.l1_abs - 12.5).abs() < 1e-13);
        assert!((e.linf_rel - 0.25).abs() < 1e-14);
    }

    #[test]
    fn error_norms_match_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(89);
        let k = 40;
        let sim = SexPair::new(
            (0..k).map(|_| rng.gen_range(0.0..100.0)).collect::<Vec<_>>(),
            (0..k).map(|_| rng.gen_range(0.0..100.0)).collect::<Vec<_>>(),
        );
        let rep = SexPair::new(
            (0..k).map(|_| rng.gen_range(1.0..100.0)).collect::<Vec<_>>(),
            (0..k).map(|_| rng.gen_range(1.0..100.0)).collect::<Vec<_>>(),
        );
        let r = error_norms(&sim, &rep).unwrap();
        for sex in Sex::BOTH {
            let (s, p) = (sim.get(sex), rep.get(sex));
            let diffs: Vec<f64> = s.iter().zip(p).map(|(a, b)| (a - b).abs()).collect();
            let l1: f64 = diffs.iter().sum();
            let l2: f64 = diffs.iter().map(|d| d * d).sum::<f64>().sqrt();
            let linf = diffs.iter().fold(0.0f64, |m, &d| m.max(d));
            let e = r.per_sex.get(sex);
            assert!((e.l1_abs - l1).abs() <= 1e-12 * l1);
            assert!((e.l2_abs - l2).abs() <= 1e-12 * l2);
            assert_eq!(e.linf_abs, linf);
        }
    }

    #[test]
    fn relative_errors_are_scale_invariant() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(97);
        let k = 15;
        let sim: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..10.0)).collect();
        let rep: Vec<f64> = (0..k).map(|_| rng.gen_range(1.0..10.0)).collect();
        let lambda = 137.5;
        let base = error_norms(&SexPair::splat(sim.clone()), &SexPair::splat(rep.clone())).unwrap();
        let scaled = error_norms(
            &SexPair::splat(sim.iter().map(|v| lambda * v).collect()),
            &SexPair::splat(rep.iter().map(|v| lambda * v).collect()),
        )
        .unwrap();
        let (a, b) = (base.per_sex.male, scaled.per_sex.male);
        assert!((a.l1_rel - b.l1_rel).abs() < 1e-12);
        assert!((a.l2_rel - b.l2_rel).abs() < 1e-12);
        assert!((a.linf_rel - b.linf_rel).abs() < 1e-12);
    }

    #[test]
    fn error_norms_reject_length_mismatch() {
        let sim = SexPair::splat(vec![1.0, 2.0]);
        let rep = SexPair::splat(vec![1.0, 2.0, 3.0]);
        assert!(error_norms(&sim, &rep).is_err());
    }
}
