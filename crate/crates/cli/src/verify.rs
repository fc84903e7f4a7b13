//! Reduced offline verification suites behind `popdyn verify`.

use popdyn::analysis::{decay_report, verify_energy_decay};
use popdyn::fertility::MaternityModuli;
use popdyn::lattice::{backward_diff, forward_diff};
use popdyn::stepper::{Forcing, StepperWorkspace};
use popdyn::{
    AgeGrid, DiscreteOperators, LatticeFunction, SchemeConfig, SexPair, TimeGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_maternity(rng: &mut impl Rng, grids: &SexPair<AgeGrid>, max: f64) -> MaternityModuli {
    let mut lf = |g: &AgeGrid| {
        LatticeFunction::new(
            g.clone(),
            (0..=g.n()).map(|_| rng.gen_range(0.0..max)).collect(),
        )
        .unwrap()
    };
    MaternityModuli::new(SexPair::new(
        SexPair::new(lf(&grids.male), lf(&grids.female)),
        SexPair::new(lf(&grids.male), lf(&grids.female)),
    ))
    .unwrap()
}

fn random_grids(rng: &mut impl Rng) -> SexPair<AgeGrid> {
    SexPair::new(
        AgeGrid::new(rng.gen_range(1.0..3.0), rng.gen_range(3..32)).unwrap(),
        AgeGrid::new(rng.gen_range(1.0..3.0), rng.gen_range(3..32)).unwrap(),
    )
}

fn summation_by_parts(rng: &mut impl Rng) -> (bool, String) {
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(3..=64);
        let g = AgeGrid::new(rng.gen_range(0.5..10.0), n).unwrap();
        let h = g.h();
        let u_vals: Vec<f64> = (0..=n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let v_vals: Vec<f64> = (0..=n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let u = LatticeFunction::new(g.clone(), u_vals.clone()).unwrap();
        let v = LatticeFunction::new(g, v_vals.clone()).unwrap();
        let lhs: f64 = h * backward_diff(&u)
            .iter()
            .zip(&v_vals[1..])
            .map(|(d, v)| d * v)
            .sum::<f64>();
        let rhs = -h * u_vals[..n]
            .iter()
            .zip(&forward_diff(&v))
            .map(|(u, d)| u * d)
            .sum::<f64>()
            + u_vals[n] * v_vals[n]
            - u_vals[0] * v_vals[0];
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));
    }
    (worst <= 1e-12, format!("worst relative defect {worst:.2e}"))
}

fn operator_equivalence(rng: &mut impl Rng) -> (bool, String) {
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let grids = random_grids(rng);
        let m = random_maternity(rng, &grids, 1.5);
        let ops = DiscreteOperators::assemble(m, grids).unwrap();
        let u: Vec<f64> = (0..ops.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let via_matrix = ops.apply_a_matrix(&u).unwrap();
        let via_formula = ops.apply_generator(&u).unwrap();
        let scale = via_formula.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in via_matrix.iter().zip(&via_formula) {
            worst = worst.max((a - b).abs() / scale);
        }
    }
    (worst <= 1e-13, format!("worst relative defect {worst:.2e}"))
}

fn dissipativity(rng: &mut impl Rng) -> (bool, String) {
    let mut worst_excess = f64::NEG_INFINITY;
    let mut all_hold = true;
    for _ in 0..200 {
        let grids = random_grids(rng);
        let m = random_maternity(rng, &grids, 0.8);
        let ops = DiscreteOperators::assemble(m, grids).unwrap();
        let u: Vec<f64> = (0..ops.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = ops.dissipativity_check(&u).unwrap();
        worst_excess = worst_excess.max((r.lhs - r.rhs) / r.rhs.abs().max(1e-300));
        all_hold &= r.holds;
    }
    (all_hold, format!("worst (lhs-rhs)/rhs {worst_excess:.2e}"))
}

fn energy_decay(rng: &mut impl Rng) -> (bool, String) {
    let mut pass = true;
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let a_dag = rng.gen_range(1.0..2.0);
        let grids = SexPair::splat(AgeGrid::new(a_dag, 24).unwrap());
        let m = random_maternity(rng, &grids, 0.3 / (2.0 * a_dag));
        let report = decay_report(&m, &grids);
        if !report.condition_met {
            return (false, "sampled maternity violated the decay condition".into());
        }
        let ops = DiscreteOperators::assemble(m, grids).unwrap();
        let dim = ops.n();
        let tau_bar = 1.0 / (2.0 * ops.omega0());
        let horizon = 5.0 * a_dag;
        let steps = (horizon / tau_bar).ceil() as usize;
        let ws = StepperWorkspace::new(
            ops,
            SchemeConfig::new(1.0, TimeGrid::new(horizon, steps).unwrap()).unwrap(),
        )
        .unwrap();
        let u0: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect();
        let traj = ws.run(&u0, Forcing::None).unwrap();
        let check = verify_energy_decay(&traj, &report).unwrap();
        pass &= check.pass;
        worst = worst.max(check.worst_ratio);
    }
    (pass, format!("worst energy/bound ratio {worst:.3}"))
}

/// Runs every suite, prints a pass/fail table and returns the overall verdict.
pub fn run_all() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let suites: [(&str, fn(&mut ChaCha8Rng) -> (bool, String)); 4] = [
        ("summation by parts", summation_by_parts),
        ("matrix/operator equivalence", operator_equivalence),
        ("discrete dissipativity", dissipativity),
        ("energy decay bound", energy_decay),
    ];
    let mut all = true;
    for (name, suite) in suites {
        let (pass, detail) = suite(&mut rng);
        println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        all &= pass;
    }
    all
}
