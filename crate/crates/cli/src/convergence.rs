//! Self-convergence study behind `popdyn convergence`.
//!
//! The manufactured scenario uses equal unit-length age grids, a smooth
//! compactly supported initial bump and a maternity window disjoint from the
//! initial support, so the data are compatible at the boundary and the
//! solution stays smooth over the horizon.

use popdyn::fertility::MaternityModuli;
use popdyn::stepper::{Forcing, StepperWorkspace};
use popdyn::{
    AgeGrid, DiscreteOperators, Error, LatticeFunction, SchemeConfig, Sex, SexPair, TimeGrid,
    Trajectory,
};

/// Smooth bump `((x-lo)(hi-x))^3`, normalized to peak 1, zero outside `(lo, hi)`.
fn bump(x: f64, lo: f64, hi: f64) -> f64 {
    if x <= lo || x >= hi {
        return 0.0;
    }
    let s = (x - lo) * (hi - x) * 4.0 / ((hi - lo) * (hi - lo));
    s * s * s
}

fn manufactured_ops(n: usize) -> Result<DiscreteOperators, Error> {
    let grids = SexPair::splat(AgeGrid::new(1.0, n)?);
    let kernel = grids.try_map(|_, g| {
        LatticeFunction::sample(g.clone(), |a| 0.3 * bump(a, 0.8, 0.95))
    })?;
    let m = MaternityModuli::new(SexPair::splat(kernel))?;
    DiscreteOperators::assemble(m, grids)
}

fn run_level(theta: f64, n: usize, steps: usize) -> Result<Trajectory, Error> {
    let ops = manufactured_ops(n)?;
    let mut u0 = Vec::with_capacity(ops.n());
    for sex in Sex::BOTH {
        let g = ops.grids().get(sex);
        for i in 1..=g.n() {
            u0.push(bump(g.node(i), 0.05, 0.75));
        }
    }
    let ws = StepperWorkspace::new(
        ops,
        SchemeConfig::new(theta, TimeGrid::new(1.0, steps)?)?,
    )?;
    ws.run(&u0, Forcing::None)
}

/// Sup over shared times of the coarse-lattice norm of the difference,
/// restricting the finer solution by node/step subsampling.
fn level_distance(
    coarse: &Trajectory,
    fine: &Trajectory,
    nc: usize,
    space_ratio: usize,
    time_ratio: usize,
) -> f64 {
    let h = 1.0 / nc as f64;
    let nf = nc * space_ratio;
    let mut worst = 0.0f64;
    for k in 0..coarse.len() {
        let uc = coarse.state(k);
        let uf = fine.state(k * time_ratio);
        let mut sq = 0.0;
        for (block, fblock) in [(0, 0), (nc, nf)] {
            for i in 1..=nc {
                let d = uc[block + i - 1] - uf[fblock + i * space_ratio - 1];
                sq += d * d;
            }
        }
        worst = worst.max((h * sq).sqrt());
    }
    worst
}

/// Runs `levels` refinements and prints level distances and observed orders.
pub fn run(levels: usize, theta: f64, tau_only: bool) -> Result<(), Error> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::invalid_argument("theta must lie in [0, 1]"));
    }
    let (errors, labels): (Vec<f64>, Vec<String>) = if tau_only {
        let n_fixed = 256;
        println!("tau-only refinement: n = {n_fixed}, theta = {theta}, T = 1");
        let runs: Vec<Trajectory> = (0..levels)
            .map(|lvl| run_level(theta, n_fixed, 16 << lvl))
            .collect::<Result<_, _>>()?;
        let errors = (0..levels - 1)
            .map(|lvl| level_distance(&runs[lvl], &runs[lvl + 1], n_fixed, 1, 2))
            .collect();
        let labels = (0..levels - 1)
            .map(|lvl| format!("tau = 1/{}", 16 << lvl))
            .collect();
        (errors, labels)
    } else {
        println!("joint (h, tau) refinement: theta = {theta}, T = 1");
        let runs: Vec<(usize, Trajectory)> = (0..levels)
            .map(|lvl| {
                let n = 256 << lvl;
                run_level(theta, n, n).map(|t| (n, t))
            })
            .collect::<Result<_, _>>()?;
        let errors = (0..levels - 1)
            .map(|lvl| level_distance(&runs[lvl].1, &runs[lvl + 1].1, runs[lvl].0, 2, 2))
            .collect();
        let labels = (0..levels - 1)
            .map(|lvl| format!("h = tau = 1/{}", runs[lvl].0))
            .collect();
        (errors, labels)
    };

    println!("level                 distance to next    ratio    observed order");
    for (i, (err, label)) in errors.iter().zip(&labels).enumerate() {
        if i == 0 {
            println!("{label:<22}{err:<20.6e}-        -");
        } else {
            let ratio = errors[i - 1] / err;
            println!("{label:<22}{err:<20.6e}{ratio:<9.3}{:.3}", ratio.log2());
        }
    }
    Ok(())
}
