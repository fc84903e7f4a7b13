use crate::dataio::{
    interpolate_to_grid, load_fertility, load_life_table, load_migration, load_population,
    restrict_to_annual, AnnualSeries, DataKind, DiagnosticsRow, ExportBundle, ScenarioConfig,
};
use crate::fertility::{FertilityModuli, MaternityModuli};
use crate::grid::{AgeGrid, TimeGrid};
use crate::sex::{Sex, SexPair};
use crate::state::{PopulationState, Units};
use crate::stepper::{Forcing, SchemeConfig, StabilityReport, StepperWorkspace};
use crate::survival::SurvivalCurve;
use crate::{Error, Result};

/// Result of a full projection run, ready for export.
#[derive(Debug, Clone)]
pub struct ProjectionRun {
    pub stability: StabilityReport,
    pub bundle: ExportBundle,
}

fn build_grid(a_dag: f64, h: f64) -> Result<AgeGrid> {
    let cells = a_dag / h;
    let n = cells.round();
    if (cells - n).abs() > 1e-9 * cells.max(1.0) || n < 2.0 {
        return Err(Error::invalid_argument(format!(
            "age step {h} does not divide the maximum age {a_dag}"
        )));
    }
    AgeGrid::new(a_dag, n as usize)
}

/// Pads an annual series with a constant so it reaches at least `ages` years.
fn extend_annual(s: &AnnualSeries, ages: usize, fill: f64) -> AnnualSeries {
    let mut values = s.values.clone();
    while values.len() < ages {
        values.push(fill);
    }
    AnnualSeries {
        sex: s.sex,
        values,
    }
}

/// Survival per sex from a single-year life table, interpolated onto the grid.
fn survival_from_qx(qx: &AnnualSeries, grid: &AgeGrid) -> Result<SurvivalCurve> {
    let mut annual = Vec::with_capacity(qx.values.len() + 1);
    annual.push(1.0);
    let mut p = 1.0;
    for (age, &q) in qx.values.iter().enumerate() {
        if !(0.0..1.0).contains(&q) {
            return Err(Error::invalid_argument(format!(
                "qx at age {age} must lie in [0, 1), got {q}"
            )));
        }
        p *= 1.0 - q;
        annual.push(p.max(crate::survival::PI_FLOOR));
    }
    SurvivalCurve::from_annual(&annual, grid.clone())
}

/// Runs the full projection described by a scenario file: load inputs, build
/// survival and maternity, transform the baseline, step over the horizon,
/// back-transform and restrict each whole year to annual counts.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ProjectionRun> {
    let grids = SexPair::new(
        build_grid(cfg.a_dag.male, cfg.h)?,
        build_grid(cfg.a_dag.female, cfg.h)?,
    );
    let years_needed = cfg.a_dag.male.max(cfg.a_dag.female).ceil() as usize;

    let population = load_population(&cfg.population)?;
    let life_table = load_life_table(&cfg.life_table)?;
    let fertility = load_fertility(&cfg.fertility)?;
    let migration = load_migration(&cfg.migration)?;

    let pi = SexPair::new((), ()).try_map(|sex, _| {
        // mortality beyond the table: keep the last annual survival ratio
        survival_from_qx(life_table.get(sex), grids.get(sex))
    })?;

    let schedule = interpolate_to_grid(
        &extend_annual(&fertility, years_needed, 0.0),
        &grids.female,
        DataKind::Rates,
    )?;
    let beta = FertilityModuli::from_mother_schedule(&schedule, grids.male.clone(), cfg.sex_ratio)?;
    let maternity = MaternityModuli::from_fertility(&beta, &pi)?;

    let baseline_density = SexPair::new((), ()).try_map(|sex, _| {
        interpolate_to_grid(
            &extend_annual(population.get(sex), years_needed, 0.0),
            grids.get(sex),
            DataKind::Counts,
        )
    })?;
    let baseline = PopulationState::new(
        0.0,
        grids.clone(),
        baseline_density.map(|lf| lf.values()[1..].to_vec()),
        baseline_density.map(|lf| lf.values()[0]),
        Units::Natural,
    )?;
    let u0_state = baseline.to_transformed(&pi)?;
    let u0 = u0_state.to_interior_vec();

    // migration enters as a constant-in-time source density g, transformed to
    // f = g / pi on the interior nodes
    let mut f_const = Vec::with_capacity(u0.len());
    for sex in Sex::BOTH {
        let g_density = interpolate_to_grid(
            &extend_annual(migration.get(sex), years_needed, 0.0),
            grids.get(sex),
            DataKind::Counts,
        )?;
        let pi_vals = pi.get(sex).values();
        for i in 1..=grids.get(sex).n() {
            f_const.push(g_density.values()[i] / pi_vals[i]);
        }
    }

    let ops = crate::operators::DiscreteOperators::assemble(maternity, grids.clone())?;
    let scheme = SchemeConfig::new(cfg.theta, TimeGrid::with_step(cfg.horizon, cfg.tau)?)?;
    let stability = scheme.stability_report(&ops);
    let ws = StepperWorkspace::new(ops, scheme)?;
    let forcing_fn = |_t: f64| f_const.clone();
    let traj = ws.run(&u0, Forcing::Time(&forcing_fn))?;

    let time = traj.time().clone();
    let mut diagnostics = Vec::with_capacity(traj.len());
    for k in 0..traj.len() {
        diagnostics.push(DiagnosticsRow {
            t: time.time(k),
            energy: 0.5 * traj.norm(k) * traj.norm(k),
            // natural newborn density equals the transformed boundary value
            // since pi(0) = 1
            births: traj.boundary(k),
        });
    }

    let whole_years = cfg.horizon.floor() as i64;
    let mut years = Vec::new();
    for y in 0..=whole_years {
        let k = ((y as f64 / time.tau()).round() as usize).min(time.n_steps());
        let interior = traj.state(k);
        let nm = grids.male.n();
        let state = PopulationState::new(
            time.time(k),
            grids.clone(),
            SexPair::new(interior[..nm].to_vec(), interior[nm..].to_vec()),
            traj.boundary(k),
            Units::Transformed,
        )?;
        let natural = state.from_transformed(&pi)?;
        years.push((cfg.start_year + y, restrict_to_annual(&natural)?));
    }

    Ok(ProjectionRun {
        stability,
        bundle: ExportBundle { years, diagnostics },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn fixture_config() -> ScenarioConfig {
        let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
        ScenarioConfig::load(root.join("scenario.ini")).unwrap()
    }

    #[test]
    fn golden_scenario_runs_and_balances() {
        let cfg = fixture_config();
        let run = run_scenario(&cfg).unwrap();
        assert_eq!(run.bundle.years.len(), cfg.horizon as usize + 1);
        assert_eq!(run.bundle.years[0].0, cfg.start_year);
        // case study step violates the sufficient bound; run must proceed
        assert!(!run.stability.satisfied);
        assert!(run.stability.omega0 >= 110.0);

        // baseline snapshot reproduces the input totals closely (only the
        // interpolation round trip intervenes at t = 0)
        let pop = load_population(&cfg.population).unwrap();
        let sim0 = &run.bundle.years[0].1;
        for sex in crate::sex::Sex::BOTH {
            let input_total = pop.get(sex).total();
            let sim_total = sim0.get(sex).total();
            let rel = (sim_total - input_total).abs() / input_total;
            assert!(rel < 0.01, "{sex}: {sim_total} vs {input_total}");
        }

        // population stays positive and finite over the horizon
        for (_, series) in &run.bundle.years {
            for sex in crate::sex::Sex::BOTH {
                assert!(series.get(sex).values.iter().all(|&v| v.is_finite() && v >= -1e-9));
            }
        }
    }

    #[test]
    fn export_round_trip_totals_match() {
        let run = run_scenario(&fixture_config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        crate::dataio::export_results(&run.bundle, dir.path()).unwrap();
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        for (line, (year, series)) in summary.lines().skip(1).zip(&run.bundle.years) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols[0], year.to_string());
            let tm: f64 = cols[1].parse().unwrap();
            let per_year: f64 = series.male.total();
            assert!((tm - per_year).abs() <= 1e-9 * per_year.max(1.0));
        }
    }

    #[test]
    fn missing_input_is_reported_with_path() {
        let mut cfg = fixture_config();
        cfg.population = std::path::PathBuf::from("/nonexistent/file.csv");
        let err = run_scenario(&cfg).unwrap_err();
        assert!(err.to_string().contains("nonexistent"), "{err}");
    }
}
