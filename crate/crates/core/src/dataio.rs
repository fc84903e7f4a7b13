use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::grid::AgeGrid;
use crate::lattice::LatticeFunction;
use crate::sex::{Sex, SexPair};
use crate::state::{PopulationState, Units};
use crate::{Error, Result};

/// Single-year-age series: `values[j]` belongs to age `j` (contiguous from 0).
#[derive(Debug, Clone, PartialEq)]
pub struct AnnualSeries {
    pub sex: Sex,
    pub values: Vec<f64>,
}

impl AnnualSeries {
    pub fn new(sex: Sex, values: Vec<f64>) -> Result<AnnualSeries> {
        if values.is_empty() {
            return Err(Error::invalid_argument("annual series must be non-empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid_argument(
                "annual series values must be finite",
            ));
        }
        Ok(AnnualSeries { sex, values })
    }

    /// Highest age carried by the series.
    pub fn max_age(&self) -> usize {
        self.values.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Whether a column carries totals per bin (counts) or bin averages (rates).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinSemantics {
    CountTotal,
    RateAverage,
}

/// Grouped (binned) series with inclusive integer age bounds per bin.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSeries {
    pub sex: Sex,
    /// `(age_lo, age_hi, value)` with `age_lo <= age_hi`, contiguous ascending.
    pub bins: Vec<(u32, u32, f64)>,
}

impl GroupedSeries {
    pub fn new(sex: Sex, bins: Vec<(u32, u32, f64)>) -> Result<GroupedSeries> {
        if bins.is_empty() {
            return Err(Error::invalid_argument("grouped series must be non-empty"));
        }
        let mut expected_lo = bins[0].0;
        for &(lo, hi, v) in &bins {
            if lo != expected_lo {
                return Err(Error::invalid_argument(format!(
                    "bins must be contiguous and ascending: expected lower bound {expected_lo}, got {lo}"
                )));
            }
            if hi < lo {
                return Err(Error::invalid_argument(format!(
                    "zero-width or inverted bin [{lo}, {hi}]"
                )));
            }
            if !v.is_finite() {
                return Err(Error::invalid_argument("bin values must be finite"));
            }
            expected_lo = hi + 1;
        }
        Ok(GroupedSeries { sex, bins })
    }
}

/// Expands grouped data to single-year ages: bin totals are spread uniformly
/// (`total / width` per age), bin averages are copied to every age in the bin.
pub fn disaggregate(g: &GroupedSeries, semantics: BinSemantics) -> Result<AnnualSeries> {
    let start = g.bins[0].0;
    if start != 0 {
        return Err(Error::invalid_argument(format!(
            "grouped series must start at age 0, got {start}"
        )));
    }
    let mut values = Vec::new();
    for &(lo, hi, v) in &g.bins {
        let width = (hi - lo + 1) as f64;
        let per_age = match semantics {
            BinSemantics::CountTotal => v / width,
            BinSemantics::RateAverage => v,
        };
        for _ in lo..=hi {
            values.push(per_age);
        }
    }
    AnnualSeries::new(g.sex, values)
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

struct CsvRows {
    path: PathBuf,
    rows: Vec<(u64, Vec<String>)>,
}

/// Reads a CSV file and checks the exact header.
fn read_csv(path: &Path, header: &[&str]) -> Result<CsvRows> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(
                path,
                std::io::Error::new(std::io::ErrorKind::Other, e.to_string()),
            ),
            _ => parse_err(path, 1, e.to_string()),
        })?;
    let got = reader
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?;
    let got: Vec<&str> = got.iter().collect();
    if got != header {
        return Err(parse_err(
            path,
            1,
            format!("expected header `{}`, got `{}`", header.join(","), got.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line())
                .unwrap_or(0);
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != header.len() {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, got {}", header.len(), record.len()),
            ));
        }
        rows.push((line, record.iter().map(str::to_owned).collect()));
    }
    Ok(CsvRows {
        path: path.to_path_buf(),
        rows,
    })
}

fn field_f64(path: &Path, line: u64, name: &str, raw: &str) -> Result<f64> {
    raw.parse::<f64>()
        .map_err(|_| parse_err(path, line, format!("invalid {name} `{raw}`")))
}

fn field_age(path: &Path, line: u64, raw: &str) -> Result<usize> {
    raw.parse::<usize>()
        .map_err(|_| parse_err(path, line, format!("invalid age `{raw}`")))
}

fn field_sex(path: &Path, line: u64, raw: &str) -> Result<Sex> {
    Sex::parse_label(raw).ok_or_else(|| parse_err(path, line, format!("unknown sex label `{raw}`")))
}

/// Collects per-sex (age -> value) maps into contiguous-from-zero series.
fn collect_series(
    path: &Path,
    maps: SexPair<BTreeMap<usize, (u64, f64)>>,
) -> Result<SexPair<AnnualSeries>> {
    maps.try_map(|sex, map| {
        if map.is_empty() {
            return Err(parse_err(path, 1, format!("no rows for sex `{sex}`")));
        }
        let max_age = *map.keys().last().expect("non-empty");
        let mut values = Vec::with_capacity(max_age + 1);
        for age in 0..=max_age {
            match map.get(&age) {
                Some(&(_, v)) => values.push(v),
                None => {
                    return Err(parse_err(
                        path,
                        1,
                        format!("missing age {age} for sex `{sex}` (ages must be contiguous from 0)"),
                    ))
                }
            }
        }
        AnnualSeries::new(sex, values)
    })
}

fn load_sex_age_value(
    path: &Path,
    header: &[&str],
    validate: impl Fn(&Path, u64, f64) -> Result<()>,
) -> Result<SexPair<AnnualSeries>> {
    let csv = read_csv(path, header)?;
    let mut maps: SexPair<BTreeMap<usize, (u64, f64)>> =
        SexPair::new(BTreeMap::new(), BTreeMap::new());
    for (line, fields) in &csv.rows {
        let sex = field_sex(&csv.path, *line, &fields[0])?;
        let age = field_age(&csv.path, *line, &fields[1])?;
        let value = field_f64(&csv.path, *line, header[2], &fields[2])?;
        validate(&csv.path, *line, value)?;
        if maps.get(sex).contains_key(&age) {
            return Err(parse_err(
                &csv.path,
                *line,
                format!("duplicate age {age} for sex `{sex}`"),
            ));
        }
        maps.get_mut(sex).insert(age, (*line, value));
    }
    collect_series(&csv.path, maps)
}

/// Baseline population counts, header `sex,age,count`.
pub fn load_population(path: impl AsRef<Path>) -> Result<SexPair<AnnualSeries>> {
    load_sex_age_value(path.as_ref(), &["sex", "age", "count"], |p, line, v| {
        if v < 0.0 {
            Err(parse_err(p, line, format!("negative count {v}")))
        } else {
            Ok(())
        }
    })
}

/// Life table of annual death probabilities, header `sex,age,qx`.
pub fn load_life_table(path: impl AsRef<Path>) -> Result<SexPair<AnnualSeries>> {
    load_sex_age_value(path.as_ref(), &["sex", "age", "qx"], |p, line, v| {
        if !(0.0..1.0).contains(&v) {
            Err(parse_err(p, line, format!("qx must lie in [0, 1), got {v}")))
        } else {
            Ok(())
        }
    })
}

/// Mother-age fertility schedule, header `age,rate` (children per
/// person-year; split by the sex ratio downstream).
pub fn load_fertility(path: impl AsRef<Path>) -> Result<AnnualSeries> {
    let path = path.as_ref();
    let csv = read_csv(path, &["age", "rate"])?;
    let mut map: BTreeMap<usize, f64> = BTreeMap::new();
    for (line, fields) in &csv.rows {
        let age = field_age(path, *line, &fields[0])?;
        let rate = field_f64(path, *line, "rate", &fields[1])?;
        if rate < 0.0 {
            return Err(parse_err(path, *line, format!("negative rate {rate}")));
        }
        if map.insert(age, rate).is_some() {
            return Err(parse_err(path, *line, format!("duplicate age {age}")));
        }
    }
    if map.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    let max_age = *map.keys().last().expect("non-empty");
    let mut values = Vec::with_capacity(max_age + 1);
    for age in 0..=max_age {
        match map.get(&age) {
            Some(&v) => values.push(v),
            None => {
                return Err(parse_err(
                    path,
                    1,
                    format!("missing age {age} (ages must be contiguous from 0)"),
                ))
            }
        }
    }
    AnnualSeries::new(Sex::Female, values)
}

/// Net migration per year of calendar time, header `sex,age,net_per_year`
/// (may be negative).
pub fn load_migration(path: impl AsRef<Path>) -> Result<SexPair<AnnualSeries>> {
    load_sex_age_value(path.as_ref(), &["sex", "age", "net_per_year"], |_, _, _| Ok(()))
}

/// How annual values are interpreted when moved onto the computational grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    /// Persons per 1-year age cell; converted to a density (persons per year
    /// of age) by treating each count as the cell average, placed at the cell
    /// midpoint, so that integrals are preserved.
    Counts,
    /// Already a per-person-year rate attached to exact integer ages.
    Rates,
}

/// Piecewise-linear interpolation of an annual series onto the grid nodes.
pub fn interpolate_to_grid(
    s: &AnnualSeries,
    grid: &AgeGrid,
    kind: DataKind,
) -> Result<LatticeFunction> {
    let max_age = s.max_age() as f64;
    let reach = match kind {
        DataKind::Counts => max_age + 1.0, // last cell is [max_age, max_age + 1)
        DataKind::Rates => max_age + 1.0,  // constant continuation over the last year
    };
    if grid.a_dag() > reach + 1e-9 {
        return Err(Error::Extrapolation(format!(
            "grid reaches age {} but the data end at age {reach}",
            grid.a_dag()
        )));
    }
    // interpolation abscissae and ordinates
    let (xs, ys): (Vec<f64>, &[f64]) = match kind {
        DataKind::Counts => (
            (0..s.values.len()).map(|j| j as f64 + 0.5).collect(),
            &s.values,
        ),
        DataKind::Rates => ((0..s.values.len()).map(|j| j as f64).collect(), &s.values),
    };
    let values = grid
        .nodes()
        .map(|a| interp_clamped(&xs, ys, a))
        .collect();
    LatticeFunction::new(grid.clone(), values)
}

/// Linear interpolation with constant extension outside the abscissa range.
fn interp_clamped(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let j = match xs.binary_search_by(|v| v.partial_cmp(&x).expect("finite")) {
        Ok(j) => return ys[j],
        Err(j) => j - 1,
    };
    let t = (x - xs[j]) / (xs[j + 1] - xs[j]);
    ys[j] + t * (ys[j + 1] - ys[j])
}

/// Integrates a natural-units density state over each whole-year age cell
/// (trapezoid rule on the lattice nodes) to recover census-style counts.
pub fn restrict_to_annual(state: &PopulationState) -> Result<SexPair<AnnualSeries>> {
    if state.units() != Units::Natural {
        return Err(Error::InvalidState(
            "annual restriction applies to natural-units states".into(),
        ));
    }
    SexPair::new((), ()).try_map(|sex, _| {
        let g = state.grids().get(sex);
        let h = g.h();
        let per_year = 1.0 / h;
        let nodes_per_year = per_year.round();
        if (per_year - nodes_per_year).abs() > 1e-9 * per_year || nodes_per_year < 1.0 {
            return Err(Error::invalid_argument(format!(
                "grid step {h} does not divide one year"
            )));
        }
        let k = nodes_per_year as usize;
        let full = state.full_values(sex);
        let years = g.n() / k;
        let mut values = Vec::with_capacity(years);
        for y in 0..years {
            let lo = y * k;
            let mut acc = 0.5 * (full[lo] + full[lo + k]);
            for i in (lo + 1)..(lo + k) {
                acc += full[i];
            }
            values.push(h * acc);
        }
        AnnualSeries::new(sex, values)
    })
}

/// One diagnostics row of a projection run.
#[derive(Debug, Clone, Copy)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub energy: f64,
    pub births: SexPair<f64>,
}

/// Everything the exporter writes for one projection run.
#[derive(Debug, Clone)]
pub struct ExportBundle {
    /// `(calendar year, per-sex annual counts)` snapshots, ascending years.
    pub years: Vec<(i64, SexPair<AnnualSeries>)>,
    pub diagnostics: Vec<DiagnosticsRow>,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `population_<year>.csv`, `pyramid_<year>.csv`, `diagnostics.csv`
/// and `summary.csv` into `out_dir`.
///
/// Files are staged in a temporary subdirectory and moved into place one by
/// one, so an IO failure never leaves a truncated file at its final name.
pub fn export_results(bundle: &ExportBundle, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let stage = out_dir.join(format!(".staging-{}", std::process::id()));
    fs::create_dir_all(&stage).map_err(|e| Error::io(&stage, e))?;

    let result = (|| -> Result<Vec<PathBuf>> {
        let mut staged: Vec<(PathBuf, String)> = Vec::new();

        for (year, series) in &bundle.years {
            let mut pop = String::from("sex,age,count\n");
            for sex in Sex::BOTH {
                let s = series.get(sex);
                for (age, v) in s.values.iter().enumerate() {
                    pop.push_str(&format!("{},{age},{v}\n", sex.label()));
                }
            }
            staged.push((
                write_file(&stage, &format!("population_{year}.csv"), &pop)?,
                format!("population_{year}.csv"),
            ));

            // mirrored counts: male column negated for pyramid plotting
            let ages = series
                .male
                .values
                .len()
                .max(series.female.values.len());
            let mut pyr = String::from("age,male,female\n");
            for age in 0..ages {
                let m = series.male.values.get(age).copied().unwrap_or(0.0);
                let f = series.female.values.get(age).copied().unwrap_or(0.0);
                pyr.push_str(&format!("{age},{},{f}\n", -m));
            }
            staged.push((
                write_file(&stage, &format!("pyramid_{year}.csv"), &pyr)?,
                format!("pyramid_{year}.csv"),
            ));
        }

        let mut diag = String::from("t,energy,births_m,births_f\n");
        for row in &bundle.diagnostics {
            diag.push_str(&format!(
                "{},{},{},{}\n",
                row.t, row.energy, row.births.male, row.births.female
            ));
        }
        staged.push((write_file(&stage, "diagnostics.csv", &diag)?, "diagnostics.csv".into()));

        let mut summary = String::from("year,total_m,total_f,total\n");
        for (year, series) in &bundle.years {
            let tm = series.male.total();
            let tf = series.female.total();
            summary.push_str(&format!("{year},{tm},{tf},{}\n", tm + tf));
        }
        staged.push((write_file(&stage, "summary.csv", &summary)?, "summary.csv".into()));

        let mut finals = Vec::with_capacity(staged.len());
        for (tmp, name) in staged {
            let dest = out_dir.join(&name);
            fs::rename(&tmp, &dest).map_err(|e| Error::io(&dest, e))?;
            finals.push(dest);
        }
        Ok(finals)
    })();

    let _ = fs::remove_dir_all(&stage);
    result
}

/// Run parameters plus input paths, read from an INI-style key-value file.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub a_dag: SexPair<f64>,
    pub h: f64,
    pub tau: f64,
    pub theta: f64,
    pub horizon: f64,
    pub sex_ratio: f64,
    pub population: PathBuf,
    pub life_table: PathBuf,
    pub fertility: PathBuf,
    pub migration: PathBuf,
    pub out_dir: Option<PathBuf>,
    /// Calendar year of the baseline population; defaults to 0 when absent.
    pub start_year: i64,
}

impl ScenarioConfig {
    /// Parses `key = value` lines; `#` and `;` start comments; relative paths
    /// resolve against the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let mut map: BTreeMap<String, (u64, String)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx as u64 + 1;
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() || line.starts_with('[') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(parse_err(path, line_no, format!("expected `key = value`, got `{raw}`")));
            };
            map.insert(k.trim().to_string(), (line_no, v.trim().to_string()));
        }
        let number = |key: &str| -> Result<f64> {
            let (line, raw) = map
                .get(key)
                .ok_or_else(|| parse_err(path, 1, format!("missing key `{key}`")))?;
            let v = raw
                .parse::<f64>()
                .map_err(|_| parse_err(path, *line, format!("invalid number for `{key}`: `{raw}`")))?;
            Ok(v)
        };
        let positive = |key: &str| -> Result<f64> {
            let v = number(key)?;
            if !(v > 0.0) {
                let line = map.get(key).map(|(l, _)| *l).unwrap_or(1);
                return Err(parse_err(path, line, format!("`{key}` must be positive, got {v}")));
            }
            Ok(v)
        };
        let input = |key: &str| -> Result<PathBuf> {
            let (_, raw) = map
                .get(key)
                .ok_or_else(|| parse_err(path, 1, format!("missing key `{key}`")))?;
            let p = PathBuf::from(raw);
            Ok(if p.is_relative() { dir.join(p) } else { p })
        };
        let theta = number("theta")?;
        if !(0.0..=1.0).contains(&theta) {
            let line = map.get("theta").map(|(l, _)| *l).unwrap_or(1);
            return Err(parse_err(path, line, format!("`theta` must lie in [0, 1], got {theta}")));
        }
        let start_year = match map.get("start_year") {
            Some((line, raw)) => raw
                .parse::<i64>()
                .map_err(|_| parse_err(path, *line, format!("invalid `start_year`: `{raw}`")))?,
            None => 0,
        };
        Ok(ScenarioConfig {
            a_dag: SexPair::new(positive("a_dag_m")?, positive("a_dag_f")?),
            h: positive("h")?,
            tau: positive("tau")?,
            theta,
            horizon: positive("horizon")?,
            sex_ratio: positive("sex_ratio")?,
            population: input("population")?,
            life_table: input("life_table")?,
            fertility: input("fertility")?,
            migration: input("migration")?,
            out_dir: map.get("out_dir").map(|(_, v)| {
                let p = PathBuf::from(v);
                if p.is_relative() {
                    dir.join(p)
                } else {
                    p
                }
            }),
            start_year,
        })
    }
}
