//! Reproduction recipes: run a CLI invocation from `repro/recipes.json`,
//! compare its CSV outputs against stored goldens column by column, and
//! apply the recipe's extra checks.
//!
//! Goldens keep 12 significant digits; numeric cells compare within an
//! absolute per-column tolerance (default `1e-9 * max(1, |golden|)`), text
//! cells compare exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::exact::lowest_eigenpairs_of;
use crate::genbound::StudyConfig;
use crate::hamiltonian::pauli_sum;
use crate::labels::PhaseLabel;
use crate::observable::simulate_shots;
use crate::pipeline::cache::write_atomic;
use crate::pipeline::{commands, model_params, ExperimentConfig, Pipeline};
use crate::seed::derive_seed_tagged;

const DEFAULT_REL_TOL: f64 = 1e-9;
const MAX_DIFFS: usize = 20;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldenSpec {
    pub file: String,
    /// Absolute tolerance per numeric column.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    /// Columns left out of the comparison.
    #[serde(default)]
    pub ignore: Vec<String>,
    /// The file has no header row; columns are named `c0, c1, ...`.
    #[serde(default)]
    pub headerless: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Check {
    /// Running the command again into a fresh directory gives identical
    /// bytes for every output except the manifest.
    RerunIdentical,
    /// A second invocation yields the same values in `column` of `file`.
    ColumnMatches {
        command: Vec<String>,
        file: String,
        column: String,
    },
    /// Every lowest energy in `energies.csv` matches exact diagonalization.
    DenseEnergies { rel_tol: f64 },
    /// `phase_grid.csv` accuracy on far-from-boundary points.
    FarAccuracy {
        min: f64,
        #[serde(default)]
        above_majority: bool,
    },
    /// `variance <= (sum alpha)^2 <= (C N_S)^2` on every row of
    /// `variance_report.csv`.
    HoelderChain,
    /// Simulated estimates at the two-sigma budget recover the sign of the
    /// margin at least `min_rate` of the time.
    TwoSigmaCoverage { seeds: u64, min_rate: f64 },
    /// Single points classified with the trained model.
    Probes { points: Vec<(f64, f64, String)> },
    /// `genbound.csv`: positive, increasing `B^2`, bounded `B^2 / N` growth
    /// and the doubling diagnostic.
    ScalingBounded { max_ratio_growth: f64, doubling_tol: f64 },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Recipe {
    pub name: String,
    pub criterion: u32,
    /// Subcommand and flags, with paths relative to the recipe directory.
    pub command: Vec<String>,
    #[serde(default)]
    pub goldens: Vec<GoldenSpec>,
    #[serde(default)]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub notes: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecipeFile {
    recipes: Vec<Recipe>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    Pass,
    Fail(Vec<String>),
    MissingGolden(Vec<String>),
    Regenerated(Vec<String>),
}

#[derive(Clone, Debug)]
pub struct RecipeReport {
    pub name: String,
    pub criterion: u32,
    pub status: Status,
    pub seconds: f64,
}

impl RecipeReport {
    pub fn passed(&self) -> bool {
        matches!(self.status, Status::Pass | Status::Regenerated(_))
    }
}

impl fmt::Display for RecipeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head = |s: &str| format!("{s} {} (criterion {}, {:.1}s)", self.name, self.criterion, self.seconds);
        match &self.status {
            Status::Pass => write!(f, "{}", head("PASS")),
            Status::Regenerated(files) => write!(f, "{}: wrote {}", head("REGENERATED"), files.join(", ")),
            Status::MissingGolden(files) => write!(
                f,
                "{}: missing golden {}; run `qphase repro --regenerate {}` and review the diff",
                head("MISSING"),
                files.join(", "),
                self.name
            ),
            Status::Fail(lines) => {
                write!(f, "{}", head("FAIL"))?;
                for l in lines {
                    write!(f, "\n    {l}")?;
                }
                Ok(())
            }
        }
    }
}

pub struct RecipeBook {
    pub dir: PathBuf,
    pub recipes: Vec<Recipe>,
    /// Scratch space for outputs and the shared state cache.
    pub work_dir: PathBuf,
}

impl RecipeBook {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("recipes.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let file: RecipeFile = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            recipes: file.recipes,
            work_dir: std::env::temp_dir().join("qphase-repro"),
        })
    }

    pub fn get(&self, name: &str) -> Option<&Recipe> {
        self.recipes.iter().find(|r| r.name == name)
    }

    /// Run the named recipes (all when `names` is empty).
    pub fn run(&self, names: &[String], regenerate: bool) -> Result<Vec<RecipeReport>> {
        for n in names {
            if self.get(n).is_none() {
                return Err(Error::Config(format!("unknown recipe {n}")));
            }
        }
        self.recipes
            .iter()
            .filter(|r| names.is_empty() || names.contains(&r.name))
            .map(|r| self.run_recipe(r, regenerate))
            .collect()
    }

    fn golden_path(&self, recipe: &Recipe, file: &str) -> PathBuf {
        self.dir.join("goldens").join(&recipe.name).join(file)
    }

    pub fn run_recipe(&self, recipe: &Recipe, regenerate: bool) -> Result<RecipeReport> {
        let t = std::time::Instant::now();
        let out = self.work_dir.join(&recipe.name);
        if out.exists() {
            std::fs::remove_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        }
        self.execute(&recipe.command, &out)?;

        let mut problems = Vec::new();
        let mut missing = Vec::new();
        let mut written = Vec::new();
        for g in &recipe.goldens {
            let mut produced = read(&out.join(&g.file))?;
            if g.headerless {
                produced = with_header(&produced);
            }
            let golden_path = self.golden_path(recipe, &g.file);
            if regenerate {
                let dir = golden_path.parent().expect("golden paths have a parent");
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                let rounded = round_csv(&produced);
                let body = if g.headerless {
                    rounded.split_once('\n').map_or("", |x| x.1).to_string()
                } else {
                    rounded
                };
                write_atomic(&golden_path, body.as_bytes())?;
                written.push(golden_path.display().to_string());
                continue;
            }
            match std::fs::read_to_string(&golden_path) {
                Ok(golden) => {
                    let golden = if g.headerless { with_header(&golden) } else { golden };
                    problems.extend(compare_csv(&g.file, &produced, &golden, &g.tolerances, &g.ignore))
                }
                Err(_) => missing.push(golden_path.display().to_string()),
            }
        }
        for c in &recipe.checks {
            problems.extend(self.check(c, recipe, &out)?);
        }
        let status = if !problems.is_empty() {
            Status::Fail(problems)
        } else if !missing.is_empty() {
            Status::MissingGolden(missing)
        } else if regenerate {
            Status::Regenerated(written)
        } else {
            Status::Pass
        };
        Ok(RecipeReport {
            name: recipe.name.clone(),
            criterion: recipe.criterion,
            status,
            seconds: t.elapsed().as_secs_f64(),
        })
    }

    fn load_config(&self, path: &str, out: &Path) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.dir.join(path))?;
        cfg.output_dir = out.to_path_buf();
        cfg.cache_dir = Some(self.work_dir.join("cache"));
        Ok(cfg)
    }

    fn config_of(&self, args: &[String], out: &Path) -> Result<ExperimentConfig> {
        let path = flag(args, "--config")?;
        self.load_config(path, out)
    }

    /// Run one CLI invocation in-process with outputs under `out`.
    pub fn execute(&self, args: &[String], out: &Path) -> Result<commands::Outcome> {
        let sub = args.first().ok_or_else(|| Error::Config("empty recipe command".into()))?;
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let outcome = match sub.as_str() {
            "solve" => commands::solve(&self.config_of(args, out)?)?,
            "train" => commands::train(&self.config_of(args, out)?)?,
            "phase-diagram" => commands::phase_diagram(&self.config_of(args, out)?)?,
            "variance-report" => commands::variance_report(&self.config_of(args, out)?)?,
            "export-gram" => commands::export_gram(&self.config_of(args, out)?)?,
            "predict" => {
                let model = flag(args, "--model")?;
                commands::predict(&self.config_of(args, out)?, &out.join(model))?
            }
            "genbound" => {
                let path = self.dir.join(flag(args, "--config")?);
                let text = std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                let cfg: StudyConfig = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
                commands::genbound(&cfg, out)?.0
            }
            other => return Err(Error::Config(format!("unsupported recipe command {other}"))),
        };
        if outcome.unconverged > 0 {
            return Err(Error::Numerical(format!("{} unconverged solves", outcome.unconverged)));
        }
        Ok(outcome)
    }

    fn check(&self, check: &Check, recipe: &Recipe, out: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        match check {
            Check::RerunIdentical => {
                let again = out.with_file_name(format!("{}-rerun", recipe.name));
                if again.exists() {
                    std::fs::remove_dir_all(&again).map_err(|e| Error::io(&again, e))?;
                }
                let outcome = self.execute(&recipe.command, &again)?;
                for p in outcome.outputs {
                    let name = p.file_name().expect("outputs are files").to_owned();
                    if name == "manifest.json" {
                        continue;
                    }
                    if std::fs::read(out.join(&name)).ok() != std::fs::read(&p).ok() {
                        bad.push(format!("{} differs between identical runs", name.to_string_lossy()));
                    }
                }
            }
            Check::ColumnMatches { command, file, column } => {
                let other = out.with_file_name(format!("{}-reference", recipe.name));
                self.execute(command, &other)?;
                let a = column_of(&read(&out.join(file))?, column)?;
                let b = column_of(&read(&other.join(file))?, column)?;
                if a.len() != b.len() {
                    bad.push(format!("{file}: {} vs {} rows", a.len(), b.len()));
                }
                for (i, (x, y)) in a.iter().zip(&b).enumerate() {
                    if x != y {
                        bad.push(format!("{file} row {i} {column}: {x} vs reference {y}"));
                    }
                }
            }
            Check::DenseEnergies { rel_tol } => {
                let cfg = self.config_of(&recipe.command, out)?;
                let text = read(&out.join("energies.csv"))?;
                let (header, rows) = parse_csv(&text)?;
                let col = |n: &str| header.iter().position(|h| h == n).ok_or_else(|| Error::format("energies.csv", n.to_string()));
                let (ck, ch, cs, ce) = (col("k")?, col("h")?, col("state")?, col("energy")?);
                for r in rows.iter().filter(|r| r[cs] == "0") {
                    let k: f64 = parse_num(&r[ck])?;
                    let h: f64 = parse_num(&r[ch])?;
                    let e: f64 = parse_num(&r[ce])?;
                    let exact = lowest_eigenpairs_of(&pauli_sum(&model_params(cfg.model, cfg.n_sites, k, h))?, 1)?[0].energy;
                    let rel = (e - exact).abs() / exact.abs().max(1.0);
                    if rel > *rel_tol {
                        bad.push(format!("({k}, {h}): DMRG {e:.12e} vs exact {exact:.12e} (rel {rel:.2e})"));
                    }
                }
            }
            Check::FarAccuracy { min, above_majority } => {
                let text = read(&out.join("phase_grid.csv"))?;
                let (acc, majority) = far_accuracy(&text)?;
                if !(acc >= *min) {
                    bad.push(format!("far-from-boundary accuracy {acc:.4} < {min}"));
                }
                if *above_majority && !(acc > majority) {
                    bad.push(format!("accuracy {acc:.4} does not beat the majority baseline {majority:.4}"));
                }
            }
            Check::HoelderChain => {
                let text = read(&out.join("variance_report.csv"))?;
                let var = column_of(&text, "variance")?;
                let sa = column_of(&text, "sum_alpha_sq")?;
                let cns = column_of(&text, "c_ns_sq")?;
                for i in 0..var.len() {
                    let (v, s, c) = (parse_num(&var[i])?, parse_num(&sa[i])?, parse_num(&cns[i])?);
                    if !(v <= s && s <= c) {
                        bad.push(format!("row {i}: {v:.3e} <= {s:.3e} <= {c:.3e} violated"));
                    }
                }
            }
            Check::TwoSigmaCoverage { seeds, min_rate } => {
                let text = read(&out.join("variance_report.csv"))?;
                let margins = column_of(&text, "margin")?;
                let vars = column_of(&text, "variance")?;
                let shots = column_of(&text, "shots_for_2sigma")?;
                let (mut hits, mut total) = (0u64, 0u64);
                for i in 0..margins.len() {
                    if shots[i].is_empty() {
                        continue;
                    }
                    let (m, v, n) = (parse_num(&margins[i])?, parse_num(&vars[i])?, parse_num(&shots[i])? as u64);
                    for s in 0..*seeds {
                        let est = simulate_shots(m, v, n, derive_seed_tagged(i as u64, "coverage", s))?;
                        hits += u64::from((est.mean >= 0.0) == (m >= 0.0));
                        total += 1;
                    }
                }
                let rate = hits as f64 / total.max(1) as f64;
                if total == 0 || rate < *min_rate {
                    bad.push(format!("two-sigma coverage {rate:.4} < {min_rate} over {total} trials"));
                }
            }
            Check::Probes { points } => {
                let cfg = self.config_of(&recipe.command, &out.join("probes"))?;
                let mut p = Pipeline::new(cfg.clone())?;
                let set = p.training_set()?;
                let trained = p.train(&set)?;
                let pts: Vec<(f64, f64)> = points.iter().map(|q| (q.0, q.1)).collect();
                let (classified, _) = p.classify_points("probe", &pts, &set, &trained)?;
                for (c, (k, h, want)) in classified.iter().zip(points) {
                    let want: PhaseLabel = want.parse()?;
                    if c.label != want {
                        bad.push(format!("probe ({k}, {h}): predicted {} expected {}", c.label, want));
                    }
                }
            }
            Check::ScalingBounded {
                max_ratio_growth,
                doubling_tol,
            } => {
                bad.extend(scaling_problems(&read(&out.join("genbound.csv"))?, *max_ratio_growth, *doubling_tol)?);
            }
        }
        Ok(bad)
    }
}

fn flag<'a>(args: &'a [String], name: &str) -> Result<&'a str> {
    args.iter()
        .position(|a| a == name)
        .and_then(|i| args.get(i + 1))
        .map(String::as_str)
        .ok_or_else(|| Error::Config(format!("recipe command lacks {name}")))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_num(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::format("csv cell", format!("{s:?} is not a number")))
}

pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::format("csv", "empty file"))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, l) in lines.enumerate() {
        let row: Vec<String> = l.split(',').map(str::to_string).collect();
        if row.len() != header.len() {
            return Err(Error::format("csv", format!("row {i} has {} cells, header {}", row.len(), header.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

fn column_of(text: &str, column: &str) -> Result<Vec<String>> {
    let (header, rows) = parse_csv(text)?;
    let c = header
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::format("csv", format!("no column {column}")))?;
    Ok(rows.into_iter().map(|mut r| r.swap_remove(c)).collect())
}

fn with_header(text: &str) -> String {
    let width = text.lines().next().map_or(0, |l| l.split(',').count());
    let header: Vec<String> = (0..width).map(|i| format!("c{i}")).collect();
    format!("{}\n{text}", header.join(","))
}

fn is_float_cell(s: &str) -> bool {
    s.parse::<f64>().is_ok() && (s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN"))
}

/// Numeric cells rewritten with 12 significant digits.
pub fn round_csv(text: &str) -> String {
    let mut out = String::new();
    for (i, line) in text.lines().enumerate() {
        let cells: Vec<String> = line
            .split(',')
            .map(|c| {
                if i > 0 && is_float_cell(c) {
                    format!("{:.11e}", c.parse::<f64>().expect("checked"))
                } else {
                    c.to_string()
                }
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Per-cell differences between a produced CSV and its golden.
pub fn compare_csv(
    name: &str,
    produced: &str,
    golden: &str,
    tolerances: &BTreeMap<String, f64>,
    ignore: &[String],
) -> Vec<String> {
    let (ph, prows) = match parse_csv(produced) {
        Ok(x) => x,
        Err(e) => return vec![format!("{name}: {e}")],
    };
    let (gh, grows) = match parse_csv(golden) {
        Ok(x) => x,
        Err(e) => return vec![format!("{name} golden: {e}")],
    };
    if ph != gh {
        return vec![format!("{name}: header {} differs from golden {}", ph.join(","), gh.join(","))];
    }
    if prows.len() != grows.len() {
        return vec![format!("{name}: {} rows, golden has {}", prows.len(), grows.len())];
    }
    let mut diffs = Vec::new();
    for (r, (p, g)) in prows.iter().zip(&grows).enumerate() {
        for (c, col) in ph.iter().enumerate() {
            if ignore.contains(col) {
                continue;
            }
            let (a, b) = (&p[c], &g[c]);
            let ok = match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => {
                    let tol = tolerances.get(col).copied().unwrap_or(DEFAULT_REL_TOL * y.abs().max(1.0));
                    (x - y).abs() <= tol || (x.is_nan() && y.is_nan())
                }
                _ => a == b,
            };
            if !ok {
                if diffs.len() == MAX_DIFFS {
                    diffs.push(format!("{name}: further differences omitted"));
                    return diffs;
                }
                let tol = tolerances.get(col).map_or_else(|| "default".to_string(), |t| format!("{t:e}"));
                diffs.push(format!("{name} row {r} column {col}: got {a}, golden {b} (tol {tol})"));
            }
        }
    }
    diffs
}

/// `(accuracy, majority share)` over far-from-boundary rows of a phase grid.
pub fn far_accuracy(text: &str) -> Result<(f64, f64)> {
    let truth = column_of(text, "true_label")?;
    let pred = column_of(text, "predicted_label")?;
    let far = column_of(text, "far_from_boundary")?;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let (mut n, mut hit) = (0usize, 0usize);
    for i in 0..truth.len() {
        if far[i] != "true" {
            continue;
        }
        n += 1;
        hit += usize::from(truth[i] == pred[i]);
        *counts.entry(truth[i].as_str()).or_default() += 1;
    }
    let n = n.max(1) as f64;
    Ok((hit as f64 / n, counts.values().copied().max().unwrap_or(0) as f64 / n))
}

/// Problems with a `genbound.csv` table: non-positive or non-increasing
/// `B^2`, growth of `B^2 / N` beyond `max_ratio_growth` relative to the
/// smallest `N`, or a doubling change at or above `doubling_tol`.
pub fn scaling_problems(text: &str, max_ratio_growth: f64, doubling_tol: f64) -> Result<Vec<String>> {
    let (header, rows) = parse_csv(text)?;
    let col = |n: &str| header.iter().position(|h| h == n).ok_or_else(|| Error::format("genbound.csv", n.to_string()));
    let (cn, cs, cb, cd) = (col("N")?, col("sector")?, col("B_squared")?, col("doubling_change")?);
    let mut by_sector: BTreeMap<String, Vec<(f64, f64, f64)>> = BTreeMap::new();
    for r in &rows {
        by_sector
            .entry(r[cs].clone())
            .or_default()
            .push((parse_num(&r[cn])?, parse_num(&r[cb])?, parse_num(&r[cd])?));
    }
    let mut bad = Vec::new();
    for (sector, mut series) in by_sector {
        series.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(n, b2, change) in &series {
            if !(b2 > 0.0) {
                bad.push(format!("{sector} N={n}: B^2 = {b2} is not positive"));
            }
            if !(change < doubling_tol) {
                bad.push(format!("{sector} N={n}: doubling m changes B by {:.2}% (limit {:.2}%)", 100.0 * change, 100.0 * doubling_tol));
            }
        }
        for w in series.windows(2) {
            if !(w[1].1 > w[0].1) {
                bad.push(format!("{sector}: B^2 does not increase from N={} to N={}", w[0].0, w[1].0));
            }
        }
        let base = series[0].1 / series[0].0;
        let growth = series.iter().map(|s| s.1 / s.0 / base).fold(0.0, f64::max);
        if growth > max_ratio_growth {
            bad.push(format!("{sector}: B^2/N grows by {growth:.3} (limit {max_ratio_growth})"));
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: &str = "k,h,label,value\n0.1,0.2,Paramagnetic,1.00000000000e0\n0.3,0.4,Ferromagnetic,-2.50000000000e-1\n";

    #[test]
    fn identical_tables_pass() {
        assert!(compare_csv("t.csv", GOLDEN, GOLDEN, &BTreeMap::new(), &[]).is_empty());
    }

    #[test]
    fn perturbation_reports_the_column() {
        let bad = GOLDEN.replace("-2.50000000000e-1", "-2.50001e-1");
        let diffs = compare_csv("t.csv", &bad, GOLDEN, &BTreeMap::new(), &[]);
        assert_eq!(diffs.len(), 1);
        assert!(diffs[0].contains("row 1 column value"), "{}", diffs[0]);
        let loose = BTreeMap::from([("value".to_string(), 1e-3)]);
        assert!(compare_csv("t.csv", &bad, GOLDEN, &loose, &[]).is_empty());
        assert!(compare_csv("t.csv", &bad, GOLDEN, &BTreeMap::new(), &["value".into()]).is_empty());
    }

    #[test]
    fn label_changes_always_fail() {
        let bad = GOLDEN.replace("Ferromagnetic", "Paramagnetic");
        assert_eq!(compare_csv("t.csv", &bad, GOLDEN, &BTreeMap::new(), &[]).len(), 1);
    }

    #[test]
    fn rounding_keeps_twelve_digits() {
        let r = round_csv("a,b,n\n0.12345678901234567,x,3\n");
        assert_eq!(r, "a,b,n\n1.23456789012e-1,x,3\n");
        assert!(compare_csv("t", "a,b,n\n0.12345678901234567,x,3\n", &r, &BTreeMap::new(), &[]).is_empty());
    }

    #[test]
    fn scaling_table_checks() {
        let good = "N,sector,B_squared,doubling_change\n8,even,2.0,0.01\n12,even,2.5,0.01\n";
        assert!(scaling_problems(good, 1.25, 0.02).unwrap().is_empty());
        let flat = "N,sector,B_squared,doubling_change\n8,even,2.0,0.05\n12,even,1.9,0.01\n";
        assert_eq!(scaling_problems(flat, 1.25, 0.02).unwrap().len(), 2);
    }

    #[test]
    fn far_accuracy_counts_only_far_rows() {
        let t = "true_label,predicted_label,far_from_boundary\nA,A,true\nA,B,false\nB,A,true\nA,A,true\n";
        let (acc, maj) = far_accuracy(t).unwrap();
        assert!((acc - 2.0 / 3.0).abs() < 1e-12 && (maj - 2.0 / 3.0).abs() < 1e-12);
    }
}
