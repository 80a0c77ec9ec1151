//! Command-line front end.
//!
//! Every output starts with a format version and the job configuration so
//! that results can be traced and reproduced byte for byte.

mod output;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::enumeration::{count, entry_bound, fit_exponents, geometric_grid, CountJob};
use crate::error::{Error, Result};
use crate::geometry::{invariants, DivisorChoice, LambdaSpec, PicClass, PlaceSet};
use crate::heights::{delta_indicator, global_height, local_cartan, GroupPoint, IntMatrix, Place};
use crate::local_integrals::{
    cell_volume, local_factor_closed, local_series, predicted_constant, ConstantOptions, QuadratureSpec,
};
use crate::root_data::{build_root_datum, CartanType, Family};

pub use output::{read_count_csv, write_count_csv, CountTable, FORMAT_VERSION};

#[derive(Debug, Parser)]
#[command(name = "wonderful", version, about = "Heights and integral points on wonderful compactifications")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a, b and the predicted leading constant as JSON.
    Predict(JobArgs),
    /// Count points of bounded height on a grid of bounds and write CSV.
    Count(JobArgs),
    /// Compare a count CSV against a prediction JSON.
    Compare(CompareArgs),
    /// Evaluate a local height integral at a finite place.
    LocalFactor(LocalFactorArgs),
    /// Volume of a double coset K t(a) K.
    CellVolume(CellVolumeArgs),
    /// Height and integrality of a single matrix.
    Height(HeightArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct JobArgs {
    /// TOML file with any of the job fields; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Cartan type, e.g. A1 or A2 (PGL_2, PGL_3).
    #[arg(long)]
    pub group: Option<String>,
    /// anticanonical, log-anticanonical, or coefficients such as 3,3.
    #[arg(long)]
    pub lambda: Option<String>,
    /// Boundary components in D: none, all (or full), or 1-based indices such as 1,2.
    #[arg(long)]
    pub divisor: Option<String>,
    /// Places in S, e.g. inf or inf,2,3.
    #[arg(long)]
    pub places: Option<String>,
    #[arg(long)]
    pub bmin: Option<f64>,
    #[arg(long)]
    pub bmax: Option<f64>,
    #[arg(long)]
    pub bpoints: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Refuse counts whose estimated number of candidate matrices exceeds this.
    #[arg(long)]
    pub budget_ops: Option<f64>,
    /// Override the search box (must be at least the completeness bound).
    #[arg(long)]
    pub entry_bound: Option<u64>,
    #[arg(long)]
    pub no_pruning: bool,
    /// Gauss–Legendre nodes per panel for archimedean integrals.
    #[arg(long)]
    pub quad_nodes: Option<usize>,
    /// Largest prime in the Euler product.
    #[arg(long)]
    pub p_max: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub group: Option<String>,
    pub lambda: Option<String>,
    pub divisor: Option<String>,
    pub places: Option<String>,
    pub bmin: Option<f64>,
    pub bmax: Option<f64>,
    pub bpoints: Option<usize>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub budget_ops: Option<f64>,
    pub entry_bound: Option<u64>,
    pub pruning: Option<bool>,
    pub quad_nodes: Option<usize>,
    pub p_max: Option<u64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    /// Fill unset fields from `other`.
    fn or(self, other: ExperimentConfig) -> Self {
        ExperimentConfig {
            group: self.group.or(other.group),
            lambda: self.lambda.or(other.lambda),
            divisor: self.divisor.or(other.divisor),
            places: self.places.or(other.places),
            bmin: self.bmin.or(other.bmin),
            bmax: self.bmax.or(other.bmax),
            bpoints: self.bpoints.or(other.bpoints),
            workers: self.workers.or(other.workers),
            out: self.out.or(other.out),
            budget_ops: self.budget_ops.or(other.budget_ops),
            entry_bound: self.entry_bound.or(other.entry_bound),
            pruning: self.pruning.or(other.pruning),
            quad_nodes: self.quad_nodes.or(other.quad_nodes),
            p_max: self.p_max.or(other.p_max),
        }
    }
}

impl From<&JobArgs> for ExperimentConfig {
    fn from(a: &JobArgs) -> Self {
        ExperimentConfig {
            group: a.group.clone(),
            lambda: a.lambda.clone(),
            divisor: a.divisor.clone(),
            places: a.places.clone(),
            bmin: a.bmin,
            bmax: a.bmax,
            bpoints: a.bpoints,
            workers: a.workers,
            out: a.out.clone(),
            budget_ops: a.budget_ops,
            entry_bound: a.entry_bound,
            pruning: a.no_pruning.then_some(false),
            quad_nodes: a.quad_nodes,
            p_max: a.p_max,
        }
    }
}

/// The scientific content of a job, echoed into every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobEcho {
    pub group: String,
    pub lambda: String,
    pub divisor: String,
    pub places: String,
    pub bmin: f64,
    pub bmax: f64,
    pub bpoints: usize,
}

impl JobEcho {
    /// Whether two outputs describe the same counting problem.
    pub fn same_problem(&self, other: &JobEcho) -> bool {
        (&self.group, &self.lambda, &self.divisor, &self.places)
            == (&other.group, &other.lambda, &other.divisor, &other.places)
    }
}

/// A fully resolved job.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub cartan: CartanType,
    pub lambda: PicClass,
    pub divisor: DivisorChoice,
    pub places: PlaceSet,
    pub grid: Vec<f64>,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub budget_ops: f64,
    pub entry_bound: Option<u64>,
    pub pruning: bool,
    pub constant: ConstantOptions,
    pub echo: JobEcho,
}

pub const DEFAULT_BUDGET_OPS: f64 = 2e10;

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

impl Experiment {
    pub fn from_args(args: &JobArgs) -> Result<Self> {
        let mut cfg = ExperimentConfig::from(args);
        if let Some(path) = &args.config {
            cfg = cfg.or(ExperimentConfig::load(path)?);
        }
        Experiment::from_config(cfg)
    }

    pub fn from_config(cfg: ExperimentConfig) -> Result<Self> {
        let cartan: CartanType = cfg.group.as_deref().unwrap_or("A1").parse()?;
        let rd = build_root_datum(cartan);
        let divisor = DivisorChoice::parse(cfg.divisor.as_deref().unwrap_or("none"), rd.rank())?;
        let spec: LambdaSpec = cfg.lambda.as_deref().unwrap_or("anticanonical").parse()?;
        let lambda = spec.resolve(&rd, &divisor)?;
        if !lambda.is_big() {
            return Err(Error::NotBig(lambda.to_string()));
        }
        let places: PlaceSet = cfg.places.as_deref().unwrap_or("inf").parse()?;
        let (bmin, bmax, bpoints) = (cfg.bmin.unwrap_or(10.0), cfg.bmax.unwrap_or(1e4), cfg.bpoints.unwrap_or(13));
        let grid = geometric_grid(bmin, bmax, bpoints)?;
        let workers = cfg.workers.unwrap_or_else(default_workers);
        if workers == 0 {
            return Err(Error::InvalidJob("workers must be positive".into()));
        }
        let mut constant = ConstantOptions::default();
        if let Some(nodes) = cfg.quad_nodes {
            constant.quadrature = QuadratureSpec { nodes, ..constant.quadrature };
        }
        if let Some(p) = cfg.p_max {
            constant.p_max = p;
        }
        let echo = JobEcho {
            group: cartan.to_string(),
            lambda: lambda.to_string(),
            divisor: divisor.to_string(),
            places: places.to_string(),
            bmin,
            bmax,
            bpoints,
        };
        Ok(Experiment {
            cartan,
            lambda,
            divisor,
            places,
            grid,
            workers,
            out: cfg.out,
            budget_ops: cfg.budget_ops.unwrap_or(DEFAULT_BUDGET_OPS),
            entry_bound: cfg.entry_bound,
            pruning: cfg.pruning.unwrap_or(true),
            constant,
            echo,
        })
    }

    /// Matrix size for type A groups.
    pub fn matrix_size(&self) -> Result<usize> {
        if self.cartan.family() != Family::A {
            return Err(Error::UnsupportedGroup(format!(
                "{} has no matrix model here; heights and counts need type A",
                self.cartan
            )));
        }
        Ok(self.cartan.rank() + 1)
    }

    pub fn count_job(&self) -> Result<CountJob> {
        let n = self.matrix_size()?;
        let mut job = CountJob::new(n, self.lambda.clone(), self.divisor.clone(), self.places.clone(), self.grid.clone())?;
        if let Some(m) = self.entry_bound {
            let required = entry_bound(n, &self.lambda, *self.grid.last().unwrap())?;
            if m < required {
                return Err(Error::IncompleteBound { given: m, required });
            }
            job.entry_bound = m;
        }
        job.pruning = self.pruning;
        Ok(job)
    }
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub counts: PathBuf,
    #[arg(long)]
    pub prediction: PathBuf,
    /// Allowed |fitted a - predicted a|.
    #[arg(long, default_value_t = 0.05)]
    pub tol_a: f64,
    /// Allowed |N / prediction - 1| over the top decade of the grid.
    #[arg(long, default_value_t = 0.05)]
    pub tol_ratio: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct LocalFactorArgs {
    #[arg(long, default_value = "A1")]
    pub group: String,
    #[arg(long)]
    pub p: u64,
    /// Evaluation point, one coordinate per simple root.
    #[arg(long)]
    pub s: String,
    #[arg(long, default_value = "none")]
    pub divisor: String,
    /// Largest Σa in the truncated series; chosen automatically when absent.
    #[arg(long)]
    pub cutoff: Option<u32>,
    /// Requested relative size of the truncation tail.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CellVolumeArgs {
    #[arg(long, default_value = "A1")]
    pub group: String,
    #[arg(long)]
    pub p: u64,
    /// Cartan coordinates, one per simple root, e.g. 1,0.
    #[arg(long)]
    pub a: String,
}

#[derive(Debug, Clone, Args)]
pub struct HeightArgs {
    /// Row-major integer matrix, rows separated by ';', e.g. "2,1;0,2".
    #[arg(long)]
    pub matrix: String,
    #[arg(long, default_value = "anticanonical")]
    pub lambda: String,
    #[arg(long, default_value = "none")]
    pub divisor: String,
    #[arg(long, default_value = "inf")]
    pub places: String,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| Error::Parse(format!("bad {what} entry {t:?}"))))
        .collect()
}

fn type_a_size(group: &str) -> Result<usize> {
    let c: CartanType = group.parse()?;
    if c.family() != Family::A {
        return Err(Error::UnsupportedGroup(format!("{c}: local factors need type A")));
    }
    Ok(c.rank() + 1)
}

fn emit(out: &Option<PathBuf>, stdout: &mut dyn Write, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct PredictionOutput<'a> {
    format_version: u32,
    config: &'a JobEcho,
    a: String,
    a_lambda: Vec<usize>,
    r_lambda: usize,
    d_lambda: usize,
    b: usize,
    constant: Option<crate::local_integrals::ConstantReport>,
    constant_status: String,
}

/// Prediction JSON as read back by `compare`.
#[derive(Debug, Deserialize)]
pub struct PredictionInput {
    pub format_version: u32,
    pub config: JobEcho,
    pub a: String,
    pub b: usize,
    pub constant: Option<PredictionConstant>,
}

#[derive(Debug, Deserialize)]
pub struct PredictionConstant {
    pub c_predicted: f64,
}

fn rational_f64(s: &str) -> Result<f64> {
    let (n, d) = s.split_once('/').unwrap_or((s, "1"));
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad rational {s:?}")));
    Ok(parse(n)? / parse(d)?)
}

pub fn cmd_predict(args: &JobArgs, stdout: &mut dyn Write) -> Result<()> {
    let exp = Experiment::from_args(args)?;
    let rd = build_root_datum(exp.cartan);
    let inv = invariants(&rd, &exp.lambda, &exp.divisor, &exp.places)?;
    let (constant, status) = match exp.matrix_size() {
        Ok(n) => (Some(predicted_constant(n, &exp.lambda, &exp.divisor, &exp.places, &exp.constant)?), "available".into()),
        Err(e) => (None, format!("constant unavailable: {e}")),
    };
    let out = PredictionOutput {
        format_version: FORMAT_VERSION,
        config: &exp.echo,
        a: inv.a.to_string(),
        a_lambda: inv.a_lambda.iter().map(|i| i + 1).collect(),
        r_lambda: inv.r_lambda,
        d_lambda: inv.d_lambda,
        b: inv.b,
        constant,
        constant_status: status,
    };
    let text = serde_json::to_string_pretty(&out).map_err(|e| Error::Io(e.to_string()))? + "\n";
    emit(&exp.out, stdout, &text)
}

pub fn cmd_count(args: &JobArgs, stdout: &mut dyn Write) -> Result<()> {
    let exp = Experiment::from_args(args)?;
    let job = exp.count_job()?;
    let estimate = job.estimated_candidates();
    if estimate > exp.budget_ops {
        return Err(Error::Budget { estimate, budget: exp.budget_ops });
    }
    let result = count(&job, exp.workers)?;
    eprintln!(
        "counted {} candidates with {} workers in {:.2}s",
        result.candidates, result.workers, result.wall_time_secs
    );
    let rd = build_root_datum(exp.cartan);
    let inv = invariants(&rd, &exp.lambda, &exp.divisor, &exp.places)?;
    let (pa, pb) = (inv.a_f64(), inv.b as f64);
    let points: Vec<(f64, f64)> = result.rows.iter().map(|r| (r.b, r.integral as f64)).collect();
    let fitted = fit_exponents(&points, pa, pb).ok();
    let table = CountTable { echo: exp.echo.clone(), rows: result.rows, predicted: Some((pa, pb)), fitted };
    emit(&exp.out, stdout, &write_count_csv(&table)?)
}

pub fn cmd_compare(args: &CompareArgs, stdout: &mut dyn Write) -> Result<()> {
    let table = read_count_csv(&fs::read_to_string(&args.counts)?)?;
    let pred: PredictionInput = serde_json::from_str(&fs::read_to_string(&args.prediction)?)
        .map_err(|e| Error::Parse(format!("{}: {e}", args.prediction.display())))?;
    if !table.echo.same_problem(&pred.config) {
        return Err(Error::Mismatch(format!(
            "counts are for {:?} but the prediction is for {:?}",
            table.echo, pred.config
        )));
    }
    let c = pred
        .constant
        .as_ref()
        .ok_or_else(|| Error::Mismatch("prediction has no constant".into()))?
        .c_predicted;
    let a = rational_f64(&pred.a)?;
    let b = pred.b;
    let predict = |x: f64| c * x.powf(a) * x.ln().powi(b as i32 - 1);
    let top = table.rows.last().map(|r| r.b).ok_or_else(|| Error::DegenerateGrid("no rows".into()))?;
    let mut text = format!("# format_version={FORMAT_VERSION}\n# config={}\nB,N,predicted,ratio\n", output::echo_json(&table.echo)?);
    let mut ratio_ok = true;
    for r in &table.rows {
        let p = predict(r.b);
        let ratio = r.integral as f64 / p;
        if r.b >= top / 10.0 * (1.0 - 1e-12) && (ratio - 1.0).abs() > args.tol_ratio {
            ratio_ok = false;
        }
        text += &format!("{},{},{},{}\n", r.b, r.integral, p, ratio);
    }
    let points: Vec<(f64, f64)> = table.rows.iter().map(|r| (r.b, r.integral as f64)).collect();
    let fit = fit_exponents(&points, a, b as f64);
    let exponent_ok = fit.as_ref().map(|f| (f.a - a).abs() <= args.tol_a).unwrap_or(false);
    let fmt_fit = |f: &Result<crate::enumeration::FitResult>, which: fn(&crate::enumeration::FitResult) -> f64| {
        f.as_ref().map(|f| which(f).to_string()).unwrap_or_else(|_| ".".into())
    };
    text += &format!(
        "# predicted_a={a} predicted_b={b} fitted_a={} fitted_b={}\n",
        fmt_fit(&fit, |f| f.a),
        fmt_fit(&fit, |f| f.b)
    );
    let word = |ok: bool| if ok { "pass" } else { "fail" };
    text += &format!(
        "# ratio_check={} exponent_check={} result={}\n",
        word(ratio_ok),
        word(exponent_ok),
        word(ratio_ok && exponent_ok)
    );
    emit(&args.out, stdout, &text)
}

pub fn cmd_local_factor(args: &LocalFactorArgs, stdout: &mut dyn Write) -> Result<()> {
    let n = type_a_size(&args.group)?;
    let s: Vec<f64> = parse_list(&args.s, "s")?;
    let d = DivisorChoice::parse(&args.divisor, n - 1)?;
    let series = local_series(n, args.p, &s, &d, args.cutoff, args.tol)?;
    let closed = local_factor_closed(n, args.p, &s, &d, true)?;
    let text = format!(
        "# format_version={FORMAT_VERSION}\n# config={}\np,cutoff,J_p,f_p,tail,J_p_closed_form,f_p_closed_form\n{},{},{},{},{},{},{}\n",
        serde_json::json!({"group": args.group, "s": s, "divisor": d.to_string(), "tol": args.tol}),
        args.p,
        series.cutoff,
        series.value,
        series.regularized,
        series.tail,
        closed.value,
        closed.regularized
    );
    emit(&args.out, stdout, &text)
}

pub fn cmd_cell_volume(args: &CellVolumeArgs, stdout: &mut dyn Write) -> Result<()> {
    let n = type_a_size(&args.group)?;
    let a: Vec<u32> = parse_list(&args.a, "a")?;
    let v = cell_volume(n, args.p, &a)?;
    writeln!(stdout, "{v}")?;
    Ok(())
}

#[derive(Serialize)]
struct HeightOutput {
    matrix: String,
    determinant: String,
    lambda: String,
    local: Vec<crate::heights::LocalCartanData>,
    height: crate::heights::HeightValue,
    integral: bool,
}

pub fn cmd_height(args: &HeightArgs, stdout: &mut dyn Write) -> Result<()> {
    let m: IntMatrix = args.matrix.parse()?;
    let point = GroupPoint::new(m)?;
    let n = point.n();
    let rd = build_root_datum(CartanType::pgl(n)?);
    let d = DivisorChoice::parse(&args.divisor, n - 1)?;
    let lambda = args.lambda.parse::<LambdaSpec>()?.resolve(&rd, &d)?;
    let places: PlaceSet = args.places.parse()?;
    let mut local = vec![local_cartan(&point, Place::Infinity)?];
    for p in point.bad_primes() {
        local.push(local_cartan(&point, Place::Prime(p))?);
    }
    let out = HeightOutput {
        matrix: point.matrix().to_string(),
        determinant: point.det().to_string(),
        lambda: lambda.to_string(),
        local,
        height: global_height(&point, &lambda)?,
        integral: delta_indicator(&point, &d, &places)?,
    };
    let text = serde_json::to_string_pretty(&out).map_err(|e| Error::Io(e.to_string()))? + "\n";
    stdout.write_all(text.as_bytes())?;
    Ok(())
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Predict(a) => cmd_predict(a, stdout),
        Command::Count(a) => cmd_count(a, stdout),
        Command::Compare(a) => cmd_compare(a, stdout),
        Command::LocalFactor(a) => cmd_local_factor(a, stdout),
        Command::CellVolume(a) => cmd_cell_volume(a, stdout),
        Command::Height(a) => cmd_height(a, stdout),
    }
}

/// Parse arguments, run, and map failures to exit codes.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = write!(stderr, "{e}");
            return code;
        }
    };
    match run(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
