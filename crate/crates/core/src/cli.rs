//! Command-line front end: `generate | fit | sample | metrics | strength`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{error_vs_function, error_vs_points, grid_sample, strength_field, ErrorSummary, Grid};
use crate::datagen::{
    default_void_error_box, sample_quadrant_gradient, sample_voids, sample_with_hole, Disk,
    Field, Hole, HoleSpec, QuadrantSpec, VoidsSpec,
};
use crate::error::{Error, Result};
use crate::fitting::{fit, FitConfig, SolverKind};
use crate::io;
use crate::splinecore::DomainBox;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "SPLINEREG_THREADS";

#[derive(Debug, Parser)]
#[command(name = "splinereg", version, about = "Adaptive-regularized tensor B-spline fitting of scattered data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic point cloud as CSV.
    Generate(GenerateArgs),
    /// Fit a model to a point-cloud CSV.
    Fit(FitArgs),
    /// Evaluate a model on a regular grid.
    Sample(SampleArgs),
    /// Compare a model against an analytic field or reference samples.
    Metrics(MetricsArgs),
    /// Evaluate a regularization-strength field from a fit report.
    Strength(StrengthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Layout {
    /// Uniform samples over the domain.
    Uniform,
    /// Four thinned disks.
    Voids,
    /// Quadrant density gradient with an empty top-right corner.
    Quadrant,
    /// Central disk hole (2D).
    Hole,
    /// Hexagonal-prism interior (3D).
    HexPrism,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub layout: Layout,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Acceptance probability inside voids.
    #[arg(long, default_value_t = 1.0)]
    pub sparsity: f64,
    /// Quadrant shares (+,+),(-,+),(-,-),(+,-).
    #[arg(long, value_delimiter = ',', num_args = 4)]
    pub shares: Option<Vec<f64>>,
    /// Side of the empty square at the top-right corner (quadrant layout).
    #[arg(long)]
    pub empty_corner: Option<f64>,
    /// Hole radius (hole layout).
    #[arg(long)]
    pub radius: Option<f64>,
    /// Analytic field to sample; defaults to the layout's usual field.
    #[arg(long)]
    pub field: Option<String>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SolverArg {
    Auto,
    Direct,
    Cg,
    Qr,
}

impl From<SolverArg> for SolverKind {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Auto => SolverKind::Auto,
            SolverArg::Direct => SolverKind::Direct,
            SolverArg::Cg => SolverKind::Iterative,
            SolverArg::Qr => SolverKind::Qr,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Degree used in every dimension.
    #[arg(long, default_value_t = 3)]
    pub degree: usize,
    /// Per-dimension degrees; overrides --degree.
    #[arg(long, value_delimiter = ',')]
    pub degrees: Option<Vec<usize>>,
    /// Control points per dimension, e.g. 80,80.
    #[arg(long, value_delimiter = ',', required = true)]
    pub controls: Vec<usize>,
    /// Regularization threshold s*.
    #[arg(long, default_value_t = 1.0)]
    pub sstar: f64,
    /// Disable both derivative penalties.
    #[arg(long)]
    pub no_reg: bool,
    #[arg(long)]
    pub no_first_deriv: bool,
    #[arg(long)]
    pub no_second_deriv: bool,
    /// Same second-derivative strength for every control point (diagnostic).
    #[arg(long)]
    pub uniform_lambda2: Option<f64>,
    #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
    pub solver: SolverArg,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_iter: usize,
    /// Report the condition number of the stacked system.
    #[arg(long)]
    pub cond: bool,
    #[arg(long, short)]
    pub model: PathBuf,
    #[arg(long, short)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    /// Lower corner of a closed region, e.g. -3,-3.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "region_max")]
    pub region_min: Option<Vec<f64>>,
    /// Upper corner of the region.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "region_min")]
    pub region_max: Option<Vec<f64>>,
    /// Use the default box around the two lower voids.
    #[arg(long, conflicts_with_all = ["region_min", "region_max"])]
    pub void_box: bool,
}

impl RegionArgs {
    fn region(&self) -> Result<Option<DomainBox>> {
        if self.void_box {
            return Ok(Some(default_void_error_box()));
        }
        match (&self.region_min, &self.region_max) {
            (Some(lo), Some(hi)) => DomainBox::new(lo.clone(), hi.clone())
                .map(Some)
                .map_err(|e| Error::InvalidConfig(format!("bad region: {e}"))),
            _ => Ok(None),
        }
    }
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub resolution: Vec<usize>,
    #[command(flatten)]
    pub region: RegionArgs,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Also write a 16-bit PGM of the first value component (2D only).
    #[arg(long)]
    pub pgm: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    /// Analytic field name (polysinc, smooth, pins) or a point CSV.
    #[arg(long)]
    pub reference: String,
    /// Lattice used for analytic references.
    #[arg(long, value_delimiter = ',')]
    pub resolution: Option<Vec<usize>>,
    #[command(flatten)]
    pub region: RegionArgs,
}

#[derive(Debug, Args)]
pub struct StrengthArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    #[arg(long, short)]
    pub report: PathBuf,
    /// Derivative order of the strengths (1 or 2).
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pub resolution: Vec<usize>,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub pgm: Option<PathBuf>,
}

/// Exit status for an error: 1 usage, 2 data or parse, 3 numeric.
pub fn exit_code(e: &Error) -> u8 {
    if e.is_numeric() {
        3
    } else if matches!(e, Error::InvalidConfig(_)) {
        1
    } else {
        2
    }
}

/// Parses `args` (including the program name), runs the command and maps the outcome to
/// an exit code. Messages go to the given writers.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return ExitCode::from(code);
        }
    };
    configure_threads();
    match run(cli.command, out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // Fails only if the pool already exists, in which case the first setting stands.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

pub fn run(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Generate(a) => generate(a, out),
        Command::Fit(a) => fit_cmd(a, out),
        Command::Sample(a) => sample(a, out),
        Command::Metrics(a) => metrics(a, out),
        Command::Strength(a) => strength(a, out),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

fn generate(a: GenerateArgs, out: &mut dyn Write) -> Result<()> {
    let field = a.field.as_deref().map(str::parse::<Field>).transpose()?;
    let cloud = match a.layout {
        Layout::Voids | Layout::Uniform => {
            let mut spec = VoidsSpec {
                seed: a.seed,
                sparsity: a.sparsity,
                ..VoidsSpec::default()
            };
            if matches!(a.layout, Layout::Uniform) {
                spec.voids.clear();
                spec.sparsity = 1.0;
            }
            if let Some(m) = a.points {
                spec.points = m;
            }
            if let Some(f) = field {
                spec.field = f;
            }
            sample_voids(&spec)?
        }
        Layout::Quadrant => {
            let mut spec = QuadrantSpec {
                seed: a.seed,
                ..QuadrantSpec::default()
            };
            if let Some(m) = a.points {
                spec.points = m;
            }
            if let Some(s) = a.shares {
                spec.shares = [s[0], s[1], s[2], s[3]];
            }
            if let Some(c) = a.empty_corner {
                spec.empty_corner = c;
            }
            if let Some(f) = field {
                spec.field = f;
            }
            sample_quadrant_gradient(&spec)?
        }
        Layout::Hole | Layout::HexPrism => {
            let mut spec = if matches!(a.layout, Layout::Hole) {
                HoleSpec::disk_default()
            } else {
                HoleSpec::hex_prism_default()
            };
            spec.seed = a.seed;
            if let Some(m) = a.points {
                spec.points = m;
            }
            if let Some(r) = a.radius {
                spec.hole = match spec.hole {
                    Hole::Disk(d) => Hole::Disk(Disk { radius: r, ..d }),
                    Hole::OutsideHexPrism { center, .. } => Hole::OutsideHexPrism {
                        center,
                        circumradius: r,
                    },
                    Hole::None => Hole::None,
                };
            }
            if let Some(f) = field {
                spec.field = f;
            }
            sample_with_hole(&spec)?
        }
    };
    io::write_cloud(create(&a.out)?, &cloud)?;
    let bx = cloud.bounding_box();
    writeln!(out, "points={}", cloud.len())?;
    writeln!(out, "bbox_min={}", fmt_list(bx.lower()))?;
    writeln!(out, "bbox_max={}", fmt_list(bx.upper()))?;
    Ok(())
}

fn fit_cmd(a: FitArgs, out: &mut dyn Write) -> Result<()> {
    let cloud = io::read_cloud(open(&a.input)?)?;
    let mut cfg = FitConfig::new(a.degree, a.controls.clone()).with_s_star(a.sstar);
    if let Some(d) = a.degrees {
        cfg.degrees = d;
    }
    cfg.use_first_deriv = !a.no_first_deriv;
    cfg.use_second_deriv = !a.no_second_deriv;
    if a.no_reg {
        cfg = cfg.unregularized();
    }
    cfg.uniform_lambda2 = a.uniform_lambda2;
    cfg.solver = a.solver.into();
    cfg.iterative_tol = a.tol;
    cfg.iterative_max_iter = a.max_iter;
    cfg.compute_condition = a.cond;
    let (model, report) = fit(&cloud, &cfg)?;
    io::write_model(create(&a.model)?, &model)?;
    if let Some(p) = &a.report {
        io::write_report(create(p)?, &report)?;
    }
    writeln!(out, "points={}", cloud.len())?;
    writeln!(out, "control_points={}", report.col_sums.len())?;
    writeln!(out, "solver={}", report.solver.name())?;
    writeln!(out, "residual_l2={:?}", report.residual_l2)?;
    writeln!(out, "empty_columns={}", report.empty_columns().count())?;
    if let Some(c) = report.stacked_condition {
        writeln!(out, "condition={}", if c.singular { "inf".into() } else { format!("{:?}", c.value()) })?;
    }
    Ok(())
}

fn filter_grid(grid: Grid, region: Option<&DomainBox>) -> Grid {
    let Some(r) = region else { return grid };
    let keep: Vec<usize> = (0..grid.coords.nrows())
        .filter(|&i| r.contains(&grid.coords.row(i).to_vec()))
        .collect();
    Grid {
        resolution: grid.resolution,
        coords: grid.coords.select(ndarray::Axis(0), &keep),
        values: grid.values.select(ndarray::Axis(0), &keep),
    }
}

fn sample(a: SampleArgs, out: &mut dyn Write) -> Result<()> {
    let model = io::read_model(open(&a.model)?)?;
    let grid = grid_sample(&model, &a.resolution)?;
    if let Some(p) = &a.pgm {
        io::write_pgm(create(p)?, &grid, 0)?;
    }
    let region = a.region.region()?;
    let grid = filter_grid(grid, region.as_ref());
    if region.is_some() {
        io::write_table(create(&a.out)?, &grid.coords, &grid.values, &[])?;
    } else {
        io::write_grid(create(&a.out)?, &grid)?;
    }
    writeln!(out, "rows={}", grid.coords.nrows())?;
    Ok(())
}

fn print_summary(out: &mut dyn Write, s: &ErrorSummary) -> Result<()> {
    writeln!(out, "l2={:?}", s.l2)?;
    writeln!(out, "linf={:?}", s.linf)?;
    writeln!(out, "count={}", s.count)?;
    match &s.region {
        Some(r) => writeln!(out, "region={};{}", fmt_list(r.lower()), fmt_list(r.upper()))?,
        None => writeln!(out, "region=all")?,
    }
    Ok(())
}

fn metrics(a: MetricsArgs, out: &mut dyn Write) -> Result<()> {
    let model = io::read_model(open(&a.model)?)?;
    let region = a.region.region()?;
    let summary = match a.reference.parse::<Field>() {
        Ok(field) => {
            if field.dim() != model.domain_dim() {
                return Err(Error::InvalidConfig(format!(
                    "field {field} does not match a {}-dimensional model",
                    model.domain_dim()
                )));
            }
            let res = a.resolution.unwrap_or_else(|| vec![400; model.domain_dim()]);
            error_vs_function(&model, |x| field.eval(x), &res, region.as_ref())?
        }
        Err(_) if Path::new(&a.reference).is_file() => {
            let t = io::read_table(open(Path::new(&a.reference))?)?;
            error_vs_points(&model, t.coords.view(), t.values.view(), region.as_ref())?
        }
        Err(_) => {
            return Err(Error::InvalidConfig(format!(
                "reference '{}' is neither a known field nor a readable file",
                a.reference
            )))
        }
    };
    print_summary(out, &summary)
}

fn strength(a: StrengthArgs, out: &mut dyn Write) -> Result<()> {
    let model = io::read_model(open(&a.model)?)?;
    let report = io::read_report(open(&a.report)?)?;
    if a.order != 1 && a.order != 2 {
        return Err(Error::InvalidConfig(format!("order must be 1 or 2, got {}", a.order)));
    }
    let field = strength_field(&model, &report, a.order, &a.resolution)?;
    io::write_grid(create(&a.out)?, &field.grid)?;
    if let Some(p) = &a.pgm {
        io::write_pgm(create(p)?, &field.grid, 0)?;
    }
    let max = field.grid.values.iter().cloned().fold(0.0f64, f64::max);
    writeln!(out, "rows={}", field.grid.coords.nrows())?;
    writeln!(out, "max={max:?}")?;
    Ok(())
}

