//! Command-line driver for the qcmap solver.
//!
//! Subcommands: `solve`, `verify`, `table`, `plot` and `fuchsian-demo`.
//! Exit codes: 0 ok, 1 usage, 2 solver failure, 3 inadmissible field, 4 I/O.

pub mod json;
pub mod svg;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use qcmap::assembly::RowScaling;
use qcmap::beltrami::NuRule;
use qcmap::fields::{FieldHandle, FieldRegistry};
use qcmap::lsq::{SolveOptions, SolverRegistry, DEFAULT_TOL};
use qcmap::mesh::{build_mesh, choose_m, MeshOrder};
use qcmap::pipeline::{Pipeline, Solved};

use json::{OracleRecord, SolutionFile};
use svg::{Plane, PlotStyle};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_INADMISSIBLE: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// The mesh schedule the error tables sweep.
pub const TABLE_SCHEDULE: [usize; 6] = [16, 32, 48, 64, 72, 84];

pub const CSV_HEADER: &str = "mu,M,N,max_error,runtime_s";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(qcmap::Error),
    Io { path: PathBuf, reason: String },
}

impl CliError {
    pub fn io(path: &Path, reason: impl fmt::Display) -> Self {
        CliError::Io { path: path.to_path_buf(), reason: reason.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        use qcmap::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Core(e) => match e {
                E::Parameter(_) | E::Parse { .. } | E::UnsupportedOracle(_) | E::Resource(_) => EXIT_USAGE,
                E::InadmissibleField(_) | E::InadmissibleTriangle { .. } => EXIT_INADMISSIBLE,
                E::SolverFailure { .. } | E::Consistency(_) | E::Domain(_) | E::Degenerate(_) => EXIT_SOLVER,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage: {msg}"),
            CliError::Core(e) => {
                let stage = match e {
                    qcmap::Error::Parse { .. } => "fields",
                    qcmap::Error::InadmissibleField(_) => "fields",
                    qcmap::Error::InadmissibleTriangle { .. } => "beltrami",
                    qcmap::Error::SolverFailure { .. } => "lsq",
                    qcmap::Error::UnsupportedOracle(_) => "oracles",
                    _ => "qcmap",
                };
                write!(f, "{stage}: {e}")
            }
            CliError::Io { path, reason } => write!(f, "i/o: {}: {reason}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<qcmap::Error> for CliError {
    fn from(e: qcmap::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "qcmap", version, about = "Quasiconformal self-maps of the unit disk from a Beltrami coefficient")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one field and write the solution as JSON.
    Solve(SolveArgs),
    /// Compare a solve with the closed-form map; prints one CSV row.
    Verify(VerifyArgs),
    /// Sweep the mesh schedule for one of the error tables.
    Table(TableArgs),
    /// Draw a solution mesh as SVG.
    Plot(PlotArgs),
    /// Solve the deformed Fuchsian field and report folded triangles.
    FuchsianDemo(FuchsianArgs),
}

/// Mesh size and solver knobs shared by every solving command.
#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Circles per half of the log mesh; defaults to the schedule for N.
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Vertices per circle.
    #[arg(long = "N")]
    pub n: usize,
    /// Relative tolerance of the least-squares certificate.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Least-squares strategy: auto, normal-cholesky or lsqr.
    #[arg(long, default_value = "auto")]
    pub solver: String,
    /// Triangle row scaling: equilibrated or literal.
    #[arg(long, default_value = "equilibrated")]
    pub rows: String,
    /// Per-triangle averaging of the field: vertex, area or area:<s>.
    /// Defaults to the field's own preference.
    #[arg(long = "nu-rule")]
    pub nu_rule: Option<String>,
}

impl SolverArgs {
    pub fn order(&self) -> CliResult<MeshOrder> {
        Ok(match self.m {
            Some(m) => MeshOrder::new(m, self.n)?,
            None => MeshOrder::with_default_m(self.n)?,
        })
    }

    pub fn pipeline(&self) -> CliResult<Pipeline> {
        Ok(Pipeline {
            solver: SolverRegistry::builtin().get(&self.solver)?,
            options: SolveOptions { tol: self.tol, ..SolveOptions::default() },
            scaling: RowScaling::parse(&self.rows)?,
            nu_rule: self.nu_rule.as_deref().map(NuRule::parse).transpose()?,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct PlotOptions {
    /// Which plane to draw.
    #[arg(long, value_enum, default_value_t = Plane::W)]
    pub plane: Plane,
    /// Line width in viewport pixels.
    #[arg(long, default_value_t = 0.5)]
    pub stroke: f64,
    /// Side length of the square viewport in pixels.
    #[arg(long, default_value_t = 800)]
    pub size: u32,
}

impl PlotOptions {
    fn style(&self) -> CliResult<PlotStyle> {
        if !(self.stroke > 0.0 && self.stroke.is_finite()) {
            return Err(CliError::Usage(format!("--stroke must be positive, got {}", self.stroke)));
        }
        if self.size < 16 {
            return Err(CliError::Usage(format!("--size must be at least 16, got {}", self.size)));
        }
        Ok(PlotStyle { stroke: self.stroke, size: self.size })
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Field spec, e.g. constant:0.5, radial, fuchsian:0.5:6.
    #[arg(long)]
    pub mu: String,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// JSON output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also draw the solution to this SVG file.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub plot: PlotOptions,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub mu: String,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Skip the header line.
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub table: u8,
    /// Restrict to these rows (repeatable); table 1 rows are constant:<c>.
    #[arg(long)]
    pub mu: Vec<String>,
    /// Restrict to these columns (repeatable); M follows the schedule.
    #[arg(long = "N")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value = "auto")]
    pub solver: String,
    #[arg(long, default_value = "equilibrated")]
    pub rows: String,
    #[arg(long = "nu-rule")]
    pub nu_rule: Option<String>,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// Solution JSON written by `solve`.
    #[arg(long, conflicts_with = "mu")]
    pub input: Option<PathBuf>,
    /// Solve this field first instead of reading a file (needs --N).
    #[arg(long, requires = "n")]
    pub mu: Option<String>,
    #[arg(long = "M")]
    pub m: Option<usize>,
    #[arg(long = "N", id = "n")]
    pub n: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// SVG output path.
    #[arg(long)]
    pub svg: PathBuf,
    #[command(flatten)]
    pub plot: PlotOptions,
}

#[derive(Debug, Clone, Args)]
pub struct FuchsianArgs {
    /// Deformation coefficient c, with |mu| = |c|.
    #[arg(long, default_value_t = 0.5)]
    pub c: f64,
    /// Maximal word length of the truncated group.
    #[arg(long = "L", default_value_t = qcmap::fuchsian::DEFAULT_WORD_LENGTH)]
    pub word_length: usize,
    #[arg(long = "M", default_value_t = 64)]
    pub m: usize,
    #[arg(long = "N", default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub plot: PlotOptions,
}

pub fn parse_field(spec: &str) -> CliResult<FieldHandle> {
    Ok(FieldRegistry::builtin().parse(spec)?)
}

/// Runs one parsed command, writing reports to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Solve(a) => cmd_solve(&a, stdout),
        Command::Verify(a) => cmd_verify(&a, stdout),
        Command::Table(a) => cmd_table(&a, stdout),
        Command::Plot(a) => cmd_plot(&a),
        Command::FuchsianDemo(a) => cmd_fuchsian(&a, stdout),
    }
}

fn verification(field: &FieldHandle, solved: &Solved) -> CliResult<Option<OracleRecord>> {
    let Some(oracle) = field.oracle() else { return Ok(None) };
    let report = oracle.error(&solved.solution)?;
    Ok(Some(OracleRecord { oracle: oracle.name().to_string(), max_error: report.max_error }))
}

fn write_text(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => stdout.write_all(text.as_bytes()).map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

fn emit_solution(
    file: &SolutionFile,
    out: Option<&Path>,
    svg_path: Option<&Path>,
    plot: &PlotOptions,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let style = plot.style()?;
    match out {
        Some(p) => file.save(p)?,
        None => {
            let text = serde_json::to_string_pretty(file).map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
            write_text(None, &(text + "\n"), stdout)?;
        }
    }
    if let Some(p) = svg_path {
        svg::write_svg(file, plot.plane, &style, p)?;
    }
    Ok(())
}

fn summary(file: &SolutionFile) -> String {
    let err = match &file.verification {
        Some(v) => format!(" max_error={:.6e} ({})", v.max_error, v.oracle),
        None => String::new(),
    };
    format!(
        "{} (M,N)=({},{}) rows={} residual_l2={:.3e} flipped={} solver={} runtime={:.3}s{err}",
        file.mu_spec,
        file.m,
        file.n,
        file.rows,
        file.residual_l2,
        file.flipped.len(),
        file.solver,
        file.runtime_s
    )
}

pub fn cmd_solve(a: &SolveArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let field = parse_field(&a.mu)?;
    let order = a.solver.order()?;
    let solved = a.solver.pipeline()?.run(field.as_ref(), order)?;
    let file = SolutionFile::from_solved(&field.spec(), &solved, verification(&field, &solved)?);
    emit_solution(&file, a.out.as_deref(), a.svg.as_deref(), &a.plot, stdout)?;
    if a.out.is_some() {
        writeln!(stdout, "{}", summary(&file)).map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    } else {
        eprintln!("{}", summary(&file));
    }
    Ok(())
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub mu: String,
    pub m: usize,
    pub n: usize,
    pub max_error: f64,
    pub runtime_s: f64,
}

impl CsvRow {
    pub fn line(&self) -> String {
        format!("{},{},{},{:e},{:.6}", self.mu, self.m, self.n, self.max_error, self.runtime_s)
    }
}

/// The `mu` column: the coefficient for constant fields, the spec otherwise.
fn mu_label(field: &FieldHandle) -> String {
    let spec = field.spec();
    match spec.strip_prefix("constant:") {
        Some(c) => c.to_string(),
        None => spec,
    }
}

pub fn verify_cell(field: &FieldHandle, order: MeshOrder, pipeline: &Pipeline) -> CliResult<CsvRow> {
    let oracle = field
        .oracle()
        .ok_or_else(|| qcmap::Error::UnsupportedOracle(field.spec()))?;
    let solved = pipeline.run(field.as_ref(), order)?;
    let report = oracle.error(&solved.solution)?;
    Ok(CsvRow {
        mu: mu_label(field),
        m: order.m(),
        n: order.n(),
        max_error: report.max_error,
        runtime_s: solved.elapsed.as_secs_f64(),
    })
}

pub fn cmd_verify(a: &VerifyArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let field = parse_field(&a.mu)?;
    let row = verify_cell(&field, a.solver.order()?, &a.solver.pipeline()?)?;
    let mut text = String::new();
    if !a.no_header {
        text.push_str(CSV_HEADER);
        text.push('\n');
    }
    text.push_str(&row.line());
    text.push('\n');
    write_text(None, &text, stdout)
}

/// Default row specs of each table.
pub fn table_rows(table: u8) -> CliResult<Vec<&'static str>> {
    match table {
        1 => Ok(vec!["constant:0.1", "constant:0.3", "constant:0.5", "constant:0.7"]),
        2 => Ok(vec!["radial"]),
        3 => Ok(vec!["sectorial"]),
        t => Err(CliError::Usage(format!("--table must be 1, 2 or 3, got {t}"))),
    }
}

/// Checks that `spec` names a row of `table` and returns its field.
fn table_field(table: u8, spec: &str) -> CliResult<FieldHandle> {
    let field = parse_field(spec)?;
    let ok = match table {
        1 => field.spec().starts_with("constant:") && field.oracle().is_some(),
        2 => field.spec() == "radial",
        _ => field.spec() == "sectorial",
    };
    if !ok {
        return Err(CliError::Usage(format!("`{spec}` is not a row of table {table}")));
    }
    Ok(field)
}

pub fn cmd_table(a: &TableArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let specs: Vec<String> = if a.mu.is_empty() {
        table_rows(a.table)?.into_iter().map(String::from).collect()
    } else {
        a.mu.clone()
    };
    let mut fields = specs.iter().map(|s| table_field(a.table, s)).collect::<CliResult<Vec<_>>>()?;
    fields.sort_by(|x, y| mu_key(x).total_cmp(&mu_key(y)).then_with(|| x.spec().cmp(&y.spec())));
    fields.dedup_by_key(|f| f.spec());

    let mut ns = if a.n.is_empty() { TABLE_SCHEDULE.to_vec() } else { a.n.clone() };
    ns.sort_unstable();
    ns.dedup();

    let solver_args = SolverArgs {
        m: None,
        n: 0,
        tol: a.tol,
        solver: a.solver.clone(),
        rows: a.rows.clone(),
        nu_rule: a.nu_rule.clone(),
    };
    let pipeline = solver_args.pipeline()?;
    let mut text = format!("{CSV_HEADER}\n");
    for field in &fields {
        for &n in &ns {
            let order = MeshOrder::new(choose_m(n), n)?;
            text.push_str(&verify_cell(field, order, &pipeline)?.line());
            text.push('\n');
        }
    }
    write_text(a.out.as_deref(), &text, stdout)
}

fn mu_key(field: &FieldHandle) -> f64 {
    mu_label(field).parse().unwrap_or(f64::INFINITY)
}

pub fn cmd_plot(a: &PlotArgs) -> CliResult<()> {
    let style = a.plot.style()?;
    let file = match (&a.input, &a.mu) {
        (Some(path), _) => SolutionFile::load(path)?,
        (None, Some(spec)) => {
            let field = parse_field(spec)?;
            let n = a.n.ok_or_else(|| CliError::Usage("--mu needs --N".into()))?;
            let order = match a.m {
                Some(m) => MeshOrder::new(m, n)?,
                None => MeshOrder::with_default_m(n)?,
            };
            let pipeline = Pipeline { options: SolveOptions { tol: a.tol, ..SolveOptions::default() }, ..Pipeline::default() };
            let solved = pipeline.run(field.as_ref(), order)?;
            SolutionFile::from_solved(&field.spec(), &solved, None)
        }
        (None, None) => return Err(CliError::Usage("plot needs --input <json> or --mu <spec> --N <int>".into())),
    };
    svg::write_svg(&file, a.plot.plane, &style, &a.svg)
}

pub fn cmd_fuchsian(a: &FuchsianArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let field: FieldHandle = Arc::new(qcmap::fields::Fuchsian::new(a.c, a.word_length)?);
    let order = MeshOrder::new(a.m, a.n)?;
    let pipeline = Pipeline { options: SolveOptions { tol: a.tol, ..SolveOptions::default() }, ..Pipeline::default() };
    let solved = pipeline.run(field.as_ref(), order)?;
    let file = SolutionFile::from_solved(&field.spec(), &solved, None);
    if let Some(p) = &a.out {
        file.save(p)?;
    }
    if let Some(p) = &a.svg {
        svg::write_svg(&file, a.plot.plane, &a.plot.style()?, p)?;
    }
    let total = order.num_triangles() / 2;
    writeln!(
        stdout,
        "{} (M,N)=({},{}) residual_l2={:.3e} flipped={}/{} runtime={:.3}s",
        file.mu_spec,
        file.m,
        file.n,
        file.residual_l2,
        file.flipped.len(),
        total,
        file.runtime_s
    )
    .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

/// Rebuilds the mesh a solution file was computed on.
pub(crate) fn file_mesh(file: &SolutionFile) -> CliResult<qcmap::mesh::LogMesh> {
    Ok(build_mesh(MeshOrder::new(file.m, file.n)?)?)
}
