//! The `turan` command line: construct, verify, constants, exact, table.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{constants_report, ConstantsReport};
use crate::constructor::{self, ConstructionConfig, Constructor, Lemma, Mode};
use crate::exact::{solve_exact, ExactError, DEFAULT_NODE_BUDGET};
use crate::hypergraph::{GraphError, RGraph};
use crate::verifier::{
    bound_table, report_for, verify_full, verify_sampled, CellOutcome, TableOptions, VerifyError,
    VerifyResult, VerifyStatus, DEFAULT_BUDGET,
};

pub const EXIT_OK: i32 = 0;
/// Usage errors and failed constructions.
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_COUNTEREXAMPLE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_TOO_LARGE: i32 = 4;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot parse system file: {0}")]
    Parse(String),
    #[error("{0}")]
    TooLarge(String),
    #[error("{0}")]
    Failed(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::TooLarge(_) => EXIT_TOO_LARGE,
            _ => EXIT_FAILURE,
        }
    }
}

impl From<constructor::ConstructError> for CliError {
    fn from(e: constructor::ConstructError) -> Self {
        match e {
            constructor::ConstructError::Graph(GraphError::UniverseTooLarge { .. }) => {
                CliError::TooLarge(e.to_string())
            }
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::UniverseTooLarge { .. } | GraphError::TooManyVertices { .. } => {
                CliError::TooLarge(e.to_string())
            }
            _ => CliError::Failed(e.to_string()),
        }
    }
}

// ---------------------------------------------------------------------------
// arguments

#[derive(Debug, Parser)]
#[command(name = "turan", version, about = "Build, certify and measure Turán (n, s, r)-systems")]
pub struct Cli {
    /// Worker threads (falls back to TURAN_THREADS)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Machine-readable output
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a system and write it as JSON
    Construct(ConstructArgs),
    /// Check that every s-set of a stored system contains an edge
    Verify(VerifyArgs),
    /// Solve for c0 and the derived constants
    Constants(ConstantsArgs),
    /// Smallest system of a tiny instance by branch and bound
    Exact(ExactArgs),
    /// Construct, verify and report a grid of (n, r)
    Table(TableArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    /// (0.784, 2.89, 6.239), valid for every r with s = r + 1
    AllR,
    /// The stationary point for the given gap
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LemmaArg {
    Main,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Random,
    Derandomized,
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Gap s - r
    #[arg(long = "R", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub big_r: u32,
    #[arg(long, requires_all = ["c", "mu"])]
    pub beta: Option<f64>,
    #[arg(long, requires_all = ["beta", "mu"])]
    pub c: Option<f64>,
    #[arg(long, requires_all = ["beta", "c"])]
    pub mu: Option<f64>,
    /// Named constants; ignored when --beta/--c/--mu are given
    #[arg(long, value_enum, conflicts_with = "beta")]
    pub preset: Option<PresetArg>,
    /// Split rule; main (s = r + 1) by default when R = 1
    #[arg(long, value_enum)]
    pub lemma: Option<LemmaArg>,
    #[arg(long, value_enum, default_value = "derandomized")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest uniformity built as a complete graph
    #[arg(long)]
    pub r0: Option<u32>,
    #[arg(long, default_value_t = constructor::DEFAULT_MAX_RESAMPLES)]
    pub max_resamples: u32,
}

#[derive(Debug, Clone, Args)]
pub struct ConstructArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub r: u32,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output file; omitted means report only
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckMode {
    Full,
    Sample,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "full")]
    pub mode: CheckMode,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Covering size; defaults to the file's s
    #[arg(long)]
    pub s: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest C(n, s) enumerated in full mode
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ConstantsArgs {
    #[arg(long = "R", default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub big_r: u64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub s: u32,
    #[arg(long)]
    pub r: u32,
    /// Search node limit
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    pub budget: u64,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub r_min: u32,
    #[arg(long)]
    pub r_max: u32,
    /// Smallest n per row; defaults to r + 1
    #[arg(long)]
    pub n_min: Option<u32>,
    #[arg(long)]
    pub n_max: u32,
    /// Add the exact optimum where the solver finishes quickly
    #[arg(long)]
    pub exact_compare: bool,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
}

/// Turns the flags into a validated configuration. Without explicit
/// constants the main lemma takes the all-r preset and the general lemma
/// the stationary point, since the latter violates the main lemma's
/// conditions.
pub fn resolve_config(a: &ConfigArgs) -> Result<ConstructionConfig, CliError> {
    let lemma = match a.lemma {
        Some(LemmaArg::Main) => Lemma::Main,
        Some(LemmaArg::General) => Lemma::General,
        None if a.big_r == 1 => Lemma::Main,
        None => Lemma::General,
    };
    let mut cfg = match (a.beta, a.c, a.mu) {
        (Some(beta), Some(c), Some(mu)) => ConstructionConfig {
            big_r: a.big_r,
            beta,
            c,
            mu,
            ..ConstructionConfig::preset_all_r()
        },
        _ => {
            let preset = a.preset.unwrap_or(match lemma {
                Lemma::Main => PresetArg::AllR,
                Lemma::General => PresetArg::Optimal,
            });
            match preset {
                PresetArg::AllR if a.big_r != 1 => {
                    return Err(CliError::Usage("--preset all-r needs --R 1".into()))
                }
                PresetArg::AllR => ConstructionConfig::preset_all_r(),
                PresetArg::Optimal => ConstructionConfig::optimal(a.big_r)?,
            }
        }
    };
    cfg.lemma = lemma;
    cfg.mode = match a.mode {
        ModeArg::Random => Mode::Random,
        ModeArg::Derandomized => Mode::Derandomized,
    };
    cfg.seed = a.seed;
    cfg.r0_override = a.r0;
    cfg.max_resamples = a.max_resamples;
    cfg.validate()?;
    cfg.r0()?;
    Ok(cfg)
}

// ---------------------------------------------------------------------------
// files

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemMeta {
    pub config: ConstructionConfig,
    pub seed: u64,
    pub mode: Mode,
    pub size: u64,
    /// Exact size bound as `numerator/denominator`.
    pub ledger_bound: String,
    /// Seconds since the Unix epoch.
    pub construction_timestamp: u64,
}

/// The stored form of a system: canonical key order, edges in colex order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub format_version: u32,
    pub n: u32,
    pub r: u32,
    pub s: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<SystemMeta>,
    pub edges: Vec<Vec<u32>>,
}

impl SystemFile {
    pub fn from_graph(g: &RGraph, s: u32, meta: Option<SystemMeta>) -> Self {
        SystemFile {
            format_version: FORMAT_VERSION,
            n: g.n(),
            r: g.r(),
            s,
            meta,
            edges: g.edges(),
        }
    }

    /// Rebuilds the graph, checking every edge and the declared size.
    pub fn to_graph(&self) -> Result<RGraph, CliError> {
        if self.format_version != FORMAT_VERSION {
            return Err(CliError::Parse(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        let g = RGraph::from_edges(self.n, self.r, self.edges.iter().cloned())
            .map_err(|e| CliError::Parse(e.to_string()))?;
        if g.len() != self.edges.len() as u64 {
            return Err(CliError::Parse("duplicate edges".into()));
        }
        if let Some(meta) = &self.meta {
            if meta.size != g.len() {
                return Err(CliError::Parse(format!(
                    "meta.size {} but {} edges",
                    meta.size,
                    g.len()
                )));
            }
        }
        Ok(g)
    }

    /// One line of JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data serializes")
    }

    /// Reads JSON, or the plain format: a header `n r s size` followed by
    /// one whitespace-separated edge per line (`#` starts a comment).
    pub fn parse(text: &str) -> Result<Self, CliError> {
        if text.trim_start().starts_with('{') {
            let f: SystemFile =
                serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
            f.to_graph()?;
            return Ok(f);
        }
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let nums = |line: &str| -> Result<Vec<u32>, CliError> {
            line.split_whitespace()
                .map(|t| t.parse().map_err(|_| CliError::Parse(format!("bad number {t:?}"))))
                .collect()
        };
        let header = nums(lines.next().ok_or_else(|| CliError::Parse("empty input".into()))?)?;
        let [n, r, s, size] = header[..] else {
            return Err(CliError::Parse("header must be `n r s size`".into()));
        };
        let mut edges = lines.map(nums).collect::<Result<Vec<_>, _>>()?;
        for e in &mut edges {
            e.sort_unstable();
        }
        if edges.len() != size as usize {
            return Err(CliError::Parse(format!(
                "header declares {size} edges, found {}",
                edges.len()
            )));
        }
        let draft = SystemFile {
            format_version: FORMAT_VERSION,
            n,
            r,
            s,
            meta: None,
            edges,
        };
        let g = draft.to_graph()?;
        Ok(SystemFile::from_graph(&g, s, None))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_json() + "\n").map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

// ---------------------------------------------------------------------------
// commands

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_FAILURE
                }
            };
        }
    };
    set_threads(cli.threads);
    let json = cli.json;
    let result = match &cli.command {
        Command::Construct(a) => cmd_construct(a, json),
        Command::Verify(a) => cmd_verify(a, json),
        Command::Constants(a) => cmd_constants(a, json),
        Command::Exact(a) => cmd_exact(a, json),
        Command::Table(a) => cmd_table(a, json),
    };
    match result {
        Ok((text, code)) => {
            let _ = write!(out, "{text}");
            code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn set_threads(flag: Option<usize>) {
    let count = flag.or_else(|| {
        std::env::var("TURAN_THREADS")
            .ok()
            .and_then(|v| v.trim().parse().ok())
    });
    if let Some(t) = count.filter(|&t| t > 0) {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes") + "\n"
}

type Outcome = Result<(String, i32), CliError>;

fn now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn cmd_construct(a: &ConstructArgs, json: bool) -> Outcome {
    let cfg = resolve_config(&a.config)?;
    let s = a.r + cfg.big_r;
    let cons = Constructor::new(cfg.clone())?;
    let sys = cons.build(a.n, a.r)?;
    let bound = cons.ledger_bound(a.n, a.r);
    let report = report_for(&*sys, s, None);
    if let Some(path) = &a.out {
        let g = sys.materialize()?;
        let meta = SystemMeta {
            seed: cfg.seed,
            mode: cfg.mode,
            size: g.len(),
            ledger_bound: format!("{}/{}", bound.numer(), bound.denom()),
            construction_timestamp: now(),
            config: cfg.clone(),
        };
        SystemFile::from_graph(&g, s, Some(meta)).write(path)?;
    }
    if json {
        #[derive(Serialize)]
        struct Summary<'a> {
            config: &'a ConstructionConfig,
            r0: u32,
            #[serde(flatten)]
            report: &'a crate::verifier::DensityReport,
            ledger_bound: String,
            out: Option<&'a PathBuf>,
        }
        let summary = Summary {
            config: &cfg,
            r0: cons.r0(),
            report: &report,
            ledger_bound: format!("{}/{}", bound.numer(), bound.denom()),
            out: a.out.as_ref(),
        };
        return Ok((to_json(&summary), EXIT_OK));
    }
    let mut t = String::new();
    let _ = writeln!(t, "system (n={}, s={}, r={})", a.n, s, a.r);
    let _ = writeln!(
        t,
        "config    R={} beta={} c={} mu={} lemma={:?} mode={:?} seed={} r0={}",
        cfg.big_r,
        cfg.beta,
        cfg.c,
        cfg.mu,
        cfg.lemma,
        cfg.mode,
        cfg.seed,
        cons.r0()
    );
    let _ = writeln!(t, "size      {}", report.size);
    let _ = writeln!(t, "bound     {:.3}", bound.to_f64().unwrap_or(f64::NAN));
    let _ = writeln!(t, "density   {:.6}", report.density_f64());
    let _ = writeln!(
        t,
        "trivial   {:.6}",
        report.normalized_trivial.to_f64().unwrap_or(f64::NAN)
    );
    let _ = writeln!(
        t,
        "de Caen   {:.6}",
        report.decaen_ratio.to_f64().unwrap_or(f64::NAN)
    );
    if let Some(p) = &a.out {
        let _ = writeln!(t, "written   {}", p.display());
    }
    Ok((t, EXIT_OK))
}

fn verification_text(v: &VerifyResult) -> String {
    match v.status {
        VerifyStatus::Covered => format!("covered ({} s-sets checked)\n", v.checked),
        VerifyStatus::SampledOk => format!(
            "sampled_ok ({} samples, uncovered fraction < {:.3e} at 95%)\n",
            v.checked,
            v.failure_bound.unwrap_or(1.0)
        ),
        VerifyStatus::Counterexample => format!(
            "counterexample {:?} contains no edge\n",
            v.counterexample.as_ref().map(|x| x.as_slice()).unwrap_or(&[])
        ),
    }
}

pub fn cmd_verify(a: &VerifyArgs, json: bool) -> Outcome {
    let file = SystemFile::read(&a.input)?;
    let g = file.to_graph()?;
    let s = a.s.unwrap_or(file.s);
    let v = match a.mode {
        CheckMode::Full => verify_full(&g, s, a.budget),
        CheckMode::Sample => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            verify_sampled(&g, s, a.samples, &mut rng)
        }
    }
    .map_err(|e| match e {
        VerifyError::InstanceTooLarge { .. } => CliError::TooLarge(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    })?;
    let code = if v.is_ok() {
        EXIT_OK
    } else {
        EXIT_COUNTEREXAMPLE
    };
    let text = if json {
        to_json(&v)
    } else {
        verification_text(&v)
    };
    Ok((text, code))
}

pub fn cmd_constants(a: &ConstantsArgs, json: bool) -> Outcome {
    let rep: ConstantsReport =
        constants_report(a.big_r, a.tol).map_err(|e| CliError::Usage(e.to_string()))?;
    if json {
        return Ok((to_json(&rep), EXIT_OK));
    }
    let mut t = String::new();
    let _ = writeln!(t, "R         {}", rep.big_r);
    let _ = writeln!(t, "c0        {:.15}", rep.c0);
    let _ = writeln!(t, "beta0     {:.15}", rep.beta0);
    let _ = writeln!(t, "mu        {:.15}", rep.mu);
    let _ = writeln!(t, "residual  {:.3e}", rep.residual);
    let _ = writeln!(t, "feasible  {}", rep.feasible_general);
    if let (Some(lo), Some(hi), Some(cap)) = (rep.sandwich_lower, rep.sandwich_upper, rep.mu_cap) {
        let _ = writeln!(t, "c0 range  ({lo:.6}, {hi:.6})");
        let _ = writeln!(t, "mu cap    {cap:.6}");
    }
    Ok((t, EXIT_OK))
}

pub fn cmd_exact(a: &ExactArgs, json: bool) -> Outcome {
    match solve_exact(a.n, a.s, a.r, a.budget) {
        Ok(res) => {
            if json {
                return Ok((to_json(&res), EXIT_OK));
            }
            let mut t = String::new();
            let _ = writeln!(t, "T({}, {}, {}) = {}", a.n, a.s, a.r, res.optimum);
            let _ = writeln!(t, "optimal   {}", res.proof_of_optimality);
            let _ = writeln!(t, "nodes     {}", res.nodes_explored);
            let _ = writeln!(t, "witness   {:?}", res.witness.edges());
            Ok((t, EXIT_OK))
        }
        Err(ExactError::BudgetExhausted {
            lower, upper, nodes, ..
        }) => Err(CliError::TooLarge(format!(
            "budget of {nodes} nodes exhausted; T({}, {}, {}) lies in [{lower}, {upper}]",
            a.n, a.s, a.r
        ))),
        Err(e @ ExactError::InstanceTooLarge { .. }) => Err(CliError::TooLarge(e.to_string())),
        Err(e) => Err(CliError::Usage(e.to_string())),
    }
}

/// Exact optimum for the comparison column, when cheap.
fn small_optimum(n: u32, s: u32, r: u32) -> Option<u64> {
    solve_exact(n, s, r, 1_000_000).ok().map(|res| res.optimum)
}

pub fn cmd_table(a: &TableArgs, json: bool) -> Outcome {
    let cfg = resolve_config(&a.config)?;
    let opts = TableOptions {
        budget: a.budget,
        samples: a.samples,
        seed: cfg.seed,
        mu_target: None,
    };
    let n_min = a.n_min;
    let n_max = a.n_max;
    let rows = bound_table(&cfg, a.r_min..=a.r_max, |r| n_min.unwrap_or(r + 1)..=n_max, &opts)?;
    let failed = rows.iter().any(|row| match &row.outcome {
        CellOutcome::Ok(cell) => !cell.verification.is_ok(),
        CellOutcome::Error(_) => false,
    });
    let code = if failed { EXIT_COUNTEREXAMPLE } else { EXIT_OK };
    let exact: Vec<Option<u64>> = rows
        .iter()
        .map(|row| {
            if a.exact_compare {
                small_optimum(row.n, row.r + cfg.big_r, row.r)
            } else {
                None
            }
        })
        .collect();
    if json {
        #[derive(Serialize)]
        struct Row<'a> {
            #[serde(flatten)]
            row: &'a crate::verifier::TableRow,
            #[serde(skip_serializing_if = "Option::is_none")]
            exact: Option<u64>,
        }
        let out: Vec<Row> = rows
            .iter()
            .zip(&exact)
            .map(|(row, &exact)| Row { row, exact })
            .collect();
        return Ok((to_json(&out), code));
    }
    let mut t = String::new();
    let mut header = "r\tn\ts\tsize\tledger_bound\tnormalized_trivial\tmu_normalized\tstatus".to_string();
    if a.exact_compare {
        header.push_str("\texact");
    }
    let _ = writeln!(t, "{header}");
    for (row, ex) in rows.iter().zip(&exact) {
        let s = row.r + cfg.big_r;
        match &row.outcome {
            CellOutcome::Ok(cell) => {
                let status = match cell.verification.status {
                    VerifyStatus::Covered => "covered",
                    VerifyStatus::SampledOk => "sampled_ok",
                    VerifyStatus::Counterexample => "counterexample",
                };
                let _ = write!(
                    t,
                    "{}\t{}\t{}\t{}\t{:.3}\t{:.6}\t{:.6}\t{}",
                    row.r,
                    row.n,
                    s,
                    cell.report.size,
                    cell.ledger_bound.to_f64().unwrap_or(f64::NAN),
                    cell.report.normalized_trivial.to_f64().unwrap_or(f64::NAN),
                    cell.report.mu_normalized_f64(),
                    status
                );
            }
            CellOutcome::Error(e) => {
                let _ = write!(t, "{}\t{}\t{}\t-\t-\t-\t-\terror: {}", row.r, row.n, s, e);
            }
        }
        if a.exact_compare {
            match ex {
                Some(v) => {
                    let _ = write!(t, "\t{v}");
                }
                None => t.push_str("\t-"),
            }
        }
        t.push('\n');
    }
    Ok((t, code))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_round_trip_is_canonical() {
        let g = RGraph::from_edges(5, 3, vec![vec![3, 4, 5], vec![1, 2, 3], vec![1, 2, 4]]).unwrap();
        let f = SystemFile::from_graph(&g, 4, None);
        let text = f.to_json();
        assert!(text.starts_with(r#"{"format_version":1,"n":5,"r":3,"s":4,"edges":[[1,2,3],[1,2,4],[3,4,5]]"#));
        let back = SystemFile::parse(&text).unwrap();
        assert_eq!(back.to_json(), text);
        assert_eq!(back.to_graph().unwrap(), g);
    }

    #[test]
    fn plain_format() {
        let f = SystemFile::parse("# three triples\n5 3 4 3\n3 4 5\n2 1 3\n1 2 4\n").unwrap();
        assert_eq!(f.edges, vec![vec![1, 2, 3], vec![1, 2, 4], vec![3, 4, 5]]);
        assert!(SystemFile::parse("5 3 4 2\n1 2 3\n").is_err());
        assert!(SystemFile::parse("5 3 4 1\n1 2 9\n").is_err());
        assert!(SystemFile::parse("{\"n\": 3").is_err());
        assert!(SystemFile::parse(
            r#"{"format_version":1,"n":5,"r":3,"s":4,"edges":[[1,2,3],[1,2,3]]}"#
        )
        .is_err());
    }

    #[test]
    fn default_configs() {
        let args = |extra: &[&str]| {
            let mut v = vec!["turan", "construct", "--n", "5", "--r", "2"];
            v.extend_from_slice(extra);
            match Cli::try_parse_from(v).unwrap().command {
                Command::Construct(a) => resolve_config(&a.config),
                _ => unreachable!(),
            }
        };
        let c = args(&[]).unwrap();
        assert_eq!((c.lemma, c.mu), (Lemma::Main, 6.239));
        let c = args(&["--lemma", "general"]).unwrap();
        assert!((c.mu - 4.9108).abs() < 1e-3);
        let c = args(&["--R", "2"]).unwrap();
        assert_eq!(c.lemma, Lemma::General);
        assert!(args(&["--preset", "optimal", "--lemma", "main"]).is_err());
        assert!(args(&["--R", "2", "--preset", "all-r"]).is_err());
        assert!(args(&["--beta", "0.9", "--c", "0.1", "--mu", "2"]).is_err());
    }
}
