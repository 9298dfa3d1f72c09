//! Command-line front end: sweeps, tables, spectra, loss studies and the
//! oracle verifier. Every command prints a table with a header row, as CSV
//! or as a JSON array of objects with the same keys.

pub mod table;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use macrobell::bell::{
    chsh_value, distinguishability, maximizing_threshold, v_max_closed, violation_frontier,
    AngleSettings,
};
use macrobell::loss::{bs_convergence_report, lossy_distinguishability};
use macrobell::macro_states::{photon_spectrum, GainSpec, DEFAULT_TRUNCATION_EPSILON};
use macrobell::numeric::{NumericMode, Scalar};

use table::{Cell, Table};

#[derive(Debug, Parser)]
#[command(
    name = "macrobell",
    version,
    about = "Threshold-detector Bell tests on amplified micro-macro singlets"
)]
pub struct Cli {
    /// Arithmetic: exact rationals, log-space floats, or exact up to N = 64
    #[arg(long, value_enum, default_value_t = ModeArg::Auto, global = true)]
    pub mode: ModeArg,

    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,

    /// Write the table here instead of stdout
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Log,
    Auto,
}

impl ModeArg {
    pub fn resolve(self, n: u64) -> NumericMode {
        match self {
            ModeArg::Exact => NumericMode::Exact,
            ModeArg::Log => NumericMode::LogSpace,
            ModeArg::Auto => NumericMode::auto(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct CutRange {
    #[arg(long, default_value_t = 0)]
    pub min_n: u64,
    #[arg(long)]
    pub max_n: Option<u64>,
}

/// Analyzer angles in units of pi: `--phi-b 0.125` is pi/8.
#[derive(Debug, Clone, Copy, Args)]
pub struct Angles {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phi_a: f64,
    #[arg(long, default_value_t = 0.25, allow_negative_numbers = true)]
    pub phi_a_prime: f64,
    #[arg(long, default_value_t = 0.125, allow_negative_numbers = true)]
    pub phi_b: f64,
    #[arg(long, default_value_t = -0.125, allow_negative_numbers = true)]
    pub phi_b_prime: f64,
}

impl Angles {
    fn settings(&self) -> AngleSettings {
        let pi = std::f64::consts::PI;
        AngleSettings {
            phi_a: self.phi_a * pi,
            phi_a_prime: self.phi_a_prime * pi,
            phi_b: self.phi_b * pi,
            phi_b_prime: self.phi_b_prime * pi,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal distinguishability per cut: N,v_max (default N = 0..40)
    Vmax {
        #[command(flatten)]
        cuts: CutRange,
    },
    /// Distinguishability on a grid: N,N_sigma,v (default N = 0..8, all thresholds)
    Dist {
        #[command(flatten)]
        cuts: CutRange,
        /// Single threshold instead of the sweep 0..=2N+1
        #[arg(long)]
        n_sigma: Option<u64>,
    },
    /// CHSH value per cut: N,chsh_opt (default N = 0..10, optimal threshold)
    Chsh {
        #[command(flatten)]
        cuts: CutRange,
        /// Fixed threshold instead of the per-cut maximizer
        #[arg(long)]
        n_sigma: Option<u64>,
        #[command(flatten)]
        angles: Angles,
    },
    /// Preselected photon-number spectrum: N,weight
    Spectrum {
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        g: f64,
        #[arg(long, default_value_t = 0)]
        n_th: u64,
        /// Relative tail mass below which the series is cut
        #[arg(long, default_value_t = DEFAULT_TRUNCATION_EPSILON)]
        epsilon: f64,
    },
    /// Lossy distinguishability: N,M,N_sigma,v_bar (default N = 0..5, M = 0..3)
    Loss {
        #[command(flatten)]
        cuts: CutRange,
        #[arg(long, default_value_t = 0)]
        min_m: u64,
        #[arg(long, default_value_t = 3)]
        max_m: u64,
        /// Single threshold instead of the sweep 0..=2N+1-M
        #[arg(long)]
        n_sigma: Option<u64>,
    },
    /// Cuts whose optimal CHSH value exceeds 2: max_n,violation_set
    Frontier {
        #[arg(long, default_value_t = 10)]
        max_n: u64,
    },
    /// Large-N optimum against 2/pi: N,v_max,abs_diff_2_over_pi
    Asymptote {
        #[arg(long, value_delimiter = ',', default_values_t = [100u64, 1000, 10_000, 100_000, 1_000_000])]
        n: Vec<u64>,
    },
    /// Beamsplitter preselection against theoretical preselection: K_th,best_N_th,tv_distance
    BsPreselect {
        #[arg(long, default_value_t = 1.5, allow_negative_numbers = true)]
        g: f64,
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        t2: f64,
        #[arg(long, default_value_t = 0)]
        min_k: u64,
        #[arg(long, default_value_t = 30)]
        max_k: u64,
    },
    /// Dense-oracle cross-checks on N <= 5, one line per group
    Verify {
        #[arg(long, value_enum)]
        group: Option<verify::Group>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flag value or combination; exit status 2.
    Usage(String),
    /// The computation itself failed; exit status 1.
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Compute(m) => f.write_str(m),
        }
    }
}

impl From<macrobell::Error> for CliError {
    fn from(e: macrobell::Error) -> Self {
        CliError::Compute(e.to_string())
    }
}

pub enum Output {
    Table(Table),
    /// Verifier report and whether every group passed.
    Report(String, bool),
}

impl Output {
    pub fn render(&self, format: Format) -> String {
        match (self, format) {
            (Output::Table(t), Format::Csv) => t.to_csv(),
            (Output::Table(t), Format::Json) => t.to_json(),
            (Output::Report(s, _), _) => s.clone(),
        }
    }
}

fn usage(flag: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("invalid value for {flag}: {msg}"))
}

fn cut_range(r: CutRange, default_max: u64) -> Result<std::ops::RangeInclusive<u64>, CliError> {
    let max = r.max_n.unwrap_or(default_max);
    if r.min_n > max {
        return Err(usage(
            "--min-n",
            format!("{} exceeds --max-n {max}; the range is empty", r.min_n),
        ));
    }
    Ok(r.min_n..=max)
}

fn gain_arg(g: f64) -> Result<GainSpec, CliError> {
    GainSpec::with_gain(g).map_err(|e| usage("--g", e))
}

fn scalar_cell(s: &Scalar) -> Cell {
    match s {
        Scalar::Exact(q) => Cell::Text(q.to_string()),
        Scalar::Log(_) => Cell::Float(s.to_f64()),
    }
}

/// Rationals always print as `p/q`, integers included.
fn rational_cell(s: &Scalar) -> Cell {
    match s {
        Scalar::Exact(q) => Cell::Text(format!("{}/{}", q.numer(), q.denom())),
        _ => scalar_cell(s),
    }
}

pub fn run(cli: &Cli) -> Result<Output, CliError> {
    let mode = cli.mode;
    let table = match &cli.command {
        Command::Vmax { cuts } => {
            let mut t = Table::new(vec!["N", "v_max"]);
            for n in cut_range(*cuts, 40)? {
                t.push(vec![
                    Cell::Int(n),
                    rational_cell(&v_max_closed(n, mode.resolve(n))),
                ]);
            }
            t
        }
        Command::Dist { cuts, n_sigma } => {
            let mut t = Table::new(vec!["N", "N_sigma", "v"]);
            for n in cut_range(*cuts, 8)? {
                let sigmas = match n_sigma {
                    Some(s) => *s..=*s,
                    None => 0..=2 * n + 1,
                };
                for s in sigmas {
                    let v = distinguishability(n, s, mode.resolve(n));
                    t.push(vec![Cell::Int(n), Cell::Int(s), rational_cell(&v)]);
                }
            }
            t
        }
        Command::Chsh {
            cuts,
            n_sigma,
            angles,
        } => {
            let settings = angles.settings();
            let mut t = Table::new(vec!["N", "chsh_opt"]);
            for n in cut_range(*cuts, 10)? {
                let s = n_sigma.unwrap_or_else(|| maximizing_threshold(n));
                t.push(vec![Cell::Int(n), Cell::Float(chsh_value(n, s, &settings))]);
            }
            t
        }
        Command::Spectrum { g, n_th, epsilon } => {
            let gain = GainSpec::new(*g, *epsilon).map_err(|e| match e {
                macrobell::Error::InvalidParameter { name, .. } if name.contains("eps") => {
                    usage("--epsilon", e)
                }
                _ => usage("--g", e),
            })?;
            let spectrum = photon_spectrum(&gain, *n_th)?;
            let mut t = Table::new(vec!["N", "weight"]);
            for (n, w) in spectrum.iter().skip(*n_th as usize) {
                t.push(vec![Cell::Int(n), Cell::Float(w)]);
            }
            t
        }
        Command::Loss {
            cuts,
            min_m,
            max_m,
            n_sigma,
        } => {
            if min_m > max_m {
                return Err(usage(
                    "--min-m",
                    format!("{min_m} exceeds --max-m {max_m}; the range is empty"),
                ));
            }
            let mut t = Table::new(vec!["N", "M", "N_sigma", "v_bar"]);
            for n in cut_range(*cuts, 5)? {
                for m in *min_m..=(*max_m).min(2 * n + 1) {
                    let sigmas = match n_sigma {
                        Some(s) => *s..=*s,
                        None => 0..=2 * n + 1 - m,
                    };
                    for s in sigmas {
                        let v = lossy_distinguishability(n, m, s, mode.resolve(n))?;
                        t.push(vec![
                            Cell::Int(n),
                            Cell::Int(m),
                            Cell::Int(s),
                            rational_cell(&v),
                        ]);
                    }
                }
            }
            t
        }
        Command::Frontier { max_n } => {
            let set: Vec<String> = violation_frontier(*max_n)
                .iter()
                .map(u64::to_string)
                .collect();
            let mut t = Table::new(vec!["max_n", "violation_set"]);
            t.push(vec![
                Cell::Int(*max_n),
                Cell::Text(format!("{{{}}}", set.join(","))),
            ]);
            t
        }
        Command::Asymptote { n } => {
            if n.is_empty() {
                return Err(usage("--n", "at least one cut index is required"));
            }
            let mut ns = n.clone();
            ns.sort_unstable();
            ns.dedup();
            let mut t = Table::new(vec!["N", "v_max", "abs_diff_2_over_pi"]);
            for n in ns {
                let v = v_max_closed(n, mode.resolve(n));
                let diff = (v.to_f64() - std::f64::consts::FRAC_2_PI).abs();
                t.push(vec![Cell::Int(n), rational_cell(&v), Cell::Float(diff)]);
            }
            t
        }
        Command::BsPreselect {
            g,
            t2,
            min_k,
            max_k,
        } => {
            if !(*t2 > 0.0 && *t2 <= 1.0) {
                return Err(usage("--t2", format!("{t2} is outside (0, 1]")));
            }
            if min_k > max_k {
                return Err(usage(
                    "--min-k",
                    format!("{min_k} exceeds --max-k {max_k}; the range is empty"),
                ));
            }
            let gain = gain_arg(*g)?;
            let mut t = Table::new(vec!["K_th", "best_N_th", "tv_distance"]);
            for row in bs_convergence_report(&gain, *t2, *min_k..=*max_k)? {
                t.push(vec![
                    Cell::Int(row.k_th),
                    Cell::Int(row.best_n_th),
                    Cell::Float(row.tv_distance),
                ]);
            }
            t
        }
        Command::Verify { group } => {
            return Ok(run_verify(*group, &verify::Subject::default()));
        }
    };
    Ok(Output::Table(table))
}

pub fn run_verify(group: Option<verify::Group>, subject: &verify::Subject) -> Output {
    let groups: Vec<_> = match group {
        Some(g) => vec![g],
        None => verify::Group::ALL.to_vec(),
    };
    let reports = verify::run(&groups, subject);
    let ok = reports.iter().all(verify::GroupReport::passed);
    let mut text: String = reports.iter().map(|r| r.line() + "\n").collect();
    if !ok {
        text.push_str("verification failed\n");
    }
    Output::Report(text, ok)
}

/// Parses, runs and writes; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let out = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let rendered = out.render(cli.format);
    let ok = !matches!(out, Output::Report(_, false));
    let written = match &cli.output {
        Some(path) => std::fs::write(path, &rendered)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(rendered.as_bytes())
                .map_err(|e| format!("cannot write to stdout: {e}"))
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return 1;
    }
    if ok {
        0
    } else {
        1
    }
}
