//! `soca` command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input, 3 infeasible or degenerate rate
//! equation, 4 type-count cap exceeded.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::experiments::{
    berry_esseen_study, convergence_study, default_n_grid, dominance_study, figure1_curve,
    first_order_divergence_check, format_float, to_csv_string, CsvRow,
};
use crate::model::{MixedSourceSpec, RawSource, SourceSpectrum, SourceStats, DEFAULT_ETA};
use crate::rates::{predict_rates, solve_second_order, two_source_rate, RateQuery, RateResult};
use crate::spectrum::{exact_spectrum, TypeCap};
use crate::universal::{hayashi_inclusion_check, universal_dims};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_CAP: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "soca", version, about = "Second-order rates and exact finite-blocklength oracles for mixed sources")]
struct Cli {
    /// Write the result to this file instead of stdout.
    #[arg(long, short = 'o', global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct EtaArg {
    /// Tolerance for grouping components by entropy (bits).
    #[arg(long, default_value_t = DEFAULT_ETA)]
    eta: f64,
}

#[derive(Debug, Clone)]
struct Reals(Vec<f64>);

#[derive(Debug, Clone)]
struct Blocklengths(Vec<usize>);

fn reals(
    parse: fn(&str) -> std::result::Result<Vec<f64>, String>,
) -> impl Fn(&str) -> std::result::Result<Reals, String> + Clone {
    move |s| parse(s).map(Reals)
}

fn blocklengths(s: &str) -> std::result::Result<Blocklengths, String> {
    parse_n_grid(s).map(Blocklengths)
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-component entropy, varentropy and sigma as CSV.
    Stats { spec: PathBuf },

    /// Second-order rate b at first-order rate a (a defaults to the optimal one).
    #[command(allow_negative_numbers = true)]
    Rate {
        spec: PathBuf,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        eta: EtaArg,
    },

    /// Closed-form rate for a two-component mixture.
    #[command(allow_negative_numbers = true)]
    RateTwo {
        #[arg(long)]
        s1: f64,
        #[arg(long)]
        sigma1: f64,
        #[arg(long)]
        s2: f64,
        #[arg(long)]
        sigma2: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        eta: EtaArg,
    },

    /// Exact minimal code size M at blocklength n.
    Oracle {
        spec: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
    },

    /// Exact spectral tail tr(ρⁿ {ρⁿ <= 2^gamma}).
    #[command(allow_negative_numbers = true)]
    Tail {
        spec: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        gamma: f64,
    },

    /// Exact information-spectrum quantile D_s^eps.
    Dseps {
        spec: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
    },

    /// Size of the universal code's kept type classes.
    #[command(allow_negative_numbers = true)]
    UniversalDim {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
    },

    /// Brute-force typical-set inclusion check for a memoryless source.
    #[command(allow_negative_numbers = true)]
    Inclusion {
        #[arg(long, value_parser = reals(parse_probs))]
        p: Reals,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
    },

    /// Exact (log2 M - na)/√n against the predicted b, as CSV.
    Converge {
        spec: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_parser = blocklengths)]
        n_grid: Option<Blocklengths>,
        #[command(flatten)]
        eta: EtaArg,
    },

    /// Exact tail against its Gaussian approximation, as CSV.
    BerryEsseen {
        #[arg(long, value_parser = reals(parse_probs))]
        p: Reals,
        #[arg(long, value_parser = reals(parse_real_grid), allow_hyphen_values = true)]
        l_grid: Reals,
        #[arg(long, value_parser = blocklengths)]
        n_grid: Option<Blocklengths>,
    },

    /// Cross tails of two memoryless sources at each other's entropy, as CSV.
    #[command(allow_negative_numbers = true)]
    Dominance {
        #[arg(long, value_parser = reals(parse_probs))]
        p1: Reals,
        #[arg(long, value_parser = reals(parse_probs))]
        p2: Reals,
        #[arg(long, default_value_t = 0.0)]
        c: f64,
        #[arg(long, value_parser = blocklengths)]
        n_grid: Option<Blocklengths>,
    },

    /// Equal-entropy rate L(eps) with its single-source bounds, as CSV.
    Figure1 {
        #[arg(long)]
        sigma1: f64,
        #[arg(long)]
        sigma2: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, value_parser = reals(parse_real_grid))]
        eps_grid: Reals,
    },

    /// (log2 M - n R)/√n for a candidate first-order rate R, as CSV.
    #[command(allow_negative_numbers = true)]
    Diverge {
        spec: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        wrong_a: f64,
        #[arg(long, value_parser = blocklengths)]
        n_grid: Option<Blocklengths>,
    },
}

/// Runs the CLI and returns the process exit code. Nothing is written to `out`
/// unless the command succeeds.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_INVALID
                }
            };
        }
    };

    let result = TypeCap::from_env().and_then(|cap| execute(&cli.command, cap));
    let text = match result {
        Ok(text) => text,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_code(&e);
        }
    };

    let written = match &cli.output {
        Some(path) => std::fs::write(path, &text)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => out.write_all(text.as_bytes()).map_err(|e| format!("cannot write output: {e}")),
    };
    match written {
        Ok(()) => EXIT_OK,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INVALID
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Invalid(_) | Error::Domain(_) | Error::EntropyOrder { .. } => EXIT_INVALID,
        Error::DegenerateSigma { .. }
        | Error::Infeasible { .. }
        | Error::BoundaryTEqualsEps { .. }
        | Error::NoFiniteRate { .. }
        | Error::Bracketing { .. } => EXIT_INFEASIBLE,
        Error::CapExceeded { .. } => EXIT_CAP,
    }
}

fn execute(command: &Command, cap: TypeCap) -> Result<String> {
    match command {
        Command::Stats { spec } => stats_csv(&load_spec(spec)?),
        Command::Rate { spec, a, eps, eta } => {
            let m = load_spec(spec)?;
            let r = match a {
                Some(a) => solve_second_order(&m, RateQuery::new(*a, *eps)?, eta.eta)?,
                None => predict_rates(&m, *eps, eta.eta)?,
            };
            rate_lines(&r)
        }
        Command::RateTwo { s1, sigma1, s2, sigma2, t, eps, eta } => {
            check_finite(&[("s1", *s1), ("sigma1", *sigma1), ("s2", *s2), ("sigma2", *sigma2)])?;
            let r = two_source_rate(
                SourceStats::new(*s1, *sigma1),
                SourceStats::new(*s2, *sigma2),
                *t,
                *eps,
                eta.eta,
            )?;
            rate_lines(&r)
        }
        Command::Oracle { spec, n, eps } => {
            check_eps(*eps)?;
            let c = exact_spectrum(&load_spec(spec)?, *n, cap)?.min_compression_length(*eps);
            Ok(format!("log2_M={}\nM={}\n", format_float(c.log2_m), c.m))
        }
        Command::Tail { spec, n, gamma } => {
            check_finite(&[("gamma", *gamma)])?;
            let v = exact_spectrum(&load_spec(spec)?, *n, cap)?.tail(*gamma);
            Ok(format!("tail={}\n", format_float(v)))
        }
        Command::Dseps { spec, n, eps } => {
            check_eps(*eps)?;
            let v = exact_spectrum(&load_spec(spec)?, *n, cap)?.d_s_eps(*eps);
            Ok(format!("d_s_eps={}\n", format_float(v)))
        }
        Command::UniversalDim { n, d, a, b } => {
            check_finite(&[("a", *a), ("b", *b)])?;
            let u = universal_dims(*n, *d, *a, *b, cap)?;
            let mut s = String::new();
            let _ = writeln!(s, "xi={}", u.xi_exact);
            let _ = writeln!(s, "log2_xi={}", format_float(u.log2_xi));
            let _ = writeln!(s, "log2_xi_bound={}", format_float(u.log2_xi_bound()));
            let _ = writeln!(s, "log2_upsilon_bound={}", format_float(u.log2_upsilon_bound));
            let _ = writeln!(s, "boundary_types={}", u.boundary_types);
            Ok(s)
        }
        Command::Inclusion { p, n, a, b } => {
            check_finite(&[("a", *a), ("b", *b)])?;
            let report = hayashi_inclusion_check(&SourceSpectrum::new(p.0.clone())?, *n, *a, *b)?;
            let mut s = String::new();
            let _ = writeln!(s, "typical_sequences={}", report.typical_sequences);
            let _ = writeln!(s, "holds={}", report.holds());
            if let Some(seq) = &report.violation {
                let seq: Vec<String> = seq.iter().map(ToString::to_string).collect();
                let _ = writeln!(s, "violation={}", seq.join(" "));
            }
            Ok(s)
        }
        Command::Converge { spec, eps, n_grid, eta } => {
            let grid = n_grid.as_ref().map_or_else(default_n_grid, |g| g.0.clone());
            let (_, rows) = convergence_study(&load_spec(spec)?, *eps, &grid, eta.eta, cap)?;
            to_csv_string(&rows)
        }
        Command::BerryEsseen { p, l_grid, n_grid } => {
            let grid = n_grid.as_ref().map_or_else(default_n_grid, |g| g.0.clone());
            let rows = berry_esseen_study(&SourceSpectrum::new(p.0.clone())?, &l_grid.0, &grid, cap)?;
            to_csv_string(&rows)
        }
        Command::Dominance { p1, p2, c, n_grid } => {
            check_finite(&[("c", *c)])?;
            let grid = n_grid.as_ref().map_or_else(default_n_grid, |g| g.0.clone());
            let rows = dominance_study(
                &SourceSpectrum::new(p1.0.clone())?,
                &SourceSpectrum::new(p2.0.clone())?,
                *c,
                &grid,
                cap,
            )?;
            to_csv_string(&rows)
        }
        Command::Figure1 { sigma1, sigma2, t, eps_grid } => {
            to_csv_string(&figure1_curve(*sigma1, *sigma2, *t, &eps_grid.0)?)
        }
        Command::Diverge { spec, eps, wrong_a, n_grid } => {
            check_finite(&[("wrong-a", *wrong_a)])?;
            let grid = n_grid.as_ref().map_or_else(default_n_grid, |g| g.0.clone());
            let rows = first_order_divergence_check(&load_spec(spec)?, *eps, *wrong_a, &grid, cap)?;
            to_csv_string(&rows)
        }
    }
}

fn load_spec(path: &Path) -> Result<MixedSourceSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Domain(format!("cannot read {}: {e}", path.display())))?;
    let raw: RawSource = serde_json::from_str(&text)
        .map_err(|e| Error::Domain(format!("malformed source file {}: {e}", path.display())))?;
    MixedSourceSpec::from_raw(&raw)
}

struct StatsRow {
    component: usize,
    weight: f64,
    stats: SourceStats,
}

impl CsvRow for StatsRow {
    fn header() -> &'static [&'static str] {
        &["component", "weight", "entropy", "varentropy", "sigma"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.component.to_string(),
            format_float(self.weight),
            format_float(self.stats.entropy),
            format_float(self.stats.varentropy),
            format_float(self.stats.sigma),
        ]
    }
}

fn stats_csv(m: &MixedSourceSpec) -> Result<String> {
    let rows: Vec<StatsRow> = m
        .components()
        .iter()
        .enumerate()
        .map(|(component, c)| StatsRow { component, weight: c.weight, stats: c.spectrum.stats() })
        .collect();
    to_csv_string(&rows)
}

fn rate_lines(r: &RateResult) -> Result<String> {
    if !r.b.is_finite() {
        return Err(Error::NoFiniteRate { a: r.a, b: r.b });
    }
    Ok(format!("a={}\nb={}\ncase={}\n", format_float(r.a), format_float(r.b), r.case.name()))
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("eps = {eps} is outside (0, 1)")))
    }
}

fn check_finite(values: &[(&str, f64)]) -> Result<()> {
    match values.iter().find(|(_, v)| !v.is_finite()) {
        Some((name, v)) => Err(Error::Domain(format!("--{name} must be finite (got {v})"))),
        None => Ok(()),
    }
}

fn parse_probs(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("bad probability {x:?}: {e}")))
        .collect()
}

/// `start:stop:step` (endpoints inclusive within half a step) or a comma list.
pub fn parse_real_grid(s: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("bad grid value {x:?}: {e}"));
            let (a, z, h) = (parse(start)?, parse(stop)?, parse(step)?);
            if !(a.is_finite() && z.is_finite() && h.is_finite()) || h <= 0.0 {
                return Err(format!("grid {s:?} needs finite bounds and a positive step"));
            }
            let count = ((z - a) / h + 0.5).floor();
            if count < 0.0 {
                return Err(format!("grid {s:?} is empty"));
            }
            if count > 1e7 {
                return Err(format!("grid {s:?} has too many points"));
            }
            let count = count as usize + 1;
            // scale by the decimal precision of the inputs so 0.01:0.99:0.01 hits 0.5 exactly
            let digits = [start, stop, step].iter().map(|x| decimal_digits(x)).max().flatten();
            Ok(match digits {
                Some(k) if k <= 15 => {
                    let scale = 10f64.powi(k as i32);
                    let (ia, ih) = ((a * scale).round(), (h * scale).round());
                    (0..count).map(|i| (ia + i as f64 * ih) / scale).collect()
                }
                _ => (0..count).map(|i| a + i as f64 * h).collect(),
            })
        }
        [_] => parse_probs(s).map_err(|e| e.replace("probability", "grid value")),
        _ => Err(format!("grid {s:?} must be start:stop:step or a comma list")),
    }
}

// digits after the decimal point of a plain decimal literal; None for exponent forms
fn decimal_digits(x: &str) -> Option<usize> {
    let x = x.trim();
    if x.contains(['e', 'E']) {
        return None;
    }
    Some(x.split_once('.').map_or(0, |(_, frac)| frac.len()))
}

/// Integer grid: `start:stop:step` or a comma list, all entries positive.
pub fn parse_n_grid(s: &str) -> std::result::Result<Vec<usize>, String> {
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("bad blocklength {x:?}: {e}"));
    let parts: Vec<&str> = s.split(':').collect();
    let grid: Vec<usize> = match parts.as_slice() {
        [start, stop, step] => {
            let (a, z, h) = (parse(start)?, parse(stop)?, parse(step)?);
            if h == 0 || z < a {
                return Err(format!("grid {s:?} needs start <= stop and a positive step"));
            }
            (a..=z).step_by(h).collect()
        }
        [_] => s.split(',').map(parse).collect::<std::result::Result<_, _>>()?,
        _ => return Err(format!("grid {s:?} must be start:stop:step or a comma list")),
    };
    if grid.contains(&0) {
        return Err("blocklengths must be positive".to_string());
    }
    Ok(grid)
}
