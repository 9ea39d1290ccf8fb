//! Argument and config-file parsing.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Deserialize;
use statdisc_core::C64;

pub const GRID_ENV: &str = "STATDISC_GRID";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    DiscMake,
    DiscInvert,
    DiscThrough,
    Lift,
    Verify,
    IndicesMaslov,
    IndicesPartial,
    IndicesReplay,
    Solve,
    FamilyDim,
    Jacobians,
    Indicatrix,
    Transport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolChoice {
    #[default]
    ClosedForm,
    GBased,
}

/// Every option, all optional so that file values can fill the gaps.
///
/// Complex numbers are written `1.5`, `0.3+0.2i` or `-2i`; vectors are
/// comma-separated.
#[derive(Debug, Clone, Default, PartialEq, clap::Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Flags {
    /// Complex dimension n of the α-block.
    #[arg(long)]
    pub n: Option<usize>,
    /// Hermitian matrix A: n real diagonal entries or n² complex entries, row-major.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub quadric: Option<Vec<String>>,
    /// Pole parameter a, |a| < 1.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    /// Disc vector w ∈ Cⁿ
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub w: Option<Vec<String>>,
    /// Translation v ∈ Cⁿ of the disc
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub v: Option<Vec<String>>,
    /// Imaginary part of the first coordinate of the disc center
    #[arg(long, allow_hyphen_values = true)]
    pub y0: Option<f64>,
    /// Lift scale b > 0.
    #[arg(long)]
    pub b: Option<f64>,
    /// First center coordinate; the α-block of the center is zero.
    #[arg(long, allow_hyphen_values = true)]
    pub p0: Option<String>,
    /// Full center (p₀, p_α); overrides --p0.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub p: Option<Vec<String>>,
    /// Boundary point (z₀, z_α).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub z: Option<Vec<String>>,
    /// Scale of the perturbation s.
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    /// Perturbation terms `coeff:e₁,…,e_{2n+2}` separated by `;`, exponents over
    /// (Re z₀, Im z₀, Re z₁…Re z_n, Im z₁…Im z_n). Default (Re z₁)⁴.
    #[arg(long, allow_hyphen_values = true)]
    pub perturbation: Option<String>,
    /// Boundary grid size; falls back to STATDISC_GRID, then 256
    #[arg(long)]
    pub grid: Option<usize>,
    /// Fourier truncation M of the solver.
    #[arg(long)]
    pub trunc: Option<usize>,
    /// Newton residual tolerance
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Newton iteration cap per homotopy step
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Pin h(0) to the center of the start disc.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub pinned: Option<bool>,
    /// Matrix symbol used by the index subcommands.
    #[arg(long, value_enum)]
    pub symbol: Option<SymbolChoice>,
    /// Differential dF_p, (n+1)² complex entries row-major; default identity.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub df: Option<Vec<String>>,
    /// Sample count for the indicatrix.
    #[arg(long)]
    pub count: Option<usize>,
    /// Random instances for the randomized suites.
    #[arg(long)]
    pub instances: Option<usize>,
    /// Worker threads for the indicatrix.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output format (default json)
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Seed for random parameters and randomized suites
    #[arg(long, allow_hyphen_values = true)]
    pub seed: Option<u64>,
    /// Hypersurface JSON `{"n", "A", "epsilon", "terms"}`; replaces --quadric
    /// and --perturbation, and --epsilon overrides its scale.
    #[arg(long)]
    pub surface: Option<PathBuf>,
    /// Boundary samples for disc-invert: JSON `[[ [re, im], … ], …]` per component.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

impl Flags {
    /// `self` with gaps filled from `file`.
    pub fn over(self, file: Flags) -> Flags {
        macro_rules! pick {
            ($($f:ident),*) => { Flags { $($f: self.$f.or(file.$f)),* } };
        }
        pick!(
            n, quadric, a, w, v, y0, b, p0, p, z, epsilon, perturbation, grid, trunc, tolerance, max_iterations, pinned,
            symbol, df, count, instances, threads, format, seed, surface, input
        )
    }
}

#[derive(Debug, Parser)]
#[command(name = "statdisc", version, about = "Stationary discs of hyperquadrics and their perturbations")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON file with default values for any flag (kebab-case keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub flags: Flags,
}

/// A fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub flags: Flags,
    pub grid: usize,
    pub format: Format,
}

#[derive(Debug)]
pub enum ConfigError {
    /// clap handled `--help` or `--version`.
    Display(String),
    Usage(String),
}

pub fn parse_config<I, T>(args: I, env_grid: Option<String>) -> Result<RunConfig, ConfigError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ConfigError::Display(e.to_string()),
        _ => ConfigError::Usage(e.to_string()),
    })?;
    let file = match &cli.config {
        Some(path) => read_file(path)?,
        None => Flags::default(),
    };
    let flags = cli.flags.over(file);
    let env = match env_grid {
        Some(s) => Some(s.trim().parse::<usize>().map_err(|_| ConfigError::Usage(format!("{GRID_ENV}={s} is not a grid size")))?),
        None => None,
    };
    let grid = flags.grid.or(env).unwrap_or(statdisc_core::boundary::DEFAULT_GRID);
    let format = flags.format.unwrap_or_default();
    Ok(RunConfig { command: cli.command, flags, grid, format })
}

fn read_file(path: &Path) -> Result<Flags, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ConfigError::Usage(format!("{}: {e}", path.display())))
}

pub fn parse_complex(s: &str) -> Result<C64, String> {
    let t = s.trim().replace(' ', "");
    t.parse::<C64>().map_err(|_| format!("'{s}' is not a complex number"))
}

pub fn parse_complex_list(items: &[String]) -> Result<Vec<C64>, String> {
    items.iter().map(|s| parse_complex(s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = Flags { grid: Some(128), n: Some(2), ..Flags::default() };
        let cli = Flags { grid: Some(512), ..Flags::default() };
        let merged = cli.over(file);
        assert_eq!(merged.grid, Some(512));
        assert_eq!(merged.n, Some(2));
    }

    #[test]
    fn parses_indices_maslov() {
        let cfg = parse_config(["statdisc", "indices-maslov", "--n", "1", "--a", "0.5", "--w", "1"], None).unwrap();
        assert_eq!(cfg.command, Command::IndicesMaslov);
        assert_eq!(cfg.flags.a.as_deref(), Some("0.5"));
    }

    #[test]
    fn env_grid_is_below_flags() {
        let cfg = parse_config(["statdisc", "lift"], Some("64".into())).unwrap();
        assert_eq!(cfg.grid, 64);
        let cfg = parse_config(["statdisc", "lift", "--grid", "32"], Some("64".into())).unwrap();
        assert_eq!(cfg.grid, 32);
    }

    #[test]
    fn unknown_flag_is_usage() {
        assert!(matches!(parse_config(["statdisc", "lift", "--bogus"], None), Err(ConfigError::Usage(_))));
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("0.3+0.2i").unwrap(), C64::new(0.3, 0.2));
        assert_eq!(parse_complex("-2i").unwrap(), C64::new(0.0, -2.0));
        assert_eq!(parse_complex("4").unwrap(), C64::new(4.0, 0.0));
        assert!(parse_complex("x").is_err());
    }
}
