//! Command-line flags, JSON run manifests and their merge into one run setup.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dissipative_ssh::export::Format;
use dissipative_ssh::{Boundary, ModelConfig, Pattern};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "dssh", version, about = "Spectra, steady states and Zak phases of dissipative SSH chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Eigenvalues of the PT-symmetric effective Hamiltonian, optionally along a gamma sweep.
    Spectrum(SpectrumArgs),
    /// Rapidities of the third-quantized Liouvillean, optionally along a gamma sweep.
    Rapidities(RapiditiesArgs),
    /// NESS and MBS site occupations, or a dense-oracle relaxation trajectory.
    Occupations(OccupationsArgs),
    /// Complex Zak phase classes over a (theta, gamma) grid.
    Zak(ZakArgs),
    /// Spectra or rapidities under symmetric hopping disorder as a function of R.
    Disorder(DisorderArgs),
    /// Cross-checks against the dense oracle and closed forms; exit code 3 on failure.
    Validate,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Number of sites (even).
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub t: Option<f64>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Dimerization angle, in radians or as a fraction of pi ("pi/3", "2pi/3").
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta: Option<String>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub pattern: Option<Pattern>,
    #[arg(long, global = true)]
    pub boundary: Option<Boundary>,
    /// Brillouin-zone intervals for Zak phases.
    #[arg(long, global = true)]
    pub nk: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true)]
    pub format: Option<Format>,
    /// JSON run manifest; its entries override the flags.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GammaSweepArgs {
    #[arg(long)]
    pub gamma_min: Option<f64>,
    #[arg(long)]
    pub gamma_max: Option<f64>,
    #[arg(long)]
    pub gamma_steps: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub sweep: GammaSweepArgs,
    /// Also write right eigenvectors (single gamma only) as JSON to this path.
    #[arg(long)]
    pub eigenvectors: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct RapiditiesArgs {
    #[command(flatten)]
    pub sweep: GammaSweepArgs,
    /// Add the closed-form ring rapidities (U2, periodic) as extra columns.
    #[arg(long)]
    pub oracle: bool,
    #[command(flatten)]
    pub theta_sweep: ThetaSweepArgs,
    /// Also write the NESS covariance matrix (single gamma only) as JSON to this path.
    #[arg(long)]
    pub covariance: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightsArg {
    Projector,
    RightNorm,
    Biorthogonal,
}

#[derive(Args, Debug, Clone)]
pub struct OccupationsArgs {
    /// MBS site weights.
    #[arg(long, value_enum)]
    pub weights: Option<WeightsArg>,
    /// Instead of the profiles, evolve with the dense oracle up to this time (n <= 6).
    #[arg(long)]
    pub evolve: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Initial Fock state for --evolve as a 0/1 string, site 1 first; default empty.
    #[arg(long)]
    pub initial: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Effective,
    Liouvillean,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ThetaSweepArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub theta_min: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_max: Option<String>,
    #[arg(long)]
    pub theta_steps: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct ZakArgs {
    #[arg(long, value_enum)]
    pub which: Option<Which>,
    #[command(flatten)]
    pub theta_sweep: ThetaSweepArgs,
    #[command(flatten)]
    pub sweep: GammaSweepArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisorderMode {
    /// One realization per index, shared by every R.
    Reuse,
    /// A fresh realization for every (index, R) pair.
    Resample,
}

#[derive(Args, Debug, Clone)]
pub struct DisorderArgs {
    #[arg(long, value_enum)]
    pub which: Option<Which>,
    #[arg(long)]
    pub realizations: Option<usize>,
    /// Include the extreme realization xi_j = 1.
    #[arg(long)]
    pub extreme: bool,
    #[arg(long, value_enum)]
    pub disorder_mode: Option<DisorderMode>,
    #[arg(long)]
    pub r_min: Option<f64>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub r_steps: Option<usize>,
}

/// Inclusive linear grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn points(&self) -> Vec<f64> {
        if self.steps <= 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| if i + 1 == self.steps { self.max } else { self.min + h * i as f64 }).collect()
    }
}

/// Everything a manifest may set besides the model itself. Absent keys keep
/// the flag value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub gamma: Option<Axis>,
    #[serde(default)]
    pub theta: Option<Axis>,
    #[serde(default)]
    pub r: Option<Axis>,
    #[serde(default)]
    pub which: Option<Which>,
    #[serde(default)]
    pub n_k: Option<usize>,
    #[serde(default)]
    pub realizations: Option<usize>,
    #[serde(default)]
    pub extreme: Option<bool>,
    #[serde(default)]
    pub disorder_mode: Option<DisorderMode>,
    #[serde(default)]
    pub oracle: Option<bool>,
    #[serde(default)]
    pub weights: Option<WeightsArg>,
    #[serde(default)]
    pub evolve: Option<f64>,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub initial: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default)]
    pub config: Option<ModelConfig>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid manifest {}: {e}", path.display())))
    }
}

/// Parses an angle: a decimal in radians, or a multiple/fraction of pi such
/// as `pi`, `-pi/4`, `2pi/3`, `2*pi/3`, `0.5pi`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t: String = s.trim().to_ascii_lowercase().chars().filter(|c| !c.is_whitespace()).collect();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let bad = || format!("cannot parse angle '{s}' (use radians or forms like pi/3, 2pi/3)");
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a, Some(b)),
        None => (t.as_str(), None),
    };
    let pos = num.find("pi").ok_or_else(bad)?;
    if num[pos + 2..].chars().any(|c| c != '*') && !num[pos + 2..].is_empty() {
        return Err(bad());
    }
    let coef = num[..pos].trim_end_matches('*');
    let coef = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    let den = match den {
        None => 1.0,
        Some(d) => d.parse::<f64>().map_err(|_| bad())?,
    };
    if den == 0.0 {
        return Err(bad());
    }
    Ok(coef * PI / den)
}

/// Fully resolved inputs of one run.
#[derive(Clone, Debug)]
pub struct RunSetup {
    pub config: ModelConfig,
    pub sweep: SweepSpec,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl RunSetup {
    pub fn n_k(&self) -> usize {
        self.sweep.n_k.unwrap_or(dissipative_ssh::zak::DEFAULT_NK)
    }
}

fn theta_axis(a: &ThetaSweepArgs) -> Result<Option<Axis>, CliError> {
    match (&a.theta_min, &a.theta_max) {
        (None, None) => Ok(None),
        (Some(lo), Some(hi)) => Ok(Some(Axis {
            min: parse_angle(lo).map_err(CliError::Usage)?,
            max: parse_angle(hi).map_err(CliError::Usage)?,
            steps: a.theta_steps.unwrap_or(21),
        })),
        _ => Err(CliError::Usage("--theta-min and --theta-max must be given together".into())),
    }
}

fn gamma_axis(g: &GammaSweepArgs) -> Result<Option<Axis>, CliError> {
    match (g.gamma_min, g.gamma_max, g.gamma_steps) {
        (None, None, None) => Ok(None),
        (Some(min), Some(max), steps) => Ok(Some(Axis { min, max, steps: steps.unwrap_or(61) })),
        _ => Err(CliError::Usage("--gamma-min and --gamma-max must be given together".into())),
    }
}

/// Merges flags, subcommand options and the optional manifest (which wins).
pub fn resolve(cli: &Cli, command_name: &str) -> Result<RunSetup, CliError> {
    let c = &cli.common;
    let theta = match &c.theta {
        Some(s) => parse_angle(s).map_err(CliError::Usage)?,
        None => PI / 3.0,
    };
    let mut config = ModelConfig {
        n: c.n.unwrap_or(64),
        t: c.t.unwrap_or(1.0),
        delta: c.delta.unwrap_or(1.0),
        theta,
        gamma: c.gamma.unwrap_or(0.5),
        boundary: c.boundary.unwrap_or(Boundary::Open),
        pattern: c.pattern.unwrap_or(Pattern::U2),
    };
    let mut sweep = SweepSpec { n_k: c.nk, ..SweepSpec::default() };
    match &cli.command {
        Command::Spectrum(a) => sweep.gamma = gamma_axis(&a.sweep)?,
        Command::Rapidities(a) => {
            sweep.gamma = gamma_axis(&a.sweep)?;
            sweep.theta = theta_axis(&a.theta_sweep)?;
            sweep.oracle = Some(a.oracle);
        }
        Command::Occupations(a) => {
            sweep.weights = a.weights;
            sweep.evolve = a.evolve;
            sweep.steps = a.steps;
            sweep.initial = a.initial.clone();
        }
        Command::Zak(a) => {
            sweep.which = a.which;
            sweep.gamma = gamma_axis(&a.sweep)?;
            sweep.theta = theta_axis(&a.theta_sweep)?;
        }
        Command::Disorder(a) => {
            sweep.which = a.which;
            sweep.realizations = a.realizations;
            sweep.extreme = Some(a.extreme);
            sweep.disorder_mode = a.disorder_mode;
            sweep.r = Some(Axis { min: a.r_min.unwrap_or(0.0), max: a.r_max.unwrap_or(1.0), steps: a.r_steps.unwrap_or(101) });
        }
        Command::Validate => {}
    }
    let mut seed = c.seed.unwrap_or(0);
    let mut output = c.output.clone();
    let mut format = c.format.unwrap_or(Format::Csv);

    if let Some(path) = &c.manifest {
        let m = RunManifest::load(path)?;
        if let Some(cmd) = &m.command {
            if cmd != command_name {
                return Err(CliError::Usage(format!("manifest is for '{cmd}', not '{command_name}'")));
            }
        }
        if let Some(cfg) = m.config {
            config = cfg;
        }
        if let Some(s) = m.sweep {
            merge_sweep(&mut sweep, s);
        }
        if let Some(s) = m.seed {
            seed = s;
        }
        if let Some(p) = m.output_path {
            output = Some(p);
        }
        if let Some(f) = m.format {
            format = f.parse().map_err(CliError::Usage)?;
        }
    }
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(RunSetup { config, sweep, seed, output, format })
}

fn merge_sweep(base: &mut SweepSpec, over: SweepSpec) {
    macro_rules! take {
        ($($f:ident),*) => { $( if over.$f.is_some() { base.$f = over.$f; } )* };
    }
    take!(gamma, theta, r, which, n_k, realizations, extreme, disorder_mode, oracle, weights, evolve, steps, initial);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        let cases = [
            ("pi/3", PI / 3.0),
            ("2pi/3", 2.0 * PI / 3.0),
            ("2*pi/3", 2.0 * PI / 3.0),
            ("-pi/4", -PI / 4.0),
            ("pi", PI),
            ("0.5pi", PI / 2.0),
            ("1.25", 1.25),
            (" PI / 6 ", PI / 6.0),
        ];
        for (s, v) in cases {
            assert!((parse_angle(s).unwrap() - v).abs() < 1e-15, "{s}");
        }
        for s in ["", "pie", "pi/0", "x", "pi2", "3/pi"] {
            assert!(parse_angle(s).is_err(), "{s}");
        }
    }

    #[test]
    fn axis_points_are_inclusive() {
        let p = Axis { min: 0.0, max: 3.0, steps: 4 }.points();
        assert_eq!(p, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(Axis { min: 0.5, max: 9.0, steps: 1 }.points(), vec![0.5]);
    }

    #[test]
    fn manifest_round_trip() {
        let m = RunManifest {
            command: Some("zak".into()),
            config: Some(ModelConfig::unit(2, 1.0, 0.5, Boundary::Periodic, Pattern::U2).unwrap()),
            sweep: Some(SweepSpec { which: Some(Which::Liouvillean), ..Default::default() }),
            seed: Some(3),
            output_path: Some("out.csv".into()),
            format: Some("csv".into()),
        };
        let s = serde_json::to_string(&m).unwrap();
        let back: RunManifest = serde_json::from_str(&s).unwrap();
        assert_eq!(back.sweep, m.sweep);
        assert_eq!(back.config, m.config);
    }
}
