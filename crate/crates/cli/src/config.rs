use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rsplab::bloch::equatorial_protocol;
use rsplab::io::FamilyFile;
use rsplab::protocol::{pauli_family, shift_family, ProbRule, RspProtocol};
use rsplab::rsp_eq::{StateSampler, DEFAULT_TOL};

use crate::Failure;

#[derive(Debug, Parser)]
#[command(name = "rsplab", version, about = "Exact remote state preparation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the protocol on sampled states, one transcript per sample.
    DemoRsp(Common),
    /// Feasibility scan of the RSP equation over sampled states.
    Scan(Common),
    /// Oblivious-bound report for a family.
    Bounds(Common),
    /// Qubit n = 3 impossibility check at sampled Bloch vectors.
    BlochImpossibility(Common),
    /// Equatorial two-message protocol demo.
    EquatorDemo(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Hilbert-space dimension; defaults to 2, or to the file's `d`.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub dim: Option<u64>,
    /// Keep only the first N unitaries of the family.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: Option<u64>,
    /// shift | pauli | equatorial | file:<path>
    #[arg(long, default_value = "shift")]
    pub family: FamilySpec,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    #[arg(long, env = "RSPLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOL, value_parser = parse_tol)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,
    /// Write primary output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the family's default state sampler.
    #[arg(long, value_enum)]
    pub sampler: Option<SamplerArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    Haar,
    Equatorial,
    Generic,
}

impl From<SamplerArg> for StateSampler {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::Haar => StateSampler::Haar,
            SamplerArg::Equatorial => StateSampler::Equatorial,
            SamplerArg::Generic => StateSampler::Generic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilySpec {
    Shift,
    Pauli,
    Equatorial,
    File(PathBuf),
}

impl FromStr for FamilySpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "shift" => Ok(Self::Shift),
            "pauli" => Ok(Self::Pauli),
            "equatorial" => Ok(Self::Equatorial),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(Self::File(p.into())),
                _ => Err(format!(
                    "unknown family `{s}` (expected shift, pauli, equatorial or file:<path>)"
                )),
            },
        }
    }
}

impl FamilySpec {
    pub fn label(&self) -> String {
        match self {
            Self::Shift => "shift".into(),
            Self::Pauli => "pauli".into(),
            Self::Equatorial => "equatorial".into(),
            Self::File(p) => format!("file:{}", p.display()),
        }
    }
}

fn parse_tol(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if t.is_finite() && t > 0.0 {
        Ok(t)
    } else {
        Err("tolerance must be a positive finite number".into())
    }
}

/// A validated configuration with its family resolved.
pub struct Resolved {
    pub common: Common,
    pub family: RspProtocol,
    pub sampler: StateSampler,
}

impl Resolved {
    pub fn d(&self) -> usize {
        self.family.d()
    }
}

fn fixed_qubit(name: &str, dim: Option<u64>) -> Result<(), Failure> {
    match dim {
        None | Some(2) => Ok(()),
        Some(d) => Err(Failure::Config(format!("the {name} family requires --dim 2, got {d}"))),
    }
}

pub fn resolve(common: Common) -> Result<Resolved, Failure> {
    let family = match &common.family {
        FamilySpec::Shift => shift_family(common.dim.unwrap_or(2) as usize)
            .map_err(|e| Failure::Config(e.to_string()))?,
        FamilySpec::Pauli => {
            fixed_qubit("pauli", common.dim)?;
            pauli_family()
        }
        FamilySpec::Equatorial => {
            fixed_qubit("equatorial", common.dim)?;
            equatorial_protocol()
        }
        FamilySpec::File(path) => {
            let file = FamilyFile::load(path).map_err(|e| {
                Failure::Config(format!("family file {}: {e}", path.display()))
            })?;
            let proto = file.into_protocol().map_err(|e| {
                Failure::Config(format!("family file {}: {e}", path.display()))
            })?;
            if let Some(d) = common.dim {
                if d as usize != proto.d() {
                    return Err(Failure::Config(format!(
                        "--dim {d} disagrees with the family file (d = {})",
                        proto.d()
                    )));
                }
            }
            proto
        }
    };
    let family = match common.n {
        None => family,
        Some(n) => truncate(&family, n as usize)?,
    };
    let sampler = match (common.sampler, &common.family) {
        (Some(s), _) => s.into(),
        (None, FamilySpec::Equatorial) => StateSampler::Equatorial,
        (None, _) => StateSampler::Haar,
    };
    if sampler != StateSampler::Haar && family.d() != 2 {
        return Err(Failure::Config(format!(
            "the {sampler:?} sampler requires d = 2, family has d = {}",
            family.d()
        )));
    }
    Ok(Resolved {
        common,
        family,
        sampler,
    })
}

/// Keeps a solver-backed rule solver-backed; everything else becomes uniform.
fn truncate(family: &RspProtocol, n: usize) -> Result<RspProtocol, Failure> {
    let cut = family
        .truncated(n)
        .map_err(|_| Failure::Config(format!("--n {n} exceeds family size {}", family.n())))?;
    match family.prob_rule() {
        ProbRule::StateDependent {
            closed_form: None,
            tol,
        } => cut
            .with_rule(ProbRule::StateDependent {
                closed_form: None,
                tol: *tol,
            })
            .map_err(|e| Failure::Config(e.to_string())),
        _ => Ok(cut),
    }
}
