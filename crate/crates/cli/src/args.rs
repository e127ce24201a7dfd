//! Command-line and config-file forms of every command.
//!
//! Each argument struct parses both from flags and from a TOML run config
//! with the same field names (`s_prime` for `--s-prime`).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use doubling_core::packing::{PackingMode, RadiiPolicy, DEFAULT_ORACLE_CAP};
use doubling_core::scenarios::Scenario;
use serde::de::{self, Deserializer};
use serde::Deserialize;

use crate::real::Real;

#[derive(Debug, Clone, Parser)]
#[command(name = "doubling", version, about = "Doubling measures and packing dimensions on finite spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// One command; a run config is this enum tagged by `command`.
#[derive(Debug, Clone, Subcommand, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Write a generated space.
    Gen(GenArgs),
    /// Packing profile and dimension curves of a space.
    Dims(DimsArgs),
    /// Construct a measure through the net hierarchy.
    Measure(MeasureArgs),
    /// Check ball-ratio bounds of a measure.
    Verify(VerifyArgs),
    /// Run the three worked examples end to end.
    Demo(DemoArgs),
    /// Run the command described by a TOML file.
    #[serde(skip)]
    Run(RunArgs),
}

pub type RunConfig = Command;

#[derive(Debug, Clone, Args, Deserialize)]
pub struct GenArgs {
    #[command(subcommand)]
    #[serde(flatten)]
    pub generator: Generator,
}

#[derive(Debug, Clone, Subcommand, Deserialize)]
#[serde(tag = "generator", rename_all = "lowercase")]
pub enum Generator {
    /// Endpoints of a truncated Cantor set.
    Cantor {
        #[arg(long)]
        ratio: Real,
        #[arg(long)]
        level: u32,
        #[arg(long, default_value = "[0,1]")]
        #[serde(default = "unit_interval")]
        interval: Interval,
        #[arg(long)]
        out: PathBuf,
    },
    /// Union of Cantor pieces given as `cantor:RATIO:LEVEL:[A,B]`.
    Union {
        #[arg(required = true, num_args = 2..)]
        parts: Vec<CantorPart>,
        #[arg(long)]
        out: PathBuf,
    },
    /// One of the worked examples at a demo level.
    Scenario {
        #[arg(long, value_parser = parse_scenario)]
        name: Scenario,
        #[arg(long)]
        level: u32,
        /// Also write the average of the uniform measures on the pieces.
        #[arg(long)]
        #[serde(default)]
        branch_measure: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimsArgs {
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_parser = parse_policy, default_value = "dyadic")]
    #[serde(default = "default_policy")]
    pub policy: RadiiPolicy,
    #[arg(long, value_parser = parse_mode, default_value = "exact")]
    #[serde(default = "default_mode")]
    pub mode: PackingMode,
    /// Spacing of the exponent grid.
    #[arg(long, default_value = "0.01")]
    #[serde(default = "default_resolution")]
    pub resolution: Real,
    #[arg(long, default_value = "2")]
    #[serde(default = "default_gamma_max")]
    pub gamma_max: Real,
    /// Rescale to diameter 0.99 and cap scales at 1.
    #[arg(long)]
    #[serde(default)]
    pub normalized: bool,
    /// Largest ball handed to the exact packing oracle.
    #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
    #[serde(default = "default_oracle_cap")]
    pub oracle_cap: usize,
    #[arg(long)]
    #[serde(default)]
    pub scale_cap: Option<Real>,
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureArgs {
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Scale base; chosen from the exponent constraints when absent.
    #[arg(long)]
    #[serde(default)]
    pub a: Option<Real>,
    #[arg(long)]
    #[serde(default)]
    pub s: Option<Real>,
    #[arg(long)]
    #[serde(default)]
    pub t: Option<Real>,
    #[arg(long)]
    pub s_prime: Real,
    #[arg(long)]
    pub t_prime: Real,
    #[arg(long, default_value = "1")]
    #[serde(default = "one")]
    pub c_s: Real,
    #[arg(long, default_value = "1")]
    #[serde(default = "one")]
    pub c_t: Real,
    #[arg(long)]
    #[serde(default)]
    pub normalized: bool,
    /// Visit close pairs in a seeded random order instead of by id.
    #[arg(long)]
    #[serde(default)]
    pub shuffle: bool,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long)]
    pub measure: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub gamma_upper: Real,
    #[arg(long)]
    pub gamma_lower: Real,
    #[arg(long)]
    #[serde(default)]
    pub normalized: bool,
    #[arg(long)]
    #[serde(default)]
    pub scale_cap: Option<Real>,
    /// Check only this many seeded centers.
    #[arg(long)]
    #[serde(default)]
    pub sample_centers: Option<usize>,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 6)]
    #[serde(default = "default_level")]
    pub level: u32,
    #[arg(long, default_value = "9")]
    #[serde(default = "default_scale_base")]
    pub a: Real,
    #[arg(long, default_value = "0.01")]
    #[serde(default = "default_resolution")]
    pub resolution: Real,
    /// Fail when the run takes longer than this many seconds.
    #[arg(long, default_value = "60")]
    #[serde(default = "default_budget")]
    pub budget_seconds: Real,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
}

fn unit_interval() -> Interval {
    Interval(0.0, 1.0)
}
fn default_policy() -> RadiiPolicy {
    RadiiPolicy::Dyadic
}
fn default_mode() -> PackingMode {
    PackingMode::Exact
}
fn default_resolution() -> Real {
    Real(0.01)
}
fn default_gamma_max() -> Real {
    Real(2.0)
}
fn default_oracle_cap() -> usize {
    DEFAULT_ORACLE_CAP
}
fn one() -> Real {
    Real(1.0)
}
fn default_level() -> u32 {
    6
}
fn default_scale_base() -> Real {
    Real(9.0)
}
fn default_budget() -> Real {
    Real(60.0)
}

pub fn parse_policy(s: &str) -> Result<RadiiPolicy, String> {
    match s {
        "spectrum" => Ok(RadiiPolicy::Spectrum),
        "dyadic" => Ok(RadiiPolicy::Dyadic),
        _ => Err(format!("unknown radii policy {s:?} (spectrum | dyadic)")),
    }
}

pub fn parse_mode(s: &str) -> Result<PackingMode, String> {
    match s {
        "exact" => Ok(PackingMode::Exact),
        "greedy" => Ok(PackingMode::Greedy),
        _ => Err(format!("unknown packing mode {s:?} (exact | greedy)")),
    }
}

pub fn parse_scenario(s: &str) -> Result<Scenario, String> {
    Scenario::ALL
        .into_iter()
        .find(|sc| sc.name() == s)
        .ok_or_else(|| format!("unknown scenario {s:?} (cantor | disjoint | touching)"))
}

/// Closed interval `[a, b]`, written `[a,b]` or `a,b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval(pub f64, pub f64);

impl FromStr for Interval {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
        let (a, b) = inner.split_once(',').ok_or_else(|| format!("interval {s:?} needs the form [a,b]"))?;
        Ok(Interval(a.parse::<Real>()?.get(), b.parse::<Real>()?.get()))
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Form {
            Pair(Real, Real),
            Text(String),
        }
        match Form::deserialize(d)? {
            Form::Pair(a, b) => Ok(Interval(a.get(), b.get())),
            Form::Text(s) => s.parse().map_err(de::Error::custom),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.0, self.1)
    }
}

/// `cantor:RATIO:LEVEL:[A,B]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CantorPart {
    pub ratio: f64,
    pub level: u32,
    pub interval: Interval,
}

impl FromStr for CantorPart {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut it = s.splitn(4, ':');
        let kind = it.next().unwrap_or_default();
        if kind != "cantor" {
            return Err(format!("unknown generator {kind:?} in {s:?}"));
        }
        let (Some(ratio), Some(level), Some(interval)) = (it.next(), it.next(), it.next()) else {
            return Err(format!("{s:?} needs the form cantor:RATIO:LEVEL:[A,B]"));
        };
        Ok(CantorPart {
            ratio: ratio.parse::<Real>()?.get(),
            level: level.parse().map_err(|_| format!("bad level {level:?}"))?,
            interval: interval.parse()?,
        })
    }
}

impl<'de> Deserialize<'de> for CantorPart {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}

fn rebase(path: &mut PathBuf, base: &Path) {
    if path.is_relative() {
        *path = base.join(&*path);
    }
}

impl Command {
    /// Resolves relative paths of a config file against its directory.
    pub fn rebase_paths(&mut self, base: &Path) {
        match self {
            Command::Gen(g) => match &mut g.generator {
                Generator::Cantor { out, .. } | Generator::Union { out, .. } | Generator::Scenario { out, .. } => {
                    rebase(out, base)
                }
            },
            Command::Dims(d) => {
                rebase(&mut d.space, base);
                rebase(&mut d.out, base);
            }
            Command::Measure(m) => {
                rebase(&mut m.space, base);
                rebase(&mut m.out, base);
            }
            Command::Verify(v) => {
                rebase(&mut v.space, base);
                rebase(&mut v.measure, base);
                rebase(&mut v.out, base);
            }
            Command::Demo(d) => rebase(&mut d.out, base),
            Command::Run(r) => rebase(&mut r.config, base),
        }
    }
}
