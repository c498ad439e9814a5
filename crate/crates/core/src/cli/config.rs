//! Experiment configuration files.

use std::fmt;
use std::path::PathBuf;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::dependence::ModelSpec;
use crate::estimators::YGridPolicy;
use crate::mc::parse_seed;
use crate::ruin::Horizon;

/// A 64-bit seed written as a JSON number, a decimal string or a `0x` string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl<'de> Deserialize<'de> for Seed {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct SeedVisitor;
        impl Visitor<'_> for SeedVisitor {
            type Value = Seed;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative integer or a decimal/hex string")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Seed, E> {
                Ok(Seed(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Seed, E> {
                u64::try_from(v).map(Seed).map_err(|_| E::custom("seed must be non-negative"))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Seed, E> {
                parse_seed(v).map(Seed).map_err(E::custom)
            }
        }
        d.deserialize_any(SeedVisitor)
    }
}

fn default_blocks() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<Seed>,
    #[serde(default = "default_blocks")]
    pub blocks: usize,
    pub command: Command,
    #[serde(default)]
    pub output: OutputPaths,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    #[default]
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Command {
    Validate {},
    Breiman {
        /// Defaults to the tail index of `F`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        #[serde(default)]
        method: MethodName,
        /// Sample size for `monte_carlo`.
        #[serde(default, rename = "N", alias = "n", skip_serializing_if = "Option::is_none")]
        n: Option<u64>,
    },
    TailRatio {
        thresholds: Vec<f64>,
        #[serde(rename = "N", alias = "n")]
        n: u64,
    },
    CdCheck {
        x_grid: Vec<f64>,
        policy: YGridPolicy,
    },
    Ruin {
        x_grid: Vec<f64>,
        /// A period count or `"inf"`.
        #[serde(rename = "n")]
        horizon: Horizon,
        #[serde(rename = "N")]
        n_samples: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail_tol: Option<f64>,
    },
    TermTail {
        i: u64,
        x_grid: Vec<f64>,
        #[serde(rename = "N", alias = "n")]
        n: u64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate {} => "validate",
            Command::Breiman { .. } => "breiman",
            Command::TailRatio { .. } => "tail-ratio",
            Command::CdCheck { .. } => "cd-check",
            Command::Ruin { .. } => "ruin",
            Command::TermTail { .. } => "term-tail",
        }
    }
}

/// Default `tail_tol` for infinite-horizon ruin.
pub const DEFAULT_TAIL_TOL: f64 = 1e-3;
