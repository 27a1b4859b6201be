//! JSON experiment configuration: schema, validation, and the mapping
//! from specs to library objects.

use serde::{Deserialize, Serialize};

use artkit::domain::Generator;
use artkit::hybrid::{DivideAndConquerGenerator, DncConfig, ForgettingFscsGenerator, ForgettingPolicy};
use artkit::pbs::{PartitionSchema, PbsGenerator, SelectionCriterion};
use artkit::qrs::{QrsGenerator, QuasiSequence, RandomizerKind};
use artkit::simlab::FailurePattern;
use artkit::stfcs::{FscsConfig, FscsGenerator, McmcConfig, McmcGenerator, RrtConfig, RrtGenerator};
use artkit::tpbs::{ProfileKind, TpbsGenerator};
use artkit::{ArtError, InputDomain, RtGenerator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub profile: ProfileSpec,
    pub generators: Vec<GeneratorSpec>,
    pub campaign: CampaignSpec,
    /// Record wall-clock F-time per run. Off by default so replayed
    /// reports are byte-identical.
    #[serde(default)]
    pub measure_time: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub d: usize,
    /// Per-dimension [lo, hi) bounds; unit hypercube when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl DomainSpec {
    pub fn build(&self) -> artkit::Result<InputDomain> {
        match &self.bounds {
            None => Ok(InputDomain::unit(self.d)),
            Some(b) => {
                if b.len() != self.d {
                    return Err(ArtError::DimensionMismatch {
                        expected: self.d,
                        got: b.len(),
                    });
                }
                InputDomain::new(b.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub theta: f64,
    pub pattern: PatternSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PatternSpec {
    BlockSquare,
    BlockRect { aspect: f64 },
    Strip,
    PointEqualCircles { count: usize },
    PointEqualSquares { count: usize },
    PredominantSquares { count: usize, q_percent: f64 },
}

impl PatternSpec {
    pub fn build(&self) -> FailurePattern {
        match *self {
            PatternSpec::BlockSquare => FailurePattern::BlockSquare,
            PatternSpec::BlockRect { aspect } => FailurePattern::BlockRect { aspect },
            PatternSpec::Strip => FailurePattern::Strip,
            PatternSpec::PointEqualCircles { count } => {
                FailurePattern::PointEqualCircles { count }
            }
            PatternSpec::PointEqualSquares { count } => {
                FailurePattern::PointEqualSquares { count }
            }
            PatternSpec::PredominantSquares { count, q_percent } => {
                FailurePattern::PredominantSquares { count, q_percent }
            }
        }
    }
}

fn default_k() -> usize {
    10
}

fn default_target_ratio() -> f64 {
    1.0
}

fn default_lambda() -> usize {
    30
}

fn default_quota() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Rt,
    Fscs {
        #[serde(default = "default_k")]
        k: usize,
    },
    Rrt {
        #[serde(default = "default_target_ratio")]
        target_ratio: f64,
    },
    Mcmc,
    Halton,
    Sobol,
    VanDerCorput,
    Tpbs,
    Pbs,
    FscsForgetting {
        #[serde(default = "default_lambda")]
        lambda: usize,
    },
    Dnc {
        #[serde(default = "default_quota")]
        quota: usize,
    },
}

impl GeneratorSpec {
    /// Stable label used in CSV rows and report tables.
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorSpec::Rt => "rt",
            GeneratorSpec::Fscs { .. } => "fscs",
            GeneratorSpec::Rrt { .. } => "rrt",
            GeneratorSpec::Mcmc => "mcmc",
            GeneratorSpec::Halton => "halton",
            GeneratorSpec::Sobol => "sobol",
            GeneratorSpec::VanDerCorput => "van_der_corput",
            GeneratorSpec::Tpbs => "tpbs",
            GeneratorSpec::Pbs => "pbs",
            GeneratorSpec::FscsForgetting { .. } => "fscs_forgetting",
            GeneratorSpec::Dnc { .. } => "dnc",
        }
    }

    pub fn build(&self, domain: &InputDomain) -> artkit::Result<Box<dyn Generator + Send>> {
        let domain = domain.clone();
        Ok(match *self {
            GeneratorSpec::Rt => Box::new(RtGenerator::new(domain)),
            GeneratorSpec::Fscs { k } => {
                if k < 1 {
                    return Err(ArtError::InvalidConfig("k must be >= 1".into()));
                }
                Box::new(FscsGenerator::new(
                    domain,
                    FscsConfig {
                        k,
                        ..FscsConfig::default()
                    },
                ))
            }
            GeneratorSpec::Rrt { target_ratio } => Box::new(RrtGenerator::new(
                domain,
                RrtConfig {
                    target_ratio,
                    ..RrtConfig::default()
                },
            )),
            GeneratorSpec::Mcmc => {
                let cfg = McmcConfig::for_domain(&domain);
                Box::new(McmcGenerator::new(domain, cfg))
            }
            GeneratorSpec::Halton => {
                let seq = QuasiSequence::halton_default(domain.dims());
                Box::new(QrsGenerator::new(domain, seq, RandomizerKind::None)?)
            }
            GeneratorSpec::Sobol => {
                let seq = QuasiSequence::sobol_default(domain.dims());
                Box::new(QrsGenerator::new(domain, seq, RandomizerKind::None)?)
            }
            GeneratorSpec::VanDerCorput => Box::new(QrsGenerator::new(
                domain,
                QuasiSequence::VanDerCorput { base: 2 },
                RandomizerKind::None,
            )?),
            GeneratorSpec::Tpbs => Box::new(TpbsGenerator::new(domain, ProfileKind::Triangle)),
            GeneratorSpec::Pbs => Box::new(PbsGenerator::new(
                domain,
                PartitionSchema::BisectionAllDims,
                SelectionCriterion::FewestTests,
            )),
            GeneratorSpec::FscsForgetting { lambda } => {
                if lambda < 1 {
                    return Err(ArtError::InvalidConfig("lambda must be >= 1".into()));
                }
                Box::new(ForgettingFscsGenerator::new(
                    domain,
                    FscsConfig::default(),
                    ForgettingPolicy::RecentWindow { lambda },
                ))
            }
            GeneratorSpec::Dnc { quota } => {
                if quota < 1 {
                    return Err(ArtError::InvalidConfig("quota must be >= 1".into()));
                }
                Box::new(DivideAndConquerGenerator::new(
                    domain,
                    DncConfig {
                        quota,
                        ..DncConfig::default()
                    },
                ))
            }
        })
    }
}

fn default_cap() -> u64 {
    artkit::simlab::DEFAULT_CAP
}

fn default_ci_level() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSpec {
    /// Replications; when omitted the count is derived from a 200-run
    /// pilot (z = 1.96, r = 5% relative accuracy on the mean).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<u64>,
    #[serde(default = "default_cap")]
    pub cap: u64,
    pub seed: u64,
    #[serde(default = "default_ci_level")]
    pub ci_level: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> artkit::Result<()> {
        if self.domain.d == 0 {
            return Err(ArtError::InvalidConfig("d must be >= 1".into()));
        }
        if !(self.profile.theta > 0.0 && self.profile.theta < 1.0) {
            return Err(ArtError::InvalidConfig(format!(
                "theta must lie in (0, 1), got {}",
                self.profile.theta
            )));
        }
        if self.generators.is_empty() {
            return Err(ArtError::InvalidConfig("at least one generator required".into()));
        }
        if !(self.campaign.ci_level > 0.0 && self.campaign.ci_level < 1.0) {
            return Err(ArtError::InvalidConfig("ci_level must lie in (0, 1)".into()));
        }
        if self.campaign.cap < 1 {
            return Err(ArtError::InvalidConfig("cap must be >= 1".into()));
        }
        if self.campaign.runs == Some(0) {
            return Err(ArtError::InvalidConfig("runs must be >= 1".into()));
        }
        let domain = self.domain.build()?;
        for g in &self.generators {
            g.build(&domain)?;
        }
        Ok(())
    }
}
