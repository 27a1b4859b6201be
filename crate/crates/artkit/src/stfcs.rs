//! Select-test-from-candidates generators: FSCS with the distance fitness
//! family, restricted random testing (exclusion regions), and MCMC-style
//! restriction.

use crate::domain::{uniform_point, ExecutedSet, Generator, InputDomain, TestCase};
use crate::error::{ArtError, Result};
use crate::metrics::{discrepancy_over, dist_unchecked, SubdomainSample};
use crate::rng::RngStream;

pub const DEFAULT_RETRY_BUDGET: u64 = 1_000_000;

/// Candidate fitness families for FSCS selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitnessKind {
    /// Distance to the nearest executed test.
    MinDistance,
    /// Mean distance over all executed tests.
    AvgDistance,
    /// Distance to the farthest executed test.
    MaxDistance,
    /// Distance to the centroid of the executed set.
    CentroidDistance,
    /// `1 - discrepancy(E ∪ {c})`.
    DiscrepancyGain,
}

#[derive(Debug, Clone)]
pub struct FscsConfig {
    pub k: usize,
    pub fitness: FitnessKind,
    /// When set, candidates must pass the coordinate eligibility filter.
    pub eligibility_epsilon: Option<f64>,
    pub retry_budget: u64,
    /// Subdomain count for the DiscrepancyGain fitness.
    pub discrepancy_m: usize,
}

impl Default for FscsConfig {
    fn default() -> Self {
        FscsConfig {
            k: 10,
            fitness: FitnessKind::MinDistance,
            eligibility_epsilon: None,
            retry_budget: DEFAULT_RETRY_BUDGET,
            discrepancy_m: 100,
        }
    }
}

fn centroid(executed: &[TestCase]) -> TestCase {
    let d = executed[0].dims();
    let mut sum = vec![0.0; d];
    for e in executed {
        for (s, &x) in sum.iter_mut().zip(e.coords()) {
            *s += x;
        }
    }
    let n = executed.len() as f64;
    TestCase(sum.into_iter().map(|s| s / n).collect())
}

/// Fitness of a candidate against the executed set.
///
/// Distance kinds require a nonempty executed set; DiscrepancyGain
/// tolerates an empty one.
pub fn fitness(
    candidate: &TestCase,
    executed: &ExecutedSet,
    kind: FitnessKind,
    domain: &InputDomain,
    rng: &mut RngStream,
) -> Result<f64> {
    if executed.is_empty() && kind != FitnessKind::DiscrepancyGain {
        return Err(ArtError::TooFewPoints {
            required: 1,
            got: 0,
        });
    }
    match kind {
        FitnessKind::DiscrepancyGain => {
            let sample = SubdomainSample::draw(domain, 100, rng);
            Ok(fitness_with_sample(candidate, executed.as_slice(), kind, domain, Some(&sample)))
        }
        _ => Ok(fitness_with_sample(candidate, executed.as_slice(), kind, domain, None)),
    }
}

/// Fitness with an explicit discrepancy sample so a whole candidate batch
/// is judged against the same subdomains.
pub(crate) fn fitness_with_sample(
    candidate: &TestCase,
    executed: &[TestCase],
    kind: FitnessKind,
    domain: &InputDomain,
    sample: Option<&SubdomainSample>,
) -> f64 {
    match kind {
        FitnessKind::MinDistance => executed
            .iter()
            .map(|e| dist_unchecked(candidate, e))
            .fold(f64::INFINITY, f64::min),
        FitnessKind::AvgDistance => {
            executed
                .iter()
                .map(|e| dist_unchecked(candidate, e))
                .sum::<f64>()
                / executed.len() as f64
        }
        FitnessKind::MaxDistance => executed
            .iter()
            .map(|e| dist_unchecked(candidate, e))
            .fold(0.0, f64::max),
        FitnessKind::CentroidDistance => dist_unchecked(candidate, &centroid(executed)),
        FitnessKind::DiscrepancyGain => {
            let sample = sample.expect("DiscrepancyGain needs a subdomain sample");
            let mut augmented = executed.to_vec();
            augmented.push(candidate.clone());
            1.0 - discrepancy_over(&augmented, domain, sample)
        }
    }
}

/// One FSCS selection round over an explicit executed view. Returns the
/// chosen candidate; ties in the argmax break toward the lowest candidate
/// index. `distance_evals` is incremented by the number of pairwise
/// distance computations spent.
pub fn fscs_select(
    executed_view: &[TestCase],
    cfg: &FscsConfig,
    domain: &InputDomain,
    rng: &mut RngStream,
    distance_evals: &mut u64,
) -> Result<TestCase> {
    debug_assert!(!executed_view.is_empty());
    if cfg.k == 0 {
        return Err(ArtError::InvalidConfig("candidate count k must be >= 1".into()));
    }
    let mut candidates = Vec::with_capacity(cfg.k);
    let mut attempts: u64 = 0;
    while candidates.len() < cfg.k {
        attempts += 1;
        if attempts > cfg.retry_budget {
            return Err(ArtError::BudgetExhausted {
                attempts,
                radius: None,
            });
        }
        let c = uniform_point(domain, rng);
        if let Some(eps) = cfg.eligibility_epsilon {
            if !crate::domain::eligible_against(&c, executed_view, eps) {
                continue;
            }
        }
        candidates.push(c);
    }

    let sample = if cfg.fitness == FitnessKind::DiscrepancyGain {
        Some(SubdomainSample::draw(domain, cfg.discrepancy_m, rng))
    } else {
        None
    };

    let mut best = 0usize;
    let mut best_fit = f64::NEG_INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        let f = fitness_with_sample(c, executed_view, cfg.fitness, domain, sample.as_ref());
        *distance_evals += executed_view.len() as u64;
        if f > best_fit {
            best_fit = f;
            best = i;
        }
    }
    Ok(candidates.swap_remove(best))
}

/// Fixed-size-candidate-set ART.
#[derive(Debug, Clone)]
pub struct FscsGenerator {
    domain: InputDomain,
    cfg: FscsConfig,
    executed: ExecutedSet,
    distance_evals: u64,
}

impl FscsGenerator {
    pub fn new(domain: InputDomain, cfg: FscsConfig) -> Self {
        FscsGenerator {
            domain,
            cfg,
            executed: ExecutedSet::new(),
            distance_evals: 0,
        }
    }

    pub fn executed(&self) -> &ExecutedSet {
        &self.executed
    }

    /// Total pairwise distance computations spent so far.
    pub fn distance_evals(&self) -> u64 {
        self.distance_evals
    }
}

impl Generator for FscsGenerator {
    fn next(&mut self, rng: &mut RngStream) -> Result<TestCase> {
        let tc = if self.executed.is_empty() {
            uniform_point(&self.domain, rng)
        } else {
            fscs_select(
                self.executed.as_slice(),
                &self.cfg,
                &self.domain,
                rng,
                &mut self.distance_evals,
            )?
        };
        self.executed.push(tc.clone());
        Ok(tc)
    }

    fn reset(&mut self) {
        self.executed.clear();
        self.distance_evals = 0;
    }

    fn domain(&self) -> &InputDomain {
        &self.domain
    }
}

/// Radius at which `n_executed` d-balls jointly cover `R * |D|` of volume.
///
/// Stated in the source material for d = 2 with the constant pi; the
/// general form swaps in the d-ball volume constant
/// `pi^(d/2) / Gamma(d/2 + 1)`.
pub fn exclusion_radius(target_ratio: f64, domain: &InputDomain, n_executed: usize) -> f64 {
    assert!(n_executed >= 1);
    let d = domain.dims() as f64;
    let ball = std::f64::consts::PI.powf(d / 2.0) / statrs::function::gamma::gamma(d / 2.0 + 1.0);
    (target_ratio * domain.volume() / (ball * n_executed as f64)).powf(1.0 / d)
}

#[derive(Debug, Clone)]
pub struct RrtConfig {
    /// Target exclusion ratio R.
    pub target_ratio: f64,
    pub max_attempts: u64,
}

impl Default for RrtConfig {
    fn default() -> Self {
        RrtConfig {
            target_ratio: 1.0,
            max_attempts: DEFAULT_RETRY_BUDGET,
        }
    }
}

/// Restricted random testing: uniform candidates are rejected while inside
/// any exclusion ball around an executed test.
#[derive(Debug, Clone)]
pub struct RrtGenerator {
    domain: InputDomain,
    cfg: RrtConfig,
    executed: ExecutedSet,
}

impl RrtGenerator {
    pub fn new(domain: InputDomain, cfg: RrtConfig) -> Self {
        RrtGenerator {
            domain,
            cfg,
            executed: ExecutedSet::new(),
        }
    }

    pub fn executed(&self) -> &ExecutedSet {
        &self.executed
    }
}

impl Generator for RrtGenerator {
    fn next(&mut self, rng: &mut RngStream) -> Result<TestCase> {
        if self.executed.is_empty() {
            let tc = uniform_point(&self.domain, rng);
            self.executed.push(tc.clone());
            return Ok(tc);
        }
        let radius = exclusion_radius(self.cfg.target_ratio, &self.domain, self.executed.len());
        for _ in 0..self.cfg.max_attempts {
            let c = uniform_point(&self.domain, rng);
            let clear = self
                .executed
                .iter()
                .all(|e| dist_unchecked(&c, e) >= radius);
            if clear {
                self.executed.push(c.clone());
                return Ok(c);
            }
        }
        Err(ArtError::BudgetExhausted {
            attempts: self.cfg.max_attempts,
            radius: Some(radius),
        })
    }

    fn reset(&mut self) {
        self.executed.clear();
    }

    fn domain(&self) -> &InputDomain {
        &self.domain
    }
}

#[derive(Debug, Clone)]
pub struct McmcConfig {
    pub beta1: f64,
    pub proposal_budget: u64,
}

impl McmcConfig {
    /// Default chain constant scaled to the domain so behavior is
    /// invariant under uniform rescaling of the bounds.
    pub fn for_domain(domain: &InputDomain) -> Self {
        McmcConfig {
            beta1: 0.1 * domain.diameter(),
            proposal_budget: DEFAULT_RETRY_BUDGET,
        }
    }
}

/// Log of `P(X(c)=1 | E)` up to the normalizing constant: every executed
/// test is non-failure-causing, so each contributes
/// `1 - exp(-dist(e, c) / beta1)`.
fn log_weight(point: &TestCase, executed: &ExecutedSet, beta1: f64) -> f64 {
    executed
        .iter()
        .map(|e| {
            let p = 1.0 - (-dist_unchecked(e, point) / beta1).exp();
            if p <= 0.0 {
                f64::NEG_INFINITY
            } else {
                p.ln()
            }
        })
        .sum()
}

/// Metropolis acceptance for a proposed chain move `c_prev -> c`.
pub fn mcmc_accept(
    candidate: &TestCase,
    previous: &TestCase,
    executed: &ExecutedSet,
    cfg: &McmcConfig,
    rng: &mut RngStream,
) -> bool {
    let u = rng.next_f64();
    if executed.is_empty() {
        return true; // ratio defined as 1
    }
    let lw_c = log_weight(candidate, executed, cfg.beta1);
    let lw_p = log_weight(previous, executed, cfg.beta1);
    let ratio = if lw_c == f64::NEG_INFINITY {
        0.0
    } else if lw_p == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        (lw_c - lw_p).exp()
    };
    u <= ratio.min(1.0)
}

/// MCMC-restricted ART: uniform proposals filtered by chain acceptance.
#[derive(Debug, Clone)]
pub struct McmcGenerator {
    domain: InputDomain,
    cfg: McmcConfig,
    executed: ExecutedSet,
    previous: Option<TestCase>,
}

impl McmcGenerator {
    pub fn new(domain: InputDomain, cfg: McmcConfig) -> Self {
        McmcGenerator {
            domain,
            cfg,
            executed: ExecutedSet::new(),
            previous: None,
        }
    }
}

impl Generator for McmcGenerator {
    fn next(&mut self, rng: &mut RngStream) -> Result<TestCase> {
        if self.previous.is_none() {
            let tc = uniform_point(&self.domain, rng);
            self.previous = Some(tc.clone());
            self.executed.push(tc.clone());
            return Ok(tc);
        }
        for _ in 0..self.cfg.proposal_budget {
            let c = uniform_point(&self.domain, rng);
            let prev = self.previous.as_ref().unwrap();
            if mcmc_accept(&c, prev, &self.executed, &self.cfg, rng) {
                self.previous = Some(c.clone());
                self.executed.push(c.clone());
                return Ok(c);
            }
        }
        Err(ArtError::BudgetExhausted {
            attempts: self.cfg.proposal_budget,
            radius: None,
        })
    }

    fn reset(&mut self) {
        self.executed.clear();
        self.previous = None;
    }

    fn domain(&self) -> &InputDomain {
        &self.domain
    }
}
