//! Test-profile-based generation: a dynamic non-uniform density that is
//! zero at every executed test and ramps back to uniform beyond an
//! influence width around each.

use crate::domain::{uniform_point, Generator, InputDomain, TestCase};
use crate::error::{ArtError, Result};
use crate::metrics::dist_unchecked;
use crate::rng::RngStream;

/// Radial ramp shape applied around each executed test. Each shape g maps
/// [0, 1] onto [0, 1] with g(0) = 0 and g(u) = 1 for u >= 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileKind {
    Triangle,
    Cosine,
    Semicircle,
    PowerLaw { exponent: f64 },
}

impl ProfileKind {
    fn shape(self, u: f64) -> f64 {
        if u >= 1.0 {
            return 1.0;
        }
        let u = u.max(0.0);
        match self {
            ProfileKind::Triangle => u,
            ProfileKind::Cosine => 0.5 * (1.0 - (std::f64::consts::PI * u).cos()),
            ProfileKind::Semicircle => {
                let t = 1.0 - u;
                (1.0 - t * t).max(0.0).sqrt()
            }
            ProfileKind::PowerLaw { exponent } => u.powf(exponent),
        }
    }
}

/// Executed tests plus the current per-point influence width.
#[derive(Debug, Clone)]
pub struct ProfileState {
    domain: InputDomain,
    kind: ProfileKind,
    executed: Vec<TestCase>,
    width: f64,
}

impl ProfileState {
    pub fn new(domain: InputDomain, kind: ProfileKind) -> Self {
        let width = influence_width(&domain, 0);
        ProfileState {
            domain,
            kind,
            executed: Vec::new(),
            width,
        }
    }

    pub fn executed(&self) -> &[TestCase] {
        &self.executed
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn record(&mut self, tc: TestCase) {
        self.executed.push(tc);
        self.width = influence_width(&self.domain, self.executed.len());
    }
}

/// Influence width shrinks as the executed set grows so the expected
/// rejection rate stays bounded.
fn influence_width(domain: &InputDomain, n_executed: usize) -> f64 {
    let d = domain.dims() as f64;
    0.75 * domain.volume().powf(1.0 / d) / ((n_executed as f64).powf(1.0 / d) + 1.0)
}

/// Selection density at `x`: the product over executed tests of the ramp
/// shape evaluated at `dist(x, e) / w`. Empty executed set gives 1.
pub fn density(x: &TestCase, state: &ProfileState) -> f64 {
    state
        .executed
        .iter()
        .map(|e| state.kind.shape(dist_unchecked(x, e) / state.width))
        .product()
}

#[derive(Debug, Clone)]
pub struct TpbsGenerator {
    state: ProfileState,
    rejection_budget: u64,
}

impl TpbsGenerator {
    pub fn new(domain: InputDomain, kind: ProfileKind) -> Self {
        TpbsGenerator {
            state: ProfileState::new(domain, kind),
            rejection_budget: crate::stfcs::DEFAULT_RETRY_BUDGET,
        }
    }

    pub fn state(&self) -> &ProfileState {
        &self.state
    }
}

impl Generator for TpbsGenerator {
    fn next(&mut self, rng: &mut RngStream) -> Result<TestCase> {
        if self.state.executed.is_empty() {
            let tc = uniform_point(&self.state.domain, rng);
            self.state.record(tc.clone());
            return Ok(tc);
        }
        for _ in 0..self.rejection_budget {
            let x = uniform_point(&self.state.domain, rng);
            let u = rng.next_f64();
            if u < density(&x, &self.state) {
                self.state.record(x.clone());
                return Ok(x);
            }
        }
        Err(ArtError::BudgetExhausted {
            attempts: self.rejection_budget,
            radius: None,
        })
    }

    fn reset(&mut self) {
        let domain = self.state.domain.clone();
        let kind = self.state.kind;
        self.state = ProfileState::new(domain, kind);
    }

    fn domain(&self) -> &InputDomain {
        &self.state.domain
    }
}
