//! Input domains, test cases, and the generator contract.

use crate::error::{ArtError, Result};
use crate::rng::RngStream;

/// A point in a d-dimensional numeric input domain.
#[derive(Debug, Clone, PartialEq)]
pub struct TestCase(pub Vec<f64>);

impl TestCase {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<f64>> for TestCase {
    fn from(coords: Vec<f64>) -> Self {
        TestCase(coords)
    }
}

/// Axis-aligned hyperrectangle with half-open per-dimension bounds
/// `[lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDomain {
    bounds: Vec<(f64, f64)>,
}

impl InputDomain {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(ArtError::InvalidDomain("zero dimensions".into()));
        }
        for &(lo, hi) in &bounds {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(ArtError::InvalidDomain(format!(
                    "bad bound pair ({lo}, {hi})"
                )));
            }
        }
        Ok(InputDomain { bounds })
    }

    /// The unit hypercube `[0,1)^d`.
    pub fn unit(d: usize) -> Self {
        InputDomain::new(vec![(0.0, 1.0); d]).expect("d >= 1")
    }

    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(|&(lo, hi)| hi - lo).product()
    }

    /// Euclidean length of the main diagonal.
    pub fn diameter(&self) -> f64 {
        self.bounds
            .iter()
            .map(|&(lo, hi)| (hi - lo) * (hi - lo))
            .sum::<f64>()
            .sqrt()
    }

    pub fn center(&self) -> TestCase {
        TestCase(self.bounds.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect())
    }

    pub fn contains(&self, tc: &TestCase) -> bool {
        tc.dims() == self.dims()
            && tc
                .coords()
                .iter()
                .zip(&self.bounds)
                .all(|(&x, &(lo, hi))| lo <= x && x < hi)
    }

    /// Maps a point of the unit hypercube onto this domain.
    pub fn scale_from_unit(&self, unit: &[f64]) -> TestCase {
        debug_assert_eq!(unit.len(), self.dims());
        TestCase(
            unit.iter()
                .zip(&self.bounds)
                .map(|(&u, &(lo, hi))| lo + u * (hi - lo))
                .collect(),
        )
    }

    /// Clamps every coordinate into its half-open bound.
    pub fn clamp(&self, tc: &mut TestCase) {
        for (x, &(lo, hi)) in tc.0.iter_mut().zip(&self.bounds) {
            // The largest representable value below hi keeps the point
            // inside the half-open interval.
            let top = f64::from_bits(hi.to_bits() - 1).max(lo);
            *x = x.max(lo).min(top);
        }
    }
}

/// Draws a point with each coordinate independently uniform on its bound.
pub fn uniform_point(domain: &InputDomain, rng: &mut RngStream) -> TestCase {
    TestCase(
        domain
            .bounds()
            .iter()
            .map(|&(lo, hi)| rng.uniform(lo, hi))
            .collect(),
    )
}

/// Ordered set of executed (non-failure-causing) test cases.
#[derive(Debug, Clone, Default)]
pub struct ExecutedSet {
    tests: Vec<TestCase>,
}

impl ExecutedSet {
    pub fn new() -> Self {
        ExecutedSet::default()
    }

    pub fn push(&mut self, tc: TestCase) {
        self.tests.push(tc);
    }

    pub fn len(&self) -> usize {
        self.tests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tests.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TestCase> {
        self.tests.iter()
    }

    pub fn as_slice(&self) -> &[TestCase] {
        &self.tests
    }

    pub fn clear(&mut self) {
        self.tests.clear();
    }
}

impl<'a> IntoIterator for &'a ExecutedSet {
    type Item = &'a TestCase;
    type IntoIter = std::slice::Iter<'a, TestCase>;
    fn into_iter(self) -> Self::IntoIter {
        self.tests.iter()
    }
}

impl FromIterator<TestCase> for ExecutedSet {
    fn from_iter<I: IntoIterator<Item = TestCase>>(iter: I) -> Self {
        ExecutedSet {
            tests: iter.into_iter().collect(),
        }
    }
}

/// True iff every coordinate of `candidate` differs from the matching
/// coordinate of every executed test by more than `epsilon`.
pub fn eligibility_filter(candidate: &TestCase, executed: &ExecutedSet, epsilon: f64) -> bool {
    eligible_against(candidate, executed.as_slice(), epsilon)
}

pub(crate) fn eligible_against(candidate: &TestCase, executed: &[TestCase], epsilon: f64) -> bool {
    executed.iter().all(|e| {
        candidate
            .coords()
            .iter()
            .zip(e.coords())
            .all(|(&c, &x)| (c - x).abs() > epsilon)
    })
}

/// Common contract for all test-case generators: every output lies inside
/// the domain, and a fixed seed yields a deterministic sequence.
pub trait Generator {
    fn next(&mut self, rng: &mut RngStream) -> Result<TestCase>;
    fn reset(&mut self);
    fn domain(&self) -> &InputDomain;
}

impl<T: Generator + ?Sized> Generator for Box<T> {
    fn next(&mut self, rng: &mut RngStream) -> Result<TestCase> {
        (**self).next(rng)
    }

    fn reset(&mut self) {
        (**self).reset()
    }

    fn domain(&self) -> &InputDomain {
        (**self).domain()
    }
}

/// Plain random testing: every call is an independent uniform draw.
#[derive(Debug, Clone)]
pub struct RtGenerator {
    domain: InputDomain,
}

impl RtGenerator {
    pub fn new(domain: InputDomain) -> Self {
        RtGenerator { domain }
    }
}

impl Generator for RtGenerator {
    fn next(&mut self, rng: &mut RngStream) -> Result<TestCase> {
        Ok(uniform_point(&self.domain, rng))
    }

    fn reset(&mut self) {}

    fn domain(&self) -> &InputDomain {
        &self.domain
    }
}
