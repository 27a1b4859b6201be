//! Distance functions and test-set distribution metrics.

use crate::domain::{InputDomain, TestCase};
use crate::error::{ArtError, Result};
use crate::rng::RngStream;

/// Euclidean distance between two test cases.
pub fn dist(a: &TestCase, b: &TestCase) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(ArtError::DimensionMismatch {
            expected: a.dims(),
            got: b.dims(),
        });
    }
    Ok(dist_unchecked(a, b))
}

#[inline]
pub(crate) fn dist_unchecked(a: &TestCase, b: &TestCase) -> f64 {
    a.coords()
        .iter()
        .zip(b.coords())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A seeded sample of axis-aligned subdomains used by [`discrepancy`].
///
/// Each box is drawn by taking two independent uniform points as opposite
/// corners, ordered per dimension so every box has positive volume.
#[derive(Debug, Clone)]
pub struct SubdomainSample {
    pub seed: u64,
    boxes: Vec<Vec<(f64, f64)>>,
}

impl SubdomainSample {
    /// Draws `m` boxes from a dedicated stream so the sample can be
    /// recreated from the seed alone.
    pub fn from_seed(domain: &InputDomain, m: usize, seed: u64) -> Self {
        let mut rng = RngStream::new(seed);
        let mut sample = Self::draw(domain, m, &mut rng);
        sample.seed = seed;
        sample
    }

    pub fn draw(domain: &InputDomain, m: usize, rng: &mut RngStream) -> Self {
        let boxes = (0..m)
            .map(|_| {
                domain
                    .bounds()
                    .iter()
                    .map(|&(lo, hi)| {
                        let a = rng.uniform(lo, hi);
                        let b = rng.uniform(lo, hi);
                        (a.min(b), a.max(b))
                    })
                    .collect()
            })
            .collect();
        SubdomainSample { seed: 0, boxes }
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn boxes(&self) -> &[Vec<(f64, f64)>] {
        &self.boxes
    }
}

fn in_box(tc: &TestCase, bounds: &[(f64, f64)]) -> bool {
    tc.coords()
        .iter()
        .zip(bounds)
        .all(|(&x, &(lo, hi))| lo <= x && x < hi)
}

/// Worst deviation, over `m` randomly sampled subdomains, between the
/// subdomain's share of test cases and its share of domain volume.
pub fn discrepancy(
    tests: &[TestCase],
    domain: &InputDomain,
    m: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    if tests.is_empty() {
        return Err(ArtError::TooFewPoints {
            required: 1,
            got: 0,
        });
    }
    if m == 0 {
        return Err(ArtError::InvalidConfig("m must be >= 1".into()));
    }
    let sample = SubdomainSample::draw(domain, m, rng);
    Ok(discrepancy_over(tests, domain, &sample))
}

/// Discrepancy against an explicit subdomain sample (reusable across sets).
pub fn discrepancy_over(tests: &[TestCase], domain: &InputDomain, sample: &SubdomainSample) -> f64 {
    let n = tests.len() as f64;
    let vol = domain.volume();
    sample
        .boxes()
        .iter()
        .map(|b| {
            let inside = tests.iter().filter(|t| in_box(t, b)).count() as f64;
            let box_vol: f64 = b.iter().map(|&(lo, hi)| hi - lo).product();
            (inside / n - box_vol / vol).abs()
        })
        .fold(0.0, f64::max)
}

fn nearest_neighbor_dists(tests: &[TestCase]) -> Result<Vec<f64>> {
    if tests.len() < 2 {
        return Err(ArtError::TooFewPoints {
            required: 2,
            got: tests.len(),
        });
    }
    Ok(tests
        .iter()
        .enumerate()
        .map(|(i, a)| {
            tests
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, b)| dist_unchecked(a, b))
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

/// Largest nearest-neighbor distance in the set.
pub fn dispersion(tests: &[TestCase]) -> Result<f64> {
    Ok(nearest_neighbor_dists(tests)?
        .into_iter()
        .fold(0.0, f64::max))
}

/// Sum of nearest-neighbor distances over the set.
pub fn diversity(tests: &[TestCase]) -> Result<f64> {
    Ok(nearest_neighbor_dists(tests)?.into_iter().sum())
}

/// Sum of distances over all ordered pairs (self-pairs contribute zero).
pub fn divergence(tests: &[TestCase]) -> f64 {
    let mut total = 0.0;
    for (i, a) in tests.iter().enumerate() {
        for b in &tests[i + 1..] {
            total += dist_unchecked(a, b);
        }
    }
    2.0 * total
}

/// True iff `tc` lies in the concentric center region holding exactly half
/// the domain volume (per-side scale `2^(-1/d)`).
pub fn in_center_region(tc: &TestCase, domain: &InputDomain) -> bool {
    let scale = 2f64.powf(-1.0 / domain.dims() as f64);
    tc.coords()
        .iter()
        .zip(domain.bounds())
        .all(|(&x, &(lo, hi))| {
            let c = 0.5 * (lo + hi);
            let half = 0.5 * scale * (hi - lo);
            (x - c).abs() <= half
        })
}

/// Edge:Center occupancy ratio; `+inf` when the center region is empty.
pub fn edge_center_ratio(tests: &[TestCase], domain: &InputDomain) -> f64 {
    let center = tests
        .iter()
        .filter(|t| in_center_region(t, domain))
        .count();
    let edge = tests.len() - center;
    if center == 0 {
        f64::INFINITY
    } else {
        edge as f64 / center as f64
    }
}

/// Max-norm distance from `tc` to the domain center.
pub fn center_distance(tc: &TestCase, domain: &InputDomain) -> f64 {
    let c = domain.center();
    tc.coords()
        .iter()
        .zip(c.coords())
        .map(|(&x, &ci)| (ci - x).abs())
        .fold(0.0, f64::max)
}
