//! Failure-region simulation lab: seeded failure geometries, the F/P/E
//! effectiveness measures, campaign plumbing, and the statistics used to
//! compare generators.

use std::io::Write;
use std::time::Instant;

use statrs::distribution::{ContinuousCDF, FisherSnedecor, Normal};
use statrs::function::gamma::gamma;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::domain::{uniform_point, Generator, InputDomain, TestCase};
use crate::error::{ArtError, Result};
use crate::rng::RngStream;

const PLACEMENT_RETRIES: u64 = 10_000;
const STRIP_MEASURE_SAMPLES: usize = 4_000_000;

/// Geometry of the failure-causing inputs seeded into the domain.
#[derive(Debug, Clone, PartialEq)]
pub enum FailurePattern {
    /// One axis-aligned hypercube.
    BlockSquare,
    /// One axis-aligned box stretched along the first dimension by
    /// `aspect` relative to the others.
    BlockRect { aspect: f64 },
    /// An elongated band across the domain; its width is solved so the
    /// clipped measure matches the failure rate.
    Strip,
    /// `count` equal-measure balls.
    PointEqualCircles { count: usize },
    /// `count` equal-measure hypercubes.
    PointEqualSquares { count: usize },
    /// `count` hypercubes, one holding `q_percent` of the failure
    /// measure and the rest splitting the remainder randomly.
    PredominantSquares { count: usize, q_percent: f64 },
}

impl FailurePattern {
    pub fn label(&self) -> String {
        match self {
            FailurePattern::BlockSquare => "block_square".into(),
            FailurePattern::BlockRect { aspect } => format!("block_rect_{aspect}"),
            FailurePattern::Strip => "strip".into(),
            FailurePattern::PointEqualCircles { count } => format!("point_circles_{count}"),
            FailurePattern::PointEqualSquares { count } => format!("point_squares_{count}"),
            FailurePattern::PredominantSquares { count, q_percent } => {
                format!("predominant_{count}_{q_percent}")
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let count = match self {
            FailurePattern::PointEqualCircles { count }
            | FailurePattern::PointEqualSquares { count } => *count,
            FailurePattern::PredominantSquares { count, q_percent } => {
                if !(*q_percent > 0.0 && *q_percent <= 100.0) {
                    return Err(ArtError::InvalidConfig(format!(
                        "q_percent must lie in (0, 100], got {q_percent}"
                    )));
                }
                *count
            }
            FailurePattern::BlockRect { aspect } => {
                if !(*aspect > 0.0) {
                    return Err(ArtError::NonPositive("aspect".into()));
                }
                return Ok(());
            }
            _ => return Ok(()),
        };
        if count < 1 {
            return Err(ArtError::InvalidConfig("region count must be >= 1".into()));
        }
        Ok(())
    }
}

/// One placed failure region.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    /// Points within `width / 2` of the line through `a` and `b`.
    Strip { a: Vec<f64>, b: Vec<f64>, width: f64 },
}

impl Region {
    pub fn contains(&self, tc: &TestCase) -> bool {
        match self {
            Region::Box { lo, hi } => tc
                .coords()
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&x, (&l, &h))| x >= l && x < h),
            Region::Ball { center, radius } => {
                let d2: f64 = tc
                    .coords()
                    .iter()
                    .zip(center)
                    .map(|(&x, &c)| (x - c) * (x - c))
                    .sum();
                d2.sqrt() <= *radius
            }
            Region::Strip { a, b, width } => line_distance(tc.coords(), a, b) <= width / 2.0,
        }
    }

    /// Analytic measure where one exists; strips are clip-dependent.
    pub fn measure(&self) -> Option<f64> {
        match self {
            Region::Box { lo, hi } => Some(lo.iter().zip(hi).map(|(&l, &h)| h - l).product()),
            Region::Ball { center, radius } => {
                Some(unit_ball_volume(center.len()) * radius.powi(center.len() as i32))
            }
            Region::Strip { .. } => None,
        }
    }
}

/// Perpendicular distance from `x` to the line through `a` and `b`.
fn line_distance(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut dir: Vec<f64> = b.iter().zip(a).map(|(&bi, &ai)| bi - ai).collect();
    let norm: f64 = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut dir {
        *v /= norm;
    }
    let rel: Vec<f64> = x.iter().zip(a).map(|(&xi, &ai)| xi - ai).collect();
    let along: f64 = rel.iter().zip(&dir).map(|(&r, &u)| r * u).sum();
    rel.iter()
        .zip(&dir)
        .map(|(&r, &u)| {
            let p = r - along * u;
            p * p
        })
        .sum::<f64>()
        .sqrt()
}

fn unit_ball_volume(d: usize) -> f64 {
    let d = d as f64;
    std::f64::consts::PI.powf(d / 2.0) / gamma(d / 2.0 + 1.0)
}

/// A failure rate realized as concrete regions inside a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureProfile {
    pub domain: InputDomain,
    pub theta: f64,
    pub pattern: FailurePattern,
    pub regions: Vec<Region>,
    pub placement_seed: u64,
}

impl FailureProfile {
    pub fn is_failure(&self, tc: &TestCase) -> bool {
        self.regions.iter().any(|r| r.contains(tc))
    }
}

pub fn is_failure(tc: &TestCase, profile: &FailureProfile) -> bool {
    profile.is_failure(tc)
}

fn boxes_overlap(alo: &[f64], ahi: &[f64], blo: &[f64], bhi: &[f64]) -> bool {
    alo.iter()
        .zip(ahi)
        .zip(blo.iter().zip(bhi))
        .all(|((&al, &ah), (&bl, &bh))| al < bh && bl < ah)
}

fn overlaps(a: &Region, b: &Region) -> bool {
    match (a, b) {
        (Region::Box { lo: alo, hi: ahi }, Region::Box { lo: blo, hi: bhi }) => {
            boxes_overlap(alo, ahi, blo, bhi)
        }
        (
            Region::Ball {
                center: ac,
                radius: ar,
            },
            Region::Ball {
                center: bc,
                radius: br,
            },
        ) => {
            let d2: f64 = ac.iter().zip(bc).map(|(&x, &y)| (x - y) * (x - y)).sum();
            d2.sqrt() < ar + br
        }
        _ => false,
    }
}

/// Places one box of the given side lengths fully inside the domain,
/// resampling until it avoids the regions already placed.
fn place_box(
    domain: &InputDomain,
    sides: &[f64],
    placed: &[Region],
    rng: &mut RngStream,
) -> Result<Region> {
    for (i, &(lo, hi)) in domain.bounds().iter().enumerate() {
        if sides[i] > hi - lo {
            return Err(ArtError::PlacementInfeasible(format!(
                "region side {} exceeds domain extent {} in dimension {i}",
                sides[i],
                hi - lo
            )));
        }
    }
    for _ in 0..PLACEMENT_RETRIES {
        let lo: Vec<f64> = domain
            .bounds()
            .iter()
            .zip(sides)
            .map(|(&(dlo, dhi), &s)| rng.uniform(dlo, dhi - s))
            .collect();
        let hi: Vec<f64> = lo.iter().zip(sides).map(|(&l, &s)| l + s).collect();
        let candidate = Region::Box { lo, hi };
        if placed.iter().all(|r| !overlaps(r, &candidate)) {
            return Ok(candidate);
        }
    }
    Err(ArtError::PlacementInfeasible(
        "could not place non-overlapping box within retry budget".into(),
    ))
}

fn place_ball(
    domain: &InputDomain,
    radius: f64,
    placed: &[Region],
    rng: &mut RngStream,
) -> Result<Region> {
    for &(lo, hi) in domain.bounds() {
        if 2.0 * radius > hi - lo {
            return Err(ArtError::PlacementInfeasible(format!(
                "ball diameter {} exceeds domain extent {}",
                2.0 * radius,
                hi - lo
            )));
        }
    }
    for _ in 0..PLACEMENT_RETRIES {
        let center: Vec<f64> = domain
            .bounds()
            .iter()
            .map(|&(lo, hi)| rng.uniform(lo + radius, hi - radius))
            .collect();
        let candidate = Region::Ball { center, radius };
        if placed.iter().all(|r| !overlaps(r, &candidate)) {
            return Ok(candidate);
        }
    }
    Err(ArtError::PlacementInfeasible(
        "could not place non-overlapping ball within retry budget".into(),
    ))
}

/// A uniform point on a random face of the domain boundary; the face is
/// identified by `face / 2` (dimension) and `face % 2` (low/high side).
fn boundary_point(domain: &InputDomain, face: usize, rng: &mut RngStream) -> Vec<f64> {
    let dim = face / 2;
    domain
        .bounds()
        .iter()
        .enumerate()
        .map(|(i, &(lo, hi))| {
            if i == dim {
                if face % 2 == 0 {
                    lo
                } else {
                    hi
                }
            } else {
                rng.uniform(lo, hi)
            }
        })
        .collect()
}

fn place_strip(domain: &InputDomain, theta: f64, rng: &mut RngStream) -> Result<Region> {
    let faces = 2 * domain.dims();
    let f1 = rng.index(faces);
    let mut f2 = rng.index(faces);
    while f2 == f1 {
        f2 = rng.index(faces);
    }
    let a = boundary_point(domain, f1, rng);
    let b = boundary_point(domain, f2, rng);
    let sep: f64 = a
        .iter()
        .zip(&b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    if sep < 1e-9 * domain.diameter() {
        return Err(ArtError::PlacementInfeasible(
            "degenerate strip axis".into(),
        ));
    }
    // Monte-Carlo distances to the axis, then bisection on the width
    // until the clipped measure fraction hits theta.
    let mut dists: Vec<f64> = (0..STRIP_MEASURE_SAMPLES)
        .map(|_| {
            let p = uniform_point(domain, rng);
            line_distance(p.coords(), &a, &b)
        })
        .collect();
    dists.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let n = dists.len() as f64;
    let (mut lo, mut hi) = (0.0, domain.diameter());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let frac = dists.partition_point(|&d| d <= mid / 2.0) as f64 / n;
        if frac < theta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let width = 0.5 * (lo + hi);
    let frac = dists.partition_point(|&d| d <= width / 2.0) as f64 / n;
    if (frac - theta).abs() > 0.01 * theta {
        return Err(ArtError::PlacementInfeasible(format!(
            "strip width search reached measure fraction {frac}, target {theta}"
        )));
    }
    Ok(Region::Strip { a, b, width })
}

/// Realizes a failure rate as placed regions. Regions are non-overlapping
/// and (except strips, which are clipped) fully inside the domain.
pub fn place_regions(
    domain: &InputDomain,
    theta: f64,
    pattern: FailurePattern,
    rng: &mut RngStream,
) -> Result<FailureProfile> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(ArtError::InvalidConfig(format!(
            "theta must lie in (0, 1), got {theta}"
        )));
    }
    pattern.validate()?;
    let d = domain.dims();
    let total = theta * domain.volume();
    let placement_seed = rng.key();
    let mut regions: Vec<Region> = Vec::new();
    match &pattern {
        FailurePattern::BlockSquare => {
            let side = total.powf(1.0 / d as f64);
            let r = place_box(domain, &vec![side; d], &regions, rng)?;
            regions.push(r);
        }
        FailurePattern::BlockRect { aspect } => {
            let base = (total / aspect).powf(1.0 / d as f64);
            let mut sides = vec![base; d];
            sides[0] = base * aspect;
            let r = place_box(domain, &sides, &regions, rng)?;
            regions.push(r);
        }
        FailurePattern::Strip => {
            regions.push(place_strip(domain, theta, rng)?);
        }
        FailurePattern::PointEqualCircles { count } => {
            let radius = (total / *count as f64 / unit_ball_volume(d)).powf(1.0 / d as f64);
            for _ in 0..*count {
                let r = place_ball(domain, radius, &regions, rng)?;
                regions.push(r);
            }
        }
        FailurePattern::PointEqualSquares { count } => {
            let side = (total / *count as f64).powf(1.0 / d as f64);
            for _ in 0..*count {
                let r = place_box(domain, &vec![side; d], &regions, rng)?;
                regions.push(r);
            }
        }
        FailurePattern::PredominantSquares { count, q_percent } => {
            let mut measures = vec![q_percent / 100.0 * total];
            if *count > 1 {
                // Remainder split by a symmetric Dirichlet(1) draw.
                let weights: Vec<f64> = (0..count - 1)
                    .map(|_| -(1.0 - rng.next_f64()).ln())
                    .collect();
                let sum: f64 = weights.iter().sum();
                let rest = (1.0 - q_percent / 100.0) * total;
                measures.extend(weights.iter().map(|w| w / sum * rest));
            }
            for m in measures {
                let side = m.powf(1.0 / d as f64);
                let r = place_box(domain, &vec![side; d], &regions, rng)?;
                regions.push(r);
            }
        }
    }
    Ok(FailureProfile {
        domain: domain.clone(),
        theta,
        pattern,
        regions,
        placement_seed,
    })
}

/// Outcome of one generate-until-failure run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_index: u64,
    /// Tests executed up to and including the first failure; equals the
    /// cap when censored.
    pub f_count: u64,
    pub censored: bool,
    /// Wall clock until the first failure; None when time was not
    /// measured (keeps replayed reports byte-identical).
    pub f_time_ns: Option<u64>,
}

pub const DEFAULT_CAP: u64 = 10_000_000;

/// Generates tests until the first failure or the cap.
pub fn run_f<G: Generator>(
    generator: &mut G,
    profile: &FailureProfile,
    cap: u64,
    rng: &mut RngStream,
    run_index: u64,
    measure_time: bool,
) -> Result<RunRecord> {
    if cap < 1 {
        return Err(ArtError::InvalidConfig("cap must be >= 1".into()));
    }
    let start = measure_time.then(Instant::now);
    for i in 1..=cap {
        let tc = generator.next(rng)?;
        if profile.is_failure(&tc) {
            return Ok(RunRecord {
                run_index,
                f_count: i,
                censored: false,
                f_time_ns: start.map(|s| s.elapsed().as_nanos() as u64),
            });
        }
    }
    Ok(RunRecord {
        run_index,
        f_count: cap,
        censored: true,
        f_time_ns: start.map(|s| s.elapsed().as_nanos() as u64),
    })
}

/// Tests executed until the first `m` failures, or the cap (censored).
pub fn run_fm<G: Generator>(
    generator: &mut G,
    profile: &FailureProfile,
    m: u64,
    cap: u64,
    rng: &mut RngStream,
) -> Result<(u64, bool)> {
    if m < 1 {
        return Err(ArtError::InvalidConfig("m must be >= 1".into()));
    }
    let mut found = 0;
    for i in 1..=cap {
        let tc = generator.next(rng)?;
        if profile.is_failure(&tc) {
            found += 1;
            if found == m {
                return Ok((i, false));
            }
        }
    }
    Ok((cap, true))
}

fn run_indices(s: u64) -> Vec<u64> {
    (0..s).collect()
}

/// Runs `s` independent first-failure replications. Run `i` draws from
/// sub-stream `(master_seed, i)` and results are ordered by run index,
/// so parallel and serial campaigns aggregate identically.
pub fn campaign_f<G, F>(
    make: F,
    profile: &FailureProfile,
    s: u64,
    cap: u64,
    master_seed: u64,
    measure_time: bool,
) -> Result<Vec<RunRecord>>
where
    F: Fn() -> G + Sync,
    G: Generator,
{
    let one = |i: &u64| -> Result<RunRecord> {
        let mut rng = RngStream::new(master_seed).substream(*i);
        let mut g = make();
        run_f(&mut g, profile, cap, &mut rng, *i, measure_time)
    };
    let indices = run_indices(s);
    #[cfg(feature = "parallel")]
    {
        indices.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        indices.iter().map(one).collect()
    }
}

/// Failure counts of `s` independent size-n test sets (one per run).
pub fn failure_counts<G, F>(
    make: F,
    profile: &FailureProfile,
    n: u64,
    s: u64,
    master_seed: u64,
) -> Result<Vec<u64>>
where
    F: Fn() -> G + Sync,
    G: Generator,
{
    let one = |i: &u64| -> Result<u64> {
        let mut rng = RngStream::new(master_seed).substream(*i);
        let mut g = make();
        let mut hits = 0;
        for _ in 0..n {
            if profile.is_failure(&g.next(&mut rng)?) {
                hits += 1;
            }
        }
        Ok(hits)
    };
    let indices = run_indices(s);
    #[cfg(feature = "parallel")]
    {
        indices.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        indices.iter().map(one).collect()
    }
}

/// Fraction of size-n test sets containing at least one failure.
pub fn p_measure<G, F>(
    make: F,
    profile: &FailureProfile,
    n: u64,
    s: u64,
    master_seed: u64,
) -> Result<f64>
where
    F: Fn() -> G + Sync,
    G: Generator,
{
    let counts = failure_counts(make, profile, n, s, master_seed)?;
    Ok(counts.iter().filter(|&&c| c > 0).count() as f64 / s as f64)
}

/// Mean failure count per size-n test set.
pub fn e_measure<G, F>(
    make: F,
    profile: &FailureProfile,
    n: u64,
    s: u64,
    master_seed: u64,
) -> Result<f64>
where
    F: Fn() -> G + Sync,
    G: Generator,
{
    let counts = failure_counts(make, profile, n, s, master_seed)?;
    Ok(counts.iter().sum::<u64>() as f64 / s as f64)
}

/// Summary of a first-failure campaign. The mean excludes censored runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignStats {
    pub s: u64,
    pub censored: u64,
    pub mean_f: f64,
    pub std_dev: f64,
    pub ci_level: f64,
    pub ci: (f64, f64),
}

impl CampaignStats {
    pub fn from_records(records: &[RunRecord], ci_level: f64) -> Result<Self> {
        let counts: Vec<f64> = records
            .iter()
            .filter(|r| !r.censored)
            .map(|r| r.f_count as f64)
            .collect();
        if counts.is_empty() {
            return Err(ArtError::TooFewPoints {
                required: 1,
                got: 0,
            });
        }
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<f64>() / n;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let sd = var.sqrt();
        let z = Normal::new(0.0, 1.0)
            .unwrap()
            .inverse_cdf(0.5 + ci_level / 2.0);
        let half = z * sd / n.sqrt();
        Ok(CampaignStats {
            s: records.len() as u64,
            censored: records.iter().filter(|r| r.censored).count() as u64,
            mean_f: mean,
            std_dev: sd,
            ci_level,
            ci: (mean - half, mean + half),
        })
    }
}

/// Writes the per-run CSV rows (no header) for one campaign.
pub fn write_runs_csv<W: Write>(
    w: &mut W,
    records: &[RunRecord],
    generator: &str,
    pattern: &str,
    theta: f64,
    d: usize,
) -> std::io::Result<()> {
    for r in records {
        let time = r
            .f_time_ns
            .map(|t| t.to_string())
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.run_index, generator, pattern, theta, d, r.f_count, r.censored as u8, time
        )?;
    }
    Ok(())
}

pub const RUNS_CSV_HEADER: &str = "run_index,generator,pattern,theta,d,f_count,censored,f_time_ns";

/// Replications needed for a relative accuracy of r percent on the mean
/// at confidence z: ceil((100 z sigma / (r mu))^2), at least 1.
pub fn required_runs(z: f64, sigma: f64, mu: f64, r: f64) -> Result<u64> {
    if mu <= 0.0 {
        return Err(ArtError::NonPositive("mu".into()));
    }
    if r <= 0.0 {
        return Err(ArtError::NonPositive("r".into()));
    }
    if z < 0.0 || sigma < 0.0 {
        return Err(ArtError::NonPositive("z and sigma must be >= 0".into()));
    }
    let v = (100.0 * z * sigma / (r * mu)).powi(2);
    Ok((v.ceil() as u64).max(1))
}

fn has_ties(a: &[f64], b: &[f64]) -> bool {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(|x, y| x.partial_cmp(y).unwrap());
    all.windows(2).any(|w| w[0] == w[1])
}

/// Null distribution of the U statistic for tie-free samples of sizes m
/// and n: coefficients of the Gaussian binomial [m+n choose m]_q.
fn u_distribution(m: usize, n: usize) -> Vec<f64> {
    let mut poly = vec![1.0f64];
    for i in 1..=m {
        // multiply by (1 - q^(n+i))
        let k = n + i;
        let mut next = vec![0.0; poly.len() + k];
        for (u, &c) in poly.iter().enumerate() {
            next[u] += c;
            next[u + k] -= c;
        }
        // divide by (1 - q^i): prefix recurrence
        for u in i..next.len() {
            next[u] = next[u] + next[u - i];
        }
        while next.last() == Some(&0.0) {
            next.pop();
        }
        poly = next;
    }
    poly.truncate(m * n + 1);
    poly
}

/// Mann-Whitney U (for sample A) with a two-sided p-value: exact
/// enumeration for tie-free samples with |A|*|B| <= 400, otherwise a
/// normal approximation with tie correction and continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(ArtError::TooFewPoints {
            required: 1,
            got: 0,
        });
    }
    let (m, n) = (a.len(), b.len());
    let mut u_a = 0.0;
    for &x in a {
        for &y in b {
            if x > y {
                u_a += 1.0;
            } else if x == y {
                u_a += 0.5;
            }
        }
    }
    let exact = m * n <= 400 && !has_ties(a, b);
    let p = if exact {
        let dist = u_distribution(m, n);
        let total: f64 = dist.iter().sum();
        let u = u_a as usize;
        let lower: f64 = dist[..=u].iter().sum::<f64>() / total;
        let upper: f64 = dist[u..].iter().sum::<f64>() / total;
        (2.0 * lower.min(upper)).min(1.0)
    } else {
        let mn = (m * n) as f64;
        let nn = (m + n) as f64;
        // tie correction from group sizes in the pooled sample
        let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
        all.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut tie_term = 0.0;
        let mut i = 0;
        while i < all.len() {
            let mut j = i + 1;
            while j < all.len() && all[j] == all[i] {
                j += 1;
            }
            let t = (j - i) as f64;
            tie_term += t * t * t - t;
            i = j;
        }
        let var = mn / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
        if var <= 0.0 {
            return Ok((u_a, 1.0)); // all values identical
        }
        let mean = mn / 2.0;
        let delta = (u_a - mean).abs();
        let z = (delta - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::new(0.0, 1.0).unwrap();
        (2.0 * (1.0 - normal.cdf(z))).min(1.0)
    };
    Ok((u_a, p))
}

/// Vargha-Delaney effect size: P(a > b) + 0.5 P(a = b) over all pairs.
pub fn a12_effect_size(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(ArtError::TooFewPoints {
            required: 1,
            got: 0,
        });
    }
    let mut score = 0.0;
    for &x in a {
        for &y in b {
            if x > y {
                score += 1.0;
            } else if x == y {
                score += 0.5;
            }
        }
    }
    Ok(score / (a.len() * b.len()) as f64)
}

/// Percentage improvement of an adaptive generator over the baseline.
pub fn improvement_percent(metric_rt: f64, metric_art: f64, lower_is_better: bool) -> f64 {
    if lower_is_better {
        100.0 * (metric_rt - metric_art) / metric_rt
    } else {
        100.0 * (metric_art - metric_rt) / metric_rt
    }
}

/// Kolmogorov-Smirnov statistic of observed first-failure counts against
/// the Geometric(theta) model: sup over k of |ECDF(k) - (1-(1-theta)^k)|.
pub fn ks_geometric(f_counts: &[u64], theta: f64) -> Result<f64> {
    if f_counts.is_empty() {
        return Err(ArtError::TooFewPoints {
            required: 1,
            got: 0,
        });
    }
    let mut sorted = f_counts.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let max = *sorted.last().unwrap();
    let mut d = 0.0f64;
    let mut idx = 0;
    for k in 1..=max {
        while idx < sorted.len() && sorted[idx] <= k {
            idx += 1;
        }
        let ecdf = idx as f64 / n;
        let cdf = 1.0 - (1.0 - theta).powi(k as i32);
        d = d.max((ecdf - cdf).abs());
    }
    Ok(d)
}

/// Large-sample KS critical value at the given significance level.
pub fn ks_critical(n_samples: usize, alpha: f64) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    c / (n_samples as f64).sqrt()
}

/// Least-squares polynomial fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// Coefficients by ascending power.
    pub coeffs: Vec<f64>,
    pub rss: f64,
    pub r_squared: f64,
}

/// Fits y = sum c_j x^j for j = 0..=degree by solving the normal
/// equations with Gaussian elimination.
pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(ArtError::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    let p = degree + 1;
    if xs.len() < p {
        return Err(ArtError::TooFewPoints {
            required: p,
            got: xs.len(),
        });
    }
    // moments up to x^(2*degree)
    let mut mat = vec![vec![0.0f64; p + 1]; p];
    for (&x, &y) in xs.iter().zip(ys) {
        let mut pow = vec![1.0; 2 * degree + 1];
        for j in 1..pow.len() {
            pow[j] = pow[j - 1] * x;
        }
        for r in 0..p {
            for c in 0..p {
                mat[r][c] += pow[r + c];
            }
            mat[r][p] += pow[r] * y;
        }
    }
    // Gaussian elimination with partial pivoting
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&i, &j| mat[i][col].abs().partial_cmp(&mat[j][col].abs()).unwrap())
            .unwrap();
        mat.swap(col, pivot);
        if mat[col][col].abs() < 1e-300 {
            return Err(ArtError::InvalidConfig("singular design matrix".into()));
        }
        for row in 0..p {
            if row != col {
                let f = mat[row][col] / mat[col][col];
                for c in col..=p {
                    mat[row][c] -= f * mat[col][c];
                }
            }
        }
    }
    let coeffs: Vec<f64> = (0..p).map(|r| mat[r][p] / mat[r][r]).collect();
    let mean_y = ys.iter().sum::<f64>() / ys.len() as f64;
    let mut rss = 0.0;
    let mut tss = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let mut pred = 0.0;
        let mut xp = 1.0;
        for &c in &coeffs {
            pred += c * xp;
            xp *= x;
        }
        rss += (y - pred).powi(2);
        tss += (y - mean_y).powi(2);
    }
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    Ok(FitResult {
        coeffs,
        rss,
        r_squared,
    })
}

/// F-test for a nested pair of fits: p-value for the hypothesis that the
/// extra parameters of the richer model do not help.
pub fn f_test_nested(
    simple: &FitResult,
    complex: &FitResult,
    n_points: usize,
) -> Result<f64> {
    let p1 = simple.coeffs.len();
    let p2 = complex.coeffs.len();
    if p2 <= p1 || n_points <= p2 {
        return Err(ArtError::InvalidConfig(
            "complex model must have more parameters than the simple one and fewer than points"
                .into(),
        ));
    }
    if complex.rss <= 0.0 {
        return Ok(0.0);
    }
    let num = (simple.rss - complex.rss).max(0.0) / (p2 - p1) as f64;
    let den = complex.rss / (n_points - p2) as f64;
    let f = num / den;
    let dist = FisherSnedecor::new((p2 - p1) as f64, (n_points - p2) as f64)
        .map_err(|e| ArtError::InvalidConfig(e.to_string()))?;
    Ok(1.0 - dist.cdf(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::RtGenerator;

    fn unit2() -> InputDomain {
        InputDomain::unit(2)
    }

    fn block_profile(theta: f64, seed: u64) -> FailureProfile {
        let mut rng = RngStream::new(seed);
        place_regions(&unit2(), theta, FailurePattern::BlockSquare, &mut rng).unwrap()
    }

    #[test]
    fn block_square_side_is_theta_root() {
        let p = block_profile(0.04, 1);
        match &p.regions[0] {
            Region::Box { lo, hi } => {
                for (l, h) in lo.iter().zip(hi) {
                    assert!((h - l - 0.2).abs() < 1e-12);
                }
            }
            _ => panic!("expected box"),
        }
    }

    #[test]
    fn point_circles_split_theta_equally() {
        let mut rng = RngStream::new(2);
        let p = place_regions(
            &unit2(),
            0.01,
            FailurePattern::PointEqualCircles { count: 4 },
            &mut rng,
        )
        .unwrap();
        assert_eq!(p.regions.len(), 4);
        for r in &p.regions {
            assert!((r.measure().unwrap() - 0.0025).abs() < 1e-12);
        }
    }

    #[test]
    fn predominant_measures_sum_to_theta() {
        let mut rng = RngStream::new(3);
        let p = place_regions(
            &unit2(),
            0.02,
            FailurePattern::PredominantSquares {
                count: 3,
                q_percent: 60.0,
            },
            &mut rng,
        )
        .unwrap();
        let total: f64 = p.regions.iter().map(|r| r.measure().unwrap()).sum();
        assert!((total - 0.02).abs() < 1e-12);
        assert!((p.regions[0].measure().unwrap() - 0.012).abs() < 1e-12);
    }

    #[test]
    fn mc_measure_matches_theta_for_each_pattern() {
        // region-measure conservation under uniform sampling, 10^6 points
        let patterns = vec![
            (FailurePattern::BlockSquare, 0.05),
            (FailurePattern::BlockRect { aspect: 4.0 }, 0.05),
            (FailurePattern::PointEqualSquares { count: 5 }, 0.05),
            (FailurePattern::PointEqualCircles { count: 3 }, 0.05),
            (
                FailurePattern::PredominantSquares {
                    count: 4,
                    q_percent: 70.0,
                },
                0.05,
            ),
            (FailurePattern::Strip, 0.05),
        ];
        for (pattern, theta) in patterns {
            let mut rng = RngStream::new(11);
            let profile = place_regions(&unit2(), theta, pattern.clone(), &mut rng).unwrap();
            let mut mc = RngStream::new(999);
            let samples = 1_000_000;
            let hits = (0..samples)
                .filter(|_| profile.is_failure(&uniform_point(&unit2(), &mut mc)))
                .count();
            let est = hits as f64 / samples as f64;
            let rel = (est - theta).abs() / theta;
            assert!(rel < 0.01, "{}: est {est} vs theta {theta}", pattern.label());
        }
    }

    #[test]
    fn regions_do_not_overlap() {
        let mut rng = RngStream::new(7);
        let p = place_regions(
            &unit2(),
            0.05,
            FailurePattern::PointEqualSquares { count: 8 },
            &mut rng,
        )
        .unwrap();
        for i in 0..p.regions.len() {
            for j in (i + 1)..p.regions.len() {
                assert!(!overlaps(&p.regions[i], &p.regions[j]));
            }
        }
    }

    #[test]
    fn infeasible_placement_reports_error() {
        let mut rng = RngStream::new(1);
        // 50 squares each needing side ~0.13 cannot avoid overlap at
        // this density reliably; the extreme case: theta too large.
        let err = place_regions(
            &unit2(),
            0.9,
            FailurePattern::PointEqualSquares { count: 200 },
            &mut rng,
        );
        assert!(matches!(err, Err(ArtError::PlacementInfeasible(_))));
    }

    #[test]
    fn is_failure_matches_independent_oracle() {
        // independent re-implementation of membership per region kind
        fn oracle(tc: &TestCase, p: &FailureProfile) -> bool {
            p.regions.iter().any(|r| match r {
                Region::Box { lo, hi } => (0..lo.len())
                    .all(|i| tc.coords()[i] >= lo[i] && tc.coords()[i] < hi[i]),
                Region::Ball { center, radius } => {
                    let mut s = 0.0;
                    for i in 0..center.len() {
                        s += (tc.coords()[i] - center[i]).powi(2);
                    }
                    s <= radius * radius
                }
                Region::Strip { a, b, width } => {
                    // area of the triangle (a, b, x) gives the height
                    let (ax, ay) = (a[0], a[1]);
                    let (bx, by) = (b[0], b[1]);
                    let (x, y) = (tc.coords()[0], tc.coords()[1]);
                    let twice_area = ((bx - ax) * (y - ay) - (by - ay) * (x - ax)).abs();
                    let base = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt();
                    twice_area / base <= width / 2.0
                }
            })
        }
        for pattern in [
            FailurePattern::BlockSquare,
            FailurePattern::PointEqualCircles { count: 3 },
            FailurePattern::Strip,
        ] {
            let mut rng = RngStream::new(5);
            let p = place_regions(&unit2(), 0.05, pattern, &mut rng).unwrap();
            let mut mc = RngStream::new(6);
            for _ in 0..10_000 {
                let tc = uniform_point(&unit2(), &mut mc);
                assert_eq!(p.is_failure(&tc), oracle(&tc, &p));
            }
        }
    }

    #[test]
    fn run_f_full_domain_finds_failure_immediately() {
        let profile = FailureProfile {
            domain: unit2(),
            theta: 1.0 - 1e-9,
            pattern: FailurePattern::BlockSquare,
            regions: vec![Region::Box {
                lo: vec![0.0, 0.0],
                hi: vec![1.0, 1.0],
            }],
            placement_seed: 0,
        };
        let mut g = RtGenerator::new(unit2());
        let mut rng = RngStream::new(1);
        let rec = run_f(&mut g, &profile, 100, &mut rng, 0, false).unwrap();
        assert_eq!(rec.f_count, 1);
        assert!(!rec.censored);
    }

    #[test]
    fn rt_mean_f_count_near_inverse_theta() {
        let profile = block_profile(0.01, 21);
        let records = campaign_f(
            || RtGenerator::new(unit2()),
            &profile,
            3000,
            DEFAULT_CAP,
            77,
            false,
        )
        .unwrap();
        let stats = CampaignStats::from_records(&records, 0.99).unwrap();
        assert!(
            (stats.mean_f - 100.0).abs() < 5.0,
            "mean = {}",
            stats.mean_f
        );
    }

    #[test]
    fn censoring_cap_is_honored() {
        let profile = block_profile(0.0001, 4);
        let mut g = RtGenerator::new(unit2());
        let mut rng = RngStream::new(8);
        let rec = run_f(&mut g, &profile, 50, &mut rng, 0, false).unwrap();
        assert!(rec.f_count <= 50);
        if rec.censored {
            assert_eq!(rec.f_count, 50);
        }
    }

    #[test]
    fn run_fm_with_m_one_matches_run_f() {
        let profile = block_profile(0.05, 9);
        let mut g1 = RtGenerator::new(unit2());
        let mut g2 = RtGenerator::new(unit2());
        let mut r1 = RngStream::new(3);
        let mut r2 = RngStream::new(3);
        let rec = run_f(&mut g1, &profile, 10_000, &mut r1, 0, false).unwrap();
        let (count, censored) = run_fm(&mut g2, &profile, 1, 10_000, &mut r2).unwrap();
        assert_eq!(rec.f_count, count);
        assert_eq!(rec.censored, censored);
    }

    #[test]
    fn run_fm_mean_and_monotonicity() {
        let profile = block_profile(0.01, 31);
        let mut sum = 0u64;
        let s = 3000;
        for i in 0..s {
            let mut rng = RngStream::new(41).substream(i);
            let mut g = RtGenerator::new(unit2());
            let (c2, _) = run_fm(&mut g, &profile, 2, DEFAULT_CAP, &mut rng).unwrap();
            let mut rng = RngStream::new(41).substream(i);
            let mut g = RtGenerator::new(unit2());
            let (c1, _) = run_fm(&mut g, &profile, 1, DEFAULT_CAP, &mut rng).unwrap();
            assert!(c2 >= c1);
            sum += c2;
        }
        let mean = sum as f64 / s as f64;
        assert!((mean - 200.0).abs() < 10.0, "mean = {mean}");
    }

    #[test]
    fn p_measure_matches_analytic_bernoulli() {
        let profile = block_profile(0.5, 13);
        let p = p_measure(|| RtGenerator::new(unit2()), &profile, 2, 10_000, 5).unwrap();
        assert!((p - 0.75).abs() < 0.02, "p = {p}");
    }

    #[test]
    fn p_measure_vanishes_with_theta() {
        let profile = block_profile(0.0005, 14);
        let p = p_measure(|| RtGenerator::new(unit2()), &profile, 2, 2000, 6).unwrap();
        assert!(p < 0.02, "p = {p}");
    }

    #[test]
    fn e_measure_matches_linearity() {
        let profile = block_profile(0.01, 15);
        let e = e_measure(|| RtGenerator::new(unit2()), &profile, 100, 10_000, 7).unwrap();
        assert!((e - 1.0).abs() < 0.05, "e = {e}");
    }

    #[test]
    fn e_and_p_are_consistent() {
        let profile = block_profile(0.05, 16);
        let counts = failure_counts(|| RtGenerator::new(unit2()), &profile, 50, 1000, 8).unwrap();
        let p = counts.iter().filter(|&&c| c > 0).count() as f64 / 1000.0;
        let e = counts.iter().sum::<u64>() as f64 / 1000.0;
        assert!(e >= p);
    }

    #[test]
    fn campaign_is_reproducible_and_order_stable() {
        let profile = block_profile(0.02, 17);
        let run = || {
            campaign_f(
                || RtGenerator::new(unit2()),
                &profile,
                200,
                DEFAULT_CAP,
                99,
                false,
            )
            .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a, b);
        assert_eq!(
            CampaignStats::from_records(&a, 0.95).unwrap(),
            CampaignStats::from_records(&b, 0.95).unwrap()
        );
        for (i, r) in a.iter().enumerate() {
            assert_eq!(r.run_index, i as u64);
        }
    }

    #[test]
    fn runs_csv_schema() {
        let records = vec![RunRecord {
            run_index: 0,
            f_count: 42,
            censored: false,
            f_time_ns: None,
        }];
        let mut buf = Vec::new();
        write_runs_csv(&mut buf, &records, "rt", "block_square", 0.01, 2).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "0,rt,block_square,0.01,2,42,0,\n"
        );
    }

    #[test]
    fn required_runs_values() {
        assert_eq!(required_runs(1.96, 1.0, 1.0, 5.0).unwrap(), 1537);
        assert_eq!(required_runs(1.96, 0.0, 1.0, 5.0).unwrap(), 1);
        let r5 = required_runs(2.0, 3.0, 2.0, 5.0).unwrap();
        let r10 = required_runs(2.0, 3.0, 2.0, 10.0).unwrap();
        // doubling r quarters the requirement (up to ceil rounding)
        assert!((r5 as f64 / r10 as f64 - 4.0).abs() < 0.01);
        assert!(required_runs(1.0, 1.0, 0.0, 5.0).is_err());
    }

    #[test]
    fn mann_whitney_separated_samples() {
        let (u, p) = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(u, 0.0);
        assert!(p <= 1.0);
    }

    #[test]
    fn mann_whitney_identical_samples() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let (u, p) = mann_whitney_u(&a, &a).unwrap();
        assert_eq!(u, 12.5); // null mean mn/2
        assert!(p > 0.9, "p = {p}");
    }

    #[test]
    fn mann_whitney_exact_matches_enumeration_oracle() {
        // brute force: enumerate all position assignments of A within the
        // pooled ranking and tabulate the U distribution
        fn oracle_p(a: &[f64], b: &[f64]) -> f64 {
            let m = a.len();
            let total = m + b.len();
            let mut u_obs = 0.0;
            for &x in a {
                for &y in b {
                    if x > y {
                        u_obs += 1.0;
                    }
                }
            }
            let mut counts: Vec<u64> = Vec::new();
            let mut lower = 0u64;
            let mut upper = 0u64;
            let mut all = 0u64;
            // iterate over bitmasks choosing positions for A
            for mask in 0u32..(1 << total) {
                if mask.count_ones() as usize != m {
                    continue;
                }
                // U = inversions: for each A position, count B positions below it
                let mut u = 0.0;
                let mut b_seen = 0.0;
                for pos in 0..total {
                    if mask & (1 << pos) != 0 {
                        u += b_seen;
                    } else {
                        b_seen += 1.0;
                    }
                }
                counts.push(u as u64);
                if u <= u_obs {
                    lower += 1;
                }
                if u >= u_obs {
                    upper += 1;
                }
                all += 1;
            }
            (2.0 * (lower.min(upper) as f64) / all as f64).min(1.0)
        }
        let mut rng = RngStream::new(77);
        for _ in 0..20 {
            // tie-free samples via distinct uniform draws
            let mut vals: Vec<f64> = (0..9).map(|_| rng.next_f64()).collect();
            vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
            vals.dedup();
            if vals.len() < 9 {
                continue;
            }
            // random split 4/5: shuffle indices
            let mut idx: Vec<usize> = (0..9).collect();
            for i in 0..9 {
                let j = i + rng.index(9 - i);
                idx.swap(i, j);
            }
            let a: Vec<f64> = idx[..4].iter().map(|&i| vals[i]).collect();
            let b: Vec<f64> = idx[4..].iter().map(|&i| vals[i]).collect();
            let (_, p) = mann_whitney_u(&a, &b).unwrap();
            let p_oracle = oracle_p(&a, &b);
            assert!((p - p_oracle).abs() < 1e-9, "{p} vs {p_oracle}");
        }
    }

    #[test]
    fn mann_whitney_normal_approx_on_large_samples() {
        // clearly shifted samples should give a tiny p-value
        let a: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..50).map(|i| i as f64 + 40.0).collect();
        let (_, p) = mann_whitney_u(&a, &b).unwrap();
        assert!(p < 1e-6, "p = {p}");
    }

    #[test]
    fn a12_examples() {
        assert_eq!(a12_effect_size(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 0.0);
        assert_eq!(a12_effect_size(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.5);
        assert_eq!(a12_effect_size(&[1.0, 3.0], &[2.0]).unwrap(), 0.5);
    }

    #[test]
    fn improvement_percent_examples() {
        assert_eq!(improvement_percent(100.0, 58.0, true), 42.0);
        assert_eq!(improvement_percent(100.0, 100.0, true), 0.0);
        assert_eq!(improvement_percent(100.0, 142.0, false), 42.0);
        assert!(improvement_percent(100.0, 142.0, true) < 0.0);
    }

    #[test]
    fn rt_f_counts_pass_ks_against_geometric() {
        let profile = block_profile(0.01, 23);
        let records = campaign_f(
            || RtGenerator::new(unit2()),
            &profile,
            2000,
            DEFAULT_CAP,
            123,
            false,
        )
        .unwrap();
        let counts: Vec<u64> = records.iter().map(|r| r.f_count).collect();
        let d = ks_geometric(&counts, 0.01).unwrap();
        assert!(d < ks_critical(2000, 0.01), "D = {d}");
    }

    #[test]
    fn ks_rejects_wrong_theta() {
        let profile = block_profile(0.02, 24);
        let records = campaign_f(
            || RtGenerator::new(unit2()),
            &profile,
            2000,
            DEFAULT_CAP,
            124,
            false,
        )
        .unwrap();
        let counts: Vec<u64> = records.iter().map(|r| r.f_count).collect();
        let d = ks_geometric(&counts, 0.01).unwrap();
        assert!(d > ks_critical(2000, 0.01), "D = {d}");
    }

    #[test]
    fn polyfit_recovers_exact_polynomials() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 + 2.0 * x).collect();
        let lin = polyfit(&xs, &ys, 1).unwrap();
        assert!((lin.coeffs[0] - 3.0).abs() < 1e-9);
        assert!((lin.coeffs[1] - 2.0).abs() < 1e-9);
        assert!(lin.r_squared > 0.999999);

        let ys2: Vec<f64> = xs.iter().map(|x| 1.0 + 0.5 * x + 0.25 * x * x).collect();
        let quad = polyfit(&xs, &ys2, 2).unwrap();
        assert!((quad.coeffs[2] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn f_test_prefers_the_true_model() {
        let mut rng = RngStream::new(91);
        let xs: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        // quadratic data with small noise: quadratic term should be
        // judged significant
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| 0.01 * x * x + x + rng.uniform(-1.0, 1.0))
            .collect();
        let lin = polyfit(&xs, &ys, 1).unwrap();
        let quad = polyfit(&xs, &ys, 2).unwrap();
        let p = f_test_nested(&lin, &quad, xs.len()).unwrap();
        assert!(p < 0.01, "p = {p}");
        // linear data: quadratic term should not be significant
        let ys_lin: Vec<f64> = xs.iter().map(|x| 2.0 * x + rng.uniform(-1.0, 1.0)).collect();
        let lin2 = polyfit(&xs, &ys_lin, 1).unwrap();
        let quad2 = polyfit(&xs, &ys_lin, 2).unwrap();
        let p2 = f_test_nested(&lin2, &quad2, xs.len()).unwrap();
        assert!(p2 > 0.01, "p = {p2}");
        assert!(lin2.r_squared >= 0.99);
    }

    #[test]
    fn u_distribution_total_is_binomial_coefficient() {
        let dist = u_distribution(4, 5);
        assert_eq!(dist.len(), 21);
        assert_eq!(dist.iter().sum::<f64>(), 126.0); // C(9, 4)
        // symmetry of the null distribution
        for u in 0..dist.len() {
            assert_eq!(dist[u], dist[dist.len() - 1 - u]);
        }
    }
}
