//! Cost-reduction hybrids wrapping other generators: mirror translation,
//! forgetting views of the executed set, and divide-and-conquer dispatch.

use std::collections::VecDeque;

use crate::domain::{uniform_point, Generator, InputDomain, TestCase};
use crate::error::{ArtError, Result};
use crate::rng::RngStream;
use crate::stfcs::{fscs_select, FscsConfig};

/// Grid of congruent subdomains with one source cell; tests generated in
/// the source are translated into every mirror cell.
#[derive(Debug, Clone)]
pub struct MirrorScheme {
    domain: InputDomain,
    parts_per_dim: Vec<usize>,
    source_index: usize,
}

impl MirrorScheme {
    pub fn new(domain: InputDomain, parts_per_dim: Vec<usize>, source_index: usize) -> Result<Self> {
        if parts_per_dim.len() != domain.dims() {
            return Err(ArtError::DimensionMismatch {
                expected: domain.dims(),
                got: parts_per_dim.len(),
            });
        }
        let m: usize = parts_per_dim.iter().product();
        if m < 2 {
            return Err(ArtError::InvalidConfig("mirroring needs at least 2 subdomains".into()));
        }
        if source_index >= m {
            return Err(ArtError::InvalidConfig(format!(
                "source index {source_index} out of range for {m} subdomains"
            )));
        }
        Ok(MirrorScheme {
            domain,
            parts_per_dim,
            source_index,
        })
    }

    pub fn subdomain_count(&self) -> usize {
        self.parts_per_dim.iter().product()
    }

    fn cell_index_to_coords(&self, mut idx: usize) -> Vec<usize> {
        self.parts_per_dim
            .iter()
            .map(|&p| {
                let c = idx % p;
                idx /= p;
                c
            })
            .collect()
    }

    fn cell_offset(&self, idx: usize) -> Vec<f64> {
        self.cell_index_to_coords(idx)
            .iter()
            .zip(self.domain.bounds())
            .zip(&self.parts_per_dim)
            .map(|((&c, &(lo, hi)), &p)| c as f64 * (hi - lo) / p as f64)
            .collect()
    }

    /// The source cell as a domain for the inner generator.
    pub fn source_subdomain(&self) -> InputDomain {
        let offset = self.cell_offset(self.source_index);
        let bounds = self
            .domain
            .bounds()
            .iter()
            .zip(&self.parts_per_dim)
            .zip(&offset)
            .map(|((&(lo, hi), &p), &off)| {
                let w = (hi - lo) / p as f64;
                (lo + off, lo + off + w)
            })
            .collect();
        InputDomain::new(bounds).expect("source cell is a valid domain")
    }

    /// Translates a source test into mirror cell `idx`.
    pub fn translate(&self, source_test: &TestCase, idx: usize) -> TestCase {
        let src = self.cell_offset(self.source_index);
        let dst = self.cell_offset(idx);
        TestCase(
            source_test
                .coords()
                .iter()
                .zip(src.iter().zip(&dst))
                .map(|(&x, (&s, &t))| x - s + t)
                .collect(),
        )
    }
}

/// Mirror ART: each round takes one test from the inner generator in the
/// source subdomain, then replays its translated images through the
/// mirror cells in fixed index order. Only source tests feed the inner
/// generator's state.
pub struct MartGenerator<G: Generator> {
    inner: G,
    scheme: MirrorScheme,
    pending: VecDeque<TestCase>,
}

impl<G: Generator> MartGenerator<G> {
    /// `inner` must be confined to `scheme.source_subdomain()`.
    pub fn new(inner: G, scheme: MirrorScheme) -> Result<Self> {
        if *inner.domain() != scheme.source_subdomain() {
            return Err(ArtError::InvalidConfig(
                "inner generator must operate on the source subdomain".into(),
            ));
        }
        Ok(MartGenerator {
            inner,
            scheme,
            pending: VecDeque::new(),
        })
    }
}

impl<G: Generator> Generator for MartGenerator<G> {
    fn next(&mut self, rng: &mut RngStream) -> Result<TestCase> {
        if let Some(tc) = self.pending.pop_front() {
            return Ok(tc);
        }
        let source_test = self.inner.next(rng)?;
        for idx in 0..self.scheme.subdomain_count() {
            if idx != self.scheme.source_index {
                self.pending
                    .push_back(self.scheme.translate(&source_test, idx));
            }
        }
        Ok(source_test)
    }

    fn reset(&mut self) {
        self.inner.reset();
        self.pending.clear();
    }

    fn domain(&self) -> &InputDomain {
        &self.scheme.domain
    }
}

/// Bounds how much of the executed history fitness computations consult.
#[derive(Debug, Clone, Copy)]
pub enum ForgettingPolicy {
    /// Keep only the most recent `lambda` tests.
    RecentWindow { lambda: usize },
    /// Keep `lambda` tests sampled uniformly without replacement.
    RandomSubset { lambda: usize },
}

/// Reduced view of the executed set per the policy; always a subset of no
/// more than lambda tests.
pub fn forget(executed: &[TestCase], policy: ForgettingPolicy, rng: &mut RngStream) -> Vec<TestCase> {
    match policy {
        ForgettingPolicy::RecentWindow { lambda } => {
            let start = executed.len().saturating_sub(lambda);
            executed[start..].to_vec()
        }
        ForgettingPolicy::RandomSubset { lambda } => {
            if executed.len() <= lambda {
                return executed.to_vec();
            }
            // Partial Fisher-Yates over an index vector.
            let mut indices: Vec<usize> = (0..executed.len()).collect();
            for i in 0..lambda {
                let j = i + rng.index(indices.len() - i);
                indices.swap(i, j);
            }
            indices[..lambda]
                .iter()
                .map(|&i| executed[i].clone())
                .collect()
        }
    }
}

/// FSCS whose fitness consults only a forgetting view of the history,
/// keeping per-test cost constant in the long run.
pub struct ForgettingFscsGenerator {
    domain: InputDomain,
    cfg: FscsConfig,
    policy: ForgettingPolicy,
    executed: Vec<TestCase>,
    distance_evals: u64,
}

impl ForgettingFscsGenerator {
    pub fn new(domain: InputDomain, cfg: FscsConfig, policy: ForgettingPolicy) -> Self {
        ForgettingFscsGenerator {
            domain,
            cfg,
            policy,
            executed: Vec::new(),
            distance_evals: 0,
        }
    }

    pub fn distance_evals(&self) -> u64 {
        self.distance_evals
    }
}

impl Generator for ForgettingFscsGenerator {
    fn next(&mut self, rng: &mut RngStream) -> Result<TestCase> {
        let tc = if self.executed.is_empty() {
            uniform_point(&self.domain, rng)
        } else {
            let view = forget(&self.executed, self.policy, rng);
            fscs_select(&view, &self.cfg, &self.domain, rng, &mut self.distance_evals)?
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

#[derive(Debug, Clone)]
pub struct DncConfig {
    /// Tests per cell before the grid is bisected again.
    pub quota: usize,
    pub fscs: FscsConfig,
}

impl Default for DncConfig {
    fn default() -> Self {
        DncConfig {
            quota: 50,
            fscs: FscsConfig::default(),
        }
    }
}

/// Divide-and-conquer ART: an independent FSCS instance runs inside each
/// grid cell, dispatch cycles cells round-robin, and the grid bisects
/// every dimension once each cell reaches its quota. Per-test distance
/// work is bounded by the cell population rather than the full history.
pub struct DivideAndConquerGenerator {
    domain: InputDomain,
    cfg: DncConfig,
    cells: Vec<InputDomain>,
    per_cell: Vec<Vec<TestCase>>,
    cursor: usize,
    distance_evals: u64,
}

impl DivideAndConquerGenerator {
    pub fn new(domain: InputDomain, cfg: DncConfig) -> Self {
        DivideAndConquerGenerator {
            cells: vec![domain.clone()],
            per_cell: vec![Vec::new()],
            domain,
            cfg,
            cursor: 0,
            distance_evals: 0,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn distance_evals(&self) -> u64 {
        self.distance_evals
    }

    fn rebuild_grid(&mut self, splits: u32) {
        let d = self.domain.dims();
        let parts = 1usize << splits;
        let mut cells = Vec::with_capacity(parts.pow(d as u32));
        let mut idx = vec![0usize; d];
        let total = parts.pow(d as u32);
        for _ in 0..total {
            let bounds: Vec<(f64, f64)> = (0..d)
                .map(|i| {
                    let (lo, hi) = self.domain.bounds()[i];
                    let w = (hi - lo) / parts as f64;
                    let a = lo + idx[i] as f64 * w;
                    let b = if idx[i] + 1 == parts { hi } else { a + w };
                    (a, b)
                })
                .collect();
            cells.push(InputDomain::new(bounds).expect("grid cell valid"));
            for i in 0..d {
                idx[i] += 1;
                if idx[i] < parts {
                    break;
                }
                idx[i] = 0;
            }
        }
        let executed: Vec<TestCase> = self.per_cell.drain(..).flatten().collect();
        let mut per_cell = vec![Vec::new(); cells.len()];
        for tc in executed {
            if let Some(i) = cells.iter().position(|c| c.contains(&tc)) {
                per_cell[i].push(tc);
            }
        }
        self.cells = cells;
        self.per_cell = per_cell;
        self.cursor = 0;
    }
}

impl Generator for DivideAndConquerGenerator {
    fn next(&mut self, rng: &mut RngStream) -> Result<TestCase> {
        if self.per_cell.iter().all(|c| c.len() >= self.cfg.quota) {
            let splits = (self.cells.len() as f64)
                .powf(1.0 / self.domain.dims() as f64)
                .round() as u32;
            self.rebuild_grid(splits.trailing_zeros() + 1);
        }
        let cell_idx = self.cursor % self.cells.len();
        self.cursor += 1;
        let cell = self.cells[cell_idx].clone();
        let tc = if self.per_cell[cell_idx].is_empty() {
            uniform_point(&cell, rng)
        } else {
            fscs_select(
                &self.per_cell[cell_idx],
                &self.cfg.fscs,
                &cell,
                rng,
                &mut self.distance_evals,
            )?
        };
        self.per_cell[cell_idx].push(tc.clone());
        Ok(tc)
    }

    fn reset(&mut self) {
        self.cells = vec![self.domain.clone()];
        self.per_cell = vec![Vec::new()];
        self.cursor = 0;
        self.distance_evals = 0;
    }

    fn domain(&self) -> &InputDomain {
        &self.domain
    }
}
