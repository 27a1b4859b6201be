//! Partitioning-based generators: the input domain is carved into
//! subdomains and the next test case is drawn uniformly inside a chosen
//! cell.

use crate::domain::{uniform_point, Generator, InputDomain, TestCase};
use crate::error::{ArtError, Result};
use crate::metrics::in_center_region;
use crate::rng::RngStream;

/// How the domain is split into subdomains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionSchema {
    /// One-time grid of `n_per_dim^d` equal cells.
    Static { n_per_dim: usize },
    /// Split the cell containing the latest test at that test's
    /// coordinates.
    RandomBreakpoint,
    /// Halve one dimension per round, cycling `round % d`.
    BisectionPerDim,
    /// Halve every dimension each round: `2^(i*d)` cells after round i.
    BisectionAllDims,
    /// Rebuild the whole domain as an `i^d` grid on round i.
    IterativeGrid,
    /// Re-cut only the widest dimension from j to j+1 equal parts.
    IterativeLargestDim,
}

/// How the target subdomain is picked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionCriterion {
    /// Largest cell among those holding no test case.
    MaxSize,
    /// Cell with the fewest test cases, ties broken uniformly at random.
    FewestTests,
    /// An empty cell none of whose neighbors (faces or corners) is
    /// occupied.
    NoTestSelfOrNeighbor,
    /// Edge vs. center region chosen with odds p1 : p2.
    Proportional { p1: f64, p2: f64 },
}

#[derive(Debug, Clone)]
struct Cell {
    bounds: Vec<(f64, f64)>,
    count: usize,
}

impl Cell {
    fn volume(&self) -> f64 {
        self.bounds.iter().map(|&(lo, hi)| hi - lo).product()
    }

    fn contains(&self, tc: &TestCase) -> bool {
        tc.coords()
            .iter()
            .zip(&self.bounds)
            .all(|(&x, &(lo, hi))| lo <= x && x < hi)
    }
}

/// Current partition plus per-cell occupancy and the schema round counter.
#[derive(Debug, Clone)]
pub struct PartitionState {
    domain: InputDomain,
    cells: Vec<Cell>,
    round: usize,
    parts_per_dim: Vec<usize>,
    executed: Vec<TestCase>,
}

impl PartitionState {
    pub fn new(domain: InputDomain) -> Self {
        let cells = vec![Cell {
            bounds: domain.bounds().to_vec(),
            count: 0,
        }];
        let d = domain.dims();
        PartitionState {
            domain,
            cells,
            round: 0,
            parts_per_dim: vec![1; d],
            executed: Vec::new(),
        }
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_bounds(&self) -> Vec<&[(f64, f64)]> {
        self.cells.iter().map(|c| c.bounds.as_slice()).collect()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.cells.iter().map(|c| c.count).collect()
    }

    pub fn executed(&self) -> &[TestCase] {
        &self.executed
    }

    /// Records a generated test, updating the occupancy of its cell.
    pub fn record(&mut self, tc: TestCase) {
        if let Some(cell) = self.cells.iter_mut().find(|c| c.contains(&tc)) {
            cell.count += 1;
        }
        self.executed.push(tc);
    }

    fn grid(&self, parts: &[usize]) -> Vec<Cell> {
        let bounds = self.domain.bounds();
        let d = bounds.len();
        let total: usize = parts.iter().product();
        let mut cells = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            let b: Vec<(f64, f64)> = (0..d)
                .map(|i| {
                    let (lo, hi) = bounds[i];
                    let w = (hi - lo) / parts[i] as f64;
                    let a = lo + idx[i] as f64 * w;
                    let e = if idx[i] + 1 == parts[i] { hi } else { a + w };
                    (a, e)
                })
                .collect();
            cells.push(Cell { bounds: b, count: 0 });
            for i in 0..d {
                idx[i] += 1;
                if idx[i] < parts[i] {
                    break;
                }
                idx[i] = 0;
            }
        }
        cells
    }

    fn recount(&mut self) {
        for c in &mut self.cells {
            c.count = 0;
        }
        for i in 0..self.executed.len() {
            let tc = self.executed[i].clone();
            if let Some(cell) = self.cells.iter_mut().find(|c| c.contains(&tc)) {
                cell.count += 1;
            }
        }
    }

    /// Applies one round of the partitioning schema.
    pub fn partition(&mut self, schema: PartitionSchema) {
        self.round += 1;
        match schema {
            PartitionSchema::Static { n_per_dim } => {
                // Built once; later triggers leave the grid unchanged.
                if self.parts_per_dim.iter().any(|&p| p != n_per_dim) {
                    self.parts_per_dim = vec![n_per_dim.max(1); self.domain.dims()];
                    self.cells = self.grid(&self.parts_per_dim.clone());
                    self.recount();
                }
            }
            PartitionSchema::RandomBreakpoint => {
                let Some(latest) = self.executed.last().cloned() else {
                    return;
                };
                let Some(pos) = self.cells.iter().position(|c| c.contains(&latest)) else {
                    return;
                };
                let cell = self.cells.remove(pos);
                let d = latest.dims();
                // 2^d subcells split at the breakpoint, skipping
                // dimensions where the point sits on the cell edge.
                let mut pieces = vec![cell.bounds.clone()];
                for i in 0..d {
                    let x = latest.coords()[i];
                    let mut next = Vec::with_capacity(pieces.len() * 2);
                    for b in pieces {
                        let (lo, hi) = b[i];
                        if lo < x && x < hi {
                            let mut left = b.clone();
                            left[i] = (lo, x);
                            let mut right = b;
                            right[i] = (x, hi);
                            next.push(left);
                            next.push(right);
                        } else {
                            next.push(b);
                        }
                    }
                    pieces = next;
                }
                for b in pieces {
                    self.cells.push(Cell { bounds: b, count: 0 });
                }
                self.recount();
            }
            PartitionSchema::BisectionPerDim => {
                let dim = (self.round - 1) % self.domain.dims();
                self.parts_per_dim[dim] *= 2;
                let mut split = Vec::with_capacity(self.cells.len() * 2);
                for c in self.cells.drain(..) {
                    let (lo, hi) = c.bounds[dim];
                    let mid = 0.5 * (lo + hi);
                    let mut left = c.bounds.clone();
                    left[dim] = (lo, mid);
                    let mut right = c.bounds;
                    right[dim] = (mid, hi);
                    split.push(Cell { bounds: left, count: 0 });
                    split.push(Cell { bounds: right, count: 0 });
                }
                self.cells = split;
                self.recount();
            }
            PartitionSchema::BisectionAllDims => {
                for p in &mut self.parts_per_dim {
                    *p *= 2;
                }
                self.cells = self.grid(&self.parts_per_dim.clone());
                self.recount();
            }
            PartitionSchema::IterativeGrid => {
                let i = self.round + 1; // round 1 -> 2 parts per dim
                self.parts_per_dim = vec![i; self.domain.dims()];
                self.cells = self.grid(&self.parts_per_dim.clone());
                self.recount();
            }
            PartitionSchema::IterativeLargestDim => {
                let widest = (0..self.domain.dims())
                    .max_by(|&a, &b| {
                        let wa = (self.domain.bounds()[a].1 - self.domain.bounds()[a].0)
                            / self.parts_per_dim[a] as f64;
                        let wb = (self.domain.bounds()[b].1 - self.domain.bounds()[b].0)
                            / self.parts_per_dim[b] as f64;
                        wa.partial_cmp(&wb).unwrap()
                    })
                    .unwrap();
                self.parts_per_dim[widest] += 1;
                self.cells = self.grid(&self.parts_per_dim.clone());
                self.recount();
            }
        }
    }

    fn neighbors(&self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let tol = 1e-12 * self.domain.diameter().max(1.0);
        self.cells[i]
            .bounds
            .iter()
            .zip(&self.cells[j].bounds)
            .all(|(&(alo, ahi), &(blo, bhi))| alo <= bhi + tol && blo <= ahi + tol)
    }

    /// Picks a cell index per the criterion, or `None` when no cell
    /// qualifies and the partitioning condition should fire.
    pub fn select_subdomain(
        &self,
        criterion: SelectionCriterion,
        rng: &mut RngStream,
    ) -> Option<usize> {
        match criterion {
            SelectionCriterion::MaxSize => self
                .cells
                .iter()
                .enumerate()
                .filter(|(_, c)| c.count == 0)
                .max_by(|(_, a), (_, b)| a.volume().partial_cmp(&b.volume()).unwrap())
                .map(|(i, _)| i),
            SelectionCriterion::FewestTests => {
                let min = self.cells.iter().map(|c| c.count).min()?;
                let ties: Vec<usize> = self
                    .cells
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.count == min)
                    .map(|(i, _)| i)
                    .collect();
                Some(ties[rng.index(ties.len())])
            }
            SelectionCriterion::NoTestSelfOrNeighbor => {
                (0..self.cells.len()).find(|&i| {
                    self.cells[i].count == 0
                        && (0..self.cells.len()).all(|j| {
                            !self.neighbors(i, j) || self.cells[j].count == 0
                        })
                })
            }
            SelectionCriterion::Proportional { .. } => None, // handled by the generator
        }
    }
}

const MAX_REPARTITIONS_PER_STEP: usize = 8;

/// Partitioning-based generator.
#[derive(Debug, Clone)]
pub struct PbsGenerator {
    domain: InputDomain,
    schema: PartitionSchema,
    criterion: SelectionCriterion,
    state: PartitionState,
    // Proportional-selection region odds (edge, center).
    region_odds: (f64, f64),
}

impl PbsGenerator {
    pub fn new(domain: InputDomain, schema: PartitionSchema, criterion: SelectionCriterion) -> Self {
        let state = PartitionState::new(domain.clone());
        let region_odds = match criterion {
            SelectionCriterion::Proportional { p1, p2 } => (p1, p2),
            _ => (0.5, 0.5),
        };
        PbsGenerator {
            domain,
            schema,
            criterion,
            state,
            region_odds,
        }
    }

    pub fn state(&self) -> &PartitionState {
        &self.state
    }

    fn next_proportional(&mut self, rng: &mut RngStream) -> TestCase {
        let (p_edge, p_center) = self.region_odds;
        let pick_edge = rng.next_f64() * (p_edge + p_center) < p_edge;
        let tc = loop {
            let p = uniform_point(&self.domain, rng);
            if in_center_region(&p, &self.domain) != pick_edge {
                break p;
            }
        };
        // Failure-free test in a region lowers that region's odds.
        if pick_edge {
            self.region_odds.0 *= 0.99;
        } else {
            self.region_odds.1 *= 0.99;
        }
        let s = self.region_odds.0 + self.region_odds.1;
        self.region_odds.0 /= s;
        self.region_odds.1 /= s;
        tc
    }
}

impl Generator for PbsGenerator {
    fn next(&mut self, rng: &mut RngStream) -> Result<TestCase> {
        if self.state.executed.is_empty() {
            let tc = uniform_point(&self.domain, rng);
            self.state.record(tc.clone());
            return Ok(tc);
        }
        if let SelectionCriterion::Proportional { .. } = self.criterion {
            let tc = self.next_proportional(rng);
            self.state.record(tc.clone());
            return Ok(tc);
        }

        // Grid trigger: every cell occupied.
        if self.state.cells.iter().all(|c| c.count > 0) {
            self.state.partition(self.schema);
        }
        let mut idx = None;
        for _ in 0..MAX_REPARTITIONS_PER_STEP {
            idx = self.state.select_subdomain(self.criterion, rng);
            if idx.is_some() {
                break;
            }
            self.state.partition(self.schema);
        }
        // A non-refining schema (Static) can leave the strict criteria
        // unsatisfiable forever; fall back to the fewest-tests cell so
        // generation keeps its total order.
        let idx = match idx {
            Some(i) => i,
            None => self
                .state
                .select_subdomain(SelectionCriterion::FewestTests, rng)
                .ok_or_else(|| ArtError::InvalidConfig("partition has no cells".into()))?,
        };
        let cell_domain = InputDomain::new(self.state.cells[idx].bounds.clone())?;
        let tc = uniform_point(&cell_domain, rng);
        self.state.record(tc.clone());
        Ok(tc)
    }

    fn reset(&mut self) {
        self.state = PartitionState::new(self.domain.clone());
    }

    fn domain(&self) -> &InputDomain {
        &self.domain
    }
}
