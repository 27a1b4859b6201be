//! Search-based test-set optimizers: a fixed-size set is evolved toward
//! an even spread under a distance fitness.

use crate::domain::{uniform_point, InputDomain, TestCase};
use crate::error::{ArtError, Result};
use crate::metrics::{dist_unchecked, diversity};
use crate::rng::RngStream;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// A fixed-size test set under optimization.
pub type TestSet = Vec<TestCase>;
/// A population of test sets.
pub type Population = Vec<TestSet>;

/// Smallest distance over all unordered pairs.
pub fn fitness_min_pair(set: &TestSet) -> Result<f64> {
    if set.len() < 2 {
        return Err(ArtError::TooFewPoints {
            required: 2,
            got: set.len(),
        });
    }
    let mut best = f64::INFINITY;
    for i in 0..set.len() {
        for j in (i + 1)..set.len() {
            best = best.min(dist_unchecked(&set[i], &set[j]));
        }
    }
    Ok(best)
}

/// Sum of nearest-neighbor distances; shares the diversity metric.
pub fn fitness_nn_sum(set: &TestSet) -> Result<f64> {
    diversity(set)
}

pub fn random_set(domain: &InputDomain, n: usize, rng: &mut RngStream) -> TestSet {
    (0..n).map(|_| uniform_point(domain, rng)).collect()
}

#[derive(Debug, Clone)]
pub struct HillClimbConfig {
    /// Full sweeps over the set.
    pub budget: usize,
    /// Starting perturbation amplitude as a fraction of the diameter.
    pub initial_amplitude: f64,
    /// Final amplitude fraction reached at the end of the budget.
    pub final_amplitude: f64,
}

impl Default for HillClimbConfig {
    fn default() -> Self {
        HillClimbConfig {
            budget: 500,
            initial_amplitude: 0.25,
            final_amplitude: 1e-4,
        }
    }
}

/// Shakes one point at a time with decaying amplitude, keeping a move only
/// when the min-pair fitness strictly increases. Stops early after a full
/// sweep without gain at the smallest amplitude.
pub fn hill_climb(
    set: &TestSet,
    cfg: &HillClimbConfig,
    domain: &InputDomain,
    rng: &mut RngStream,
) -> Result<TestSet> {
    Ok(hill_climb_traced(set, cfg, domain, rng)?.0)
}

/// Like [`hill_climb`], also returning the fitness after every evaluated
/// move.
pub fn hill_climb_traced(
    set: &TestSet,
    cfg: &HillClimbConfig,
    domain: &InputDomain,
    rng: &mut RngStream,
) -> Result<(TestSet, Vec<f64>)> {
    let mut trace = Vec::new();
    let mut current = set.clone();
    let mut fit = fitness_min_pair(&current)?;
    let diameter = domain.diameter();
    let amp0 = cfg.initial_amplitude * diameter;
    let amp1 = cfg.final_amplitude * diameter;
    for sweep in 0..cfg.budget {
        let t = sweep as f64 / cfg.budget.max(1) as f64;
        let amp = amp0 * (amp1 / amp0).powf(t);
        let mut improved = false;
        for i in 0..current.len() {
            let mut moved = current[i].clone();
            for x in moved.0.iter_mut() {
                *x += rng.uniform(-amp, amp);
            }
            domain.clamp(&mut moved);
            let old = std::mem::replace(&mut current[i], moved);
            let new_fit = fitness_min_pair(&current)?;
            if new_fit > fit {
                fit = new_fit;
                improved = true;
            } else {
                current[i] = old;
            }
            trace.push(fit);
        }
        if !improved && amp <= amp1 * 1.01 {
            break;
        }
    }
    Ok((current, trace))
}

#[derive(Debug, Clone)]
pub struct AnnealingConfig {
    pub budget: usize,
    /// Per-coordinate mutation probability.
    pub mutation_rate: f64,
    /// Starting temperature as a fraction of the domain diameter.
    pub initial_temperature: f64,
    /// Geometric cooling factor per iteration.
    pub cooling: f64,
}

impl Default for AnnealingConfig {
    fn default() -> Self {
        AnnealingConfig {
            budget: 1000,
            mutation_rate: 0.1,
            initial_temperature: 0.1,
            cooling: 0.99,
        }
    }
}

/// One annealing acceptance event, for instrumented runs.
#[derive(Debug, Clone, Copy)]
pub struct AnnealingStep {
    pub iteration: usize,
    pub accepted: bool,
    pub accepted_worse: bool,
    pub best_fitness: f64,
}

pub fn simulated_annealing(
    set: &TestSet,
    cfg: &AnnealingConfig,
    domain: &InputDomain,
    rng: &mut RngStream,
) -> Result<TestSet> {
    Ok(simulated_annealing_traced(set, cfg, domain, rng)?.0)
}

/// Annealing under the nearest-neighbor-sum fitness; returns the best-seen
/// set plus the per-iteration acceptance trace.
pub fn simulated_annealing_traced(
    set: &TestSet,
    cfg: &AnnealingConfig,
    domain: &InputDomain,
    rng: &mut RngStream,
) -> Result<(TestSet, Vec<AnnealingStep>)> {
    let mut current = set.clone();
    let mut current_fit = fitness_nn_sum(&current)?;
    let mut best = current.clone();
    let mut best_fit = current_fit;
    let mut temperature = cfg.initial_temperature * domain.diameter();
    let mut trace = Vec::with_capacity(cfg.budget);
    for iteration in 0..cfg.budget {
        let mut neighbor = current.clone();
        for tc in neighbor.iter_mut() {
            for (x, &(lo, hi)) in tc.0.iter_mut().zip(domain.bounds()) {
                if rng.next_f64() < cfg.mutation_rate {
                    *x = rng.uniform(lo, hi);
                }
            }
        }
        let neighbor_fit = fitness_nn_sum(&neighbor)?;
        let delta = neighbor_fit - current_fit;
        let (accepted, accepted_worse) = if delta >= 0.0 {
            (true, false)
        } else {
            let p = (delta / temperature).exp();
            let worse = rng.next_f64() < p;
            (worse, worse)
        };
        if accepted {
            current = neighbor;
            current_fit = neighbor_fit;
            if current_fit > best_fit {
                best_fit = current_fit;
                best = current.clone();
            }
        }
        trace.push(AnnealingStep {
            iteration,
            accepted,
            accepted_worse,
            best_fitness: best_fit,
        });
        temperature *= cfg.cooling;
    }
    Ok((best, trace))
}

#[derive(Debug, Clone)]
pub struct GeneticConfig {
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-coordinate mutation probability; default 1/(N*d) when None.
    pub mutation_rate: Option<f64>,
}

impl Default for GeneticConfig {
    fn default() -> Self {
        GeneticConfig {
            generations: 100,
            crossover_rate: 0.9,
            mutation_rate: None,
        }
    }
}

fn roulette(fitness: &[f64], rng: &mut RngStream) -> usize {
    let total: f64 = fitness.iter().sum();
    if total <= 0.0 {
        return rng.index(fitness.len());
    }
    let mut target = rng.next_f64() * total;
    for (i, &f) in fitness.iter().enumerate() {
        target -= f;
        if target <= 0.0 {
            return i;
        }
    }
    fitness.len() - 1
}

/// Genetic evolution of a population of test sets with fitness-
/// proportional selection, one-point crossover exchanging contiguous
/// test-case blocks, per-coordinate mutation, and elitism.
pub fn genetic(
    population: &Population,
    cfg: &GeneticConfig,
    domain: &InputDomain,
    rng: &mut RngStream,
) -> Result<TestSet> {
    if population.len() < 2 {
        return Err(ArtError::InvalidConfig("population size must be >= 2".into()));
    }
    let n = population[0].len();
    let d = domain.dims();
    let mutation_rate = cfg.mutation_rate.unwrap_or(1.0 / (n * d) as f64);
    let mut pop = population.clone();
    for _ in 0..cfg.generations {
        let fits: Vec<f64> = pop
            .iter()
            .map(fitness_nn_sum)
            .collect::<Result<_>>()?;
        let elite = fits
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let mut next: Population = vec![pop[elite].clone()];
        while next.len() < pop.len() {
            let a = roulette(&fits, rng);
            let b = roulette(&fits, rng);
            let (mut child_a, mut child_b) = (pop[a].clone(), pop[b].clone());
            if rng.next_f64() < cfg.crossover_rate {
                let cut = 1 + rng.index(n - 1);
                for i in 0..cut {
                    std::mem::swap(&mut child_a[i], &mut child_b[i]);
                }
            }
            for child in [&mut child_a, &mut child_b] {
                for tc in child.iter_mut() {
                    for (x, &(lo, hi)) in tc.0.iter_mut().zip(domain.bounds()) {
                        if rng.next_f64() < mutation_rate {
                            *x = rng.uniform(lo, hi);
                        }
                    }
                }
            }
            next.push(child_a);
            if next.len() < pop.len() {
                next.push(child_b);
            }
        }
        pop = next;
    }
    pop.into_iter()
        .max_by(|a, b| {
            fitness_nn_sum(a)
                .unwrap_or(0.0)
                .partial_cmp(&fitness_nn_sum(b).unwrap_or(0.0))
                .unwrap()
        })
        .ok_or_else(|| ArtError::InvalidConfig("empty population".into()))
}

#[derive(Debug, Clone)]
pub struct RepulsionConfig {
    pub iterations: usize,
    /// Electric charge Q of every test case.
    pub charge: f64,
    /// Common mass m.
    pub mass: f64,
}

impl Default for RepulsionConfig {
    fn default() -> Self {
        RepulsionConfig {
            iterations: 200,
            charge: 1e-3,
            mass: 1.0,
        }
    }
}

/// Resultant Coulomb force on `set[idx]`: magnitude Q^2 / dist^2 away from
/// every other point. Distances below 1e-6 of the diameter are clamped
/// before the inverse square.
pub fn repulsion_force(set: &TestSet, idx: usize, cfg: &RepulsionConfig, domain: &InputDomain) -> Vec<f64> {
    let d = set[idx].dims();
    let floor = 1e-6 * domain.diameter();
    let mut force = vec![0.0; d];
    for (j, other) in set.iter().enumerate() {
        if j == idx {
            continue;
        }
        let dist = dist_unchecked(&set[idx], other).max(floor);
        let magnitude = cfg.charge * cfg.charge / (dist * dist);
        for k in 0..d {
            let diff = set[idx].coords()[k] - other.coords()[k];
            // Coincident points push along an arbitrary fixed axis.
            let dir = if dist > floor || diff != 0.0 {
                diff / dist
            } else if k == 0 {
                1.0
            } else {
                0.0
            };
            force[k] += magnitude * dir;
        }
    }
    force
}

fn repulsion_step(set: &mut TestSet, cfg: &RepulsionConfig, domain: &InputDomain) {
    let forces: Vec<Vec<f64>> = (0..set.len())
        .map(|i| repulsion_force(set, i, cfg, domain))
        .collect();
    for (tc, f) in set.iter_mut().zip(forces) {
        for (x, fk) in tc.0.iter_mut().zip(f) {
            *x += fk / cfg.mass;
        }
        domain.clamp(tc);
    }
}

/// Evolves each population member independently under simulated repulsion
/// and returns the best by nearest-neighbor-sum fitness. Members evolve on
/// parallel workers when the `parallel` feature is on; the merge is by
/// member index, so results are identical either way.
pub fn simulated_repulsion(
    population: &Population,
    cfg: &RepulsionConfig,
    domain: &InputDomain,
) -> Result<TestSet> {
    if population.is_empty() {
        return Err(ArtError::InvalidConfig("population must be nonempty".into()));
    }
    let evolve = |set: &TestSet| -> TestSet {
        let mut s = set.clone();
        for _ in 0..cfg.iterations {
            repulsion_step(&mut s, cfg, domain);
        }
        s
    };
    #[cfg(feature = "parallel")]
    let evolved: Vec<TestSet> = population.par_iter().map(evolve).collect();
    #[cfg(not(feature = "parallel"))]
    let evolved: Vec<TestSet> = population.iter().map(evolve).collect();

    let mut best = None;
    let mut best_fit = f64::NEG_INFINITY;
    for s in evolved {
        let f = fitness_nn_sum(&s)?;
        if f > best_fit {
            best_fit = f;
            best = Some(s);
        }
    }
    Ok(best.expect("population nonempty"))
}

#[derive(Debug, Clone)]
pub struct LocalSpreadingConfig {
    /// Fraction of (d_s - d_f) moved per step.
    pub step_fraction: f64,
    pub max_sweeps: usize,
}

impl Default for LocalSpreadingConfig {
    fn default() -> Self {
        LocalSpreadingConfig {
            step_fraction: 0.5,
            max_sweeps: 1000,
        }
    }
}

fn two_nearest(set: &TestSet, idx: usize) -> (usize, f64, f64) {
    let mut first = (usize::MAX, f64::INFINITY);
    let mut second = f64::INFINITY;
    for (j, other) in set.iter().enumerate() {
        if j == idx {
            continue;
        }
        let d = dist_unchecked(&set[idx], other);
        if d < first.1 {
            second = first.1;
            first = (j, d);
        } else if d < second {
            second = d;
        }
    }
    (first.0, first.1, second)
}

/// Moves each point away from its nearest neighbor along the ray from
/// that neighbor, by `step_fraction * (d_s - d_f)`. A move is kept only
/// when it strictly increases the point's nearest-neighbor distance
/// without decreasing the set's min-pair fitness; sweeps repeat until no
/// point moves.
pub fn local_spreading(
    set: &TestSet,
    cfg: &LocalSpreadingConfig,
    domain: &InputDomain,
) -> Result<TestSet> {
    Ok(local_spreading_traced(set, cfg, domain)?.0)
}

/// Like [`local_spreading`], also returning the min-pair fitness after
/// every evaluated move.
pub fn local_spreading_traced(
    set: &TestSet,
    cfg: &LocalSpreadingConfig,
    domain: &InputDomain,
) -> Result<(TestSet, Vec<f64>)> {
    let mut trace = Vec::new();
    if set.len() < 3 {
        return Err(ArtError::TooFewPoints {
            required: 3,
            got: set.len(),
        });
    }
    let mut current = set.clone();
    let mut global_fit = fitness_min_pair(&current)?;
    for _ in 0..cfg.max_sweeps {
        let mut moved_any = false;
        for i in 0..current.len() {
            let (nf, d_f, d_s) = two_nearest(&current, i);
            if !(d_s.is_finite() && d_s > d_f && d_f > 0.0) {
                continue;
            }
            let step = cfg.step_fraction * (d_s - d_f);
            let mut candidate = current[i].clone();
            for k in 0..candidate.dims() {
                let dir = (current[i].coords()[k] - current[nf].coords()[k]) / d_f;
                candidate.0[k] += step * dir;
            }
            domain.clamp(&mut candidate);
            let old = std::mem::replace(&mut current[i], candidate);
            let (_, new_df, _) = two_nearest(&current, i);
            let new_fit = fitness_min_pair(&current)?;
            if new_df > d_f && new_fit >= global_fit {
                global_fit = new_fit;
                moved_any = true;
            } else {
                current[i] = old;
            }
            trace.push(global_fit);
        }
        if !moved_any {
            break;
        }
    }
    Ok((current, trace))
}

#[derive(Debug, Clone)]
pub struct RbcvtConfig {
    pub iterations: usize,
    /// Interior Monte-Carlo samples per test point.
    pub samples_per_point: usize,
    /// Boundary points per test point.
    pub border_per_point: usize,
}

impl Default for RbcvtConfig {
    fn default() -> Self {
        RbcvtConfig {
            iterations: 20,
            samples_per_point: 100,
            border_per_point: 4,
        }
    }
}

fn border_point(domain: &InputDomain, rng: &mut RngStream) -> TestCase {
    let mut p = uniform_point(domain, rng);
    let face = rng.index(domain.dims());
    let (lo, hi) = domain.bounds()[face];
    p.0[face] = if rng.next_f64() < 0.5 { lo } else { hi };
    p
}

/// Centroidal Voronoi relaxation with a random border point set: samples
/// are assigned to their nearest test point and each point moves to its
/// cell's sample centroid. Points with empty cells stay put for the round.
pub fn rbcvt(
    set: &TestSet,
    cfg: &RbcvtConfig,
    domain: &InputDomain,
    rng: &mut RngStream,
) -> Result<TestSet> {
    if set.is_empty() {
        return Err(ArtError::TooFewPoints {
            required: 1,
            got: 0,
        });
    }
    let n = set.len();
    let d = domain.dims();
    let mut current = set.clone();
    for _ in 0..cfg.iterations {
        let mut samples: Vec<TestCase> = (0..cfg.samples_per_point * n)
            .map(|_| uniform_point(domain, rng))
            .collect();
        samples.extend((0..cfg.border_per_point * n).map(|_| border_point(domain, rng)));

        let mut sums = vec![vec![0.0; d]; n];
        let mut counts = vec![0usize; n];
        for s in &samples {
            let owner = (0..n)
                .min_by(|&a, &b| {
                    dist_unchecked(s, &current[a])
                        .partial_cmp(&dist_unchecked(s, &current[b]))
                        .unwrap()
                })
                .unwrap();
            counts[owner] += 1;
            for k in 0..d {
                sums[owner][k] += s.coords()[k];
            }
        }
        for i in 0..n {
            if counts[i] > 0 {
                let mut centroid =
                    TestCase(sums[i].iter().map(|&x| x / counts[i] as f64).collect());
                domain.clamp(&mut centroid);
                current[i] = centroid;
            }
        }
    }
    Ok(current)
}
