//! Seeded jump-process simulation and regenerative-cycle statistics.
//!
//! Everything here is an empirical cross-check for the linear-algebra routes:
//! trajectories estimate occupancy fractions, excursion harvesting estimates
//! first-passage probabilities and conditional occupation times, and
//! regenerative cycles estimate the per-cycle excursion counts and the glued
//! stationary distribution.
//!
//! Reproducibility: the generator is ChaCha12, seeded with a caller-provided
//! 64-bit value. Holding times use the inverse CDF of the exponential
//! distribution on a draw from the open unit interval, and jump targets use a
//! single uniform draw against the cumulative rate in ascending state order,
//! so a trajectory is a pure function of `(model, start, seed)`. Operations
//! that run several independent replications place them on distinct ChaCha
//! streams of the same seed; replications can therefore run concurrently and
//! still aggregate to identical results.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::chain::{ensure_valid_irreducible, ChainModel, Method, RateMatrix, StationaryResult};
use crate::compose::GluedChain;
use crate::error::{Error, Result};
use crate::excursion::{Mark, MarkedChain};

/// Jump budget per excursion or cycle before the simulation gives up;
/// unreachable in practice for irreducible chains.
pub const WATCHDOG_JUMPS: u64 = 10_000_000;

/// Number of batches used for the batch-means standard errors of occupancy
/// estimates.
pub const OCCUPANCY_BATCHES: u64 = 32;

/// A sampled mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Sample mean and standard error of a slice.
pub fn mean_and_se(values: &[f64]) -> Estimate {
    let n = values.len();
    if n == 0 {
        return Estimate { mean: 0.0, std_error: 0.0 };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Estimate { mean, std_error: 0.0 };
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Estimate { mean, std_error: (var / n as f64).sqrt() }
}

/// A simulated jump path: `states[k]` is occupied from `times[k]` until the
/// next jump at `times[k + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub states: Vec<usize>,
    pub times: Vec<f64>,
}

impl Trajectory {
    pub fn n_jumps(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    /// Fraction of elapsed time spent in each state, over the span covered by
    /// recorded jumps.
    pub fn occupancy(&self, n_states: usize) -> Vec<f64> {
        let mut time = vec![0.0; n_states];
        for k in 0..self.n_jumps() {
            time[self.states[k]] += self.times[k + 1] - self.times[k];
        }
        let total: f64 = time.iter().sum();
        if total > 0.0 {
            for t in &mut time {
                *t /= total;
            }
        }
        time
    }
}

fn step(q: &RateMatrix, state: usize, rng: &mut ChaCha12Rng) -> (f64, usize) {
    let exit = q.exit_rate(state);
    let u: f64 = rng.sample(Open01);
    let dt = -u.ln() / exit;
    let draw = rng.random::<f64>() * exit;
    let mut acc = 0.0;
    let mut fallback = state;
    for j in 0..q.n() {
        if j == state {
            continue;
        }
        let r = q.entry(state, j);
        if r > 0.0 {
            fallback = j;
            acc += r;
            if draw < acc {
                return (dt, j);
            }
        }
    }
    // cumulative rounding can leave `draw` a hair above the final sum
    (dt, fallback)
}

/// Simulates `n_jumps` jumps of a valid irreducible chain from `start`.
pub fn simulate_path(
    model: &ChainModel,
    start: usize,
    n_jumps: u64,
    seed: u64,
) -> Result<Trajectory> {
    ensure_valid_irreducible(model)?;
    if start >= model.n() {
        return Err(Error::InvalidModel(format!(
            "start state {start} out of range for {} states",
            model.n()
        )));
    }
    if n_jumps == 0 {
        return Err(Error::InvalidModel("n_jumps must be at least 1".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(n_jumps as usize + 1);
    let mut times = Vec::with_capacity(n_jumps as usize + 1);
    let mut state = start;
    let mut t = 0.0;
    states.push(state);
    times.push(t);
    for _ in 0..n_jumps {
        let (dt, next) = step(model.rates(), state, &mut rng);
        t += dt;
        state = next;
        states.push(state);
        times.push(t);
    }
    Ok(Trajectory { seed, states, times })
}

/// Long-run occupancy estimate with batch-means standard errors.
#[derive(Debug, Clone)]
pub struct OccupancyEstimate {
    pub estimates: Vec<Estimate>,
    pub n_jumps: u64,
    pub total_time: f64,
}

impl OccupancyEstimate {
    /// The overall occupancy fractions as a stationary result with simulated
    /// provenance.
    pub fn stationary(&self) -> Result<StationaryResult> {
        let mut p: Vec<f64> = self.estimates.iter().map(|e| e.mean).collect();
        let sum: f64 = p.iter().sum();
        if sum > 0.0 {
            for x in &mut p {
                *x /= sum;
            }
        }
        StationaryResult::new(p, Method::Simulated)
    }
}

/// Estimates the stationary distribution as long-run occupancy fractions of a
/// single path of `n_jumps` jumps, with standard errors from
/// [`OCCUPANCY_BATCHES`] equal-jump-count batches.
pub fn empirical_stationary(
    model: &ChainModel,
    start: usize,
    n_jumps: u64,
    seed: u64,
) -> Result<OccupancyEstimate> {
    ensure_valid_irreducible(model)?;
    if start >= model.n() {
        return Err(Error::InvalidModel(format!(
            "start state {start} out of range for {} states",
            model.n()
        )));
    }
    let n = model.n();
    let batches = OCCUPANCY_BATCHES.min(n_jumps.max(1));
    let per_batch = (n_jumps / batches).max(1);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut state = start;
    let mut total = vec![0.0; n];
    let mut total_time = 0.0;
    let mut fractions = vec![Vec::with_capacity(batches as usize); n];
    let mut jumps_done = 0u64;
    for _ in 0..batches {
        let mut batch = vec![0.0; n];
        let mut batch_time = 0.0;
        let end = (jumps_done + per_batch).min(n_jumps);
        while jumps_done < end {
            let (dt, next) = step(model.rates(), state, &mut rng);
            batch[state] += dt;
            batch_time += dt;
            state = next;
            jumps_done += 1;
        }
        if batch_time > 0.0 {
            for i in 0..n {
                total[i] += batch[i];
                fractions[i].push(batch[i] / batch_time);
            }
            total_time += batch_time;
        }
    }
    let estimates = (0..n)
        .map(|i| Estimate {
            mean: if total_time > 0.0 { total[i] / total_time } else { 0.0 },
            std_error: mean_and_se(&fractions[i]).std_error,
        })
        .collect();
    Ok(OccupancyEstimate { estimates, n_jumps: jumps_done, total_time })
}

/// Empirical excursion statistics of a marked chain: endpoint frequencies and
/// conditional interior occupation times, with standard errors.
#[derive(Debug, Clone)]
pub struct EmpiricalExcursionStats {
    pub n_per_start: u64,
    prob: [[Estimate; 2]; 2],
    occ: [[Vec<Estimate>; 2]; 2],
}

impl EmpiricalExcursionStats {
    /// Estimated probability that an excursion from `from` ends at `to`.
    pub fn probability(&self, from: Mark, to: Mark) -> Estimate {
        self.prob[from.idx()][to.idx()]
    }

    /// Estimated expected time in the interior state at `interior_pos`
    /// during an excursion from `from`, conditioned on ending at `to`.
    pub fn occupation(&self, from: Mark, to: Mark, interior_pos: usize) -> Estimate {
        self.occ[from.idx()][to.idx()][interior_pos]
    }
}

/// Simulates `n_excursions` excursions from each marked state, classifies
/// them by endpoint, and accumulates interior occupation times per endpoint
/// class. Excursions from the two marks run on separate ChaCha streams.
pub fn empirical_excursion_stats(
    mc: &MarkedChain,
    n_excursions: u64,
    seed: u64,
) -> Result<EmpiricalExcursionStats> {
    let q = mc.model().rates();
    let n = mc.model().n();
    let interior = mc.interior();
    let k = interior.len();
    let mut interior_pos = vec![usize::MAX; n];
    for (pos, &i) in interior.iter().enumerate() {
        interior_pos[i] = pos;
    }

    let mut counts = [[0u64; 2]; 2];
    let mut sums = vec![vec![0.0f64; k]; 4];
    let mut sumsqs = vec![vec![0.0f64; k]; 4];
    let mut this = vec![0.0f64; k];

    for from in Mark::BOTH {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(1 + from.idx() as u64);
        let start = mc.mark_index(from);
        for _ in 0..n_excursions {
            for x in &mut this {
                *x = 0.0;
            }
            let (_, mut state) = step(q, start, &mut rng);
            let mut jumps = 1u64;
            while state != mc.mark_index(Mark::One) && state != mc.mark_index(Mark::Two) {
                let (dt, next) = step(q, state, &mut rng);
                this[interior_pos[state]] += dt;
                state = next;
                jumps += 1;
                if jumps > WATCHDOG_JUMPS {
                    return Err(Error::Watchdog { jumps });
                }
            }
            let to = if state == mc.mark_index(Mark::One) { Mark::One } else { Mark::Two };
            counts[from.idx()][to.idx()] += 1;
            let class = from.idx() * 2 + to.idx();
            for (pos, &x) in this.iter().enumerate() {
                sums[class][pos] += x;
                sumsqs[class][pos] += x * x;
            }
        }
    }

    let nf = n_excursions as f64;
    let mut prob = [[Estimate { mean: 0.0, std_error: 0.0 }; 2]; 2];
    let mut occ: [[Vec<Estimate>; 2]; 2] = Default::default();
    for from in Mark::BOTH {
        for to in Mark::BOTH {
            let c = counts[from.idx()][to.idx()];
            let p = c as f64 / nf;
            prob[from.idx()][to.idx()] = Estimate {
                mean: p,
                std_error: (p * (1.0 - p) / nf).sqrt(),
            };
            let class = from.idx() * 2 + to.idx();
            let mut row = Vec::with_capacity(k);
            for pos in 0..k {
                if c == 0 {
                    row.push(Estimate { mean: 0.0, std_error: 0.0 });
                } else {
                    let mean = sums[class][pos] / c as f64;
                    let var = (sumsqs[class][pos] / c as f64 - mean * mean).max(0.0);
                    row.push(Estimate { mean, std_error: (var / c as f64).sqrt() });
                }
            }
            occ[from.idx()][to.idx()] = row;
        }
    }
    Ok(EmpiricalExcursionStats { n_per_start: n_excursions, prob, occ })
}

/// Per-cycle statistics of the glued chain between renewals (entries into
/// glued state 1 with state 2 visited more recently).
#[derive(Debug, Clone, PartialEq)]
pub struct CycleStats {
    /// Number of excursions from state 1 back to state 1 through chain A.
    pub returns_one_a: u64,
    pub returns_one_b: u64,
    /// Number of excursions from state 2 back to state 2 through chain A.
    pub returns_two_a: u64,
    pub returns_two_b: u64,
    /// Total cycle duration.
    pub length: f64,
    /// Time spent in each glued state during the cycle.
    pub occupation: Vec<f64>,
}

impl CycleStats {
    pub fn returns_one_total(&self) -> u64 {
        self.returns_one_a + self.returns_one_b
    }

    pub fn returns_two_total(&self) -> u64 {
        self.returns_two_a + self.returns_two_b
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Origin {
    MarkOne,
    MarkTwo,
    InteriorA,
    InteriorB,
}

/// Harvests `n_cycles` regenerative cycles from a two-state glued chain. The
/// initial incomplete cycle before the first renewal is discarded. Excursions
/// are attributed to their source chain by the first jump; a direct jump
/// between the glued states is attributed at random, proportionally to each
/// source's rate on that edge.
pub fn regenerative_cycles(
    glued: &GluedChain,
    n_cycles: u64,
    seed: u64,
) -> Result<Vec<CycleStats>> {
    if glued.pairs.len() != 2 {
        return Err(Error::InvalidGlueSpec(
            "regenerative cycles need a two-state glue".into(),
        ));
    }
    ensure_valid_irreducible(&glued.model)?;
    let shared = glued
        .shared
        .ok_or_else(|| Error::InvalidGlueSpec("glued chain lacks shared-edge rates".into()))?;
    let n = glued.model.n();
    let marks = glued.glued_indices();
    let (g1, g2) = (marks[0], marks[1]);

    let mut origin = vec![Origin::InteriorA; n];
    for (j, &g) in glued.map_b.iter().enumerate() {
        if !glued.pairs.iter().any(|p| p.b == j) {
            origin[g] = Origin::InteriorB;
        }
    }
    origin[g1] = Origin::MarkOne;
    origin[g2] = Origin::MarkTwo;

    let q = glued.model.rates();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut cycles = Vec::with_capacity(n_cycles as usize);
    let mut collecting = false;
    let mut current = CycleStats {
        returns_one_a: 0,
        returns_one_b: 0,
        returns_two_a: 0,
        returns_two_b: 0,
        length: 0.0,
        occupation: vec![0.0; n],
    };
    let mut state = g1;

    while (cycles.len() as u64) < n_cycles {
        let from = if state == g1 { Mark::One } else { Mark::Two };
        // holding time at the marked excursion start
        let (dt, mut here) = step(q, state, &mut rng);
        if collecting {
            current.occupation[state] += dt;
            current.length += dt;
        }
        // attribute the excursion to a source chain by its first jump
        let via_a = match origin[here] {
            Origin::InteriorA => true,
            Origin::InteriorB => false,
            Origin::MarkOne | Origin::MarkTwo => {
                let (ra, rb) = match from {
                    Mark::One => (shared.a_one_to_two, shared.b_one_to_two),
                    Mark::Two => (shared.a_two_to_one, shared.b_two_to_one),
                };
                rng.random::<f64>() * (ra + rb) < ra
            }
        };
        let mut jumps = 1u64;
        while here != g1 && here != g2 {
            let (dt, next) = step(q, here, &mut rng);
            if collecting {
                current.occupation[here] += dt;
                current.length += dt;
            }
            here = next;
            jumps += 1;
            if jumps > WATCHDOG_JUMPS {
                return Err(Error::Watchdog { jumps });
            }
        }
        let to = if here == g1 { Mark::One } else { Mark::Two };
        match (from, to) {
            (Mark::One, Mark::One) => {
                if collecting {
                    if via_a {
                        current.returns_one_a += 1;
                    } else {
                        current.returns_one_b += 1;
                    }
                }
            }
            (Mark::Two, Mark::Two) => {
                if collecting {
                    if via_a {
                        current.returns_two_a += 1;
                    } else {
                        current.returns_two_b += 1;
                    }
                }
            }
            (Mark::One, Mark::Two) => {}
            (Mark::Two, Mark::One) => {
                // renewal: entered state 1 with state 2 visited more recently
                if collecting {
                    cycles.push(std::mem::replace(
                        &mut current,
                        CycleStats {
                            returns_one_a: 0,
                            returns_one_b: 0,
                            returns_two_a: 0,
                            returns_two_b: 0,
                            length: 0.0,
                            occupation: vec![0.0; n],
                        },
                    ));
                } else {
                    collecting = true;
                }
            }
        }
        state = here;
    }
    Ok(cycles)
}

/// Ratio estimator of the stationary distribution from regenerative cycles:
/// mean occupation over mean cycle length per state, with the standard error
/// of the ratio estimator.
pub fn stationary_from_cycles(cycles: &[CycleStats], n_states: usize) -> Vec<Estimate> {
    let n = cycles.len();
    if n == 0 {
        return vec![Estimate { mean: 0.0, std_error: 0.0 }; n_states];
    }
    let mean_len = cycles.iter().map(|c| c.length).sum::<f64>() / n as f64;
    (0..n_states)
        .map(|i| {
            let mean_occ = cycles.iter().map(|c| c.occupation[i]).sum::<f64>() / n as f64;
            let ratio = mean_occ / mean_len;
            let msq = cycles
                .iter()
                .map(|c| (c.occupation[i] - ratio * c.length).powi(2))
                .sum::<f64>()
                / n as f64;
            Estimate {
                mean: ratio,
                std_error: msq.sqrt() / (mean_len * (n as f64).sqrt()),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ChainModel;
    use crate::compose::{glue_two, GlueSpec};

    fn symmetric() -> ChainModel {
        ChainModel::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap()
    }

    #[test]
    fn trajectories_replay_exactly_for_a_fixed_seed() {
        let m = symmetric();
        let a = simulate_path(&m, 0, 500, 42).unwrap();
        let b = simulate_path(&m, 0, 500, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_path(&m, 0, 500, 43).unwrap();
        assert_ne!(a.times, c.times);
    }

    #[test]
    fn trajectory_invariants_hold() {
        let m = symmetric();
        let t = simulate_path(&m, 1, 200, 7).unwrap();
        assert_eq!(t.states.len(), 201);
        for k in 0..t.n_jumps() {
            assert_ne!(t.states[k], t.states[k + 1]);
            assert!(t.times[k + 1] > t.times[k]);
        }
    }

    #[test]
    fn symmetric_two_state_occupancy_is_half() {
        let m = symmetric();
        let est = empirical_stationary(&m, 0, 200_000, 11).unwrap();
        for e in &est.estimates {
            assert!(
                (e.mean - 0.5).abs() <= 3.0 * e.std_error,
                "mean {} se {}",
                e.mean,
                e.std_error
            );
        }
        let pi = est.stationary().unwrap();
        assert_eq!(pi.method(), Method::Simulated);
    }

    #[test]
    fn forced_excursion_type_is_estimated_exactly() {
        let b = ChainModel::from_rows(&[vec![-2.0, 2.0], vec![3.0, -3.0]]).unwrap();
        let mc = MarkedChain::new(b, 0, 1).unwrap();
        let stats = empirical_excursion_stats(&mc, 2_000, 5).unwrap();
        assert_eq!(stats.probability(Mark::One, Mark::Two).mean, 1.0);
        assert_eq!(stats.probability(Mark::Two, Mark::One).mean, 1.0);
        assert_eq!(stats.probability(Mark::One, Mark::One).std_error, 0.0);
    }

    #[test]
    fn regenerative_cycles_have_consistent_shape() {
        let a = ChainModel::from_rows(&[
            vec![-6.0, 4.0, 2.0],
            vec![1.0, -2.0, 1.0],
            vec![2.0, 0.0, -2.0],
        ])
        .unwrap();
        let b = ChainModel::new(
            crate::chain::RateMatrix::from_rows(&[vec![-2.0, 2.0], vec![3.0, -3.0]]).unwrap(),
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        let glued = glue_two(&a, &b, &GlueSpec::two((1, 0), (2, 1))).unwrap();
        let cycles = regenerative_cycles(&glued, 300, 19).unwrap();
        assert_eq!(cycles.len(), 300);
        for c in &cycles {
            let total: f64 = c.occupation.iter().sum();
            assert!((total - c.length).abs() <= 1e-12 * c.length.max(1.0));
            assert!(c.length > 0.0);
        }
    }

    #[test]
    fn standard_errors_shrink_like_root_n() {
        let b = ChainModel::from_rows(&[
            vec![-3.0, 1.0, 2.0],
            vec![2.0, -4.0, 2.0],
            vec![1.0, 3.0, -4.0],
        ])
        .unwrap();
        let mc = MarkedChain::new(b, 0, 1).unwrap();
        let small = empirical_excursion_stats(&mc, 4_000, 23).unwrap();
        let large = empirical_excursion_stats(&mc, 16_000, 23).unwrap();
        let se_small = small.occupation(Mark::One, Mark::Two, 0).std_error;
        let se_large = large.occupation(Mark::One, Mark::Two, 0).std_error;
        let ratio = se_large / se_small;
        assert!(
            (0.4..=0.6).contains(&ratio),
            "se ratio {ratio} not within 20% of 1/2"
        );
    }
}
