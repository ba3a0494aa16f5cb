//! Excursion quantities of a single chain relative to two marked states.
//!
//! An excursion starts when the chain leaves marked state 1 or 2 and ends on
//! the first entry into either marked state (a direct jump between the marked
//! states counts). All quantities here come from linear systems over a single
//! matrix: the generator with the two marked columns zeroed except for their
//! diagonal entries. That matrix has full rank for every valid irreducible
//! chain, so one LU factorization serves every right-hand side.
//!
//! The per-chain outputs are bundled in an [`ExcursionProfile`]:
//!
//! * first-passage probabilities `p` — where an excursion from each state ends,
//! * crossing intensities `q` — exit rate times excursion probability,
//! * conditional occupation expectations — expected time in each interior
//!   state during an excursion, conditioned on its endpoint,
//! * weight vectors — intensity-weighted occupation expectations; the glued
//!   stationary mass of an interior state is a combination of these weights
//!   scaled by the stationary mass of the two marked states.

use nalgebra::linalg::LU;
use nalgebra::{DMatrix, Dyn};

use crate::chain::{ensure_valid_irreducible, ChainModel};
use crate::error::{Error, Result};

/// Allowed drift of solved probabilities outside `[0, 1]`; values inside the
/// band are clamped, values beyond it fail loudly.
pub const PROB_DRIFT_TOL: f64 = 1e-10;

/// Relative threshold for deciding that a solved occupation mass is zero.
pub const ZERO_MASS_RTOL: f64 = 1e-12;

const fn mark_name(m: Mark) -> &'static str {
    match m {
        Mark::One => "1",
        Mark::Two => "2",
    }
}

/// One of the two marked (to-be-glued) states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    One,
    Two,
}

impl Mark {
    pub const BOTH: [Mark; 2] = [Mark::One, Mark::Two];

    pub fn other(self) -> Mark {
        match self {
            Mark::One => Mark::Two,
            Mark::Two => Mark::One,
        }
    }

    pub(crate) fn idx(self) -> usize {
        match self {
            Mark::One => 0,
            Mark::Two => 1,
        }
    }
}

/// An irreducible chain with two distinct marked states.
#[derive(Debug, Clone)]
pub struct MarkedChain {
    model: ChainModel,
    s1: usize,
    s2: usize,
    interior: Vec<usize>,
}

/// First-passage probabilities toward each marked state, for every state of
/// the chain. `to_one[i]` is the probability that an excursion (or passage)
/// from state `i` reaches mark 1 strictly before mark 2.
#[derive(Debug, Clone)]
pub struct ExcursionProbabilities {
    s1: usize,
    s2: usize,
    to_one: Vec<f64>,
    to_two: Vec<f64>,
}

impl ExcursionProbabilities {
    /// Full probability vector toward the given mark.
    pub fn toward(&self, target: Mark) -> &[f64] {
        match target {
            Mark::One => &self.to_one,
            Mark::Two => &self.to_two,
        }
    }

    /// Probability that an excursion from one marked state ends at the other
    /// (or returns), `p_{from -> to}`.
    pub fn between(&self, from: Mark, to: Mark) -> f64 {
        let i = match from {
            Mark::One => self.s1,
            Mark::Two => self.s2,
        };
        self.toward(to)[i]
    }
}

/// Crossing intensities `q_{from -> to}`: total exit rate of the marked state
/// times the corresponding excursion probability.
#[derive(Debug, Clone, Copy)]
pub struct Intensities {
    q: [[f64; 2]; 2],
}

impl Intensities {
    pub fn between(&self, from: Mark, to: Mark) -> f64 {
        self.q[from.idx()][to.idx()]
    }

    /// Intensity of leaving `from` on an excursion that ends at the other
    /// mark; positive for every irreducible chain.
    pub fn crossing(&self, from: Mark) -> f64 {
        self.between(from, from.other())
    }

    /// Intensity of leaving `from` on an excursion that returns to it.
    pub fn returning(&self, from: Mark) -> f64 {
        self.between(from, from)
    }
}

/// Expected time spent in each interior state on an excursion from a marked
/// state, conditioned on the excursion's endpoint. Indexed by the position of
/// the interior state in [`MarkedChain::interior`].
#[derive(Debug, Clone)]
pub struct OccupationTable {
    len: usize,
    e: [[Vec<f64>; 2]; 2],
}

impl OccupationTable {
    pub fn get(&self, from: Mark, to: Mark, interior_pos: usize) -> f64 {
        self.e[from.idx()][to.idx()][interior_pos]
    }

    /// Number of interior states covered by the table.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Intensity-weighted occupation expectations over the interior states.
/// `from_one[k]` multiplies the stationary mass of mark 1 in the glued
/// stationary distribution, `from_two[k]` the mass of mark 2.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVectors {
    pub from_one: Vec<f64>,
    pub from_two: Vec<f64>,
}

impl WeightVectors {
    pub fn len(&self) -> usize {
        self.from_one.len()
    }

    pub fn is_empty(&self) -> bool {
        self.from_one.is_empty()
    }
}

/// Everything the gluing formulas need to know about one chain.
#[derive(Debug, Clone)]
pub struct ExcursionProfile {
    pub n: usize,
    pub s1: usize,
    pub s2: usize,
    pub interior: Vec<usize>,
    pub probabilities: ExcursionProbabilities,
    pub intensities: Intensities,
    pub occupations: OccupationTable,
    pub weights: WeightVectors,
}

type Factor = LU<f64, Dyn, Dyn>;

impl MarkedChain {
    /// Marks two distinct states of a valid irreducible model.
    pub fn new(model: ChainModel, s1: usize, s2: usize) -> Result<Self> {
        let n = model.n();
        if s1 >= n || s2 >= n {
            return Err(Error::InvalidGlueSpec(format!(
                "marked state out of range: {s1}, {s2} with {n} states"
            )));
        }
        if s1 == s2 {
            return Err(Error::InvalidGlueSpec(format!(
                "marked states must be distinct, both are {s1}"
            )));
        }
        ensure_valid_irreducible(&model)?;
        let interior = (0..n).filter(|&i| i != s1 && i != s2).collect();
        Ok(Self { model, s1, s2, interior })
    }

    pub fn model(&self) -> &ChainModel {
        &self.model
    }

    pub fn mark_index(&self, m: Mark) -> usize {
        match m {
            Mark::One => self.s1,
            Mark::Two => self.s2,
        }
    }

    /// Interior states (everything but the two marks), ascending.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// The generator with both marked columns zeroed except their diagonal
    /// entries: the left-hand side of every first-passage and occupation
    /// system below. Errors if the matrix lost full rank, which cannot happen
    /// for valid irreducible input.
    pub fn hitting_matrix(&self) -> Result<DMatrix<f64>> {
        let m = self.build_hitting_matrix();
        if !LU::new(m.clone()).is_invertible() {
            return Err(Error::SingularHittingMatrix);
        }
        Ok(m)
    }

    fn build_hitting_matrix(&self) -> DMatrix<f64> {
        let q = self.model.rates().as_matrix();
        let n = self.model.n();
        DMatrix::from_fn(n, n, |i, j| {
            if (j == self.s1 || j == self.s2) && i != j {
                0.0
            } else {
                q[(i, j)]
            }
        })
    }

    fn factor(&self) -> Result<Factor> {
        let lu = LU::new(self.build_hitting_matrix());
        if !lu.is_invertible() {
            return Err(Error::SingularHittingMatrix);
        }
        Ok(lu)
    }

    /// Solves the first-passage system toward `target`: for every state `i`,
    /// the probability that the chain started (or restarted) at `i` enters
    /// `target` strictly before the other mark.
    pub fn hitting_probabilities(&self, target: Mark) -> Result<Vec<f64>> {
        self.hitting_probabilities_with(&self.factor()?, target)
    }

    fn hitting_probabilities_with(&self, lu: &Factor, target: Mark) -> Result<Vec<f64>> {
        let n = self.model.n();
        let t = self.mark_index(target);
        let q = self.model.rates().as_matrix();
        let mut rhs = DMatrix::zeros(n, 1);
        for i in 0..n {
            if i != t {
                rhs[(i, 0)] = -q[(i, t)];
            }
        }
        let sol = lu.solve(&rhs).ok_or(Error::SingularHittingMatrix)?;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(clamp_probability(sol[(i, 0)], || {
                format!(
                    "first-passage probability from state {i} toward mark {}",
                    mark_name(target)
                )
            })?);
        }
        Ok(out)
    }

    /// First-passage probabilities toward both marks. One linear solve; the
    /// second family is the complement `p_to_other = 1 - p_to_one`.
    pub fn excursion_probabilities(&self) -> Result<ExcursionProbabilities> {
        self.excursion_probabilities_with(&self.factor()?)
    }

    fn excursion_probabilities_with(&self, lu: &Factor) -> Result<ExcursionProbabilities> {
        let to_one = self.hitting_probabilities_with(lu, Mark::One)?;
        let to_two = to_one.iter().map(|p| 1.0 - p).collect();
        Ok(ExcursionProbabilities {
            s1: self.s1,
            s2: self.s2,
            to_one,
            to_two,
        })
    }

    /// Conditional occupation expectations for every interior state and both
    /// endpoint marks. All right-hand sides for a fixed endpoint are batched
    /// into one multi-column solve against the shared factorization.
    pub fn occupation_expectations(&self, p: &ExcursionProbabilities) -> Result<OccupationTable> {
        self.occupation_expectations_with(&self.factor()?, p)
    }

    fn occupation_expectations_with(
        &self,
        lu: &Factor,
        p: &ExcursionProbabilities,
    ) -> Result<OccupationTable> {
        let n = self.model.n();
        let k = self.interior.len();
        let mut table = OccupationTable {
            len: k,
            e: [
                [vec![0.0; k], vec![0.0; k]],
                [vec![0.0; k], vec![0.0; k]],
            ],
        };
        if k == 0 {
            return Ok(table);
        }
        for target in Mark::BOTH {
            let toward = p.toward(target);
            let mut rhs = DMatrix::zeros(n, k);
            for (col, &j) in self.interior.iter().enumerate() {
                rhs[(j, col)] = -toward[j];
            }
            let sol = lu.solve(&rhs).ok_or(Error::SingularHittingMatrix)?;
            for (col, &j) in self.interior.iter().enumerate() {
                let scale = sol.column(col).iter().fold(0.0f64, |m, x| m.max(x.abs()));
                let zero_band = ZERO_MASS_RTOL * scale;
                for from in Mark::BOTH {
                    let mass = sol[(self.mark_index(from), col)];
                    let prob = p.between(from, target);
                    // a conditional expectation is zero by definition when the
                    // conditioning excursion has zero probability, whatever
                    // dust the solve left in the mass
                    let value = if prob <= 0.0 || mass.abs() <= zero_band {
                        0.0
                    } else if mass < 0.0 {
                        return Err(Error::NumericalDrift(format!(
                            "occupation mass of interior state {j} is {mass}; must be nonnegative"
                        )));
                    } else {
                        mass / prob
                    };
                    table.e[from.idx()][target.idx()][col] = value;
                }
            }
        }
        Ok(table)
    }

    /// Crossing intensities: total exit rate of each marked state times the
    /// excursion probability toward each endpoint.
    pub fn intensities(&self, p: &ExcursionProbabilities) -> Intensities {
        let mut q = [[0.0; 2]; 2];
        for from in Mark::BOTH {
            let exit = self.model.rates().exit_rate(self.mark_index(from));
            for to in Mark::BOTH {
                q[from.idx()][to.idx()] = exit * p.between(from, to);
            }
        }
        Intensities { q }
    }

    /// Weight vectors over the interior states: intensity-weighted occupation
    /// expectations of excursions launched from each mark.
    pub fn weight_vectors(&self, q: &Intensities, occ: &OccupationTable) -> WeightVectors {
        let k = self.interior.len();
        let mut from_one = Vec::with_capacity(k);
        let mut from_two = Vec::with_capacity(k);
        for pos in 0..k {
            from_one.push(
                q.returning(Mark::One) * occ.get(Mark::One, Mark::One, pos)
                    + q.crossing(Mark::One) * occ.get(Mark::One, Mark::Two, pos),
            );
            from_two.push(
                q.returning(Mark::Two) * occ.get(Mark::Two, Mark::Two, pos)
                    + q.crossing(Mark::Two) * occ.get(Mark::Two, Mark::One, pos),
            );
        }
        WeightVectors { from_one, from_two }
    }

    /// Runs the whole per-chain pipeline on a single factorization:
    /// probabilities, occupation expectations, intensities, weights.
    pub fn profile(&self) -> Result<ExcursionProfile> {
        let lu = self.factor()?;
        let probabilities = self.excursion_probabilities_with(&lu)?;
        let occupations = self.occupation_expectations_with(&lu, &probabilities)?;
        let intensities = self.intensities(&probabilities);
        let weights = self.weight_vectors(&intensities, &occupations);
        Ok(ExcursionProfile {
            n: self.model.n(),
            s1: self.s1,
            s2: self.s2,
            interior: self.interior.clone(),
            probabilities,
            intensities,
            occupations,
            weights,
        })
    }
}

fn clamp_probability(x: f64, what: impl Fn() -> String) -> Result<f64> {
    if !x.is_finite() || x < -PROB_DRIFT_TOL || x > 1.0 + PROB_DRIFT_TOL {
        return Err(Error::NumericalDrift(format!(
            "{} is {x}; outside [0, 1] beyond tolerance",
            what()
        )));
    }
    Ok(x.clamp(0.0, 1.0))
}
