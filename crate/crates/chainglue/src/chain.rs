//! Rate matrices, generator validation, and the direct stationary solver.
//!
//! A transition rate matrix (generator) `Q` has nonnegative off-diagonal
//! entries and rows that sum to zero; the diagonal is the negative total exit
//! rate of the state. For an irreducible generator the stationary distribution
//! is the unique probability vector `pi` with `pi^T Q = 0`, and all of its
//! entries are strictly positive.

use nalgebra::linalg::LU;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative tolerance on generator row sums. Rows within this tolerance are
/// re-symmetrized by resetting the diagonal to the exact negative off-diagonal
/// sum, so downstream solves see exact generators.
pub const ROW_SUM_RTOL: f64 = 1e-12;

/// Relative tolerance on the stationary residual `‖pi^T Q‖_inf` for
/// non-simulated solves.
pub const RESIDUAL_RTOL: f64 = 1e-10;

/// Absolute tolerance on probability-vector normalization.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Square matrix of transition rates (1/time units).
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    q: DMatrix<f64>,
}

impl RateMatrix {
    /// Builds a rate matrix from dense rows. Only squareness is enforced here;
    /// generator invariants are reported by [`validate`] so that defective
    /// inputs can still be diagnosed. Rows that do satisfy the invariants
    /// within tolerance get their diagonal snapped to the exact negative
    /// off-diagonal sum.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidModel("rate matrix is empty".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::InvalidModel(format!(
                "rate matrix is not square: row {bad} has {} entries, expected {n}",
                rows[bad].len()
            )));
        }
        let q = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Ok(Self::from_matrix(q))
    }

    /// Builds a rate matrix from an owned square matrix, snapping diagonals of
    /// in-tolerance rows.
    pub fn from_matrix(mut q: DMatrix<f64>) -> Self {
        debug_assert_eq!(q.nrows(), q.ncols());
        let scale = q.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let n = q.nrows();
        for i in 0..n {
            let mut off = 0.0;
            let mut clean = true;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let r = q[(i, j)];
                if !r.is_finite() || r < 0.0 {
                    clean = false;
                }
                off += r;
            }
            let sum = off + q[(i, i)];
            if clean && sum.abs() <= ROW_SUM_RTOL * scale.max(1.0) {
                q[(i, i)] = -off;
            }
        }
        Self { q }
    }

    /// Number of states.
    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    /// Transition rate from `i` to `j` (diagonal entries included).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.q[(i, j)]
    }

    /// Total rate of leaving state `i`, i.e. `-Q_ii` for a valid generator.
    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.q[(i, i)]
    }

    /// Largest absolute entry; the scale used by relative tolerances.
    pub fn max_abs(&self) -> f64 {
        self.q.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.q
    }
}

/// A rate matrix together with ordered, distinct state labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel {
    rates: RateMatrix,
    labels: Vec<String>,
}

impl ChainModel {
    pub fn new(rates: RateMatrix, labels: Vec<String>) -> Result<Self> {
        if labels.len() != rates.n() {
            return Err(Error::InvalidModel(format!(
                "{} labels for {} states",
                labels.len(),
                rates.n()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidModel(format!("duplicate state label {l:?}")));
            }
        }
        Ok(Self { rates, labels })
    }

    /// Convenience constructor labelling states `"0", "1", ...`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rates = RateMatrix::from_rows(rows)?;
        let labels = (0..rates.n()).map(|i| i.to_string()).collect();
        Ok(Self { rates, labels })
    }

    pub fn n(&self) -> usize {
        self.rates.n()
    }

    pub fn rates(&self) -> &RateMatrix {
        &self.rates
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    /// Index of the state with the given label.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// One violated invariant found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TooFewStates { n: usize },
    NegativeRate { from: String, to: String, rate: f64 },
    RowSumNonzero { state: String, sum: f64 },
    Reducible { components: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::TooFewStates { n } => {
                write!(f, "chain has {n} state(s); at least 2 are required")
            }
            Violation::NegativeRate { from, to, rate } => {
                write!(f, "negative rate {rate} from state {from:?} to state {to:?}")
            }
            Violation::RowSumNonzero { state, sum } => {
                write!(f, "row of state {state:?} sums to {sum}, expected 0")
            }
            Violation::Reducible { components } => {
                write!(f, "chain is reducible: {components} strongly connected components")
            }
        }
    }
}

/// Outcome of [`validate`]: every violated invariant, possibly none.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every generator invariant and reports all violations. This is a
/// diagnostic: it never fails, it only describes. Operations that need a valid
/// model reject invalid input instead.
pub fn validate(model: &ChainModel) -> ValidationReport {
    let mut violations = Vec::new();
    let q = model.rates();
    let n = q.n();
    if n < 2 {
        violations.push(Violation::TooFewStates { n });
    }
    let scale = q.max_abs().max(1.0);
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            let r = q.entry(i, j);
            sum += r;
            if i != j && !(r >= 0.0) {
                violations.push(Violation::NegativeRate {
                    from: model.label(i).to_string(),
                    to: model.label(j).to_string(),
                    rate: r,
                });
            }
        }
        if !(sum.abs() <= ROW_SUM_RTOL * scale) {
            violations.push(Violation::RowSumNonzero {
                state: model.label(i).to_string(),
                sum,
            });
        }
    }
    let components = scc_count(&positive_adjacency(q));
    if components != 1 {
        violations.push(Violation::Reducible { components });
    }
    ValidationReport { violations }
}

/// True iff the digraph with an edge `i -> j` whenever `Q_ij > 0` (for
/// `i != j`) is strongly connected.
pub fn is_irreducible(model: &ChainModel) -> bool {
    scc_count(&positive_adjacency(model.rates())) == 1
}

/// Rejects models that fail validation, mapping pure reducibility to
/// [`Error::ReducibleChain`] and anything else to [`Error::InvalidModel`].
pub(crate) fn ensure_valid_irreducible(model: &ChainModel) -> Result<()> {
    let report = validate(model);
    if report.is_empty() {
        return Ok(());
    }
    if report
        .violations
        .iter()
        .all(|v| matches!(v, Violation::Reducible { .. }))
    {
        return Err(Error::ReducibleChain);
    }
    Err(Error::InvalidModel(report.to_string()))
}

fn positive_adjacency(q: &RateMatrix) -> Vec<Vec<usize>> {
    let n = q.n();
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && q.entry(i, j) > 0.0)
                .collect()
        })
        .collect()
}

/// Number of strongly connected components (iterative Kosaraju).
fn scc_count(adj: &[Vec<usize>]) -> usize {
    let n = adj.len();
    let mut radj = vec![Vec::new(); n];
    for (u, outs) in adj.iter().enumerate() {
        for &v in outs {
            radj[v].push(u);
        }
    }
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        stack.push((s, 0));
        while let Some(top) = stack.last_mut() {
            let (u, i) = *top;
            if i < adj[u].len() {
                top.1 += 1;
                let v = adj[u][i];
                if !seen[v] {
                    seen[v] = true;
                    stack.push((v, 0));
                }
            } else {
                order.push(u);
                stack.pop();
            }
        }
    }
    let mut component = vec![usize::MAX; n];
    let mut count = 0;
    for &s in order.iter().rev() {
        if component[s] != usize::MAX {
            continue;
        }
        let mut frontier = vec![s];
        component[s] = count;
        while let Some(u) = frontier.pop() {
            for &v in &radj[u] {
                if component[v] == usize::MAX {
                    component[v] = count;
                    frontier.push(v);
                }
            }
        }
        count += 1;
    }
    count
}

/// How a stationary distribution was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Direct,
    GluedOne,
    GluedTwo,
    Parallel,
    Simulated,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::GluedOne => "glued_one",
            Method::GluedTwo => "glued_two",
            Method::Parallel => "parallel",
            Method::Simulated => "simulated",
        }
    }
}

/// A probability vector with provenance. Entries of non-simulated results are
/// strictly positive and sum to one within [`PROB_SUM_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryResult {
    probabilities: Vec<f64>,
    method: Method,
}

impl StationaryResult {
    pub fn new(probabilities: Vec<f64>, method: Method) -> Result<Self> {
        let sum: f64 = probabilities.iter().sum();
        if !probabilities.iter().all(|p| p.is_finite()) || !sum.is_finite() {
            return Err(Error::NumericalDrift("non-finite stationary entries".into()));
        }
        for (i, &p) in probabilities.iter().enumerate() {
            let ok = if method == Method::Simulated { p >= 0.0 } else { p > 0.0 };
            if !ok {
                return Err(Error::NumericalDrift(format!(
                    "stationary entry {i} is {p}; must be positive"
                )));
            }
        }
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::NumericalDrift(format!(
                "stationary entries sum to {sum}, expected 1"
            )));
        }
        Ok(Self { probabilities, method })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

impl std::ops::Index<usize> for StationaryResult {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.probabilities[i]
    }
}

/// `‖pi^T Q‖_inf`, the stationary residual of `pi` for this model.
pub fn residual_inf_norm(pi: &[f64], model: &ChainModel) -> f64 {
    let q = model.rates();
    let n = q.n();
    let mut worst = 0.0f64;
    for j in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            acc += pi[i] * q.entry(i, j);
        }
        worst = worst.max(acc.abs());
    }
    worst
}

/// Solves `pi^T Q = 0` for a valid irreducible model by replacing one
/// equation of the transposed system with the all-ones normalization row and
/// running a dense LU factorization with partial pivoting.
pub fn stationary_direct(model: &ChainModel) -> Result<StationaryResult> {
    ensure_valid_irreducible(model)?;
    let n = model.n();
    let mut m = model.rates().as_matrix().transpose();
    let mut rhs = DMatrix::zeros(n, 1);
    for j in 0..n {
        m[(n - 1, j)] = 1.0;
    }
    rhs[(n - 1, 0)] = 1.0;

    let lu = LU::new(m);
    let solution = lu.solve(&rhs).ok_or(Error::SingularSystem)?;
    let mut pi: Vec<f64> = solution.column(0).iter().copied().collect();
    let sum: f64 = pi.iter().sum();
    if !sum.is_finite() || sum <= 0.0 {
        return Err(Error::SingularSystem);
    }
    for p in &mut pi {
        *p /= sum;
    }

    let residual = residual_inf_norm(&pi, model);
    if residual > RESIDUAL_RTOL * model.rates().max_abs() {
        return Err(Error::NumericalDrift(format!(
            "stationary residual {residual:e} exceeds tolerance"
        )));
    }
    StationaryResult::new(pi, Method::Direct)
}
