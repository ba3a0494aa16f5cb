//! Gluing two chains at one or two shared states, and the stationary
//! distribution of the result.
//!
//! Gluing identifies one or two states of chain A with states of chain B and
//! keeps every transition of both chains; rates between the two shared states
//! add up. The glued state space is laid out as chain A's states in their
//! original order followed by chain B's non-glued states in ascending order.
//!
//! Routes to the glued stationary distribution:
//!
//! * [`stationary_glue_one`] — closed form for one shared state; the result is
//!   a constant multiple of each source distribution on its own side.
//! * [`stationary_glue_two`] — the excursion-decomposition solution for two
//!   shared states, valid unconditionally, built from the two chains'
//!   [`ExcursionProfile`]s.
//! * [`stationary_parallel`] — closed form available exactly when the two
//!   chains' stationary mass ratios at the glued states coincide
//!   ([`parallel_condition`]); then the glued distribution is parallel to each
//!   source distribution on its side.
//!
//! When the ratios differ, [`weights_from_pi`] recovers the excursion weight
//! vectors from the stationary distributions alone, and [`bounds_report`]
//! checks the sandwich bounds that confine every interior ratio
//! `pi_i / pi^src_i` between the two marked-state ratios.

use nalgebra::DMatrix;

use crate::chain::{
    ensure_valid_irreducible, ChainModel, Method, RateMatrix, StationaryResult,
};
use crate::error::{Error, Result};
use crate::excursion::{ExcursionProfile, Mark, MarkedChain, WeightVectors};

/// Default relative tolerance for the parallel-ratio test, in cross-multiplied
/// form.
pub const PARALLEL_RTOL: f64 = 1e-9;

/// Relative threshold separating "strictly inside" from "equal" in bound
/// checks.
pub const STRICTNESS_RTOL: f64 = 1e-12;

/// Absolute-ish threshold below which a recovered weight counts as zero.
pub const WEIGHT_ZERO_TOL: f64 = 1e-12;

/// One identification `(state of A, state of B)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GluePair {
    pub a: usize,
    pub b: usize,
}

/// One or two identifications defining a gluing, plus optional label
/// overrides for the glued states (they default to the A-side labels).
#[derive(Debug, Clone)]
pub struct GlueSpec {
    pub pairs: Vec<GluePair>,
    pub glued_labels: Option<Vec<String>>,
}

impl GlueSpec {
    pub fn one(a: usize, b: usize) -> Self {
        Self { pairs: vec![GluePair { a, b }], glued_labels: None }
    }

    pub fn two(first: (usize, usize), second: (usize, usize)) -> Self {
        Self {
            pairs: vec![
                GluePair { a: first.0, b: first.1 },
                GluePair { a: second.0, b: second.1 },
            ],
            glued_labels: None,
        }
    }

    pub fn with_glued_labels(mut self, labels: Vec<String>) -> Self {
        self.glued_labels = Some(labels);
        self
    }

    fn expect_pairs(&self, count: usize) -> Result<&[GluePair]> {
        if self.pairs.len() != count {
            return Err(Error::InvalidGlueSpec(format!(
                "expected {count} glue pair(s), got {}",
                self.pairs.len()
            )));
        }
        Ok(&self.pairs)
    }

    /// Chain A with the two glued states marked, in pair order.
    pub fn marked_a(&self, a: &ChainModel) -> Result<MarkedChain> {
        let p = self.expect_pairs(2)?;
        MarkedChain::new(a.clone(), p[0].a, p[1].a)
    }

    /// Chain B with the two glued states marked, in pair order.
    pub fn marked_b(&self, b: &ChainModel) -> Result<MarkedChain> {
        let p = self.expect_pairs(2)?;
        MarkedChain::new(b.clone(), p[0].b, p[1].b)
    }
}

/// Transition rates between the two glued states, kept per source chain so a
/// direct jump between them can be attributed to one chain during simulation.
#[derive(Debug, Clone, Copy)]
pub struct SharedEdgeRates {
    pub a_one_to_two: f64,
    pub b_one_to_two: f64,
    pub a_two_to_one: f64,
    pub b_two_to_one: f64,
}

/// A glued chain with the index maps from each source chain into it.
#[derive(Debug, Clone)]
pub struct GluedChain {
    pub model: ChainModel,
    /// A-state index -> glued index (identity under the default layout).
    pub map_a: Vec<usize>,
    /// B-state index -> glued index.
    pub map_b: Vec<usize>,
    pub pairs: Vec<GluePair>,
    pub shared: Option<SharedEdgeRates>,
}

impl GluedChain {
    /// Glued indices of the shared states, in pair order.
    pub fn glued_indices(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| self.map_a[p.a]).collect()
    }

    /// Interior A states (A indices not part of any pair), ascending.
    pub fn interior_a(&self) -> Vec<usize> {
        (0..self.map_a.len())
            .filter(|i| !self.pairs.iter().any(|p| p.a == *i))
            .collect()
    }

    /// Interior B states (B indices not part of any pair), ascending.
    pub fn interior_b(&self) -> Vec<usize> {
        (0..self.map_b.len())
            .filter(|j| !self.pairs.iter().any(|p| p.b == *j))
            .collect()
    }
}

fn check_pairs(a: &ChainModel, b: &ChainModel, pairs: &[GluePair]) -> Result<()> {
    for p in pairs {
        if p.a >= a.n() || p.b >= b.n() {
            return Err(Error::InvalidGlueSpec(format!(
                "glue pair ({}, {}) out of range for sizes {} and {}",
                p.a,
                p.b,
                a.n(),
                b.n()
            )));
        }
    }
    if pairs.len() == 2 {
        if pairs[0].a == pairs[1].a {
            return Err(Error::InvalidGlueSpec(format!(
                "both pairs name A-state {}",
                pairs[0].a
            )));
        }
        if pairs[0].b == pairs[1].b {
            return Err(Error::InvalidGlueSpec(format!(
                "both pairs name B-state {}",
                pairs[0].b
            )));
        }
    }
    Ok(())
}

fn glued_labels(
    a: &ChainModel,
    b: &ChainModel,
    spec: &GlueSpec,
    pairs: &[GluePair],
) -> Result<Vec<String>> {
    let mut labels: Vec<String> = a.labels().to_vec();
    if let Some(over) = &spec.glued_labels {
        if over.len() != pairs.len() {
            return Err(Error::InvalidGlueSpec(format!(
                "{} override labels for {} glued state(s)",
                over.len(),
                pairs.len()
            )));
        }
        for (p, l) in pairs.iter().zip(over) {
            labels[p.a] = l.clone();
        }
    }
    for j in 0..b.n() {
        if pairs.iter().any(|p| p.b == j) {
            continue;
        }
        labels.push(b.label(j).to_string());
    }
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(Error::InvalidGlueSpec(format!(
                "label {l:?} occurs on both sides of the glue; rename or override"
            )));
        }
    }
    Ok(labels)
}

fn assemble(
    a: &ChainModel,
    b: &ChainModel,
    spec: &GlueSpec,
    pairs: &[GluePair],
) -> Result<GluedChain> {
    check_pairs(a, b, pairs)?;
    ensure_valid_irreducible(a)?;
    ensure_valid_irreducible(b)?;
    let labels = glued_labels(a, b, spec, pairs)?;

    let r = a.n();
    let s = b.n();
    let n = r + s - pairs.len();
    let map_a: Vec<usize> = (0..r).collect();
    let mut map_b = vec![usize::MAX; s];
    for p in pairs {
        map_b[p.b] = p.a;
    }
    let mut next = r;
    for (j, slot) in map_b.iter_mut().enumerate() {
        if *slot == usize::MAX {
            *slot = next;
            next += 1;
        }
        debug_assert!(j < s);
    }

    let mut q = DMatrix::zeros(n, n);
    for i in 0..r {
        for j in 0..r {
            if i != j {
                q[(map_a[i], map_a[j])] += a.rates().entry(i, j);
            }
        }
    }
    for i in 0..s {
        for j in 0..s {
            if i != j {
                q[(map_b[i], map_b[j])] += b.rates().entry(i, j);
            }
        }
    }
    for g in 0..n {
        let off: f64 = (0..n).filter(|&j| j != g).map(|j| q[(g, j)]).sum();
        q[(g, g)] = -off;
    }

    let shared = (pairs.len() == 2).then(|| SharedEdgeRates {
        a_one_to_two: a.rates().entry(pairs[0].a, pairs[1].a),
        b_one_to_two: b.rates().entry(pairs[0].b, pairs[1].b),
        a_two_to_one: a.rates().entry(pairs[1].a, pairs[0].a),
        b_two_to_one: b.rates().entry(pairs[1].b, pairs[0].b),
    });

    let model = ChainModel::new(RateMatrix::from_matrix(q), labels)?;
    Ok(GluedChain {
        model,
        map_a,
        map_b,
        pairs: pairs.to_vec(),
        shared,
    })
}

/// Glues two valid irreducible chains at two pairs of states. The output has
/// `r + s - 2` states; rates between the two shared states are summed, every
/// other rate is copied from its unique source.
pub fn glue_two(a: &ChainModel, b: &ChainModel, spec: &GlueSpec) -> Result<GluedChain> {
    let pairs = spec.expect_pairs(2)?.to_vec();
    assemble(a, b, spec, &pairs)
}

/// Glues two valid irreducible chains at a single shared state. The output has
/// `r + s - 1` states; only the shared state's diagonal mixes both sources.
pub fn glue_one(a: &ChainModel, b: &ChainModel, spec: &GlueSpec) -> Result<GluedChain> {
    let pairs = spec.expect_pairs(1)?.to_vec();
    assemble(a, b, spec, &pairs)
}

fn check_lengths(pi: &StationaryResult, n: usize, side: &str) -> Result<()> {
    if pi.len() != n {
        return Err(Error::InvalidGlueSpec(format!(
            "stationary vector for chain {side} has {} entries, expected {n}",
            pi.len()
        )));
    }
    Ok(())
}

/// Closed-form stationary distribution of a one-state glue, given the source
/// stationary distributions: a common rescaling of each side's distribution,
/// matching the direct solve of the glued generator.
pub fn stationary_glue_one(
    pi_a: &StationaryResult,
    pi_b: &StationaryResult,
    spec: &GlueSpec,
) -> Result<StationaryResult> {
    let pair = spec.expect_pairs(1)?[0];
    if pair.a >= pi_a.len() || pair.b >= pi_b.len() {
        return Err(Error::InvalidGlueSpec("glue pair out of range".into()));
    }
    let pa = pi_a.probabilities();
    let pb = pi_b.probabilities();
    let shared_mass = pa[pair.a] + pb[pair.b] - pa[pair.a] * pb[pair.b];
    let c = 1.0 / shared_mass;
    let mut out = Vec::with_capacity(pi_a.len() + pi_b.len() - 1);
    for (i, &p) in pa.iter().enumerate() {
        if i == pair.a {
            out.push(c * pa[pair.a] * pb[pair.b]);
        } else {
            out.push(c * p * pb[pair.b]);
        }
    }
    for (j, &p) in pb.iter().enumerate() {
        if j != pair.b {
            out.push(c * pa[pair.a] * p);
        }
    }
    StationaryResult::new(out, Method::GluedOne)
}

/// True iff the two chains assign the same stationary mass ratio to the two
/// glued states, tested in cross-multiplied form
/// `|pi^A_1 pi^B_2 - pi^A_2 pi^B_1| <= tol (pi^A_1 pi^B_2 + pi^A_2 pi^B_1)`.
pub fn parallel_condition(
    pi_a: &StationaryResult,
    pi_b: &StationaryResult,
    spec: &GlueSpec,
    tol: Option<f64>,
) -> Result<bool> {
    let pairs = spec.expect_pairs(2)?;
    check_lengths_pairs(pi_a, pi_b, pairs)?;
    let tol = tol.unwrap_or(PARALLEL_RTOL);
    let x = pi_a[pairs[0].a] * pi_b[pairs[1].b];
    let y = pi_a[pairs[1].a] * pi_b[pairs[0].b];
    Ok((x - y).abs() <= tol * (x + y))
}

fn check_lengths_pairs(
    pi_a: &StationaryResult,
    pi_b: &StationaryResult,
    pairs: &[GluePair],
) -> Result<()> {
    for p in pairs {
        if p.a >= pi_a.len() || p.b >= pi_b.len() {
            return Err(Error::InvalidGlueSpec("glue pair out of range".into()));
        }
    }
    Ok(())
}

/// Closed-form stationary distribution of a two-state glue in the parallel
/// case. Fails with [`Error::NotParallel`] when [`parallel_condition`] does
/// not hold at the default tolerance.
pub fn stationary_parallel(
    pi_a: &StationaryResult,
    pi_b: &StationaryResult,
    spec: &GlueSpec,
) -> Result<StationaryResult> {
    let pairs = spec.expect_pairs(2)?;
    check_lengths_pairs(pi_a, pi_b, pairs)?;
    if !parallel_condition(pi_a, pi_b, spec, None)? {
        let ra = pi_a[pairs[0].a] / pi_a[pairs[1].a];
        let rb = pi_b[pairs[0].b] / pi_b[pairs[1].b];
        return Err(Error::NotParallel(format!(
            "glued-state mass ratios are {ra} (chain A) and {rb} (chain B)"
        )));
    }
    let pa1 = pi_a[pairs[0].a];
    let pb1 = pi_b[pairs[0].b];
    let pb2 = pi_b[pairs[1].b];
    let c = 1.0 / (pa1 + pb1 - pa1 * (pb1 + pb2));
    let mut out = Vec::with_capacity(pi_a.len() + pi_b.len() - 2);
    for &p in pi_a.probabilities() {
        out.push(c * p * pb1);
    }
    for (j, &p) in pi_b.probabilities().iter().enumerate() {
        if j != pairs[0].b && j != pairs[1].b {
            out.push(c * pa1 * p);
        }
    }
    StationaryResult::new(out, Method::Parallel)
}

/// Stationary distribution of a two-state glue from the two chains' excursion
/// profiles, valid whether or not the parallel condition holds.
///
/// The mass of glued state 1 is the combined crossing intensity toward it,
/// normalized by both crossing intensities weighted with the total interior
/// weight on their side; glued state 2 follows from the flow balance between
/// the two states, and every interior state gets its weight combination
/// `pi_1 * from_one + pi_2 * from_two`. The profiles must come from
/// [`GlueSpec::marked_a`] / [`GlueSpec::marked_b`] of the same spec (mark 1 is
/// the first pair); the output uses the glued layout of [`glue_two`].
pub fn stationary_glue_two(
    prof_a: &ExcursionProfile,
    prof_b: &ExcursionProfile,
) -> Result<StationaryResult> {
    let toward_one = prof_a.intensities.crossing(Mark::Two) + prof_b.intensities.crossing(Mark::Two);
    let toward_two = prof_a.intensities.crossing(Mark::One) + prof_b.intensities.crossing(Mark::One);
    if !(toward_two > 0.0) || !(toward_one > 0.0) {
        return Err(Error::DegenerateIntensities(format!(
            "combined crossing intensities are {toward_two} (1 -> 2) and {toward_one} (2 -> 1)"
        )));
    }
    let sum = |v: &[f64]| v.iter().sum::<f64>();
    let denom = toward_one
        * (sum(&prof_a.weights.from_one) + sum(&prof_b.weights.from_one) + 1.0)
        + toward_two * (sum(&prof_a.weights.from_two) + sum(&prof_b.weights.from_two) + 1.0);
    let pi1 = toward_one / denom;
    let pi2 = pi1 * toward_two / toward_one;

    let n = prof_a.n + prof_b.n - 2;
    let mut pi = vec![0.0; n];
    pi[prof_a.s1] = pi1;
    pi[prof_a.s2] = pi2;
    for (pos, &i) in prof_a.interior.iter().enumerate() {
        pi[i] = pi1 * prof_a.weights.from_one[pos] + pi2 * prof_a.weights.from_two[pos];
    }
    for (pos, _) in prof_b.interior.iter().enumerate() {
        pi[prof_a.n + pos] =
            pi1 * prof_b.weights.from_one[pos] + pi2 * prof_b.weights.from_two[pos];
    }
    StationaryResult::new(pi, Method::GluedTwo)
}

/// Runs the full two-state pipeline: profile both chains, then apply
/// [`stationary_glue_two`].
pub fn pipeline_stationary(
    a: &ChainModel,
    b: &ChainModel,
    spec: &GlueSpec,
) -> Result<StationaryResult> {
    let prof_a = spec.marked_a(a)?.profile()?;
    let prof_b = spec.marked_b(b)?.profile()?;
    stationary_glue_two(&prof_a, &prof_b)
}

/// Excursion weight vectors recovered from stationary distributions alone.
#[derive(Debug, Clone)]
pub struct GlueWeights {
    pub a: WeightVectors,
    pub b: WeightVectors,
}

/// Recovers the four weight vectors from the glued and source stationary
/// distributions. Only defined when the parallel condition fails; the
/// defining denominators vanish otherwise.
pub fn weights_from_pi(
    pi: &StationaryResult,
    pi_a: &StationaryResult,
    pi_b: &StationaryResult,
    glued: &GluedChain,
) -> Result<GlueWeights> {
    if glued.pairs.len() != 2 {
        return Err(Error::InvalidGlueSpec(
            "weight recovery needs a two-state glue".into(),
        ));
    }
    check_lengths(pi, glued.model.n(), "glued")?;
    check_lengths(pi_a, glued.map_a.len(), "A")?;
    check_lengths(pi_b, glued.map_b.len(), "B")?;
    let marks = glued.glued_indices();
    let (pi1, pi2) = (pi[marks[0]], pi[marks[1]]);

    let side = |p_src: &StationaryResult,
                map: &[usize],
                interior: &[usize],
                src1: usize,
                src2: usize|
     -> Result<WeightVectors> {
        let (m1, m2) = (p_src[src1], p_src[src2]);
        let den_one = m2 * pi1 - pi2 * m1;
        if den_one.abs() <= PARALLEL_RTOL * (m2 * pi1 + pi2 * m1) {
            return Err(Error::ParallelCase(format!(
                "weight denominator {den_one:e} vanishes within tolerance"
            )));
        }
        let mut from_one = Vec::with_capacity(interior.len());
        let mut from_two = Vec::with_capacity(interior.len());
        for &i in interior {
            let p_glued = pi[map[i]];
            from_one.push((m2 * p_glued - pi2 * p_src[i]) / den_one);
            from_two.push((m1 * p_glued - pi1 * p_src[i]) / -den_one);
        }
        Ok(WeightVectors { from_one, from_two })
    };

    let a = side(
        pi_a,
        &glued.map_a,
        &glued.interior_a(),
        glued.pairs[0].a,
        glued.pairs[1].a,
    )?;
    let b = side(
        pi_b,
        &glued.map_b,
        &glued.interior_b(),
        glued.pairs[0].b,
        glued.pairs[1].b,
    )?;
    Ok(GlueWeights { a, b })
}

/// Which source chain an interior state came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::A => "A",
            Side::B => "B",
        })
    }
}

/// Sandwich-bound check of one interior state: its glued-to-source mass ratio
/// against the two marked-state ratios of its side.
#[derive(Debug, Clone)]
pub struct BoundEntry {
    pub label: String,
    pub side: Side,
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub strict_lower: bool,
    pub strict_upper: bool,
}

/// Verification report of all sandwich bounds of a two-state glue.
#[derive(Debug, Clone)]
pub struct BoundsReport {
    pub parallel: bool,
    /// `pi_1 / pi_2` of the glued chain.
    pub marked_ratio: f64,
    /// Marked-state mass ratio of chain A (lower/upper end of the sandwich).
    pub marked_ratio_a: f64,
    pub marked_ratio_b: f64,
    pub entries: Vec<BoundEntry>,
    pub violations: Vec<String>,
}

/// Checks every sandwich bound for a two-state glue:
///
/// * each interior ratio `pi_i / pi^src_i` lies between the two marked-state
///   ratios of its side (with equality throughout in the parallel case),
/// * strictness at each end is reported and must agree with positivity of the
///   recovered weights (a zero weight pins the ratio to one end),
/// * `pi_1 / pi_2` lies strictly between the source ratios when the parallel
///   condition fails, and equals them when it holds.
///
/// Violations are reported, never raised.
pub fn bounds_report(
    pi: &StationaryResult,
    pi_a: &StationaryResult,
    pi_b: &StationaryResult,
    glued: &GluedChain,
) -> Result<BoundsReport> {
    if glued.pairs.len() != 2 {
        return Err(Error::InvalidGlueSpec(
            "bounds are defined for a two-state glue".into(),
        ));
    }
    check_lengths(pi, glued.model.n(), "glued")?;
    check_lengths(pi_a, glued.map_a.len(), "A")?;
    check_lengths(pi_b, glued.map_b.len(), "B")?;

    let marks = glued.glued_indices();
    let (pi1, pi2) = (pi[marks[0]], pi[marks[1]]);
    let spec_like = GlueSpec {
        pairs: glued.pairs.clone(),
        glued_labels: None,
    };
    let parallel = parallel_condition(pi_a, pi_b, &spec_like, None)?;
    // Near the parallel boundary the weight denominators are unusable even if
    // the verdict is "not parallel"; degrade to equality mode in that case.
    let weights = if parallel {
        None
    } else {
        weights_from_pi(pi, pi_a, pi_b, glued).ok()
    };

    let mut entries = Vec::new();
    let mut violations = Vec::new();

    let mut side_entries = |side: Side,
                            p_src: &StationaryResult,
                            map: &[usize],
                            interior: &[usize],
                            src1: usize,
                            src2: usize,
                            w: Option<&WeightVectors>| {
        let end_one = pi1 / p_src[src1];
        let end_two = pi2 / p_src[src2];
        let (lower, upper) = if end_one <= end_two {
            (end_one, end_two)
        } else {
            (end_two, end_one)
        };
        let weight_band = w.map(|w| {
            let scale = w
                .from_one
                .iter()
                .chain(&w.from_two)
                .fold(1.0f64, |m, x| m.max(x.abs()));
            WEIGHT_ZERO_TOL * scale
        });
        for (pos, &i) in interior.iter().enumerate() {
            let ratio = pi[map[i]] / p_src[i];
            let slack = STRICTNESS_RTOL * lower.abs().max(upper.abs()).max(ratio.abs());
            let label = glued.model.label(map[i]).to_string();
            if ratio < lower - slack || ratio > upper + slack {
                violations.push(format!(
                    "state {label:?} (side {side}): ratio {ratio} outside [{lower}, {upper}]"
                ));
            }
            // from_two > 0 separates the ratio from the mark-1 end,
            // from_one > 0 from the mark-2 end
            let (strict_one_end, strict_two_end) = match (w, weight_band) {
                (Some(w), Some(band)) => (w.from_two[pos] > band, w.from_one[pos] > band),
                _ => (false, false),
            };
            if let (Some(w), Some(band)) = (w, weight_band) {
                if w.from_one[pos] <= band && w.from_two[pos] <= band {
                    violations.push(format!(
                        "state {label:?} (side {side}): both weights vanish; \
                         at least one must be positive"
                    ));
                }
            }
            let (strict_lower, strict_upper) = if end_one <= end_two {
                (strict_one_end, strict_two_end)
            } else {
                (strict_two_end, strict_one_end)
            };
            entries.push(BoundEntry {
                label,
                side,
                ratio,
                lower,
                upper,
                strict_lower,
                strict_upper,
            });
        }
    };

    side_entries(
        Side::A,
        pi_a,
        &glued.map_a,
        &glued.interior_a(),
        glued.pairs[0].a,
        glued.pairs[1].a,
        weights.as_ref().map(|w| &w.a),
    );
    side_entries(
        Side::B,
        pi_b,
        &glued.map_b,
        &glued.interior_b(),
        glued.pairs[0].b,
        glued.pairs[1].b,
        weights.as_ref().map(|w| &w.b),
    );

    let marked_ratio = pi1 / pi2;
    let marked_ratio_a = pi_a[glued.pairs[0].a] / pi_a[glued.pairs[1].a];
    let marked_ratio_b = pi_b[glued.pairs[0].b] / pi_b[glued.pairs[1].b];
    let scale = marked_ratio
        .abs()
        .max(marked_ratio_a.abs())
        .max(marked_ratio_b.abs());
    if parallel {
        if (marked_ratio - marked_ratio_a).abs() > PARALLEL_RTOL * scale
            || (marked_ratio - marked_ratio_b).abs() > PARALLEL_RTOL * scale
        {
            violations.push(format!(
                "parallel case, but glued ratio {marked_ratio} differs from \
                 source ratios {marked_ratio_a}, {marked_ratio_b}"
            ));
        }
    } else {
        let lo = marked_ratio_a.min(marked_ratio_b);
        let hi = marked_ratio_a.max(marked_ratio_b);
        let band = STRICTNESS_RTOL * scale;
        if !(marked_ratio - lo > band && hi - marked_ratio > band) {
            violations.push(format!(
                "glued ratio {marked_ratio} not strictly inside ({lo}, {hi})"
            ));
        }
    }

    Ok(BoundsReport {
        parallel,
        marked_ratio,
        marked_ratio_a,
        marked_ratio_b,
        entries,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{stationary_direct, ChainModel};

    fn two_state(up: f64, down: f64) -> ChainModel {
        ChainModel::from_rows(&[vec![-up, up], vec![down, -down]]).unwrap()
    }

    #[test]
    fn gluing_two_two_state_chains_adds_parallel_edges() {
        let a = two_state(1.5, 2.5);
        let b = ChainModel::new(
            crate::chain::RateMatrix::from_rows(&[vec![-3.0, 3.0], vec![4.0, -4.0]]).unwrap(),
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        let glued = glue_two(&a, &b, &GlueSpec::two((0, 0), (1, 1))).unwrap();
        assert_eq!(glued.model.n(), 2);
        assert_eq!(glued.model.rates().entry(0, 1), 4.5);
        assert_eq!(glued.model.rates().entry(1, 0), 6.5);
        assert_eq!(glued.model.labels(), ["0", "1"]);
        let shared = glued.shared.unwrap();
        assert_eq!(shared.a_one_to_two, 1.5);
        assert_eq!(shared.b_one_to_two, 3.0);
    }

    #[test]
    fn one_state_glue_builds_a_path_chain() {
        let a = two_state(1.0, 2.0);
        let b = ChainModel::new(
            crate::chain::RateMatrix::from_rows(&[vec![-3.0, 3.0], vec![4.0, -4.0]]).unwrap(),
            vec!["m".into(), "n".into()],
        )
        .unwrap();
        let glued = glue_one(&a, &b, &GlueSpec::one(1, 0)).unwrap();
        assert_eq!(glued.model.n(), 3);
        // A: 0 <-> 1 (=m), B: m <-> n, so state 1 bridges 0 and n
        assert_eq!(glued.model.rates().entry(0, 1), 1.0);
        assert_eq!(glued.model.rates().entry(1, 0), 2.0);
        assert_eq!(glued.model.rates().entry(1, 2), 3.0);
        assert_eq!(glued.model.rates().entry(2, 1), 4.0);
        assert_eq!(glued.model.rates().entry(0, 2), 0.0);
        assert!(crate::chain::is_irreducible(&glued.model));
        assert_eq!(glued.map_b, [1, 2]);
    }

    #[test]
    fn glued_index_maps_are_injective_and_cover_everything() {
        let a = ChainModel::from_rows(&[
            vec![-2.0, 1.0, 1.0],
            vec![1.0, -2.0, 1.0],
            vec![1.0, 1.0, -2.0],
        ])
        .unwrap();
        let b = ChainModel::new(
            crate::chain::RateMatrix::from_rows(&[
                vec![-2.0, 1.0, 1.0],
                vec![1.0, -2.0, 1.0],
                vec![1.0, 1.0, -2.0],
            ])
            .unwrap(),
            vec!["p".into(), "q".into(), "r".into()],
        )
        .unwrap();
        let glued = glue_two(&a, &b, &GlueSpec::two((0, 1), (2, 2))).unwrap();
        assert_eq!(glued.model.n(), 4);
        let mut seen = vec![false; 4];
        for &g in glued.map_a.iter() {
            seen[g] = true;
        }
        for &g in glued.map_b.iter() {
            seen[g] = true;
        }
        assert!(seen.iter().all(|&s| s));
        assert_eq!(glued.map_b[1], glued.map_a[0]);
        assert_eq!(glued.map_b[2], glued.map_a[2]);
        assert!(crate::chain::is_irreducible(&glued.model));
    }

    #[test]
    fn label_collisions_are_rejected() {
        let a = ChainModel::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let b = ChainModel::from_rows(&[
            vec![-1.0, 1.0, 0.0],
            vec![0.0, -1.0, 1.0],
            vec![1.0, 0.0, -1.0],
        ])
        .unwrap();
        // B keeps its interior label "1", which collides with A's "1"
        let err = glue_one(&a, &b, &GlueSpec::one(0, 0)).unwrap_err();
        assert!(matches!(err, Error::InvalidGlueSpec(_)));
    }

    #[test]
    fn symmetric_one_state_glue_is_uniform() {
        let a = two_state(1.0, 1.0);
        let b = ChainModel::new(
            crate::chain::RateMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap(),
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        let pi_a = stationary_direct(&a).unwrap();
        let pi_b = stationary_direct(&b).unwrap();
        let spec = GlueSpec::one(0, 0);
        let pi = stationary_glue_one(&pi_a, &pi_b, &spec).unwrap();
        for &p in pi.probabilities() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(pi.method(), Method::GluedOne);
    }

    #[test]
    fn parallel_condition_for_identical_ratios() {
        let a = two_state(1.0, 2.0);
        let pi_a = stationary_direct(&a).unwrap();
        let spec = GlueSpec::two((0, 0), (1, 1));
        assert!(parallel_condition(&pi_a, &pi_a, &spec, None).unwrap());

        let b = two_state(5.0, 2.0);
        let pi_b = stationary_direct(&b).unwrap();
        assert!(!parallel_condition(&pi_a, &pi_b, &spec, None).unwrap());
        assert!(matches!(
            stationary_parallel(&pi_a, &pi_b, &spec),
            Err(Error::NotParallel(_))
        ));
    }

    #[test]
    fn symmetric_parallel_glue_is_uniform() {
        let a = two_state(1.0, 1.0);
        let pi_a = stationary_direct(&a).unwrap();
        let spec = GlueSpec::two((0, 0), (1, 1));
        let pi = stationary_parallel(&pi_a, &pi_a, &spec).unwrap();
        assert_eq!(pi.len(), 2);
        assert!((pi[0] - 0.5).abs() < 1e-15);
        assert!((pi[1] - 0.5).abs() < 1e-15);
        assert_eq!(pi.method(), Method::Parallel);
    }

    #[test]
    fn glue_spec_misuse_is_rejected() {
        let a = two_state(1.0, 2.0);
        let b = ChainModel::new(
            crate::chain::RateMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap(),
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        assert!(glue_two(&a, &b, &GlueSpec::one(0, 0)).is_err());
        assert!(glue_one(&a, &b, &GlueSpec::two((0, 0), (1, 1))).is_err());
        assert!(glue_two(&a, &b, &GlueSpec::two((0, 0), (0, 1))).is_err());
        assert!(glue_two(&a, &b, &GlueSpec::two((0, 5), (1, 1))).is_err());
    }
}
