//! Shared fixtures and independent oracles for the integration suites.
//!
//! The Gaussian-elimination solver here is deliberately hand-rolled so that
//! expected values never flow through the same code path they are checking.

#![allow(dead_code)]

use chainglue::chain::{ChainModel, RateMatrix};
use chainglue::compose::GlueSpec;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha12Rng;

/// 3-state chain of the first worked example; marks are labels "1", "2".
pub fn ex1_chain_a() -> ChainModel {
    ChainModel::new(
        RateMatrix::from_rows(&[
            vec![-6.0, 4.0, 2.0],
            vec![1.0, -2.0, 1.0],
            vec![2.0, 0.0, -2.0],
        ])
        .unwrap(),
        vec!["0".into(), "1".into(), "2".into()],
    )
    .unwrap()
}

/// 4-state chain of the first worked example; marks are labels "1", "2".
pub fn ex1_chain_b() -> ChainModel {
    ChainModel::new(
        RateMatrix::from_rows(&[
            vec![-3.0, 1.0, 0.0, 2.0],
            vec![3.0, -3.0, 0.0, 0.0],
            vec![0.0, 4.0, -4.0, 0.0],
            vec![0.0, 0.0, 1.0, -1.0],
        ])
        .unwrap(),
        vec!["1".into(), "2".into(), "3".into(), "4".into()],
    )
    .unwrap()
}

pub fn ex1_spec() -> GlueSpec {
    GlueSpec::two((1, 0), (2, 1))
}

pub const EX1_PI: [f64; 5] = [0.1, 0.2, 0.2, 0.1, 0.4];
pub const EX1_PI_A: [f64; 3] = [0.2, 0.4, 0.4];
pub const EX1_PI_B: [f64; 4] = [2.0 / 9.0, 2.0 / 9.0, 1.0 / 9.0, 4.0 / 9.0];

/// 5-state chain of the second worked example; marks are labels "1", "2".
pub fn ex2_chain_a() -> ChainModel {
    ChainModel::new(
        RateMatrix::from_rows(&[
            vec![-4.0, 0.0, 0.0, 0.0, 4.0],
            vec![1.0, -1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, -6.0, 4.0, 2.0],
            vec![0.0, 2.0, 1.0, -3.0, 0.0],
            vec![0.0, 0.0, 2.0, 0.0, -2.0],
        ])
        .unwrap(),
        vec!["-2".into(), "-1".into(), "0".into(), "1".into(), "2".into()],
    )
    .unwrap()
}

/// 2-state chain of the second worked example.
pub fn ex2_chain_b() -> ChainModel {
    ChainModel::new(
        RateMatrix::from_rows(&[vec![-2.0, 2.0], vec![3.0, -3.0]]).unwrap(),
        vec!["1".into(), "2".into()],
    )
    .unwrap()
}

pub fn ex2_spec() -> GlueSpec {
    GlueSpec::two((3, 0), (4, 1))
}

pub const EX2_PI: [f64; 5] = [0.1, 0.4, 0.1, 0.2, 0.2];
pub const EX2_PI_A: [f64; 5] = [1.0 / 12.0, 1.0 / 3.0, 1.0 / 8.0, 1.0 / 6.0, 7.0 / 24.0];
pub const EX2_PI_B: [f64; 2] = [0.6, 0.4];

/// Largest absolute componentwise difference.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Log-uniform rate in `[0.1, 10]`.
pub fn random_rate(rng: &mut ChaCha12Rng) -> f64 {
    let (lo, hi) = (0.1f64.ln(), 10.0f64.ln());
    (lo + (hi - lo) * rng.random::<f64>()).exp()
}

/// Random irreducible generator on `n` states: a random directed cycle
/// guarantees strong connectivity, extra edges appear with probability 0.35,
/// all rates log-uniform in `[0.1, 10]`.
pub fn random_irreducible(rng: &mut ChaCha12Rng, n: usize, label_prefix: &str) -> ChainModel {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut rows = vec![vec![0.0; n]; n];
    for k in 0..n {
        let (i, j) = (perm[k], perm[(k + 1) % n]);
        if i != j {
            rows[i][j] = random_rate(rng);
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && rows[i][j] == 0.0 && rng.random::<f64>() < 0.35 {
                rows[i][j] = random_rate(rng);
            }
        }
    }
    for i in 0..n {
        rows[i][i] = -rows[i].iter().sum::<f64>();
    }
    let labels = (0..n).map(|i| format!("{label_prefix}{i}")).collect();
    ChainModel::new(RateMatrix::from_rows(&rows).unwrap(), labels).unwrap()
}

/// Two distinct random indices below `n`.
pub fn random_pair(rng: &mut ChaCha12Rng, n: usize) -> (usize, usize) {
    let first = rng.random_range(0..n);
    let mut second = rng.random_range(0..n - 1);
    if second >= first {
        second += 1;
    }
    (first, second)
}

/// Dense Gaussian elimination with partial pivoting; the independent oracle
/// for every linear system in these suites.
pub fn gauss_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    assert_eq!(a.len(), n);
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            assert_eq!(row.len(), n);
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r1, &r2| {
            m[r1][col].abs().partial_cmp(&m[r2][col].abs()).unwrap()
        })?;
        if m[pivot][col] == 0.0 {
            return None;
        }
        m.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            if f != 0.0 {
                for c in col..=n {
                    m[row][c] -= f * m[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = m[row][n];
        for c in row + 1..n {
            acc -= m[row][c] * x[c];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Stationary distribution via the oracle: transpose, replace the first
/// equation with normalization, Gaussian elimination.
pub fn gauss_stationary(model: &ChainModel) -> Vec<f64> {
    let n = model.n();
    let q = model.rates();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = q.entry(j, i);
        }
    }
    for j in 0..n {
        a[0][j] = 1.0;
    }
    let mut b = vec![0.0; n];
    b[0] = 1.0;
    gauss_solve(&a, &b).expect("oracle solve failed")
}
