//! Polynomial growth of products of unipotent matrices and sampled checks of
//! flag-based almost-unipotence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, cr, CMat, CVec};
use crate::projective::ProjectiveMap;
use crate::sampling;

/// Abort threshold for products of long words.
pub const OVERFLOW_GUARD: f64 = 1e290;
/// Multiplicative slack in [`growth_constant`].
pub const GROWTH_SLACK: f64 = 1.01;

/// `sup |u_ij|`.
pub fn entrywise_sup_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `binom(n, k)` in floating point.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Number of ordered ways to write `k` as a sum of `n` positive integers.
pub fn compositions_count(k: u64, n: u64) -> u64 {
    if n == 0 || k == 0 || n > k {
        return (n == k) as u64;
    }
    // binom(k - 1, n - 1), exact in integers.
    let (top, r) = (k - 1, (n - 1).min(k - n));
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (top - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

fn factorial(n: u64) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `C` with `R^d Σ_{n<=k} binom(N, n) C_n(k) <= C N^d` for all `k <= d`,
/// `N >= 1`: `R^d Σ_{n=1}^d C_n(d) / n!` times [`GROWTH_SLACK`].
pub fn growth_constant(r: f64, d: u64) -> f64 {
    let sum: f64 = (1..=d).map(|n| compositions_count(d, n) as f64 / factorial(n)).sum();
    r.powi(d as i32) * sum * GROWTH_SLACK
}

/// Upper triangular with unit diagonal.
#[derive(Clone, Debug)]
pub struct UnipotentUpper {
    matrix: CMat,
    entry_bound: f64,
}

impl UnipotentUpper {
    pub fn new(matrix: CMat) -> Result<Self> {
        if !matrix.is_square() || matrix.is_empty() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), got: matrix.ncols() });
        }
        if !linalg::is_finite(&matrix) {
            return Err(Error::PreconditionViolated("non-finite entry".into()));
        }
        let n = matrix.nrows();
        for i in 0..n {
            if matrix[(i, i)] != cr(1.0) {
                return Err(Error::PreconditionViolated(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..i {
                if matrix[(i, j)] != cr(0.0) {
                    return Err(Error::PreconditionViolated(format!("entry ({i}, {j}) below the diagonal")));
                }
            }
        }
        let entry_bound = entrywise_sup_norm(&matrix);
        Ok(Self { matrix, entry_bound })
    }

    /// Strict upper entries uniform in the disk of radius `r`.
    pub fn random<R: Rng + ?Sized>(size: usize, r: f64, rng: &mut R) -> Self {
        let mut m = CMat::identity(size, size);
        for i in 0..size {
            for j in (i + 1)..size {
                m[(i, j)] = sampling::random_in_disk(r, rng);
            }
        }
        Self::new(m).expect("constructed unipotent")
    }

    /// Single Jordan block `J_n(1)`.
    pub fn jordan(size: usize) -> Self {
        let mut m = CMat::identity(size, size);
        for i in 0..size.saturating_sub(1) {
            m[(i, i + 1)] = cr(1.0);
        }
        Self::new(m).expect("constructed unipotent")
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn entry_bound(&self) -> f64 {
        self.entry_bound
    }

    /// `d`, one less than the matrix size.
    pub fn dim(&self) -> usize {
        self.matrix.nrows() - 1
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GrowthCheck {
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub holds: bool,
}

/// Compares `|g_1 ⋯ g_N|` with `C N^d`. Entry bounds below 1 are raised to 1.
pub fn verify_growth(seq: &[UnipotentUpper]) -> Result<GrowthCheck> {
    let first = seq.first().ok_or_else(|| Error::PreconditionViolated("empty product".into()))?;
    let size = first.matrix.nrows();
    if let Some(bad) = seq.iter().find(|u| u.matrix.nrows() != size) {
        return Err(Error::DimensionMismatch { expected: size, got: bad.matrix.nrows() });
    }
    let d = (size - 1) as u64;
    let n = seq.len();
    let r = seq.iter().map(|u| u.entry_bound).fold(1.0, f64::max);
    let constant = growth_constant(r, d);
    let rhs = constant * (n as f64).powi(d as i32);
    if !(rhs < OVERFLOW_GUARD) {
        return Err(Error::OverflowGuard { predicted: rhs });
    }
    let mut prod = CMat::identity(size, size);
    for u in seq {
        prod = &prod * &u.matrix;
        let peak = entrywise_sup_norm(&prod);
        if !(peak < OVERFLOW_GUARD) {
            return Err(Error::OverflowGuard { predicted: peak });
        }
    }
    let lhs = entrywise_sup_norm(&prod);
    Ok(GrowthCheck { n, lhs, rhs, constant, holds: lhs <= rhs })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Strictly nested proper subspaces `V_1 ⊊ … ⊊ V_k ⊊ C^n`, each stored
/// with an orthonormal basis.
#[derive(Clone, Debug)]
pub struct Flag {
    ambient: usize,
    subspaces: Vec<CMat>,
}

impl Flag {
    pub fn new(ambient: usize, subspaces: Vec<CMat>) -> Result<Self> {
        let mut out = Vec::with_capacity(subspaces.len());
        let mut prev_dim = 0;
        for (i, s) in subspaces.iter().enumerate() {
            if s.nrows() != ambient {
                return Err(Error::InvalidFlag(format!("subspace {i} lives in dimension {}", s.nrows())));
            }
            let cols: Vec<CVec> = s.column_iter().map(|c| c.into_owned()).collect();
            let basis = linalg::columns_to_matrix(ambient, &linalg::orthonormalize(&cols, 1e-10));
            let dim = basis.ncols();
            if dim <= prev_dim || dim >= ambient {
                return Err(Error::InvalidFlag(format!("subspace {i} does not extend the previous one properly")));
            }
            if let Some(last) = out.last() {
                let last: &CMat = last;
                for col in last.column_iter() {
                    if linalg::distance_to_span(&basis, &col.into_owned()) > 1e-8 {
                        return Err(Error::InvalidFlag(format!("subspace {} is not contained in subspace {i}", i - 1)));
                    }
                }
            }
            prev_dim = dim;
            out.push(basis);
        }
        Ok(Self { ambient, subspaces: out })
    }

    /// The flag `{0} ⊂ C^n`.
    pub fn trivial(ambient: usize) -> Self {
        Self { ambient, subspaces: Vec::new() }
    }

    /// `span(e_0) ⊂ span(e_0, e_1) ⊂ …`.
    pub fn standard_complete(ambient: usize) -> Self {
        let subspaces = (1..ambient)
            .map(|k| {
                let mut m = CMat::zeros(ambient, k);
                for i in 0..k {
                    m[(i, i)] = cr(1.0);
                }
                m
            })
            .collect();
        Self { ambient, subspaces }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    /// Orthonormal bases of complements `W_i` with `V_i = V_{i-1} ⊕ W_i`,
    /// including the final quotient `C^n / V_k`.
    pub fn quotient_bases(&self) -> Vec<CMat> {
        let n = self.ambient;
        let mut full = self.subspaces.clone();
        full.push(CMat::identity(n, n));
        let mut out = Vec::with_capacity(full.len());
        let mut prev: Vec<CVec> = Vec::new();
        for s in &full {
            let mut cols = prev.clone();
            cols.extend(s.column_iter().map(|c| c.into_owned()));
            let basis = linalg::orthonormalize(&cols, 1e-10);
            let new: Vec<CVec> = basis[prev.len()..].to_vec();
            out.push(linalg::columns_to_matrix(n, &new));
            prev = basis;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GroupCheck {
    pub holds: bool,
    pub max_quotient_norm: f64,
    pub words: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct WordSampling {
    pub n_words: usize,
    pub word_length: usize,
    pub bound_cap: f64,
    pub seed: u64,
}

impl Default for WordSampling {
    fn default() -> Self {
        Self { n_words: 64, word_length: 32, bound_cap: 1e3, seed: 0 }
    }
}

/// Samples words in the generators and bounds the induced maps on every
/// quotient of the flag. A sampled necessary condition only.
pub fn check_almost_unipotent_group(
    generators: &[ProjectiveMap],
    flag: &Flag,
    tol: f64,
    sampling: &WordSampling,
) -> Result<GroupCheck> {
    let n = flag.ambient;
    for g in generators {
        if g.matrix().nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, got: g.matrix().nrows() });
        }
        for (index, v) in flag.subspaces.iter().enumerate() {
            let image = g.matrix() * v;
            let residual = &image - v * (v.adjoint() * &image);
            let r = residual.norm() / g.matrix().norm();
            if r > tol {
                return Err(Error::FlagNotPreserved { index, residual: r });
            }
        }
    }
    let quotients = flag.quotient_bases();
    let mut letters: Vec<CMat> = generators.iter().map(|g| g.matrix().clone()).collect();
    letters.extend(generators.iter().map(|g| g.inverse().matrix().clone()));
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let mut words: Vec<CMat> = Vec::new();
    // Pure powers first, then random words.
    for l in &letters {
        let mut w = CMat::identity(n, n);
        for _ in 0..sampling.word_length {
            w = &w * l;
        }
        words.push(w);
    }
    for _ in 0..sampling.n_words {
        let mut w = CMat::identity(n, n);
        for _ in 0..sampling.word_length {
            w = &w * &letters[rng.random_range(0..letters.len())];
        }
        words.push(w);
    }
    let mut max_norm: f64 = 0.0;
    for w in &words {
        for q in &quotients {
            let block = q.adjoint() * w * q;
            max_norm = max_norm.max(linalg::operator_norm(&block));
        }
    }
    Ok(GroupCheck { holds: max_norm <= sampling.bound_cap, max_quotient_norm: max_norm, words: words.len() })
}
