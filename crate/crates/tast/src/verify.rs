//! Brute-force certification of the algebraic properties of a code.
//!
//! Every code here is linear, so the difference of two codewords is the
//! codeword of the difference of their inputs. Sweeping `u ≠ 0` over the
//! difference alphabet `{a − b : a, b ∈ C}` therefore covers every pair of
//! distinct codewords.
//!
//! Numerical rank counts singular values above `tol · σ_max`. Results are
//! kept for each tolerance in [`RANK_TOLERANCES`]; the middle one is the
//! decision threshold.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::algebra::{Constellation, C64, ZERO};
use crate::channel::rng;
use crate::encoder::{
    encode, encode_constituent, equivalent_matrix, symbol_schedule, CodeFamily, CodeParams,
    EquivCodeMatrix,
};
use crate::error::{Error, Result};

/// Relative singular-value thresholds, loosest first.
pub const RANK_TOLERANCES: [f64; 3] = [1e-6, 1e-9, 1e-12];

/// Index into [`RANK_TOLERANCES`] used for decisions.
pub const DECISION_TOLERANCE: usize = 1;

/// Largest number of difference vectors the exhaustive sweep will visit.
pub const DIFFERENCE_SEARCH_LIMIT: u128 = 1 << 22;

/// Outcome of a sweep over codeword differences.
#[derive(Debug, Clone, PartialEq)]
pub struct DiversityCertificate {
    /// Transmit antennas; full diversity means `min_rank == m`.
    pub m: usize,
    /// Minimum rank at each of [`RANK_TOLERANCES`].
    pub min_rank_by_tolerance: [usize; 3],
    /// A difference vector attaining the minimum rank at the decision
    /// tolerance (the first one in enumeration order).
    pub argmin: Vec<C64>,
    /// Smallest product of the `M` largest singular values, i.e.
    /// `det(D Dᴴ)^{1/2}` for the difference codeword `D`.
    pub min_det: f64,
    /// A difference vector attaining `min_det`.
    pub argmin_det: Vec<C64>,
    /// Number of nonzero difference vectors examined.
    pub search_size: u128,
    /// `false` for sampled sweeps.
    pub exhaustive: bool,
}

impl DiversityCertificate {
    /// Minimum rank at the decision tolerance.
    pub fn min_rank(&self) -> usize {
        self.min_rank_by_tolerance[DECISION_TOLERANCE]
    }

    /// Whether every examined difference has rank `M`.
    pub fn full_diversity(&self) -> bool {
        self.min_rank() == self.m
    }

    /// Whether the verdict is the same at every tolerance.
    pub fn threshold_stable(&self) -> bool {
        self.min_rank_by_tolerance
            .iter()
            .all(|&r| r == self.min_rank())
    }
}

/// Per-difference statistics.
#[derive(Debug, Clone, Copy)]
struct Stat {
    ranks: [usize; 3],
    det: f64,
}

fn difference_stat(g: &EquivCodeMatrix, u: &[C64]) -> Stat {
    let m = g.m();
    let v = g.apply(u);
    let d = DMatrix::from_column_slice(m, g.t(), v.as_slice());
    let mut sv: Vec<f64> = d.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let smax = sv.first().copied().unwrap_or(0.0);
    let mut ranks = [0usize; 3];
    for (r, tol) in ranks.iter_mut().zip(RANK_TOLERANCES) {
        *r = if smax > 0.0 {
            sv.iter().filter(|&&s| s > tol * smax).count()
        } else {
            0
        };
    }
    let det = sv.iter().take(m).product::<f64>() * if sv.len() < m { 0.0 } else { 1.0 };
    Stat { ranks, det }
}

/// Running minima with the index that attained each; ties keep the smaller
/// index so the result does not depend on how work is split.
#[derive(Debug, Clone, Copy)]
struct Acc {
    ranks: [(usize, u128); 3],
    det: (f64, u128),
}

impl Acc {
    fn empty() -> Self {
        Acc {
            ranks: [(usize::MAX, u128::MAX); 3],
            det: (f64::INFINITY, u128::MAX),
        }
    }

    fn push(mut self, idx: u128, s: Stat) -> Self {
        for (slot, &r) in self.ranks.iter_mut().zip(&s.ranks) {
            if (r, idx) < *slot {
                *slot = (r, idx);
            }
        }
        if s.det < self.det.0 || (s.det == self.det.0 && idx < self.det.1) {
            self.det = (s.det, idx);
        }
        self
    }

    fn merge(mut self, o: Acc) -> Self {
        for (a, b) in self.ranks.iter_mut().zip(o.ranks) {
            if b < *a {
                *a = b;
            }
        }
        if o.det.0 < self.det.0 || (o.det.0 == self.det.0 && o.det.1 < self.det.1) {
            self.det = o.det;
        }
        self
    }
}

/// Digits of `idx` in base `|alphabet|`, `u_1` most significant.
fn unrank(idx: u128, alphabet: &[C64], k: usize) -> Vec<C64> {
    let q = alphabet.len() as u128;
    let mut u = vec![ZERO; k];
    let mut rest = idx;
    for slot in u.iter_mut().rev() {
        *slot = alphabet[(rest % q) as usize];
        rest /= q;
    }
    u
}

fn check_constellation(params: &CodeParams, constellation: &Constellation) -> Result<Vec<C64>> {
    if constellation.is_empty() {
        return Err(Error::InvalidConstellation("empty constellation".into()));
    }
    let _ = params;
    Ok(constellation.difference_alphabet())
}

fn certificate(
    m: usize,
    acc: Acc,
    decode: impl Fn(u128) -> Vec<C64>,
    size: u128,
    exhaustive: bool,
) -> DiversityCertificate {
    DiversityCertificate {
        m,
        min_rank_by_tolerance: [acc.ranks[0].0, acc.ranks[1].0, acc.ranks[2].0],
        argmin: decode(acc.ranks[DECISION_TOLERANCE].1),
        min_det: acc.det.0,
        argmin_det: decode(acc.det.1),
        search_size: size,
        exhaustive,
    }
}

/// Exhaustive sweep over every nonzero `u` in the difference alphabet of
/// `constellation`. The alphabet has the zero difference first, so index 0
/// is the all-zero vector and is skipped.
pub fn min_rank_over_differences(
    params: &CodeParams,
    constellation: &Constellation,
) -> Result<DiversityCertificate> {
    let alphabet = check_constellation(params, constellation)?;
    let k = params.k();
    let total = (alphabet.len() as u128)
        .checked_pow(k as u32)
        .unwrap_or(u128::MAX);
    if total > DIFFERENCE_SEARCH_LIMIT {
        return Err(Error::Refused {
            size: total,
            limit: DIFFERENCE_SEARCH_LIMIT,
        });
    }
    let g = equivalent_matrix(params);
    let acc = (1..total as u64)
        .into_par_iter()
        .fold(Acc::empty, |acc, idx| {
            let u = unrank(idx as u128, &alphabet, k);
            acc.push(idx as u128, difference_stat(&g, &u))
        })
        .reduce(Acc::empty, Acc::merge);
    Ok(certificate(
        params.m(),
        acc,
        |i| unrank(i, &alphabet, k),
        total - 1,
        true,
    ))
}

/// Same statistics as [`min_rank_over_differences`] but the minimum
/// determinant is the figure of interest. Subject to the same guard.
pub fn min_det_over_differences(params: &CodeParams, constellation: &Constellation) -> Result<f64> {
    min_rank_over_differences(params, constellation).map(|c| c.min_det)
}

/// Random sweep of `samples` nonzero difference vectors, for codes too
/// large to enumerate. The result is not a certificate of full diversity.
pub fn sampled_min_rank(
    params: &CodeParams,
    constellation: &Constellation,
    samples: usize,
    seed: u64,
) -> Result<DiversityCertificate> {
    let alphabet = check_constellation(params, constellation)?;
    let k = params.k();
    let g = equivalent_matrix(params);
    let mut r = rng(seed);
    let draws: Vec<Vec<C64>> = (0..samples)
        .map(|_| loop {
            let u: Vec<C64> = (0..k)
                .map(|_| alphabet[r.random_range(0..alphabet.len())])
                .collect();
            if u.iter().any(|&z| z != ZERO) {
                break u;
            }
        })
        .collect();
    let acc = draws
        .par_iter()
        .enumerate()
        .fold(Acc::empty, |acc, (i, u)| {
            acc.push(i as u128, difference_stat(&g, u))
        })
        .reduce(Acc::empty, Acc::merge);
    let pick = |i: u128| draws.get(i as usize).cloned().unwrap_or_default();
    Ok(certificate(params.m(), acc, pick, samples as u128, false))
}

/// Columns of a tree codeword that carry one chosen symbol, compared against
/// the constituent codeword of that symbol alone.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmatrixCheck {
    /// Index of the selected symbol (the first nonzero entry of `u`).
    pub symbol: usize,
    /// Time slots where that symbol appears.
    pub times: Vec<usize>,
    /// Constituent column matched to each time slot (`time mod M`).
    pub permutation: Vec<usize>,
    /// The `M × |times|` extracted submatrix.
    pub submatrix: DMatrix<C64>,
    /// Whether the submatrix equals the permuted constituent codeword to
    /// within `1e-12` relative error. Holds whenever `u` has one nonzero
    /// entry; with several symbols their contributions overlap and it
    /// generally does not.
    pub identity: bool,
    /// Numerical rank of the submatrix at the decision tolerance.
    pub rank: usize,
}

/// Extracts the submatrix holding the first nonzero symbol of `u` from the
/// tree codeword and checks it against the constituent code.
pub fn thread_submatrix_rank(params: &CodeParams, u: &[C64]) -> Result<SubmatrixCheck> {
    if params.family() != CodeFamily::Tree {
        return Err(Error::InvalidParams(
            "submatrix extraction applies to tree codes".into(),
        ));
    }
    let s = encode(params, u)?;
    let symbol = u
        .iter()
        .position(|&z| z != ZERO)
        .ok_or_else(|| Error::InvalidInput("u must be nonzero".into()))?;
    let m = params.m();
    let sched = symbol_schedule(params);
    let times: Vec<usize> = sched
        .symbol(symbol)
        .appearances
        .iter()
        .map(|a| a.time)
        .collect();
    let permutation: Vec<usize> = times.iter().map(|t| t % m).collect();

    let entry = symbol / m;
    let row = symbol % m;
    let mut lone = vec![ZERO; m * m];
    lone[(entry % m) * m + row] = u[symbol];
    let constituent = encode_constituent(params, &lone)?;

    let submatrix = s.matrix().select_columns(&times);
    let expected = constituent.matrix().select_columns(&permutation);
    let scale = expected.norm().max(f64::MIN_POSITIVE);
    let identity = (&submatrix - &expected).norm() <= 1e-12 * scale;

    let sv = submatrix.singular_values();
    let smax = sv.max();
    let tol = RANK_TOLERANCES[DECISION_TOLERANCE] * smax;
    let rank = if smax > 0.0 {
        sv.iter().filter(|&&x| x > tol).count()
    } else {
        0
    };

    Ok(SubmatrixCheck {
        symbol,
        times,
        permutation,
        submatrix,
        identity,
        rank,
    })
}

/// Result of [`check_triangular`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TriangularCheck {
    pub ok: bool,
    /// First offending column and its leading row (`None` for an all-zero
    /// column).
    pub violation: Option<(usize, Option<usize>)>,
}

/// Checks that leading (first structurally-nonzero) rows strictly increase
/// from column to column.
pub fn check_triangular(g: &EquivCodeMatrix) -> TriangularCheck {
    let mut prev: Option<usize> = None;
    for (col, lead) in g.leading_rows().into_iter().enumerate() {
        let fine = match (prev, lead) {
            (_, None) => false,
            (None, Some(_)) => true,
            (Some(p), Some(r)) => r > p,
        };
        if !fine {
            return TriangularCheck {
                ok: false,
                violation: Some((col, lead)),
            };
        }
        prev = lead;
    }
    TriangularCheck {
        ok: true,
        violation: None,
    }
}
