//! Codeword and equivalent-matrix construction.
//!
//! Three code families share one generator table:
//!
//! * the **constituent** full-rate `M × M` code (`K = M²`): the Golden code
//!   for `M = 2`, otherwise thread `j` carries `φ^{(j-1)/M} C u_j` with `C`
//!   the circulant of taps `(1, θ, …, θ^{M-1})`;
//! * the **tree** code (`T = 2M + L - 1`, `K = M(M + L)`): each thread is the
//!   zero-terminated convolution of its symbol stream with the constituent
//!   taps, so `M` new symbols enter at each of the first `M + L` columns and
//!   every symbol occupies `M` consecutive cells of one thread;
//! * the **original** long code (`T = M + L`, `K = M·T`) used as the dense
//!   baseline: every symbol spreads over all `T` cells of its thread.
//!
//! Symbols are numbered in order of entry: the symbol entering at column `e`
//! on antenna row `r` (1-based) is `u_{eM + r}`. Under this numbering the
//! leading (first nonzero) row of column `k` of the tree code's equivalent
//! matrix is exactly `k`, which is the column-echelon form the QR stage
//! exploits.
//!
//! A symbol keeps its constituent slot (`entry column mod M`) for all of its
//! appearances, so the `M` cells carrying a lone symbol reproduce the
//! constituent codeword of that symbol up to a cyclic column permutation.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;

use crate::algebra::{
    default_diophantine, make_constellation, Constellation, ConstellationKind, DiophantineParams,
    GoldenParams, C64, ZERO,
};
use crate::error::{Error, Result};
use crate::layering::{row0, thread0};

/// Which construction a [`CodeParams`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeFamily {
    /// Upper-triangular tree-structured code with `T = 2M + L - 1`.
    Tree,
    /// Full-rate threaded code with `T = M + L`; `L = 0` is the constituent.
    Original,
}

impl std::fmt::Display for CodeFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CodeFamily::Tree => "tree_tast",
            CodeFamily::Original => "original_tast",
        })
    }
}

impl std::str::FromStr for CodeFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "tree_tast" | "tree" => Ok(CodeFamily::Tree),
            "original_tast" | "original" => Ok(CodeFamily::Original),
            other => Err(Error::InvalidParams(format!(
                "unknown code family `{other}`"
            ))),
        }
    }
}

/// Everything needed to build a code.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeParams {
    m: usize,
    n: usize,
    l: usize,
    family: CodeFamily,
    tail_cut: bool,
    dioph: DiophantineParams,
    constellation: Constellation,
}

impl CodeParams {
    /// Tree code over `m` transmit and `n` receive antennas, BPSK, default
    /// Diophantine numbers.
    pub fn tree(m: usize, n: usize, l: usize) -> Result<Self> {
        Self::build(CodeFamily::Tree, m, n, l)
    }

    /// Full-rate threaded code with `T = m + l` channel uses.
    pub fn original(m: usize, n: usize, l: usize) -> Result<Self> {
        Self::build(CodeFamily::Original, m, n, l)
    }

    /// The `m × m` constituent code.
    pub fn constituent(m: usize, n: usize) -> Result<Self> {
        Self::build(CodeFamily::Original, m, n, 0)
    }

    fn build(family: CodeFamily, m: usize, n: usize, l: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("N must be at least 1".into()));
        }
        Ok(CodeParams {
            m,
            n,
            l,
            family,
            tail_cut: false,
            dioph: default_diophantine(m)?,
            constellation: make_constellation(ConstellationKind::Bpsk)?,
        })
    }

    /// Drops the `M - 1` termination columns (tree codes only).
    pub fn with_tail_cut(mut self, tail_cut: bool) -> Result<Self> {
        if tail_cut && self.family != CodeFamily::Tree {
            return Err(Error::InvalidParams(
                "tail cutting applies to tree codes only".into(),
            ));
        }
        self.tail_cut = tail_cut;
        Ok(self)
    }

    pub fn with_constellation(mut self, constellation: Constellation) -> Self {
        self.constellation = constellation;
        self
    }

    pub fn with_diophantine(mut self, dioph: DiophantineParams) -> Result<Self> {
        if dioph.m() != self.m {
            return Err(Error::InvalidParams(format!(
                "Diophantine numbers built for M = {}, code has M = {}",
                dioph.m(),
                self.m
            )));
        }
        self.dioph = dioph;
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn family(&self) -> CodeFamily {
        self.family
    }

    pub fn tail_cut(&self) -> bool {
        self.tail_cut
    }

    pub fn diophantine(&self) -> &DiophantineParams {
        &self.dioph
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    /// Channel uses per codeword.
    pub fn t(&self) -> usize {
        match (self.family, self.tail_cut) {
            (CodeFamily::Tree, false) => 2 * self.m + self.l - 1,
            (CodeFamily::Tree, true) | (CodeFamily::Original, _) => self.m + self.l,
        }
    }

    /// Information symbols per codeword.
    pub fn k(&self) -> usize {
        self.m * (self.m + self.l)
    }

    /// Number of columns in which new symbols enter (tree) or the generator
    /// period (original).
    fn entry_columns(&self) -> usize {
        self.m + self.l
    }

    fn generator(&self) -> Generator {
        let m = self.m;
        let period = match self.family {
            CodeFamily::Tree => m,
            CodeFamily::Original => m + self.l,
        };
        if period == 2 && m == 2 {
            return Generator::Golden(GoldenParams::with_theta_phi(
                self.dioph.theta(),
                self.dioph.phi(),
            ));
        }
        let taps = if period == m {
            self.dioph.generator().to_vec()
        } else {
            // Long original code: unit-modulus taps of period T.
            let base = C64::from_polar(1.0, PI / (3 * period) as f64);
            let mut taps = Vec::with_capacity(period);
            let mut g = C64::new(1.0, 0.0);
            for _ in 0..period {
                taps.push(g);
                g *= base;
            }
            taps
        };
        Generator::Threaded {
            taps,
            scales: self.dioph.thread_scales().to_vec(),
        }
    }

    fn check_len(&self, u: &[C64], expected: usize) -> Result<()> {
        if u.len() != expected {
            return Err(Error::Encode {
                expected,
                actual: u.len(),
            });
        }
        Ok(())
    }
}

/// Coefficient table shared by every family: the contribution of the symbol
/// in constituent slot `slot` of thread `thread0` to that thread's cell in
/// generator column `column`.
#[derive(Debug, Clone)]
enum Generator {
    Golden(GoldenParams),
    Threaded { taps: Vec<C64>, scales: Vec<C64> },
}

impl Generator {
    fn period(&self) -> usize {
        match self {
            Generator::Golden(_) => 2,
            Generator::Threaded { taps, .. } => taps.len(),
        }
    }

    fn coef(&self, thread0: usize, column: usize, slot: usize) -> C64 {
        match self {
            Generator::Golden(p) => {
                let base = match (column % 2, slot % 2) {
                    (0, 0) => p.alpha,
                    (0, _) => p.alpha * p.theta,
                    (_, 0) => p.sigma_alpha,
                    (_, _) => p.sigma_alpha * p.sigma_theta,
                };
                let thread_scale = if thread0 == 0 {
                    C64::new(1.0, 0.0)
                } else {
                    p.phi_sqrt()
                };
                base * thread_scale * p.scale
            }
            Generator::Threaded { taps, scales } => {
                let p = taps.len();
                let lag = (column % p + p - slot % p) % p;
                scales[thread0] * taps[lag]
            }
        }
    }
}

/// An `M × T` codeword matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Codeword {
    entries: DMatrix<C64>,
}

impl Codeword {
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.entries
    }

    /// Column-major stacking.
    pub fn vec(&self) -> DVector<C64> {
        DVector::from_column_slice(self.entries.as_slice())
    }
}

/// One appearance of a symbol in the codeword.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Appearance {
    /// Antenna row, 1-based.
    pub row: usize,
    /// Time, 0-based.
    pub time: usize,
    pub tap: C64,
}

/// Where one information symbol goes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledSymbol {
    /// Thread, 1-based.
    pub thread: usize,
    /// First column the symbol occupies.
    pub entry_column: usize,
    pub appearances: Vec<Appearance>,
}

/// Placement of every information symbol; entry `k` describes `u[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSchedule {
    m: usize,
    t: usize,
    symbols: Vec<ScheduledSymbol>,
}

impl SymbolSchedule {
    pub fn symbols(&self) -> &[ScheduledSymbol] {
        &self.symbols
    }

    pub fn symbol(&self, k: usize) -> &ScheduledSymbol {
        &self.symbols[k]
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Symbols (0-based) whose first appearance is in column `t`.
    pub fn entering_at(&self, t: usize) -> Vec<usize> {
        (0..self.symbols.len())
            .filter(|&k| self.symbols[k].entry_column == t)
            .collect()
    }
}

/// Builds the placement of every symbol for any code family.
pub fn symbol_schedule(params: &CodeParams) -> SymbolSchedule {
    let m = params.m;
    let t = params.t();
    let gen = params.generator();
    let symbols = (0..params.k())
        .map(|k| {
            let entry = k / m;
            let th = thread0(m, k % m, entry);
            let (times, slot) = match params.family {
                CodeFamily::Tree => (entry..(entry + m).min(t), entry % m),
                CodeFamily::Original => (0..t, entry),
            };
            let appearances = times
                .map(|time| Appearance {
                    row: row0(m, th, time) + 1,
                    time,
                    tap: gen.coef(th, time % gen.period(), slot),
                })
                .collect::<Vec<_>>();
            ScheduledSymbol {
                thread: th + 1,
                entry_column: appearances.first().map_or(entry, |a| a.time),
                appearances,
            }
        })
        .collect();
    SymbolSchedule { m, t, symbols }
}

/// Full-rate `M × M` constituent codeword of `u` (`|u| = M²`). For `M = 2`
/// this is the Golden code.
pub fn encode_constituent(params: &CodeParams, u: &[C64]) -> Result<Codeword> {
    let constituent = CodeParams {
        family: CodeFamily::Original,
        l: 0,
        tail_cut: false,
        ..params.clone()
    };
    encode_original(&constituent, u)
}

/// Full-rate threaded codeword with `T = M + L`: thread `j` at column `c`
/// carries `Σ_k coef(j, c, k) u_{j,k}` over all `T` of its symbols.
pub fn encode_original(params: &CodeParams, u: &[C64]) -> Result<Codeword> {
    if params.family != CodeFamily::Original {
        return Err(Error::InvalidParams(
            "expected an original-family code".into(),
        ));
    }
    params.check_len(u, params.k())?;
    let m = params.m;
    let t = params.t();
    let gen = params.generator();
    let mut s = DMatrix::from_element(m, t, ZERO);
    for th in 0..m {
        for col in 0..t {
            let mut acc = ZERO;
            for slot in 0..t {
                acc += gen.coef(th, col, slot) * u[slot * m + row0(m, th, slot)];
            }
            s[(row0(m, th, col), col)] = acc;
        }
    }
    Ok(Codeword { entries: s })
}

/// Tree-structured codeword: each thread is the zero-terminated convolution
/// of its symbol stream with the constituent taps. With `tail_cut` set the
/// last `M - 1` columns are omitted.
pub fn encode_tree_tast(params: &CodeParams, u: &[C64]) -> Result<Codeword> {
    if params.family != CodeFamily::Tree {
        return Err(Error::InvalidParams("expected a tree-family code".into()));
    }
    params.check_len(u, params.k())?;
    let m = params.m;
    let t = params.t();
    let entries = params.entry_columns();
    let gen = params.generator();
    let mut s = DMatrix::from_element(m, t, ZERO);
    for th in 0..m {
        let stream = |e: usize| u[e * m + row0(m, th, e)];
        for col in 0..t {
            let first = (col + 1).saturating_sub(m);
            let last = col.min(entries - 1);
            let mut acc = ZERO;
            for e in first..=last {
                acc += gen.coef(th, col % m, e % m) * stream(e);
            }
            s[(row0(m, th, col), col)] = acc;
        }
    }
    Ok(Codeword { entries: s })
}

/// Tree codeword without the termination tail; `params` must have
/// `tail_cut` set.
pub fn encode_tail_cut(params: &CodeParams, u: &[C64]) -> Result<Codeword> {
    if !params.tail_cut {
        return Err(Error::InvalidParams(
            "encode_tail_cut needs tail_cut = true".into(),
        ));
    }
    encode_tree_tast(params, u)
}

/// Encodes with whichever construction `params` describes.
pub fn encode(params: &CodeParams, u: &[C64]) -> Result<Codeword> {
    match params.family {
        CodeFamily::Tree => encode_tree_tast(params, u),
        CodeFamily::Original => encode_original(params, u),
    }
}

/// The `MT × K` matrix `G` with `G u = vec(codeword(u))`, plus its exact
/// sparsity pattern. Structural zeros are never written.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivCodeMatrix {
    m: usize,
    g: DMatrix<C64>,
    support: Vec<Vec<usize>>,
}

impl EquivCodeMatrix {
    /// Wraps an arbitrary matrix, treating exactly-zero entries as
    /// structural zeros. `m` is the number of rows per time block.
    pub fn from_dense(g: DMatrix<C64>, m: usize) -> Result<Self> {
        if m == 0 || !g.nrows().is_multiple_of(m) {
            return Err(Error::Shape(format!(
                "{} rows is not a whole number of {m}-row time blocks",
                g.nrows()
            )));
        }
        let support = (0..g.ncols())
            .map(|c| (0..g.nrows()).filter(|&r| g[(r, c)] != ZERO).collect())
            .collect();
        Ok(EquivCodeMatrix { m, g, support })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.g
    }

    /// Transmit antennas (rows per time block).
    pub fn m(&self) -> usize {
        self.m
    }

    /// Channel uses.
    pub fn t(&self) -> usize {
        self.g.nrows() / self.m
    }

    pub fn k(&self) -> usize {
        self.g.ncols()
    }

    /// Sorted structurally-nonzero rows of column `k`.
    pub fn support(&self, k: usize) -> &[usize] {
        &self.support[k]
    }

    pub fn is_structural(&self, row: usize, col: usize) -> bool {
        self.support[col].binary_search(&row).is_ok()
    }

    /// First structurally-nonzero row of each column.
    pub fn leading_rows(&self) -> Vec<Option<usize>> {
        self.support.iter().map(|s| s.first().copied()).collect()
    }

    /// Time slots in which column `k` is structurally nonzero.
    pub fn support_times(&self, k: usize) -> Vec<usize> {
        let mut times: Vec<usize> = self.support[k].iter().map(|r| r / self.m).collect();
        times.dedup();
        times
    }

    pub fn apply(&self, u: &[C64]) -> DVector<C64> {
        let mut out = DVector::from_element(self.g.nrows(), ZERO);
        for (k, rows) in self.support.iter().enumerate() {
            for &r in rows {
                out[r] += self.g[(r, k)] * u[k];
            }
        }
        out
    }

    /// Squared Frobenius norm.
    pub fn energy(&self) -> f64 {
        self.g.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Equivalent matrix assembled from the symbol schedule.
pub fn equivalent_matrix(params: &CodeParams) -> EquivCodeMatrix {
    let sched = symbol_schedule(params);
    let m = params.m;
    let mut g = DMatrix::from_element(m * sched.t, params.k(), ZERO);
    let mut support = Vec::with_capacity(params.k());
    for (k, sym) in sched.symbols.iter().enumerate() {
        let mut rows = Vec::with_capacity(sym.appearances.len());
        for a in &sym.appearances {
            let r = a.time * m + a.row - 1;
            g[(r, k)] = a.tap;
            rows.push(r);
        }
        rows.sort_unstable();
        support.push(rows);
    }
    EquivCodeMatrix { m, g, support }
}

/// Exact rate `K / T` in symbols per channel use.
pub fn code_rate(params: &CodeParams) -> Ratio<usize> {
    Ratio::new(params.k(), params.t())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::golden_generator;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    fn lcg_symbols(k: usize, seed: u64) -> Vec<C64> {
        let mut x = seed;
        (0..k)
            .map(|_| {
                x = x
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                let a = ((x >> 33) as f64 / (1u64 << 31) as f64) - 0.5;
                x = x
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                let b = ((x >> 33) as f64 / (1u64 << 31) as f64) - 0.5;
                C64::new(a, b)
            })
            .collect()
    }

    #[test]
    fn dimensions_and_rates() {
        let p = CodeParams::tree(2, 2, 0).unwrap();
        assert_eq!((p.t(), p.k()), (3, 4));
        assert_eq!(code_rate(&p), Ratio::new(4, 3));
        let p = CodeParams::tree(2, 2, 1).unwrap();
        assert_eq!(code_rate(&p), Ratio::new(6, 4));
        let p = CodeParams::tree(3, 3, 1).unwrap();
        assert_eq!((p.t(), p.k()), (6, 12));
        assert_eq!(code_rate(&p), Ratio::from_integer(2));
        let p = CodeParams::tree(2, 2, 0)
            .unwrap()
            .with_tail_cut(true)
            .unwrap();
        assert_eq!(code_rate(&p), Ratio::from_integer(2));
        assert!(CodeParams::original(2, 2, 0)
            .unwrap()
            .with_tail_cut(true)
            .is_err());
    }

    #[test]
    fn golden_constituent_matches_generator() {
        let p = CodeParams::constituent(2, 2).unwrap();
        let gamma = golden_generator();
        for seed in 0..20 {
            let u = lcg_symbols(4, seed);
            let s = encode_constituent(&p, &u).unwrap();
            let want = &gamma * DVector::from_vec(u.clone());
            for (a, b) in s.vec().iter().zip(want.iter()) {
                assert!(close(*a, *b));
            }
        }
    }

    #[test]
    fn golden_constituent_unit_symbol() {
        let p = CodeParams::constituent(2, 1).unwrap();
        let g = GoldenParams::standard();
        let s = encode_constituent(&p, &[C64::new(1.0, 0.0), ZERO, ZERO, ZERO]).unwrap();
        let sc = g.scale;
        assert!(close(s.matrix()[(0, 0)], g.alpha * sc));
        assert!(close(s.matrix()[(1, 1)], g.sigma_alpha * sc));
        assert_eq!(s.matrix()[(0, 1)], ZERO);
        assert_eq!(s.matrix()[(1, 0)], ZERO);
    }

    #[test]
    fn wrong_length_is_an_error() {
        let p = CodeParams::tree(2, 2, 0).unwrap();
        assert_eq!(
            encode_tree_tast(&p, &[ZERO; 3]),
            Err(Error::Encode {
                expected: 4,
                actual: 3
            })
        );
        let c = CodeParams::constituent(3, 3).unwrap();
        assert!(encode_constituent(&c, &[ZERO; 8]).is_err());
    }

    #[test]
    fn zero_input_gives_zero_codeword() {
        for (m, l) in [(1, 0), (2, 0), (2, 3), (3, 1), (4, 2)] {
            let p = CodeParams::tree(m, m, l).unwrap();
            let s = encode_tree_tast(&p, &vec![ZERO; p.k()]).unwrap();
            assert!(s.matrix().iter().all(|z| *z == ZERO));
        }
    }

    #[test]
    fn tree_l0_golden_columns() {
        let p = CodeParams::tree(2, 2, 0).unwrap();
        let g = GoldenParams::standard();
        let u = lcg_symbols(4, 7);
        let s = encode_tree_tast(&p, &u).unwrap();
        let ph = g.phi_sqrt();
        let sc = g.scale;
        let x = s.matrix();
        assert!(close(x[(0, 0)], g.alpha * u[0] * sc));
        assert!(close(x[(1, 0)], ph * g.alpha * u[1] * sc));
        assert!(close(
            x[(0, 1)],
            ph * g.sigma_alpha * (u[1] + g.sigma_theta * u[2]) * sc
        ));
        assert!(close(
            x[(1, 1)],
            g.sigma_alpha * (u[0] + g.sigma_theta * u[3]) * sc
        ));
        assert!(close(x[(0, 2)], g.alpha * g.theta * u[3] * sc));
        assert!(close(x[(1, 2)], ph * g.alpha * g.theta * u[2] * sc));
    }

    #[test]
    fn m1_is_identity() {
        for l in 0..4 {
            let p = CodeParams::tree(1, 1, l).unwrap();
            let g = equivalent_matrix(&p);
            assert_eq!(g.matrix(), &DMatrix::identity(l + 1, l + 1));
        }
    }

    #[test]
    fn schedule_entry_pattern() {
        for (m, l) in [(2, 0), (2, 2), (3, 1), (4, 3)] {
            let p = CodeParams::tree(m, m, l).unwrap();
            let sched = symbol_schedule(&p);
            for t in 0..p.t() {
                let entering = sched.entering_at(t);
                if t < m + l {
                    assert_eq!(entering, (t * m..t * m + m).collect::<Vec<_>>());
                } else {
                    assert!(entering.is_empty());
                }
            }
            for sym in sched.symbols() {
                assert_eq!(sym.appearances.len(), m);
                for (i, a) in sym.appearances.iter().enumerate() {
                    assert_eq!(a.time, sym.entry_column + i);
                    assert_eq!(
                        a.row,
                        crate::layering::thread_layout(m, p.t()).cell_of(sym.thread, a.time)
                    );
                }
            }
        }
    }

    #[test]
    fn tail_cut_truncates_appearances() {
        let p = CodeParams::tree(3, 3, 1)
            .unwrap()
            .with_tail_cut(true)
            .unwrap();
        let sched = symbol_schedule(&p);
        let counts: Vec<usize> = sched
            .symbols()
            .iter()
            .map(|s| s.appearances.len())
            .collect();
        assert_eq!(counts, vec![3, 3, 3, 3, 3, 3, 2, 2, 2, 1, 1, 1]);
    }

    #[test]
    fn original_is_dense_within_threads() {
        let p = CodeParams::original(2, 2, 3).unwrap();
        let g = equivalent_matrix(&p);
        assert_eq!((g.matrix().nrows(), g.k()), (10, 10));
        for k in 0..g.k() {
            assert_eq!(g.support(k).len(), 5);
        }
    }
}
