#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tast::channel::complex_gaussian;
use tast::encoder::CodeParams;
use tast::{CodeFamily, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(r: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| complex_gaussian(r, 1.0)).collect()
}

pub fn gaussian_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(r, 1.0))
}

pub fn random_index(r: &mut ChaCha8Rng, n: usize) -> usize {
    r.random_range(0..n)
}

/// Every code shape the tests sweep: tree (with and without tail cut) and
/// original, M in 1..=4, L in 0..=3.
pub fn code_grid() -> Vec<CodeParams> {
    let mut out = Vec::new();
    for m in 1..=4 {
        for l in 0..=3 {
            let tree = CodeParams::tree(m, m, l).unwrap();
            out.push(tree.clone());
            out.push(tree.with_tail_cut(true).unwrap());
            out.push(CodeParams::original(m, m, l).unwrap());
        }
    }
    out
}

pub fn describe(p: &CodeParams) -> String {
    let fam = match p.family() {
        CodeFamily::Tree if p.tail_cut() => "tree(tail-cut)",
        CodeFamily::Tree => "tree",
        CodeFamily::Original => "original",
    };
    format!("{fam} M={} L={}", p.m(), p.l())
}

pub fn vec_of(m: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}
