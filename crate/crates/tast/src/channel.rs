//! Quasi-static flat Rayleigh MIMO channel.
//!
//! `Y = H S(u) + W` over one codeword, `H` redrawn per codeword. In vector
//! form `y = vec(Y) = (I_T ⊗ H) G u + w`; the Kronecker product is never
//! formed, block-row `t` of the composite is `H · G_t`.
//!
//! SNR is measured per receive antenna per channel use against the code's
//! actual energy: with unit-power symbols and `E|h|² = 1`,
//! `E_s = ‖G‖_F² / T` and `σ² = E_s / 10^{SNR/10}`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{Constellation, C64, ZERO};
use crate::encoder::{encode, CodeParams, EquivCodeMatrix};
use crate::error::{Error, Result};

/// What a derived random stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum SeedRole {
    Channel = 1,
    Noise = 2,
    Data = 3,
    /// Statistical resampling of results.
    Resample = 4,
}

/// Seed for stream `(trial, role)` under `master`.
///
/// SplitMix64 finalizer over the packed tuple; distinct tuples give
/// statistically independent ChaCha streams.
pub fn derive_seed(master: u64, trial: u64, role: SeedRole) -> u64 {
    let mut z = master
        ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (role as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The generator behind every seeded draw in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    rng(seed)
}

/// One draw of `CN(0, var)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

/// Fading matrix and noise level for one codeword.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: DMatrix<C64>,
    pub noise_var: f64,
}

/// Draws an `n × m` matrix of i.i.d. `CN(0, 1)` gains. `noise_var` is left
/// at zero.
pub fn sample_channel(seed: u64, n: usize, m: usize) -> ChannelRealization {
    let mut r = rng(seed);
    // Column-major fill keeps the draw order independent of nalgebra internals.
    let mut h = DMatrix::from_element(n, m, ZERO);
    for c in 0..m {
        for row in 0..n {
            h[(row, c)] = complex_gaussian(&mut r, 1.0);
        }
    }
    ChannelRealization { h, noise_var: 0.0 }
}

/// `(I_T ⊗ H) G` together with its structural nonzero mask (row-major,
/// `NT × K`).
#[derive(Debug, Clone, PartialEq)]
pub struct Composite {
    pub matrix: DMatrix<C64>,
    pub mask: Vec<bool>,
}

impl Composite {
    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn is_structural(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.ncols() + col]
    }

    /// Block rows (time slots) in which column `k` is structurally nonzero.
    pub fn support_times(&self, k: usize, n: usize) -> Vec<usize> {
        let t = self.nrows() / n;
        (0..t)
            .filter(|&time| self.is_structural(time * n, k))
            .collect()
    }
}

/// Forms `(I_T ⊗ H) G` block by block. Only time slots where a column of
/// `G` is structurally nonzero are computed; all others stay exact zeros.
pub fn composite_matrix(h: &DMatrix<C64>, g: &EquivCodeMatrix) -> Result<Composite> {
    let (n, m) = h.shape();
    if m != g.m() {
        return Err(Error::Shape(format!(
            "channel has {m} transmit antennas, code has {}",
            g.m()
        )));
    }
    let t = g.t();
    let k = g.k();
    let gm = g.matrix();
    let mut out = DMatrix::from_element(n * t, k, ZERO);
    let mut mask = vec![false; n * t * k];
    for col in 0..k {
        for time in g.support_times(col) {
            for rx in 0..n {
                let mut acc = ZERO;
                for tx in 0..m {
                    acc += h[(rx, tx)] * gm[(time * m + tx, col)];
                }
                let r = time * n + rx;
                out[(r, col)] = acc;
                mask[r * k + col] = true;
            }
        }
    }
    Ok(Composite { matrix: out, mask })
}

/// Received block for one codeword.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedBlock {
    /// `N × T`.
    pub y_matrix: DMatrix<C64>,
    /// `vec(Y)`, length `NT`.
    pub y: DVector<C64>,
}

/// `Y = H S(u) + W`, `W` i.i.d. `CN(0, noise_var)` drawn from `seed`.
pub fn transmit(
    params: &CodeParams,
    h: &DMatrix<C64>,
    u: &[C64],
    noise_var: f64,
    seed: u64,
) -> Result<ReceivedBlock> {
    if h.ncols() != params.m() {
        return Err(Error::Shape(format!(
            "channel has {} transmit antennas, code has {}",
            h.ncols(),
            params.m()
        )));
    }
    let s = encode(params, u)?;
    let mut y = h * s.matrix();
    if noise_var > 0.0 {
        let mut r = rng(seed);
        for c in 0..y.ncols() {
            for row in 0..y.nrows() {
                y[(row, c)] += complex_gaussian(&mut r, noise_var);
            }
        }
    }
    let v = DVector::from_column_slice(y.as_slice());
    Ok(ReceivedBlock { y_matrix: y, y: v })
}

/// Average received energy per receive antenna per channel use,
/// `‖G‖_F² / T`, for unit-power symbols and unit-power fading.
pub fn symbol_energy(g: &EquivCodeMatrix) -> f64 {
    g.energy() / g.t() as f64
}

/// Noise variance per complex receive sample at `snr_db`.
pub fn snr_to_noise_var(g: &EquivCodeMatrix, snr_db: f64) -> f64 {
    symbol_energy(g) / 10f64.powf(snr_db / 10.0)
}

/// Uniform random constellation indices and their points.
pub fn random_symbols(
    constellation: &Constellation,
    k: usize,
    seed: u64,
) -> (Vec<usize>, Vec<C64>) {
    let mut r = rng(seed);
    let idx: Vec<usize> = (0..k)
        .map(|_| r.random_range(0..constellation.len()))
        .collect();
    let pts = idx.iter().map(|&i| constellation.point(i)).collect();
    (idx, pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{equivalent_matrix, symbol_schedule};

    #[test]
    fn seed_derivation_separates_roles_and_trials() {
        let a = derive_seed(1, 0, SeedRole::Channel);
        assert_ne!(a, derive_seed(1, 0, SeedRole::Noise));
        assert_ne!(a, derive_seed(1, 1, SeedRole::Channel));
        assert_ne!(a, derive_seed(2, 0, SeedRole::Channel));
        assert_eq!(a, derive_seed(1, 0, SeedRole::Channel));
    }

    #[test]
    fn channel_is_reproducible() {
        assert_eq!(sample_channel(42, 2, 3), sample_channel(42, 2, 3));
        assert_ne!(sample_channel(42, 2, 3), sample_channel(43, 2, 3));
    }

    #[test]
    fn identity_channel_composite_is_g() {
        let p = CodeParams::tree(2, 2, 0).unwrap();
        let g = equivalent_matrix(&p);
        let c = composite_matrix(&DMatrix::identity(2, 2), &g).unwrap();
        assert_eq!(&c.matrix, g.matrix());
    }

    #[test]
    fn uncoded_composite_is_h() {
        let g = EquivCodeMatrix::from_dense(DMatrix::identity(3, 3), 3).unwrap();
        let h = sample_channel(5, 2, 3).h;
        let c = composite_matrix(&h, &g).unwrap();
        assert_eq!(c.matrix, h);
    }

    #[test]
    fn composite_support_matches_schedule() {
        let p = CodeParams::tree(2, 2, 0).unwrap();
        let g = equivalent_matrix(&p);
        let sched = symbol_schedule(&p);
        let h = sample_channel(9, 2, 2).h;
        let c = composite_matrix(&h, &g).unwrap();
        for k in 0..p.k() {
            let times: Vec<usize> = sched.symbol(k).appearances.iter().map(|a| a.time).collect();
            assert_eq!(c.support_times(k, 2), times);
        }
    }

    #[test]
    fn shape_mismatch() {
        let g = equivalent_matrix(&CodeParams::tree(2, 2, 0).unwrap());
        assert!(matches!(
            composite_matrix(&DMatrix::identity(2, 3), &g),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn noiseless_transmit_matches_composite() {
        let p = CodeParams::tree(2, 3, 1).unwrap();
        let g = equivalent_matrix(&p);
        let h = sample_channel(3, 3, 2).h;
        let (_, u) = random_symbols(p.constellation(), p.k(), 4);
        let rx = transmit(&p, &h, &u, 0.0, 0).unwrap();
        let c = composite_matrix(&h, &g).unwrap();
        let want = &c.matrix * DVector::from_vec(u);
        assert!((rx.y - want).norm() < 1e-12);
    }

    #[test]
    fn snr_definition() {
        let g = equivalent_matrix(&CodeParams::tree(2, 2, 0).unwrap());
        let es = symbol_energy(&g);
        assert!((snr_to_noise_var(&g, 0.0) - es).abs() < 1e-15);
        assert!((snr_to_noise_var(&g, 10.0) - es / 10.0).abs() < 1e-15);
        // Golden columns are unit norm: ‖G‖² = 4 over T = 3.
        assert!((es - 4.0 / 3.0).abs() < 1e-12);
    }
}
