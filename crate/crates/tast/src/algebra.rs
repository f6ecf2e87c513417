//! Complex scalars, signal constellations and the algebraic constants that
//! parameterize every code in the crate.
//!
//! All arithmetic is double-precision complex. The "algebraic" numbers
//! (golden ratio, roots of unity) are evaluated numerically; nothing here
//! works in an exact number field.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Modulation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstellationKind {
    Bpsk,
    /// Square QAM with the given number of points.
    Qam(usize),
}

impl fmt::Display for ConstellationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstellationKind::Bpsk => write!(f, "bpsk"),
            ConstellationKind::Qam(q) => write!(f, "qam{q}"),
        }
    }
}

impl FromStr for ConstellationKind {
    type Err = Error;

    /// Accepts `bpsk`, `qam<q>`, `<q>qam` and `<q>-qam` (case-insensitive).
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "bpsk" {
            return Ok(ConstellationKind::Bpsk);
        }
        let digits = lower
            .strip_prefix("qam")
            .or_else(|| lower.strip_suffix("qam").map(|d| d.trim_end_matches('-')))
            .ok_or_else(|| Error::InvalidConstellation(format!("unknown constellation `{s}`")))?;
        let order = digits
            .parse::<usize>()
            .map_err(|_| Error::InvalidConstellation(format!("bad QAM order in `{s}`")))?;
        Ok(ConstellationKind::Qam(order))
    }
}

/// A finite, unit-average-energy signal set with a canonical point order.
///
/// The canonical order is what every decoder uses for tie-breaking.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    kind: ConstellationKind,
    points: Vec<C64>,
}

impl Constellation {
    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> C64 {
        self.points[index]
    }

    /// Index of the point closest to `z`; ties go to the lowest index.
    pub fn nearest(&self, z: C64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// All distinct pairwise differences `p - q`, zero first, then in order
    /// of first appearance. Used by the diversity oracle.
    pub fn difference_alphabet(&self) -> Vec<C64> {
        let mut out = vec![ZERO];
        for p in &self.points {
            for q in &self.points {
                let d = p - q;
                if !out.iter().any(|x| (x - d).norm() < 1e-12) {
                    out.push(d);
                }
            }
        }
        out
    }

    pub fn mean_power(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }
}

/// Builds a normalized constellation.
///
/// QAM points are taken row-major over the odd-integer grid (increasing real
/// part, then increasing imaginary part) and scaled to unit mean power.
pub fn make_constellation(kind: ConstellationKind) -> Result<Constellation> {
    let points = match kind {
        ConstellationKind::Bpsk => vec![C64::new(-1.0, 0.0), ONE],
        ConstellationKind::Qam(q) => {
            let side = (q as f64).sqrt().round() as usize;
            if q < 4 || side * side != q {
                return Err(Error::InvalidConstellation(format!(
                    "QAM order {q} is not a perfect square >= 4"
                )));
            }
            // Mean of re^2 + im^2 over the grid {±1, ±3, ...}^2 is 2(q-1)/3.
            let scale = (2.0 * (q as f64 - 1.0) / 3.0).sqrt().recip();
            let offset = side as f64 - 1.0;
            let mut pts = Vec::with_capacity(q);
            for a in 0..side {
                for b in 0..side {
                    let re = 2.0 * a as f64 - offset;
                    let im = 2.0 * b as f64 - offset;
                    pts.push(C64::new(re, im) * scale);
                }
            }
            pts
        }
    };
    Ok(Constellation { kind, points })
}

/// Principal fractional power `z^(num/den)`: the argument of `z` is taken in
/// `[0, 2π)` before scaling.
pub fn principal_power(z: C64, num: usize, den: usize) -> C64 {
    if num == 0 {
        return ONE;
    }
    let mut arg = z.arg();
    if arg < 0.0 {
        arg += 2.0 * PI;
    }
    let frac = num as f64 / den as f64;
    C64::from_polar(z.norm().powf(frac), arg * frac)
}

/// Constants of the 2×2 Golden code.
///
/// `sigma_*` are the images under the Galois conjugation `√5 ↦ -√5`.
/// [`GoldenParams::with_theta_phi`] rebuilds the derived constants from a
/// different `theta`, which is how negative controls break the code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenParams {
    pub theta: C64,
    pub sigma_theta: C64,
    pub alpha: C64,
    pub sigma_alpha: C64,
    pub phi: C64,
    pub scale: f64,
}

impl GoldenParams {
    pub fn standard() -> Self {
        Self::with_theta_phi(C64::new((1.0 + 5f64.sqrt()) / 2.0, 0.0), I)
    }

    pub fn with_theta_phi(theta: C64, phi: C64) -> Self {
        let sigma_theta = ONE - theta;
        GoldenParams {
            theta,
            sigma_theta,
            alpha: ONE + I * sigma_theta,
            sigma_alpha: ONE + I * theta,
            phi,
            scale: 5f64.sqrt().recip(),
        }
    }

    /// `φ^{1/2}` on the principal branch.
    pub fn phi_sqrt(&self) -> C64 {
        principal_power(self.phi, 1, 2)
    }
}

impl Default for GoldenParams {
    fn default() -> Self {
        Self::standard()
    }
}

/// Diophantine numbers of a threaded code over `m` antennas.
#[derive(Debug, Clone, PartialEq)]
pub struct DiophantineParams {
    m: usize,
    theta: C64,
    phi: C64,
    generator: Vec<C64>,
    thread_scales: Vec<C64>,
}

impl DiophantineParams {
    pub fn new(m: usize, theta: C64, phi: C64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParams("M must be at least 1".into()));
        }
        let mut generator = Vec::with_capacity(m);
        let mut g = ONE;
        for _ in 0..m {
            generator.push(g);
            g *= theta;
        }
        let thread_scales = (0..m).map(|j| principal_power(phi, j, m)).collect();
        Ok(DiophantineParams {
            m,
            theta,
            phi,
            generator,
            thread_scales,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn theta(&self) -> C64 {
        self.theta
    }

    pub fn phi(&self) -> C64 {
        self.phi
    }

    /// `(1, θ, …, θ^{M-1})`.
    pub fn generator(&self) -> &[C64] {
        &self.generator
    }

    /// `(φ^0, φ^{1/M}, …, φ^{(M-1)/M})`.
    pub fn thread_scales(&self) -> &[C64] {
        &self.thread_scales
    }
}

/// Default Diophantine numbers.
///
/// * `M = 1`: `θ = φ = 1`.
/// * `M = 2`: the Golden code constants, `θ = (1+√5)/2`, `φ = i`.
/// * `M ≥ 3`: `θ = e^{iπ/(3M)}`, `φ = e^{iπ/(4M+1)}`. These are working
///   defaults, not canonical values; full diversity is certified per
///   configuration by [`crate::verify`].
pub fn default_diophantine(m: usize) -> Result<DiophantineParams> {
    let (theta, phi) = match m {
        0 => return Err(Error::InvalidParams("M must be at least 1".into())),
        1 => (ONE, ONE),
        2 => {
            let g = GoldenParams::standard();
            (g.theta, g.phi)
        }
        _ => (
            C64::from_polar(1.0, PI / (3 * m) as f64),
            C64::from_polar(1.0, PI / (4 * m + 1) as f64),
        ),
    };
    DiophantineParams::new(m, theta, phi)
}

/// The 4×4 matrix `Γ` with `Γ·(u1,u2,u3,u4)ᵀ = vec(G(u))` for the Golden
/// codeword
///
/// ```text
///            ⎡ α(u1 + θu4)          φ^{1/2} σ(α(u2 + θu3)) ⎤
/// G(u) = 1/√5⎣ φ^{1/2} α(u2 + θu3)  σ(α(u1 + θu4))          ⎦
/// ```
///
/// with column-major stacking. Its columns are orthonormal.
pub fn golden_generator() -> DMatrix<C64> {
    golden_generator_from(&GoldenParams::standard())
}

pub(crate) fn golden_generator_from(p: &GoldenParams) -> DMatrix<C64> {
    let s = p.scale;
    let ph = p.phi_sqrt();
    let a = p.alpha * s;
    let sa = p.sigma_alpha * s;
    let mut g = DMatrix::from_element(4, 4, ZERO);
    // vec order: (1,1), (2,1), (1,2), (2,2)
    g[(0, 0)] = a;
    g[(0, 3)] = a * p.theta;
    g[(1, 1)] = ph * a;
    g[(1, 2)] = ph * a * p.theta;
    g[(2, 1)] = ph * sa;
    g[(2, 2)] = ph * sa * p.sigma_theta;
    g[(3, 0)] = sa;
    g[(3, 3)] = sa * p.sigma_theta;
    g
}
