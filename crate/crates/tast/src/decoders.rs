//! Tree-search detection on the triangular system `z ≈ R u`.
//!
//! The search tree has depth `K`. Level 1 fixes `u_K` (the bottom row of
//! `R`), level 2 fixes `u_{K-1}`, and so on up to `u_1`, so every partial
//! path can be scored by back-substitution. Each node has one child per
//! constellation point; the search runs over complex symbols directly.
//!
//! All decoders break ties by the constellation's canonical point order.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::algebra::{Constellation, C64, ZERO};
use crate::error::{Error, Result};
use crate::qr::QrResult;

/// Largest candidate count [`ml_exhaustive`] will enumerate.
pub const ML_SEARCH_LIMIT: u128 = 1 << 20;

/// Triangular detection problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionProblem {
    r: DMatrix<C64>,
    z: DVector<C64>,
    constellation: Constellation,
}

impl DetectionProblem {
    pub fn new(r: DMatrix<C64>, z: DVector<C64>, constellation: Constellation) -> Result<Self> {
        let k = r.ncols();
        if r.nrows() != k || z.len() != k {
            return Err(Error::Shape(format!(
                "R is {} x {}, z has length {}",
                r.nrows(),
                k,
                z.len()
            )));
        }
        Ok(DetectionProblem {
            r,
            z,
            constellation,
        })
    }

    /// Builds the problem from a factorization of the composite matrix and
    /// the received vector `y`: `z` is the first `K` entries of `Qᴴ y`.
    pub fn from_qr(qr: &QrResult, y: &DVector<C64>, constellation: Constellation) -> Result<Self> {
        let z = qr.rotated_observation(y)?;
        DetectionProblem::new(qr.r().clone(), z, constellation)
    }

    pub fn k(&self) -> usize {
        self.r.ncols()
    }

    pub fn r(&self) -> &DMatrix<C64> {
        &self.r
    }

    pub fn z(&self) -> &DVector<C64> {
        &self.z
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    /// `‖z − R u‖²` for constellation indices `idx`.
    pub fn metric(&self, idx: &[usize]) -> f64 {
        let k = self.k();
        let mut total = 0.0;
        for row in 0..k {
            let acc = self.interference_free(row, idx)
                - self.r[(row, row)] * self.constellation.point(idx[row]);
            total += acc.norm_sqr();
        }
        total
    }

    /// Residual seen at `row` once symbols `row+1..K` are fixed.
    fn interference_free(&self, row: usize, idx: &[usize]) -> C64 {
        (row + 1..self.k()).fold(self.z[row], |acc, col| {
            acc - self.r[(row, col)] * self.constellation.point(idx[col])
        })
    }

    /// Children of the node at `row`, as `(increment, point index)` sorted by
    /// increment then index.
    fn ranked_children(&self, row: usize, idx: &[usize]) -> Vec<(f64, usize)> {
        let b = self.interference_free(row, idx);
        let d = self.r[(row, row)];
        let mut kids: Vec<(f64, usize)> = self
            .constellation
            .points()
            .iter()
            .enumerate()
            .map(|(i, p)| ((b - d * p).norm_sqr(), i))
            .collect();
        kids.sort_by(|x, y| {
            x.0.partial_cmp(&y.0)
                .unwrap_or(Ordering::Equal)
                .then(x.1.cmp(&y.1))
        });
        kids
    }
}

/// Decoder output and instrumentation.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderReport {
    /// Constellation indices of the decision, `u_hat[k]` for `u_{k+1}`.
    pub indices: Vec<usize>,
    pub u_hat: Vec<C64>,
    /// `‖z − R û‖²`.
    pub metric: f64,
    pub nodes_visited: u64,
    /// Whether the decision is guaranteed maximum likelihood.
    pub is_ml: bool,
}

impl DecoderReport {
    fn new(problem: &DetectionProblem, indices: Vec<usize>, nodes: u64, is_ml: bool) -> Self {
        let u_hat = indices
            .iter()
            .map(|&i| problem.constellation.point(i))
            .collect();
        let metric = problem.metric(&indices);
        DecoderReport {
            indices,
            u_hat,
            metric,
            nodes_visited: nodes,
            is_ml,
        }
    }
}

/// Lexicographic comparison starting from `u_1`.
fn lex_less(a: &[usize], b: &[usize]) -> bool {
    a.iter()
        .zip(b)
        .find(|(x, y)| x != y)
        .is_some_and(|(x, y)| x < y)
}

/// Number of nodes in the full tree, `Σ_{d=1}^{K} |C|^d`.
pub fn full_tree_nodes(size: usize, k: usize) -> u128 {
    let q = size as u128;
    let mut total = 0u128;
    let mut level = 1u128;
    for _ in 0..k {
        level = level.saturating_mul(q);
        total = total.saturating_add(level);
    }
    total
}

/// Brute-force minimum of `‖z − R u‖²`; ties go to the lexicographically
/// smallest index vector. Reports the full tree size as `nodes_visited`.
pub fn ml_exhaustive(problem: &DetectionProblem) -> Result<DecoderReport> {
    let k = problem.k();
    let q = problem.constellation.len();
    let size = (q as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if size > ML_SEARCH_LIMIT {
        return Err(Error::Refused {
            size,
            limit: ML_SEARCH_LIMIT,
        });
    }
    let mut idx = vec![0usize; k];
    let mut best = idx.clone();
    let mut best_metric = f64::INFINITY;
    loop {
        let m = problem.metric(&idx);
        if m < best_metric {
            best_metric = m;
            best.copy_from_slice(&idx);
        }
        // Odometer with u_1 most significant, so candidates come in
        // lexicographic order and the first minimum is kept.
        let mut pos = k;
        loop {
            if pos == 0 {
                let nodes = full_tree_nodes(q, k) as u64;
                return Ok(DecoderReport::new(problem, best, nodes, true));
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < q {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// How the sphere decoder picks its starting radius.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RadiusPolicy {
    /// Start unbounded; the first leaf reached (the Babai point) sets it.
    #[default]
    Infinite,
    /// Start from a fixed squared radius; falls back to unbounded if the
    /// sphere turns out empty.
    Fixed(f64),
}

/// Depth-first Schnorr–Euchner sphere decoder. Exact ML on completion.
///
/// Every child metric evaluated counts as one visited node.
pub fn sphere_decode(problem: &DetectionProblem, policy: RadiusPolicy) -> DecoderReport {
    let radius = match policy {
        RadiusPolicy::Infinite => f64::INFINITY,
        RadiusPolicy::Fixed(r) => r,
    };
    let mut search = Sphere {
        problem,
        idx: vec![0; problem.k()],
        best: None,
        best_metric: radius,
        nodes: 0,
    };
    if problem.k() > 0 {
        search.descend(problem.k() - 1, 0.0);
    }
    if search.best.is_none() {
        // Empty sphere: restart unbounded, keeping the node count.
        let nodes = search.nodes;
        let mut report = sphere_decode(problem, RadiusPolicy::Infinite);
        report.nodes_visited += nodes;
        return report;
    }
    let best = search.best.take().unwrap_or_default();
    DecoderReport::new(problem, best, search.nodes, true)
}

struct Sphere<'a> {
    problem: &'a DetectionProblem,
    idx: Vec<usize>,
    best: Option<Vec<usize>>,
    best_metric: f64,
    nodes: u64,
}

impl Sphere<'_> {
    fn descend(&mut self, row: usize, partial: f64) {
        let kids = self.problem.ranked_children(row, &self.idx);
        self.nodes += kids.len() as u64;
        for (inc, point) in kids {
            let m = partial + inc;
            // Equal metrics are still explored so that exact ties resolve
            // lexicographically, matching the exhaustive oracle.
            if m > self.best_metric {
                break;
            }
            self.idx[row] = point;
            if row == 0 {
                let better = match &self.best {
                    None => true,
                    Some(b) => m < self.best_metric || lex_less(&self.idx, b),
                };
                if better {
                    self.best_metric = m;
                    self.best = Some(self.idx.clone());
                }
            } else {
                self.descend(row - 1, m);
            }
        }
    }
}

/// Successive interference cancellation with slicing (zero-forcing DFE).
pub fn babai_decode(problem: &DetectionProblem) -> DecoderReport {
    let k = problem.k();
    let mut idx = vec![0usize; k];
    for row in (0..k).rev() {
        let b = problem.interference_free(row, &idx);
        let d = problem.r[(row, row)];
        idx[row] = if d == ZERO {
            0
        } else {
            problem.constellation.nearest(b / d)
        };
    }
    DecoderReport::new(problem, idx, k as u64, false)
}

/// Fano search parameters, in squared-distance units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanoParams {
    /// Per-level bias `b`.
    pub bias: f64,
    /// Threshold step `Δ`.
    pub step: f64,
}

impl FanoParams {
    /// Scales noise-normalized parameters by the noise variance.
    pub fn scaled(bias: f64, step: f64, noise_var: f64) -> Self {
        FanoParams {
            bias: bias * noise_var,
            step: step * noise_var,
        }
    }
}

/// Sequential Fano decoder.
///
/// The path metric to maximize is `F = b·depth − Σ |e_level|²`, i.e. the
/// partial squared distance minus the accumulated bias, negated. Each forward
/// or backward move counts as one visited node.
pub fn fano_decode(problem: &DetectionProblem, params: FanoParams) -> Result<DecoderReport> {
    if !(params.bias > 0.0 && params.step > 0.0) {
        return Err(Error::InvalidInput(format!(
            "Fano bias and step must be positive, got {} and {}",
            params.bias, params.step
        )));
    }
    let k = problem.k();
    if k == 0 {
        return Ok(DecoderReport::new(problem, Vec::new(), 0, false));
    }
    let delta = params.step;
    let mut idx = vec![0usize; k];
    // frames[d] describes the node at depth d (0 = root): its ranked
    // children, the rank of the child currently explored, and its metric.
    struct Frame {
        kids: Vec<(f64, usize)>,
        next: usize,
        metric: f64,
    }
    let row_of = |depth: usize| k - 1 - depth;
    let mut frames = vec![Frame {
        kids: problem.ranked_children(row_of(0), &idx),
        next: 0,
        metric: 0.0,
    }];
    let mut threshold = 0.0f64;
    let mut nodes = 0u64;

    loop {
        let depth = frames.len() - 1;
        let cur_metric = frames[depth].metric;
        let f = &frames[depth];
        let (inc, point) = f.kids[f.next];
        let fwd = cur_metric + params.bias - inc;

        if fwd >= threshold {
            // Move forward.
            nodes += 1;
            let row = row_of(depth);
            idx[row] = point;
            if depth + 1 == k {
                return Ok(DecoderReport::new(problem, idx, nodes, false));
            }
            // First visit under this threshold: tighten.
            if cur_metric < threshold + delta {
                threshold += ((fwd - threshold) / delta).floor() * delta;
            }
            frames.push(Frame {
                kids: problem.ranked_children(row - 1, &idx),
                next: 0,
                metric: fwd,
            });
            continue;
        }

        // Look back.
        loop {
            let depth = frames.len() - 1;
            if depth == 0 || frames[depth - 1].metric < threshold {
                // Cannot retreat: loosen and retry the best child of the
                // current node.
                threshold -= delta;
                frames[depth].next = 0;
                break;
            }
            frames.pop();
            nodes += 1;
            let parent = frames.last_mut().expect("depth > 0");
            if parent.next + 1 < parent.kids.len() {
                parent.next += 1;
                break;
            }
            // That was the worst child; keep backing up.
        }
    }
}
