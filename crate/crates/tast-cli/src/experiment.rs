//! Monte Carlo sweeps.
//!
//! Every trial draws its channel, data and noise from seeds derived from the
//! master seed and the trial number only, so all points of a sweep see the
//! same channel realizations. Trials run in parallel; results are collected
//! in trial order and reduced sequentially, which keeps the output
//! byte-identical across runs and thread counts.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use tast::channel::{
    composite_matrix, derive_seed, random_symbols, sample_channel, snr_to_noise_var, transmit,
    SeedRole,
};
use tast::decoders::{
    babai_decode, fano_decode, ml_exhaustive, sphere_decode, DecoderReport, DetectionProblem,
    FanoParams, RadiusPolicy, ML_SEARCH_LIMIT,
};
use tast::encoder::{code_rate, equivalent_matrix, CodeParams};
use tast::qr::{dense_qr, givens_qr, predicted_flops, QrResult};
use tast::CodeFamily;

use crate::config::{Config, DecoderKind, Mode};
use crate::error::CliError;

/// Bootstrap resamples for the confidence interval on mean node counts.
pub const BOOTSTRAP_RESAMPLES: usize = 2000;

/// One aggregated sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub code_family: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub rate: String,
    pub snr_db: Option<f64>,
    pub noise_var: Option<f64>,
    pub decoder: Option<String>,
    pub fano_bias: Option<f64>,
    pub fano_delta: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    pub mean_nodes: Option<f64>,
    pub median_nodes: Option<f64>,
    pub nodes_ci_lo: Option<f64>,
    pub nodes_ci_hi: Option<f64>,
    pub mean_qr_flops: f64,
    pub qr_flops_per_symbol: f64,
    pub predicted_flops_per_symbol: f64,
    pub ser: Option<f64>,
    pub fer: Option<f64>,
}

/// What one trial measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub nodes: u64,
    pub flops: u64,
    pub symbol_errors: usize,
}

/// Tree codes use the structure-aware QR; original codes the dense one.
pub fn factorize(
    params: &CodeParams,
    h: &nalgebra::DMatrix<tast::C64>,
) -> Result<QrResult, CliError> {
    let c = composite_matrix(h, &equivalent_matrix(params))?;
    Ok(match params.family() {
        CodeFamily::Tree => givens_qr(&c.matrix, &c.mask)?,
        CodeFamily::Original => dense_qr(&c.matrix)?,
    })
}

fn decode(
    cfg: &Config,
    problem: &DetectionProblem,
    noise_var: f64,
) -> Result<DecoderReport, CliError> {
    Ok(match cfg.decoder {
        DecoderKind::Ml => ml_exhaustive(problem)?,
        DecoderKind::Sphere => sphere_decode(problem, RadiusPolicy::Infinite),
        DecoderKind::Fano => fano_decode(
            problem,
            FanoParams::scaled(cfg.fano_bias, cfg.fano_delta, noise_var),
        )?,
        DecoderKind::Babai => babai_decode(problem),
    })
}

/// Transmits and decodes one codeword.
pub fn run_trial(
    cfg: &Config,
    params: &CodeParams,
    snr_db: f64,
    trial: u64,
) -> Result<TrialOutcome, CliError> {
    let g = equivalent_matrix(params);
    let noise_var = snr_to_noise_var(&g, snr_db);
    let h = sample_channel(
        derive_seed(cfg.seed, trial, SeedRole::Channel),
        params.n(),
        params.m(),
    )
    .h;
    let (idx, u) = random_symbols(
        params.constellation(),
        params.k(),
        derive_seed(cfg.seed, trial, SeedRole::Data),
    );
    let rx = transmit(
        params,
        &h,
        &u,
        noise_var,
        derive_seed(cfg.seed, trial, SeedRole::Noise),
    )?;
    let qr = factorize(params, &h)?;
    let problem = DetectionProblem::from_qr(&qr, &rx.y, params.constellation().clone())?;
    let rep = decode(cfg, &problem, noise_var)?;
    let symbol_errors = rep.indices.iter().zip(&idx).filter(|(a, b)| a != b).count();
    Ok(TrialOutcome {
        nodes: rep.nodes_visited,
        flops: qr.flops(),
        symbol_errors,
    })
}

fn qr_trial(cfg: &Config, params: &CodeParams, trial: u64) -> Result<u64, CliError> {
    let h = sample_channel(
        derive_seed(cfg.seed, trial, SeedRole::Channel),
        params.n(),
        params.m(),
    )
    .h;
    Ok(factorize(params, &h)?.flops())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Percentile bootstrap 95% interval for the mean.
pub fn bootstrap_mean_ci(xs: &[f64], seed: u64) -> (f64, f64) {
    let mut rng = tast::channel::seeded_rng(seed);
    let n = xs.len();
    let mut means: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..n).map(|_| xs[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let at = |q: f64| means[((q * (BOOTSTRAP_RESAMPLES - 1) as f64).round()) as usize];
    (at(0.025), at(0.975))
}

fn base_row(cfg: &Config, params: &CodeParams, mean_flops: f64) -> Row {
    Row {
        code_family: params.family().to_string(),
        m: params.m(),
        n: params.n(),
        l: params.l(),
        k: params.k(),
        t: params.t(),
        rate: code_rate(params).to_string(),
        snr_db: None,
        noise_var: None,
        decoder: None,
        fano_bias: None,
        fano_delta: None,
        trials: cfg.trials,
        seed: cfg.seed,
        mean_nodes: None,
        median_nodes: None,
        nodes_ci_lo: None,
        nodes_ci_hi: None,
        mean_qr_flops: mean_flops,
        qr_flops_per_symbol: mean_flops / params.k() as f64,
        predicted_flops_per_symbol: predicted_flops(params.m(), params.n(), params.k()),
        ser: None,
        fer: None,
    }
}

/// Runs a `full` or `qr_only` sweep.
pub fn run_experiment(cfg: &Config) -> Result<Vec<Row>, CliError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let trials = cfg.trials as u64;
    let mut point = 0u64;
    for &family in &cfg.code_family {
        for &l in &cfg.l {
            let params = cfg.code_params(family, l)?;
            match cfg.mode {
                Mode::QrOnly => {
                    let flops: Result<Vec<u64>, CliError> = (0..trials)
                        .into_par_iter()
                        .map(|t| qr_trial(cfg, &params, t))
                        .collect();
                    let flops: Vec<f64> = flops?.into_iter().map(|f| f as f64).collect();
                    rows.push(base_row(cfg, &params, mean(&flops)));
                }
                Mode::Full => {
                    if cfg.decoder == DecoderKind::Ml {
                        let size =
                            (params.constellation().len() as u128).checked_pow(params.k() as u32);
                        if size.is_none_or(|s| s > ML_SEARCH_LIMIT) {
                            return Err(CliError::Refused(format!(
                                "exhaustive ML over {} symbols of {} exceeds {ML_SEARCH_LIMIT} candidates",
                                params.k(),
                                params.constellation().kind()
                            )));
                        }
                    }
                    for &snr in &cfg.snr_db {
                        let out: Result<Vec<TrialOutcome>, CliError> = (0..trials)
                            .into_par_iter()
                            .map(|t| run_trial(cfg, &params, snr, t))
                            .collect();
                        let out = out?;
                        let nodes: Vec<f64> = out.iter().map(|o| o.nodes as f64).collect();
                        let flops: Vec<f64> = out.iter().map(|o| o.flops as f64).collect();
                        let sym_err: usize = out.iter().map(|o| o.symbol_errors).sum();
                        let frame_err = out.iter().filter(|o| o.symbol_errors > 0).count();
                        let (lo, hi) = bootstrap_mean_ci(
                            &nodes,
                            derive_seed(cfg.seed, point, SeedRole::Resample),
                        );
                        let fano = cfg.decoder == DecoderKind::Fano;
                        rows.push(Row {
                            snr_db: Some(snr),
                            noise_var: Some(snr_to_noise_var(&equivalent_matrix(&params), snr)),
                            decoder: Some(cfg.decoder.to_string()),
                            fano_bias: fano.then_some(cfg.fano_bias),
                            fano_delta: fano.then_some(cfg.fano_delta),
                            mean_nodes: Some(mean(&nodes)),
                            median_nodes: Some(median(&nodes)),
                            nodes_ci_lo: Some(lo),
                            nodes_ci_hi: Some(hi),
                            ser: Some(sym_err as f64 / (out.len() * params.k()) as f64),
                            fer: Some(frame_err as f64 / out.len() as f64),
                            ..base_row(cfg, &params, mean(&flops))
                        });
                        point += 1;
                    }
                }
                Mode::Certify => {
                    return Err(CliError::Config(
                        "certify mode writes a certification report".into(),
                    ));
                }
            }
        }
    }
    Ok(rows)
}

/// Writes `rows` as CSV preceded by the embedded configuration.
pub fn write_csv<W: std::io::Write, S: Serialize>(
    cfg: &Config,
    rows: &[S],
    mut out: W,
) -> Result<(), CliError> {
    out.write_all(
        cfg.to_manifest(&format!("{} ", crate::config::EMBED_PREFIX))
            .as_bytes(),
    )?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
