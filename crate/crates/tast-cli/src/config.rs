//! Flat `key = value` experiment manifests.
//!
//! One assignment per line, `#` starts a comment. Lists are comma
//! separated. A file containing lines that start with `#@` (a CSV written by
//! `tast run`) is read from those lines only, so a dataset can be re-run
//! from its own header.

use std::fmt;
use std::str::FromStr;

use tast::algebra::{default_diophantine, DiophantineParams};
use tast::{make_constellation, CodeFamily, CodeParams, Constellation, ConstellationKind, C64};

use crate::error::CliError;

/// Prefix of embedded configuration lines in CSV output.
pub const EMBED_PREFIX: &str = "#@";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    Ml,
    Sphere,
    Fano,
    Babai,
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecoderKind::Ml => "ml",
            DecoderKind::Sphere => "sphere",
            DecoderKind::Fano => "fano",
            DecoderKind::Babai => "babai",
        })
    }
}

impl FromStr for DecoderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ml" => Ok(DecoderKind::Ml),
            "sphere" => Ok(DecoderKind::Sphere),
            "fano" => Ok(DecoderKind::Fano),
            "babai" => Ok(DecoderKind::Babai),
            other => Err(format!(
                "unknown decoder {other:?} (ml, sphere, fano, babai)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Noise, QR and decoding.
    Full,
    /// Channel draws and QR flop counts only.
    QrOnly,
    /// Algebraic certification of each tree code in the sweep.
    Certify,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Full => "full",
            Mode::QrOnly => "qr_only",
            Mode::Certify => "certify",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full" => Ok(Mode::Full),
            "qr_only" => Ok(Mode::QrOnly),
            "certify" => Ok(Mode::Certify),
            other => Err(format!("unknown mode {other:?} (full, qr_only, certify)")),
        }
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub code_family: Vec<CodeFamily>,
    pub m: usize,
    pub n: usize,
    pub l: Vec<usize>,
    pub constellation: ConstellationKind,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub decoder: DecoderKind,
    /// Fano bias per tree level, in units of the noise variance.
    pub fano_bias: f64,
    /// Fano threshold step, in units of the noise variance.
    pub fano_delta: f64,
    pub seed: u64,
    pub mode: Mode,
    pub tail_cut: bool,
    /// Overrides of the default Diophantine pair.
    pub theta: Option<C64>,
    pub phi: Option<C64>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            code_family: vec![CodeFamily::Tree, CodeFamily::Original],
            m: 2,
            n: 2,
            l: vec![0, 1, 2, 4],
            constellation: ConstellationKind::Qam(4),
            snr_db: vec![10.0],
            trials: 1000,
            decoder: DecoderKind::Fano,
            fano_bias: 1.0,
            fano_delta: 1.0,
            seed: 1,
            mode: Mode::Full,
            tail_cut: false,
            theta: None,
            phi: None,
        }
    }
}

/// Every key the manifest accepts, in output order.
pub const KEYS: [&str; 15] = [
    "code_family",
    "M",
    "N",
    "L",
    "constellation",
    "snr_db",
    "trials",
    "decoder",
    "fano_bias",
    "fano_delta",
    "seed",
    "mode",
    "tail_cut",
    "theta",
    "phi",
];

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, CliError>
where
    T::Err: fmt::Display,
{
    let items: Result<Vec<T>, CliError> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| CliError::Config(format!("{key}: {s:?}: {e}")))
        })
        .collect();
    let items = items?;
    if items.is_empty() {
        return Err(CliError::Config(format!("{key}: empty list")));
    }
    Ok(items)
}

fn scalar<T: FromStr>(key: &str, v: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    v.trim()
        .parse::<T>()
        .map_err(|e| CliError::Config(format!("{key}: {v:?}: {e}")))
}

/// `re,im` or a bare real number.
fn complex(key: &str, v: &str) -> Result<C64, CliError> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [re] => Ok(C64::new(scalar(key, re)?, 0.0)),
        [re, im] => Ok(C64::new(scalar(key, re)?, scalar(key, im)?)),
        _ => Err(CliError::Config(format!(
            "{key}: expected re or re,im, got {v:?}"
        ))),
    }
}

fn format_complex(z: C64) -> String {
    format!("{:?},{:?}", z.re, z.im)
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

impl Config {
    /// Applies one assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        match key {
            "code_family" => self.code_family = list(key, v)?,
            "M" => self.m = scalar(key, v)?,
            "N" => self.n = scalar(key, v)?,
            "L" => self.l = list(key, v)?,
            "constellation" => self.constellation = scalar(key, v)?,
            "snr_db" => self.snr_db = list(key, v)?,
            "trials" => self.trials = scalar(key, v)?,
            "decoder" => self.decoder = scalar(key, v)?,
            "fano_bias" => self.fano_bias = scalar(key, v)?,
            "fano_delta" => self.fano_delta = scalar(key, v)?,
            "seed" => self.seed = scalar(key, v)?,
            "mode" => self.mode = scalar(key, v)?,
            "tail_cut" => self.tail_cut = scalar(key, v)?,
            "theta" => {
                self.theta = if v == "default" {
                    None
                } else {
                    Some(complex(key, v)?)
                }
            }
            "phi" => {
                self.phi = if v == "default" {
                    None
                } else {
                    Some(complex(key, v)?)
                }
            }
            other => return Err(CliError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Parses a manifest on top of the defaults.
    pub fn parse(text: &str) -> Result<Config, CliError> {
        let mut cfg = Config::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Applies the assignments in `text` to `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        let embedded = text.lines().any(|l| l.starts_with(EMBED_PREFIX));
        for (no, raw) in text.lines().enumerate() {
            let line = if embedded {
                match raw.strip_prefix(EMBED_PREFIX) {
                    Some(rest) => rest,
                    None => continue,
                }
            } else {
                raw.split('#').next().unwrap_or("")
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected key = value", no + 1))
            })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// Every key with its resolved value, in [`KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let opt = |z: Option<C64>| z.map_or_else(|| "default".to_string(), format_complex);
        vec![
            ("code_family", join(&self.code_family)),
            ("M", self.m.to_string()),
            ("N", self.n.to_string()),
            ("L", join(&self.l)),
            ("constellation", self.constellation.to_string()),
            (
                "snr_db",
                self.snr_db
                    .iter()
                    .map(|s| format!("{s:?}"))
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("trials", self.trials.to_string()),
            ("decoder", self.decoder.to_string()),
            ("fano_bias", format!("{:?}", self.fano_bias)),
            ("fano_delta", format!("{:?}", self.fano_delta)),
            ("seed", self.seed.to_string()),
            ("mode", self.mode.to_string()),
            ("tail_cut", self.tail_cut.to_string()),
            ("theta", opt(self.theta)),
            ("phi", opt(self.phi)),
        ]
    }

    /// Manifest text that [`Config::parse`] maps back to `self`.
    pub fn to_manifest(&self, prefix: &str) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{prefix}{k} = {v}\n"))
            .collect()
    }

    /// Rejects values the experiment cannot run with.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.m == 0 || self.n == 0 {
            return bad("M and N must be at least 1".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.fano_bias > 0.0 && self.fano_delta > 0.0) {
            return bad("fano_bias and fano_delta must be positive".into());
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("snr_db values must be finite".into());
        }
        if self.tail_cut && self.code_family.contains(&CodeFamily::Original) {
            return bad("tail_cut applies to tree_tast only".into());
        }
        make_constellation(self.constellation).map_err(|e| CliError::Config(e.to_string()))?;
        for &l in &self.l {
            for &fam in &self.code_family {
                self.code_params(fam, l)?;
            }
        }
        Ok(())
    }

    pub fn constellation(&self) -> Result<Constellation, CliError> {
        make_constellation(self.constellation).map_err(|e| CliError::Config(e.to_string()))
    }

    fn diophantine(&self) -> Result<DiophantineParams, CliError> {
        let base = default_diophantine(self.m).map_err(|e| CliError::Config(e.to_string()))?;
        let theta = self.theta.unwrap_or(base.theta());
        let phi = self.phi.unwrap_or(base.phi());
        DiophantineParams::new(self.m, theta, phi).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Code for one point of the sweep.
    pub fn code_params(&self, family: CodeFamily, l: usize) -> Result<CodeParams, CliError> {
        let cfg = |e: tast::Error| CliError::Config(e.to_string());
        let base = match family {
            CodeFamily::Tree => CodeParams::tree(self.m, self.n, l),
            CodeFamily::Original => CodeParams::original(self.m, self.n, l),
        }
        .map_err(cfg)?;
        let p = base
            .with_constellation(self.constellation()?)
            .with_diophantine(self.diophantine()?)
            .map_err(cfg)?;
        if family == CodeFamily::Tree {
            p.with_tail_cut(self.tail_cut).map_err(cfg)
        } else {
            Ok(p)
        }
    }
}
