use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tast::channel::{derive_seed, sample_channel, SeedRole};
use tast::encoder::{encode, equivalent_matrix};
use tast::qr::predicted_flops;
use tast::C64;
use tast_cli::certify::{certify, describe, CertRow};
use tast_cli::config::{Config, Mode};
use tast_cli::experiment::{factorize, run_experiment, write_csv};
use tast_cli::plot::{plot_file, PlotSpec};
use tast_cli::CliError;

#[derive(Parser)]
#[command(
    name = "tast",
    version,
    about = "Tree-structured TAST codes: encoding, simulation and certification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a codeword or the equivalent code matrix as CSV.
    Encode(EncodeArgs),
    /// Run a Monte Carlo sweep and write a CSV dataset.
    Run(RunArgs),
    /// Render a dataset as an SVG line plot.
    Plot(PlotArgs),
    /// Certify diversity and structure of codes.
    Certify(CertifyArgs),
    /// Closed-form QR cost per decoded symbol, with measured counts.
    PredictFlops(FlopArgs),
}

/// Manifest plus `key=value` overrides shared by `run` and `certify`.
#[derive(Args)]
struct ConfigArgs {
    /// Manifest file (`key = value` lines) or a CSV written by `run`.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a manifest key; repeatable, e.g. `--set L=0,2,4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<Config, CliError> {
        let mut cfg = match &self.config {
            Some(path) => Config::parse(&std::fs::read_to_string(path)?)?,
            None => Config::default(),
        };
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(k.trim(), v)?;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Constellation indices of the information symbols, comma separated.
    #[arg(long, conflicts_with = "matrix")]
    indices: Option<String>,
    /// Print the equivalent code matrix instead of a codeword.
    #[arg(long)]
    matrix: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Dataset written by `run`.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
    /// Preset layout: nodes-vs-k, nodes-vs-snr or flops-vs-k.
    #[arg(long)]
    figure: Option<String>,
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    y: Option<String>,
    #[arg(long)]
    log_x: bool,
    #[arg(long)]
    log_y: bool,
    #[arg(long)]
    title: Option<String>,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Fall back to this many random differences when the exhaustive search
    /// is too large. Sampled results are never reported as certified.
    #[arg(long)]
    samples: Option<usize>,
    /// Also write the report rows as CSV.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FlopArgs {
    #[arg(long, short = 'M', default_value_t = 2)]
    m: usize,
    #[arg(long, short = 'N', default_value_t = 2)]
    n: usize,
    /// Block lengths `K`; multiples of `M` of at least `M²` are also measured.
    #[arg(long, short = 'K', value_delimiter = ',', default_values_t = [4usize, 8, 12, 20, 36])]
    k: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn cmd_encode(a: &EncodeArgs) -> Result<(), CliError> {
    let cfg = a.config.resolve()?;
    cfg.validate()?;
    let family = cfg.code_family[0];
    let params = cfg.code_params(family, cfg.l[0])?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(output(&a.out)?);
    w.write_record(["kind", "row", "col", "re", "im"])?;
    let mut emit = |kind: &str, m: &nalgebra::DMatrix<C64>| -> Result<(), CliError> {
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let z = m[(r, c)];
                w.write_record([
                    kind,
                    &r.to_string(),
                    &c.to_string(),
                    &format!("{:?}", z.re),
                    &format!("{:?}", z.im),
                ])?;
            }
        }
        Ok(())
    };
    if a.matrix {
        emit("G", equivalent_matrix(&params).matrix())?;
    } else {
        let cons = params.constellation();
        let idx: Vec<usize> = match &a.indices {
            Some(s) => s
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .ok()
                        .filter(|&i| i < cons.len())
                        .ok_or_else(|| CliError::Config(format!("bad symbol index {t:?}")))
                })
                .collect::<Result<_, _>>()?,
            None => vec![0; params.k()],
        };
        let u: Vec<C64> = idx.iter().map(|&i| cons.point(i)).collect();
        emit("S", encode(&params, &u)?.matrix())?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_run(a: &RunArgs) -> Result<(), CliError> {
    let cfg = a.config.resolve()?;
    let out = output(&a.out)?;
    if cfg.mode == Mode::Certify {
        let rows = certify_sweep(&cfg, None)?;
        write_csv(&cfg, &rows, out)?;
        return certification_status(&rows);
    }
    let rows = run_experiment(&cfg)?;
    write_csv(&cfg, &rows, out)
}

fn certify_sweep(cfg: &Config, samples: Option<usize>) -> Result<Vec<CertRow>, CliError> {
    cfg.validate()?;
    let cons = cfg.constellation()?;
    let mut rows = Vec::new();
    for &family in &cfg.code_family {
        for &l in &cfg.l {
            let params = cfg.code_params(family, l)?;
            let row = certify(
                &params,
                &cons,
                samples,
                derive_seed(cfg.seed, l as u64, SeedRole::Data),
            )?;
            eprintln!("{}", describe(&row));
            rows.push(row);
        }
    }
    Ok(rows)
}

fn certification_status(rows: &[CertRow]) -> Result<(), CliError> {
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| r.verdict == "FAIL")
        .map(|r| format!("{} M={} L={}", r.code_family, r.m, r.l))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Certification(failed.join("; ")))
    }
}

fn cmd_certify(a: &CertifyArgs) -> Result<(), CliError> {
    let mut cfg = a.config.resolve()?;
    // Certification defaults differ from simulation defaults: BPSK
    // differences over tree codes only.
    if !a.config.set.iter().any(|s| s.starts_with("constellation")) && a.config.config.is_none() {
        cfg.set("constellation", "bpsk")?;
    }
    if !a.config.set.iter().any(|s| s.starts_with("code_family")) && a.config.config.is_none() {
        cfg.set("code_family", "tree_tast")?;
    }
    cfg.mode = Mode::Certify;
    let rows = certify_sweep(&cfg, a.samples)?;
    if let Some(path) = &a.out {
        write_csv(&cfg, &rows, std::fs::File::create(path)?)?;
    }
    certification_status(&rows)
}

fn cmd_plot(a: &PlotArgs) -> Result<(), CliError> {
    let mut spec = match &a.figure {
        Some(name) => PlotSpec::preset(name)?,
        None => PlotSpec {
            x: String::new(),
            y: String::new(),
            log_x: false,
            log_y: false,
            title: String::new(),
        },
    };
    if let Some(x) = &a.x {
        spec.x = x.clone();
    }
    if let Some(y) = &a.y {
        spec.y = y.clone();
    }
    spec.log_x |= a.log_x;
    spec.log_y |= a.log_y;
    if let Some(t) = &a.title {
        spec.title = t.clone();
    }
    if spec.x.is_empty() || spec.y.is_empty() {
        return Err(CliError::Config("give --figure or both --x and --y".into()));
    }
    if spec.title.is_empty() {
        spec.title = format!("{} vs. {}", spec.y, spec.x);
    }
    let n = plot_file(&a.input, &a.output, &spec)?;
    eprintln!("wrote {} ({n} series)", a.output.display());
    Ok(())
}

fn cmd_predict(a: &FlopArgs) -> Result<(), CliError> {
    if a.m == 0 || a.n < a.m {
        return Err(CliError::Config("need 1 <= M <= N".into()));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(std::io::stdout().lock());
    w.write_record([
        "M",
        "N",
        "K",
        "predicted_per_symbol",
        "measured_total",
        "measured_per_symbol",
    ])?;
    for &k in &a.k {
        let predicted = predicted_flops(a.m, a.n, k);
        let measured = if k % a.m == 0 && k >= a.m * a.m {
            let params = tast::CodeParams::tree(a.m, a.n, k / a.m - a.m)?;
            let h = sample_channel(derive_seed(a.seed, 0, SeedRole::Channel), a.n, a.m).h;
            Some(factorize(&params, &h)?.flops())
        } else {
            None
        };
        w.write_record([
            a.m.to_string(),
            a.n.to_string(),
            k.to_string(),
            format!("{predicted:?}"),
            measured.map_or(String::new(), |f| f.to_string()),
            measured.map_or(String::new(), |f| format!("{:?}", f as f64 / k as f64)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Encode(a) => cmd_encode(a),
        Command::Run(a) => cmd_run(a),
        Command::Plot(a) => cmd_plot(a),
        Command::Certify(a) => cmd_certify(a),
        Command::PredictFlops(a) => cmd_predict(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tast: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
