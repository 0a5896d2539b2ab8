use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use cbir_core::eval::GroundTruth;
use cbir_core::feedback::RocchioParams;
use cbir_core::image::{cdf, histogram, to_grayscale};
use cbir_core::index::QueryOptions;
use cbir_core::{
    build_index, evaluate_corpus, extract_signature, load_image, load_index, save_index, Error,
    ExtractionConfig, Metric,
};
use cbir_service::{AppState, ServiceConfig};
use clap::{Parser, Subcommand};

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_DOMAIN: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "cbir", version, about = "Content-based image retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract signatures for every image under a directory and save the index.
    Index {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Extraction config as JSON; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Rank the indexed images against a query image.
    Query {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        image: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value = "l2")]
        metric: Metric,
        /// Drop hits scoring worse than this value.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Score every ground-truth query at k and print precision and recall.
    Evaluate {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value = "l2")]
        metric: Metric,
        /// JSON report path; defaults to `<index stem>.eval.json` beside the index.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Serve the HTTP API over a saved index.
    Serve {
        #[arg(long, env = "CBIR_INDEX")]
        index: PathBuf,
        #[arg(long, env = "CBIR_LISTEN", default_value = "127.0.0.1:8080")]
        listen: String,
        /// Bearer token required on every endpoint but /api/health.
        #[arg(long, env = "CBIR_TOKEN", hide_env_values = true)]
        token: Option<String>,
        /// Idle seconds before a feedback session is dropped.
        #[arg(long, default_value_t = 1800)]
        session_ttl: u64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.75)]
        beta: f64,
        #[arg(long, default_value_t = 0.25)]
        gamma: f64,
    },
    /// Print the signature, gray-level histogram and CDF of one image.
    Inspect {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Gray-level histogram bins.
        #[arg(long, default_value_t = 256)]
        bins: usize,
    },
    /// Write the three-class synthetic corpus and its ground truth.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        per_class: usize,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { EXIT_IO } else { EXIT_DOMAIN })
        }
    }
}

fn read_config(path: Option<&Path>) -> Result<ExtractionConfig, Failure> {
    match path {
        None => Ok(ExtractionConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_error(p, e))?;
            Ok(ExtractionConfig::from_json(&text)?)
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Failure {
    Failure::Core(if e.kind() == std::io::ErrorKind::NotFound {
        Error::FileNotFound(path.to_path_buf())
    } else {
        Error::Io { path: path.to_path_buf(), source: e }
    })
}

fn default_report_path(index: &Path) -> PathBuf {
    let stem = index.file_stem().map_or_else(|| "index".into(), |s| s.to_string_lossy().into_owned());
    index.with_file_name(format!("{stem}.eval.json"))
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Index { dir, out, config } => {
            let cfg = read_config(config.as_deref())?;
            let report = build_index(&dir, &cfg)?;
            for (path, e) in &report.failures {
                eprintln!("skipped {}: {e}", path.display());
            }
            save_index(&report.store, &out)?;
            println!(
                "indexed {} images ({} skipped) into {}",
                report.store.len(),
                report.failures.len(),
                out.display()
            );
        }
        Command::Query { index, image, k, metric, threshold } => {
            if k == 0 {
                return Err(Failure::Usage("--k must be at least 1".into()));
            }
            let store = load_index(&index)?;
            let img = load_image(&image)?;
            let query = store.prepare_image(&img)?;
            let ranked = store.query(&query, &QueryOptions { k, metric, threshold })?;
            print!("{}", ranked.to_lines());
        }
        Command::Evaluate { index, truth, k, metric, report } => {
            if k == 0 {
                return Err(Failure::Usage("--k must be at least 1".into()));
            }
            let store = load_index(&index)?;
            let truth = GroundTruth::load(&truth)?;
            let result = evaluate_corpus(&store, &truth, k, metric)?;
            print!("{}", result.to_table());
            let path = report.unwrap_or_else(|| default_report_path(&index));
            std::fs::write(&path, result.to_json()).map_err(|e| io_error(&path, e))?;
            eprintln!("report written to {}", path.display());
        }
        Command::Serve { index, listen, token, session_ttl, alpha, beta, gamma } => {
            let store = load_index(&index)?;
            let config = ServiceConfig {
                token: token.filter(|t| !t.is_empty()),
                session_ttl: Duration::from_secs(session_ttl),
                rocchio: RocchioParams { alpha, beta, gamma },
            };
            let images = store.len();
            let state = AppState::with_index(config, store);
            let runtime = tokio::runtime::Runtime::new()
                .map_err(|e| io_error(Path::new(&listen), e))?;
            eprintln!("serving {images} images on http://{listen}");
            runtime
                .block_on(cbir_service::serve(state, &listen))
                .map_err(|e| io_error(Path::new(&listen), e))?;
        }
        Command::Inspect { image, config, bins } => {
            if !(1..=256).contains(&bins) {
                return Err(Failure::Usage("--bins must be in 1..=256".into()));
            }
            let cfg = read_config(config.as_deref())?;
            let img = load_image(&image)?;
            let id = image.to_string_lossy();
            print!("{}", inspect(&id, &img, &cfg, bins)?);
        }
        Command::Synth { out, per_class } => {
            let truth = cbir_core::synth::write_corpus(&out, per_class)?;
            println!("wrote {} images and ground_truth.json to {}", truth.queries.len(), out.display());
        }
    }
    Ok(())
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ")
}

fn inspect(id: &str, img: &cbir_core::Image, cfg: &ExtractionConfig, bins: usize) -> Result<String, Failure> {
    let sig = extract_signature(id, img, cfg)?;
    let layout = cfg.layout();
    let fv = &sig.raw_fv;
    let gray = to_grayscale(img);
    let hist = histogram(&gray, bins)?;
    let curve = cdf(&hist)?;

    let mut out = String::new();
    let _ = writeln!(out, "image        {id}");
    let _ = writeln!(out, "size         {}x{} ({:?})", img.width(), img.height(), img.channels());
    let _ = writeln!(out, "config_hash  {}", sig.config_hash);
    let _ = writeln!(out, "flags        {:?}", sig.flags);
    let _ = writeln!(out, "dims         {}", fv.len());
    let _ = writeln!(out, "color.hist   {}", join(layout.color_histogram(fv)));
    let _ = writeln!(out, "color.mom    {}", join(&layout.color(fv)[layout.color_histogram..]));
    let _ = writeln!(out, "texture      {}", join(layout.texture(fv)));
    let _ = writeln!(out, "shape        {}", join(layout.shape(fv)));
    let _ = writeln!(out);
    let _ = writeln!(out, "{:>5}  {:>8}  {:>8}", "level", "count", "cdf");
    for (i, (c, p)) in hist.bins().iter().zip(&curve.values).enumerate() {
        let _ = writeln!(out, "{i:>5}  {c:>8}  {p:>8.6}");
    }
    Ok(out)
}
