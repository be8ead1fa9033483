//! `clonedetect` command line: `detect`, `forge` and `bench`.
//!
//! Exit codes: 0 when a command ran (whether or not anything was found),
//! 2 for unusable arguments, 1 for I/O and decoding failures.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use clonedetect_core::{Method, Shape};

pub mod bench;
pub mod detect;
pub mod forge;

pub use bench::{BenchRow, BenchTable};
pub use detect::{render_mask, JsonReport, ReportConfig, SOURCE_RGB, TARGET_RGB};

/// Environment variable capping the worker pool (unset or 0 = one per core).
pub const THREADS_ENV: &str = "CLONEDETECT_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] clonedetect_core::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use clonedetect_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(E::InvalidBlockSize { .. } | E::InvalidSpec(_)) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "clonedetect",
    version,
    about = "Copy-move forgery detection by block matching"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect cloned regions in an image.
    Detect(DetectArgs),
    /// Synthesize a fixture with a planted clone and its ground truth.
    Forge(ForgeArgs),
    /// Time every method on a set of images.
    Bench(BenchArgs),
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
        .map_err(|e: clonedetect_core::Error| e.to_string())
}

/// Options shared by `detect` and `bench`.
#[derive(Debug, Clone, Args)]
pub struct TuningArgs {
    #[arg(long, short = 'b', default_value_t = clonedetect_core::detect::DEFAULT_BLOCK_SIZE)]
    pub block_size: usize,
    /// Quantization step (method default when omitted).
    #[arg(long)]
    pub quant_step: Option<f64>,
    /// Minimum pairs sharing one shift (100, or 25 for DWT methods).
    #[arg(long)]
    pub shift_threshold: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub sort_window: usize,
    /// Keep pairs whose blocks overlap.
    #[arg(long)]
    pub no_overlap_guard: bool,
    /// Run on R, G and B separately and merge the results.
    #[arg(long)]
    pub per_channel: bool,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long, short = 'm', value_parser = parse_method)]
    pub method: Method,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Zero all timings so reports of identical runs are byte-identical.
    #[arg(long)]
    pub deterministic_report: bool,
    #[arg(long)]
    pub out_mask: PathBuf,
    #[arg(long)]
    pub out_report: PathBuf,
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct ForgeArgs {
    /// Canvas size as WxH.
    #[arg(long, value_parser = forge::parse_size)]
    pub size: (usize, usize),
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// noise, gradient or tiled[:PERIOD].
    #[arg(long, default_value = "noise", value_parser = forge::parse_texture)]
    pub texture: clonedetect_core::Texture,
    /// Source rectangle as X,Y,W,H.
    #[arg(long, value_parser = forge::parse_rect)]
    pub src: clonedetect_core::Rect,
    /// Destination top-left corner as X,Y.
    #[arg(long, value_parser = forge::parse_point)]
    pub dst: clonedetect_core::Origin,
    /// Intensity added to the pasted pixels.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub offset: i32,
    #[arg(long, default_value = "rect", value_parser = forge::parse_shape)]
    pub shape: Shape,
    /// Output PNG; the ground truth goes next to it as `<stem>.truth.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// `all` or a comma-separated list of methods.
    #[arg(long, default_value = "all", value_parser = bench::parse_methods)]
    pub methods: bench::MethodList,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[arg(long, default_value_t = 5)]
    pub repeat: usize,
    #[arg(long)]
    pub out_csv: PathBuf,
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Detect(args) => detect::cmd_detect(&args),
        Command::Forge(args) => forge::cmd_forge(&args),
        Command::Bench(args) => bench::cmd_bench(&args),
    }
}

/// Sizes the global rayon pool from [`THREADS_ENV`].
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{THREADS_ENV}={raw:?} is not a thread count")))?;
    // A second call in the same process (tests) finds the pool already built.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

impl TuningArgs {
    pub fn config(&self, method: Method) -> CliResult<clonedetect_core::DetectorConfig> {
        let mut cfg =
            clonedetect_core::DetectorConfig::new(method).with_block_size(self.block_size);
        cfg.quant_step = self.quant_step;
        cfg.shift_threshold = self.shift_threshold;
        cfg.sort_window = self.sort_window;
        cfg.overlap_guard = !self.no_overlap_guard;
        if self.per_channel {
            cfg.color_mode = clonedetect_core::ColorMode::PerChannel;
        }
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

pub(crate) fn create_parent(path: &std::path::Path) -> CliResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
                context: format!("creating {}", dir.display()),
                source,
            })
        }
        _ => Ok(()),
    }
}

pub(crate) fn write_file(path: &std::path::Path, bytes: &[u8]) -> CliResult<()> {
    create_parent(path)?;
    std::fs::write(path, bytes).map_err(|source| CliError::Io {
        context: format!("writing {}", path.display()),
        source,
    })
}
