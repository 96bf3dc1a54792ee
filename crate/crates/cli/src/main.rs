mod commands;
mod dataset;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use texlat::PssParams;

use crate::dataset::Split;
use crate::error::CliError;

/// Texture statistics, hierarchical PPCA texture codes and synthesis.
///
/// Set TEXLAT_LOG (error, warn, info, debug, trace) for log output on stderr.
#[derive(Parser, Debug)]
#[command(name = "texlat", version, about, long_about)]
struct Cli {
    /// Worker threads for per-image work (0 uses every core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct StatArgs {
    /// Pyramid scales N.
    #[arg(long, default_value_t = 4)]
    pub scales: usize,
    /// Orientations per scale K.
    #[arg(long, default_value_t = 4)]
    pub orients: usize,
    /// Auto-correlation window side M (odd).
    #[arg(long, default_value_t = 7)]
    pub neighbor: usize,
}

impl StatArgs {
    pub fn params(&self) -> PssParams {
        PssParams::new(self.scales, self.orients, self.neighbor)
    }
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Dataset root with one subdirectory per class.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// TOML manifest with class list, splits and preprocessing.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Resize images to this side (overrides the manifest).
    #[arg(long)]
    pub size: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    /// Optimizer iterations.
    #[arg(long, default_value_t = 50)]
    pub iterations: usize,
    /// Seed of the initial noise image.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract statistic vectors of a dataset into a feature archive.
    Extract {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        stats: StatArgs,
        /// Which part of the dataset to extract.
        #[arg(long, value_enum, default_value_t = Split::Train)]
        split: Split,
        /// Output archive.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Fit the hierarchical model on a feature archive.
    Train {
        archive: PathBuf,
        /// Cumulative contribution threshold of the group stage.
        #[arg(long, default_value_t = 0.999_999_99)]
        ccr: f64,
        /// Output code dimension.
        #[arg(long, default_value_t = 200)]
        dim: usize,
        /// Output model file.
        #[arg(short, long)]
        out: PathBuf,
        /// Eigenspectrum CSV (default: model path with `.spectrum.csv`).
        #[arg(long)]
        spectrum: Option<PathBuf>,
    },
    /// Encode images or an archive into texture codes (CSV).
    Encode {
        #[arg(long)]
        model: PathBuf,
        /// Feature archive to encode instead of images.
        #[arg(long, conflicts_with = "images")]
        archive: Option<PathBuf>,
        /// Images to encode.
        images: Vec<PathBuf>,
        /// Resize images to this side before extraction.
        #[arg(long, default_value_t = 128)]
        size: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Decode texture codes (CSV) into statistic vectors (CSV).
    Decode {
        #[arg(long)]
        model: PathBuf,
        codes: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Synthesize a texture from an image's code or from a stored code.
    Synth {
        #[arg(long)]
        model: PathBuf,
        /// Source image: extracted, encoded and decoded before synthesis.
        #[arg(long, conflicts_with = "codes", required_unless_present = "codes")]
        image: Option<PathBuf>,
        /// Code CSV as written by `encode`.
        #[arg(long)]
        codes: Option<PathBuf>,
        /// Row of the code CSV, by id or 0-based index.
        #[arg(long, default_value = "0")]
        row: String,
        /// Side of the synthesized image (and of the resized source).
        #[arg(long, default_value_t = 128)]
        size: usize,
        #[command(flatten)]
        synth: SynthArgs,
        /// Output PGM.
        #[arg(short, long)]
        out: PathBuf,
        /// Distance trace CSV (default: output path with `.trace.csv`).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Score re-synthesis with the TSS over the eval split.
    Eval {
        #[command(flatten)]
        data: DataArgs,
        /// Fitted models to score, one row each.
        #[arg(long = "model")]
        models: Vec<PathBuf>,
        /// Training archive for sweeps.
        #[arg(long)]
        archive: Option<PathBuf>,
        /// Comma-separated output dimensions to fit and score.
        #[arg(long, value_delimiter = ',', requires = "archive")]
        sweep_dim: Vec<usize>,
        /// Comma-separated group thresholds to fit and score.
        #[arg(long, value_delimiter = ',', requires = "archive", conflicts_with = "sweep_dim")]
        sweep_ccr: Vec<f64>,
        /// Threshold used while sweeping the output dimension.
        #[arg(long, default_value_t = 0.999_999_99)]
        ccr: f64,
        /// Output dimension used while sweeping the threshold.
        #[arg(long, default_value_t = 200)]
        dim: usize,
        #[command(flatten)]
        synth: SynthArgs,
        /// TSS patch side.
        #[arg(long, default_value_t = texlat::tss::DEFAULT_PATCH)]
        patch_size: usize,
        /// Summary CSV.
        #[arg(short, long)]
        out: PathBuf,
        /// Optional per-image CSV.
        #[arg(long)]
        rows: Option<PathBuf>,
    },
    /// Describe an archive, model, statistic vector or image.
    Info {
        path: PathBuf,
        /// For images: write band magnitude maps into this directory.
        #[arg(long)]
        dump_bands: Option<PathBuf>,
        #[command(flatten)]
        stats: StatArgs,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TEXLAT_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("texlat: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--jobs: {e}")))?;
    }
    match cli.command {
        Command::Extract { data, stats, split, out } => commands::extract(&data, stats.params(), split, &out),
        Command::Train {
            archive,
            ccr,
            dim,
            out,
            spectrum,
        } => commands::train(&archive, ccr, dim, &out, spectrum.as_deref()),
        Command::Encode {
            model,
            archive,
            images,
            size,
            out,
        } => commands::encode(&model, archive.as_deref(), &images, size, &out),
        Command::Decode { model, codes, out } => commands::decode(&model, &codes, &out),
        Command::Synth {
            model,
            image,
            codes,
            row,
            size,
            synth,
            out,
            trace,
        } => {
            let source = match (image, codes) {
                (Some(p), _) => commands::SynthSource::Image(p),
                (None, Some(p)) => commands::SynthSource::Code(p, row),
                (None, None) => return Err(CliError::Usage("give --image or --codes".into())),
            };
            commands::synth(&model, source, size, &synth, &out, trace.as_deref())
        }
        Command::Eval {
            data,
            models,
            archive,
            sweep_dim,
            sweep_ccr,
            ccr,
            dim,
            synth,
            patch_size,
            out,
            rows,
        } => {
            let plan = match (models.is_empty(), archive) {
                (false, None) => commands::EvalPlan::Models(models),
                (true, Some(a)) if !sweep_dim.is_empty() => commands::EvalPlan::SweepDim { archive: a, ccr, dims: sweep_dim },
                (true, Some(a)) if !sweep_ccr.is_empty() => commands::EvalPlan::SweepCcr { archive: a, dim, ccrs: sweep_ccr },
                (true, Some(a)) => commands::EvalPlan::SweepDim { archive: a, ccr, dims: vec![dim] },
                _ => return Err(CliError::Usage("give --model or --archive (with an optional sweep), not both".into())),
            };
            commands::eval(&data, plan, &synth, patch_size, &out, rows.as_deref())
        }
        Command::Info { path, dump_bands, stats } => commands::info(&path, dump_bands.as_deref(), stats.params()),
    }
}
