use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use ssim_forensics::{KernelShape, SsimParams, UndefinedPolicy};

#[derive(Debug, Parser)]
#[command(
    name = "ssimf",
    version,
    about = "SSIM forensics: compare images, probe the index's failure modes and regenerate reference values"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare two PNG images and report MSSIM with its components.
    Compare(CompareArgs),
    /// Write a synthetic pattern as PNG (or CSV for sweeps).
    Generate(GenerateArgs),
    /// MSSIM of constant images of increasing brightness against black or white.
    Sweep(SweepArgs),
    /// Closed-form component minima and the witness pairs that reach them.
    Minima(MinimaArgs),
    /// Count pixels whose structure term has no real power for an exponent.
    Scan(ScanArgs),
    /// Check the local MSE identity and relate zero-constant SSIM to MSE and PSNR.
    MseCheck(MseCheckArgs),
    /// Regenerate every reference value and its figure artifacts.
    Repro(ReproArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum RangeMode {
    /// Samples in [0, 1] with L = 1.
    #[value(name = "unit")]
    #[serde(rename = "unit")]
    Unit,
    /// Samples in [0, 255] with L = 255.
    #[value(name = "8bit")]
    #[serde(rename = "8bit")]
    EightBit,
}

impl RangeMode {
    pub fn dynamic_range(self) -> f64 {
        match self {
            Self::Unit => 1.0,
            Self::EightBit => 255.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    FlagAndNan,
    SignedMagnitude,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Gaussian,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColorPath {
    /// Gray conversion with the green weight 0.5810.
    #[value(name = "gray-paper")]
    #[serde(rename = "gray-paper")]
    GrayGreen0581,
    /// Gray conversion with Rec. 601 weights.
    GrayRec601,
    /// 0.8 Y + 0.1 Cr + 0.1 Cb, each channel compared separately.
    YcbcrWeighted,
}

#[derive(Debug, Clone, Args)]
pub struct SsimOptions {
    #[arg(long, default_value_t = 0.01)]
    pub k1: f64,
    #[arg(long, default_value_t = 0.03)]
    pub k2: f64,
    #[arg(long, value_enum, default_value_t = RangeMode::Unit)]
    pub dynamic_range: RangeMode,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 11)]
    pub window: usize,
    #[arg(long, default_value_t = 1.5)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value_t = KernelArg::Gaussian)]
    pub kernel: KernelArg,
    #[arg(long, value_enum, default_value_t = PolicyArg::FlagAndNan)]
    pub undefined_policy: PolicyArg,
}

impl SsimOptions {
    pub fn params(&self) -> SsimParams {
        SsimParams {
            k1: self.k1,
            k2: self.k2,
            dynamic_range: self.dynamic_range.dynamic_range(),
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            window_size: self.window,
            sigma: self.sigma,
            kernel_shape: match self.kernel {
                KernelArg::Gaussian => KernelShape::Gaussian,
                KernelArg::Uniform => KernelShape::Uniform,
            },
            c3_override: None,
            undefined_policy: match self.undefined_policy {
                PolicyArg::FlagAndNan => UndefinedPolicy::FlagAndNan,
                PolicyArg::SignedMagnitude => UndefinedPolicy::SignedMagnitude,
                PolicyArg::Reject => UndefinedPolicy::Reject,
            },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Reference PNG.
    pub reference: PathBuf,
    /// Test PNG.
    pub test: PathBuf,
    #[command(flatten)]
    pub ssim: SsimOptions,
    #[arg(long, value_enum, default_value_t = ColorPath::GrayRec601)]
    pub color_path: ColorPath,
    /// Skip the 8-bit rounding after color-to-gray conversion.
    #[arg(long)]
    pub no_quantize: bool,
    /// Directory for raw dumps of the ssim, l, c and s maps.
    #[arg(long, value_name = "DIR")]
    pub emit_maps: Option<PathBuf>,
    /// Directory for heatmap PNGs of the ssim, l, c and s maps.
    #[arg(long, value_name = "DIR")]
    pub emit_heatmaps: Option<PathBuf>,
    /// File for a raw dump of the SSIM map.
    #[arg(long, value_name = "PATH")]
    pub raw_dump: Option<PathBuf>,
    /// Write the JSON report here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// Pattern tokens, e.g. `constant 16 16 0.5`, `checkerboard 64 64 0 1`,
    /// `gradient-pair 16 16`, `dither-pair 64 64 0.5 [amplitude]`, `sweep 0 256`.
    #[arg(required = true, num_args = 1.., allow_negative_numbers = true)]
    pub spec: Vec<String>,
    /// Output path. Pairs get `-a` and `-b` inserted before the extension.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    Black,
    White,
}

impl Reference {
    pub fn value(self) -> f64 {
        match self {
            Self::Black => 0.0,
            Self::White => 1.0,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub reference: Reference,
    #[arg(long, default_value_t = 256)]
    pub steps: usize,
    /// Write the CSV here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MinimaArgs {
    #[arg(long, default_value_t = 0.01)]
    pub k1: f64,
    #[arg(long, default_value_t = 0.03)]
    pub k2: f64,
    #[arg(long, value_enum, default_value_t = RangeMode::Unit)]
    pub dynamic_range: RangeMode,
    /// Side length of the witness images.
    #[arg(long, default_value_t = 64)]
    pub witness_size: usize,
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    pub reference: PathBuf,
    pub test: PathBuf,
    #[command(flatten)]
    pub ssim: SsimOptions,
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MseCheckArgs {
    /// Reference and test PNG. Omit both to only run the corpus study.
    #[arg(num_args = 0..=2)]
    pub images: Vec<PathBuf>,
    /// Also fit SSIM* against MSE* and PSNR on the generated corpus.
    #[arg(long)]
    pub corpus: bool,
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReproArgs {
    #[arg(value_enum)]
    pub target: ReproTarget,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReproTarget {
    All,
}
