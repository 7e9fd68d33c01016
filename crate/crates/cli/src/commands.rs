use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::Serialize;
use ssim_forensics::color::{
    rgb_to_gray, weighted_ycbcr_ssim, GrayCoefficients, RgbImage, YCBCR_WEIGHTS,
};
use ssim_forensics::extremal::{
    component_minima, undefined_scan, witness_pair, Component, ComponentMinima, HazardReport,
};
use ssim_forensics::mse::{self, Correspondence, Psnr, PsnrCorrespondence};
use ssim_forensics::patterns::{Generated, PatternSpec, SweepSample};
use ssim_forensics::{
    compare, heatmap, local_stats, structure_component, ComparisonReport, GrayImage, KernelShape,
    Map, SsimParams,
};

use crate::args::{
    ColorPath, CompareArgs, GenerateArgs, MinimaArgs, MseCheckArgs, RangeMode, ScanArgs, SweepArgs,
};
use crate::io::{gray_png, heatmap_png, load_png, raw_dump, Artifacts, Loaded};
use crate::json::{self, SCHEMA};

/// Writes `bytes` to `path` through `artifacts`, or to standard output.
fn emit(artifacts: &mut Artifacts, path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => artifacts.write(p, bytes),
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn coefficients(path: ColorPath) -> GrayCoefficients {
    match path {
        ColorPath::GrayGreen0581 => GrayCoefficients::GREEN_0581,
        ColorPath::GrayRec601 | ColorPath::YcbcrWeighted => GrayCoefficients::REC601,
    }
}

/// Reduces a loaded image to gray in `[0, 1]`. Gray PNGs pass through.
pub fn to_gray(img: &Loaded, coeffs: GrayCoefficients, quantize: bool) -> Result<GrayImage> {
    Ok(match img {
        Loaded::Gray(g) => g.clone(),
        Loaded::Rgb(c) => rgb_to_gray(c, coeffs, quantize)?,
    })
}

fn to_rgb(img: &Loaded) -> Result<RgbImage> {
    Ok(match img {
        Loaded::Gray(g) => RgbImage::from_gray(g)?,
        Loaded::Rgb(c) => c.clone(),
    })
}

fn load_pair(reference: &Path, test: &Path) -> Result<(Loaded, Loaded)> {
    let (a, b) = (load_png(reference)?, load_png(test)?);
    let (da, db) = (a.dimensions(), b.dimensions());
    ensure!(
        da == db,
        "dimension mismatch: {} is {}x{}, {} is {}x{}",
        reference.display(),
        da.0,
        da.1,
        test.display(),
        db.0,
        db.1
    );
    Ok((a, b))
}

fn kind(img: &Loaded) -> &'static str {
    match img {
        Loaded::Gray(_) => "gray8",
        Loaded::Rgb(_) => "rgb8",
    }
}

#[derive(Debug, Serialize)]
pub struct Constants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Constants {
    pub fn of(p: &SsimParams) -> Self {
        Self {
            c1: p.c1(),
            c2: p.c2(),
            c3: p.c3(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Mode {
    pub color_path: ColorPath,
    pub dynamic_range: RangeMode,
    pub quantized: bool,
    pub inputs: [&'static str; 2],
    /// Which plane the emitted maps describe: `gray` or `y`.
    pub maps_plane: &'static str,
}

#[derive(Debug, Serialize)]
pub struct ChannelScores {
    pub weights: [f64; 3],
    pub y: f64,
    pub cr: f64,
    pub cb: f64,
}

#[derive(Debug, Serialize)]
pub struct MapFiles {
    pub ssim: String,
    pub l: String,
    pub c: String,
    pub s: String,
}

#[derive(Debug, Serialize)]
pub struct CompareReport {
    pub schema: u32,
    pub command: &'static str,
    pub reference: String,
    pub test: String,
    pub mode: Mode,
    pub params: SsimParams,
    pub constants: Constants,
    pub mssim: f64,
    pub mean_l: f64,
    pub mean_c: f64,
    pub mean_s: f64,
    pub defined_count: usize,
    pub undefined_count: usize,
    pub undefined_fraction: f64,
    pub valid_width: usize,
    pub valid_height: usize,
    pub channels: Option<ChannelScores>,
    pub maps: Option<MapFiles>,
    pub heatmaps: Option<MapFiles>,
    pub raw_dump: Option<String>,
}

fn named_maps(r: &ComparisonReport) -> [(&'static str, &Map); 4] {
    let m = &r.maps;
    [("ssim", &m.ssim), ("l", &m.l), ("c", &m.c), ("s", &m.s)]
}

fn map_files(dir: &Path, ext: &str) -> MapFiles {
    let f = |name: &str| dir.join(format!("{name}.{ext}")).display().to_string();
    MapFiles {
        ssim: f("ssim"),
        l: f("l"),
        c: f("c"),
        s: f("s"),
    }
}

/// Renders a map, masking the undefined pixels of the SSIM map.
pub fn render_map(r: &ComparisonReport, name: &str, map: &Map) -> Result<Vec<u8>> {
    let mask = (name == "ssim").then_some(r.maps.undefined.as_slice());
    let h = heatmap::render(map, mask).with_context(|| format!("cannot render the {name} map"))?;
    heatmap_png(&h)
}

pub fn compare_cmd(args: &CompareArgs) -> Result<()> {
    let params = args.ssim.params();
    params.validate()?;
    let (a, b) = load_pair(&args.reference, &args.test)?;
    let quantize = !args.no_quantize;
    let (report, channels) = match args.color_path {
        ColorPath::GrayGreen0581 | ColorPath::GrayRec601 => {
            let coeffs = coefficients(args.color_path);
            let ga = to_gray(&a, coeffs, quantize)?.scaled(params.dynamic_range)?;
            let gb = to_gray(&b, coeffs, quantize)?.scaled(params.dynamic_range)?;
            (compare(&ga, &gb, &params)?, None)
        }
        ColorPath::YcbcrWeighted => {
            let r = weighted_ycbcr_ssim(&to_rgb(&a)?, &to_rgb(&b)?, &params)?;
            let scores = ChannelScores {
                weights: YCBCR_WEIGHTS,
                y: r.y.mssim,
                cr: r.cr.mssim,
                cb: r.cb.mssim,
            };
            let mut y = r.y;
            y.mssim = r.weighted;
            (y, Some(scores))
        }
    };

    let mut artifacts = Artifacts::new();
    let maps = match &args.emit_maps {
        Some(dir) => {
            artifacts.dir(dir)?;
            for (name, map) in named_maps(&report) {
                artifacts.write(&dir.join(format!("{name}.bin")), &raw_dump(map)?)?;
            }
            Some(map_files(dir, "bin"))
        }
        None => None,
    };
    let heatmaps = match &args.emit_heatmaps {
        Some(dir) => {
            artifacts.dir(dir)?;
            for (name, map) in named_maps(&report) {
                let png = render_map(&report, name, map)?;
                artifacts.write(&dir.join(format!("{name}.png")), &png)?;
            }
            Some(map_files(dir, "png"))
        }
        None => None,
    };
    if let Some(path) = &args.raw_dump {
        artifacts.write(path, &raw_dump(&report.maps.ssim)?)?;
    }

    let out = CompareReport {
        schema: SCHEMA,
        command: "compare",
        reference: args.reference.display().to_string(),
        test: args.test.display().to_string(),
        mode: Mode {
            color_path: args.color_path,
            dynamic_range: args.ssim.dynamic_range,
            quantized: quantize,
            inputs: [kind(&a), kind(&b)],
            maps_plane: if channels.is_some() { "y" } else { "gray" },
        },
        constants: Constants::of(&params),
        params,
        mssim: report.mssim,
        mean_l: report.mean_l,
        mean_c: report.mean_c,
        mean_s: report.mean_s,
        defined_count: report.defined_count,
        undefined_count: report.undefined_count,
        undefined_fraction: report.undefined_fraction(),
        valid_width: report.maps.width(),
        valid_height: report.maps.height(),
        channels,
        maps,
        heatmaps,
        raw_dump: args.raw_dump.as_ref().map(|p| p.display().to_string()),
    };
    emit(&mut artifacts, args.json.as_deref(), &json::to_bytes(&out)?)?;
    artifacts.commit();
    Ok(())
}

/// `dir/stem.ext` becomes `dir/stem-<tag>.ext`.
pub fn tagged(path: &Path, tag: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}-{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}-{tag}"),
    };
    path.with_file_name(name)
}

pub fn sweep_csv(samples: &[SweepSample]) -> String {
    let mut out = String::from("value,mssim\n");
    for s in samples {
        writeln!(out, "{},{}", s.value, s.mssim).expect("writing to a String");
    }
    out
}

pub fn generate_cmd(args: &GenerateArgs) -> Result<()> {
    let spec = PatternSpec::parse(&args.spec)?;
    let mut artifacts = Artifacts::new();
    match spec.generate()? {
        Generated::Single(img) => artifacts.write(&args.out, &gray_png(&img)?)?,
        Generated::Pair(a, b) => {
            artifacts.write(&tagged(&args.out, "a"), &gray_png(&a)?)?;
            artifacts.write(&tagged(&args.out, "b"), &gray_png(&b)?)?;
        }
        Generated::Sweep(samples) => artifacts.write(&args.out, sweep_csv(&samples).as_bytes())?,
    }
    for p in artifacts.paths() {
        println!("{}", p.display());
    }
    artifacts.commit();
    Ok(())
}

pub fn sweep_cmd(args: &SweepArgs) -> Result<()> {
    let samples = ssim_forensics::patterns::luminance_sweep(args.reference.value(), args.steps)?;
    let mut artifacts = Artifacts::new();
    emit(
        &mut artifacts,
        args.out.as_deref(),
        sweep_csv(&samples).as_bytes(),
    )?;
    artifacts.commit();
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Printed {
    pub l_min: String,
    pub c_min: String,
    pub s_min: String,
}

impl Printed {
    pub fn of(m: &ComponentMinima) -> Self {
        Self {
            l_min: format!("{:.4}", m.l_min),
            c_min: format!("{:.4}", m.c_min),
            s_min: format!("{:.4}", m.s_min),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Witness {
    pub component: Component,
    pub kernel: KernelShape,
    pub size: usize,
    /// MSSIM for the luminance witness, otherwise the mean component value.
    pub value: f64,
    pub minimum: f64,
    pub deviation: f64,
}

/// Compares the witness pair for `which` and reads off the relevant value.
pub fn witness(
    which: Component,
    size: usize,
    params: &SsimParams,
) -> Result<(Witness, ComparisonReport)> {
    let (a, b) = witness_pair(which, size)?;
    let r = compare(
        &a.scaled(params.dynamic_range)?,
        &b.scaled(params.dynamic_range)?,
        params,
    )?;
    let m = component_minima(params);
    let (value, minimum) = match which {
        Component::L => (r.mssim, m.l_min),
        Component::C => (r.mean_c, m.c_min),
        Component::S => (r.mean_s, m.s_min),
    };
    Ok((
        Witness {
            component: which,
            kernel: params.kernel_shape,
            size,
            value,
            minimum,
            deviation: (value - minimum).abs(),
        },
        r,
    ))
}

#[derive(Debug, Serialize)]
pub struct MinimaReport {
    pub schema: u32,
    pub command: &'static str,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: RangeMode,
    pub minima: ComponentMinima,
    pub printed: Printed,
    pub witnesses: Vec<Witness>,
}

pub fn minima_report(k1: f64, k2: f64, range: RangeMode, size: usize) -> Result<MinimaReport> {
    let params = SsimParams {
        k1,
        k2,
        dynamic_range: range.dynamic_range(),
        ..SsimParams::default()
    };
    params.validate()?;
    let minima = component_minima(&params);
    let mut witnesses = Vec::new();
    for shape in [KernelShape::Gaussian, KernelShape::Uniform] {
        let p = SsimParams {
            kernel_shape: shape,
            ..params.clone()
        };
        for which in [Component::L, Component::C, Component::S] {
            witnesses.push(witness(which, size, &p)?.0);
        }
    }
    Ok(MinimaReport {
        schema: SCHEMA,
        command: "minima",
        k1,
        k2,
        dynamic_range: range,
        printed: Printed::of(&minima),
        minima,
        witnesses,
    })
}

pub fn minima_cmd(args: &MinimaArgs) -> Result<()> {
    let report = minima_report(args.k1, args.k2, args.dynamic_range, args.witness_size)?;
    let mut artifacts = Artifacts::new();
    emit(
        &mut artifacts,
        args.json.as_deref(),
        &json::to_bytes(&report)?,
    )?;
    artifacts.commit();
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct ScanReport {
    pub schema: u32,
    pub command: &'static str,
    pub reference: String,
    pub test: String,
    pub params: SsimParams,
    pub hazard: HazardReport,
    pub negative_s: usize,
    pub min_s: f64,
    /// MSSIM under the selected undefined policy, when pooling succeeds.
    pub mssim: Option<f64>,
    pub pooling_error: Option<String>,
}

/// Hazard scan of the structure map of a gray pair.
pub fn scan_pair(
    a: &GrayImage,
    b: &GrayImage,
    params: &SsimParams,
) -> Result<(
    HazardReport,
    Map,
    Result<ComparisonReport, ssim_forensics::Error>,
)> {
    params.validate()?;
    let stats = local_stats(a, b, &params.kernel()?)?;
    let s = structure_component(&stats, params);
    let hazard = undefined_scan(&s, params.gamma);
    Ok((hazard, s, compare(a, b, params)))
}

pub fn scan_cmd(args: &ScanArgs) -> Result<()> {
    let params = args.ssim.params();
    let (a, b) = load_pair(&args.reference, &args.test)?;
    let gray = |img| -> Result<GrayImage> {
        Ok(to_gray(img, GrayCoefficients::REC601, true)?.scaled(params.dynamic_range)?)
    };
    let (hazard, s, pooled) = scan_pair(&gray(&a)?, &gray(&b)?, &params)?;
    let report = ScanReport {
        schema: SCHEMA,
        command: "scan",
        reference: args.reference.display().to_string(),
        test: args.test.display().to_string(),
        params,
        hazard,
        negative_s: s.data.iter().filter(|&&v| v < 0.0).count(),
        min_s: s.min(),
        mssim: pooled.as_ref().ok().map(|r| r.mssim),
        pooling_error: pooled.err().map(|e| e.to_string()),
    };
    let mut artifacts = Artifacts::new();
    emit(
        &mut artifacts,
        args.json.as_deref(),
        &json::to_bytes(&report)?,
    )?;
    artifacts.commit();
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct PairCheck {
    pub reference: String,
    pub test: String,
    pub identity_residual: f64,
    pub ssim_star: f64,
    pub mse_star: f64,
    pub psnr_db: Psnr,
    pub undefined_windows: usize,
    pub degenerate_windows: usize,
}

#[derive(Debug, Serialize)]
pub struct CorpusCheck {
    pub seed: u64,
    pub structural: Correspondence,
    pub with_luminance_shift: Correspondence,
    pub psnr: PsnrCorrespondence,
}

#[derive(Debug, Serialize)]
pub struct MseReport {
    pub schema: u32,
    pub command: &'static str,
    pub pair: Option<PairCheck>,
    pub corpus: Option<CorpusCheck>,
}

pub fn corpus_check() -> Result<CorpusCheck> {
    let params = SsimParams::zero_constants();
    let structural = mse::distortion_corpus(mse::CORPUS_SEED, &mse::STRUCTURAL_DISTORTIONS)?;
    let mut all_kinds = mse::STRUCTURAL_DISTORTIONS.to_vec();
    all_kinds.push(mse::Distortion::LuminanceShift);
    let shifted = mse::distortion_corpus(mse::CORPUS_SEED, &all_kinds)?;
    Ok(CorpusCheck {
        seed: mse::CORPUS_SEED,
        structural: mse::correspondence(&structural, &params)?,
        with_luminance_shift: mse::correspondence(&shifted, &params)?,
        psnr: mse::psnr_correspondence(mse::CORPUS_SEED, &params)?,
    })
}

pub fn mse_check_cmd(args: &MseCheckArgs) -> Result<()> {
    let pair = match args.images.as_slice() {
        [] => None,
        [reference, test] => {
            let (a, b) = load_pair(reference, test)?;
            let ga = to_gray(&a, GrayCoefficients::REC601, true)?;
            let gb = to_gray(&b, GrayCoefficients::REC601, true)?;
            let params = SsimParams::zero_constants();
            let m = mse::measure(&ga, &gb, &params)?;
            Some(PairCheck {
                reference: reference.display().to_string(),
                test: test.display().to_string(),
                identity_residual: mse::mse_identity_residual(&ga, &gb, &params.kernel()?)?,
                ssim_star: m.ssim_star,
                mse_star: m.mse_star,
                psnr_db: mse::psnr(&ga, &gb, 1.0)?,
                undefined_windows: m.local.undefined_count(),
                degenerate_windows: m.local.degenerate_count(),
            })
        }
        _ => bail!("mse-check takes a reference and a test image, or none with --corpus"),
    };
    ensure!(
        pair.is_some() || args.corpus,
        "nothing to check: give two images, --corpus, or both"
    );
    let corpus = if args.corpus {
        Some(corpus_check()?)
    } else {
        None
    };
    let report = MseReport {
        schema: SCHEMA,
        command: "mse-check",
        pair,
        corpus,
    };
    let mut artifacts = Artifacts::new();
    emit(
        &mut artifacts,
        args.json.as_deref(),
        &json::to_bytes(&report)?,
    )?;
    artifacts.commit();
    Ok(())
}
