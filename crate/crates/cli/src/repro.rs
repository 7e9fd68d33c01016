//! Regenerates every reference value with its figure artifacts and checks
//! each against its tolerance.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use ssim_forensics::color::{
    equiluminant_probe, gray_mssim_against_white, rgb_to_gray, weighted_ycbcr_ssim, Channel,
    GrayCoefficients, ProbeResult, RgbImage,
};
use ssim_forensics::extremal::{component_minima, Component, HazardReport};
use ssim_forensics::mse;
use ssim_forensics::patterns::{self, luminance_sweep, DITHER_AMPLITUDE};
use ssim_forensics::{
    compare, gaussian_kernel, ssim_full, Error, GrayImage, KernelShape, Map, SsimParams,
    UndefinedPolicy,
};

use crate::args::RangeMode;
use crate::commands::{
    corpus_check, minima_report, render_map, scan_pair, sweep_csv, witness, CorpusCheck,
    MinimaReport,
};
use crate::io::{encode_png, gray_png, load_png, Artifacts};
use crate::json::{self, SCHEMA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// `|value − expected| ≤ tolerance`.
    Within,
    /// `value < expected`.
    Below,
    /// `value ≥ expected`.
    AtLeast,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub rule: Rule,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Default, Serialize)]
pub struct Checks(Vec<Check>);

impl Checks {
    pub fn within(&mut self, name: impl Into<String>, value: f64, expected: f64, tolerance: f64) {
        self.push(
            name,
            value,
            Rule::Within,
            expected,
            tolerance,
            (value - expected).abs() <= tolerance,
        );
    }

    pub fn below(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.push(name, value, Rule::Below, bound, 0.0, value < bound);
    }

    pub fn at_least(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.push(name, value, Rule::AtLeast, bound, 0.0, value >= bound);
    }

    /// A yes/no condition, recorded as `1 ≥ 1` or `0 ≥ 1`.
    pub fn holds(&mut self, name: impl Into<String>, ok: bool) {
        self.at_least(name, if ok { 1.0 } else { 0.0 }, 1.0);
    }

    fn push(
        &mut self,
        name: impl Into<String>,
        value: f64,
        rule: Rule,
        expected: f64,
        tolerance: f64,
        pass: bool,
    ) {
        self.0.push(Check {
            name: name.into(),
            value,
            rule,
            expected,
            tolerance,
            pass,
        });
    }

    pub fn all(&self) -> &[Check] {
        &self.0
    }

    pub fn failures(&self) -> usize {
        self.0.iter().filter(|c| !c.pass).count()
    }
}

fn write_json<T: Serialize>(art: &mut Artifacts, dir: &Path, name: &str, value: &T) -> Result<()> {
    art.write(&dir.join(name), &json::to_bytes(value)?)
}

fn gray8(level: u8, size: usize) -> Result<GrayImage> {
    Ok(GrayImage::from_u8(size, size, &vec![level; size * size])?)
}

#[derive(Debug, Serialize)]
struct ConstantPair {
    levels: [u8; 2],
    files: [String; 2],
    mssim_8bit: f64,
    mssim_unit: f64,
    expected: f64,
}

const CONSTANT_PAIRS: [([u8; 2], f64); 5] = [
    ([253, 255], 0.99997),
    ([128, 130], 0.99988),
    ([0, 2], 0.61914),
    ([222, 255], 0.99047),
    ([0, 26], 0.00953),
];

/// Constant gray pairs, written as PNGs and compared after reading back.
fn constants(art: &mut Artifacts, dir: &Path, checks: &mut Checks) -> Result<()> {
    let sub = dir.join("constants");
    let mut rows = Vec::new();
    for (levels, expected) in CONSTANT_PAIRS {
        let mut imgs = Vec::new();
        let mut files = Vec::new();
        for level in levels {
            let name = format!("constant-{level:03}.png");
            art.write(&sub.join(&name), &gray_png(&gray8(level, 32)?)?)?;
            imgs.push(match load_png(&sub.join(&name))? {
                crate::io::Loaded::Gray(g) => g,
                crate::io::Loaded::Rgb(_) => unreachable!("gray PNG written above"),
            });
            files.push(format!("constants/{name}"));
        }
        let unit = compare(&imgs[0], &imgs[1], &SsimParams::default())?.mssim;
        let eight = compare(
            &imgs[0].scaled(255.0)?,
            &imgs[1].scaled(255.0)?,
            &SsimParams::eight_bit(),
        )?
        .mssim;
        let tag = format!("{}-{}", levels[0], levels[1]);
        checks.within(
            format!("constant {tag} mssim (8-bit)"),
            eight,
            expected,
            1e-5,
        );
        checks.within(
            format!("constant {tag} 8-bit vs unit"),
            eight - unit,
            0.0,
            1e-9,
        );
        rows.push(ConstantPair {
            levels,
            files: [files[0].clone(), files[1].clone()],
            mssim_8bit: eight,
            mssim_unit: unit,
            expected,
        });
    }
    write_json(art, dir, "constants.json", &Section::new("constants", rows))
}

#[derive(Debug, Serialize)]
struct Section<T> {
    schema: u32,
    section: &'static str,
    results: T,
}

impl<T> Section<T> {
    fn new(section: &'static str, results: T) -> Self {
        Self {
            schema: SCHEMA,
            section,
            results,
        }
    }
}

fn minima(art: &mut Artifacts, dir: &Path, checks: &mut Checks) -> Result<()> {
    let report: MinimaReport = minima_report(0.01, 0.03, RangeMode::Unit, 64)?;
    let want = ["0.0001", "0.0036", "-0.9964"];
    let got = [
        &report.printed.l_min,
        &report.printed.c_min,
        &report.printed.s_min,
    ];
    for ((name, w), g) in ["l_min", "c_min", "s_min"].iter().zip(want).zip(got) {
        checks.holds(format!("{name} prints as {w}"), g == w);
    }
    let m = &report.minima;
    checks.within("l_min closed form", m.l_min, 0.0001, 5e-5);
    checks.within("c_min closed form", m.c_min, 0.0036, 5e-5);
    checks.within("s_min closed form", m.s_min, -0.9964, 5e-5);
    for w in &report.witnesses {
        let tol = match (w.component, w.kernel) {
            (Component::L, _) | (_, KernelShape::Uniform) => 1e-6,
            (_, KernelShape::Gaussian) => 5e-3,
        };
        checks.within(
            format!("{:?} witness ({:?} kernel)", w.component, w.kernel).to_lowercase(),
            w.value,
            w.minimum,
            tol,
        );
    }
    let eight = component_minima(&SsimParams::eight_bit());
    checks.within(
        "minima independent of L",
        (eight.s_min - m.s_min).abs()
            + (eight.c_min - m.c_min).abs()
            + (eight.l_min - m.l_min).abs(),
        0.0,
        1e-15,
    );

    let sub = dir.join("witnesses");
    for which in [Component::L, Component::C, Component::S] {
        let (_, r) = witness(which, 64, &SsimParams::default())?;
        let (a, b) = ssim_forensics::extremal::witness_pair(which, 64)?;
        let tag = format!("{which:?}").to_lowercase();
        art.write(&sub.join(format!("{tag}-a.png")), &gray_png(&a)?)?;
        art.write(&sub.join(format!("{tag}-b.png")), &gray_png(&b)?)?;
        art.write(
            &sub.join(format!("{tag}-ssim.png")),
            &render_map(&r, "ssim", &r.maps.ssim)?,
        )?;
    }
    write_json(art, dir, "minima.json", &report)
}

#[derive(Debug, Serialize)]
struct ColorRow {
    rgb: [f64; 3],
    gray_level: u8,
    mssim: f64,
    expected: f64,
    file: String,
}

#[derive(Debug, Serialize)]
struct ColorResults {
    against_white: Vec<ColorRow>,
    gray_level_of_white: u8,
    printed_gray_level_for_red: u8,
    ycbcr_weighted_red: f64,
    probes: Vec<ProbeRow>,
    blue_unreachable_for_target_one: bool,
    blue_target_error: Option<String>,
}

#[derive(Debug, Serialize)]
struct ProbeRow {
    channel: Channel,
    target: f64,
    result: Option<ProbeResult>,
    error: Option<String>,
}

fn color(art: &mut Artifacts, dir: &Path, checks: &mut Checks) -> Result<()> {
    const TARGET: f64 = 0.99047;
    let sub = dir.join("color");
    let level = |rgb: [f64; 3]| -> Result<u8> {
        let g = rgb_to_gray(
            &RgbImage::constant(1, 1, rgb)?,
            GrayCoefficients::REC601,
            true,
        )?;
        Ok(g.to_u8()[0])
    };
    let mut rows = Vec::new();
    for (rgb, expected, name) in [
        ([0.56, 1.0, 1.0], TARGET, "red-reduced"),
        ([1.0, 0.78, 1.0], TARGET, "green-reduced"),
        ([1.0, 1.0, 0.0], 0.99276, "blue-removed"),
    ] {
        let mssim = gray_mssim_against_white(rgb)?;
        checks.within(format!("white vs {name} {rgb:?}"), mssim, expected, 1e-3);
        let swatch = RgbImage::constant(16, 16, rgb)?;
        let file = format!("color/{name}.png");
        art.write(
            &sub.join(format!("{name}.png")),
            &encode_png(16, 16, image::ColorType::Rgb8, &swatch.to_u8())?,
        )?;
        rows.push(ColorRow {
            rgb,
            gray_level: level(rgb)?,
            mssim,
            expected,
            file,
        });
    }
    // The printed red level 0.56 sits just below the rounding edge of 222.
    let red_level = rows[0].gray_level;
    checks.within(
        "gray level of (0.56, 1, 1) near 222",
        f64::from(red_level),
        222.0,
        1.0,
    );

    let white = RgbImage::constant(16, 16, [1.0; 3])?;
    let red = RgbImage::constant(16, 16, [0.56, 1.0, 1.0])?;
    let ycc = weighted_ycbcr_ssim(&white, &red, &SsimParams::default())?.weighted;
    checks.below(
        "ycbcr weighted below gray path for red-reduced",
        ycc,
        rows[0].mssim,
    );

    let mut probes = Vec::new();
    for (channel, expected) in [
        (Channel::Red, Some(0.56)),
        (Channel::Green, Some(0.78)),
        (Channel::Blue, None),
    ] {
        let r = equiluminant_probe(channel, TARGET);
        let k = channel as usize;
        match (&r, expected) {
            (Ok(p), Some(e)) => checks.within(
                format!("{channel:?} probe level").to_lowercase(),
                p.rgb[k],
                e,
                0.02,
            ),
            (Err(_), None) => checks.holds("blue probe unreachable at 0.99047", true),
            (Ok(_), None) => checks.holds("blue probe unreachable at 0.99047", false),
            (Err(_), Some(_)) => {
                checks.holds(format!("{channel:?} probe converges").to_lowercase(), false)
            }
        }
        probes.push(ProbeRow {
            channel,
            target: TARGET,
            error: r.as_ref().err().map(ToString::to_string),
            result: r.ok(),
        });
    }
    let blue_one = equiluminant_probe(Channel::Blue, 1.0);
    let unreachable = blue_one.is_err();
    checks.holds("blue target 1.0 unreachable", unreachable);

    let results = ColorResults {
        against_white: rows,
        gray_level_of_white: level([1.0; 3])?,
        printed_gray_level_for_red: 222,
        ycbcr_weighted_red: ycc,
        probes,
        blue_unreachable_for_target_one: unreachable,
        blue_target_error: blue_one.err().map(|e| e.to_string()),
    };
    write_json(art, dir, "color.json", &Section::new("color", results))
}

#[derive(Debug, Serialize)]
struct GradientRow {
    size: usize,
    mssim: f64,
    mean_s: f64,
    mean_c: f64,
    min_c: f64,
    valid_width: usize,
    mssim_via_png: f64,
    negative_fraction: f64,
}

fn gradients(art: &mut Artifacts, dir: &Path, checks: &mut Checks) -> Result<()> {
    let sub = dir.join("gradients");
    let mut rows = Vec::new();
    for (n, want_mssim, want_s) in [(256, 0.51, 0.86), (64, -0.07, -0.10), (16, -0.82, -0.90)] {
        let (a, b) = patterns::gradient_pair(n, n)?;
        let r = compare(&a, &b, &SsimParams::default())?;
        let (fa, fb) = (format!("gradient-{n}-a.png"), format!("gradient-{n}-b.png"));
        art.write(&sub.join(&fa), &gray_png(&a)?)?;
        art.write(&sub.join(&fb), &gray_png(&b)?)?;
        let read = |f: &str| -> Result<GrayImage> {
            match load_png(&sub.join(f))? {
                crate::io::Loaded::Gray(g) => Ok(g),
                crate::io::Loaded::Rgb(_) => unreachable!("gray PNG written above"),
            }
        };
        let via_png = compare(&read(&fa)?, &read(&fb)?, &SsimParams::default())?.mssim;
        for (name, map) in [
            ("ssim", &r.maps.ssim),
            ("l", &r.maps.l),
            ("c", &r.maps.c),
            ("s", &r.maps.s),
        ] {
            art.write(
                &sub.join(format!("gradient-{n}-{name}.png")),
                &render_map(&r, name, map)?,
            )?;
        }
        checks.within(format!("gradient {n} mssim"), r.mssim, want_mssim, 0.02);
        checks.within(
            format!("gradient {n} mssim via PNG"),
            via_png,
            want_mssim,
            0.02,
        );
        checks.within(format!("gradient {n} mean s"), r.mean_s, want_s, 0.03);
        checks.within(format!("gradient {n} c = 1"), r.maps.c.min(), 1.0, 1e-9);
        let negative = r.maps.ssim.data.iter().filter(|&&v| v < 0.0).count();
        rows.push(GradientRow {
            size: n,
            mssim: r.mssim,
            mean_s: r.mean_s,
            mean_c: r.mean_c,
            min_c: r.maps.c.min(),
            valid_width: r.maps.width(),
            mssim_via_png: via_png,
            negative_fraction: negative as f64 / r.maps.ssim.len() as f64,
        });
    }
    checks.within(
        "gradient 16 valid width",
        rows[2].valid_width as f64,
        6.0,
        0.0,
    );

    let same = compare(
        &patterns::gradient_pair(64, 64)?.0,
        &patterns::gradient_pair(64, 64)?.0,
        &SsimParams::default(),
    )?;
    checks.within("identical images mssim", same.mssim, 1.0, 0.0);
    write_json(art, dir, "gradients.json", &Section::new("gradients", rows))
}

#[derive(Debug, Serialize)]
struct SweepResults {
    steps: usize,
    black_file: &'static str,
    white_file: &'static str,
    black_max_above_0_2: f64,
    white_at_222: f64,
    max_closed_form_deviation: f64,
}

fn sweeps(art: &mut Artifacts, dir: &Path, checks: &mut Checks) -> Result<()> {
    const STEPS: usize = 256;
    let black = luminance_sweep(0.0, STEPS)?;
    let white = luminance_sweep(1.0, STEPS)?;
    art.write(&dir.join("sweep-black.csv"), sweep_csv(&black).as_bytes())?;
    art.write(&dir.join("sweep-white.csv"), sweep_csv(&white).as_bytes())?;

    let c1 = SsimParams::default().c1();
    let closed = |r: f64, v: f64| (2.0 * r * v + c1) / (r * r + v * v + c1);
    let deviation = black
        .iter()
        .map(|s| (s.mssim - closed(0.0, s.value)).abs())
        .chain(white.iter().map(|s| (s.mssim - closed(1.0, s.value)).abs()))
        .fold(0.0, f64::max);
    let black_max = black
        .iter()
        .filter(|s| s.value > 0.2)
        .map(|s| s.mssim)
        .fold(f64::NEG_INFINITY, f64::max);
    let at_222 = white[222].mssim;

    checks.within("black sweep at 0", black[0].mssim, 1.0, 0.0);
    checks.below("black sweep max for v > 0.2", black_max, 0.0025);
    checks.within("white sweep at 222/255", at_222, 0.99047, 1e-5);
    checks.within("sweep vs closed form", deviation, 0.0, 1e-12);
    let results = SweepResults {
        steps: STEPS,
        black_file: "sweep-black.csv",
        white_file: "sweep-white.csv",
        black_max_above_0_2: black_max,
        white_at_222: at_222,
        max_closed_form_deviation: deviation,
    };
    write_json(art, dir, "sweep.json", &Section::new("sweep", results))
}

#[derive(Debug, Serialize)]
struct HazardResults {
    gradient_64: HazardReport,
    gradient_16: HazardReport,
    gradient_16_flagged: usize,
    gradient_16_flag_and_nan: String,
    gradient_16_reject: String,
    gradient_16_signed_magnitude_mssim: f64,
    mixed_width: usize,
    mixed_height: usize,
    mixed_defined: usize,
    mixed_undefined: usize,
    mixed_mssim: f64,
    mixed_mean_of_defined: f64,
    single_pixel_undefined: bool,
    single_pixel_mssim: f64,
}

const MIXED_WIDTH: usize = 48;
const MIXED_HEIGHT: usize = 24;

fn hazards(art: &mut Artifacts, dir: &Path, checks: &mut Checks) -> Result<()> {
    let gamma = SsimParams {
        gamma: 1.5,
        ..SsimParams::default()
    };
    let (a64, b64) = patterns::gradient_pair(64, 64)?;
    let (h64, _, _) = scan_pair(&a64, &b64, &gamma)?;
    checks.at_least(
        "gradient 64 hazard count (gamma 1.5)",
        h64.count as f64,
        1.0,
    );

    let (a16, b16) = patterns::gradient_pair(16, 16)?;
    let (h16, _, flagged) = scan_pair(&a16, &b16, &gamma)?;
    checks.at_least(
        "gradient 16 hazard count (gamma 1.5)",
        h16.count as f64,
        1.0,
    );
    // Every pixel of this pair is flagged, so excluding them leaves nothing
    // to pool.
    let flag_outcome = match &flagged {
        Err(Error::AllUndefined(n)) => {
            checks.within(
                "gradient 16 flag-and-nan excludes all flagged",
                *n as f64,
                h16.count as f64,
                0.0,
            );
            format!("all {n} pixels excluded")
        }
        Ok(r) => {
            checks.within(
                "gradient 16 flag-and-nan excludes all flagged",
                r.defined_count as f64,
                (h16.total - h16.count) as f64,
                0.0,
            );
            format!("pooled {} over {} pixels", r.mssim, r.defined_count)
        }
        Err(e) => return Err(anyhow::anyhow!("unexpected pooling failure: {e}")),
    };
    let maps = flagged
        .as_ref()
        .map(|r| r.maps.undefined_count())
        .unwrap_or(h16.count);

    let reject = SsimParams {
        undefined_policy: UndefinedPolicy::Reject,
        ..gamma.clone()
    };
    let rejected = compare(&a16, &b16, &reject);
    checks.holds(
        "gradient 16 reject policy aborts",
        matches!(rejected, Err(Error::UndefinedPixels { .. })),
    );
    let signed = SsimParams {
        undefined_policy: UndefinedPolicy::SignedMagnitude,
        ..gamma.clone()
    };
    let signed_mssim = compare(&a16, &b16, &signed)?.mssim;

    // A checkerboard against a copy inverted on its left half only.
    let a = patterns::checkerboard(MIXED_WIDTH, MIXED_HEIGHT, 0.0, 1.0)?;
    let b = GrayImage::from_fn(MIXED_WIDTH, MIXED_HEIGHT, |x, y| {
        let v = a.get(x, y);
        if x < MIXED_WIDTH / 2 {
            1.0 - v
        } else {
            v
        }
    })?;
    let mixed = compare(&a, &b, &gamma)?;
    let defined: Vec<f64> = mixed
        .maps
        .ssim
        .data
        .iter()
        .zip(&mixed.maps.undefined)
        .filter(|(_, &u)| !u)
        .map(|(&v, _)| v)
        .collect();
    let mean_defined = defined.iter().sum::<f64>() / defined.len() as f64;
    checks.at_least(
        "half-inverted checkerboard flagged pixels (gamma 1.5)",
        mixed.undefined_count as f64,
        1.0,
    );
    checks.at_least(
        "half-inverted checkerboard defined pixels (gamma 1.5)",
        mixed.defined_count as f64,
        1.0,
    );
    checks.within(
        "half-inverted checkerboard pooled over defined only",
        mixed.mssim,
        mean_defined,
        1e-12,
    );
    art.write(
        &dir.join("hazard-half-inverted-ssim.png"),
        &render_map(&mixed, "ssim", &mixed.maps.ssim)?,
    )?;

    // s = −0.5 with γ = 0.5 next to a well-behaved pixel.
    let half = SsimParams {
        gamma: 0.5,
        ..SsimParams::default()
    };
    let ones = Map::filled(2, 1, 1.0);
    let s = Map::new(2, 1, vec![-0.5, 0.81])?;
    let single = ssim_full(&ones, &ones, &s, &half)?;
    let pooled = ssim_forensics::pool_mssim(&single)?;
    checks.holds("s = -0.5, gamma 0.5 flagged", single.undefined[0]);
    checks.within(
        "s = -0.5, gamma 0.5 excluded from pooling",
        pooled.mssim,
        0.9,
        1e-15,
    );

    let results = HazardResults {
        gradient_64: h64,
        gradient_16: h16,
        gradient_16_flagged: maps,
        gradient_16_flag_and_nan: flag_outcome,
        gradient_16_reject: match rejected {
            Err(e) => e.to_string(),
            Ok(r) => format!("not rejected: {}", r.mssim),
        },
        gradient_16_signed_magnitude_mssim: signed_mssim,
        mixed_width: MIXED_WIDTH,
        mixed_height: MIXED_HEIGHT,
        mixed_defined: mixed.defined_count,
        mixed_undefined: mixed.undefined_count,
        mixed_mssim: mixed.mssim,
        mixed_mean_of_defined: mean_defined,
        single_pixel_undefined: single.undefined[0],
        single_pixel_mssim: pooled.mssim,
    };
    write_json(art, dir, "hazard.json", &Section::new("hazard", results))
}

#[derive(Debug, Serialize)]
struct DitherResults {
    amplitude: f64,
    mssim: f64,
    negative_fraction: f64,
}

fn dither(art: &mut Artifacts, dir: &Path, checks: &mut Checks) -> Result<()> {
    let base = patterns::constant(64, 64, 0.5)?;
    let (a, b) = patterns::dither_pair(&base, DITHER_AMPLITUDE)?;
    let r = compare(&a, &b, &SsimParams::default())?;
    let negative =
        r.maps.ssim.data.iter().filter(|&&v| v < 0.0).count() as f64 / r.maps.ssim.len() as f64;
    art.write(&dir.join("dither/dither-a.png"), &gray_png(&a)?)?;
    art.write(&dir.join("dither/dither-b.png"), &gray_png(&b)?)?;
    art.write(
        &dir.join("dither/dither-ssim.png"),
        &render_map(&r, "ssim", &r.maps.ssim)?,
    )?;
    checks.below("dither mssim far below 0.99", r.mssim, 0.99);
    checks.at_least("dither negative ssim fraction", negative, 0.5);
    write_json(
        art,
        dir,
        "dither.json",
        &Section::new(
            "dither",
            DitherResults {
                amplitude: DITHER_AMPLITUDE,
                mssim: r.mssim,
                negative_fraction: negative,
            },
        ),
    )
}

#[derive(Debug, Serialize)]
struct MseResults {
    random_pairs: usize,
    max_identity_residual: f64,
    corpus: CorpusCheck,
}

/// Largest MSE identity residual over `pairs` seeded random image pairs.
pub fn identity_residual_over_random_pairs(seed: u64, pairs: usize) -> Result<f64> {
    let k = gaussian_kernel(11, 1.5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let (w, h) = (rng.random_range(11..=20), rng.random_range(11..=20));
        let a = GrayImage::from_fn(w, h, |_, _| rng.random())?;
        let b = GrayImage::from_fn(w, h, |_, _| rng.random())?;
        worst = worst.max(mse::mse_identity_residual(&a, &b, &k)?);
    }
    Ok(worst)
}

fn mse_relation(art: &mut Artifacts, dir: &Path, checks: &mut Checks) -> Result<()> {
    let residual = identity_residual_over_random_pairs(7, 100)?;
    checks.below("MSE identity residual over 100 pairs", residual, 1e-12);
    let corpus = corpus_check()?;
    checks.at_least(
        "corpus R² (quadratic, pooled)",
        corpus.structural.pooled.r_squared,
        0.9,
    );
    checks.at_least(
        "PSNR vs SSIM* linear R² in [0.2, 0.8]",
        corpus.psnr.r_squared,
        0.9,
    );
    let results = MseResults {
        random_pairs: 100,
        max_identity_residual: residual,
        corpus,
    };
    write_json(art, dir, "mse.json", &Section::new("mse", results))
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    schema: u32,
    passed: usize,
    failed: usize,
    checks: &'a [Check],
}

type SectionFn = fn(&mut Artifacts, &Path, &mut Checks) -> Result<()>;

/// Runs every section into `dir`. Artifacts are kept even when checks fail;
/// they are removed only if a section cannot be computed at all.
pub fn repro_all(dir: &Path) -> Result<Checks> {
    let mut art = Artifacts::new();
    art.dir(dir)?;
    let mut checks = Checks::default();
    let sections: [(&str, SectionFn); 8] = [
        ("minima", minima),
        ("constants", constants),
        ("color", color),
        ("gradients", gradients),
        ("sweep", sweeps),
        ("hazard", hazards),
        ("dither", dither),
        ("mse", mse_relation),
    ];
    for (name, run) in sections {
        run(&mut art, dir, &mut checks).with_context(|| format!("repro section {name} failed"))?;
    }
    let summary = Summary {
        schema: SCHEMA,
        passed: checks.all().len() - checks.failures(),
        failed: checks.failures(),
        checks: checks.all(),
    };
    write_json(&mut art, dir, "summary.json", &summary)?;
    art.commit();
    Ok(checks)
}

pub fn format_checks(checks: &Checks) -> String {
    let mut out = String::new();
    for c in checks.all() {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        let rule = match c.rule {
            Rule::Within => format!("{} ± {:e}", c.expected, c.tolerance),
            Rule::Below => format!("< {}", c.expected),
            Rule::AtLeast => format!(">= {}", c.expected),
        };
        writeln!(
            out,
            "{verdict}  {:<52} {:>24}  {rule}",
            c.name,
            format!("{:.10}", c.value)
        )
        .expect("writing to a String");
    }
    writeln!(
        out,
        "{} checks, {} failed",
        checks.all().len(),
        checks.failures()
    )
    .expect("writing to a String");
    out
}
