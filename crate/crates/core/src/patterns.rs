//! Synthetic images: constant fields, pixel checkerboards, mirrored ramps,
//! dither pairs and constant-luminance sweeps.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::{compare, Error, GrayImage, Result, SsimParams};

fn check_intensity(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} = {v} is outside [0, 1]"
        )))
    }
}

pub fn constant(width: usize, height: usize, value: f64) -> Result<GrayImage> {
    check_intensity("value", value)?;
    GrayImage::from_fn(width, height, |_, _| value)
}

/// Pixel-sized checkerboard: `a` where `x + y` is even, `b` elsewhere.
pub fn checkerboard(width: usize, height: usize, a: f64, b: f64) -> Result<GrayImage> {
    check_intensity("a", a)?;
    check_intensity("b", b)?;
    GrayImage::from_fn(width, height, |x, y| if (x + y) % 2 == 0 { a } else { b })
}

/// A horizontal ramp `x / (w − 1)` and its left-right mirror.
pub fn gradient_pair(width: usize, height: usize) -> Result<(GrayImage, GrayImage)> {
    if width < 2 {
        return Err(Error::InvalidParameter(format!(
            "gradient width must be at least 2, got {width}"
        )));
    }
    let span = (width - 1) as f64;
    let ramp = GrayImage::from_fn(width, height, |x, _| x as f64 / span)?;
    let mirror = GrayImage::from_fn(width, height, |x, _| (width - 1 - x) as f64 / span)?;
    Ok((ramp, mirror))
}

/// Default dither amplitude: 6 levels on the 8-bit scale.
pub const DITHER_AMPLITUDE: f64 = 6.0 / 255.0;

/// Adds `+amplitude` on even-parity pixels and `−amplitude` on odd ones
/// (first image), and the opposite signs (second image). Results are
/// clamped to `[0, 1]`.
pub fn dither_pair(base: &GrayImage, amplitude: f64) -> Result<(GrayImage, GrayImage)> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dither amplitude must be non-negative, got {amplitude}"
        )));
    }
    let shifted = |sign: f64| {
        GrayImage::from_fn(base.width(), base.height(), |x, y| {
            let s = if (x + y) % 2 == 0 { sign } else { -sign };
            (base.get(x, y) + s * amplitude).clamp(0.0, 1.0)
        })
    };
    Ok((shifted(1.0)?, shifted(-1.0)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSample {
    pub value: f64,
    pub mssim: f64,
}

/// Side of the constant images used by sweeps; one window plus a margin.
const SWEEP_SIZE: usize = 16;

/// MSSIM of a constant `reference` image against constant images on the
/// uniform grid `i / (steps − 1)`, endpoints included.
pub fn luminance_sweep(reference: f64, steps: usize) -> Result<Vec<SweepSample>> {
    luminance_sweep_with(reference, steps, &SsimParams::default())
}

pub fn luminance_sweep_with(
    reference: f64,
    steps: usize,
    params: &SsimParams,
) -> Result<Vec<SweepSample>> {
    if steps < 2 {
        return Err(Error::InvalidParameter(format!(
            "sweep needs at least 2 steps, got {steps}"
        )));
    }
    let size = SWEEP_SIZE.max(params.window_size);
    let fixed = constant(size, size, reference)?.scaled(params.dynamic_range)?;
    (0..steps)
        .map(|i| {
            let value = i as f64 / (steps - 1) as f64;
            let probe = constant(size, size, value)?.scaled(params.dynamic_range)?;
            let mssim = compare(&fixed, &probe, params)?.mssim;
            Ok(SweepSample { value, mssim })
        })
        .collect()
}

/// Separable Gaussian blur with clamp-to-edge borders, output the same size
/// as the input. Used to build smooth test content and blur distortions.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidSigma(sigma));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = taps.iter().sum();
    let taps: Vec<f64> = taps.into_iter().map(|t| t / norm).collect();
    let (w, h) = (img.width() as isize, img.height() as isize);
    let pass = |src: &dyn Fn(isize, isize) -> f64, horizontal: bool| -> Vec<f64> {
        let mut out = Vec::with_capacity((w * h) as usize);
        for y in 0..h {
            for x in 0..w {
                let v = taps
                    .iter()
                    .zip(-radius..=radius)
                    .map(|(t, d)| {
                        let (sx, sy) = if horizontal {
                            ((x + d).clamp(0, w - 1), y)
                        } else {
                            (x, (y + d).clamp(0, h - 1))
                        };
                        t * src(sx, sy)
                    })
                    .sum();
                out.push(v);
            }
        }
        out
    };
    let first = pass(&|x, y| img.get(x as usize, y as usize), true);
    let second = pass(&|x, y| first[(y * w + x) as usize], false);
    GrayImage::new(
        img.width(),
        img.height(),
        second.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
    )
}

/// A textual, serializable description of a generated pattern.
///
/// The text form is whitespace separated, e.g. `constant 16 16 0.5`,
/// `checkerboard 64 64 0 1`, `gradient-pair 16 16`,
/// `dither-pair 64 64 0.5 0.0235294` or `sweep 0 256`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PatternSpec {
    Constant {
        width: usize,
        height: usize,
        value: f64,
    },
    Checkerboard {
        width: usize,
        height: usize,
        a: f64,
        b: f64,
    },
    GradientPair {
        width: usize,
        height: usize,
    },
    DitherPair {
        width: usize,
        height: usize,
        base: f64,
        amplitude: f64,
    },
    Sweep {
        reference: f64,
        steps: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Generated {
    Single(GrayImage),
    Pair(GrayImage, GrayImage),
    Sweep(Vec<SweepSample>),
}

impl PatternSpec {
    pub fn parse<S: AsRef<str>>(tokens: &[S]) -> Result<Self> {
        let tokens: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
        let (kind, args) = tokens
            .split_first()
            .ok_or_else(|| Error::PatternSpec("empty pattern spec".into()))?;
        let expect = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::PatternSpec(format!(
                    "{kind} takes {n} arguments, got {}",
                    args.len()
                )))
            }
        };
        let size = |i: usize| -> Result<usize> {
            args[i]
                .parse()
                .map_err(|_| Error::PatternSpec(format!("not a pixel count: {:?}", args[i])))
        };
        let real = |i: usize| -> Result<f64> {
            args[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::PatternSpec(format!("not a number: {:?}", args[i])))
        };
        let spec = match *kind {
            "constant" => {
                expect(3)?;
                Self::Constant {
                    width: size(0)?,
                    height: size(1)?,
                    value: real(2)?,
                }
            }
            "checkerboard" => {
                expect(4)?;
                Self::Checkerboard {
                    width: size(0)?,
                    height: size(1)?,
                    a: real(2)?,
                    b: real(3)?,
                }
            }
            "gradient-pair" => {
                expect(2)?;
                Self::GradientPair {
                    width: size(0)?,
                    height: size(1)?,
                }
            }
            "dither-pair" => {
                if args.len() == 3 {
                    Self::DitherPair {
                        width: size(0)?,
                        height: size(1)?,
                        base: real(2)?,
                        amplitude: DITHER_AMPLITUDE,
                    }
                } else {
                    expect(4)?;
                    Self::DitherPair {
                        width: size(0)?,
                        height: size(1)?,
                        base: real(2)?,
                        amplitude: real(3)?,
                    }
                }
            }
            "sweep" => {
                expect(2)?;
                Self::Sweep {
                    reference: real(0)?,
                    steps: size(1)?,
                }
            }
            other => return Err(Error::PatternSpec(format!("unknown pattern {other:?}"))),
        };
        Ok(spec)
    }

    pub fn generate(&self) -> Result<Generated> {
        Ok(match *self {
            Self::Constant {
                width,
                height,
                value,
            } => Generated::Single(constant(width, height, value)?),
            Self::Checkerboard {
                width,
                height,
                a,
                b,
            } => Generated::Single(checkerboard(width, height, a, b)?),
            Self::GradientPair { width, height } => {
                let (a, b) = gradient_pair(width, height)?;
                Generated::Pair(a, b)
            }
            Self::DitherPair {
                width,
                height,
                base,
                amplitude,
            } => {
                let (a, b) = dither_pair(&constant(width, height, base)?, amplitude)?;
                Generated::Pair(a, b)
            }
            Self::Sweep { reference, steps } => {
                Generated::Sweep(luminance_sweep(reference, steps)?)
            }
        })
    }
}

impl FromStr for PatternSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(&s.split_whitespace().collect::<Vec<_>>())
    }
}

impl fmt::Display for PatternSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant {
                width,
                height,
                value,
            } => write!(f, "constant {width} {height} {value}"),
            Self::Checkerboard {
                width,
                height,
                a,
                b,
            } => write!(f, "checkerboard {width} {height} {a} {b}"),
            Self::GradientPair { width, height } => write!(f, "gradient-pair {width} {height}"),
            Self::DitherPair {
                width,
                height,
                base,
                amplitude,
            } => write!(f, "dither-pair {width} {height} {base} {amplitude}"),
            Self::Sweep { reference, steps } => write!(f, "sweep {reference} {steps}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{local_stats, luminance_component, LocalStats};

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn constant_and_checkerboard() {
        let black = constant(16, 16, 0.0).unwrap();
        assert!(black.data().iter().all(|&v| v == 0.0));
        assert!(constant(4, 4, 1.5).is_err());

        let cb = checkerboard(2, 2, 0.0, 1.0).unwrap();
        assert_eq!(cb.data(), &[0.0, 1.0, 1.0, 0.0]);

        let ab = checkerboard(7, 5, 0.2, 0.9).unwrap();
        let ba = checkerboard(7, 5, 0.9, 0.2).unwrap();
        for (x, y) in ab.data().iter().zip(ba.data()) {
            assert_eq!(*x + *y, 0.2 + 0.9);
            assert_ne!(x, y);
        }
    }

    #[test]
    fn gray_and_checkerboard_share_local_means() {
        let gray = constant(64, 64, 128.0 / 255.0).unwrap();
        let cb = checkerboard(64, 64, 0.0, 1.0).unwrap();
        let p = SsimParams::default();
        let s = local_stats(&gray, &cb, &p.kernel().unwrap()).unwrap();
        for (a, b) in s.mu_a.data.iter().zip(&s.mu_b.data) {
            close(*a, *b, 2e-3);
        }
    }

    #[test]
    fn near_black_constant_pair() {
        let a = constant(32, 32, 2.0 / 255.0).unwrap();
        let b = constant(32, 32, 0.0).unwrap();
        close(
            compare(&a, &b, &SsimParams::default()).unwrap().mssim,
            0.61914,
            1e-5,
        );
    }

    #[test]
    fn gradients_mirror_exactly() {
        let (a, b) = gradient_pair(16, 9).unwrap();
        for y in 0..9 {
            for x in 0..16 {
                assert_eq!(a.get(x, y), b.get(15 - x, y));
            }
        }
        assert_eq!(a.get(0, 0), 0.0);
        assert_eq!(a.get(15, 0), 1.0);
        assert!(gradient_pair(1, 4).is_err());
    }

    #[test]
    fn gradient_luminance_has_constant_columns() {
        let (a, b) = gradient_pair(64, 64).unwrap();
        let p = SsimParams::default();
        let s = local_stats(&a, &b, &p.kernel().unwrap()).unwrap();
        let l = luminance_component(&s, &p);
        for x in 0..l.width {
            for y in 1..l.height {
                close(l.get(x, y), l.get(x, 0), 1e-12);
            }
        }
    }

    #[test]
    fn gradient_pairs_match_figures() {
        let p = SsimParams::default();
        for (n, mssim, mean_s) in [(256, 0.51, 0.86), (64, -0.07, -0.10), (16, -0.82, -0.90)] {
            let (a, b) = gradient_pair(n, n).unwrap();
            let r = compare(&a, &b, &p).unwrap();
            close(r.mssim, mssim, 0.02);
            close(r.mean_s, mean_s, 0.03);
            assert!(r.maps.c.data.iter().all(|&c| (c - 1.0).abs() < 1e-9));
            assert_eq!(r.maps.width(), n - 10);
        }
    }

    #[test]
    fn dither_examples() {
        let base = constant(16, 16, 0.5).unwrap();
        let (a, b) = dither_pair(&base, 0.0).unwrap();
        assert_eq!(a, base);
        assert_eq!(b, base);

        let (a, b) = dither_pair(&base, DITHER_AMPLITUDE).unwrap();
        let r = compare(&a, &b, &SsimParams::default()).unwrap();
        let negative = r.maps.ssim.data.iter().filter(|&&v| v < 0.0).count();
        assert!(negative * 2 > r.maps.ssim.len());
        assert!(r.mssim < 0.5);

        let white = constant(7, 5, 1.0).unwrap();
        let (a, _) = dither_pair(&white, DITHER_AMPLITUDE).unwrap();
        let clamped = a.data().iter().filter(|&&v| v == 1.0).count();
        assert_eq!(clamped, (7 * 5usize).div_ceil(2));
        assert!(dither_pair(&white, -0.1).is_err());
    }

    #[test]
    fn sweeps() {
        let black = luminance_sweep(0.0, 256).unwrap();
        assert_eq!(black[0].mssim, 1.0);
        for s in black.iter().filter(|s| s.value > 0.2) {
            assert!(s.mssim < 0.0025);
        }
        let white = luminance_sweep(1.0, 256).unwrap();
        close(white[222].value, 222.0 / 255.0, 1e-15);
        close(white[222].mssim, 0.99047, 1e-5);

        let p = SsimParams::default();
        for (reference, samples) in [(0.0, &black), (1.0, &white)] {
            for s in samples {
                let stats = LocalStats::scalar(reference, s.value, 0.0, 0.0, 0.0);
                close(s.mssim, luminance_component(&stats, &p).data[0], 1e-12);
            }
        }
        assert!(luminance_sweep(0.0, 1).is_err());
    }

    #[test]
    fn spec_text_round_trips() {
        for text in [
            "constant 16 16 0.5",
            "checkerboard 64 64 0 1",
            "gradient-pair 16 16",
            "dither-pair 8 8 0.5 0.1",
            "sweep 1 5",
        ] {
            let spec: PatternSpec = text.parse().unwrap();
            assert_eq!(spec.to_string().parse::<PatternSpec>().unwrap(), spec);
        }
        assert!("constant 16 16".parse::<PatternSpec>().is_err());
        assert!("spiral 3 3".parse::<PatternSpec>().is_err());
        assert!("constant a 16 0.5".parse::<PatternSpec>().is_err());
        assert!("".parse::<PatternSpec>().is_err());
        assert_eq!(
            "dither-pair 4 4 0.5".parse::<PatternSpec>().unwrap(),
            PatternSpec::DitherPair {
                width: 4,
                height: 4,
                base: 0.5,
                amplitude: DITHER_AMPLITUDE
            }
        );
    }

    #[test]
    fn generation_is_deterministic() {
        let spec: PatternSpec = "dither-pair 12 12 0.3 0.05".parse().unwrap();
        assert_eq!(spec.generate().unwrap(), spec.generate().unwrap());
    }

    #[test]
    fn blur_preserves_constants() {
        let c = constant(9, 7, 0.4).unwrap();
        let b = gaussian_blur(&c, 1.3).unwrap();
        for v in b.data() {
            close(*v, 0.4, 1e-15);
        }
    }
}
