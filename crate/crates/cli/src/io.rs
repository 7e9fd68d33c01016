//! PNG input and output, raw map dumps, and failure-safe artifact writing.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use image::codecs::png::PngEncoder;
use image::{ColorType, DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat, ImageReader};
use ssim_forensics::color::RgbImage;
use ssim_forensics::heatmap::Heatmap;
use ssim_forensics::{GrayImage, Map};

/// A decoded 8-bit PNG mapped into `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Loaded {
    Gray(GrayImage),
    Rgb(RgbImage),
}

impl Loaded {
    pub fn dimensions(&self) -> (usize, usize) {
        match self {
            Self::Gray(g) => (g.width(), g.height()),
            Self::Rgb(c) => (c.width(), c.height()),
        }
    }
}

/// Reads an 8-bit grayscale or 8-bit RGB PNG. Other formats, bit depths and
/// alpha channels are rejected.
pub fn load_png(path: &Path) -> Result<Loaded> {
    let reader = ImageReader::open(path)
        .with_context(|| format!("cannot open {}", path.display()))?
        .with_guessed_format()
        .with_context(|| format!("cannot read {}", path.display()))?;
    if reader.format() != Some(ImageFormat::Png) {
        bail!("{}: only PNG input is supported", path.display());
    }
    let decoded = reader
        .decode()
        .with_context(|| format!("cannot decode {}", path.display()))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let loaded = match decoded {
        DynamicImage::ImageLuma8(img) => Loaded::Gray(GrayImage::from_u8(w, h, img.as_raw())?),
        DynamicImage::ImageRgb8(img) => Loaded::Rgb(RgbImage::from_u8(w, h, img.as_raw())?),
        other => {
            let color = other.color();
            let reason = if color.bytes_per_pixel() / color.channel_count() > 1 {
                "16-bit PNGs are not supported; convert to 8 bits per channel"
            } else if color.has_alpha() {
                "PNGs with an alpha channel are not supported; flatten to gray or RGB"
            } else {
                "unsupported PNG color type"
            };
            bail!("{}: {reason} (found {color:?})", path.display());
        }
    };
    Ok(loaded)
}

pub fn encode_png(width: usize, height: usize, color: ColorType, data: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    PngEncoder::new(Cursor::new(&mut out)).write_image(
        data,
        u32::try_from(width)?,
        u32::try_from(height)?,
        ExtendedColorType::from(color),
    )?;
    Ok(out)
}

pub fn gray_png(img: &GrayImage) -> Result<Vec<u8>> {
    encode_png(img.width(), img.height(), ColorType::L8, &img.to_u8())
}

pub fn heatmap_png(h: &Heatmap) -> Result<Vec<u8>> {
    encode_png(h.width, h.height, ColorType::Rgb8, &h.to_rgb8())
}

/// `u32` width, `u32` height, then the samples as `f64`, all little-endian
/// and row-major.
pub fn raw_dump(map: &Map) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(8 + 8 * map.len());
    out.extend_from_slice(&u32::try_from(map.width)?.to_le_bytes());
    out.extend_from_slice(&u32::try_from(map.height)?.to_le_bytes());
    for v in &map.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn read_raw_dump(bytes: &[u8]) -> Result<Map> {
    if bytes.len() < 8 {
        bail!("raw dump shorter than its header");
    }
    let dim = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes")) as usize;
    let (w, h) = (dim(0), dim(4));
    let body = &bytes[8..];
    if body.len() != 8 * w * h {
        bail!("raw dump holds {} bytes for a {w}x{h} map", body.len());
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(Map::new(w, h, data)?)
}

/// Files and directories written by one command. Unless [`commit`] is
/// called, everything recorded is removed again when the value is dropped.
///
/// [`commit`]: Artifacts::commit
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<PathBuf>,
    dirs: Vec<PathBuf>,
    committed: bool,
}

impl Artifacts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Creates `dir` and any missing parents, remembering the ones created.
    pub fn dir(&mut self, dir: &Path) -> Result<()> {
        let missing: Vec<PathBuf> = dir
            .ancestors()
            .filter(|p| !p.as_os_str().is_empty() && !p.exists())
            .map(Path::to_path_buf)
            .collect();
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        self.dirs.extend(missing.into_iter().rev());
        Ok(())
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        if let Some(parent) = path.parent() {
            self.dir(parent)?;
        }
        self.files.push(path.to_path_buf());
        fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.files
    }

    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Artifacts {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in self.files.iter().rev() {
            let _ = fs::remove_file(f);
        }
        for d in self.dirs.iter().rev() {
            let _ = fs::remove_dir(d);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_dump_round_trips() {
        let m = Map::new(3, 2, vec![0.0, -1.0, f64::NAN, 0.5, 1.0, 1e-300]).unwrap();
        let bytes = raw_dump(&m).unwrap();
        assert_eq!(bytes.len(), 8 + 6 * 8);
        assert_eq!(&bytes[..8], &[3, 0, 0, 0, 2, 0, 0, 0]);
        let back = read_raw_dump(&bytes).unwrap();
        assert_eq!((back.width, back.height), (3, 2));
        for (a, b) in m.data.iter().zip(&back.data) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert!(read_raw_dump(&bytes[..20]).is_err());
    }

    #[test]
    fn uncommitted_artifacts_are_removed() {
        let tmp = tempfile::tempdir().unwrap();
        let nested = tmp.path().join("a/b");
        let file = nested.join("x.txt");
        {
            let mut art = Artifacts::new();
            art.write(&file, b"partial").unwrap();
            assert!(file.exists());
        }
        assert!(!file.exists());
        assert!(!tmp.path().join("a").exists());

        let mut art = Artifacts::new();
        art.write(&file, b"kept").unwrap();
        art.commit();
        assert_eq!(fs::read(&file).unwrap(), b"kept");
    }

    #[test]
    fn png_round_trip_and_rejections() {
        let tmp = tempfile::tempdir().unwrap();
        let gray = GrayImage::from_u8(3, 2, &[0, 64, 128, 192, 255, 7]).unwrap();
        let p = tmp.path().join("g.png");
        fs::write(&p, gray_png(&gray).unwrap()).unwrap();
        assert_eq!(load_png(&p).unwrap(), Loaded::Gray(gray));

        let deep = tmp.path().join("deep.png");
        image::ImageBuffer::<image::Luma<u16>, _>::from_raw(2, 2, vec![0u16, 1, 2, 65535])
            .unwrap()
            .save(&deep)
            .unwrap();
        let err = load_png(&deep).unwrap_err().to_string();
        assert!(err.contains("16-bit"), "{err}");

        let alpha = tmp.path().join("alpha.png");
        image::RgbaImage::from_raw(1, 1, vec![1, 2, 3, 4])
            .unwrap()
            .save(&alpha)
            .unwrap();
        let err = load_png(&alpha).unwrap_err().to_string();
        assert!(err.contains("alpha"), "{err}");

        let text = tmp.path().join("not.png");
        fs::write(&text, "hello").unwrap();
        assert!(load_png(&text).is_err());
    }
}
