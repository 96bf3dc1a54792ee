//! Grayscale raster type, PGM/PNG file I/O and the dataset preprocessing
//! steps (intensity normalization, area-average resizing).

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Real-valued grayscale image stored row-major.
///
/// Pixel values are nominally in `[0, 255]` after loading but are not clamped
/// internally.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "zero-sized image {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Image {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Image::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Image::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_square(&self) -> bool {
        self.width == self.height
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Population standard deviation (divides by the pixel count).
    pub fn std_dev(&self) -> f64 {
        let mean = self.mean();
        let ss: f64 = self.data.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / self.data.len() as f64).sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Circular shift: output(x, y) = input(x - dx, y - dy) with wrap-around.
    pub fn circular_shift(&self, dx: isize, dy: isize) -> Image {
        let (w, h) = (self.width as isize, self.height as isize);
        let mut data = vec![0.0; self.data.len()];
        for y in 0..h {
            let sy = (y - dy).rem_euclid(h);
            for x in 0..w {
                let sx = (x - dx).rem_euclid(w);
                data[(y * w + x) as usize] = self.data[(sy * w + sx) as usize];
            }
        }
        Image {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Copies the `w`x`h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Image> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::InvalidArgument(format!(
                "crop {w}x{h}+{x0}+{y0} outside {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x0 + w]);
        }
        Image::new(w, h, data)
    }
}

/// Loads a grayscale raster. PGM (P2 and P5, 8 or 16 bit) is always
/// supported; PNG needs the `png` feature. Values are rescaled to `[0, 255]`.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        return parse_pgm(&bytes);
    }
    if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        return decode_png(&bytes);
    }
    Err(Error::UnsupportedFormat(format!(
        "{}: not a PGM or PNG file",
        path.display()
    )))
}

#[cfg(feature = "png")]
fn decode_png(bytes: &[u8]) -> Result<Image> {
    let img = ::image::load_from_memory_with_format(bytes, ::image::ImageFormat::Png)
        .map_err(|e| Error::UnsupportedFormat(format!("png decode: {e}")))?;
    let gray = img.to_luma16();
    let (w, h) = gray.dimensions();
    let data = gray
        .into_raw()
        .into_iter()
        .map(|v| v as f64 * 255.0 / 65535.0)
        .collect();
    Image::new(w as usize, h as usize, data)
}

#[cfg(not(feature = "png"))]
fn decode_png(_bytes: &[u8]) -> Result<Image> {
    Err(Error::UnsupportedFormat(
        "PNG support not compiled in".to_string(),
    ))
}

/// Parses a binary (P5) or ASCII (P2) PGM buffer.
pub fn parse_pgm(bytes: &[u8]) -> Result<Image> {
    let bad = |msg: &str| Error::UnsupportedFormat(format!("PGM: {msg}"));
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(bad("missing magic")),
    };
    let mut pos = 2;
    let mut header = [0usize; 3];
    for field in header.iter_mut() {
        *field = next_token(bytes, &mut pos)
            .ok_or_else(|| bad("truncated header"))?
            .parse()
            .map_err(|_| bad("malformed header"))?;
    }
    let [width, height, maxval] = header;
    if width == 0 || height == 0 {
        return Err(Error::InvalidImage(format!(
            "zero-sized image {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(bad("maxval out of range"));
    }
    let n = width * height;
    let scale = 255.0 / maxval as f64;
    let mut data = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let wide = maxval > 255;
        let need = if wide { 2 * n } else { n };
        let raster = bytes
            .get(pos..pos + need)
            .ok_or_else(|| bad("truncated raster"))?;
        if wide {
            data.extend(
                raster
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale),
            );
        } else {
            data.extend(raster.iter().map(|&b| b as f64 * scale));
        }
    } else {
        for _ in 0..n {
            let v: usize = next_token(bytes, &mut pos)
                .ok_or_else(|| bad("truncated raster"))?
                .parse()
                .map_err(|_| bad("malformed sample"))?;
            if v > maxval {
                return Err(bad("sample exceeds maxval"));
            }
            data.push(v as f64 * scale);
        }
    }
    Image::new(width, height, data)
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a str> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return None;
    }
    std::str::from_utf8(&bytes[start..*pos]).ok()
}

/// Encodes as 8-bit binary PGM; values are rounded and clamped to `[0, 255]`.
pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.data.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8));
    out
}

pub fn save_pgm(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_pgm(img))
        .map_err(|e| Error::io(path, e))
}

/// Affine intensity map to the requested mean and population standard
/// deviation. Near-constant inputs map to a constant `target_mean` image.
pub fn normalize(img: &Image, target_mean: f64, target_std: f64) -> Result<Image> {
    if !(target_std > 0.0) || !target_std.is_finite() || !target_mean.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "target std must be positive and finite, got {target_std}"
        )));
    }
    let mean = img.mean();
    let std = img.std_dev();
    if std < 1e-12 {
        return Ok(img.map(|_| target_mean));
    }
    let gain = target_std / std;
    Ok(img.map(|v| (v - mean) * gain + target_mean))
}

/// Integer box decimation: each output pixel is the mean of its source block.
pub fn resize_box(img: &Image, new_w: usize, new_h: usize) -> Result<Image> {
    if new_w == 0 || new_h == 0 || img.width % new_w != 0 || img.height % new_h != 0 {
        return Err(Error::InvalidArgument(format!(
            "box resize {}x{} -> {new_w}x{new_h} needs integer factors",
            img.width, img.height
        )));
    }
    let (fx, fy) = (img.width / new_w, img.height / new_h);
    let norm = 1.0 / (fx * fy) as f64;
    let data = (0..new_h)
        .flat_map(|oy| (0..new_w).map(move |ox| (ox, oy)))
        .map(|(ox, oy)| {
            let mut acc = 0.0;
            for y in oy * fy..(oy + 1) * fy {
                let row = &img.data[y * img.width..(y + 1) * img.width];
                acc += row[ox * fx..(ox + 1) * fx].iter().sum::<f64>();
            }
            acc * norm
        })
        .collect();
    Image::new(new_w, new_h, data)
}

/// Area-average resampling for arbitrary (including fractional) ratios.
///
/// Each output pixel integrates the source over its footprint, weighting every
/// source pixel by its overlap area. Only downscaling is supported.
pub fn resize_area(img: &Image, new_w: usize, new_h: usize) -> Result<Image> {
    if new_w == 0 || new_h == 0 || new_w > img.width || new_h > img.height {
        return Err(Error::InvalidArgument(format!(
            "area resize {}x{} -> {new_w}x{new_h} must shrink",
            img.width, img.height
        )));
    }
    let wx = overlap_weights(img.width, new_w);
    let wy = overlap_weights(img.height, new_h);
    // rows first, then columns
    let mut tmp = vec![0.0; img.height * new_w];
    for y in 0..img.height {
        let row = &img.data[y * img.width..(y + 1) * img.width];
        for (ox, taps) in wx.iter().enumerate() {
            tmp[y * new_w + ox] = taps.iter().map(|&(sx, w)| w * row[sx]).sum();
        }
    }
    let mut data = vec![0.0; new_w * new_h];
    for (oy, taps) in wy.iter().enumerate() {
        for ox in 0..new_w {
            data[oy * new_w + ox] = taps.iter().map(|&(sy, w)| w * tmp[sy * new_w + ox]).sum();
        }
    }
    Image::new(new_w, new_h, data)
}

fn overlap_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let ratio = src as f64 / dst as f64;
    (0..dst)
        .map(|o| {
            let (lo, hi) = (o as f64 * ratio, (o + 1) as f64 * ratio);
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(src);
            (first..last)
                .filter_map(|s| {
                    let overlap = (hi.min((s + 1) as f64) - lo.max(s as f64)).max(0.0);
                    (overlap > 0.0).then_some((s, overlap / ratio))
                })
                .collect()
        })
        .collect()
}

/// Box decimation when the factors are integral, area averaging otherwise.
pub fn resize(img: &Image, new_w: usize, new_h: usize) -> Result<Image> {
    if img.width == new_w && img.height == new_h {
        return Ok(img.clone());
    }
    if new_w > 0 && new_h > 0 && img.width % new_w == 0 && img.height % new_h == 0 {
        resize_box(img, new_w, new_h)
    } else {
        resize_area(img, new_w, new_h)
    }
}
