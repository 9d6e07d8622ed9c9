//! On-disk raster format and 8-bit PNG export.
//!
//! A raster is two files: a UTF-8 header of `key=value` lines
//!
//! ```text
//! height=256
//! width=256
//! bands=4
//! sample_format=f32le
//! layout=bsq
//! role=hrms_ref
//! ```
//!
//! and a payload of little-endian `f32` samples, band-sequential, row-major
//! within each band. `role` is optional; besides the MS roles it accepts
//! `pan` and `detail`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{invalid, Error, Result};
use crate::raster::{DetailImage, MsImage, PanImage, RasterBand, Role};

/// Ordered `key=value` pairs. Blank lines and lines starting with `#` are skipped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Format(format!("line {}: expected key=value, got {line:?}", n + 1)));
            };
            entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    /// Last value for `key`.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Format(format!("missing key {key:?}")))
    }

    pub fn parse_value<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Format(format!("cannot parse {key}={v:?}"))),
        }
    }

    pub fn require_value<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.parse_value(key)?.ok_or_else(|| Error::Format(format!("missing key {key:?}")))
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterHeader {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub role: Option<String>,
}

impl RasterHeader {
    pub fn parse(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        let header = RasterHeader {
            height: kv.require_value("height")?,
            width: kv.require_value("width")?,
            bands: kv.require_value("bands")?,
            role: kv.get("role").map(str::to_string),
        };
        if kv.require("sample_format")? != "f32le" {
            return Err(Error::Format(format!("unsupported sample_format {:?}", kv.get("sample_format"))));
        }
        if kv.require("layout")? != "bsq" {
            return Err(Error::Format(format!("unsupported layout {:?}", kv.get("layout"))));
        }
        if header.height == 0 || header.width == 0 || header.bands == 0 {
            return Err(Error::Format("height, width and bands must be positive".into()));
        }
        Ok(header)
    }

    pub fn to_text(&self) -> String {
        let mut kv = KeyValues::new();
        kv.push("height", self.height);
        kv.push("width", self.width);
        kv.push("bands", self.bands);
        kv.push("sample_format", "f32le");
        kv.push("layout", "bsq");
        if let Some(role) = &self.role {
            kv.push("role", role);
        }
        kv.to_text()
    }

    pub fn payload_len(&self) -> usize {
        self.height * self.width * self.bands * 4
    }
}

/// Any image the format can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum Raster {
    Ms(MsImage),
    Pan(PanImage),
    Detail(DetailImage),
}

impl Raster {
    fn parts(&self) -> (&[RasterBand], Option<&'static str>) {
        match self {
            Raster::Ms(m) => (m.bands(), Some(m.role().as_str())),
            Raster::Pan(p) => (std::slice::from_ref(p.band()), Some("pan")),
            Raster::Detail(d) => (d.bands(), Some("detail")),
        }
    }

    pub fn into_ms(self) -> Result<MsImage> {
        match self {
            Raster::Ms(m) => Ok(m),
            Raster::Pan(p) => MsImage::new(vec![p.into_band()], Role::HrmsRef),
            Raster::Detail(_) => invalid("expected a multispectral raster, found detail planes"),
        }
    }

    pub fn into_pan(self) -> Result<PanImage> {
        match self {
            Raster::Pan(p) => Ok(p),
            Raster::Ms(m) if m.band_count() == 1 => Ok(PanImage::new(m.into_bands().remove(0))),
            _ => invalid("expected a single-band PAN raster"),
        }
    }
}

impl From<MsImage> for Raster {
    fn from(m: MsImage) -> Self {
        Raster::Ms(m)
    }
}

impl From<PanImage> for Raster {
    fn from(p: PanImage) -> Self {
        Raster::Pan(p)
    }
}

impl From<DetailImage> for Raster {
    fn from(d: DetailImage) -> Self {
        Raster::Detail(d)
    }
}

/// Header and payload paths for a file stem: `<stem>.hdr`, `<stem>.raw`.
pub fn raster_paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{stem}.hdr")), dir.join(format!("{stem}.raw")))
}

pub fn decode_raster(header_text: &str, payload: &[u8]) -> Result<Raster> {
    let header = RasterHeader::parse(header_text)?;
    if payload.len() != header.payload_len() {
        return Err(Error::Format(format!(
            "payload is {} bytes, header expects {}",
            payload.len(),
            header.payload_len()
        )));
    }
    let plane = header.height * header.width;
    let mut bands = Vec::with_capacity(header.bands);
    for b in 0..header.bands {
        let bytes = &payload[b * plane * 4..(b + 1) * plane * 4];
        let values: Vec<f64> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        let band = RasterBand::new(header.height, header.width, values).map_err(|e| match e {
            Error::NonFinite { index } => Error::NonFinite { index: b * plane + index },
            other => other,
        })?;
        bands.push(band);
    }
    match header.role.as_deref() {
        None | Some("pan") if header.bands == 1 => Ok(Raster::Pan(PanImage::new(bands.remove(0)))),
        Some("pan") => Err(Error::Format("a pan raster must have exactly one band".into())),
        Some("detail") => Ok(Raster::Detail(DetailImage::new(bands)?)),
        None => Ok(Raster::Ms(MsImage::new(bands, Role::HrmsRef)?)),
        Some(tag) => match Role::parse(tag) {
            Some(Role::ConcatInput) => Err(Error::Format("concat_input rasters are not stored".into())),
            Some(role) => Ok(Raster::Ms(MsImage::new(bands, role)?)),
            None => Err(Error::Format(format!("unknown role {tag:?}"))),
        },
    }
}

pub fn encode_raster(img: &Raster) -> Result<(String, Vec<u8>)> {
    let (bands, role) = img.parts();
    let Some(first) = bands.first() else {
        return invalid("cannot write a zero-band image");
    };
    let header = RasterHeader {
        height: first.height(),
        width: first.width(),
        bands: bands.len(),
        role: role.map(str::to_string),
    };
    let mut payload = Vec::with_capacity(header.payload_len());
    for band in bands {
        for &v in band.values() {
            let s = v as f32;
            if !s.is_finite() {
                return invalid(format!("sample {v} does not fit in f32"));
            }
            payload.extend_from_slice(&s.to_le_bytes());
        }
    }
    Ok((header.to_text(), payload))
}

pub fn read_raster(header_path: &Path, payload_path: &Path) -> Result<Raster> {
    let text = fs::read_to_string(header_path)?;
    let payload = fs::read(payload_path)?;
    decode_raster(&text, &payload)
}

pub fn write_raster(img: &Raster, header_path: &Path, payload_path: &Path) -> Result<()> {
    let (text, payload) = encode_raster(img)?;
    fs::write(header_path, text)?;
    fs::write(payload_path, payload)?;
    Ok(())
}

/// Reads `<dir>/<stem>.hdr` + `<dir>/<stem>.raw`.
pub fn read_stem(dir: &Path, stem: &str) -> Result<Raster> {
    let (h, p) = raster_paths(dir, stem);
    read_raster(&h, &p)
}

pub fn write_stem(img: &Raster, dir: &Path, stem: &str) -> Result<()> {
    let (h, p) = raster_paths(dir, stem);
    write_raster(img, &h, &p)
}

/// Scales 11-bit digital numbers to `[0, 1]`.
pub fn ingest_11bit(height: usize, width: usize, dn: &[u16]) -> Result<RasterBand> {
    RasterBand::new(height, width, dn.iter().map(|&v| v as f64 / 2047.0).collect())
}

/// Linear-interpolated percentile of already sorted values.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// 2%–98% stretch of one band to 8 bits; flat bands map to 128.
pub fn stretch_band(band: &RasterBand) -> Vec<u8> {
    let mut sorted = band.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (percentile(&sorted, 0.02), percentile(&sorted, 0.98));
    if hi - lo <= 1e-12 {
        return vec![128; band.len()];
    }
    band.values()
        .iter()
        .map(|&v| (255.0 * (v - lo) / (hi - lo)).round().clamp(0.0, 255.0) as u8)
        .collect()
}

/// Stretched RGB pixels, interleaved, for three bands of `img`.
pub fn composite_rgb(bands: &[RasterBand], rgb: [usize; 3]) -> Result<Vec<u8>> {
    for &i in &rgb {
        if i >= bands.len() {
            return invalid(format!("band index {i} out of range for {} bands", bands.len()));
        }
    }
    let dims = bands[0].dims();
    let planes: Vec<Vec<u8>> = rgb.iter().map(|&i| stretch_band(&bands[i])).collect();
    let mut out = Vec::with_capacity(dims.0 * dims.1 * 3);
    for p in 0..dims.0 * dims.1 {
        out.extend(planes.iter().map(|pl| pl[p]));
    }
    Ok(out)
}

/// Writes an 8-bit RGB PNG of three stretched bands.
pub fn export_png(bands: &[RasterBand], rgb: [usize; 3], path: &Path) -> Result<()> {
    let data = composite_rgb(bands, rgb)?;
    let (h, w) = bands[0].dims();
    let file = fs::File::create(path)?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), w as u32, h as u32);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(|e| Error::Format(e.to_string()))?;
    writer.write_image_data(&data).map_err(|e| Error::Format(e.to_string()))?;
    writer.finish().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

/// Writes `lines` joined by newlines, with a trailing newline.
pub(crate) fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let mut f = BufWriter::new(fs::File::create(path)?);
    for l in lines {
        writeln!(f, "{l}")?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(bands: Vec<Vec<f64>>, h: usize, w: usize) -> MsImage {
        MsImage::new(bands.into_iter().map(|v| RasterBand::new(h, w, v).unwrap()).collect(), Role::HrmsRef).unwrap()
    }

    #[test]
    fn single_pixel_reads_as_pan() {
        let text = "height=1\nwidth=1\nbands=1\nsample_format=f32le\nlayout=bsq\n";
        let r = decode_raster(text, &0.5f32.to_le_bytes()).unwrap();
        let Raster::Pan(p) = r else { panic!("expected pan") };
        assert_eq!(p.band().values(), &[0.5]);
    }

    #[test]
    fn truncated_and_malformed() {
        let text = "height=1\nwidth=1\nbands=1\nsample_format=f32le\nlayout=bsq\n";
        assert!(matches!(decode_raster(text, &[0, 0, 0]), Err(Error::Format(_))));
        assert!(decode_raster("height=1\nwidth=1\n", &[0; 4]).is_err());
        assert!(decode_raster("height=1\nwidth=x\nbands=1\nsample_format=f32le\nlayout=bsq", &[0; 4]).is_err());
        assert!(decode_raster("height=1\nwidth=1\nbands=1\nsample_format=f64le\nlayout=bsq", &[0; 8]).is_err());
        let zero = "height=1\nwidth=1\nbands=0\nsample_format=f32le\nlayout=bsq\n";
        assert!(decode_raster(zero, &[]).is_err());
        let nan = f32::NAN.to_le_bytes();
        assert!(matches!(decode_raster(text, &nan), Err(Error::NonFinite { index: 0 })));
    }

    #[test]
    fn hand_assembled_two_band_encoding() {
        let img = ms(vec![vec![0.0, 1.0, -2.0, 0.5], vec![0.25, 3.0, 1.5, -1.0]], 2, 2);
        let (text, payload) = encode_raster(&Raster::Ms(img)).unwrap();
        assert_eq!(text, "height=2\nwidth=2\nbands=2\nsample_format=f32le\nlayout=bsq\nrole=hrms_ref\n");
        let expected: Vec<u8> = vec![
            0x00, 0x00, 0x00, 0x00, // 0.0
            0x00, 0x00, 0x80, 0x3f, // 1.0
            0x00, 0x00, 0x00, 0xc0, // -2.0
            0x00, 0x00, 0x00, 0x3f, // 0.5
            0x00, 0x00, 0x80, 0x3e, // 0.25
            0x00, 0x00, 0x40, 0x40, // 3.0
            0x00, 0x00, 0xc0, 0x3f, // 1.5
            0x00, 0x00, 0x80, 0xbf, // -1.0
        ];
        assert_eq!(payload, expected);
    }

    #[test]
    fn constant_image_payload_words() {
        let img = ms(vec![vec![0.75; 6]], 2, 3);
        let (_, payload) = encode_raster(&Raster::Ms(img)).unwrap();
        let word = 0.75f32.to_le_bytes();
        assert!(payload.chunks(4).all(|c| c == word));
    }

    #[test]
    fn roles_survive_round_trip() {
        let img = ms(vec![vec![0.1, 0.2], vec![0.3, 0.4]], 1, 2).with_role(Role::LrmsInterp).unwrap();
        let (t, p) = encode_raster(&Raster::Ms(img.clone())).unwrap();
        assert_eq!(decode_raster(&t, &p).unwrap().into_ms().unwrap().role(), Role::LrmsInterp);
        let d = DetailImage::new(vec![RasterBand::new(1, 2, vec![-0.5, 0.5]).unwrap()]).unwrap();
        let (t, p) = encode_raster(&Raster::Detail(d.clone())).unwrap();
        assert_eq!(decode_raster(&t, &p).unwrap(), Raster::Detail(d));
    }

    #[test]
    fn stretch_cases() {
        let flat = RasterBand::filled(4, 4, 0.3).unwrap();
        assert!(stretch_band(&flat).iter().all(|&v| v == 128));
        let checker = RasterBand::from_fn(10, 10, |r, c| ((r + c) % 2) as f64).unwrap();
        let s = stretch_band(&checker);
        assert!(s.iter().all(|&v| v == 0 || v == 255));
        assert_eq!(s.iter().filter(|&&v| v == 255).count(), 50);
        let bands = vec![flat.clone(); 4];
        assert!(composite_rgb(&bands, [0, 1, 9]).is_err());
    }

    #[test]
    fn key_values_parsing() {
        let kv = KeyValues::parse("# comment\n\na = 1\nb=x=y\na=2\n").unwrap();
        assert_eq!(kv.get("a"), Some("2"));
        assert_eq!(kv.get("b"), Some("x=y"));
        assert!(KeyValues::parse("novalue").is_err());
        assert_eq!(kv.require_value::<u32>("a").unwrap(), 2);
    }

    #[test]
    fn eleven_bit_ingest() {
        let b = ingest_11bit(1, 3, &[0, 2047, 1000]).unwrap();
        assert_eq!(b.values()[0], 0.0);
        assert_eq!(b.values()[1], 1.0);
    }
}
