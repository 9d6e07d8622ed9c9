//! Reference-based quality indices for reduced-resolution assessment.
//!
//! Conventions (the literature leaves room for variants):
//! * SAM: mean per-pixel spectral angle in degrees over pixels where both
//!   spectral vectors have norm > 1e-12.
//! * ERGAS: `100/R · sqrt(mean_b (RMSE_b / μ_b)²)` with `μ_b` the reference
//!   band mean.
//! * SCC: per-band Pearson correlation of 3×3 Laplacian high-passes over
//!   interior pixels, averaged over bands.
//! * Q2ⁿ: bands embedded in a 2ᵏ-dimensional Cayley–Dickson hypercomplex
//!   number, universal quality index per distinct block, averaged.

use std::fmt::Write as _;

use crate::error::{invalid, shape_err, Error, Result};
use crate::raster::MsImage;

fn check_pair(fused: &MsImage, reference: &MsImage) -> Result<()> {
    if fused.band_count() != reference.band_count() || fused.dims() != reference.dims() {
        return shape_err(format!(
            "fused is {}x{:?}, reference is {}x{:?}",
            fused.band_count(),
            fused.dims(),
            reference.band_count(),
            reference.dims()
        ));
    }
    Ok(())
}

/// Spectral angle mapper, in degrees.
pub fn sam(fused: &MsImage, reference: &MsImage) -> Result<f64> {
    check_pair(fused, reference)?;
    let n = fused.band(0).len();
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        let (mut na, mut nb) = (0.0, 0.0);
        for (f, r) in fused.bands().iter().zip(reference.bands()) {
            na += f.values()[i] * f.values()[i];
            nb += r.values()[i] * r.values()[i];
        }
        let (na, nb) = (na.sqrt(), nb.sqrt());
        if na > 1e-12 && nb > 1e-12 {
            // 2·atan2(|â − b̂|, |â + b̂|): exact zero for parallel vectors, no acos cancellation.
            let (mut diff, mut sum) = (0.0, 0.0);
            for (f, r) in fused.bands().iter().zip(reference.bands()) {
                let (a, b) = (f.values()[i] / na, r.values()[i] / nb);
                diff += (a - b) * (a - b);
                sum += (a + b) * (a + b);
            }
            total += 2.0 * diff.sqrt().atan2(sum.sqrt());
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Degenerate("every pixel has a zero spectral vector".into()));
    }
    Ok((total / count as f64).to_degrees())
}

pub fn ergas(fused: &MsImage, reference: &MsImage, ratio: usize) -> Result<f64> {
    check_pair(fused, reference)?;
    if ratio == 0 {
        return invalid("ratio must be positive");
    }
    let mut acc = 0.0;
    for (b, (f, r)) in fused.bands().iter().zip(reference.bands()).enumerate() {
        let n = r.len() as f64;
        let mean = r.values().iter().sum::<f64>() / n;
        if mean.abs() < 1e-12 {
            return Err(Error::Degenerate(format!("reference band {b} has zero mean")));
        }
        let mse = f.values().iter().zip(r.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n;
        acc += mse / (mean * mean);
    }
    Ok(100.0 / ratio as f64 * (acc / fused.band_count() as f64).sqrt())
}

fn laplacian_interior(values: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(h.saturating_sub(2) * w.saturating_sub(2));
    for r in 1..h - 1 {
        for c in 1..w - 1 {
            let mut s = 0.0;
            for dr in 0..3 {
                for dc in 0..3 {
                    s += values[(r + dr - 1) * w + c + dc - 1];
                }
            }
            out.push(9.0 * values[r * w + c] - s);
        }
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some(sab / (saa.sqrt() * sbb.sqrt()))
}

/// Spatial correlation coefficient.
pub fn scc(fused: &MsImage, reference: &MsImage) -> Result<f64> {
    check_pair(fused, reference)?;
    let (h, w) = fused.dims();
    if h < 3 || w < 3 {
        return shape_err("SCC needs at least 3x3 pixels");
    }
    let mut total = 0.0;
    for (b, (f, r)) in fused.bands().iter().zip(reference.bands()).enumerate() {
        let lf = laplacian_interior(f.values(), h, w);
        let lr = laplacian_interior(r.values(), h, w);
        total += pearson(&lf, &lr)
            .ok_or_else(|| Error::Degenerate(format!("high-pass of band {b} has zero variance")))?;
    }
    Ok(total / fused.band_count() as f64)
}

/// Cayley–Dickson product on 2ᵏ-dimensional hypercomplex numbers:
/// `(a, b)(c, d) = (ac − d̄b, da + bc̄)`.
pub fn hypercomplex_mul(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    debug_assert_eq!(n, y.len());
    debug_assert!(n.is_power_of_two());
    if n == 1 {
        return vec![x[0] * y[0]];
    }
    let h = n / 2;
    let (a, b) = x.split_at(h);
    let (c, d) = y.split_at(h);
    let (cc, dc) = (hypercomplex_conj(c), hypercomplex_conj(d));
    let ac = hypercomplex_mul(a, c);
    let dcb = hypercomplex_mul(&dc, b);
    let da = hypercomplex_mul(d, a);
    let bcc = hypercomplex_mul(b, &cc);
    let mut out = Vec::with_capacity(n);
    out.extend(ac.iter().zip(&dcb).map(|(p, q)| p - q));
    out.extend(da.iter().zip(&bcc).map(|(p, q)| p + q));
    out
}

pub fn hypercomplex_conj(x: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    for v in out.iter_mut().skip(1) {
        *v = -*v;
    }
    out
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Universal quality index of one block of hypercomplex pixels.
///
/// `4·|σ_zy|·|μ_z|·|μ_y| / ((σ_z² + σ_y²)(|μ_z|² + |μ_y|²))`, with each of the
/// two factors taken as 1 when its denominator vanishes.
fn hypercomplex_uiqi(z: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let dim = z[0].len();
    let n = z.len() as f64;
    let mean = |v: &[Vec<f64>]| {
        let mut m = vec![0.0; dim];
        for p in v {
            for (a, b) in m.iter_mut().zip(p) {
                *a += b;
            }
        }
        m.iter_mut().for_each(|a| *a /= n);
        m
    };
    let (mz, my) = (mean(z), mean(y));
    let mut cov = vec![0.0; dim];
    let (mut vz, mut vy) = (0.0, 0.0);
    for (pz, py) in z.iter().zip(y) {
        let dz: Vec<f64> = pz.iter().zip(&mz).map(|(a, m)| a - m).collect();
        let dy: Vec<f64> = py.iter().zip(&my).map(|(a, m)| a - m).collect();
        vz += dz.iter().map(|v| v * v).sum::<f64>();
        vy += dy.iter().map(|v| v * v).sum::<f64>();
        for (c, p) in cov.iter_mut().zip(hypercomplex_mul(&dz, &hypercomplex_conj(&dy))) {
            *c += p;
        }
    }
    let (vz, vy) = (vz / n, vy / n);
    let cov_norm = norm(&cov) / n;
    let (nmz, nmy) = (norm(&mz), norm(&my));
    let structure = if vz + vy > 0.0 { 2.0 * cov_norm / (vz + vy) } else { 1.0 };
    let luminance = if nmz * nmz + nmy * nmy > 0.0 { 2.0 * nmz * nmy / (nmz * nmz + nmy * nmy) } else { 1.0 };
    structure * luminance
}

/// Block layout for Q2ⁿ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockConfig {
    pub size: usize,
    /// Step between block origins; equal to `size` for distinct blocks.
    pub step: usize,
}

impl Default for BlockConfig {
    fn default() -> Self {
        Self { size: 32, step: 32 }
    }
}

/// Q2ⁿ index averaged over blocks.
pub fn q2n(fused: &MsImage, reference: &MsImage, blocks: BlockConfig) -> Result<f64> {
    check_pair(fused, reference)?;
    let (h, w) = fused.dims();
    if blocks.size == 0 || blocks.step == 0 {
        return invalid("block size and step must be positive");
    }
    if h < blocks.size || w < blocks.size {
        return shape_err(format!("image {h}x{w} is smaller than one {0}x{0} block", blocks.size));
    }
    let dim = fused.band_count().next_power_of_two().max(2);
    let pixel = |img: &MsImage, i: usize| {
        let mut v = vec![0.0; dim];
        for (b, band) in img.bands().iter().enumerate() {
            v[b] = band.values()[i];
        }
        v
    };
    let mut total = 0.0;
    let mut count = 0usize;
    let mut r0 = 0;
    while r0 + blocks.size <= h {
        let mut c0 = 0;
        while c0 + blocks.size <= w {
            let mut z = Vec::with_capacity(blocks.size * blocks.size);
            let mut y = Vec::with_capacity(blocks.size * blocks.size);
            for r in r0..r0 + blocks.size {
                for c in c0..c0 + blocks.size {
                    z.push(pixel(fused, r * w + c));
                    y.push(pixel(reference, r * w + c));
                }
            }
            total += hypercomplex_uiqi(&z, &y);
            count += 1;
            c0 += blocks.step;
        }
        r0 += blocks.step;
    }
    Ok(total / count as f64)
}

/// Settings shared by the four indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityConfig {
    pub ratio: usize,
    pub blocks: BlockConfig,
    /// Pixels trimmed from every side before measuring.
    pub border: usize,
}

impl QualityConfig {
    pub fn new(ratio: usize) -> Self {
        Self { ratio, blocks: BlockConfig::default(), border: ratio }
    }
}

impl Default for QualityConfig {
    fn default() -> Self {
        Self::new(4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub qx: f64,
    pub sam_degrees: f64,
    pub ergas: f64,
    pub scc: f64,
    pub elapsed_seconds: f64,
}

impl QualityReport {
    pub fn with_elapsed(self, seconds: f64) -> Self {
        Self { elapsed_seconds: seconds, ..self }
    }

    /// True when every index is strictly better than `other`'s.
    pub fn strictly_better_on_all(&self, other: &QualityReport) -> bool {
        self.qx > other.qx && self.sam_degrees < other.sam_degrees && self.ergas < other.ergas && self.scc > other.scc
    }

    pub const CSV_HEADER: &'static str = "method,qx,sam,ergas,scc,seconds";

    /// One `method,qx,sam,ergas,scc,seconds` row.
    pub fn csv_row(&self, method: &str) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{method},{:.6},{:.6},{:.6},{:.6},{:.3}",
            self.qx, self.sam_degrees, self.ergas, self.scc, self.elapsed_seconds
        );
        s
    }

    /// The row without the timing column.
    pub fn csv_row_metrics(&self, method: &str) -> String {
        format!("{method},{:.6},{:.6},{:.6},{:.6}", self.qx, self.sam_degrees, self.ergas, self.scc)
    }
}

/// Runs all four indices after trimming `cfg.border` pixels from each side.
pub fn evaluate(fused: &MsImage, reference: &MsImage, cfg: &QualityConfig) -> Result<QualityReport> {
    check_pair(fused, reference)?;
    let (h, w) = fused.dims();
    let b = cfg.border;
    if 2 * b >= h || 2 * b >= w {
        return shape_err(format!("border {b} leaves nothing of a {h}x{w} image"));
    }
    let (f, r) = if b > 0 {
        (fused.crop(b, b, h - 2 * b, w - 2 * b)?, reference.crop(b, b, h - 2 * b, w - 2 * b)?)
    } else {
        (fused.clone(), reference.clone())
    };
    Ok(QualityReport {
        qx: q2n(&f, &r, cfg.blocks)?,
        sam_degrees: sam(&f, &r)?,
        ergas: ergas(&f, &r, cfg.ratio)?,
        scc: scc(&f, &r)?,
        elapsed_seconds: 0.0,
    })
}
