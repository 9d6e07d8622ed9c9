//! Resolution chain for reduced-resolution assessment: Gaussian low-pass,
//! decimation, and polynomial (EXP) re-interpolation.
//!
//! Every filter here has unit DC gain and uses whole-sample mirror extension
//! at the borders (`… x2 x1 | x0 x1 x2 …`).

use crate::error::{invalid, shape_err, Result};
use crate::raster::{MsImage, PanImage, RasterBand, Role};

/// Half of the symmetric 23-tap EXP kernel: taps at offsets 1, 3, …, 11.
///
/// These are the degree-11 Lagrange weights for evaluating halfway between
/// twelve equally spaced samples; the kernel is 1 at offset 0 and 0 at every
/// other even offset, so original samples pass through unchanged. All values
/// are dyadic rationals and therefore exact in `f64`.
pub const EXP_HALF_KERNEL: [f64; 6] = [
    160083.0 / 262144.0,
    -38115.0 / 262144.0,
    22869.0 / 524288.0,
    -5445.0 / 524288.0,
    847.0 / 524288.0,
    -63.0 / 524288.0,
];

/// The full 23-tap EXP kernel indexed by offset −11..=11.
pub fn exp_kernel() -> [f64; 23] {
    let mut k = [0.0; 23];
    k[11] = 1.0;
    for (i, &c) in EXP_HALF_KERNEL.iter().enumerate() {
        let off = 2 * i + 1;
        k[11 + off] = c;
        k[11 - off] = c;
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    ExpPoly,
    Bicubic,
}

impl Interpolation {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exp_poly" | "exp" => Some(Self::ExpPoly),
            "bicubic" => Some(Self::Bicubic),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ExpPoly => "exp_poly",
            Self::Bicubic => "bicubic",
        }
    }
}

/// Parameters of the degradation chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaldConfig {
    pub ratio: usize,
    /// Gain of the MS low-pass at the Nyquist frequency of the decimated grid.
    pub gaussian_nyquist_gain: f64,
    /// Overrides the gain used for PAN; `None` reuses the MS gain.
    pub pan_nyquist_gain: Option<f64>,
    pub interpolation: Interpolation,
}

impl Default for WaldConfig {
    fn default() -> Self {
        Self {
            ratio: 4,
            gaussian_nyquist_gain: 0.3,
            pan_nyquist_gain: None,
            interpolation: Interpolation::ExpPoly,
        }
    }
}

impl WaldConfig {
    pub fn with_ratio(ratio: usize) -> Self {
        Self { ratio, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ratio < 2 {
            return invalid(format!("resolution ratio must be >= 2, got {}", self.ratio));
        }
        for g in std::iter::once(self.gaussian_nyquist_gain).chain(self.pan_nyquist_gain) {
            if !(g > 0.0 && g < 1.0) {
                return invalid(format!("Nyquist gain must lie in (0,1), got {g}"));
            }
        }
        Ok(())
    }

    fn pan_config(&self) -> WaldConfig {
        WaldConfig {
            gaussian_nyquist_gain: self.pan_nyquist_gain.unwrap_or(self.gaussian_nyquist_gain),
            ..*self
        }
    }
}

/// Sampled, truncated and normalized 1-D Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel {
    pub sigma: f64,
    /// Taps for offsets −radius..=radius.
    pub taps: Vec<f64>,
}

impl GaussianKernel {
    pub fn radius(&self) -> usize {
        self.taps.len() / 2
    }

    /// Frequency response of the discrete kernel at `f` cycles per sample.
    pub fn response(&self, f: f64) -> f64 {
        let r = self.radius() as isize;
        self.taps
            .iter()
            .enumerate()
            .map(|(i, &t)| t * (2.0 * std::f64::consts::PI * f * (i as isize - r) as f64).cos())
            .sum()
    }
}

fn sampled_gaussian(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let raw: Vec<f64> = (-r..=r).map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Gaussian whose discrete response at `1/(2·ratio)` cycles/sample equals `gain`.
///
/// The continuous-domain width `ratio·sqrt(−2 ln gain)/π` seeds the search and
/// fixes the support (±4σ); σ is then refined by bisection on the response of
/// the sampled, normalized kernel.
pub fn gaussian_kernel(ratio: usize, gain: f64) -> Result<GaussianKernel> {
    WaldConfig { ratio, gaussian_nyquist_gain: gain, ..WaldConfig::default() }.validate()?;
    let f = 0.5 / ratio as f64;
    let sigma0 = ratio as f64 * (-2.0 * gain.ln()).sqrt() / std::f64::consts::PI;
    let radius = (4.0 * sigma0).ceil().max(1.0) as usize;
    let response = |s: f64| GaussianKernel { sigma: s, taps: sampled_gaussian(s, radius) }.response(f);
    let (mut lo, mut hi) = (0.25 * sigma0, 2.0 * sigma0);
    if !(response(lo) > gain && response(hi) < gain) {
        return invalid(format!("cannot bracket a Gaussian with Nyquist gain {gain} at ratio {ratio}"));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if response(mid) > gain {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let sigma = 0.5 * (lo + hi);
    Ok(GaussianKernel { sigma, taps: sampled_gaussian(sigma, radius) })
}

/// Whole-sample symmetric reflection of an index into `0..n`.
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut m = i.rem_euclid(period);
    if m >= n as isize {
        m = period - m;
    }
    m as usize
}

/// Correlates rows then columns with `taps`, given as (offset, weight) pairs,
/// under mirror extension.
pub(crate) fn separable_filter(band: &RasterBand, taps: &[(isize, f64)]) -> RasterBand {
    let (h, w) = band.dims();
    let src = band.values();
    let mut tmp = vec![0.0; h * w];
    for r in 0..h {
        let row = &src[r * w..(r + 1) * w];
        for c in 0..w {
            tmp[r * w + c] = taps.iter().map(|&(o, t)| t * row[reflect(c as isize + o, w)]).sum();
        }
    }
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for &(o, t) in taps {
            let rr = reflect(r as isize + o, h);
            let (dst, s) = (&mut out[r * w..(r + 1) * w], &tmp[rr * w..(rr + 1) * w]);
            for (d, v) in dst.iter_mut().zip(s) {
                *d += t * v;
            }
        }
    }
    RasterBand::from_parts(h, w, out)
}

fn gaussian_with_kernel(band: &RasterBand, kernel: &GaussianKernel) -> Result<RasterBand> {
    let r = kernel.radius();
    let (h, w) = band.dims();
    if h <= r || w <= r {
        return shape_err(format!("band {h}x{w} is smaller than the Gaussian support radius {r}"));
    }
    let taps: Vec<(isize, f64)> =
        kernel.taps.iter().enumerate().map(|(i, &t)| (i as isize - r as isize, t)).collect();
    Ok(separable_filter(band, &taps))
}

/// Separable Gaussian low-pass with the Nyquist-gain rule of `cfg`.
pub fn gaussian_lowpass(band: &RasterBand, cfg: &WaldConfig) -> Result<RasterBand> {
    let kernel = gaussian_kernel(cfg.ratio, cfg.gaussian_nyquist_gain)?;
    gaussian_with_kernel(band, &kernel)
}

/// Keeps samples at `(i·ratio, j·ratio)`.
pub fn decimate(band: &RasterBand, ratio: usize) -> Result<RasterBand> {
    if ratio == 0 {
        return invalid("decimation ratio must be positive");
    }
    let (h, w) = band.dims();
    if h % ratio != 0 || w % ratio != 0 {
        return shape_err(format!("band {h}x{w} is not divisible by ratio {ratio}"));
    }
    let (oh, ow) = (h / ratio, w / ratio);
    let mut out = Vec::with_capacity(oh * ow);
    for r in 0..oh {
        for c in 0..ow {
            out.push(band.get(r * ratio, c * ratio));
        }
    }
    Ok(RasterBand::from_parts(oh, ow, out))
}

/// One ×2 stage along a line: zero insertion then the 23-tap kernel.
fn exp_upsample_line(src: &[f64], dst: &mut [f64], kernel: &[f64; 23]) {
    let n = src.len();
    let m = 2 * n;
    let mut up = vec![0.0; m];
    for (k, &v) in src.iter().enumerate() {
        up[2 * k] = v;
    }
    for (j, d) in dst.iter_mut().enumerate().take(m) {
        let mut acc = 0.0;
        for (t, &c) in kernel.iter().enumerate() {
            if c != 0.0 {
                acc += c * up[reflect(j as isize + t as isize - 11, m)];
            }
        }
        *d = acc;
    }
}

fn exp_upsample2(band: &RasterBand) -> RasterBand {
    let kernel = exp_kernel();
    let (h, w) = band.dims();
    let (oh, ow) = (2 * h, 2 * w);
    let mut rows = vec![0.0; h * ow];
    for r in 0..h {
        exp_upsample_line(&band.values()[r * w..(r + 1) * w], &mut rows[r * ow..(r + 1) * ow], &kernel);
    }
    let mut out = vec![0.0; oh * ow];
    let mut col = vec![0.0; h];
    let mut col_out = vec![0.0; oh];
    for c in 0..ow {
        for r in 0..h {
            col[r] = rows[r * ow + c];
        }
        exp_upsample_line(&col, &mut col_out, &kernel);
        for r in 0..oh {
            out[r * ow + c] = col_out[r];
        }
    }
    RasterBand::from_parts(oh, ow, out)
}

/// EXP interpolation by a power-of-two ratio: `log2(ratio)` successive ×2 stages.
///
/// Output sample `(i, j)` sits at input coordinate `(i/ratio, j/ratio)`, the
/// grid convention matching top-left decimation.
pub fn exp_interpolate(band: &RasterBand, ratio: usize) -> Result<RasterBand> {
    if ratio < 2 || !ratio.is_power_of_two() {
        return invalid(format!("EXP interpolation needs a power-of-two ratio >= 2, got {ratio}"));
    }
    let mut cur = band.clone();
    let mut r = ratio;
    while r > 1 {
        cur = exp_upsample2(&cur);
        r /= 2;
    }
    Ok(cur)
}

fn keys_cubic(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

/// Keys bicubic interpolation on the same grid convention as EXP.
pub fn bicubic_interpolate(band: &RasterBand, ratio: usize) -> Result<RasterBand> {
    if ratio < 1 {
        return invalid("interpolation ratio must be positive");
    }
    let (h, w) = band.dims();
    let (oh, ow) = (h * ratio, w * ratio);
    let weights = |o: usize, n: usize| -> Vec<(usize, f64)> {
        let x = o as f64 / ratio as f64;
        let base = x.floor() as isize;
        let frac = x - base as f64;
        (-1..=2).map(|t| (reflect(base + t, n), keys_cubic(frac - t as f64))).collect()
    };
    let col_w: Vec<_> = (0..ow).map(|c| weights(c, w)).collect();
    let mut rows = vec![0.0; h * ow];
    for r in 0..h {
        for (c, ws) in col_w.iter().enumerate() {
            rows[r * ow + c] = ws.iter().map(|&(i, k)| k * band.get(r, i)).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for (i, k) in weights(r, h) {
            for c in 0..ow {
                out[r * ow + c] += k * rows[i * ow + c];
            }
        }
    }
    Ok(RasterBand::from_parts(oh, ow, out))
}

/// Re-interpolation step of the chain, honouring `cfg.interpolation`.
pub fn interpolate(band: &RasterBand, cfg: &WaldConfig) -> Result<RasterBand> {
    match cfg.interpolation {
        Interpolation::ExpPoly => exp_interpolate(band, cfg.ratio),
        Interpolation::Bicubic => bicubic_interpolate(band, cfg.ratio),
    }
}

/// Low-pass then decimate; the sensor-style resolution reduction.
pub fn reduce(band: &RasterBand, cfg: &WaldConfig) -> Result<RasterBand> {
    decimate(&gaussian_lowpass(band, cfg)?, cfg.ratio)
}

/// Inputs and ground truth of one reduced-resolution experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct WaldTriple {
    pub lrms_interp: MsImage,
    pub pan_low: PanImage,
    pub reference: MsImage,
}

/// Degrades an observed MS/PAN pair by the resolution ratio.
///
/// `pan` must be exactly `ratio` times larger than `ms` in both dimensions
/// (sensor geometry). The observed MS becomes the reference; the degraded PAN
/// lands on the reference grid and is the working PAN of the experiment.
pub fn wald_degrade(ms: &MsImage, pan: &PanImage, cfg: &WaldConfig) -> Result<WaldTriple> {
    cfg.validate()?;
    let (h, w) = ms.dims();
    let r = cfg.ratio;
    if pan.dims() != (h * r, w * r) {
        return shape_err(format!(
            "PAN must be {}x{} for a {h}x{w} MS at ratio {r}, got {:?}",
            h * r,
            w * r,
            pan.dims()
        ));
    }
    let ms_kernel = gaussian_kernel(r, cfg.gaussian_nyquist_gain)?;
    let bands = ms
        .bands()
        .iter()
        .map(|b| {
            let low = decimate(&gaussian_with_kernel(b, &ms_kernel)?, r)?;
            interpolate(&low, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let pan_cfg = cfg.pan_config();
    let pan_low = reduce(pan.band(), &pan_cfg)?;
    Ok(WaldTriple {
        lrms_interp: MsImage::new(bands, Role::LrmsInterp)?,
        pan_low: PanImage::new(pan_low),
        reference: ms.clone().with_role(Role::HrmsRef)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ramp(h: usize, w: usize) -> RasterBand {
        RasterBand::from_fn(h, w, |r, c| 0.25 * r as f64 - 0.5 * c as f64 + 3.0).unwrap()
    }

    #[test]
    fn exp_kernel_is_interpolating_with_dc_gain_two() {
        let k = exp_kernel();
        assert_eq!(k.iter().sum::<f64>(), 2.0);
        assert_eq!(k[11], 1.0);
        for off in (2..=10).step_by(2) {
            assert_eq!(k[11 + off], 0.0);
        }
        for i in 0..23 {
            assert_eq!(k[i], k[22 - i]);
        }
    }

    #[test]
    fn reflect_is_whole_sample_mirror() {
        let n = 5;
        let got: Vec<usize> = (-3..9).map(|i| reflect(i, n)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 1, 2, 3, 4, 3, 2, 1, 0]);
        assert_eq!(reflect(-7, 1), 0);
    }

    #[test]
    fn gaussian_hits_nyquist_gain() {
        for (ratio, gain) in [(4, 0.3), (2, 0.25), (4, 0.15)] {
            let k = gaussian_kernel(ratio, gain).unwrap();
            assert!((k.response(0.5 / ratio as f64) - gain).abs() < 1e-12);
            assert!((k.taps.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_constant_is_fixed_point() {
        let b = RasterBand::filled(20, 24, 0.37).unwrap();
        let out = gaussian_lowpass(&b, &WaldConfig::default()).unwrap();
        for v in out.values() {
            assert!((v - 0.37).abs() < 1e-14);
        }
    }

    #[test]
    fn gaussian_impulse_matches_sampled_gaussian() {
        let cfg = WaldConfig::default();
        let kernel = gaussian_kernel(4, 0.3).unwrap();
        let r = kernel.radius();
        let n = 2 * r + 9;
        let center = n / 2;
        let b = RasterBand::from_fn(n, n, |i, j| if i == center && j == center { 1.0 } else { 0.0 }).unwrap();
        let out = gaussian_lowpass(&b, &cfg).unwrap();
        // Independent evaluation of the sampled Gaussian with the solved sigma.
        let s = kernel.sigma;
        let norm: f64 = (-(r as isize)..=r as isize).map(|k| (-((k * k) as f64) / (2.0 * s * s)).exp()).sum();
        let g = |k: isize| (-((k * k) as f64) / (2.0 * s * s)).exp() / norm;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (di, dj) = (i as isize - center as isize, j as isize - center as isize);
                let expected = if di.unsigned_abs() <= r && dj.unsigned_abs() <= r { g(di) * g(dj) } else { 0.0 };
                assert!((out.get(i, j) - expected).abs() < 1e-12);
                total += out.get(i, j);
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_attenuates_stripes() {
        let cfg = WaldConfig::default();
        // Full-rate stripes and stripes at the decimated grid's Nyquist rate.
        let full = RasterBand::from_fn(32, 32, |_, c| if c % 2 == 0 { 1.0 } else { -1.0 }).unwrap();
        let out = gaussian_lowpass(&full, &cfg).unwrap();
        let amp = (8..24).map(|c| out.get(16, c).abs()).fold(0.0, f64::max);
        assert!(amp < cfg.gaussian_nyquist_gain);

        let period = 2 * cfg.ratio;
        let slow = RasterBand::from_fn(64, 64, |_, c| {
            (2.0 * std::f64::consts::PI * c as f64 / period as f64).cos()
        })
        .unwrap();
        let out = gaussian_lowpass(&slow, &cfg).unwrap();
        // Interior amplitude of a pure cosine equals the kernel response.
        let amp = (16..48).map(|c| out.get(32, c).abs()).fold(0.0, f64::max);
        assert!((amp - cfg.gaussian_nyquist_gain).abs() < 1e-9);
    }

    #[test]
    fn gaussian_rejects_tiny_band() {
        let b = RasterBand::zeros(4, 40).unwrap();
        assert!(gaussian_lowpass(&b, &WaldConfig::default()).is_err());
    }

    #[test]
    fn decimate_keeps_top_left_phase() {
        let b = RasterBand::from_fn(8, 8, |r, c| (r * 8 + c) as f64).unwrap();
        let d = decimate(&b, 4).unwrap();
        assert_eq!(d.dims(), (2, 2));
        assert_eq!(d.values(), &[0.0, 4.0, 32.0, 36.0]);
        let c = decimate(&RasterBand::filled(12, 8, 0.3).unwrap(), 4).unwrap();
        assert!(c.values().iter().all(|&v| v == 0.3));
        let r = ramp(12, 16);
        let d = decimate(&r, 4).unwrap();
        for i in 0..3 {
            for j in 0..4 {
                assert_eq!(d.get(i, j), r.get(4 * i, 4 * j));
            }
        }
        assert!(decimate(&RasterBand::zeros(9, 8).unwrap(), 4).is_err());
    }

    #[test]
    fn exp_constant_and_size() {
        let b = RasterBand::filled(6, 7, 0.6).unwrap();
        let out = exp_interpolate(&b, 4).unwrap();
        assert_eq!(out.dims(), (24, 28));
        for v in out.values() {
            assert!((v - 0.6).abs() < 1e-14);
        }
        assert!(exp_interpolate(&b, 3).is_err());
    }

    #[test]
    fn exp_impulse_reproduces_kernel_footprint() {
        let n = 24;
        let (ci, cj) = (12usize, 11usize);
        let b = RasterBand::from_fn(n, n, |i, j| if (i, j) == (ci, cj) { 1.0 } else { 0.0 }).unwrap();
        let out = exp_interpolate(&b, 2).unwrap();
        let k = exp_kernel();
        let tap = |d: isize| if d.abs() <= 11 { k[(d + 11) as usize] } else { 0.0 };
        let mut mass = 0.0;
        for i in 0..2 * n {
            for j in 0..2 * n {
                let expected = tap(i as isize - 2 * ci as isize) * tap(j as isize - 2 * cj as isize);
                assert!((out.get(i, j) - expected).abs() < 1e-15);
                mass += out.get(i, j);
            }
        }
        assert!((mass / 4.0 - 1.0).abs() < 1e-9);

        // Two stages: mass scales by ratio² on the finer grid.
        let out4 = exp_interpolate(&b, 4).unwrap();
        let mass4: f64 = out4.values().iter().sum();
        assert!((mass4 / 16.0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exp_reproduces_ramps_in_interior() {
        let b = ramp(48, 48);
        let out = exp_interpolate(&b, 4).unwrap();
        // Both stages see only true samples at least 12 coarse pixels from the edge.
        for i in 48..144 {
            for j in 48..144 {
                let expected = 0.25 * (i as f64 / 4.0) - 0.5 * (j as f64 / 4.0) + 3.0;
                assert!((out.get(i, j) - expected).abs() < 1e-6, "({i},{j})");
            }
        }
        // Original samples pass through the interpolator unchanged.
        let out2 = exp_interpolate(&b, 2).unwrap();
        for i in 0..48 {
            for j in 0..48 {
                assert!((out2.get(2 * i, 2 * j) - b.get(i, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn bicubic_constant_and_passthrough() {
        let b = RasterBand::filled(5, 5, 0.2).unwrap();
        let out = bicubic_interpolate(&b, 3).unwrap();
        assert!(out.values().iter().all(|v| (v - 0.2).abs() < 1e-14));
        let r = ramp(6, 6);
        let out = bicubic_interpolate(&r, 4).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!((out.get(4 * i, 4 * j) - r.get(i, j)).abs() < 1e-12);
            }
        }
    }

    fn scene(seed: u64, h: usize, w: usize) -> (MsImage, PanImage) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = RasterBand::from_fn(h * 4, w * 4, |r, c| {
            ((r as f64 / 7.0).sin() + (c as f64 / 5.0).cos()) * 0.2 + 0.5
        })
        .unwrap();
        let ms = MsImage::new(
            (0..3)
                .map(|b| {
                    RasterBand::from_fn(h, w, |r, c| base.get(4 * r, 4 * c) * (0.8 + 0.1 * b as f64) + 0.01 * rng.random::<f64>())
                        .unwrap()
                })
                .collect(),
            Role::HrmsRef,
        )
        .unwrap();
        (ms, PanImage::new(base))
    }

    #[test]
    fn wald_shapes_and_constants() {
        let cfg = WaldConfig::default();
        let ms = MsImage::new(vec![RasterBand::filled(16, 20, 0.4).unwrap(); 2], Role::HrmsRef).unwrap();
        let pan = PanImage::new(RasterBand::filled(64, 80, 0.7).unwrap());
        let t = wald_degrade(&ms, &pan, &cfg).unwrap();
        assert_eq!(t.lrms_interp.dims(), (16, 20));
        assert_eq!(t.pan_low.dims(), (16, 20));
        assert_eq!(t.reference, ms);
        for b in t.lrms_interp.bands() {
            assert!(b.values().iter().all(|v| (v - 0.4).abs() < 1e-13));
        }
        assert!(t.pan_low.band().values().iter().all(|v| (v - 0.7).abs() < 1e-13));

        let (ms, pan) = scene(5, 32, 32);
        let t = wald_degrade(&ms, &pan, &cfg).unwrap();
        assert_eq!(t.lrms_interp.dims(), t.reference.dims());
        assert_eq!(t.lrms_interp.role(), Role::LrmsInterp);

        let wrong_pan = PanImage::new(RasterBand::zeros(32, 32).unwrap());
        assert!(wald_degrade(&ms, &wrong_pan, &cfg).is_err());
    }

    #[test]
    fn wald_config_validation() {
        assert!(WaldConfig::with_ratio(1).validate().is_err());
        let bad = WaldConfig { gaussian_nyquist_gain: 1.0, ..WaldConfig::default() };
        assert!(bad.validate().is_err());
        let bad = WaldConfig { pan_nyquist_gain: Some(0.0), ..WaldConfig::default() };
        assert!(bad.validate().is_err());
    }
}
