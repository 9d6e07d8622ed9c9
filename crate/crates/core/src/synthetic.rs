//! Seeded synthetic scenes standing in for real satellite acquisitions.
//!
//! A scene is built from `K` latent textures (multi-octave value noise on a
//! smoothstep-interpolated lattice) mixed into `N_b` bands through a
//! row-stochastic matrix. Each latent texture also carries a piecewise-constant
//! Voronoi layer so the scene has sharp region boundaries, the content that
//! interpolation alone cannot restore. The PAN is a weighted band sum plus
//! Gaussian noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};
use crate::raster::{MsImage, PanImage, RasterBand, Role};
use crate::resample::{reduce, wald_degrade, WaldConfig, WaldTriple};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSceneConfig {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub seed: u64,
    pub octaves: usize,
    /// Lattice spacing of the coarsest octave, in pixels.
    pub base_cell: usize,
    /// Voronoi sites per latent texture; 0 disables the region layer.
    pub regions: usize,
    /// Share of the region layer in each latent texture, in `[0, 1]`.
    pub region_weight: f64,
    /// `bands × K` nonnegative weights, rows summing to 1.
    pub mixing: Vec<Vec<f64>>,
    /// PAN band weights; uniform `1/N_b` when `None`.
    pub pan_weights: Option<Vec<f64>>,
    pub pan_noise_std: f64,
}

impl SyntheticSceneConfig {
    pub fn new(height: usize, width: usize, bands: usize, seed: u64) -> Self {
        Self {
            height,
            width,
            bands,
            seed,
            octaves: 5,
            base_cell: 128,
            regions: (height * width / 2304).max(1),
            region_weight: 0.6,
            mixing: default_mixing(bands, 3),
            pan_weights: None,
            pan_noise_std: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 || self.bands == 0 {
            return invalid("scene dimensions and band count must be positive");
        }
        if self.octaves == 0 || self.base_cell == 0 {
            return invalid("octaves and base_cell must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.region_weight) {
            return invalid("region_weight must lie in [0, 1]");
        }
        if !(self.pan_noise_std >= 0.0 && self.pan_noise_std.is_finite()) {
            return invalid("pan_noise_std must be finite and nonnegative");
        }
        if self.mixing.len() != self.bands {
            return invalid(format!("mixing has {} rows for {} bands", self.mixing.len(), self.bands));
        }
        let k = self.mixing[0].len();
        for (b, row) in self.mixing.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.len() != k || k == 0 || row.iter().any(|&v| !(v >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Degenerate(format!(
                    "mixing row {b} must have {k} nonnegative weights summing to 1, got {row:?}"
                )));
            }
        }
        if let Some(w) = &self.pan_weights {
            if w.len() != self.bands || w.iter().any(|&v| !(v >= 0.0)) {
                return invalid("pan_weights must be one nonnegative weight per band");
            }
        }
        Ok(())
    }

    fn latent_count(&self) -> usize {
        self.mixing[0].len()
    }
}

/// Gaussian bumps over band position, so neighbouring bands share textures.
pub fn default_mixing(bands: usize, latent: usize) -> Vec<Vec<f64>> {
    let pos = |i: usize, n: usize| if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
    (0..bands)
        .map(|b| {
            let row: Vec<f64> = (0..latent)
                .map(|k| {
                    let d = pos(b, bands) - pos(k, latent);
                    (-d * d / (2.0 * 0.35 * 0.35)).exp()
                })
                .collect();
            let sum: f64 = row.iter().sum();
            row.into_iter().map(|v| v / sum).collect()
        })
        .collect()
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// One latent texture in `[0, 1]`.
fn value_noise(rng: &mut ChaCha8Rng, h: usize, w: usize, octaves: usize, base_cell: usize) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    let mut total = 0.0;
    let mut amp = 1.0;
    for o in 0..octaves {
        let cell = (base_cell >> o).max(1) as f64;
        let lh = (h as f64 / cell).ceil() as usize + 2;
        let lw = (w as f64 / cell).ceil() as usize + 2;
        let lattice: Vec<f64> = (0..lh * lw).map(|_| rng.random::<f64>()).collect();
        for r in 0..h {
            let fy = r as f64 / cell;
            let (y0, ty) = (fy.floor() as usize, smoothstep(fy.fract()));
            for c in 0..w {
                let fx = c as f64 / cell;
                let (x0, tx) = (fx.floor() as usize, smoothstep(fx.fract()));
                let at = |y: usize, x: usize| lattice[y * lw + x];
                let top = at(y0, x0) + (at(y0, x0 + 1) - at(y0, x0)) * tx;
                let bottom = at(y0 + 1, x0) + (at(y0 + 1, x0 + 1) - at(y0 + 1, x0)) * tx;
                out[r * w + c] += amp * (top + (bottom - top) * ty);
            }
        }
        total += amp;
        amp *= 0.5;
    }
    out.iter_mut().for_each(|v| *v /= total);
    out
}

/// Nearest-site labelling with a random level per site.
fn region_layer(rng: &mut ChaCha8Rng, h: usize, w: usize, sites: usize) -> Vec<f64> {
    let pts: Vec<(f64, f64, f64)> = (0..sites)
        .map(|_| (rng.random::<f64>() * h as f64, rng.random::<f64>() * w as f64, rng.random::<f64>()))
        .collect();
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let (y, x) = (r as f64 + 0.5, c as f64 + 0.5);
            let mut best = (f64::INFINITY, 0.0);
            for &(py, px, level) in &pts {
                let d = (py - y) * (py - y) + (px - x) * (px - x);
                if d < best.0 {
                    best = (d, level);
                }
            }
            out.push(best.1);
        }
    }
    out
}

fn latent_texture(rng: &mut ChaCha8Rng, cfg: &SyntheticSceneConfig) -> Vec<f64> {
    let (h, w) = (cfg.height, cfg.width);
    let mut t = value_noise(rng, h, w, cfg.octaves, cfg.base_cell);
    if cfg.regions > 0 && cfg.region_weight > 0.0 {
        let regions = region_layer(rng, h, w, cfg.regions);
        let a = cfg.region_weight;
        t.iter_mut().zip(&regions).for_each(|(v, r)| *v = (1.0 - a) * *v + a * r);
    }
    t
}

/// High-resolution MS reference and a same-size PAN. Pure function of `cfg`.
pub fn gen_synthetic_scene(cfg: &SyntheticSceneConfig) -> Result<(MsImage, PanImage)> {
    cfg.validate()?;
    let (h, w) = (cfg.height, cfg.width);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let textures: Vec<Vec<f64>> = (0..cfg.latent_count())
        .map(|_| latent_texture(&mut rng, cfg))
        .collect();

    let bands = cfg
        .mixing
        .iter()
        .map(|row| {
            let mut v = vec![0.0; h * w];
            for (t, &a) in textures.iter().zip(row) {
                v.iter_mut().zip(t).for_each(|(o, &x)| *o += a * x);
            }
            v.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
            RasterBand::new(h, w, v)
        })
        .collect::<Result<Vec<_>>>()?;

    let uniform = vec![1.0 / cfg.bands as f64; cfg.bands];
    let weights = cfg.pan_weights.as_ref().unwrap_or(&uniform);
    let mut pan = vec![0.0; h * w];
    for (band, &wb) in bands.iter().zip(weights) {
        pan.iter_mut().zip(band.values()).for_each(|(p, &x)| *p += wb * x);
    }
    if cfg.pan_noise_std > 0.0 {
        let noise = Normal::new(0.0, cfg.pan_noise_std).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        pan.iter_mut().for_each(|p| *p += noise.sample(&mut rng));
    }
    pan.iter_mut().for_each(|p| *p = p.clamp(0.0, 1.0));

    Ok((MsImage::new(bands, Role::HrmsRef)?, PanImage::new(RasterBand::new(h, w, pan)?)))
}

/// Simulates the sensor: the MS is observed at `1/R` of the scene resolution,
/// the PAN at full resolution.
pub fn observe(hrms: &MsImage, pan: &PanImage, cfg: &WaldConfig) -> Result<(MsImage, PanImage)> {
    let bands = hrms.bands().iter().map(|b| reduce(b, cfg)).collect::<Result<Vec<_>>>()?;
    Ok((MsImage::new(bands, Role::HrmsRef)?, pan.clone()))
}

/// Generate, observe, and degrade: the reduced-resolution experiment inputs
/// for a synthetic scene.
pub fn synthetic_triple(scene: &SyntheticSceneConfig, wald: &WaldConfig) -> Result<WaldTriple> {
    let (hrms, pan) = gen_synthetic_scene(scene)?;
    let (ms, pan) = observe(&hrms, &pan, wald)?;
    wald_degrade(&ms, &pan, wald)
}

/// 512×512 scene, 4 bands, seed 7: a 128×128 reduced-resolution experiment at R = 4.
pub fn default_scene() -> SyntheticSceneConfig {
    SyntheticSceneConfig::new(512, 512, 4, 7)
}

/// Ten 256×256 scenes alternating 4 and 8 bands, seeds 1..=10.
pub fn default_corpus() -> Vec<SyntheticSceneConfig> {
    (1..=10u64)
        .map(|seed| SyntheticSceneConfig::new(256, 256, if seed % 2 == 1 { 4 } else { 8 }, seed))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(bands: usize, seed: u64) -> SyntheticSceneConfig {
        SyntheticSceneConfig { base_cell: 32, ..SyntheticSceneConfig::new(64, 64, bands, seed) }
    }

    #[test]
    fn deterministic() {
        let a = gen_synthetic_scene(&small(4, 3)).unwrap();
        let b = gen_synthetic_scene(&small(4, 3)).unwrap();
        assert_eq!(a, b);
        let c = gen_synthetic_scene(&small(4, 4)).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn noiseless_pan_is_band_mean() {
        let cfg = SyntheticSceneConfig { pan_noise_std: 0.0, ..small(3, 11) };
        let (ms, pan) = gen_synthetic_scene(&cfg).unwrap();
        for i in 0..64 * 64 {
            let mean: f64 = ms.bands().iter().map(|b| b.values()[i] / 3.0).sum();
            assert!((pan.band().values()[i] - mean).abs() < 1e-15);
        }
    }

    #[test]
    fn eight_band_scene_is_textured() {
        let (ms, pan) = gen_synthetic_scene(&SyntheticSceneConfig::new(256, 256, 8, 1)).unwrap();
        for b in ms.bands() {
            let s = b.stats();
            assert!(s.std > 0.02, "std {}", s.std);
            assert!(s.min >= 0.0 && s.max <= 1.0);
        }
        assert!(pan.band().stats().std > 0.02);
    }

    #[test]
    fn degenerate_mixing_rejected() {
        let mut cfg = small(2, 1);
        cfg.mixing[1] = vec![0.5, 0.2, 0.1];
        assert!(matches!(gen_synthetic_scene(&cfg), Err(Error::Degenerate(_))));
        cfg.mixing[1] = vec![1.5, -0.5, 0.0];
        assert!(matches!(gen_synthetic_scene(&cfg), Err(Error::Degenerate(_))));
        cfg.mixing.pop();
        assert!(gen_synthetic_scene(&cfg).is_err());
    }

    #[test]
    fn mixing_rows_are_stochastic() {
        for row in default_mixing(8, 3) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(default_mixing(1, 3)[0].len(), 3);
    }

    #[test]
    fn observe_shapes() {
        let (ms, pan) = gen_synthetic_scene(&small(4, 2)).unwrap();
        let (obs, p) = observe(&ms, &pan, &WaldConfig::default()).unwrap();
        assert_eq!(obs.dims(), (16, 16));
        assert_eq!(p.dims(), (64, 64));
        let t = wald_degrade(&obs, &p, &WaldConfig::default()).unwrap();
        assert_eq!(t.lrms_interp.dims(), (16, 16));
        assert_eq!(t.pan_low.dims(), (16, 16));
    }
}
