//! Classical detail injection: component substitution (CS) and
//! multiresolution analysis (MRA) injectors.
//!
//! Both families reduce to `M̂_b = M̃_b + g_b·d`: they differ only in the
//! low-frequency plane subtracted from PAN to form the PAN details `d`
//! (an intensity component for CS, a low-pass PAN for MRA). Every injector
//! here builds a [`DetailImage`] and goes through [`add_details`].

use crate::error::{invalid, shape_err, Error, Result};
use crate::raster::{add_details, DetailImage, MsImage, PanImage, RasterBand};
use crate::resample::{decimate, gaussian_lowpass, interpolate, separable_filter, WaldConfig};

/// Non-negative band weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityWeights(Vec<f64>);

impl IntensityWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return invalid("intensity weights cannot be empty");
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return invalid("intensity weights must be finite and non-negative");
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return invalid(format!("intensity weights sum to {sum}, expected 1"));
        }
        Ok(Self(weights))
    }

    pub fn uniform(bands: usize) -> Self {
        Self(vec![1.0 / bands as f64; bands])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Injection gains: one scalar per band, or one gain map per band.
#[derive(Debug, Clone, PartialEq)]
pub enum InjectionGains {
    Scalar(Vec<f64>),
    Maps(Vec<RasterBand>),
}

impl InjectionGains {
    pub fn band_count(&self) -> usize {
        match self {
            InjectionGains::Scalar(g) => g.len(),
            InjectionGains::Maps(m) => m.len(),
        }
    }

    /// MS details `D_b = g_b ⊙ d`.
    pub fn apply(&self, pan_detail: &RasterBand) -> Result<DetailImage> {
        match self {
            InjectionGains::Scalar(g) => DetailImage::from_gains(pan_detail, g),
            InjectionGains::Maps(maps) => {
                let bands = maps
                    .iter()
                    .map(|m| m.zip_map(pan_detail, |g, d| g * d))
                    .collect::<Result<Vec<_>>>()?;
                DetailImage::new(bands)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractorKind {
    CsIntensity,
    MraAtwt,
    MraGlp,
}

impl ExtractorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExtractorKind::CsIntensity => "cs_intensity",
            ExtractorKind::MraAtwt => "mra_atwt",
            ExtractorKind::MraGlp => "mra_glp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cs_intensity" => Some(Self::CsIntensity),
            "mra_atwt" => Some(Self::MraAtwt),
            "mra_glp" => Some(Self::MraGlp),
            _ => None,
        }
    }
}

/// How PAN details are extracted.
#[derive(Debug, Clone, PartialEq)]
pub enum DetailExtractorSpec {
    CsIntensity { weights: Option<IntensityWeights> },
    MraAtwt { levels: usize },
    MraGlp { wald: WaldConfig },
}

impl DetailExtractorSpec {
    pub fn kind(&self) -> ExtractorKind {
        match self {
            DetailExtractorSpec::CsIntensity { .. } => ExtractorKind::CsIntensity,
            DetailExtractorSpec::MraAtwt { .. } => ExtractorKind::MraAtwt,
            DetailExtractorSpec::MraGlp { .. } => ExtractorKind::MraGlp,
        }
    }

    /// Default extractor of each kind: uniform weights, two à-trous levels
    /// (one per octave at ratio 4), the default resolution chain.
    pub fn default_for(kind: ExtractorKind, wald: WaldConfig) -> Self {
        match kind {
            ExtractorKind::CsIntensity => DetailExtractorSpec::CsIntensity { weights: None },
            ExtractorKind::MraAtwt => DetailExtractorSpec::MraAtwt { levels: 2 },
            ExtractorKind::MraGlp => DetailExtractorSpec::MraGlp { wald },
        }
    }
}

/// `I_c = Σ_b ω_b M̃_b`.
pub fn intensity_component(ms: &MsImage, weights: &IntensityWeights) -> Result<RasterBand> {
    if weights.len() != ms.band_count() {
        return invalid(format!("{} weights for {} bands", weights.len(), ms.band_count()));
    }
    let (h, w) = ms.dims();
    let mut out = vec![0.0; h * w];
    for (band, &wt) in ms.bands().iter().zip(weights.as_slice()) {
        for (o, v) in out.iter_mut().zip(band.values()) {
            *o += wt * v;
        }
    }
    RasterBand::new(h, w, out)
}

const B3: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

/// À-trous decomposition with the B3 cubic-spline kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct AtrousDecomposition {
    /// Detail planes `c_{j−1} − c_j`, finest first.
    pub details: Vec<RasterBand>,
    /// Final approximation plane.
    pub approximation: RasterBand,
}

impl AtrousDecomposition {
    /// Approximation plus all detail planes.
    pub fn reconstruct(&self) -> RasterBand {
        let mut acc = self.approximation.values().to_vec();
        for d in &self.details {
            for (a, v) in acc.iter_mut().zip(d.values()) {
                *a += v;
            }
        }
        let (h, w) = self.approximation.dims();
        RasterBand::from_parts(h, w, acc)
    }
}

pub fn atwt_decompose(band: &RasterBand, levels: usize) -> Result<AtrousDecomposition> {
    if levels == 0 {
        return invalid("à-trous decomposition needs at least one level");
    }
    let reach = 2usize << (levels - 1);
    let (h, w) = band.dims();
    if h <= reach || w <= reach {
        return shape_err(format!("band {h}x{w} is smaller than the dilated B3 support ±{reach}"));
    }
    let mut details = Vec::with_capacity(levels);
    let mut current = band.clone();
    for level in 0..levels {
        let hole = 1isize << level;
        let taps: Vec<(isize, f64)> = B3.iter().enumerate().map(|(i, &t)| ((i as isize - 2) * hole, t)).collect();
        let next = separable_filter(&current, &taps);
        details.push(current.zip_map(&next, |a, b| a - b)?);
        current = next;
    }
    Ok(AtrousDecomposition { details, approximation: current })
}

/// Low-frequency PAN `P_c` from the à-trous approximation after `levels` levels.
pub fn atwt_lowpass(pan: &PanImage, levels: usize) -> Result<RasterBand> {
    Ok(atwt_decompose(pan.band(), levels)?.approximation)
}

/// Low-frequency PAN `P_c` from the generalized Laplacian pyramid chain:
/// low-pass, decimate and re-interpolate at the resolution ratio.
pub fn glp_lowpass(pan: &PanImage, cfg: &WaldConfig) -> Result<RasterBand> {
    cfg.validate()?;
    let low = decimate(&gaussian_lowpass(pan.band(), cfg)?, cfg.ratio)?;
    interpolate(&low, cfg)
}

/// Projection gains `g_b = cov(M̃_b, S) / var(S)` against the source plane `S`.
pub fn estimate_gains(ms: &MsImage, source: &RasterBand) -> Result<InjectionGains> {
    if ms.dims() != source.dims() {
        return shape_err(format!("ms is {:?}, source plane is {:?}", ms.dims(), source.dims()));
    }
    let n = source.len() as f64;
    let s_mean = source.values().iter().sum::<f64>() / n;
    let var = source.values().iter().map(|s| (s - s_mean).powi(2)).sum::<f64>() / n;
    if var < 1e-12 {
        return Err(Error::Degenerate(format!("source plane variance {var:e} is below 1e-12")));
    }
    let gains = ms
        .bands()
        .iter()
        .map(|b| {
            let m_mean = b.values().iter().sum::<f64>() / n;
            let cov = b
                .values()
                .iter()
                .zip(source.values())
                .map(|(m, s)| (m - m_mean) * (s - s_mean))
                .sum::<f64>()
                / n;
            cov / var
        })
        .collect();
    Ok(InjectionGains::Scalar(gains))
}

fn inject(ms: &MsImage, pan: &PanImage, low: &RasterBand, gains: &InjectionGains) -> Result<MsImage> {
    if pan.dims() != ms.dims() {
        return shape_err(format!("ms is {:?}, pan is {:?}", ms.dims(), pan.dims()));
    }
    if gains.band_count() != ms.band_count() {
        return invalid(format!("{} gains for {} bands", gains.band_count(), ms.band_count()));
    }
    let detail = pan.band().zip_map(low, |p, l| p - l)?;
    add_details(ms, &gains.apply(&detail)?)
}

/// `M̂_b = M̃_b + g_b·(P − I_c)`.
pub fn cs_pansharpen(
    ms: &MsImage,
    pan: &PanImage,
    weights: &IntensityWeights,
    gains: &InjectionGains,
) -> Result<MsImage> {
    let intensity = intensity_component(ms, weights)?;
    inject(ms, pan, &intensity, gains)
}

/// `M̂_b = M̃_b + g_b·(P − P_c)`.
pub fn mra_pansharpen(ms: &MsImage, pan: &PanImage, low_pan: &RasterBand, gains: &InjectionGains) -> Result<MsImage> {
    inject(ms, pan, low_pan, gains)
}

/// The CS result written in substitution form,
/// `(M̃_b − I_c) + g_b·(P − ((g_b − 1)/g_b)·I_c)`; undefined for `g_b = 0`.
pub fn cs_substitution_form(ms: &MsImage, pan: &PanImage, weights: &IntensityWeights, gains: &[f64]) -> Result<MsImage> {
    if gains.iter().any(|&g| g == 0.0) {
        return invalid("substitution form is undefined for a zero gain");
    }
    if gains.len() != ms.band_count() {
        return invalid(format!("{} gains for {} bands", gains.len(), ms.band_count()));
    }
    let intensity = intensity_component(ms, weights)?;
    let (h, w) = ms.dims();
    let bands = ms
        .bands()
        .iter()
        .zip(gains)
        .map(|(m, &g)| {
            let values = (0..h * w)
                .map(|i| {
                    let (mb, ic, p) = (m.values()[i], intensity.values()[i], pan.band().values()[i]);
                    (mb - ic) + g * (p - ((g - 1.0) / g) * ic)
                })
                .collect();
            RasterBand::new(h, w, values)
        })
        .collect::<Result<Vec<_>>>()?;
    MsImage::new(bands, crate::raster::Role::HrmsPred)
}

/// Runs a complete classical injector: extract the low-frequency plane,
/// estimate projection gains against it, inject.
pub fn pansharpen(ms: &MsImage, pan: &PanImage, spec: &DetailExtractorSpec) -> Result<MsImage> {
    let low = match spec {
        DetailExtractorSpec::CsIntensity { weights } => {
            let w = weights.clone().unwrap_or_else(|| IntensityWeights::uniform(ms.band_count()));
            intensity_component(ms, &w)?
        }
        DetailExtractorSpec::MraAtwt { levels } => atwt_lowpass(pan, *levels)?,
        DetailExtractorSpec::MraGlp { wald } => glp_lowpass(pan, wald)?,
    };
    let gains = estimate_gains(ms, &low)?;
    inject(ms, pan, &low, &gains)
}
