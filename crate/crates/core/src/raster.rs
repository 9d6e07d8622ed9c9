//! Image containers shared by every stage of the pipeline.
//!
//! All samples are `f64` and stored band-sequential: a multi-band image is a
//! list of planar [`RasterBand`]s, each row-major. Values are immutable once
//! constructed; operations return new images.

use crate::error::{invalid, shape_err, Error, Result};

/// One H×W plane of finite real samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterBand {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl RasterBand {
    /// Builds a band, validating the dimensions and that every sample is finite.
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return invalid(format!("band dimensions must be positive, got {height}x{width}"));
        }
        if values.len() != height * width {
            return shape_err(format!(
                "band {height}x{width} needs {} samples, got {}",
                height * width,
                values.len()
            ));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { height, width, values })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::filled(height, width, 0.0)
    }

    /// Builds a band by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                values.push(f(r, c));
            }
        }
        Self::new(height, width, values)
    }

    /// Internal constructor for values produced by arithmetic on valid bands.
    pub(crate) fn from_parts(height: usize, width: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), height * width);
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { height, width, values }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Element-wise combination of two equally sized bands.
    pub fn zip_map(&self, other: &RasterBand, f: impl Fn(f64, f64) -> f64) -> Result<RasterBand> {
        if self.dims() != other.dims() {
            return shape_err(format!(
                "band sizes differ: {:?} vs {:?}",
                self.dims(),
                other.dims()
            ));
        }
        let values: Vec<f64> = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        RasterBand::new(self.height, self.width, values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<RasterBand> {
        RasterBand::new(self.height, self.width, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Copies the window starting at `(row, col)`.
    pub fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Result<RasterBand> {
        if height == 0 || width == 0 || row + height > self.height || col + width > self.width {
            return shape_err(format!(
                "crop {height}x{width} at ({row},{col}) exceeds band {}x{}",
                self.height, self.width
            ));
        }
        let mut values = Vec::with_capacity(height * width);
        for r in row..row + height {
            let start = r * self.width + col;
            values.extend_from_slice(&self.values[start..start + width]);
        }
        Ok(RasterBand::from_parts(height, width, values))
    }

    pub fn stats(&self) -> BandStats {
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        let var = self.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let (min, max) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        BandStats { mean, std: var.sqrt(), min, max }
    }
}

/// What an [`MsImage`] stands for in the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    /// Low-resolution MS interpolated to the PAN grid.
    LrmsInterp,
    /// A pansharpened prediction.
    HrmsPred,
    /// Ground truth (or the observed MS used as truth under Wald's protocol).
    HrmsRef,
    /// MS bands followed by PAN; only produced by [`concat_with_pan`].
    ConcatInput,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::LrmsInterp => "lrms_interp",
            Role::HrmsPred => "hrms_pred",
            Role::HrmsRef => "hrms_ref",
            Role::ConcatInput => "concat_input",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        match s {
            "lrms_interp" => Some(Role::LrmsInterp),
            "hrms_pred" => Some(Role::HrmsPred),
            "hrms_ref" => Some(Role::HrmsRef),
            "concat_input" => Some(Role::ConcatInput),
            _ => None,
        }
    }
}

fn check_same_dims(bands: &[RasterBand]) -> Result<(usize, usize)> {
    let Some(first) = bands.first() else {
        return invalid("image needs at least one band");
    };
    let dims = first.dims();
    if let Some((i, b)) = bands.iter().enumerate().find(|(_, b)| b.dims() != dims) {
        return shape_err(format!("band {i} is {:?}, band 0 is {dims:?}", b.dims()));
    }
    Ok(dims)
}

/// Multispectral image with N_b ≥ 1 co-registered bands.
#[derive(Debug, Clone, PartialEq)]
pub struct MsImage {
    bands: Vec<RasterBand>,
    role: Role,
}

impl MsImage {
    pub fn new(bands: Vec<RasterBand>, role: Role) -> Result<Self> {
        if role == Role::ConcatInput {
            return invalid("concat_input images are only produced by concat_with_pan");
        }
        check_same_dims(&bands)?;
        Ok(Self { bands, role })
    }

    pub fn bands(&self) -> &[RasterBand] {
        &self.bands
    }

    pub fn band(&self, index: usize) -> &RasterBand {
        &self.bands[index]
    }

    pub fn into_bands(self) -> Vec<RasterBand> {
        self.bands
    }

    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn height(&self) -> usize {
        self.bands[0].height()
    }

    pub fn width(&self) -> usize {
        self.bands[0].width()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.bands[0].dims()
    }

    /// Same samples under a different role tag.
    pub fn with_role(self, role: Role) -> Result<Self> {
        if role == Role::ConcatInput && self.role != Role::ConcatInput {
            return invalid("cannot relabel an image as concat_input");
        }
        Ok(Self { role, ..self })
    }

    /// Keeps the listed bands, in the listed order.
    pub fn select_bands(&self, indices: &[usize]) -> Result<MsImage> {
        let mut bands = Vec::with_capacity(indices.len());
        for &i in indices {
            match self.bands.get(i) {
                Some(b) => bands.push(b.clone()),
                None => return invalid(format!("band index {i} out of range for {} bands", self.bands.len())),
            }
        }
        MsImage::new(bands, self.role)
    }

    /// Splits a concatenated image back into its MS bands and PAN.
    pub fn split_pan(&self) -> Result<(MsImage, PanImage)> {
        if self.role != Role::ConcatInput {
            return invalid("split_pan requires a concat_input image");
        }
        let n = self.bands.len() - 1;
        let ms = MsImage::new(self.bands[..n].to_vec(), Role::LrmsInterp)?;
        Ok((ms, PanImage::new(self.bands[n].clone())))
    }

    pub fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Result<MsImage> {
        let bands = self
            .bands
            .iter()
            .map(|b| b.crop(row, col, height, width))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { bands, role: self.role })
    }
}

/// Single-band panchromatic image.
#[derive(Debug, Clone, PartialEq)]
pub struct PanImage {
    band: RasterBand,
}

impl PanImage {
    pub fn new(band: RasterBand) -> Self {
        Self { band }
    }

    pub fn band(&self) -> &RasterBand {
        &self.band
    }

    pub fn into_band(self) -> RasterBand {
        self.band
    }

    pub fn dims(&self) -> (usize, usize) {
        self.band.dims()
    }
}

/// Signed detail planes: one band for PAN details, N_b bands for MS details.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailImage {
    bands: Vec<RasterBand>,
}

impl DetailImage {
    pub fn new(bands: Vec<RasterBand>) -> Result<Self> {
        check_same_dims(&bands)?;
        Ok(Self { bands })
    }

    pub fn bands(&self) -> &[RasterBand] {
        &self.bands
    }

    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.bands[0].dims()
    }

    /// `a − b`, band by band.
    pub fn difference(a: &MsImage, b: &MsImage) -> Result<DetailImage> {
        if a.band_count() != b.band_count() {
            return shape_err(format!("band counts differ: {} vs {}", a.band_count(), b.band_count()));
        }
        let bands = a
            .bands()
            .iter()
            .zip(b.bands())
            .map(|(x, y)| x.zip_map(y, |p, q| p - q))
            .collect::<Result<Vec<_>>>()?;
        DetailImage::new(bands)
    }

    /// MS details `D_b = g_b · d` from one PAN-detail plane and per-band gains.
    pub fn from_gains(pan_detail: &RasterBand, gains: &[f64]) -> Result<DetailImage> {
        let bands = gains
            .iter()
            .map(|&g| pan_detail.map(|d| g * d))
            .collect::<Result<Vec<_>>>()?;
        DetailImage::new(bands)
    }

    pub fn add(&self, other: &DetailImage) -> Result<DetailImage> {
        if self.band_count() != other.band_count() {
            return shape_err("detail band counts differ");
        }
        let bands = self
            .bands
            .iter()
            .zip(&other.bands)
            .map(|(a, b)| a.zip_map(b, |x, y| x + y))
            .collect::<Result<Vec<_>>>()?;
        DetailImage::new(bands)
    }
}

/// Per-band summary statistics (population standard deviation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

/// Appends the PAN as band N_b+1 of the MS image: the network input G.
pub fn concat_with_pan(ms: &MsImage, pan: &PanImage) -> Result<MsImage> {
    if ms.dims() != pan.dims() {
        return shape_err(format!("ms is {:?}, pan is {:?}", ms.dims(), pan.dims()));
    }
    let mut bands = ms.bands().to_vec();
    bands.push(pan.band().clone());
    Ok(MsImage { bands, role: Role::ConcatInput })
}

/// `M̂_b = M̃_b + D_b` for every band; the sum is `ms + detail` per sample.
pub fn add_details(ms: &MsImage, details: &DetailImage) -> Result<MsImage> {
    if ms.band_count() != details.band_count() {
        return shape_err(format!(
            "{} MS bands but {} detail bands",
            ms.band_count(),
            details.band_count()
        ));
    }
    let bands = ms
        .bands()
        .iter()
        .zip(details.bands())
        .map(|(m, d)| m.zip_map(d, |a, b| a + b))
        .collect::<Result<Vec<_>>>()?;
    MsImage::new(bands, Role::HrmsPred)
}

pub fn band_stats(img: &MsImage) -> Vec<BandStats> {
    img.bands().iter().map(RasterBand::stats).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_ms(rng: &mut ChaCha8Rng, bands: usize, h: usize, w: usize, role: Role) -> MsImage {
        let bands = (0..bands)
            .map(|_| RasterBand::from_fn(h, w, |_, _| rng.random::<f64>()).unwrap())
            .collect();
        MsImage::new(bands, role).unwrap()
    }

    #[test]
    fn concat_appends_pan_last() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ms = random_ms(&mut rng, 4, 8, 8, Role::LrmsInterp);
        let pan = PanImage::new(RasterBand::from_fn(8, 8, |r, c| (r * 8 + c) as f64).unwrap());
        let g = concat_with_pan(&ms, &pan).unwrap();
        assert_eq!(g.band_count(), 5);
        assert_eq!(g.role(), Role::ConcatInput);
        assert_eq!(g.band(4), pan.band());
        for b in 0..4 {
            assert_eq!(g.band(b), ms.band(b));
        }
        let (ms2, pan2) = g.split_pan().unwrap();
        assert_eq!(ms2, ms);
        assert_eq!(pan2, pan);
    }

    #[test]
    fn concat_minimal_and_mismatch() {
        let ms = MsImage::new(vec![RasterBand::filled(3, 3, 0.2).unwrap()], Role::LrmsInterp).unwrap();
        let pan = PanImage::new(RasterBand::filled(3, 3, 0.4).unwrap());
        assert_eq!(concat_with_pan(&ms, &pan).unwrap().band_count(), 2);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ms = random_ms(&mut rng, 4, 8, 8, Role::LrmsInterp);
        let pan = PanImage::new(RasterBand::zeros(16, 16).unwrap());
        assert!(matches!(concat_with_pan(&ms, &pan), Err(Error::Shape(_))));
    }

    #[test]
    fn add_zero_and_ideal_details() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ms = random_ms(&mut rng, 3, 5, 6, Role::LrmsInterp);
        let zero = DetailImage::new(vec![RasterBand::zeros(5, 6).unwrap(); 3]).unwrap();
        let out = add_details(&ms, &zero).unwrap();
        assert_eq!(out.bands(), ms.bands());
        assert_eq!(out.role(), Role::HrmsPred);

        // (y - m) + m can differ from y by one rounding; use dyadic samples for exactness.
        let dyadic = |rng: &mut ChaCha8Rng| {
            let bands = (0..3)
                .map(|_| RasterBand::from_fn(5, 6, |_, _| rng.random_range(0..256) as f64 / 256.0).unwrap())
                .collect();
            MsImage::new(bands, Role::LrmsInterp).unwrap()
        };
        let m = dyadic(&mut rng);
        let t = dyadic(&mut rng).with_role(Role::HrmsRef).unwrap();
        let ideal = DetailImage::difference(&t, &m).unwrap();
        assert_eq!(add_details(&m, &ideal).unwrap().bands(), t.bands());
    }

    #[test]
    fn add_details_matches_scalar_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ms = random_ms(&mut rng, 3, 4, 4, Role::LrmsInterp);
        let d = DetailImage::new(
            (0..3)
                .map(|_| RasterBand::from_fn(4, 4, |_, _| rng.random::<f64>() - 0.5).unwrap())
                .collect(),
        )
        .unwrap();
        let out = add_details(&ms, &d).unwrap();
        for b in 0..3 {
            for r in 0..4 {
                for c in 0..4 {
                    let expected = ms.band(b).values()[r * 4 + c] + d.bands()[b].values()[r * 4 + c];
                    assert_eq!(out.band(b).get(r, c), expected);
                }
            }
        }
    }

    #[test]
    fn add_details_band_mismatch() {
        let ms = MsImage::new(vec![RasterBand::zeros(2, 2).unwrap(); 3], Role::LrmsInterp).unwrap();
        let d = DetailImage::new(vec![RasterBand::zeros(2, 2).unwrap(); 2]).unwrap();
        assert!(add_details(&ms, &d).is_err());
    }

    #[test]
    fn stats_constant_and_checkerboard() {
        let img = MsImage::new(
            vec![
                RasterBand::filled(4, 4, 0.5).unwrap(),
                RasterBand::from_fn(4, 4, |r, c| ((r + c) % 2) as f64).unwrap(),
            ],
            Role::HrmsRef,
        )
        .unwrap();
        let s = band_stats(&img);
        assert_eq!(s[0].mean, 0.5);
        assert_eq!(s[0].std, 0.0);
        assert_eq!(s[1].mean, 0.5);
        assert_eq!(s[1].std, 0.5);
        assert_eq!((s[1].min, s[1].max), (0.0, 1.0));
    }

    #[test]
    fn invariants_rejected() {
        assert!(RasterBand::new(0, 3, vec![]).is_err());
        assert!(matches!(
            RasterBand::new(1, 2, vec![0.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
        assert!(MsImage::new(vec![], Role::HrmsRef).is_err());
        assert!(MsImage::new(
            vec![RasterBand::zeros(2, 2).unwrap(), RasterBand::zeros(2, 3).unwrap()],
            Role::HrmsRef
        )
        .is_err());
        assert!(MsImage::new(vec![RasterBand::zeros(2, 2).unwrap()], Role::ConcatInput).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn dyadic_band(h: usize, w: usize) -> impl Strategy<Value = RasterBand> {
            proptest::collection::vec(-1024i32..1024, h * w)
                .prop_map(move |v| RasterBand::new(h, w, v.into_iter().map(|x| x as f64 / 64.0).collect()).unwrap())
        }

        proptest! {
            #[test]
            fn detail_addition_associates_on_dyadic_values(
                m in dyadic_band(3, 4), d1 in dyadic_band(3, 4), d2 in dyadic_band(3, 4)
            ) {
                let ms = MsImage::new(vec![m], Role::LrmsInterp).unwrap();
                let d1 = DetailImage::new(vec![d1]).unwrap();
                let d2 = DetailImage::new(vec![d2]).unwrap();
                let once = add_details(&ms, &d1.add(&d2).unwrap()).unwrap();
                let twice = add_details(&add_details(&ms, &d1).unwrap().with_role(Role::LrmsInterp).unwrap(), &d2).unwrap();
                prop_assert_eq!(once.bands(), twice.bands());
            }
        }
    }
}
