use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, shape_err, Result};
use crate::raster::{MsImage, PanImage};

use super::tensor::Tensor;

/// How network input and skip are assembled from the experiment images.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputLayout {
    /// Input `G = [M̃, P]`, no skip.
    Stacked,
    /// Input `G = [M̃, P]`, skip `M̃`.
    StackedWithSkip,
    /// Input `P`, skip `M̃`.
    PanWithSkip,
}

/// One co-located training example.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub input: Tensor,
    pub skip: Option<Tensor>,
    pub target: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchBatch {
    items: Vec<Patch>,
}

impl PatchBatch {
    pub fn new(items: Vec<Patch>) -> Result<Self> {
        let Some(first) = items.first() else {
            return invalid("a batch needs at least one patch");
        };
        let (h, w) = (first.input.height(), first.input.width());
        if h != w {
            return shape_err("patches must be square");
        }
        for p in &items {
            let ok = p.input.height() == h
                && p.input.width() == w
                && p.target.height() == h
                && p.target.width() == w
                && p.skip.as_ref().is_none_or(|s| s.shape() == p.target.shape());
            if !ok {
                return shape_err("every patch must share one size and skip/target shapes must agree");
            }
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[Patch] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn patch_size(&self) -> usize {
        self.items[0].input.height()
    }

    pub fn inputs(&self) -> Vec<Tensor> {
        self.items.iter().map(|p| p.input.clone()).collect()
    }

    pub fn targets(&self) -> Vec<Tensor> {
        self.items.iter().map(|p| p.target.clone()).collect()
    }

    pub fn skips(&self) -> Option<Vec<Tensor>> {
        self.items.iter().map(|p| p.skip.clone()).collect()
    }
}

/// Full-size input, skip and target from which patches are cut.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSource {
    input: Tensor,
    skip: Option<Tensor>,
    target: Tensor,
}

impl PatchSource {
    pub fn new(input: Tensor, skip: Option<Tensor>, target: Tensor) -> Result<Self> {
        let dims = (target.height(), target.width());
        if (input.height(), input.width()) != dims || skip.as_ref().is_some_and(|s| s.shape() != target.shape()) {
            return shape_err("input, skip and target must be co-registered");
        }
        Ok(Self { input, skip, target })
    }

    pub fn from_images(lrms_interp: &MsImage, pan: &PanImage, reference: &MsImage, layout: InputLayout) -> Result<Self> {
        if lrms_interp.dims() != pan.dims() || reference.dims() != pan.dims() {
            return shape_err("lrms_interp, pan and reference must share dimensions");
        }
        if lrms_interp.band_count() != reference.band_count() {
            return shape_err("lrms_interp and reference band counts differ");
        }
        let m = Tensor::from_ms(lrms_interp);
        let p = Tensor::from_pan(pan);
        let y = Tensor::from_ms(reference);
        match layout {
            InputLayout::Stacked => Self::new(m.concat(&p)?, None, y),
            InputLayout::StackedWithSkip => Self::new(m.concat(&p)?, Some(m), y),
            InputLayout::PanWithSkip => Self::new(p, Some(m), y),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.target.height(), self.target.width())
    }

    pub fn input(&self) -> &Tensor {
        &self.input
    }

    pub fn skip(&self) -> Option<&Tensor> {
        self.skip.as_ref()
    }

    pub fn target(&self) -> &Tensor {
        &self.target
    }

    pub fn patch_at(&self, row: usize, col: usize, size: usize) -> Result<Patch> {
        Ok(Patch {
            input: self.input.crop(row, col, size, size)?,
            skip: self.skip.as_ref().map(|s| s.crop(row, col, size, size)).transpose()?,
            target: self.target.crop(row, col, size, size)?,
        })
    }

    fn check_size(&self, size: usize) -> Result<()> {
        let (h, w) = self.dims();
        if size == 0 || size > h || size > w {
            return invalid(format!("patch {size} does not fit in {h}x{w}"));
        }
        Ok(())
    }

    /// `count` patches at uniformly random positions.
    pub fn sample(&self, rng: &mut ChaCha8Rng, count: usize, size: usize) -> Result<PatchBatch> {
        self.check_size(size)?;
        let (h, w) = self.dims();
        let items = (0..count)
            .map(|_| {
                let r = rng.random_range(0..=h - size);
                let c = rng.random_range(0..=w - size);
                self.patch_at(r, c, size)
            })
            .collect::<Result<Vec<_>>>()?;
        PatchBatch::new(items)
    }

    /// Regular grid of patches, in a seeded random order.
    pub fn extract(&self, size: usize, stride: usize, seed: u64) -> Result<PatchBatch> {
        self.check_size(size)?;
        if stride == 0 {
            return invalid("stride must be positive");
        }
        let (h, w) = self.dims();
        let mut coords: Vec<(usize, usize)> = Vec::new();
        let (rows, cols) = (grid_positions(h, size, stride), grid_positions(w, size, stride));
        for &r in &rows {
            for &c in &cols {
                coords.push((r, c));
            }
        }
        coords.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        PatchBatch::new(coords.into_iter().map(|(r, c)| self.patch_at(r, c, size)).collect::<Result<_>>()?)
    }
}

/// Offsets `0, s, 2s, …`, plus the flush-right offset when `s ≤ size` so the
/// grid covers the whole extent.
fn grid_positions(extent: usize, size: usize, stride: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..=extent - size).step_by(stride).collect();
    if stride <= size && *v.last().expect("extent ≥ size") != extent - size {
        v.push(extent - size);
    }
    v
}

/// Co-located patches from the three experiment images.
pub fn extract_patches(
    lrms_interp: &MsImage,
    pan: &PanImage,
    reference: &MsImage,
    layout: InputLayout,
    size: usize,
    stride: usize,
    seed: u64,
) -> Result<PatchBatch> {
    PatchSource::from_images(lrms_interp, pan, reference, layout)?.extract(size, stride, seed)
}
