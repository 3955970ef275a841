use super::{Estimator, EstimatorError, EstimatorInput};
use crate::raster::{dilate, Raster};

/// Kernel diameters swept by [`Baseline2`].
pub const BASELINE2_KERNELS: std::ops::RangeInclusive<usize> = 2..=8;

/// The inlet clipped to the gap.
#[derive(Clone, Copy, Debug, Default)]
pub struct Baseline1;

impl Estimator for Baseline1 {
    fn id(&self) -> String {
        "baseline1".into()
    }

    fn estimate(&self, input: &EstimatorInput) -> Result<Raster, EstimatorError> {
        Ok(input.inlet.intersect(&input.gap())?)
    }
}

/// The inlet dilated by a disk kernel and clipped to the gap, with the kernel
/// chosen to best preserve the inlet area.
#[derive(Clone, Copy, Debug, Default)]
pub struct Baseline2;

impl Baseline2 {
    /// Clipped dilations for every swept kernel, as `(k, output)`.
    pub fn sweep(input: &EstimatorInput) -> Result<Vec<(usize, Raster)>, EstimatorError> {
        let gap = input.gap();
        BASELINE2_KERNELS
            .map(|k| Ok((k, dilate(&input.inlet, k).intersect(&gap)?)))
            .collect()
    }

    /// The winning kernel and its output; ties go to the smaller kernel.
    pub fn choose(input: &EstimatorInput) -> Result<(usize, Raster), EstimatorError> {
        let target = input.inlet.area_px();
        let mut best: Option<(usize, usize, Raster)> = None;
        for (k, out) in Self::sweep(input)? {
            let miss = out.area_px().abs_diff(target);
            if best.as_ref().is_none_or(|(m, _, _)| miss < *m) {
                best = Some((miss, k, out));
            }
        }
        let (_, k, out) = best.expect("kernel range is nonempty");
        Ok((k, out))
    }
}

impl Estimator for Baseline2 {
    fn id(&self) -> String {
        "baseline2".into()
    }

    fn estimate(&self, input: &EstimatorInput) -> Result<Raster, EstimatorError> {
        Ok(Self::choose(input)?.1)
    }
}
