//! Segmentation metrics and cue-bias scores.
//!
//! Everything is computed from an integer confusion matrix accumulated
//! over prediction/ground-truth mask pairs (ignore id 255 skipped), so
//! metric values are exact functions of pixel counts:
//!
//! * **mIoU**: mean over evaluable classes of
//!   `tp / (row_sum + col_sum - tp)`, in percent. A class absent from
//!   both prediction and ground truth (empty row *and* column) is
//!   excluded from the mean rather than polluting it with a 0/0.
//! * **pixel accuracy**: trace over total, in percent.
//! * **cue-decision shape bias (CDSB)**: given the mIoU on a shape-cue
//!   dataset and on a texture-cue dataset, each normalized by a fixed
//!   dataset-specific ceiling,
//!   `cdsb = (shape/S) / (shape/S + texture/T)` — 1 means pure shape
//!   reliance, 0 pure texture reliance.
//! * **robustness score**: mean over corruption families of the mean
//!   mIoU over that family's severity levels (identity levels included),
//!   divided by the mIoU on clean data.
//! * **relative accuracy**: accuracy on a stylized dataset over accuracy
//!   on the clean dataset.

use crate::error::{Error, Result};
use crate::image::{LabelMask, IGNORE_ID};

/// Square confusion matrix over `classes` class ids; `counts[gt][pred]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    /// `classes` must be at least 1 and at most 255 (id 255 is reserved
    /// for "ignore").
    pub fn new(classes: usize) -> Result<Self> {
        if classes == 0 || classes > 255 {
            return Err(Error::InvalidParameter(format!(
                "class count must lie in [1, 255], got {classes}"
            )));
        }
        Ok(ConfusionMatrix {
            classes,
            counts: vec![0; classes * classes],
        })
    }

    #[inline]
    pub fn classes(&self) -> usize {
        self.classes
    }

    #[inline]
    pub fn count(&self, gt: usize, pred: usize) -> u64 {
        self.counts[gt * self.classes + pred]
    }

    /// Total counted pixels (ignored pixels never enter).
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Tally one ground-truth/prediction pair.
    ///
    /// Pixels whose ground truth is the ignore id are skipped entirely.
    /// Any other id out of `[0, classes)` — on either side — is an error:
    /// a prediction outside the declared label space is a pipeline bug,
    /// not a misclassification.
    pub fn accumulate(&mut self, ground_truth: &LabelMask, prediction: &LabelMask) -> Result<()> {
        if ground_truth.width() != prediction.width()
            || ground_truth.height() != prediction.height()
        {
            return Err(Error::InvalidDimensions(format!(
                "ground truth is {}x{} but the prediction is {}x{}",
                ground_truth.width(),
                ground_truth.height(),
                prediction.width(),
                prediction.height()
            )));
        }
        let c = self.classes;
        for (&gt, &pred) in ground_truth.ids().iter().zip(prediction.ids()) {
            if gt == IGNORE_ID {
                continue;
            }
            if (gt as usize) >= c {
                return Err(Error::PredictionOutOfRange { id: gt, classes: c });
            }
            if (pred as usize) >= c {
                return Err(Error::PredictionOutOfRange { id: pred, classes: c });
            }
            self.counts[gt as usize * c + pred as usize] += 1;
        }
        Ok(())
    }

    /// Add another matrix tallied over the same class space. Accumulation
    /// is a sum of independent per-pixel tallies, so merging partial
    /// matrices in any order gives the same result as one big pass.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.classes != self.classes {
            return Err(Error::InvalidParameter(format!(
                "cannot merge a {}-class matrix into a {}-class one",
                other.classes, self.classes
            )));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }
}

/// Per-class IoU in percent; `None` for classes absent from both sides.
pub fn per_class_iou(cm: &ConfusionMatrix) -> Vec<Option<f64>> {
    let c = cm.classes();
    (0..c)
        .map(|k| {
            let row: u64 = (0..c).map(|p| cm.count(k, p)).sum();
            let col: u64 = (0..c).map(|g| cm.count(g, k)).sum();
            if row + col == 0 {
                return None;
            }
            let tp = cm.count(k, k);
            let denom = row + col - tp;
            Some(100.0 * tp as f64 / denom as f64)
        })
        .collect()
}

/// Mean IoU in percent over evaluable classes.
pub fn miou(cm: &ConfusionMatrix) -> Result<f64> {
    let ious: Vec<f64> = per_class_iou(cm).into_iter().flatten().collect();
    if ious.is_empty() {
        return Err(Error::NoEvaluableClasses);
    }
    Ok(ious.iter().sum::<f64>() / ious.len() as f64)
}

/// Overall pixel accuracy in percent.
pub fn pixel_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::UndefinedRatio(
            "pixel accuracy over zero valid pixels".into(),
        ));
    }
    let correct: u64 = (0..cm.classes()).map(|k| cm.count(k, k)).sum();
    Ok(100.0 * correct as f64 / total as f64)
}

/// Normalization ceiling for the shape cue on Cityscapes: the mIoU
/// (percent) the reference model reaches when only the shape cue is
/// present.
pub const CITYSCAPES_SHAPE_NORM: f64 = 25.99;
/// Texture-cue counterpart of [`CITYSCAPES_SHAPE_NORM`].
pub const CITYSCAPES_TEXTURE_NORM: f64 = 36.43;
/// Shape-cue normalization ceiling on PASCAL Context.
pub const PASCAL_CONTEXT_SHAPE_NORM: f64 = 38.38;
/// Texture-cue normalization ceiling on PASCAL Context.
pub const PASCAL_CONTEXT_TEXTURE_NORM: f64 = 35.11;

/// Inputs of the cue-decision shape bias score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CDSBInputs {
    /// mIoU on the shape-cue dataset (percent).
    pub iou_shape: f64,
    /// mIoU on the texture-cue dataset (percent).
    pub iou_texture: f64,
    /// Normalization ceiling for the shape dataset.
    pub s_norm: f64,
    /// Normalization ceiling for the texture dataset.
    pub t_norm: f64,
}

/// Cue-decision shape bias: `(shape/S) / (shape/S + texture/T)`.
pub fn cdsb(inputs: &CDSBInputs) -> Result<f64> {
    let CDSBInputs {
        iou_shape,
        iou_texture,
        s_norm,
        t_norm,
    } = *inputs;
    if !(s_norm > 0.0) || !(t_norm > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "normalization ceilings must be positive, got S={s_norm}, T={t_norm}"
        )));
    }
    if iou_shape < 0.0 || iou_texture < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "IoU values cannot be negative, got {iou_shape} and {iou_texture}"
        )));
    }
    let shape = iou_shape / s_norm;
    let texture = iou_texture / t_norm;
    if shape + texture == 0.0 {
        return Err(Error::UndefinedRatio(
            "shape bias of a model with zero IoU on both cue datasets".into(),
        ));
    }
    Ok(shape / (shape + texture))
}

/// Per-family mIoU sweeps plus the clean-data reference.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessTable {
    families: Vec<(String, Vec<f64>)>,
    miou_original: f64,
}

impl RobustnessTable {
    pub fn new(families: Vec<(String, Vec<f64>)>, miou_original: f64) -> Result<Self> {
        if families.is_empty() {
            return Err(Error::InvalidParameter(
                "robustness needs at least one corruption family".into(),
            ));
        }
        for (name, levels) in &families {
            if levels.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "family {name:?} has no severity levels"
                )));
            }
            if levels.iter().any(|m| !m.is_finite() || *m < 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "family {name:?} has non-finite or negative mIoU entries"
                )));
            }
        }
        if !(miou_original.is_finite()) || miou_original < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "clean mIoU must be finite and non-negative, got {miou_original}"
            )));
        }
        Ok(RobustnessTable {
            families,
            miou_original,
        })
    }

    #[inline]
    pub fn families(&self) -> &[(String, Vec<f64>)] {
        &self.families
    }

    #[inline]
    pub fn miou_original(&self) -> f64 {
        self.miou_original
    }
}

/// Robustness score: mean over families of the per-family mean mIoU
/// (identity severities included by the caller's table), normalized by
/// the clean mIoU.
pub fn robustness_score(table: &RobustnessTable) -> Result<f64> {
    if table.miou_original == 0.0 {
        return Err(Error::UndefinedRatio(
            "robustness relative to a zero clean mIoU".into(),
        ));
    }
    let family_means: f64 = table
        .families
        .iter()
        .map(|(_, levels)| levels.iter().sum::<f64>() / levels.len() as f64)
        .sum();
    Ok(family_means / table.families.len() as f64 / table.miou_original)
}

/// Relative accuracy of a stylized dataset against the clean dataset.
pub fn acc_rel(acc_stylized: f64, acc_clean: f64) -> Result<f64> {
    if acc_stylized < 0.0 || !acc_stylized.is_finite() || !acc_clean.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "accuracies must be finite and non-negative, got {acc_stylized} and {acc_clean}"
        )));
    }
    if !(acc_clean > 0.0) {
        return Err(Error::UndefinedRatio(
            "relative accuracy against a zero clean accuracy".into(),
        ));
    }
    Ok(acc_stylized / acc_clean)
}
