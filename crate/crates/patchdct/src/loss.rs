//! Training losses as pure evaluators with analytic gradients.
//!
//! The mask branch loss is
//!
//! ```text
//! L_mask = λ0·L_dctN + Σ_{s>0} λ_s (L^s_cls + L^s_dct)
//! ```
//!
//! where `L_dctN` is the mean absolute error over the global vector,
//! `L^s_cls` the three-class cross entropy over patches, and `L^s_dct` the
//! per-patch mean absolute error averaged over mixed patches only: each
//! patch carries an indicator that is 1 iff the patch is mixed, so pure
//! patches contribute neither loss nor gradient. No optimizer
//! ships; gradients exist to be checked against finite differences.

use crate::patch::PatchClass;
use crate::{Error, Result};

/// Cross-entropy probability clamp; keeps the loss finite under degenerate
/// inputs (probability 0 on the true class costs `-ln(1e-12) = 12·ln 10`).
pub const PROB_FLOOR: f64 = 1e-12;

/// Per-patch probabilities over (foreground, background, mixed).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProbGrid {
    rows: Vec<[f64; 3]>,
}

impl ClassProbGrid {
    /// Validates that each row is a probability vector (non-negative,
    /// summing to 1 within 1e-9).
    pub fn new(rows: Vec<[f64; 3]>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::invalid(format!(
                    "row {i} holds a negative or non-finite probability"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("row {i} sums to {sum}, expected 1")));
            }
        }
        Ok(ClassProbGrid { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[[f64; 3]] {
        &self.rows
    }

    fn prob(&self, patch: usize, class: PatchClass) -> f64 {
        self.rows[patch][class_slot(class)]
    }
}

/// Column order of a [`ClassProbGrid`] row.
fn class_slot(class: PatchClass) -> usize {
    match class {
        PatchClass::Foreground => 0,
        PatchClass::Background => 1,
        PatchClass::Mixed => 2,
    }
}

/// Loss weights: `λ0` for the global term, one `λ_s` per refinement stage.
#[derive(Debug, Clone, PartialEq)]
pub struct LossWeights {
    pub lambda0: f64,
    pub stage: Vec<f64>,
}

impl LossWeights {
    pub fn new(lambda0: f64, stage: Vec<f64>) -> Result<Self> {
        if !lambda0.is_finite() || lambda0 < 0.0 {
            return Err(Error::invalid(format!("λ0 = {lambda0} must be ≥ 0")));
        }
        if let Some(l) = stage.iter().find(|l| !l.is_finite() || **l < 0.0) {
            return Err(Error::invalid(format!("stage weight {l} must be ≥ 0")));
        }
        Ok(LossWeights { lambda0, stage })
    }

    /// The defaults used throughout: one stage, λ0 = λ1 = 1.
    pub fn unit(stages: usize) -> Self {
        LossWeights {
            lambda0: 1.0,
            stage: vec![1.0; stages],
        }
    }
}

/// Per-stage loss components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageLosses {
    pub cls: f64,
    pub dct: f64,
}

fn check_equal_lengths(pred: &[f64], target: &[f64]) -> Result<()> {
    if pred.len() != target.len() {
        return Err(Error::dimension(format!(
            "vector lengths differ: {} vs {}",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Empty("loss over empty vectors"));
    }
    Ok(())
}

/// Mean absolute error over the global vector: `(1/N) Σ |V̂_i − V_i|`.
pub fn l_dct_global(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_equal_lengths(pred, target)?;
    let n = pred.len() as f64;
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / n)
}

/// Subgradient of [`l_dct_global`] w.r.t. the prediction: `sign(V̂−V)/N`,
/// with 0 at the kink.
pub fn l_dct_global_grad(pred: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    check_equal_lengths(pred, target)?;
    let n = pred.len() as f64;
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| sign(p - t) / n)
        .collect())
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Three-class cross entropy, mean over patches: `−(1/N) Σ log p(target)`.
pub fn l_cls_patch(pred: &ClassProbGrid, targets: &[PatchClass]) -> Result<f64> {
    if pred.len() != targets.len() {
        return Err(Error::dimension(format!(
            "grid sizes differ: {} probability rows vs {} target classes",
            pred.len(),
            targets.len()
        )));
    }
    if targets.is_empty() {
        return Err(Error::Empty("classification loss over zero patches"));
    }
    let total: f64 = targets
        .iter()
        .enumerate()
        .map(|(i, &class)| -pred.prob(i, class).max(PROB_FLOOR).ln())
        .sum();
    // + 0.0 folds the -0.0 that -ln(1) produces into plain zero.
    Ok(total / targets.len() as f64 + 0.0)
}

/// Gradient of [`l_cls_patch`] w.r.t. each probability entry:
/// `−1/(N·p)` on the target slot while above the clamp, 0 elsewhere.
pub fn l_cls_patch_grad(pred: &ClassProbGrid, targets: &[PatchClass]) -> Result<Vec<[f64; 3]>> {
    if pred.len() != targets.len() {
        return Err(Error::dimension(format!(
            "grid sizes differ: {} probability rows vs {} target classes",
            pred.len(),
            targets.len()
        )));
    }
    if targets.is_empty() {
        return Err(Error::Empty("classification loss over zero patches"));
    }
    let n = targets.len() as f64;
    Ok(targets
        .iter()
        .enumerate()
        .map(|(i, &class)| {
            let mut row = [0.0; 3];
            let p = pred.prob(i, class);
            if p > PROB_FLOOR {
                row[class_slot(class)] = -1.0 / (n * p);
            }
            row
        })
        .collect())
}

fn check_patch_vectors(
    preds: &[Vec<f64>],
    targets: &[Vec<f64>],
    classes: &[PatchClass],
) -> Result<()> {
    if preds.len() != targets.len() || preds.len() != classes.len() {
        return Err(Error::dimension(format!(
            "patch counts differ: {} predictions, {} targets, {} classes",
            preds.len(),
            targets.len(),
            classes.len()
        )));
    }
    for (i, (p, t)) in preds.iter().zip(targets).enumerate() {
        if p.len() != t.len() {
            return Err(Error::dimension(format!(
                "patch {i}: prediction length {} vs target length {}",
                p.len(),
                t.len()
            )));
        }
        if p.is_empty() {
            return Err(Error::Empty("patch loss over empty vectors"));
        }
    }
    Ok(())
}

/// Mixed-patch regression loss:
/// `(1/N_m) Σ_k p^k (1/n) Σ_i |V̂_i − V_i|` with `p^k = 1` iff patch `k` is
/// mixed. Defined as 0 when no patch is mixed.
pub fn l_dct_patch(
    preds: &[Vec<f64>],
    targets: &[Vec<f64>],
    classes: &[PatchClass],
) -> Result<f64> {
    check_patch_vectors(preds, targets, classes)?;
    let mixed = classes.iter().filter(|&&c| c == PatchClass::Mixed).count();
    if mixed == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for ((pred, target), &class) in preds.iter().zip(targets).zip(classes) {
        if class == PatchClass::Mixed {
            total += l_dct_global(pred, target)?;
        }
    }
    Ok(total / mixed as f64)
}

/// Gradient of [`l_dct_patch`]: zero rows for non-mixed patches, scaled L1
/// subgradients for mixed ones.
pub fn l_dct_patch_grad(
    preds: &[Vec<f64>],
    targets: &[Vec<f64>],
    classes: &[PatchClass],
) -> Result<Vec<Vec<f64>>> {
    check_patch_vectors(preds, targets, classes)?;
    let mixed = classes.iter().filter(|&&c| c == PatchClass::Mixed).count();
    preds
        .iter()
        .zip(targets)
        .zip(classes)
        .map(|((pred, target), &class)| {
            if class == PatchClass::Mixed && mixed > 0 {
                let scale = 1.0 / mixed as f64;
                Ok(l_dct_global_grad(pred, target)?
                    .into_iter()
                    .map(|g| g * scale)
                    .collect())
            } else {
                Ok(vec![0.0; pred.len()])
            }
        })
        .collect()
}

/// Weighted total: `λ0·global + Σ_s λ_s (cls_s + dct_s)`.
pub fn l_mask(global: f64, stages: &[StageLosses], weights: &LossWeights) -> Result<f64> {
    if stages.len() != weights.stage.len() {
        return Err(Error::dimension(format!(
            "{} stage losses but {} stage weights",
            stages.len(),
            weights.stage.len()
        )));
    }
    if stages.is_empty() {
        return Err(Error::Empty("mask loss needs at least one stage"));
    }
    let mut total = weights.lambda0 * global;
    for (stage, lambda) in stages.iter().zip(&weights.stage) {
        total += lambda * (stage.cls + stage.dct);
    }
    Ok(total)
}
