//! Deterministic reconstruction-quality sweeps.
//!
//! A sweep runs every requested configuration over one corpus: global
//! codes by dimension, patch codes by `(m, n)` pair crossed with the
//! corruption grid. Each configuration emits one CSV row carrying the full
//! configuration key plus corpus mean IoU and mean boundary IoU. Instances
//! may be evaluated in parallel; rows and the means folded from them are
//! ordered by instance index, so output bytes do not depend on thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mask::BinaryMask;
use crate::metrics::{self, default_band_width};
use crate::refine::{self, RefineConfig};
use crate::synth;
use crate::{Error, Result};

/// Where sweep masks come from.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum CorpusSource {
    Synthetic { seed: u64, count: usize },
    Annotations { path: String },
}

/// Declarative sweep description, usually loaded from JSON.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepSpec {
    pub source: CorpusSource,
    pub resolution: usize,
    /// Global code dimensions, one row each.
    #[serde(default)]
    pub global_dims: Vec<usize>,
    /// Patch `(m, n)` pairs, crossed with the corruption grid.
    #[serde(default)]
    pub patch_configs: Vec<(usize, usize)>,
    #[serde(default = "default_stages")]
    pub stages: usize,
    /// Class-flip probabilities; defaults to the noiseless run.
    #[serde(default = "default_zero_grid")]
    pub flip_probs: Vec<f64>,
    /// Coefficient noise widths; defaults to the noiseless run.
    #[serde(default = "default_zero_grid")]
    pub noise_sigmas: Vec<f64>,
    /// Boundary band width; defaults to the diagonal rule for `resolution`.
    #[serde(default)]
    pub band: Option<u32>,
    /// Base seed for refinement corruption streams.
    #[serde(default)]
    pub seed: u64,
}

fn default_stages() -> usize {
    1
}

fn default_zero_grid() -> Vec<f64> {
    vec![0.0]
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SweepSpec = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.global_dims.is_empty() && self.patch_configs.is_empty() {
            return Err(Error::config(
                "sweep needs at least one global dimension or patch configuration",
            ));
        }
        if self.stages == 0 {
            return Err(Error::config("stages must be at least 1"));
        }
        if self.flip_probs.is_empty() || self.noise_sigmas.is_empty() {
            return Err(Error::config("corruption grids must be non-empty"));
        }
        Ok(())
    }

    pub fn band_width(&self) -> u32 {
        self.band
            .unwrap_or_else(|| default_band_width(self.resolution))
    }
}

/// One sweep configuration's aggregate result.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepRow {
    /// `"global"` or `"patch"`.
    pub config: String,
    pub resolution: usize,
    pub global_dim: Option<usize>,
    pub patch_size: Option<usize>,
    pub patch_dim: Option<usize>,
    pub stages: usize,
    pub flip_prob: f64,
    pub noise_sigma: f64,
    pub band: u32,
    pub seed: u64,
    pub corpus: String,
    pub count: usize,
    pub mean_iou: f64,
    pub mean_boundary_iou: f64,
}

/// Column order of [`rows_to_csv`]; bump the version on any change.
pub const CSV_SCHEMA: &str = "sweep-v1";

const CSV_HEADER: &str = "schema,config,resolution,global_dim,patch_size,patch_dim,stages,flip_prob,noise_sigma,band,seed,corpus,count,mean_iou,mean_boundary_iou";

/// Loads the corpus a spec points at, rasterizing annotations if needed.
pub fn load_corpus(spec: &SweepSpec) -> Result<(String, Vec<BinaryMask>)> {
    match &spec.source {
        CorpusSource::Synthetic { seed, count } => Ok((
            format!("synthetic:{seed}"),
            synth::synth_corpus(*seed, *count, spec.resolution)?,
        )),
        CorpusSource::Annotations { path } => {
            let text = std::fs::read_to_string(path)?;
            let outcome = crate::ingest::parse_annotations(&text)?;
            if outcome.records.is_empty() {
                return Err(Error::Empty("annotation file holds no valid records"));
            }
            let masks = outcome
                .records
                .iter()
                .map(|record| crate::ingest::rasterize(record, spec.resolution))
                .collect::<Result<Vec<_>>>()?;
            Ok((format!("annotations:{path}"), masks))
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Scores one reconstruction per corpus mask and folds the means in index
/// order.
fn score_corpus<F>(corpus: &[BinaryMask], band: u32, reconstruct: F) -> Result<(f64, f64)>
where
    F: Fn(usize, &BinaryMask) -> Result<BinaryMask> + Sync,
{
    let scores: Vec<(f64, f64)> = corpus
        .par_iter()
        .enumerate()
        .map(|(index, truth)| {
            let decoded = reconstruct(index, truth)?;
            Ok((
                metrics::iou(truth, &decoded)?,
                metrics::boundary_iou(truth, &decoded, band)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let ious: Vec<f64> = scores.iter().map(|s| s.0).collect();
    let boundary: Vec<f64> = scores.iter().map(|s| s.1).collect();
    Ok((mean(&ious), mean(&boundary)))
}

/// Runs every configuration of the spec over `corpus`.
///
/// `corpus_label` names the source in the output rows; use [`load_corpus`]
/// to obtain both.
pub fn run_sweep(
    spec: &SweepSpec,
    corpus_label: &str,
    corpus: &[BinaryMask],
) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    if corpus.is_empty() {
        return Err(Error::Empty("sweep corpus is empty"));
    }
    if let Some(mask) = corpus.iter().find(|m| m.size() != spec.resolution) {
        return Err(Error::dimension(format!(
            "corpus mask of size {} does not match sweep resolution {}",
            mask.size(),
            spec.resolution
        )));
    }
    let band = spec.band_width();
    let mut rows = Vec::new();

    for &dim in &spec.global_dims {
        let (mean_iou, mean_boundary_iou) = score_corpus(corpus, band, |_, truth| {
            refine::global_reencode_baseline(truth, dim)
        })?;
        rows.push(SweepRow {
            config: "global".to_string(),
            resolution: spec.resolution,
            global_dim: Some(dim),
            patch_size: None,
            patch_dim: None,
            stages: 1,
            flip_prob: 0.0,
            noise_sigma: 0.0,
            band,
            seed: spec.seed,
            corpus: corpus_label.to_string(),
            count: corpus.len(),
            mean_iou,
            mean_boundary_iou,
        });
    }

    for &(patch_size, patch_dim) in &spec.patch_configs {
        for &flip_prob in &spec.flip_probs {
            for &noise_sigma in &spec.noise_sigmas {
                let (mean_iou, mean_boundary_iou) = score_corpus(corpus, band, |index, truth| {
                    let cfg = RefineConfig {
                        patch_size,
                        vector_dim: patch_dim,
                        stages: spec.stages,
                        flip_prob,
                        noise_sigma,
                        seed: refine::instance_seed(spec.seed, index as u64),
                    };
                    Ok(refine::oracle_refine(truth, truth, &cfg)?.0)
                })?;
                rows.push(SweepRow {
                    config: "patch".to_string(),
                    resolution: spec.resolution,
                    global_dim: None,
                    patch_size: Some(patch_size),
                    patch_dim: Some(patch_dim),
                    stages: spec.stages,
                    flip_prob,
                    noise_sigma,
                    band,
                    seed: spec.seed,
                    corpus: corpus_label.to_string(),
                    count: corpus.len(),
                    mean_iou,
                    mean_boundary_iou,
                });
            }
        }
    }
    Ok(rows)
}

fn optional(value: Option<usize>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Renders rows under the versioned `sweep-v1` schema.
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            CSV_SCHEMA,
            row.config,
            row.resolution,
            optional(row.global_dim),
            optional(row.patch_size),
            optional(row.patch_dim),
            row.stages,
            row.flip_prob,
            row.noise_sigma,
            row.band,
            row.seed,
            row.corpus,
            row.count,
            row.mean_iou,
            row.mean_boundary_iou,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SweepSpec {
        SweepSpec {
            source: CorpusSource::Synthetic { seed: 9, count: 6 },
            resolution: 32,
            global_dims: vec![40],
            patch_configs: vec![(8, 6), (8, 64)],
            stages: 1,
            flip_probs: vec![0.0],
            noise_sigmas: vec![0.0],
            band: None,
            seed: 1,
        }
    }

    #[test]
    fn full_length_patch_code_scores_perfect_iou() {
        let spec = small_spec();
        let (label, corpus) = load_corpus(&spec).unwrap();
        let rows = run_sweep(&spec, &label, &corpus).unwrap();
        let full = rows
            .iter()
            .find(|r| r.patch_dim == Some(64))
            .expect("full-length patch row");
        assert_eq!(full.mean_iou, 1.0);
        assert_eq!(full.mean_boundary_iou, 1.0);
    }

    #[test]
    fn rerun_is_byte_identical_across_thread_counts() {
        let spec = small_spec();
        let (label, corpus) = load_corpus(&spec).unwrap();
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_sweep(&spec, &label, &corpus).unwrap());
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_sweep(&spec, &label, &corpus).unwrap());
        assert_eq!(rows_to_csv(&serial), rows_to_csv(&parallel));
    }

    #[test]
    fn spec_validation_rejects_empty_configurations() {
        let mut spec = small_spec();
        spec.global_dims.clear();
        spec.patch_configs.clear();
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn annotation_corpus_rasterizes_at_the_sweep_resolution() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("annotations.json");
        std::fs::write(
            &path,
            r#"{"annotations": [
                {"id": 1, "category_id": 1, "bbox": [2.0, 3.0, 10.0, 10.0],
                 "segmentation": [[2.0, 3.0, 12.0, 3.0, 12.0, 13.0, 2.0, 13.0]]},
                {"id": 2, "category_id": 1, "bbox": [0.0, 0.0, 6.0, 6.0],
                 "segmentation": [[0.0, 0.0, 6.0, 0.0, 0.0, 6.0]]}
            ]}"#,
        )
        .unwrap();
        let spec = SweepSpec {
            source: CorpusSource::Annotations {
                path: path.to_str().unwrap().to_string(),
            },
            resolution: 16,
            global_dims: vec![256],
            patch_configs: vec![],
            stages: 1,
            flip_probs: vec![0.0],
            noise_sigmas: vec![0.0],
            band: None,
            seed: 0,
        };
        let (label, corpus) = load_corpus(&spec).unwrap();
        assert!(label.starts_with("annotations:"));
        assert_eq!(corpus.len(), 2);
        assert!(corpus.iter().all(|m| m.size() == 16));
        // The box-filling rectangle rasterizes to all ones.
        assert_eq!(corpus[0], BinaryMask::filled(16, true));
        let rows = run_sweep(&spec, &label, &corpus).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].mean_iou, 1.0);

        let missing = SweepSpec {
            source: CorpusSource::Annotations {
                path: dir.path().join("absent.json").to_str().unwrap().to_string(),
            },
            ..spec
        };
        assert!(matches!(load_corpus(&missing), Err(Error::Io(_))));
    }

    #[test]
    fn spec_json_defaults_apply() {
        let spec = SweepSpec::from_json(
            r#"{
                "source": {"synthetic": {"seed": 3, "count": 4}},
                "resolution": 16,
                "patch_configs": [[8, 6]]
            }"#,
        )
        .unwrap();
        assert_eq!(spec.stages, 1);
        assert_eq!(spec.flip_probs, vec![0.0]);
        assert_eq!(spec.noise_sigmas, vec![0.0]);
        assert_eq!(spec.band_width(), 1);
    }

    #[test]
    fn csv_has_the_versioned_header_and_row_per_config() {
        let spec = small_spec();
        let (label, corpus) = load_corpus(&spec).unwrap();
        let rows = run_sweep(&spec, &label, &corpus).unwrap();
        let csv = rows_to_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 1 + 3);
        assert!(lines[1].starts_with("sweep-v1,global,32,40,,,"));
        assert!(lines[2].starts_with("sweep-v1,patch,32,,8,6,"));
    }

    #[test]
    fn resolution_mismatch_is_rejected() {
        let spec = small_spec();
        let corpus = vec![BinaryMask::zeros(16)];
        assert!(matches!(
            run_sweep(&spec, "x", &corpus),
            Err(Error::Dimension(_))
        ));
    }
}
