//! One-pass and dynamic-pass classification.
//!
//! One pass: extract features with only the labeled data as supervision,
//! build the kNN graph, diffuse, harden. Dynamic pass repeats that for `J`
//! epochs; after each epoch the diffusion scores become certainty-weighted
//! pseudo-labels that the extractor trains on, scaled by the ramp `alpha(t)`.

pub mod config;
pub mod extractor;
pub mod synthetic;

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use config::{
    DataSource, ExtractorConfig, Method, MockConfig, Mode, OutputPaths, PipelineConfig, Projection, RampConfig,
    DEFAULT_ALPHA_GRID,
};
pub use extractor::{
    invoke_extractor, mock_extract, ExternalExtractor, Extractor, ExtractorRequest, Manifest, MockExtractor,
};

use crate::certainty::{extract_pseudo_labels, harden_labels, PseudoLabelSet};
use crate::data::{EmbeddingMatrix, LabelSet};
use crate::diffusion::l1::diffuse_l1;
use crate::diffusion::l2::{diffuse_iterative, select_alpha, DiffusionConfig};
use crate::diffusion::{seed_matrix, ScoreMatrix};
use crate::error::{Error, Result};
use crate::graph::{build_knn_graph, BuildReport};
use crate::io::{self, PredictionTable};
use crate::metrics::{self, MetricReport};

/// Linear ramp `min(t / t_ramp, 1) * alpha_max`.
pub fn ramp_weight(t: usize, t_ramp: usize, alpha_max: f64) -> f64 {
    (t as f64 / t_ramp.max(1) as f64).min(1.0) * alpha_max
}

/// Derive an independent seed for a stage of a run.
pub fn stage_seed(master: u64, tag: &str, epoch: u64) -> u64 {
    // FNV-1a over the tag, then a splitmix64 finalizer over the mix
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = master ^ h.rotate_left(17) ^ epoch.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum DiffusionSummary {
    P2 {
        alpha: f64,
        iterations: usize,
        residual: f64,
        alpha_table: Option<Vec<(f64, f64)>>,
    },
    P1 {
        /// Final ratio energy per class.
        ratios: Vec<f64>,
        outer_iterations: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub ramp_weight: f64,
    pub embedding_dim: usize,
    pub graph: BuildReport,
    pub diffusion: DiffusionSummary,
    /// Class histogram of the pseudo-labels extracted from this epoch's scores.
    pub pseudo_histogram: Vec<usize>,
    pub mean_certainty: Option<f64>,
    /// Accuracy against ground truth, when the data source has it.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub mode: Mode,
    pub epochs: Vec<EpochRecord>,
    pub warnings: Vec<String>,
    pub extractor_diagnostics: Vec<String>,
    pub metrics: Option<MetricReport>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub predictions: PredictionTable,
    pub report: PipelineReport,
    /// Pseudo-labels extracted after each completed epoch.
    pub pseudo_labels: Vec<PseudoLabelSet>,
    /// Embeddings the final predictions were computed from.
    pub embeddings: EmbeddingMatrix,
}

/// Raw features, revealed labels and, for synthetic sources, ground truth.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub raw: EmbeddingMatrix,
    pub labels: LabelSet,
    pub truth: Option<Vec<usize>>,
    pub data_ref: String,
}

pub fn load_data(source: &DataSource, seed: u64) -> Result<LoadedData> {
    match source {
        DataSource::TwoMoons {
            n,
            noise,
            labels_per_class,
        } => {
            let d = synthetic::two_moons(*n, *noise, stage_seed(seed, "data", 0))?;
            let labels = synthetic::sample_labels(&d.truth, d.classes, *labels_per_class, stage_seed(seed, "labels", 0))?;
            Ok(LoadedData {
                raw: d.embeddings,
                labels,
                truth: Some(d.truth),
                data_ref: format!("two-moons:n={n},noise={noise},seed={seed}"),
            })
        }
        DataSource::Blobs {
            n,
            classes,
            dim,
            spread,
            labels_per_class,
        } => {
            let d = synthetic::blobs(*n, *classes, *dim, *spread, stage_seed(seed, "data", 0))?;
            let labels = synthetic::sample_labels(&d.truth, d.classes, *labels_per_class, stage_seed(seed, "labels", 0))?;
            Ok(LoadedData {
                raw: d.embeddings,
                labels,
                truth: Some(d.truth),
                data_ref: format!("blobs:n={n},classes={classes},dim={dim},spread={spread},seed={seed}"),
            })
        }
        DataSource::Files {
            embeddings,
            labels,
            truth,
        } => {
            let raw = io::read_embeddings(embeddings)?;
            let labels = io::read_labels(labels, raw.rows())?;
            let truth = match truth {
                Some(path) => {
                    let t = io::read_labels(path, raw.rows())?;
                    if t.len() != raw.rows() {
                        return Err(Error::Config(format!(
                            "truth file covers {} of {} nodes",
                            t.len(),
                            raw.rows()
                        )));
                    }
                    Some(t.labeled().iter().map(|l| l.1).collect())
                }
                None => None,
            };
            Ok(LoadedData {
                raw,
                labels,
                truth,
                data_ref: embeddings.display().to_string(),
            })
        }
    }
}

struct EpochOutcome {
    scores: ScoreMatrix,
    embeddings: EmbeddingMatrix,
    record: EpochRecord,
    pseudo: PseudoLabelSet,
}

struct Session {
    cfg: PipelineConfig,
    data: LoadedData,
    extractor: Box<dyn Extractor>,
    output_dir: Option<PathBuf>,
    diagnostics: Vec<String>,
}

impl Session {
    fn new(cfg: &PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let data = load_data(&cfg.data, cfg.seed).map_err(|e| e.in_stage("load"))?;
        let n = data.raw.rows();
        if cfg.graph.k >= n {
            return Err(Error::InvalidK { k: cfg.graph.k, n }.in_stage("config"));
        }
        if let ExtractorConfig::Mock(MockConfig {
            projection: Projection::Random { dim },
            ..
        }) = cfg.extractor
        {
            if dim > data.raw.dim() {
                return Err(Error::InvalidParameter(format!(
                    "mock projection dim {dim} exceeds feature dim {}",
                    data.raw.dim()
                ))
                .in_stage("config"));
            }
        }
        if cfg.method == Method::P1 {
            if let Some(c) = data.labels.class_counts().iter().position(|&c| c == 0) {
                return Err(Error::MissingClass(c).in_stage("config"));
            }
        }
        let (extractor, output_dir): (Box<dyn Extractor>, Option<PathBuf>) = match &cfg.extractor {
            ExtractorConfig::Mock(m) => (Box::new(MockExtractor::new(data.raw.clone(), *m)), None),
            ExtractorConfig::External {
                command,
                timeout_secs,
                work_dir,
                ..
            } => {
                let ext = ExternalExtractor::new(
                    command.clone(),
                    timeout_secs.map(Duration::from_secs_f64),
                    work_dir.clone(),
                )
                .map_err(|e| e.in_stage("extract"))?;
                let dir = ext.work_dir().to_path_buf();
                (Box::new(ext), Some(dir))
            }
        };
        let mut data = data;
        if let ExtractorConfig::External {
            data_ref: Some(r), ..
        } = &cfg.extractor
        {
            data.data_ref = r.clone();
        }
        Ok(Self {
            cfg: cfg.clone(),
            data,
            extractor,
            output_dir,
            diagnostics: Vec::new(),
        })
    }

    fn run_epoch(&mut self, epoch: usize, pseudo: Option<PseudoLabelSet>) -> Result<EpochOutcome> {
        let cfg = &self.cfg;
        let n = self.data.raw.rows();
        let ramp = if epoch == 0 {
            0.0
        } else {
            ramp_weight(epoch, cfg.ramp.t_ramp, cfg.ramp.alpha_max)
        };
        let output_path = match &self.output_dir {
            Some(dir) => dir.join(format!("embeddings-epoch{epoch}.gnze")),
            None => PathBuf::new(),
        };
        let req = ExtractorRequest {
            data_ref: self.data.data_ref.clone(),
            n,
            labeled: self.data.labels.labeled().to_vec(),
            pseudo,
            ramp_weight: ramp,
            epoch,
            seed: stage_seed(cfg.seed, "extractor", 0),
            output_path,
        };
        let extracted = invoke_extractor(self.extractor.as_mut(), &req);
        if let Some(d) = self.extractor.diagnostics() {
            if !d.trim().is_empty() {
                self.diagnostics.push(format!("epoch {epoch}: {}", d.trim()));
            }
        }
        let embeddings = extracted.map_err(|e| e.in_stage("extract"))?;

        let (graph, graph_report) = build_knn_graph(&embeddings, &cfg.graph).map_err(|e| e.in_stage("graph"))?;

        let labels = &self.data.labels;
        let (scores, diffusion) = match cfg.method {
            Method::P2 => {
                let run = || -> Result<_> {
                    let s = graph.normalized_operator()?;
                    let (alpha, alpha_table) = match &cfg.alpha_grid {
                        Some(grid) => {
                            let sel = select_alpha(
                                &s,
                                labels,
                                grid,
                                cfg.holdout_fraction,
                                stage_seed(cfg.seed, "alpha", epoch as u64),
                                &cfg.p2,
                            )?;
                            (sel.alpha, Some(sel.table))
                        }
                        None => (cfg.p2.alpha, None),
                    };
                    let (h, rep) = diffuse_iterative(&s, &seed_matrix(labels), &DiffusionConfig { alpha, ..cfg.p2 })?;
                    Ok((
                        h,
                        DiffusionSummary::P2 {
                            alpha,
                            iterations: rep.iterations,
                            residual: rep.residual,
                            alpha_table,
                        },
                    ))
                };
                run().map_err(|e| e.in_stage("diffuse"))?
            }
            Method::P1 => {
                let (h, rep) = diffuse_l1(&graph, labels, &cfg.p1).map_err(|e| e.in_stage("diffuse"))?;
                let summary = DiffusionSummary::P1 {
                    ratios: rep.classes.iter().map(|c| c.ratio()).collect(),
                    outer_iterations: rep.classes.iter().map(|c| c.inner_iterations.len()).collect(),
                };
                (h, summary)
            }
        };

        let pseudo = extract_pseudo_labels(&scores, labels, cfg.balance).map_err(|e| e.in_stage("pseudo-label"))?;
        let accuracy = match &self.data.truth {
            Some(t) => Some(metrics::accuracy(&harden_labels(&scores), t)?),
            None => None,
        };
        let record = EpochRecord {
            epoch,
            ramp_weight: ramp,
            embedding_dim: embeddings.dim(),
            graph: graph_report,
            diffusion,
            pseudo_histogram: pseudo.histogram(),
            mean_certainty: pseudo.mean_weight(),
            accuracy,
        };
        Ok(EpochOutcome {
            scores,
            embeddings,
            record,
            pseudo,
        })
    }

    fn run(mut self, epochs: usize) -> Result<PipelineOutput> {
        let mut done: Vec<EpochOutcome> = Vec::with_capacity(epochs);
        let mut warnings = Vec::new();
        for epoch in 0..epochs {
            let pseudo = done.last().map(|o| o.pseudo.clone());
            match self.run_epoch(epoch, pseudo) {
                Ok(o) => done.push(o),
                Err(e) if epoch > 0 && matches!(&e, Error::Stage { stage: "extract", .. }) => {
                    warnings.push(format!(
                        "degraded: extractor failed at epoch {epoch} ({e}); returning epoch {} result",
                        epoch - 1
                    ));
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let pseudo_labels: Vec<PseudoLabelSet> = done.iter().map(|o| o.pseudo.clone()).collect();
        let records: Vec<EpochRecord> = done.iter().map(|o| o.record.clone()).collect();
        let last = done.pop().expect("at least one epoch completed");
        let predictions = PredictionTable::from_scores(last.scores);
        let metrics = match &self.data.truth {
            Some(t) => Some(metrics::evaluate(&predictions.labels, &predictions.scores, t)?),
            None => None,
        };
        let report = PipelineReport {
            mode: if epochs > 1 || self.cfg.mode == Mode::Dynamic {
                self.cfg.mode
            } else {
                Mode::OnePass
            },
            epochs: records,
            warnings,
            extractor_diagnostics: std::mem::take(&mut self.diagnostics),
            metrics,
        };
        Ok(PipelineOutput {
            predictions,
            report,
            pseudo_labels,
            embeddings: last.embeddings,
        })
    }
}

/// Extract once, build the graph once, diffuse once.
pub fn one_pass(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    Session::new(cfg)?.run(1)
}

/// `cfg.epochs` rounds of extract, graph, diffuse, pseudo-label.
pub fn dynamic_pass(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    if cfg.mode != Mode::Dynamic {
        return Err(Error::Config("dynamic_pass requires mode = dynamic".into()));
    }
    Session::new(cfg)?.run(cfg.epochs)
}

/// Dispatch on `cfg.mode`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    match cfg.mode {
        Mode::OnePass => one_pass(cfg),
        Mode::Dynamic => dynamic_pass(cfg),
    }
}
