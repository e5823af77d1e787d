//! Feature extractor protocol.
//!
//! An extractor turns the raw data plus the current supervision (labels,
//! optionally weighted pseudo-labels and a ramp weight) into embeddings.
//! External extractors are separate programs: the core writes a JSON
//! manifest, runs the command with the manifest path as its only extra
//! argument, and reads the GNZE file it leaves at `output_path`.
//!
//! ```text
//! {"data_ref": "...", "labeled": [[id, label], ...], "pseudo": "path/to/pseudo.csv" | null,
//!  "ramp_weight": 0.5, "epoch": 2, "seed": 123, "output_path": "path/to/out.gnze"}
//! ```

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::{MockConfig, Projection};
use crate::certainty::PseudoLabelSet;
use crate::data::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::io::{self, tables};

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractorRequest {
    pub data_ref: String,
    /// Expected row count of the returned embeddings.
    pub n: usize,
    pub labeled: Vec<(usize, usize)>,
    pub pseudo: Option<PseudoLabelSet>,
    pub ramp_weight: f64,
    pub epoch: usize,
    pub seed: u64,
    pub output_path: PathBuf,
}

/// The JSON manifest handed to external extractors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub data_ref: String,
    pub labeled: Vec<[usize; 2]>,
    pub pseudo: Option<PathBuf>,
    pub ramp_weight: f64,
    pub epoch: usize,
    pub seed: u64,
    pub output_path: PathBuf,
}

impl ExtractorRequest {
    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.pseudo {
            let labeled: std::collections::HashSet<usize> = self.labeled.iter().map(|l| l.0).collect();
            if let Some(e) = p.entries.iter().find(|e| labeled.contains(&e.id)) {
                return Err(Error::Extractor(format!("pseudo-label on labeled node {}", e.id)));
            }
        }
        Ok(())
    }

    pub fn manifest(&self, pseudo_path: Option<PathBuf>) -> Manifest {
        Manifest {
            data_ref: self.data_ref.clone(),
            labeled: self.labeled.iter().map(|&(i, c)| [i, c]).collect(),
            pseudo: pseudo_path,
            ramp_weight: self.ramp_weight,
            epoch: self.epoch,
            seed: self.seed,
            output_path: self.output_path.clone(),
        }
    }
}

pub trait Extractor {
    fn extract(&mut self, req: &ExtractorRequest) -> Result<EmbeddingMatrix>;

    /// Captured diagnostics of the last invocation.
    fn diagnostics(&self) -> Option<String> {
        None
    }
}

/// Run an extractor and check the result covers every node.
pub fn invoke_extractor(extractor: &mut dyn Extractor, req: &ExtractorRequest) -> Result<EmbeddingMatrix> {
    req.validate()?;
    let m = extractor.extract(req)?;
    if m.rows() != req.n {
        return Err(Error::RowCountMismatch {
            expected: req.n,
            found: m.rows(),
        });
    }
    Ok(m)
}

/// Seeded Gaussian projection to `dim` columns, entries `N(0, 1/dim)`.
pub fn random_projection(data: &EmbeddingMatrix, dim: usize, seed: u64) -> Result<EmbeddingMatrix> {
    if dim == 0 || dim > data.dim() {
        return Err(Error::InvalidParameter(format!(
            "projection dimension {dim} must lie in 1..={}",
            data.dim()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0 / (dim as f64).sqrt()).expect("positive sd");
    let basis: Vec<f64> = (0..data.dim() * dim).map(|_| normal.sample(&mut rng)).collect();
    let mut out = Vec::with_capacity(data.rows() * dim);
    for i in 0..data.rows() {
        let row = data.row(i);
        for c in 0..dim {
            let v: f64 = row.iter().enumerate().map(|(p, &x)| x as f64 * basis[p * dim + c]).sum();
            out.push(v as f32);
        }
    }
    EmbeddingMatrix::new(data.rows(), dim, out)
}

/// Pull every supervised row toward its class centroid by
/// `xi_i * ramp_weight * eta`. Labeled rows use `xi = 1`; centroids are
/// `xi`-weighted means over labeled and pseudo-labeled members, so a
/// zero-weight pseudo-label has no effect at all.
pub fn sharpen(base: &EmbeddingMatrix, req: &ExtractorRequest, eta: f64) -> Result<EmbeddingMatrix> {
    let step_scale = req.ramp_weight * eta;
    if step_scale == 0.0 {
        return Ok(base.clone());
    }
    let members: Vec<(usize, usize, f64)> = req
        .labeled
        .iter()
        .map(|&(id, c)| (id, c, 1.0))
        .chain(req.pseudo.iter().flat_map(|p| p.entries.iter().map(|e| (e.id, e.label, e.weight))))
        .collect();
    let classes = members.iter().map(|m| m.1 + 1).max().unwrap_or(0);
    let dim = base.dim();
    let mut centroid = vec![vec![0.0f64; dim]; classes];
    let mut mass = vec![0.0f64; classes];
    for &(id, c, xi) in &members {
        if id >= base.rows() {
            return Err(Error::InvalidParameter(format!("supervised id {id} out of range")));
        }
        for (acc, &v) in centroid[c].iter_mut().zip(base.row(id)) {
            *acc += xi * v as f64;
        }
        mass[c] += xi;
    }
    for (cen, &m) in centroid.iter_mut().zip(&mass) {
        if m > 0.0 {
            cen.iter_mut().for_each(|v| *v /= m);
        }
    }
    let mut data = base.data().to_vec();
    for &(id, c, xi) in &members {
        let step = xi * step_scale;
        if step == 0.0 {
            continue;
        }
        for (v, &ct) in data[id * dim..(id + 1) * dim].iter_mut().zip(&centroid[c]) {
            *v = (*v as f64 + step * (ct - *v as f64)) as f32;
        }
    }
    EmbeddingMatrix::new(base.rows(), dim, data)
}

fn project(data: &EmbeddingMatrix, cfg: &MockConfig, seed: u64) -> Result<EmbeddingMatrix> {
    match cfg.projection {
        Projection::Identity => Ok(data.clone()),
        Projection::Random { dim } => random_projection(data, dim, seed),
    }
}

/// Stateless mock: seeded projection of the raw data followed by one
/// sharpening step.
pub fn mock_extract(data: &EmbeddingMatrix, req: &ExtractorRequest, cfg: &MockConfig) -> Result<EmbeddingMatrix> {
    sharpen(&project(data, cfg, req.seed)?, req, cfg.eta)
}

/// Fine-tunes incrementally: each call sharpens the previous call's output.
#[derive(Debug, Clone)]
pub struct MockExtractor {
    raw: EmbeddingMatrix,
    cfg: MockConfig,
    state: Option<EmbeddingMatrix>,
}

impl MockExtractor {
    pub fn new(raw: EmbeddingMatrix, cfg: MockConfig) -> Self {
        Self { raw, cfg, state: None }
    }
}

impl Extractor for MockExtractor {
    fn extract(&mut self, req: &ExtractorRequest) -> Result<EmbeddingMatrix> {
        let base = match self.state.take() {
            Some(prev) => prev,
            None => project(&self.raw, &self.cfg, req.seed)?,
        };
        let out = sharpen(&base, req, self.cfg.eta)?;
        self.state = Some(out.clone());
        Ok(out)
    }
}

/// Runs a command per request, one at a time.
#[derive(Debug)]
pub struct ExternalExtractor {
    command: Vec<String>,
    timeout: Option<Duration>,
    work_dir: PathBuf,
    _scratch: Option<tempfile::TempDir>,
    last_diagnostics: Option<String>,
}

impl ExternalExtractor {
    pub fn new(command: Vec<String>, timeout: Option<Duration>, work_dir: Option<PathBuf>) -> Result<Self> {
        if command.is_empty() {
            return Err(Error::Config("external extractor command is empty".into()));
        }
        let (work_dir, scratch) = match work_dir {
            Some(dir) => {
                std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                (dir, None)
            }
            None => {
                let tmp = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
                (tmp.path().to_path_buf(), Some(tmp))
            }
        };
        Ok(Self {
            command,
            timeout,
            work_dir,
            _scratch: scratch,
            last_diagnostics: None,
        })
    }

    pub fn work_dir(&self) -> &Path {
        &self.work_dir
    }

    /// Default output location for an epoch inside the work directory.
    pub fn output_path(&self, epoch: usize) -> PathBuf {
        self.work_dir.join(format!("embeddings-epoch{epoch}.gnze"))
    }
}

fn drain(mut pipe: impl Read + Send + 'static) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = pipe.read_to_end(&mut buf);
        String::from_utf8_lossy(&buf).into_owned()
    })
}

impl Extractor for ExternalExtractor {
    fn extract(&mut self, req: &ExtractorRequest) -> Result<EmbeddingMatrix> {
        let pseudo_path = match &req.pseudo {
            Some(p) => {
                let path = self.work_dir.join(format!("pseudo-epoch{}.csv", req.epoch));
                tables::write_pseudo_labels(p, &path)?;
                Some(path)
            }
            None => None,
        };
        let manifest_path = self.work_dir.join(format!("manifest-epoch{}.json", req.epoch));
        let manifest = serde_json::to_vec_pretty(&req.manifest(pseudo_path)).expect("manifest serializes");
        io::write_atomic(&manifest_path, &manifest)?;
        // a stale output from an earlier run must not pass for this one
        let _ = std::fs::remove_file(&req.output_path);

        let mut child = Command::new(&self.command[0])
            .args(&self.command[1..])
            .arg(&manifest_path)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Extractor(format!("cannot launch {:?}: {e}", self.command[0])))?;
        let stdout = drain(child.stdout.take().expect("piped stdout"));
        let stderr = drain(child.stderr.take().expect("piped stderr"));
        let started = Instant::now();
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break Some(status),
                Ok(None) => {}
                Err(e) => return Err(Error::Extractor(format!("waiting on extractor: {e}"))),
            }
            if self.timeout.is_some_and(|t| started.elapsed() > t) {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            thread::sleep(Duration::from_millis(5));
        };
        let Some(status) = status else {
            // grandchildren may still hold the pipes open; leave the readers behind
            self.last_diagnostics = None;
            return Err(Error::Extractor(format!(
                "timed out after {:?}",
                self.timeout.unwrap_or_default()
            )));
        };
        let _ = stdout.join();
        let diagnostics = stderr.join().unwrap_or_default();
        self.last_diagnostics = Some(diagnostics.clone());
        let tail = diagnostics.trim();
        match status {
            s if !s.success() => Err(Error::Extractor(match s.code() {
                Some(code) => format!("exit code {code}; stderr: {tail}"),
                None => format!("terminated by signal; stderr: {tail}"),
            })),
            _ => io::read_embeddings(&req.output_path),
        }
    }

    fn diagnostics(&self) -> Option<String> {
        self.last_diagnostics.clone()
    }
}
