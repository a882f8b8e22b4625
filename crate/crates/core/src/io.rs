//! JSON file formats. Every file is an envelope
//! `{ "format", "version", "meta", "body" }` where `meta` records the
//! configuration and seed that produced it. Floats round-trip bit-exactly.

use std::fs;
use std::path::Path;

use num_complex::Complex;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::oqe::{Evolution, OqeModel, SeState};
use crate::process_tensor::PurifiedProcessTensor;
use crate::reconstruction::{FitMode, IterationRecord, ReconstructedOqe, StopReason};
use crate::tomography::TomographyTranscript;
use crate::{real, CMat, CVec, OqeError, Real, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const MODEL_FORMAT: &str = "oqe-model";
pub const PPT_FORMAT: &str = "oqe-ppt";
pub const TRANSCRIPT_FORMAT: &str = "oqe-tomography-transcript";
pub const FIT_FORMAT: &str = "oqe-fit-report";

/// Provenance of a file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub command: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document<B> {
    pub format: String,
    pub version: u32,
    pub meta: Meta,
    pub body: B,
}

impl<B> Document<B> {
    pub fn new(format: &str, meta: Meta, body: B) -> Self {
        Document { format: format.to_string(), version: FORMAT_VERSION, meta, body }
    }
}

/// Row-major complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixDoc {
    pub fn from_matrix<T: Real>(m: &CMat<T>) -> Self {
        let (rows, cols) = m.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                re.push(to_f64(m[(r, c)].re));
                im.push(to_f64(m[(r, c)].im));
            }
        }
        MatrixDoc { rows, cols, re, im }
    }

    pub fn to_matrix<T: Real>(&self) -> Result<CMat<T>> {
        let n = self.rows * self.cols;
        if self.re.len() != n || self.im.len() != n {
            return Err(OqeError::Format(format!(
                "{}x{} matrix needs {n} entries, got {} real and {} imaginary",
                self.rows,
                self.cols,
                self.re.len(),
                self.im.len()
            )));
        }
        Ok(CMat::from_fn(self.rows, self.cols, |r, c| {
            let i = r * self.cols + c;
            Complex::new(real(self.re[i]), real(self.im[i]))
        }))
    }

    pub fn from_vector<T: Real>(v: &CVec<T>) -> Self {
        Self::from_matrix(&CMat::from_column_slice(v.len(), 1, v.as_slice()))
    }

    pub fn to_vector<T: Real>(&self) -> Result<CVec<T>> {
        if self.cols != 1 {
            return Err(OqeError::Format(format!("expected a column vector, got {}x{}", self.rows, self.cols)));
        }
        Ok(self.to_matrix::<T>()?.column(0).into_owned())
    }
}

fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialStateDoc {
    Pure { state: MatrixDoc },
    Mixed { density: MatrixDoc },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EvolutionDoc {
    TimeIndependent { unitary: MatrixDoc },
    TimeDependent { unitaries: Vec<MatrixDoc> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDoc {
    pub sys_dim: usize,
    pub env_dim: usize,
    pub seed: Option<u64>,
    pub initial: InitialStateDoc,
    pub evolution: EvolutionDoc,
}

impl ModelDoc {
    pub fn from_model<T: Real>(m: &OqeModel<T>) -> Self {
        ModelDoc {
            sys_dim: m.sys_dim,
            env_dim: m.env_dim,
            seed: m.seed,
            initial: match &m.initial {
                SeState::Pure(v) => InitialStateDoc::Pure { state: MatrixDoc::from_vector(v) },
                SeState::Mixed(r) => InitialStateDoc::Mixed { density: MatrixDoc::from_matrix(r) },
            },
            evolution: match &m.evolution {
                Evolution::TimeIndependent(u) => EvolutionDoc::TimeIndependent { unitary: MatrixDoc::from_matrix(u) },
                Evolution::TimeDependent(us) => {
                    EvolutionDoc::TimeDependent { unitaries: us.iter().map(MatrixDoc::from_matrix).collect() }
                }
            },
        }
    }

    /// Rebuilds and validates the model.
    pub fn to_model<T: Real>(&self) -> Result<OqeModel<T>> {
        let initial = match &self.initial {
            InitialStateDoc::Pure { state } => SeState::Pure(state.to_vector()?),
            InitialStateDoc::Mixed { density } => SeState::Mixed(density.to_matrix()?),
        };
        let evolution = match &self.evolution {
            EvolutionDoc::TimeIndependent { unitary } => Evolution::TimeIndependent(unitary.to_matrix()?),
            EvolutionDoc::TimeDependent { unitaries } => {
                Evolution::TimeDependent(unitaries.iter().map(|u| u.to_matrix()).collect::<Result<_>>()?)
            }
        };
        let m = OqeModel { sys_dim: self.sys_dim, env_dim: self.env_dim, seed: self.seed, initial, evolution };
        m.validate()?;
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PptDoc {
    pub d: usize,
    pub bond_dims: Vec<usize>,
    pub site0: MatrixDoc,
    pub sites: Vec<MatrixDoc>,
}

impl PptDoc {
    pub fn from_ppt<T: Real>(p: &PurifiedProcessTensor<T>) -> Self {
        PptDoc {
            d: p.d,
            bond_dims: p.bond_dims(),
            site0: MatrixDoc::from_matrix(&p.site0),
            sites: p.sites.iter().map(MatrixDoc::from_matrix).collect(),
        }
    }

    pub fn to_ppt<T: Real>(&self) -> Result<PurifiedProcessTensor<T>> {
        let p = PurifiedProcessTensor::new(
            self.d,
            self.site0.to_matrix()?,
            self.sites.iter().map(|s| s.to_matrix()).collect::<Result<_>>()?,
        )?;
        if p.bond_dims() != self.bond_dims {
            return Err(OqeError::Format(format!(
                "declared bond dimensions {:?} do not match the sites {:?}",
                self.bond_dims,
                p.bond_dims()
            )));
        }
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptDoc {
    pub transcript: TomographyTranscript,
    /// Fidelity against the true process, when the truth is known.
    pub process_fidelity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReportDoc {
    pub mode: FitMode,
    pub loss: f64,
    pub stop: Option<StopReason>,
    pub start: Option<u64>,
    pub restarts: Vec<u64>,
    pub model: ModelDoc,
    pub gauge: Option<MatrixDoc>,
    pub iterations: Vec<IterationRecord>,
    /// Wall-clock seconds; only recorded on request since it breaks
    /// reproducibility of the file.
    pub seconds: Option<f64>,
}

impl FitReportDoc {
    pub fn from_fit<T: Real>(rec: &ReconstructedOqe<T>, mode: FitMode, restarts: Vec<u64>) -> Self {
        FitReportDoc {
            mode,
            loss: to_f64(rec.loss),
            stop: rec.stop,
            start: rec.start,
            restarts,
            model: ModelDoc::from_model(&rec.model),
            gauge: rec.gauge.as_ref().map(MatrixDoc::from_matrix),
            iterations: rec.log.clone(),
            seconds: None,
        }
    }
}

pub fn to_json<B: Serialize>(doc: &Document<B>) -> Result<String> {
    serde_json::to_string_pretty(doc).map_err(|e| OqeError::Format(e.to_string()))
}

/// Parses a document and checks its format tag and version.
pub fn from_json<B: DeserializeOwned>(text: &str, format: &str) -> Result<Document<B>> {
    let doc: Document<B> = serde_json::from_str(text).map_err(|e| OqeError::Format(e.to_string()))?;
    if doc.format != format {
        return Err(OqeError::Format(format!("expected a '{format}' file, found '{}'", doc.format)));
    }
    if doc.version != FORMAT_VERSION {
        return Err(OqeError::Format(format!("unsupported version {} of '{format}'", doc.version)));
    }
    Ok(doc)
}

pub fn write_document<B: Serialize>(path: &Path, doc: &Document<B>) -> Result<()> {
    let mut text = to_json(doc)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_error(path, e))
}

pub fn read_document<B: DeserializeOwned>(path: &Path, format: &str) -> Result<Document<B>> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    from_json(&text, format).map_err(|e| match e {
        OqeError::Format(msg) => OqeError::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn io_error(path: &Path, e: std::io::Error) -> OqeError {
    OqeError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn read_model<T: Real>(path: &Path) -> Result<(OqeModel<T>, Meta)> {
    let doc: Document<ModelDoc> = read_document(path, MODEL_FORMAT)?;
    Ok((doc.body.to_model()?, doc.meta))
}

pub fn write_model<T: Real>(path: &Path, model: &OqeModel<T>, meta: Meta) -> Result<()> {
    write_document(path, &Document::new(MODEL_FORMAT, meta, ModelDoc::from_model(model)))
}

pub fn read_ppt<T: Real>(path: &Path) -> Result<(PurifiedProcessTensor<T>, Meta)> {
    let doc: Document<PptDoc> = read_document(path, PPT_FORMAT)?;
    Ok((doc.body.to_ppt()?, doc.meta))
}

pub fn write_ppt<T: Real>(path: &Path, ppt: &PurifiedProcessTensor<T>, meta: Meta) -> Result<()> {
    write_document(path, &Document::new(PPT_FORMAT, meta, PptDoc::from_ppt(ppt)))
}
