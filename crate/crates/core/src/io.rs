//! Versioned JSON file formats for states, measurements and trained models.
//!
//! Output is canonical: struct fields in declaration order, map keys sorted,
//! and every float written with 17 significant digits, so loading and
//! re-saving a file reproduces it byte for byte.

use crate::eval::FidelityReport;
use crate::ffnn::{Activation, FfnnModel, Layer};
use crate::pca::PcaTransform;
use crate::pipeline::{BdrbmModel, FineTuneRound, TomographyConfig};
use crate::quantum::{format_bitstring, parse_bitstring, LocalBasis, MeasurementRecord, PureState, TfimParams};
use crate::scalar::Scalar;
use crate::{Error, Result};
use ndarray::{Array1, Array2};
use num_complex::Complex;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

struct CanonicalFormatter(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        if value == 0.0 {
            // Keep the sign of negative zero.
            return writer.write_all(if value.is_sign_negative() { b"-0.0" } else { b"0.0" });
        }
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Canonical JSON text for `value`, newline-terminated.
pub fn to_canonical_string<S: Serialize>(value: &S) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, CanonicalFormatter(serde_json::ser::PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json<S: Serialize>(path: impl AsRef<Path>, value: &S) -> Result<()> {
    std::fs::write(path, to_canonical_string(value)?)?;
    Ok(())
}

/// Parses JSON, reporting malformed or mismatched content as a schema error.
pub fn from_json_str<D: DeserializeOwned>(text: &str) -> Result<D> {
    serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
}

pub fn read_json<D: DeserializeOwned>(path: impl AsRef<Path>) -> Result<D> {
    from_json_str(&std::fs::read_to_string(path)?)
}

fn check_version(found: u32) -> Result<()> {
    if found != SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "unsupported schema version {found} (expected {SCHEMA_VERSION})"
        )));
    }
    Ok(())
}

fn to_f64s<T: Scalar>(xs: impl IntoIterator<Item = T>) -> Vec<f64> {
    xs.into_iter().map(|x| x.to_f64_lossy()).collect()
}

fn from_f64s<T: Scalar>(xs: &[f64]) -> Vec<T> {
    xs.iter().map(|&x| T::lit(x)).collect()
}

fn matrix_rows<T: Scalar>(m: &Array2<T>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| to_f64s(r.iter().copied())).collect()
}

fn matrix_from_rows<T: Scalar>(rows: &[Vec<f64>], n_cols: usize, what: &str) -> Result<Array2<T>> {
    if rows.iter().any(|r| r.len() != n_cols) {
        return Err(Error::Schema(format!("{what}: ragged or mis-sized rows")));
    }
    let flat: Vec<T> = rows.iter().flat_map(|r| from_f64s::<T>(r)).collect();
    Array2::from_shape_vec((rows.len(), n_cols), flat).map_err(|e| Error::Schema(format!("{what}: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Simulated,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: Source,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Free-text description of the measured state.
    #[serde(default)]
    pub state: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordEntry {
    pub basis: Vec<[f64; 3]>,
    pub shots: u64,
    /// Bitstring (qubit 0 first) to count.
    pub counts: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementFile {
    pub schema_version: u32,
    pub n_qubits: usize,
    pub provenance: Provenance,
    pub records: Vec<RecordEntry>,
}

impl MeasurementFile {
    pub fn from_records<T: Scalar>(records: &[MeasurementRecord<T>], provenance: Provenance) -> Result<Self> {
        let n_qubits = records.first().map(|r| r.n_qubits()).ok_or_else(|| Error::validation("no records"))?;
        let records = records
            .iter()
            .map(|r| RecordEntry {
                basis: r.basis().axes().iter().map(|a| [a[0].to_f64_lossy(), a[1].to_f64_lossy(), a[2].to_f64_lossy()]).collect(),
                shots: r.shots(),
                counts: r.counts().iter().map(|(&i, &c)| (format_bitstring(i, n_qubits), c)).collect(),
            })
            .collect();
        Ok(Self { schema_version: SCHEMA_VERSION, n_qubits, provenance, records })
    }

    /// Validated records; any inconsistency is reported as a schema error.
    pub fn to_records<T: Scalar>(&self) -> Result<Vec<MeasurementRecord<T>>> {
        check_version(self.schema_version)?;
        if self.records.is_empty() {
            return Err(Error::Schema("measurement file has no records".into()));
        }
        let n = self.n_qubits;
        self.records
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let wrap = |err: Error| Error::Schema(format!("record {k}: {err}"));
                if e.basis.len() != n {
                    return Err(Error::Schema(format!("record {k}: basis has {} axes, expected {n}", e.basis.len())));
                }
                let axes: Vec<[T; 3]> = e.basis.iter().map(|a| [T::lit(a[0]), T::lit(a[1]), T::lit(a[2])]).collect();
                let basis = LocalBasis::new(axes).map_err(wrap)?;
                let mut counts = BTreeMap::new();
                for (key, &c) in &e.counts {
                    counts.insert(parse_bitstring(key, n).map_err(wrap)?, c);
                }
                MeasurementRecord::new(basis, counts, e.shots).map_err(wrap)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub schema_version: u32,
    pub n_qubits: usize,
    #[serde(default)]
    pub tfim: Option<TfimParams>,
    #[serde(default)]
    pub energy: Option<f64>,
    /// `[re, im]` per computational-basis index.
    pub amplitudes: Vec<[f64; 2]>,
}

impl StateFile {
    pub fn from_state<T: Scalar>(state: &PureState<T>, tfim: Option<TfimParams>, energy: Option<f64>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            n_qubits: state.n_qubits(),
            tfim,
            energy,
            amplitudes: state.amplitudes().iter().map(|a| [a.re.to_f64_lossy(), a.im.to_f64_lossy()]).collect(),
        }
    }

    pub fn to_state<T: Scalar>(&self) -> Result<PureState<T>> {
        check_version(self.schema_version)?;
        let amps = self.amplitudes.iter().map(|a| Complex::new(T::lit(a[0]), T::lit(a[1]))).collect();
        PureState::new(self.n_qubits, amps).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn describe(&self) -> String {
        match &self.tfim {
            Some(p) => format!(
                "tfim n={} jz={} jx={} boundary={:?} spin={:?}",
                p.n_sites, p.j_z, p.j_x, p.boundary, p.spin
            ),
            None => format!("{}-qubit state", self.n_qubits),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub activation: Activation,
    /// `out × in`, one inner list per output unit.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkEntry {
    pub input_dim: usize,
    pub layers: Vec<LayerEntry>,
    pub output_weights: Vec<Vec<f64>>,
    pub output_offset: Vec<f64>,
}

impl NetworkEntry {
    pub fn from_model<T: Scalar>(m: &FfnnModel<T>) -> Self {
        Self {
            input_dim: m.input_dim(),
            layers: m
                .layers()
                .iter()
                .map(|l| LayerEntry {
                    activation: l.activation,
                    weights: matrix_rows(&l.weights),
                    bias: to_f64s(l.bias.iter().copied()),
                })
                .collect(),
            output_weights: matrix_rows(m.output_weights()),
            output_offset: to_f64s(m.output_offset().iter().copied()),
        }
    }

    pub fn to_model<T: Scalar>(&self) -> Result<FfnnModel<T>> {
        let mut width = self.input_dim;
        let mut layers = Vec::with_capacity(self.layers.len());
        for (k, l) in self.layers.iter().enumerate() {
            let weights = matrix_from_rows::<T>(&l.weights, width, &format!("layer {k} weights"))?;
            width = weights.nrows();
            layers.push(Layer { weights, bias: Array1::from(from_f64s::<T>(&l.bias)), activation: l.activation });
        }
        let output_weights = matrix_from_rows::<T>(&self.output_weights, width, "output weights")?;
        FfnnModel::new(layers, output_weights, Array1::from(from_f64s::<T>(&self.output_offset)))
            .map_err(|e| Error::Schema(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaEntry {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub total_variance: f64,
}

impl PcaEntry {
    pub fn from_transform<T: Scalar>(p: &PcaTransform<T>) -> Self {
        Self {
            mean: to_f64s(p.mean.iter().copied()),
            components: matrix_rows(&p.components),
            explained_variance: to_f64s(p.explained_variance.iter().copied()),
            total_variance: p.total_variance.to_f64_lossy(),
        }
    }

    pub fn to_transform<T: Scalar>(&self) -> Result<PcaTransform<T>> {
        let components = matrix_from_rows::<T>(&self.components, self.mean.len(), "PCA components")?;
        if self.explained_variance.len() != components.nrows() {
            return Err(Error::Schema("PCA explained variance does not match the component count".into()));
        }
        Ok(PcaTransform {
            mean: Array1::from(from_f64s::<T>(&self.mean)),
            components,
            explained_variance: Array1::from(from_f64s::<T>(&self.explained_variance)),
            total_variance: T::lit(self.total_variance),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub mse_before_refit: f64,
    pub mse_after_refit: f64,
}

impl<T: Scalar> From<&FineTuneRound<T>> for RoundMetrics {
    fn from(r: &FineTuneRound<T>) -> Self {
        Self { mse_before_refit: r.mse_before_refit.to_f64_lossy(), mse_after_refit: r.mse_after_refit.to_f64_lossy() }
    }
}

/// Mean and spread of one fidelity series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelitySummary {
    pub kind: crate::eval::FidelityKind,
    pub split: crate::pipeline::Split,
    pub mean: f64,
    pub std: f64,
    pub n_bases: usize,
}

impl From<&FidelityReport> for FidelitySummary {
    fn from(r: &FidelityReport) -> Self {
        Self { kind: r.kind, split: r.split, mean: r.mean, std: r.std, n_bases: r.per_basis.len() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainingMetrics {
    pub n_train: usize,
    pub n_validation: usize,
    pub initial_mse: f64,
    pub fine_tuned: bool,
    pub rounds: Vec<RoundMetrics>,
    pub fidelities: Vec<FidelitySummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub n_qubits: usize,
    pub n_hidden: usize,
    pub config: TomographyConfig,
    pub network: NetworkEntry,
    pub pca: Option<PcaEntry>,
    pub metrics: TrainingMetrics,
}

impl ModelFile {
    pub fn new<T: Scalar>(model: &BdrbmModel<T>, config: &TomographyConfig, metrics: TrainingMetrics) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            n_qubits: model.n_qubits,
            n_hidden: model.n_hidden,
            config: config.clone(),
            network: NetworkEntry::from_model(&model.ffnn),
            pca: model.pca.as_ref().map(PcaEntry::from_transform),
            metrics,
        }
    }

    pub fn to_model<T: Scalar>(&self) -> Result<BdrbmModel<T>> {
        check_version(self.schema_version)?;
        let ffnn = self.network.to_model::<T>()?;
        let pca = self.pca.as_ref().map(|p| p.to_transform::<T>()).transpose()?;
        BdrbmModel::new(ffnn, pca, self.n_qubits, self.n_hidden).map_err(|e| Error::Schema(e.to_string()))
    }
}

/// JSON written by the `train` command next to the model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub schema_version: u32,
    pub metrics: TrainingMetrics,
    pub reports: Vec<FidelityReport>,
}

/// Parses `"x,y,z;x,y,z;…"`, one unit axis per qubit.
pub fn parse_basis_string<T: Scalar>(s: &str) -> Result<LocalBasis<T>> {
    let axes = s
        .split(';')
        .map(|axis| {
            let parts: Vec<&str> = axis.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(Error::validation(format!("axis {axis:?} must have three components")));
            }
            let mut out = [T::zero(); 3];
            for (o, p) in out.iter_mut().zip(&parts) {
                let v: f64 = p.parse().map_err(|_| Error::validation(format!("bad number {p:?}")))?;
                *o = T::lit(v);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    LocalBasis::new(axes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        let xs = vec![0.1, -0.0, 1.0 / 3.0, 6.02214076e23, -2.5e-300, f64::MIN_POSITIVE, 0.0];
        let text = to_canonical_string(&xs).unwrap();
        let back: Vec<f64> = from_json_str(&text).unwrap();
        for (a, b) in xs.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(to_canonical_string(&back).unwrap(), text);
    }

    #[test]
    fn basis_string() {
        let b: LocalBasis<f64> = parse_basis_string("0,0,1; 1,0,0").unwrap();
        assert_eq!(b.axes(), &[[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]);
        assert!(parse_basis_string::<f64>("0,0").is_err());
        assert!(parse_basis_string::<f64>("0,0,2").is_err());
        assert!(parse_basis_string::<f64>("a,0,1").is_err());
    }

    #[test]
    fn wrong_version_is_schema_error() {
        let f = StateFile { schema_version: 99, n_qubits: 1, tfim: None, energy: None, amplitudes: vec![[1.0, 0.0], [0.0, 0.0]] };
        assert!(matches!(f.to_state::<f64>(), Err(Error::Schema(_))));
    }
}
