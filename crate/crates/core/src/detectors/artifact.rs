//! JSON model artifacts: reservoir spec, seed, weights and readouts, so a
//! detection run can be replayed without retraining.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::rcnet::{RcLayer, RcnetKind, RcnetModel};
use super::tf_rc::{TfRc, TfReadout};
use super::time_rc::{TimeRc, TimeReadout};
use crate::error::{Error, Result};
use crate::numerics::MatrixRecord;
use crate::reservoir::{ReservoirSpec, ReservoirWeights};
use crate::scalar::Scalar;

pub const ARTIFACT_FORMAT: &str = "rc-symdet-model";
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArtifactKind {
    TimeRc,
    TfRc,
    RcnetTime,
    RcnetTf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirRecord {
    pub spec: ReservoirSpec,
    pub n_inputs: usize,
    pub seed: u64,
    pub w_s: MatrixRecord,
    pub w_in: MatrixRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layer", rename_all = "kebab-case")]
pub enum LayerRecord {
    Time {
        reservoir: ReservoirRecord,
        w_tout: MatrixRecord,
        p_star: usize,
        input_gain: f64,
    },
    Tf {
        reservoir: ReservoirRecord,
        w_tout: MatrixRecord,
        w_fout: MatrixRecord,
        delay: usize,
        input_gain: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format: String,
    pub version: u32,
    pub kind: ArtifactKind,
    /// Precision the model was trained in (`f32` or `f64`).
    pub scalar: String,
    pub layers: Vec<LayerRecord>,
}

fn reservoir_record<T: Scalar>(w: &ReservoirWeights<T>) -> ReservoirRecord {
    ReservoirRecord {
        spec: w.spec.clone(),
        n_inputs: w.n_inputs,
        seed: w.seed,
        w_s: MatrixRecord::from_real(&w.w_s),
        w_in: MatrixRecord::from_real(&w.w_in),
    }
}

fn reservoir_from<T: Scalar>(r: &ReservoirRecord) -> Result<ReservoirWeights<T>> {
    let w_s = r.w_s.to_real()?;
    let w_in = r.w_in.to_real()?;
    let n = r.spec.n_neurons;
    if w_s.shape() != (n, n) || w_in.shape() != (r.spec.window_len * r.n_inputs, n) {
        return Err(Error::Shape("reservoir matrices do not match the stored spec".into()));
    }
    Ok(ReservoirWeights { spec: r.spec.clone(), n_inputs: r.n_inputs, seed: r.seed, w_s, w_in })
}

fn time_record<T: Scalar>(m: &TimeRc<T>) -> LayerRecord {
    LayerRecord::Time {
        reservoir: reservoir_record(&m.weights),
        w_tout: MatrixRecord::from_complex(&m.readout.w_tout),
        p_star: m.readout.p_star,
        input_gain: m.readout.input_gain.as_f64(),
    }
}

fn tf_record<T: Scalar>(m: &TfRc<T>) -> LayerRecord {
    LayerRecord::Tf {
        reservoir: reservoir_record(&m.weights),
        w_tout: MatrixRecord::from_complex(&m.readout.w_tout),
        w_fout: MatrixRecord::from_complex(&m.readout.w_fout),
        delay: m.readout.delay,
        input_gain: m.readout.input_gain.as_f64(),
    }
}

fn layer_from<T: Scalar>(r: &LayerRecord) -> Result<RcLayer<T>> {
    match r {
        LayerRecord::Time { reservoir, w_tout, p_star, input_gain } => Ok(RcLayer::Time(TimeRc {
            weights: reservoir_from(reservoir)?,
            readout: TimeReadout { w_tout: w_tout.to_complex()?, p_star: *p_star, input_gain: T::lit(*input_gain) },
        })),
        LayerRecord::Tf { reservoir, w_tout, w_fout, delay, input_gain } => Ok(RcLayer::Tf(TfRc {
            weights: reservoir_from(reservoir)?,
            readout: TfReadout {
                w_tout: w_tout.to_complex()?,
                w_fout: w_fout.to_complex()?,
                delay: *delay,
                input_gain: T::lit(*input_gain),
            },
        })),
    }
}

fn scalar_name<T: Scalar>() -> String {
    if std::mem::size_of::<T>() == 4 { "f32" } else { "f64" }.to_string()
}

impl ModelArtifact {
    fn new<T: Scalar>(kind: ArtifactKind, layers: Vec<LayerRecord>) -> Self {
        Self { format: ARTIFACT_FORMAT.into(), version: ARTIFACT_VERSION, kind, scalar: scalar_name::<T>(), layers }
    }

    pub fn from_time_rc<T: Scalar>(m: &TimeRc<T>) -> Self {
        Self::new::<T>(ArtifactKind::TimeRc, vec![time_record(m)])
    }

    pub fn from_tf_rc<T: Scalar>(m: &TfRc<T>) -> Self {
        Self::new::<T>(ArtifactKind::TfRc, vec![tf_record(m)])
    }

    pub fn from_rcnet<T: Scalar>(m: &RcnetModel<T>) -> Self {
        let kind = match m.kind {
            RcnetKind::DeepTime => ArtifactKind::RcnetTime,
            RcnetKind::DeepTf => ArtifactKind::RcnetTf,
        };
        let layers = m
            .layers
            .iter()
            .map(|l| match l {
                RcLayer::Time(t) => time_record(t),
                RcLayer::Tf(t) => tf_record(t),
            })
            .collect();
        Self::new::<T>(kind, layers)
    }

    fn check(&self, expected: &[ArtifactKind]) -> Result<()> {
        if self.format != ARTIFACT_FORMAT || self.version != ARTIFACT_VERSION {
            return Err(Error::Config(format!("unsupported artifact {} v{}", self.format, self.version)));
        }
        if !expected.contains(&self.kind) {
            return Err(Error::Config(format!("artifact holds a {:?} model", self.kind)));
        }
        if self.layers.is_empty() {
            return Err(Error::Untrained("artifact has no layers".into()));
        }
        Ok(())
    }

    pub fn to_time_rc<T: Scalar>(&self) -> Result<TimeRc<T>> {
        self.check(&[ArtifactKind::TimeRc])?;
        match layer_from(&self.layers[0])? {
            RcLayer::Time(m) => Ok(m),
            RcLayer::Tf(_) => Err(Error::Config("time RC artifact holds a TF layer".into())),
        }
    }

    pub fn to_tf_rc<T: Scalar>(&self) -> Result<TfRc<T>> {
        self.check(&[ArtifactKind::TfRc])?;
        match layer_from(&self.layers[0])? {
            RcLayer::Tf(m) => Ok(m),
            RcLayer::Time(_) => Err(Error::Config("TF RC artifact holds a time layer".into())),
        }
    }

    pub fn to_rcnet<T: Scalar>(&self) -> Result<RcnetModel<T>> {
        self.check(&[ArtifactKind::RcnetTime, ArtifactKind::RcnetTf])?;
        let kind = if self.kind == ArtifactKind::RcnetTime { RcnetKind::DeepTime } else { RcnetKind::DeepTf };
        let layers = self.layers.iter().map(layer_from).collect::<Result<Vec<_>>>()?;
        Ok(RcnetModel { kind, layers })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::tests_support::identity_training_set;
    use crate::detectors::{
        detect_tf_rc, detect_time_rc, rcnet_detect, train_rcnet_deep_tf, train_tf_rc, train_time_rc, TrainOptions,
    };
    use crate::ofdm::ModulationScheme;

    fn spec() -> ReservoirSpec {
        ReservoirSpec { n_neurons: 12, window_len: 2, ..ReservoirSpec::default() }
    }

    #[test]
    fn time_rc_round_trips_bit_exactly() {
        let (cfg, train, frames) = identity_training_set(1, 1);
        let (m, _) = train_time_rc::<f64>(&train, &spec(), 2, &[0, 1, 2], 3, &TrainOptions::default()).unwrap();
        let art = ModelArtifact::from_time_rc(&m);
        let back = ModelArtifact::from_json(&art.to_json().unwrap()).unwrap().to_time_rc::<f64>().unwrap();
        assert_eq!(back, m);
        assert_eq!(
            detect_time_rc(&back, &frames[0], &cfg, ModulationScheme::Qpsk).unwrap(),
            detect_time_rc(&m, &frames[0], &cfg, ModulationScheme::Qpsk).unwrap()
        );
        assert!(art.to_tf_rc::<f64>().is_err());
    }

    #[test]
    fn tf_and_rcnet_round_trip_through_files() {
        let (cfg, train, frames) = identity_training_set(1, 2);
        let dir = tempfile::tempdir().unwrap();
        let (tf, _) = train_tf_rc::<f64>(&train, &spec(), &[0, 1], 3, 1e-8, 4, &TrainOptions::default()).unwrap();
        let path = dir.path().join("tf.json");
        ModelArtifact::from_tf_rc(&tf).save(&path).unwrap();
        let back = ModelArtifact::load(&path).unwrap().to_tf_rc::<f64>().unwrap();
        assert_eq!(back, tf);
        assert_eq!(
            detect_tf_rc(&back, &frames[0], &cfg, ModulationScheme::Qpsk).unwrap(),
            detect_tf_rc(&tf, &frames[0], &cfg, ModulationScheme::Qpsk).unwrap()
        );

        let (net, _) = train_rcnet_deep_tf::<f64>(&train, 2, &[spec()], &[0, 2], 2, 1e-8, 5, &TrainOptions::default()).unwrap();
        let art = ModelArtifact::from_rcnet(&net);
        assert_eq!(art.kind, ArtifactKind::RcnetTf);
        let back = ModelArtifact::from_json(&art.to_json().unwrap()).unwrap().to_rcnet::<f64>().unwrap();
        assert_eq!(back, net);
        assert_eq!(
            rcnet_detect(&back, &frames[0], &cfg, ModulationScheme::Qpsk).unwrap(),
            rcnet_detect(&net, &frames[0], &cfg, ModulationScheme::Qpsk).unwrap()
        );
    }

    #[test]
    fn corrupt_artifacts_are_rejected() {
        let (_, train, _) = identity_training_set(1, 3);
        let (m, _) = train_time_rc::<f64>(&train, &spec(), 0, &[0], 3, &TrainOptions::default()).unwrap();
        let mut art = ModelArtifact::from_time_rc(&m);
        art.version = 99;
        assert!(art.to_time_rc::<f64>().is_err());
        let mut art = ModelArtifact::from_time_rc(&m);
        if let LayerRecord::Time { reservoir, .. } = &mut art.layers[0] {
            reservoir.w_s.rows += 1;
        }
        assert!(art.to_time_rc::<f64>().is_err());
        assert!(ModelArtifact::from_json("{\"format\": 3}").is_err());
    }
}
