use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{read_json, write_json, PerEmotion};
use crate::emotion::{BasicEmotion, ClassLabel};
use crate::error::{Error, Result};
use crate::fusion::{FusionMode, FusionParameters, ModelWeightVector, WeightMatrix};
use crate::optimizer::{Metric, SearchConfig, SearchResult, VStrategy};

/// How a weights file was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub trials: usize,
    pub alpha: f64,
    pub metric: Metric,
    pub v_strategy: VStrategy,
    pub validation_dataset: String,
    pub score: f64,
    pub trial_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelWeights {
    pub model_id: String,
    /// This model's row of the class weight matrix.
    pub class_weights: PerEmotion<f64>,
    pub model_weight: f64,
}

/// Persisted fusion weights.
///
/// ```json
/// {
///   "class_order": ["neutral", "anger", ...],
///   "mode": "dirichlet",
///   "models": [
///     { "model_id": "static", "class_weights": { "neutral": 0.41, ... }, "model_weight": 0.5 }
///   ],
///   "provenance": { "seed": 7, "trials": 2000, ... }
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsFile {
    pub class_order: Vec<String>,
    pub mode: FusionMode,
    pub models: Vec<ModelWeights>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl WeightsFile {
    pub fn from_params(params: &FusionParameters, provenance: Option<Provenance>) -> Self {
        let models = params
            .model_ids()
            .iter()
            .zip(params.weight_matrix().rows())
            .zip(params.model_weights().values())
            .map(|((id, row), &v)| ModelWeights {
                model_id: id.clone(),
                class_weights: PerEmotion::from_array(*row),
                model_weight: v,
            })
            .collect();
        WeightsFile {
            class_order: BasicEmotion::names().iter().map(|s| s.to_string()).collect(),
            mode: params.mode(),
            models,
            provenance,
        }
    }

    pub fn from_result(result: &SearchResult, cfg: &SearchConfig, validation_dataset: &str) -> Self {
        let provenance = Provenance {
            seed: cfg.seed,
            trials: cfg.trials,
            alpha: cfg.alpha,
            metric: cfg.metric,
            v_strategy: cfg.v_strategy,
            validation_dataset: validation_dataset.to_string(),
            score: result.best_score,
            trial_index: result.trial_index,
        };
        Self::from_params(&result.best_params, Some(provenance))
    }

    /// Rebuilds validated fusion parameters.
    pub fn to_params(&self) -> Result<FusionParameters> {
        let expected = BasicEmotion::names();
        if self.class_order.len() != expected.len()
            || self.class_order.iter().zip(&expected).any(|(a, b)| !a.eq_ignore_ascii_case(b))
        {
            return Err(Error::Config(format!(
                "class_order must be [{}], got [{}]",
                expected.join(", "),
                self.class_order.join(", ")
            )));
        }
        let ids = self.models.iter().map(|m| m.model_id.clone()).collect();
        let rows = self.models.iter().map(|m| m.class_weights.to_array()).collect();
        let v = self.models.iter().map(|m| m.model_weight).collect();
        FusionParameters::new(ids, WeightMatrix::new(rows)?, ModelWeightVector::new(v)?, self.mode)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file: WeightsFile = read_json(path)?;
        file.to_params().map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::stream_rng;

    fn sampled() -> FusionParameters {
        let mut rng = stream_rng(3, 1);
        let w = WeightMatrix::sample_with(&mut rng, 3, 1.0).unwrap();
        let v = ModelWeightVector::sample_with(&mut rng, 3).unwrap();
        FusionParameters::new(vec!["a".into(), "b".into(), "c".into()], w, v, FusionMode::Hierarchical).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let params = sampled();
        let file = WeightsFile::from_params(&params, None);
        let f = tempfile::NamedTempFile::new().unwrap();
        file.write(f.path()).unwrap();
        let back = WeightsFile::read(f.path()).unwrap();
        assert_eq!(back, file);
        let restored = back.to_params().unwrap();
        for (a, b) in restored.weight_matrix().rows().iter().zip(params.weight_matrix().rows()) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        assert_eq!(restored, params);
    }

    #[test]
    fn invalid_files_are_config_errors() {
        let mut file = WeightsFile::from_params(&sampled(), None);
        file.class_order.swap(0, 1);
        assert!(matches!(file.to_params(), Err(Error::Config(_))));

        let mut file = WeightsFile::from_params(&sampled(), None);
        file.models[0].class_weights.anger += 0.1;
        assert!(file.to_params().unwrap_err().is_config());

        let mut file = WeightsFile::from_params(&sampled(), None);
        file.models[1].model_weight = 0.7;
        assert!(file.to_params().unwrap_err().is_config());
    }
}
