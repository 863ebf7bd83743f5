//! Random search for fusion weights on a labelled validation set.
//!
//! Trial 0 is always the uniform baseline (`W = 1/M`, every model weight
//! 0.5). Every later trial `t` draws a fresh Dirichlet weight matrix, plus a
//! model weight vector from the grid in hierarchical mode, from its own
//! seeded stream. Trials are therefore independent of each other and of
//! execution order; the best trial is picked by score, lowest index on ties.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emotion::{argmax, BasicEmotion, ClassLabel, ProbabilityVector, NUM_EMOTIONS};
use crate::error::{Error, Result};
use crate::fusion::{
    stream_rng, FusionMode, FusionParameters, ModelWeightVector, WeightMatrix, MODEL_WEIGHT_GRID_LEN,
    MODEL_WEIGHT_MAX,
};
use crate::metrics::{self, ConfusionMatrix};
use crate::temporal::AlignedDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    MacroF1,
    Uar,
}

impl Metric {
    pub fn compute(self, cm: &ConfusionMatrix) -> Result<f64> {
        match self {
            Metric::MacroF1 => metrics::macro_f1(cm),
            Metric::Uar => metrics::uar(cm),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f1" | "macro_f1" => Ok(Metric::MacroF1),
            "uar" => Ok(Metric::Uar),
            other => Err(Error::Config(format!("unknown metric '{other}' (expected f1 or uar)"))),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::MacroF1 => "macro_f1",
            Metric::Uar => "uar",
        })
    }
}

/// How model weights are explored in hierarchical mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VStrategy {
    /// Draw `W` and the model weights jointly in every trial.
    #[default]
    GridRandom,
    /// Search `W` with model weights fixed, then scan every grid point of
    /// the model weights for the best `W`. Only for up to three models.
    GridExhaustive,
}

/// Largest model count for [`VStrategy::GridExhaustive`] (99^3 grid points).
pub const EXHAUSTIVE_MAX_MODELS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub trials: usize,
    pub seed: u64,
    pub alpha: f64,
    pub metric: Metric,
    pub mode: FusionMode,
    pub v_strategy: VStrategy,
    /// Keep every trial's score in [`SearchResult::score_trace`].
    #[serde(default)]
    pub record_trace: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            trials: 10_000,
            seed: 0,
            alpha: 1.0,
            metric: Metric::MacroF1,
            mode: FusionMode::Dirichlet,
            v_strategy: VStrategy::GridRandom,
            record_trace: false,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self, num_models: usize) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Parameter(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.v_strategy == VStrategy::GridExhaustive && num_models > EXHAUSTIVE_MAX_MODELS {
            return Err(Error::Config(format!(
                "exhaustive model-weight scan supports at most {EXHAUSTIVE_MAX_MODELS} models, dataset has {num_models}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best_params: FusionParameters,
    pub best_score: f64,
    /// Trial that produced the best parameters. Indices at or above
    /// `trials` belong to the exhaustive model-weight scan.
    pub trial_index: usize,
    pub score_trace: Option<Vec<(usize, f64)>>,
}

/// Sequential or rayon-parallel trial evaluation; both give identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

/// Labelled frames of a dataset, reordered for a given set of model ids.
struct Validation<'a> {
    /// `streams[m]` holds the stream for model `m` of the parameters.
    streams: Vec<&'a [ProbabilityVector]>,
    frames: Vec<(usize, BasicEmotion)>,
}

impl<'a> Validation<'a> {
    fn new(dataset: &'a AlignedDataset, model_ids: &[String]) -> Result<Self> {
        let order = dataset.model_order(model_ids)?;
        let labels = dataset
            .basic_labels
            .as_ref()
            .ok_or_else(|| Error::Data("validation dataset has no basic-emotion labels".into()))?;
        let frames: Vec<(usize, BasicEmotion)> = labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|l| (i, l)))
            .collect();
        if frames.is_empty() {
            return Err(Error::Data(format!(
                "dataset '{}' has no labelled frames to evaluate",
                dataset.dataset_id
            )));
        }
        Ok(Validation {
            streams: order.iter().map(|&m| dataset.streams[m].as_slice()).collect(),
            frames,
        })
    }

    fn confusion(&self, params: &FusionParameters) -> ConfusionMatrix {
        let mut cm = ConfusionMatrix::for_labels::<BasicEmotion>();
        for &(i, truth) in &self.frames {
            let fused = params.fuse_values(|m| &self.streams[m][i]);
            cm.record(truth.index(), argmax(&fused[..NUM_EMOTIONS]));
        }
        cm
    }

    fn score(&self, params: &FusionParameters, metric: Metric) -> Result<f64> {
        metric.compute(&self.confusion(params))
    }
}

/// Fuses every labelled frame with `params`, takes the argmax basic emotion
/// and scores it against the labels.
pub fn evaluate_params(params: &FusionParameters, dataset: &AlignedDataset, metric: Metric) -> Result<f64> {
    Validation::new(dataset, params.model_ids())?.score(params, metric)
}

/// Parameters evaluated in trial `trial` of a search.
pub fn trial_params(cfg: &SearchConfig, model_ids: &[String], trial: usize) -> Result<FusionParameters> {
    let m = model_ids.len();
    if trial == 0 {
        return FusionParameters::uniform(model_ids.to_vec(), cfg.mode);
    }
    let mut rng = stream_rng(cfg.seed, trial as u64);
    let w = WeightMatrix::sample_with(&mut rng, m, cfg.alpha)?;
    let v = match (cfg.mode, cfg.v_strategy) {
        (FusionMode::Hierarchical, VStrategy::GridRandom) => ModelWeightVector::sample_with(&mut rng, m)?,
        _ => ModelWeightVector::constant(m, MODEL_WEIGHT_MAX)?,
    };
    FusionParameters::new(model_ids.to_vec(), w, v, cfg.mode)
}

/// Picks the better of two `(score, index)` candidates; ties go to the
/// lower index. Associative and commutative, so any reduction order agrees.
fn better(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

fn run_indexed<F>(range: std::ops::Range<usize>, exec: Execution, trace: bool, f: F) -> Result<((f64, usize), Option<Vec<(usize, f64)>>)>
where
    F: Fn(usize) -> Result<f64> + Sync + Send,
{
    let start = range.start;
    if trace {
        let scores: Vec<f64> = match exec {
            Execution::Parallel => range.into_par_iter().map(&f).collect::<Result<_>>()?,
            Execution::Sequential => range.map(&f).collect::<Result<_>>()?,
        };
        let best = scores
            .iter()
            .enumerate()
            .map(|(k, &s)| (s, start + k))
            .fold((f64::NEG_INFINITY, usize::MAX), better);
        let trace = scores.into_iter().enumerate().map(|(k, s)| (start + k, s)).collect();
        return Ok((best, Some(trace)));
    }
    let init = (f64::NEG_INFINITY, usize::MAX);
    let best = match exec {
        Execution::Parallel => range
            .into_par_iter()
            .map(|t| f(t).map(|s| (s, t)))
            .try_reduce(|| init, |a, b| Ok(better(a, b)))?,
        Execution::Sequential => range.map(|t| f(t).map(|s| (s, t))).try_fold(init, |a, b| b.map(|b| better(a, b)))?,
    };
    Ok((best, None))
}

/// Random search over fusion weights; see the module docs.
pub fn search(cfg: &SearchConfig, dataset: &AlignedDataset) -> Result<SearchResult> {
    search_with(cfg, dataset, Execution::Parallel)
}

pub fn search_with(cfg: &SearchConfig, dataset: &AlignedDataset, exec: Execution) -> Result<SearchResult> {
    let ids = dataset.model_ids.clone();
    cfg.validate(ids.len())?;
    let validation = Validation::new(dataset, &ids)?;

    let ((score, trial), mut trace) = run_indexed(0..cfg.trials, exec, cfg.record_trace, |t| {
        validation.score(&trial_params(cfg, &ids, t)?, cfg.metric)
    })?;
    let mut best_params = trial_params(cfg, &ids, trial)?;
    let mut best = (score, trial);
    log::info!("weight search: best {} = {:.4} at trial {}", cfg.metric, score, trial);

    if cfg.mode == FusionMode::Hierarchical && cfg.v_strategy == VStrategy::GridExhaustive {
        let m = ids.len();
        let grid_points = MODEL_WEIGHT_GRID_LEN.pow(m as u32);
        let w = best_params.weight_matrix().clone();
        let params_at = |g: usize| -> Result<FusionParameters> {
            let mut indices = vec![0usize; m];
            let mut rest = g;
            for slot in indices.iter_mut() {
                *slot = rest % MODEL_WEIGHT_GRID_LEN;
                rest /= MODEL_WEIGHT_GRID_LEN;
            }
            FusionParameters::new(
                ids.clone(),
                w.clone(),
                ModelWeightVector::from_grid_indices(&indices)?,
                FusionMode::Hierarchical,
            )
        };
        let offset = cfg.trials;
        let ((scan_score, scan_idx), scan_trace) = run_indexed(
            offset..offset + grid_points,
            exec,
            cfg.record_trace,
            |g| validation.score(&params_at(g - offset)?, cfg.metric),
        )?;
        if scan_score > best.0 {
            best = (scan_score, scan_idx);
            best_params = params_at(scan_idx - offset)?;
        }
        if let (Some(t), Some(s)) = (trace.as_mut(), scan_trace) {
            t.extend(s);
        }
        log::info!("model-weight scan: best {} = {:.4}", cfg.metric, best.0);
    }

    Ok(SearchResult {
        best_params,
        best_score: best.0,
        trial_index: best.1,
        score_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("m{i}")).collect()
    }

    /// Model 0 always right, model 1 always says Neutral.
    fn oracle_dataset() -> AlignedDataset {
        let truth: Vec<BasicEmotion> = (0..70).map(|i| BasicEmotion::ALL[i % 7]).collect();
        let perfect: Vec<_> = truth.iter().map(|e| ProbabilityVector::one_hot(*e)).collect();
        let neutral = vec![ProbabilityVector::one_hot(BasicEmotion::Neutral); 70];
        AlignedDataset::new("oracle", 5.0, ids(2), vec![perfect, neutral])
            .unwrap()
            .with_basic_labels(truth.into_iter().map(Some).collect())
            .unwrap()
    }

    #[test]
    fn all_weight_on_perfect_model_scores_one() {
        let ds = oracle_dataset();
        let w = WeightMatrix::new(vec![[1.0; 7], [0.0; 7]]).unwrap();
        let v = ModelWeightVector::constant(2, 0.5).unwrap();
        let params = FusionParameters::new(ids(2), w, v, FusionMode::Dirichlet).unwrap();
        assert_eq!(evaluate_params(&params, &ds, Metric::MacroF1).unwrap(), 1.0);
        assert_eq!(evaluate_params(&params, &ds, Metric::Uar).unwrap(), 1.0);
    }

    #[test]
    fn empty_or_unlabelled_dataset_is_an_error() {
        let ds = AlignedDataset::new("empty", 5.0, ids(2), vec![vec![], vec![]])
            .unwrap()
            .with_basic_labels(vec![])
            .unwrap();
        let params = FusionParameters::uniform(ids(2), FusionMode::Dirichlet).unwrap();
        assert!(matches!(evaluate_params(&params, &ds, Metric::MacroF1), Err(Error::Data(_))));

        let mut ds = oracle_dataset();
        ds.basic_labels = None;
        assert!(matches!(evaluate_params(&params, &ds, Metric::MacroF1), Err(Error::Data(_))));
    }

    #[test]
    fn mismatched_models_are_rejected() {
        let ds = oracle_dataset();
        let params = FusionParameters::uniform(vec!["m0".into(), "other".into()], FusionMode::Dirichlet).unwrap();
        assert!(matches!(evaluate_params(&params, &ds, Metric::MacroF1), Err(Error::Data(_))));
    }

    #[test]
    fn model_order_follows_ids_not_positions() {
        let ds = oracle_dataset();
        let w = WeightMatrix::new(vec![[0.0; 7], [1.0; 7]]).unwrap();
        let v = ModelWeightVector::constant(2, 0.5).unwrap();
        let params = FusionParameters::new(vec!["m1".into(), "m0".into()], w, v, FusionMode::Dirichlet).unwrap();
        assert_eq!(evaluate_params(&params, &ds, Metric::MacroF1).unwrap(), 1.0);
    }

    #[test]
    fn single_trial_is_the_baseline() {
        let ds = oracle_dataset();
        let cfg = SearchConfig { trials: 1, ..SearchConfig::default() };
        let r = search(&cfg, &ds).unwrap();
        assert_eq!(r.trial_index, 0);
        assert_eq!(r.best_params, FusionParameters::uniform(ids(2), FusionMode::Dirichlet).unwrap());
    }

    #[test]
    fn search_finds_the_perfect_model() {
        let ds = oracle_dataset();
        let cfg = SearchConfig { trials: 200, seed: 4, ..SearchConfig::default() };
        let r = search(&cfg, &ds).unwrap();
        assert!(r.best_score > evaluate_params(&trial_params(&cfg, &ids(2), 0).unwrap(), &ds, cfg.metric).unwrap());
        assert_eq!(evaluate_params(&r.best_params, &ds, cfg.metric).unwrap(), r.best_score);
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let ds = oracle_dataset();
        for mode in [FusionMode::Dirichlet, FusionMode::Hierarchical] {
            let cfg = SearchConfig { trials: 64, seed: 9, mode, record_trace: true, ..SearchConfig::default() };
            let a = search_with(&cfg, &ds, Execution::Parallel).unwrap();
            let b = search_with(&cfg, &ds, Execution::Sequential).unwrap();
            assert_eq!(a, b);
            let cfg = SearchConfig { record_trace: false, ..cfg };
            let c = search_with(&cfg, &ds, Execution::Parallel).unwrap();
            assert_eq!((c.best_score, c.trial_index), (a.best_score, a.trial_index));
        }
    }

    #[test]
    fn config_validation() {
        let ds = oracle_dataset();
        assert!(search(&SearchConfig { trials: 0, ..SearchConfig::default() }, &ds).is_err());
        assert!(search(&SearchConfig { alpha: 0.0, trials: 2, ..SearchConfig::default() }, &ds).is_err());
        let cfg = SearchConfig { v_strategy: VStrategy::GridExhaustive, ..SearchConfig::default() };
        assert!(cfg.validate(4).is_err());
        assert!(cfg.validate(3).is_ok());
        assert_eq!("f1".parse::<Metric>().unwrap(), Metric::MacroF1);
        assert!("acc".parse::<Metric>().is_err());
    }

    #[test]
    fn exhaustive_scan_never_loses_to_first_phase() {
        let ds = oracle_dataset();
        let base = SearchConfig { trials: 5, seed: 1, mode: FusionMode::Hierarchical, ..SearchConfig::default() };
        let fixed_v = SearchConfig { v_strategy: VStrategy::GridExhaustive, ..base.clone() };
        let r = search(&fixed_v, &ds).unwrap();
        assert!(r.best_score >= evaluate_params(&trial_params(&fixed_v, &ids(2), 0).unwrap(), &ds, fixed_v.metric).unwrap());
        assert_eq!(evaluate_params(&r.best_params, &ds, fixed_v.metric).unwrap(), r.best_score);
    }
}
