//! Two-stage probability-level fusion of several emotion models.
//!
//! Stage one scales every model's probability vector class-by-class with a
//! row of a [`WeightMatrix`] whose columns are Dirichlet draws over models.
//! The weighted vectors are then either summed ([`FusionMode::Dirichlet`])
//! or summed after a second scaling by one scalar per model
//! ([`FusionMode::Hierarchical`]).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::emotion::{ProbabilityVector, NUM_EMOTIONS};
use crate::error::{Error, Result};

/// Tolerance on the column sums of a [`WeightMatrix`].
pub const COLUMN_SUM_TOLERANCE: f64 = 1e-9;

/// Smallest model weight on the grid.
pub const MODEL_WEIGHT_MIN: f64 = 0.01;
/// Largest model weight on the grid.
pub const MODEL_WEIGHT_MAX: f64 = 0.5;
/// Grid increment between model weights.
pub const MODEL_WEIGHT_STEP: f64 = 0.005;
/// Number of points on the model weight grid (0.01, 0.015, ..., 0.5).
pub const MODEL_WEIGHT_GRID_LEN: usize = 99;

/// Deterministic generator for one independent stream of a seeded run.
///
/// Every stream index gets its own ChaCha stream under the same key, so
/// draws for trial `t` never depend on how many other trials ran before it.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    /// Per-class sum of the first-stage weighted vectors.
    #[default]
    Dirichlet,
    /// First-stage weighting followed by a scalar weight per model.
    Hierarchical,
}

impl std::fmt::Display for FusionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FusionMode::Dirichlet => "dirichlet",
            FusionMode::Hierarchical => "hierarchical",
        })
    }
}

/// Per-model, per-class weights. Each class column sums to one across models.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: Vec<[f64; NUM_EMOTIONS]>,
}

impl WeightMatrix {
    pub fn new(rows: Vec<[f64; NUM_EMOTIONS]>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Parameter("weight matrix needs at least one model row".into()));
        }
        for (m, row) in rows.iter().enumerate() {
            if let Some(c) = row.iter().position(|w| !w.is_finite() || *w < 0.0 || *w > 1.0) {
                return Err(Error::Parameter(format!(
                    "weight w[{m}][{c}] = {} outside [0, 1]",
                    row[c]
                )));
            }
        }
        for c in 0..NUM_EMOTIONS {
            let sum: f64 = rows.iter().map(|r| r[c]).sum();
            if (sum - 1.0).abs() > COLUMN_SUM_TOLERANCE {
                return Err(Error::Parameter(format!(
                    "weight column {c} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(WeightMatrix { rows })
    }

    /// Every model gets weight `1/M` for every class.
    pub fn uniform(num_models: usize) -> Result<Self> {
        if num_models == 0 {
            return Err(Error::Parameter("num_models must be at least 1".into()));
        }
        let w = 1.0 / num_models as f64;
        Ok(WeightMatrix {
            rows: vec![[w; NUM_EMOTIONS]; num_models],
        })
    }

    /// Draws each class column independently from a symmetric
    /// Dirichlet(`alpha`) over `num_models` components.
    pub fn sample(seed: u64, num_models: usize, alpha: f64) -> Result<Self> {
        let mut rng = stream_rng(seed, 0);
        Self::sample_with(&mut rng, num_models, alpha)
    }

    pub fn sample_with<R: Rng + ?Sized>(rng: &mut R, num_models: usize, alpha: f64) -> Result<Self> {
        if num_models == 0 {
            return Err(Error::Parameter("num_models must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Parameter(format!(
                "Dirichlet concentration must be positive, got {alpha}"
            )));
        }
        let mut rows = vec![[0.0; NUM_EMOTIONS]; num_models];
        if num_models == 1 {
            rows[0] = [1.0; NUM_EMOTIONS];
            return Ok(WeightMatrix { rows });
        }
        let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::Parameter(e.to_string()))?;
        let mut draws = vec![0.0; num_models];
        for c in 0..NUM_EMOTIONS {
            // Normalized independent Gamma(alpha, 1) draws are Dirichlet(alpha).
            // Very small alpha can underflow every draw to zero; redraw then.
            let sum = loop {
                for d in draws.iter_mut() {
                    *d = gamma.sample(rng);
                }
                let sum: f64 = draws.iter().sum();
                if sum > 0.0 {
                    break sum;
                }
            };
            for (row, d) in rows.iter_mut().zip(&draws) {
                row[c] = d / sum;
            }
        }
        Ok(WeightMatrix { rows })
    }

    pub fn num_models(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, model: usize) -> &[f64; NUM_EMOTIONS] {
        &self.rows[model]
    }

    pub fn rows(&self) -> &[[f64; NUM_EMOTIONS]] {
        &self.rows
    }

    /// Column `class` as a vector over models.
    pub fn column(&self, class: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[class]).collect()
    }
}

/// Scalar importance per model, each value on the grid 0.01, 0.015, ..., 0.5.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeightVector {
    values: Vec<f64>,
}

impl ModelWeightVector {
    /// Grid value at `index` (0 → 0.01, 98 → 0.5).
    pub fn grid_value(index: usize) -> Option<f64> {
        // (index + 2) / 200 is the correctly rounded decimal grid point.
        (index < MODEL_WEIGHT_GRID_LEN).then(|| (index + 2) as f64 / 200.0)
    }

    /// Grid index of `value`, if it lies on the grid within 1e-12.
    pub fn grid_index(value: f64) -> Option<usize> {
        if !value.is_finite() {
            return None;
        }
        let pos = (value - MODEL_WEIGHT_MIN) / MODEL_WEIGHT_STEP;
        let idx = pos.round();
        if idx < 0.0 || idx >= MODEL_WEIGHT_GRID_LEN as f64 {
            return None;
        }
        let snapped = MODEL_WEIGHT_MIN + idx * MODEL_WEIGHT_STEP;
        ((value - snapped).abs() <= 1e-12).then_some(idx as usize)
    }

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Parameter("model weight vector is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| Self::grid_index(**v).is_none()) {
            return Err(Error::Parameter(format!(
                "model weight {v} is not on the grid [{MODEL_WEIGHT_MIN}, {MODEL_WEIGHT_MAX}] step {MODEL_WEIGHT_STEP}"
            )));
        }
        Ok(ModelWeightVector { values })
    }

    pub fn from_grid_indices(indices: &[usize]) -> Result<Self> {
        let values = indices
            .iter()
            .map(|&i| {
                Self::grid_value(i)
                    .ok_or_else(|| Error::Parameter(format!("grid index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(values)
    }

    /// All models at the same grid value.
    pub fn constant(num_models: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; num_models])
    }

    /// Independent uniform draws from the grid, one per model.
    pub fn sample_with<R: Rng + ?Sized>(rng: &mut R, num_models: usize) -> Result<Self> {
        if num_models == 0 {
            return Err(Error::Parameter("num_models must be at least 1".into()));
        }
        let indices: Vec<usize> = (0..num_models)
            .map(|_| rng.random_range(0..MODEL_WEIGHT_GRID_LEN))
            .collect();
        Self::from_grid_indices(&indices)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Elementwise product of a model's probabilities with its weight row.
pub fn first_weighting(p: &ProbabilityVector, w_row: &[f64]) -> Result<ProbabilityVector> {
    if w_row.len() != NUM_EMOTIONS {
        return Err(Error::Shape {
            what: "weight row",
            expected: NUM_EMOTIONS,
            found: w_row.len(),
        });
    }
    if let Some(w) = w_row.iter().find(|w| !w.is_finite() || **w < 0.0 || **w > 1.0) {
        return Err(Error::Parameter(format!("weight {w} outside [0, 1]")));
    }
    let mut out = [0.0; NUM_EMOTIONS];
    for (o, (p, w)) in out.iter_mut().zip(p.values().iter().zip(w_row)) {
        *o = p * w;
    }
    Ok(ProbabilityVector::from_parts(out, false))
}

/// Per-class sum of the weighted vectors of all models.
pub fn dirichlet_fuse(weighted: &[ProbabilityVector]) -> Result<ProbabilityVector> {
    if weighted.is_empty() {
        return Err(Error::Parameter("nothing to fuse: empty model list".into()));
    }
    let mut out = [0.0; NUM_EMOTIONS];
    for p in weighted {
        for (o, v) in out.iter_mut().zip(p.values()) {
            *o += v;
        }
    }
    Ok(ProbabilityVector::from_parts(out, false))
}

/// Per-class sum of the weighted vectors, each scaled by its model weight.
pub fn hierarchical_fuse(
    weighted: &[ProbabilityVector],
    v: &ModelWeightVector,
) -> Result<ProbabilityVector> {
    combine(weighted, v.values())
}

/// `Σ_m coefficients[m] · weighted[m]` for arbitrary nonnegative coefficients.
///
/// [`hierarchical_fuse`] is this with grid-constrained coefficients.
pub fn combine(weighted: &[ProbabilityVector], coefficients: &[f64]) -> Result<ProbabilityVector> {
    if weighted.is_empty() {
        return Err(Error::Parameter("nothing to fuse: empty model list".into()));
    }
    if weighted.len() != coefficients.len() {
        return Err(Error::Shape {
            what: "model weight vector",
            expected: weighted.len(),
            found: coefficients.len(),
        });
    }
    if let Some(c) = coefficients.iter().find(|c| !c.is_finite() || **c < 0.0) {
        return Err(Error::Parameter(format!("model coefficient {c} must be nonnegative")));
    }
    let mut out = [0.0; NUM_EMOTIONS];
    for (p, &coef) in weighted.iter().zip(coefficients) {
        for (o, v) in out.iter_mut().zip(p.values()) {
            *o += v * coef;
        }
    }
    Ok(ProbabilityVector::from_parts(out, false))
}

/// A fused vector tagged with the fusion mode that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusedVector {
    pub probs: ProbabilityVector,
    pub mode: FusionMode,
}

/// Fusion weights bound to an ordered list of model streams.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionParameters {
    model_ids: Vec<String>,
    weight_matrix: WeightMatrix,
    model_weights: ModelWeightVector,
    mode: FusionMode,
}

impl FusionParameters {
    pub fn new(
        model_ids: Vec<String>,
        weight_matrix: WeightMatrix,
        model_weights: ModelWeightVector,
        mode: FusionMode,
    ) -> Result<Self> {
        let m = model_ids.len();
        if weight_matrix.num_models() != m {
            return Err(Error::Shape {
                what: "weight matrix rows",
                expected: m,
                found: weight_matrix.num_models(),
            });
        }
        if model_weights.len() != m {
            return Err(Error::Shape {
                what: "model weight vector",
                expected: m,
                found: model_weights.len(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = model_ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(Error::Parameter(format!("duplicate model id '{dup}'")));
        }
        Ok(FusionParameters {
            model_ids,
            weight_matrix,
            model_weights,
            mode,
        })
    }

    /// Uniform `W` (1/M everywhere) and every model weight at 0.5.
    pub fn uniform(model_ids: Vec<String>, mode: FusionMode) -> Result<Self> {
        let m = model_ids.len();
        Self::new(
            model_ids,
            WeightMatrix::uniform(m)?,
            ModelWeightVector::constant(m, MODEL_WEIGHT_MAX)?,
            mode,
        )
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn weight_matrix(&self) -> &WeightMatrix {
        &self.weight_matrix
    }

    pub fn model_weights(&self) -> &ModelWeightVector {
        &self.model_weights
    }

    pub fn mode(&self) -> FusionMode {
        self.mode
    }

    pub fn num_models(&self) -> usize {
        self.model_ids.len()
    }

    /// Fuses one frame given each model's vector in `model_ids` order.
    pub fn fuse(&self, frame: &[ProbabilityVector]) -> Result<FusedVector> {
        if frame.len() != self.num_models() {
            return Err(Error::Shape {
                what: "model vectors for frame",
                expected: self.num_models(),
                found: frame.len(),
            });
        }
        let weighted = frame
            .iter()
            .zip(self.weight_matrix.rows())
            .map(|(p, w)| first_weighting(p, w))
            .collect::<Result<Vec<_>>>()?;
        let probs = match self.mode {
            FusionMode::Dirichlet => dirichlet_fuse(&weighted)?,
            FusionMode::Hierarchical => hierarchical_fuse(&weighted, &self.model_weights)?,
        };
        Ok(FusedVector {
            probs,
            mode: self.mode,
        })
    }

    /// Allocation-free counterpart of [`FusionParameters::fuse`] for hot
    /// loops. `model(m)` returns model `m`'s vector for the frame. Performs
    /// the same floating-point operations in the same order, so results are
    /// bitwise identical.
    #[inline]
    pub fn fuse_values<'a>(&self, model: impl Fn(usize) -> &'a ProbabilityVector) -> [f64; NUM_EMOTIONS] {
        let mut out = [0.0; NUM_EMOTIONS];
        for (m, (w, &v)) in self
            .weight_matrix
            .rows()
            .iter()
            .zip(self.model_weights.values())
            .enumerate()
        {
            let p = model(m).values();
            for c in 0..NUM_EMOTIONS {
                let weighted = p[c] * w[c];
                match self.mode {
                    FusionMode::Dirichlet => out[c] += weighted,
                    FusionMode::Hierarchical => out[c] += weighted * v,
                }
            }
        }
        out
    }
}
