//! Emotion taxonomy and the probability/score vector types shared by the
//! fusion, rule and evaluation layers.
//!
//! Class order is fixed here. Files always refer to classes by name; the
//! index order below is only used for in-memory vectors.

use std::fmt;
use std::ops::Index;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of basic emotion classes.
pub const NUM_EMOTIONS: usize = 7;
/// Number of compound expression classes.
pub const NUM_COMPOUNDS: usize = 7;

/// Tolerance on the sum of a normalized [`ProbabilityVector`].
pub const NORMALIZED_TOLERANCE: f64 = 1e-6;

/// A closed set of class labels with a canonical order and stable names.
pub trait ClassLabel: Copy + Eq + fmt::Debug + 'static {
    const ALL: &'static [Self];

    fn index(self) -> usize;

    fn name(self) -> &'static str;

    fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    fn from_name(name: &str) -> Option<Self> {
        let name = name.trim();
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(name))
    }

    fn names() -> Vec<&'static str> {
        Self::ALL.iter().map(|c| c.name()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasicEmotion {
    Neutral,
    Anger,
    Disgust,
    Fear,
    Happiness,
    Sadness,
    Surprise,
}

impl BasicEmotion {
    pub const ALL: [BasicEmotion; NUM_EMOTIONS] = [
        BasicEmotion::Neutral,
        BasicEmotion::Anger,
        BasicEmotion::Disgust,
        BasicEmotion::Fear,
        BasicEmotion::Happiness,
        BasicEmotion::Sadness,
        BasicEmotion::Surprise,
    ];

    /// Two-letter abbreviation (Ne, An, Di, ...).
    pub fn short(self) -> &'static str {
        match self {
            BasicEmotion::Neutral => "Ne",
            BasicEmotion::Anger => "An",
            BasicEmotion::Disgust => "Di",
            BasicEmotion::Fear => "Fe",
            BasicEmotion::Happiness => "Ha",
            BasicEmotion::Sadness => "Sa",
            BasicEmotion::Surprise => "Su",
        }
    }
}

impl ClassLabel for BasicEmotion {
    const ALL: &'static [Self] = &BasicEmotion::ALL;

    fn index(self) -> usize {
        self as usize
    }

    fn name(self) -> &'static str {
        match self {
            BasicEmotion::Neutral => "neutral",
            BasicEmotion::Anger => "anger",
            BasicEmotion::Disgust => "disgust",
            BasicEmotion::Fear => "fear",
            BasicEmotion::Happiness => "happiness",
            BasicEmotion::Sadness => "sadness",
            BasicEmotion::Surprise => "surprise",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompoundExpression {
    FearfullySurprised,
    HappilySurprised,
    SadlySurprised,
    DisgustedlySurprised,
    AngrilySurprised,
    SadlyFearful,
    SadlyAngry,
}

impl CompoundExpression {
    pub const ALL: [CompoundExpression; NUM_COMPOUNDS] = [
        CompoundExpression::FearfullySurprised,
        CompoundExpression::HappilySurprised,
        CompoundExpression::SadlySurprised,
        CompoundExpression::DisgustedlySurprised,
        CompoundExpression::AngrilySurprised,
        CompoundExpression::SadlyFearful,
        CompoundExpression::SadlyAngry,
    ];

    /// The two constituent basic emotions, in table order.
    pub fn constituents(self) -> (BasicEmotion, BasicEmotion) {
        use BasicEmotion::*;
        match self {
            CompoundExpression::FearfullySurprised => (Fear, Surprise),
            CompoundExpression::HappilySurprised => (Happiness, Surprise),
            CompoundExpression::SadlySurprised => (Sadness, Surprise),
            CompoundExpression::DisgustedlySurprised => (Disgust, Surprise),
            CompoundExpression::AngrilySurprised => (Anger, Surprise),
            CompoundExpression::SadlyFearful => (Sadness, Fear),
            CompoundExpression::SadlyAngry => (Sadness, Anger),
        }
    }

    /// The compound expression made of `a` and `b` in either order, if any.
    pub fn from_pair(a: BasicEmotion, b: BasicEmotion) -> Option<Self> {
        CompoundExpression::ALL.into_iter().find(|ce| {
            let (e1, e2) = ce.constituents();
            (e1 == a && e2 == b) || (e1 == b && e2 == a)
        })
    }

    pub fn short(self) -> &'static str {
        match self {
            CompoundExpression::FearfullySurprised => "FeSu",
            CompoundExpression::HappilySurprised => "HaSu",
            CompoundExpression::SadlySurprised => "SaSu",
            CompoundExpression::DisgustedlySurprised => "DiSu",
            CompoundExpression::AngrilySurprised => "AnSu",
            CompoundExpression::SadlyFearful => "SaFe",
            CompoundExpression::SadlyAngry => "SaAn",
        }
    }
}

impl ClassLabel for CompoundExpression {
    const ALL: &'static [Self] = &CompoundExpression::ALL;

    fn index(self) -> usize {
        self as usize
    }

    fn name(self) -> &'static str {
        match self {
            CompoundExpression::FearfullySurprised => "fearfully_surprised",
            CompoundExpression::HappilySurprised => "happily_surprised",
            CompoundExpression::SadlySurprised => "sadly_surprised",
            CompoundExpression::DisgustedlySurprised => "disgustedly_surprised",
            CompoundExpression::AngrilySurprised => "angrily_surprised",
            CompoundExpression::SadlyFearful => "sadly_fearful",
            CompoundExpression::SadlyAngry => "sadly_angry",
        }
    }
}

macro_rules! label_display_from_str {
    ($ty:ty, $what:literal) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                <$ty as ClassLabel>::from_name(s)
                    .ok_or_else(|| Error::Data(format!("unknown {} '{}'", $what, s)))
            }
        }
    };
}

label_display_from_str!(BasicEmotion, "basic emotion");
label_display_from_str!(CompoundExpression, "compound expression");

/// Index of the largest entry; ties go to the lowest index.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Seven nonnegative values in canonical [`BasicEmotion`] order.
///
/// `normalized` marks raw model output (sums to one). Weighted and fused
/// vectors carry `normalized == false` and may sum to anything.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityVector {
    values: [f64; NUM_EMOTIONS],
    normalized: bool,
}

impl ProbabilityVector {
    /// A normalized distribution; rejects negative, non-finite entries and
    /// sums further than [`NORMALIZED_TOLERANCE`] from one.
    pub fn normalized(values: [f64; NUM_EMOTIONS]) -> Result<Self> {
        check_nonnegative(&values)?;
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > NORMALIZED_TOLERANCE {
            return Err(Error::Data(format!(
                "probability vector sums to {sum}, expected 1"
            )));
        }
        Ok(ProbabilityVector {
            values,
            normalized: true,
        })
    }

    /// Divides by the sum so the result is normalized. Fails on an all-zero vector.
    pub fn renormalized(values: [f64; NUM_EMOTIONS]) -> Result<Self> {
        check_nonnegative(&values)?;
        let sum: f64 = values.iter().sum();
        if sum <= 0.0 {
            return Err(Error::Data(
                "cannot renormalize a vector with zero total mass".into(),
            ));
        }
        Ok(ProbabilityVector {
            values: values.map(|v| v / sum),
            normalized: true,
        })
    }

    /// A weighted (non-normalized) vector, as produced by fusion.
    pub fn weighted(values: [f64; NUM_EMOTIONS]) -> Result<Self> {
        check_nonnegative(&values)?;
        Ok(ProbabilityVector {
            values,
            normalized: false,
        })
    }

    pub fn uniform() -> Self {
        ProbabilityVector {
            values: [1.0 / NUM_EMOTIONS as f64; NUM_EMOTIONS],
            normalized: true,
        }
    }

    pub fn one_hot(emotion: BasicEmotion) -> Self {
        let mut values = [0.0; NUM_EMOTIONS];
        values[emotion.index()] = 1.0;
        ProbabilityVector {
            values,
            normalized: true,
        }
    }

    /// Crate-internal constructor for values already known to be valid.
    pub(crate) fn from_parts(values: [f64; NUM_EMOTIONS], normalized: bool) -> Self {
        ProbabilityVector { values, normalized }
    }

    pub fn values(&self) -> &[f64; NUM_EMOTIONS] {
        &self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn get(&self, emotion: BasicEmotion) -> f64 {
        self.values[emotion.index()]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Highest-probability emotion, lowest index on ties.
    pub fn argmax(&self) -> BasicEmotion {
        BasicEmotion::ALL[argmax(&self.values)]
    }
}

impl Index<BasicEmotion> for ProbabilityVector {
    type Output = f64;

    fn index(&self, emotion: BasicEmotion) -> &f64 {
        &self.values[emotion.index()]
    }
}

fn check_nonnegative(values: &[f64]) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Data(format!(
                "entry '{}' is {v}; probabilities must be finite and nonnegative",
                BasicEmotion::ALL[i].name()
            )));
        }
    }
    Ok(())
}

/// Seven nonnegative compound expression scores in canonical order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompoundScoreVector {
    values: [f64; NUM_COMPOUNDS],
}

impl CompoundScoreVector {
    pub fn new(values: [f64; NUM_COMPOUNDS]) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Data(format!(
                "compound scores must be finite and nonnegative, got {values:?}"
            )));
        }
        Ok(CompoundScoreVector { values })
    }

    pub(crate) fn from_array(values: [f64; NUM_COMPOUNDS]) -> Self {
        CompoundScoreVector { values }
    }

    pub fn values(&self) -> &[f64; NUM_COMPOUNDS] {
        &self.values
    }

    pub fn get(&self, ce: CompoundExpression) -> f64 {
        self.values[ce.index()]
    }

    pub fn is_all_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

impl Index<CompoundExpression> for CompoundScoreVector {
    type Output = f64;

    fn index(&self, ce: CompoundExpression) -> &f64 {
        &self.values[ce.index()]
    }
}

/// Scoring coefficients for one compound expression:
/// `score = p[first] * first_weight + p[second] * second_weight`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairWeights {
    pub compound: CompoundExpression,
    pub first: BasicEmotion,
    pub first_weight: Ratio<u32>,
    pub second: BasicEmotion,
    pub second_weight: Ratio<u32>,
}

impl PairWeights {
    /// Evaluates the pair score on `p`, converting the exact weights to `f64`.
    pub fn score(&self, p: &ProbabilityVector) -> f64 {
        p[self.first] * ratio_to_f64(self.first_weight)
            + p[self.second] * ratio_to_f64(self.second_weight)
    }
}

pub(crate) fn ratio_to_f64(r: Ratio<u32>) -> f64 {
    f64::from(*r.numer()) / f64::from(*r.denom())
}

/// The seven compound rows with their constituent pairs and unit
/// coefficients: a compound score is the plain sum of its pair.
pub fn pair_sum_table() -> [PairWeights; NUM_COMPOUNDS] {
    CompoundExpression::ALL.map(|compound| {
        let (first, second) = compound.constituents();
        PairWeights {
            compound,
            first,
            first_weight: Ratio::from_integer(1),
            second,
            second_weight: Ratio::from_integer(1),
        }
    })
}

/// Per-compound weights for the two constituent emotions, each row summing
/// to exactly one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompoundWeightTable {
    rows: [PairWeights; NUM_COMPOUNDS],
}

impl CompoundWeightTable {
    /// Validates that rows follow canonical order, pair the right emotions,
    /// and that each row's two weights sum to one.
    pub fn new(rows: [PairWeights; NUM_COMPOUNDS]) -> Result<Self> {
        for (row, ce) in rows.iter().zip(CompoundExpression::ALL) {
            if row.compound != ce {
                return Err(Error::Parameter(format!(
                    "row for {} found where {} was expected",
                    row.compound, ce
                )));
            }
            if (row.first, row.second) != ce.constituents() {
                return Err(Error::Parameter(format!(
                    "{} must pair {:?}, got ({}, {})",
                    ce,
                    ce.constituents(),
                    row.first,
                    row.second
                )));
            }
            if row.first_weight + row.second_weight != Ratio::from_integer(1) {
                return Err(Error::Parameter(format!(
                    "weights for {} sum to {}, expected 1",
                    ce,
                    row.first_weight + row.second_weight
                )));
            }
        }
        Ok(CompoundWeightTable { rows })
    }

    pub fn rows(&self) -> &[PairWeights; NUM_COMPOUNDS] {
        &self.rows
    }

    pub fn row(&self, ce: CompoundExpression) -> &PairWeights {
        &self.rows[ce.index()]
    }
}

impl Default for CompoundWeightTable {
    /// Frequency weights that favour the less common emotion of each pair.
    fn default() -> Self {
        use BasicEmotion::*;
        use CompoundExpression::*;
        let row = |compound, first, (n1, d1), second, (n2, d2)| PairWeights {
            compound,
            first,
            first_weight: Ratio::new_raw(n1, d1),
            second,
            second_weight: Ratio::new_raw(n2, d2),
        };
        // Fractions kept unreduced as published (6/8 rather than 3/4).
        let rows = [
            row(FearfullySurprised, Fear, (5, 7), Surprise, (2, 7)),
            row(HappilySurprised, Happiness, (6, 8), Surprise, (2, 8)),
            row(SadlySurprised, Sadness, (4, 6), Surprise, (2, 6)),
            row(DisgustedlySurprised, Disgust, (6, 8), Surprise, (2, 8)),
            row(AngrilySurprised, Anger, (5, 7), Surprise, (2, 7)),
            row(SadlyFearful, Sadness, (4, 9), Fear, (5, 9)),
            row(SadlyAngry, Sadness, (4, 9), Anger, (5, 9)),
        ];
        CompoundWeightTable::new(rows).expect("built-in compound weight table is valid")
    }
}
