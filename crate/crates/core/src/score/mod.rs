//! FAIR indicator scoring.
//!
//! Indicators, weights and rule bindings come from a scoring config
//! (`data/scoring.toml` is the default). Principle scores are weighted sums
//! of their indicators; the overall score is the unweighted mean of the four
//! principle scores.

mod rules;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use self::rules::RuleId;

use crate::disambiguate::MergedTool;
use crate::enrich::AvailabilityResult;
use crate::normalize::SoftwareType;
use crate::Timestamp;

pub const SCORING_SCHEMA: &str = "observatory-scoring/1";
pub const PROFILES_SCHEMA: &str = "observatory-profiles/1";
pub const OVERALL_METHOD: &str = "unweighted mean of principle scores";
const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("scoring config: {0}")]
    Config(String),
    #[error("weights of principle {principle} sum to {sum}, not 1")]
    WeightSumViolation { principle: Principle, sum: f64 },
    #[error("unknown indicator {0}")]
    UnknownIndicator(String),
    #[error("missing score for indicator {0}")]
    MissingIndicator(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Principle {
    F,
    A,
    I,
    R,
}

impl Principle {
    pub const ALL: [Principle; 4] = [Principle::F, Principle::A, Principle::I, Principle::R];

    pub fn as_str(self) -> &'static str {
        match self {
            Principle::F => "F",
            Principle::A => "A",
            Principle::I => "I",
            Principle::R => "R",
        }
    }
}

impl fmt::Display for Principle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorSpec {
    pub id: String,
    pub principle: Principle,
    pub weight: f64,
    pub rule_id: RuleId,
    #[serde(default)]
    pub confirmed_label: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoringConfig {
    pub schema: String,
    pub weights_version: String,
    #[serde(rename = "indicator")]
    pub indicators: Vec<IndicatorSpec>,
}

impl ScoringConfig {
    pub fn bundled() -> ScoringConfig {
        ScoringConfig::parse(include_str!("../../data/scoring.toml")).expect("bundled scoring config is valid")
    }

    pub fn load(path: &Path) -> Result<ScoringConfig, ScoreError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScoreError::Config(format!("{}: {e}", path.display())))?;
        ScoringConfig::parse(&text)
    }

    /// Parses and validates; weight-sum violations are refused.
    pub fn parse(text: &str) -> Result<ScoringConfig, ScoreError> {
        let cfg: ScoringConfig = toml::from_str(text).map_err(|e| ScoreError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ScoreError> {
        if self.schema != SCORING_SCHEMA {
            return Err(ScoreError::Config(format!(
                "expected schema `{SCORING_SCHEMA}`, found `{}`",
                self.schema
            )));
        }
        let mut ids = HashSet::new();
        for s in &self.indicators {
            if !ids.insert(s.id.as_str()) {
                return Err(ScoreError::Config(format!("duplicate indicator {}", s.id)));
            }
            if !(0.0..=1.0).contains(&s.weight) {
                return Err(ScoreError::Config(format!("weight of {} outside [0,1]", s.id)));
            }
        }
        for p in Principle::ALL {
            let specs: Vec<_> = self.of(p).collect();
            if specs.is_empty() {
                return Err(ScoreError::Config(format!("principle {p} has no indicators")));
            }
            let sum: f64 = specs.iter().map(|s| s.weight).sum();
            if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
                return Err(ScoreError::WeightSumViolation { principle: p, sum });
            }
        }
        Ok(())
    }

    pub fn of(&self, principle: Principle) -> impl Iterator<Item = &IndicatorSpec> {
        self.indicators.iter().filter(move |s| s.principle == principle)
    }

    pub fn spec(&self, id: &str) -> Result<&IndicatorSpec, ScoreError> {
        self.indicators
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| ScoreError::UnknownIndicator(id.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorScore {
    pub id: String,
    pub value: f64,
    pub evidence: Vec<String>,
    /// What would raise the value; empty at 1.
    #[serde(default)]
    pub guidance: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairProfile {
    pub tool_id: String,
    pub indicators: Vec<IndicatorScore>,
    pub principles: BTreeMap<Principle, f64>,
    pub overall: f64,
    pub overall_method: String,
    pub computed_at: Timestamp,
    pub weights_version: String,
}

impl FairProfile {
    pub fn indicator(&self, id: &str) -> Option<&IndicatorScore> {
        self.indicators.iter().find(|s| s.id == id)
    }

    pub fn principle(&self, p: Principle) -> f64 {
        self.principles.get(&p).copied().unwrap_or(0.0)
    }
}

/// Facts a user may assert for a draft that registries do not record.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assertions {
    pub tests_present: Option<bool>,
    pub registration_required: Option<bool>,
    pub dependencies_declared: Option<bool>,
}

/// Everything a rule may look at.
pub struct ScoringInput<'a> {
    pub tool: &'a MergedTool,
    pub availability: &'a [AvailabilityResult],
    /// Number of entries in the collection with this tool's name and type.
    pub identity_count: usize,
    pub assertions: Assertions,
}

/// Collection-wide facts needed by identity rules.
#[derive(Debug, Clone, Default)]
pub struct ScoringContext {
    identities: HashMap<(String, SoftwareType), usize>,
}

impl ScoringContext {
    pub fn new(tools: &[MergedTool]) -> Self {
        let mut identities = HashMap::new();
        for t in tools {
            *identities.entry((t.canonical_name.clone(), t.software_type)).or_default() += 1;
        }
        ScoringContext { identities }
    }

    /// Count for `tool`; a tool outside the collection counts as unique.
    pub fn identity_count(&self, tool: &MergedTool) -> usize {
        self.identities
            .get(&(tool.canonical_name.clone(), tool.software_type))
            .copied()
            .unwrap_or(1)
    }
}

pub fn evaluate_indicator(input: &ScoringInput<'_>, spec: &IndicatorSpec) -> IndicatorScore {
    let o = rules::evaluate(spec.rule_id, input);
    IndicatorScore {
        id: spec.id.clone(),
        value: o.value.clamp(0.0, 1.0),
        evidence: o.evidence,
        guidance: o.guidance,
    }
}

/// Weighted sum over the principle's indicators.
pub fn principle_score(scores: &[IndicatorScore], config: &ScoringConfig, principle: Principle) -> Result<f64, ScoreError> {
    let mut sum = 0.0;
    let mut weights = 0.0;
    for spec in config.of(principle) {
        let s = scores
            .iter()
            .find(|s| s.id == spec.id)
            .ok_or_else(|| ScoreError::MissingIndicator(spec.id.clone()))?;
        sum += spec.weight * s.value;
        weights += spec.weight;
    }
    if (weights - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(ScoreError::WeightSumViolation { principle, sum: weights });
    }
    Ok(sum.clamp(0.0, 1.0))
}

pub fn fair_profile(input: &ScoringInput<'_>, config: &ScoringConfig, now: Timestamp) -> Result<FairProfile, ScoreError> {
    let indicators: Vec<IndicatorScore> = config.indicators.iter().map(|s| evaluate_indicator(input, s)).collect();
    let mut principles = BTreeMap::new();
    for p in Principle::ALL {
        principles.insert(p, principle_score(&indicators, config, p)?);
    }
    let overall = principles.values().sum::<f64>() / principles.len() as f64;
    Ok(FairProfile {
        tool_id: input.tool.tool_id.clone(),
        indicators,
        principles,
        overall,
        overall_method: OVERALL_METHOD.into(),
        computed_at: now,
        weights_version: config.weights_version.clone(),
    })
}

/// Profiles for a whole collection. `availability` maps tool ids to their
/// check results.
pub fn score_collection(
    tools: &[MergedTool],
    availability: &HashMap<String, Vec<AvailabilityResult>>,
    config: &ScoringConfig,
    now: Timestamp,
) -> Result<Vec<FairProfile>, ScoreError> {
    use rayon::prelude::*;
    let ctx = ScoringContext::new(tools);
    tools
        .par_iter()
        .map(|t| {
            let input = ScoringInput {
                tool: t,
                availability: availability.get(&t.tool_id).map(Vec::as_slice).unwrap_or(&[]),
                identity_count: ctx.identity_count(t),
                assertions: Assertions::default(),
            };
            fair_profile(&input, config, now)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(pairs: &[(&str, f64)]) -> Vec<IndicatorScore> {
        pairs
            .iter()
            .map(|(id, v)| IndicatorScore { id: (*id).into(), value: *v, evidence: vec![], guidance: vec![] })
            .collect()
    }

    #[test]
    fn bundled_config_is_valid() {
        let c = ScoringConfig::bundled();
        assert_eq!(c.indicators.len(), 12);
        assert_eq!(c.spec("I1").unwrap().weight, 0.6);
        assert_eq!(c.spec("I2").unwrap().weight, 0.1);
        assert_eq!(c.spec("I3").unwrap().weight, 0.3);
        for id in ["A2", "F1", "I3", "R1"] {
            assert!(!c.spec(id).unwrap().confirmed_label);
        }
        assert!(matches!(c.spec("X9"), Err(ScoreError::UnknownIndicator(_))));
    }

    #[test]
    fn interoperability_weights() {
        let c = ScoringConfig::bundled();
        let i = principle_score(&scores(&[("I1", 1.0), ("I2", 0.0), ("I3", 1.0)]), &c, Principle::I).unwrap();
        assert!((i - 0.9).abs() < 1e-12);
        let j = principle_score(&scores(&[("I1", 1.0), ("I2", 1.0), ("I3", 1.0)]), &c, Principle::I).unwrap();
        assert!((j - i - 0.1).abs() < 1e-12);
        let z = principle_score(&scores(&[("I1", 0.0), ("I2", 0.0), ("I3", 0.0)]), &c, Principle::I).unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn missing_indicator() {
        let c = ScoringConfig::bundled();
        assert!(matches!(
            principle_score(&scores(&[("I1", 1.0)]), &c, Principle::I),
            Err(ScoreError::MissingIndicator(_))
        ));
    }

    #[test]
    fn weight_sum_violation_refused() {
        let text = include_str!("../../data/scoring.toml").replace("weight = 0.6", "weight = 0.7");
        assert!(matches!(
            ScoringConfig::parse(&text),
            Err(ScoreError::WeightSumViolation { principle: Principle::I, .. })
        ));
    }
}
