use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{aggregate_runs, EvalError};

/// Scores closer than this (relative to their magnitude) count as a tie.
const TIE_TOLERANCE: f64 = 1e-9;

/// Average fulfilled requirements (AR) and average errors (AE) at one temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureScore {
    pub temperature: f64,
    pub ar: f64,
    pub ae: f64,
}

impl TemperatureScore {
    pub fn new(temperature: f64, ar: f64, ae: f64) -> Self {
        Self { temperature, ar, ae }
    }

    /// Means over repeated runs at one temperature.
    pub fn from_runs(temperature: f64, requirements: &[f64], errors: &[f64]) -> Result<Self, EvalError> {
        Ok(Self {
            temperature,
            ar: aggregate_runs(requirements)?.mean,
            ae: aggregate_runs(errors)?.mean,
        })
    }

    /// T^u = AR - AE/2
    pub fn score(&self) -> f64 {
        self.ar - self.ae / 2.0
    }
}

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Temperature with the highest score. Ties go to the lower temperature.
pub fn select_temperature(scores: &[TemperatureScore]) -> Result<f64, EvalError> {
    let mut sorted: Vec<&TemperatureScore> = scores.iter().collect();
    sorted.sort_by(|a, b| a.temperature.total_cmp(&b.temperature));
    for pair in sorted.windows(2) {
        if pair[0].temperature == pair[1].temperature {
            return Err(EvalError::DuplicateTemperature(pair[0].temperature));
        }
    }
    let mut best = *sorted.first().ok_or(EvalError::EmptyScores)?;
    for s in &sorted[1..] {
        // Ascending order, so only a strictly better score replaces the best.
        if s.score() > best.score() && !ties(s.score(), best.score()) {
            best = s;
        }
    }
    Ok(best.temperature)
}

/// Selection per group, e.g. per model or per method.
pub fn select_temperature_by<K: Ord + Clone>(
    scores: impl IntoIterator<Item = (K, TemperatureScore)>,
) -> Result<BTreeMap<K, f64>, EvalError> {
    let mut groups: BTreeMap<K, Vec<TemperatureScore>> = BTreeMap::new();
    for (key, score) in scores {
        groups.entry(key).or_default().push(score);
    }
    groups
        .into_iter()
        .map(|(k, group)| Ok((k, select_temperature(&group)?)))
        .collect()
}
