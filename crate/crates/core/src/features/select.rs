use std::cmp::Ordering;
use std::io::Write;

use super::forest::{fit_random_forest, rf_importances, ForestParams};
use super::ranks::spearman_rho;
use crate::error::{Error, Result};
use crate::ingest::SampleSet;

pub const DEFAULT_F_LIN: f64 = 0.30;
pub const DEFAULT_F_NONLIN: f64 = 0.24;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScore {
    pub indicator: String,
    /// |Spearman rho| with the target; 0 when the indicator is constant.
    pub spearman_abs: f64,
    pub rf_importance: f64,
}

pub type FeatureScores = Vec<FeatureScore>;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSelection {
    /// Linearly associated indicators, strongest first.
    pub direct: Vec<String>,
    /// Nonlinearly associated indicators outside `direct`, strongest first.
    pub potential: Vec<String>,
    pub f_lin: f64,
    pub f_nonlin: f64,
}

impl FeatureSelection {
    /// Direct followed by potential indicators.
    pub fn combined(&self) -> Vec<String> {
        self.direct.iter().chain(&self.potential).cloned().collect()
    }

    pub fn role_of(&self, indicator: &str) -> &'static str {
        if self.direct.iter().any(|d| d == indicator) {
            "direct"
        } else if self.potential.iter().any(|p| p == indicator) {
            "potential"
        } else {
            "none"
        }
    }
}

/// Scores every feature column of `samples` against its target.
pub fn score_features(samples: &SampleSet, forest: &ForestParams) -> Result<FeatureScores> {
    let y = &samples.y;
    let fitted = fit_random_forest(&samples.x, y, forest)?;
    let importance = rf_importances(&fitted);
    samples
        .feature_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let rho = match spearman_rho(&samples.x.column(j), y) {
                Ok(r) => r.abs(),
                Err(Error::UndefinedCorrelation(_)) => 0.0,
                Err(e) => return Err(e),
            };
            Ok(FeatureScore {
                indicator: name.clone(),
                spearman_abs: rho,
                rf_importance: importance[j],
            })
        })
        .collect()
}

/// ceil(fraction * n), tolerant of binary rounding such as 0.3 * 10.
fn fraction_count(fraction: f64, n: usize) -> usize {
    let raw = fraction * n as f64;
    ((raw - 1e-9 * (1.0 + raw)).ceil().max(0.0) as usize).min(n)
}

fn ranked<'a>(scores: &[&'a FeatureScore], key: impl Fn(&FeatureScore) -> f64) -> Vec<&'a FeatureScore> {
    let mut v = scores.to_vec();
    v.sort_by(|a, b| {
        key(b)
            .partial_cmp(&key(a))
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.indicator.cmp(&b.indicator))
    });
    v
}

/// Top `f_lin` of all indicators by |rho| become direct; the top `f_nonlin`
/// of the rest by forest importance become potential.
pub fn select(scores: &[FeatureScore], f_lin: f64, f_nonlin: f64) -> Result<FeatureSelection> {
    for (name, f) in [("f_lin", f_lin), ("f_nonlin", f_nonlin)] {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::invalid(format!("{name} = {f} outside [0, 1]")));
        }
    }
    let all: Vec<&FeatureScore> = scores.iter().collect();
    let n_direct = fraction_count(f_lin, all.len());
    let by_rho = ranked(&all, |s| s.spearman_abs);
    let direct: Vec<String> = by_rho[..n_direct].iter().map(|s| s.indicator.clone()).collect();
    let rest: Vec<&FeatureScore> = by_rho[n_direct..].to_vec();
    let n_potential = fraction_count(f_nonlin, rest.len());
    let potential = ranked(&rest, |s| s.rf_importance)[..n_potential]
        .iter()
        .map(|s| s.indicator.clone())
        .collect();
    Ok(FeatureSelection {
        direct,
        potential,
        f_lin,
        f_nonlin,
    })
}

pub fn write_scores<W: Write>(writer: W, scores: &[FeatureScore], selection: &FeatureSelection) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["indicator", "spearman_abs", "rf_importance", "selected_as"])?;
    for s in scores {
        w.write_record([
            s.indicator.clone(),
            s.spearman_abs.to_string(),
            s.rf_importance.to_string(),
            selection.role_of(&s.indicator).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
