use std::collections::BTreeMap;

use super::config::{FeatureConfig, FeatureSet, IngestConfig};
use crate::error::{Error, Result};
use crate::features::{score_features, select, FeatureScores, FeatureSelection, ForestParams};
use crate::ingest::{
    bridge_masked_faults, build_samples, clean_counter, detect_shifts, split, AlignedFrame, ChangeLogSeries,
    IndicatorGroup, SampleSet, ShiftWindow, Split,
};

/// Aligned frame plus the production windows found in it.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub frame: AlignedFrame,
    pub shifts: Vec<ShiftWindow>,
}

pub fn ingest_series(series: &BTreeMap<String, ChangeLogSeries>, cfg: &IngestConfig) -> Result<Ingested> {
    let frame = AlignedFrame::from_series(series, &cfg.target, cfg.step_ms)?;
    let shifts = shifts_of(&frame, cfg)?;
    Ok(Ingested { frame, shifts })
}

pub fn shifts_of(frame: &AlignedFrame, cfg: &IngestConfig) -> Result<Vec<ShiftWindow>> {
    let counter = frame
        .column(&cfg.counter)
        .ok_or_else(|| Error::MissingColumns(vec![cfg.counter.clone()]))?;
    let cleaned = bridge_masked_faults(&clean_counter(counter, cfg.max_step), cfg.max_step);
    Ok(detect_shifts(&cleaned, frame.grid(), cfg.max_step))
}

/// Indicators carrying a feature-group prefix, in frame order.
pub fn candidate_indicators(frame: &AlignedFrame) -> Vec<String> {
    frame
        .indicator_ids()
        .filter(|id| IndicatorGroup::of(id).is_some())
        .map(str::to_string)
        .collect()
}

/// Samples over every shift with the given features, shift after shift, then
/// tagged train/test.
pub fn shift_samples(
    ingested: &Ingested,
    features: &[String],
    cfg: &IngestConfig,
    seed: u64,
) -> Result<(SampleSet, Vec<usize>)> {
    if ingested.shifts.is_empty() {
        return Err(Error::invalid("no production shift detected"));
    }
    let mut all: Option<SampleSet> = None;
    let mut shift_of = Vec::new();
    for (i, sh) in ingested.shifts.iter().enumerate() {
        let s = build_samples(&ingested.frame, sh, features, &cfg.target)?;
        shift_of.extend(std::iter::repeat(i).take(s.len()));
        all = Some(match all {
            None => s,
            Some(a) => a.concat(&s)?,
        });
    }
    let all = all.expect("at least one shift");
    Ok((split(&all, cfg.train_fraction, cfg.split_mode, seed)?, shift_of))
}

/// Scores all candidate indicators on the training rows and selects.
pub fn score_and_select(
    ingested: &Ingested,
    ingest: &IngestConfig,
    features: &FeatureConfig,
    seed: u64,
) -> Result<(FeatureScores, FeatureSelection)> {
    let candidates = candidate_indicators(&ingested.frame);
    if candidates.is_empty() {
        return Err(Error::invalid("frame has no candidate indicators (ids must start with A-D)"));
    }
    let (samples, _) = shift_samples(ingested, &candidates, ingest, seed)?;
    let train = samples.subset(Split::Train);
    let forest = ForestParams {
        n_trees: features.n_trees,
        min_leaf: features.min_leaf,
        features_per_split: None,
        seed,
    };
    let scores = score_features(&train, &forest)?;
    let selection = select(&scores, features.f_lin, features.f_nonlin)?;
    Ok((scores, selection))
}

pub fn feature_list(selection: &FeatureSelection, set: FeatureSet) -> Vec<String> {
    match set {
        FeatureSet::Combined => selection.combined(),
        FeatureSet::Linear => selection.direct.clone(),
        FeatureSet::Nonlinear => selection.potential.clone(),
    }
}
