use rand::seq::SliceRandom;

use super::fill::AlignedFrame;
use super::shifts::ShiftWindow;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::time::Timestamp;

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.85;

/// Feature group, encoded by the first letter of the indicator id:
/// `A` raw material, `B` VE, `C` SE, `D` MAX.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum IndicatorGroup {
    RawMaterial,
    Ve,
    Se,
    Max,
}

impl IndicatorGroup {
    pub fn of(indicator: &str) -> Option<Self> {
        match indicator.as_bytes().first() {
            Some(b'A') => Some(Self::RawMaterial),
            Some(b'B') => Some(Self::Ve),
            Some(b'C') => Some(Self::Se),
            Some(b'D') => Some(Self::Max),
            _ => None,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    /// The last rows in time order form the test set.
    #[default]
    Chronological,
    /// Seeded random assignment.
    Random,
}

/// Model-ready samples: one row per grid instant, window size 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub feature_names: Vec<String>,
    pub x: Matrix,
    pub y: Vec<f64>,
    pub timestamps: Vec<Timestamp>,
    pub split: Vec<Split>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Counts of raw-material / VE / SE / MAX features (n1..n4).
    pub fn group_sizes(&self) -> [usize; 4] {
        let mut n = [0; 4];
        for g in self.feature_names.iter().filter_map(|f| IndicatorGroup::of(f)) {
            n[g.index()] += 1;
        }
        n
    }

    pub fn subset(&self, which: Split) -> SampleSet {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.split[i] == which).collect();
        self.take_rows(&idx)
    }

    pub fn take_rows(&self, idx: &[usize]) -> SampleSet {
        SampleSet {
            feature_names: self.feature_names.clone(),
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            timestamps: idx.iter().map(|&i| self.timestamps[i]).collect(),
            split: idx.iter().map(|&i| self.split[i]).collect(),
        }
    }

    /// Restricts the feature columns to `names`, in that order.
    pub fn select_features(&self, names: &[String]) -> Result<SampleSet> {
        let mut idx = Vec::with_capacity(names.len());
        let mut missing = Vec::new();
        for n in names {
            match self.feature_names.iter().position(|f| f == n) {
                Some(j) => idx.push(j),
                None => missing.push(n.clone()),
            }
        }
        if !missing.is_empty() {
            return Err(Error::MissingColumns(missing));
        }
        Ok(SampleSet {
            feature_names: names.to_vec(),
            x: self.x.select_columns(&idx),
            ..self.clone()
        })
    }

    /// Appends `other`'s rows; feature lists must match.
    pub fn concat(&self, other: &SampleSet) -> Result<SampleSet> {
        if self.feature_names != other.feature_names {
            return Err(Error::invalid("cannot concatenate sample sets with different features"));
        }
        let mut out = self.clone();
        out.x = self.x.vstack(&other.x)?;
        out.y.extend_from_slice(&other.y);
        out.timestamps.extend_from_slice(&other.timestamps);
        out.split.extend_from_slice(&other.split);
        Ok(out)
    }
}

/// Builds one sample row per grid point in `[shift.start, shift.end)`.
pub fn build_samples(
    frame: &AlignedFrame,
    shift: &ShiftWindow,
    features: &[String],
    target: &str,
) -> Result<SampleSet> {
    if features.is_empty() {
        return Err(Error::invalid("feature list is empty"));
    }
    let missing: Vec<String> = features
        .iter()
        .map(String::as_str)
        .chain(std::iter::once(target))
        .filter(|n| frame.column(n).is_none())
        .map(str::to_string)
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingColumns(missing));
    }
    let grid = frame.grid();
    if shift.end <= shift.start || shift.start < grid.start || shift.start > grid.end() {
        return Err(Error::invalid(format!(
            "shift [{}, {}) lies outside the frame",
            shift.start, shift.end
        )));
    }
    let first = grid.ceil_index(shift.start);
    let stop = grid.ceil_index(shift.end).min(grid.length);
    let cols: Vec<&[f64]> = features.iter().map(|f| frame.column(f).unwrap()).collect();
    let target = frame.column(target).unwrap();
    let rows = stop.saturating_sub(first);
    let mut x = Matrix::zeros(rows, features.len());
    for (r, k) in (first..stop).enumerate() {
        for (j, c) in cols.iter().enumerate() {
            x.set(r, j, c[k]);
        }
    }
    Ok(SampleSet {
        feature_names: features.to_vec(),
        x,
        y: target[first..stop].to_vec(),
        timestamps: (first..stop).map(|k| grid.at(k)).collect(),
        split: vec![Split::Train; rows],
    })
}

/// Tags rows train/test. Chronological mode puts the last rows in the test set.
pub fn split(samples: &SampleSet, train_fraction: f64, mode: SplitMode, seed: u64) -> Result<SampleSet> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let n = samples.len();
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 rows to split, got {n}")));
    }
    let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut tags = vec![Split::Test; n];
    match mode {
        SplitMode::Chronological => tags[..n_train].fill(Split::Train),
        SplitMode::Random => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut crate::rng::seeded(seed));
            for &i in &idx[..n_train] {
                tags[i] = Split::Train;
            }
        }
    }
    Ok(SampleSet {
        split: tags,
        ..samples.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::fill::Grid;
    use crate::ingest::shifts::ShiftLabel;
    use std::collections::BTreeMap;

    fn frame(len: usize, names: &[&str]) -> AlignedFrame {
        let grid = Grid {
            start: Timestamp::parse("2022/02/08 06:00:00").unwrap(),
            step_ms: 2000,
            length: len,
        };
        let cols: BTreeMap<String, Vec<f64>> = names
            .iter()
            .enumerate()
            .map(|(j, n)| (n.to_string(), (0..len).map(|k| (k * 100 + j) as f64).collect()))
            .collect();
        AlignedFrame::new(grid, cols).unwrap()
    }

    fn shift_over(f: &AlignedFrame, a: usize, b: usize) -> ShiftWindow {
        ShiftWindow {
            start: f.grid().at(a),
            end: f.grid().at(b),
            label: ShiftLabel::Morning,
            truncated: false,
        }
    }

    #[test]
    fn six_hour_shift_has_10800_rows() {
        let names: Vec<String> = (1..=39).map(|i| format!("C{i}")).collect();
        let mut all: Vec<&str> = names.iter().map(String::as_str).collect();
        all.push("Y");
        let f = frame(10_900, &all);
        let sh = ShiftWindow {
            start: f.grid().at(20),
            end: f.grid().at(20).add_millis(6 * 3600 * 1000),
            label: ShiftLabel::Morning,
            truncated: false,
        };
        let s = build_samples(&f, &sh, &names, "Y").unwrap();
        assert_eq!((s.x.rows(), s.x.cols()), (10_800, 39));
        assert_eq!(s.group_sizes(), [0, 0, 39, 0]);
    }

    #[test]
    fn empty_feature_list_rejected() {
        let f = frame(10, &["A1", "Y"]);
        assert!(build_samples(&f, &shift_over(&f, 1, 5), &[], "Y").is_err());
    }

    #[test]
    fn unknown_columns_listed() {
        let f = frame(10, &["A1", "Y"]);
        let err = build_samples(&f, &shift_over(&f, 1, 5), &["A1".into(), "B9".into()], "Z").unwrap_err();
        match err {
            Error::MissingColumns(m) => assert_eq!(m, vec!["B9".to_string(), "Z".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rows_equal_frame_slices() {
        let f = frame(50, &["A1", "B2", "D3", "Y"]);
        let feats = vec!["D3".to_string(), "A1".to_string()];
        let s = build_samples(&f, &shift_over(&f, 7, 19), &feats, "Y").unwrap();
        assert_eq!(s.len(), 12);
        for r in 0..s.len() {
            let k = 7 + r;
            assert_eq!(s.x.row(r), &[f.column("D3").unwrap()[k], f.column("A1").unwrap()[k]]);
            assert_eq!(s.y[r], f.column("Y").unwrap()[k]);
            assert_eq!(s.timestamps[r], f.grid().at(k));
        }
        assert_eq!(s.group_sizes(), [1, 0, 0, 1]);
    }

    fn rows(n: usize) -> SampleSet {
        let f = frame(n + 2, &["A1", "Y"]);
        build_samples(&f, &shift_over(&f, 1, n + 1), &["A1".into()], "Y").unwrap()
    }

    #[test]
    fn split_counts() {
        let s = split(&rows(100), 0.85, SplitMode::Chronological, 0).unwrap();
        assert_eq!(s.subset(Split::Train).len(), 85);
        assert_eq!(s.subset(Split::Test).len(), 15);
        assert!(s.split[..85].iter().all(|&t| t == Split::Train));
        let s = split(&rows(10_800), 0.85, SplitMode::Random, 4).unwrap();
        assert_eq!(s.subset(Split::Train).len(), 9180);
        assert_eq!(s.subset(Split::Test).len(), 1620);
    }

    #[test]
    fn split_is_deterministic() {
        let a = split(&rows(300), 0.85, SplitMode::Random, 9).unwrap();
        let b = split(&rows(300), 0.85, SplitMode::Random, 9).unwrap();
        assert_eq!(a.split, b.split);
    }

    #[test]
    fn split_rejects_degenerate_input() {
        assert!(split(&rows(1), 0.85, SplitMode::Chronological, 0).is_err());
        assert!(split(&rows(10), 1.0, SplitMode::Chronological, 0).is_err());
        assert!(split(&rows(10), 0.0, SplitMode::Chronological, 0).is_err());
    }

    #[test]
    fn split_preserves_row_count() {
        for n in [2, 3, 17, 1000] {
            let s = split(&rows(n), 0.85, SplitMode::Chronological, 1).unwrap();
            assert_eq!(s.subset(Split::Train).len() + s.subset(Split::Test).len(), n);
        }
    }
}
