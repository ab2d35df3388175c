use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;

use super::changelog::ChangeLogSeries;
use crate::error::{Error, Result};
use crate::time::Timestamp;

pub const DEFAULT_STEP_MS: i64 = 2000;

/// Uniform time grid: point `k` sits at `start + k * step_ms`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub start: Timestamp,
    pub step_ms: i64,
    pub length: usize,
}

impl Grid {
    pub fn spanning(start: Timestamp, end: Timestamp, step_ms: i64) -> Result<Self> {
        if step_ms <= 0 {
            return Err(Error::invalid("grid step must be positive"));
        }
        if end < start {
            return Err(Error::invalid(format!("grid end {end} precedes start {start}")));
        }
        let length = ((end.0 - start.0) / step_ms) as usize + 1;
        Ok(Self {
            start,
            step_ms,
            length,
        })
    }

    #[inline]
    pub fn at(&self, k: usize) -> Timestamp {
        self.start.add_millis(k as i64 * self.step_ms)
    }

    /// Index of the first grid point at or after `t`.
    pub fn ceil_index(&self, t: Timestamp) -> usize {
        if t <= self.start {
            return 0;
        }
        let d = t.0 - self.start.0;
        ((d + self.step_ms - 1) / self.step_ms) as usize
    }

    pub fn end(&self) -> Timestamp {
        self.at(self.length.saturating_sub(1))
    }
}

/// Samples `series` on the grid `[grid_start, grid_end]` by carrying the latest
/// observed value forward. No value is invented before the first observation.
pub fn forward_fill(
    series: &ChangeLogSeries,
    grid_start: Timestamp,
    grid_end: Timestamp,
    step_ms: i64,
) -> Result<Vec<f64>> {
    let grid = Grid::spanning(grid_start, grid_end, step_ms)?;
    fill_on_grid(series, &grid)
}

fn fill_on_grid(series: &ChangeLogSeries, grid: &Grid) -> Result<Vec<f64>> {
    let entries = series.entries();
    let first = series
        .first_timestamp()
        .ok_or_else(|| Error::invalid(format!("series {} is empty", series.indicator_id())))?;
    if grid.start < first {
        return Err(Error::NoBackfill {
            indicator: series.indicator_id().to_string(),
            grid_start: grid.start,
            first,
        });
    }
    let mut out = Vec::with_capacity(grid.length);
    let mut cursor = 0usize;
    for k in 0..grid.length {
        let t = grid.at(k);
        while cursor + 1 < entries.len() && entries[cursor + 1].0 <= t {
            cursor += 1;
        }
        out.push(entries[cursor].1);
    }
    Ok(out)
}

/// All indicators resampled onto one uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedFrame {
    grid: Grid,
    columns: BTreeMap<String, Vec<f64>>,
}

impl AlignedFrame {
    pub fn new(grid: Grid, columns: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        if let Some((name, col)) = columns.iter().find(|(_, c)| c.len() != grid.length) {
            return Err(Error::invalid(format!(
                "column {name} has {} values, grid has {}",
                col.len(),
                grid.length
            )));
        }
        Ok(Self { grid, columns })
    }

    /// Fills every series onto the grid that starts at the first record of
    /// `reference` and ends at the latest record of any series.
    pub fn from_series(
        series: &BTreeMap<String, ChangeLogSeries>,
        reference: &str,
        step_ms: i64,
    ) -> Result<Self> {
        let start = series
            .get(reference)
            .and_then(ChangeLogSeries::first_timestamp)
            .ok_or_else(|| Error::MissingColumns(vec![reference.to_string()]))?;
        let end = series
            .values()
            .filter_map(ChangeLogSeries::last_timestamp)
            .max()
            .unwrap_or(start);
        let grid = Grid::spanning(start, end, step_ms)?;
        let filled: Result<Vec<(String, Vec<f64>)>> = series
            .par_iter()
            .map(|(id, s)| Ok((id.clone(), fill_on_grid(s, &grid)?)))
            .collect();
        Self::new(grid, filled?.into_iter().collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.length
    }

    pub fn is_empty(&self) -> bool {
        self.grid.length == 0
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.get(name).map(Vec::as_slice)
    }

    pub fn columns(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.columns
    }

    pub fn indicator_ids(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["timestamp".to_string()];
        header.extend(self.columns.keys().cloned());
        w.write_record(&header)?;
        let cols: Vec<&Vec<f64>> = self.columns.values().collect();
        let mut row = Vec::with_capacity(cols.len() + 1);
        for k in 0..self.grid.length {
            row.clear();
            row.push(self.grid.at(k).to_string());
            row.extend(cols.iter().map(|c| c[k].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("timestamp") {
            return Err(Error::Parse {
                line: 1,
                message: "first column must be `timestamp`".into(),
            });
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
        let mut stamps = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line() as usize);
            let t = Timestamp::parse(&row[0]).ok_or_else(|| Error::Parse {
                line,
                message: format!("malformed timestamp {:?}", &row[0]),
            })?;
            stamps.push(t);
            for (j, col) in cols.iter_mut().enumerate() {
                let v: f64 = row.get(j + 1).unwrap_or("").parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("malformed value in column {}", names[j]),
                })?;
                col.push(v);
            }
        }
        let start = *stamps.first().ok_or_else(|| Error::Parse {
            line: 1,
            message: "frame has no rows".into(),
        })?;
        let step_ms = if stamps.len() > 1 {
            stamps[1].0 - stamps[0].0
        } else {
            DEFAULT_STEP_MS
        };
        let grid = Grid {
            start,
            step_ms,
            length: stamps.len(),
        };
        if let Some(k) = (0..stamps.len()).find(|&k| stamps[k] != grid.at(k)) {
            return Err(Error::Parse {
                line: k + 2,
                message: "timestamps are not on a uniform grid".into(),
            });
        }
        Self::new(grid, names.into_iter().zip(cols).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn ts(s: &str) -> Timestamp {
        Timestamp::parse(s).unwrap()
    }

    #[test]
    fn carries_value_between_changes() {
        let s = ChangeLogSeries::new(
            "A",
            vec![
                (ts("2022/02/07 10:51:32"), 8209.0),
                (ts("2022/02/07 10:51:36"), 9492.0),
            ],
        )
        .unwrap();
        let v = forward_fill(&s, ts("2022/02/07 10:51:32"), ts("2022/02/07 10:51:36"), 2000).unwrap();
        assert_eq!(v, vec![8209.0, 8209.0, 9492.0]);
    }

    #[test]
    fn single_entry_fills_constant() {
        let t0 = Timestamp(1_000_000);
        let s = ChangeLogSeries::new("A", vec![(t0, 4.5)]).unwrap();
        let v = forward_fill(&s, t0, t0.add_millis(10 * 2000), 2000).unwrap();
        assert_eq!(v, vec![4.5; 11]);
    }

    #[test]
    fn no_backfill() {
        let s = ChangeLogSeries::new("A", vec![(Timestamp(10_000), 1.0)]).unwrap();
        assert!(matches!(
            forward_fill(&s, Timestamp(8_000), Timestamp(12_000), 2000),
            Err(Error::NoBackfill { .. })
        ));
    }

    #[test]
    fn length_is_floor_plus_one() {
        let s = ChangeLogSeries::new("A", vec![(Timestamp(0), 1.0)]).unwrap();
        assert_eq!(forward_fill(&s, Timestamp(0), Timestamp(4999), 2000).unwrap().len(), 3);
    }

    #[test]
    fn matches_linear_scan_oracle() {
        let mut rng = crate::rng::seeded(7);
        let mut t = 0i64;
        let mut entries = Vec::new();
        let mut last = f64::NAN;
        while entries.len() < 1000 {
            t += rng.gen_range(1..9000);
            let v = rng.gen_range(0..50) as f64;
            if v != last {
                entries.push((Timestamp(t), v));
                last = v;
            }
        }
        let s = ChangeLogSeries::new("A", entries.clone()).unwrap();
        let start = entries[0].0;
        let end = entries.last().unwrap().0.add_millis(5000);
        let filled = forward_fill(&s, start, end, 2000).unwrap();
        for (k, &v) in filled.iter().enumerate() {
            let tk = start.add_millis(2000 * k as i64);
            // oracle: latest entry with timestamp <= tk, by full scan
            let expected = entries.iter().filter(|e| e.0 <= tk).last().unwrap().1;
            assert_eq!(v, expected, "grid point {k}");
        }
    }

    proptest! {
        #[test]
        fn refilling_a_uniform_column_reproduces_it(values in proptest::collection::vec(0i32..5, 1..200)) {
            let values: Vec<f64> = values.into_iter().map(f64::from).collect();
            let entries: Vec<(Timestamp, f64)> = values
                .iter()
                .enumerate()
                .map(|(k, &v)| (Timestamp(k as i64 * 2000), v))
                .collect();
            let s = ChangeLogSeries::new("A", entries).unwrap();
            let end = Timestamp((values.len() as i64 - 1) * 2000);
            let filled = forward_fill(&s, Timestamp(0), end, 2000).unwrap();
            prop_assert_eq!(&filled, &values);
            for v in &filled {
                prop_assert!(s.entries().iter().any(|e| e.1 == *v));
            }
        }
    }

    #[test]
    fn frame_csv_round_trip() {
        let grid = Grid {
            start: ts("2022/02/07 10:51:30"),
            step_ms: 2000,
            length: 3,
        };
        let mut cols = BTreeMap::new();
        cols.insert("A".to_string(), vec![1.0, 2.5, 0.1]);
        cols.insert("B".to_string(), vec![-3.0, 1e-9, 7.0]);
        let f = AlignedFrame::new(grid, cols).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("timestamp,A,B\n2022/02/07 10:51:30.000,1,-3\n"));
        assert_eq!(AlignedFrame::read_csv(buf.as_slice()).unwrap(), f);
    }
}
