use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::time::Timestamp;

/// One row of the change-only export: `timestamp,indicator,value`.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub timestamp: Timestamp,
    pub indicator: Arc<str>,
    pub value: f64,
}

impl Record {
    pub fn new(timestamp: Timestamp, indicator: impl Into<Arc<str>>, value: f64) -> Self {
        Self {
            timestamp,
            indicator: indicator.into(),
            value,
        }
    }
}

/// One indicator's sparse change-only history.
///
/// Timestamps are strictly increasing and consecutive values differ.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeLogSeries {
    indicator_id: String,
    entries: Vec<(Timestamp, f64)>,
}

impl ChangeLogSeries {
    /// Builds a series from time-ordered entries. Entries that repeat the
    /// previous value carry no information under forward fill and are dropped.
    pub fn new(indicator_id: impl Into<String>, entries: Vec<(Timestamp, f64)>) -> Result<Self> {
        let indicator_id = indicator_id.into();
        let mut kept: Vec<(Timestamp, f64)> = Vec::with_capacity(entries.len());
        let mut last: Option<(Timestamp, f64)> = None;
        for (t, v) in entries {
            if let Some((pt, pv)) = last {
                if t == pt {
                    return Err(Error::DuplicateTimestamp {
                        indicator: indicator_id,
                        at: t,
                    });
                }
                if t < pt {
                    return Err(Error::Ordering {
                        indicator: indicator_id,
                        previous: pt,
                        at: t,
                    });
                }
                last = Some((t, v));
                if v == pv {
                    continue;
                }
            } else {
                last = Some((t, v));
            }
            kept.push((t, v));
        }
        Ok(Self {
            indicator_id,
            entries: kept,
        })
    }

    pub fn indicator_id(&self) -> &str {
        &self.indicator_id
    }

    pub fn entries(&self) -> &[(Timestamp, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn first_timestamp(&self) -> Option<Timestamp> {
        self.entries.first().map(|e| e.0)
    }

    pub fn last_timestamp(&self) -> Option<Timestamp> {
        self.entries.last().map(|e| e.0)
    }
}

/// Groups a record stream per indicator, preserving each indicator's order.
///
/// Records of different indicators may interleave arbitrarily; within one
/// indicator timestamps must be non-decreasing and never repeat.
pub fn group_records<I>(records: I) -> Result<BTreeMap<String, ChangeLogSeries>>
where
    I: IntoIterator<Item = Record>,
{
    let mut grouped: BTreeMap<Arc<str>, Vec<(Timestamp, f64)>> = BTreeMap::new();
    for r in records {
        grouped
            .entry(r.indicator)
            .or_default()
            .push((r.timestamp, r.value));
    }
    grouped
        .into_iter()
        .map(|(id, entries)| {
            let series = ChangeLogSeries::new(id.as_ref(), entries)?;
            Ok((id.to_string(), series))
        })
        .collect()
}

/// Parses a `timestamp,indicator,value` CSV export into per-indicator series.
pub fn read_change_log<R: Read>(reader: R) -> Result<BTreeMap<String, ChangeLogSeries>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["timestamp", "indicator", "value"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| !h.eq_ignore_ascii_case(e)) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `timestamp,indicator,value`, found {headers:?}"),
        });
    }
    let mut interned: BTreeMap<String, Arc<str>> = BTreeMap::new();
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 fields, found {}", row.len()),
            });
        }
        let timestamp = Timestamp::parse(&row[0]).ok_or_else(|| Error::Parse {
            line,
            message: format!("malformed timestamp {:?}", &row[0]),
        })?;
        let value: f64 = row[2].parse().map_err(|_| Error::Parse {
            line,
            message: format!("malformed value {:?}", &row[2]),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("non-finite value {:?}", &row[2]),
            });
        }
        let id = match interned.get(&row[1]) {
            Some(id) => id.clone(),
            None => {
                let id: Arc<str> = Arc::from(&row[1]);
                interned.insert(row[1].to_string(), id.clone());
                id
            }
        };
        records.push(Record {
            timestamp,
            indicator: id,
            value,
        });
    }
    group_records(records)
}

pub fn write_change_log<W: Write>(writer: W, records: &[Record]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp", "indicator", "value"])?;
    for r in records {
        w.write_record([
            r.timestamp.to_string(),
            r.indicator.to_string(),
            r.value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> Timestamp {
        Timestamp::parse(s).unwrap()
    }

    #[test]
    fn table_row_parses() {
        let csv = "timestamp,indicator,value\n2022/02/07 10:51:30.000, A, 7002\n";
        let map = read_change_log(csv.as_bytes()).unwrap();
        let a = &map["A"];
        assert_eq!(a.entries(), &[(ts("2022/02/07 10:51:30.000"), 7002.0)]);
    }

    #[test]
    fn empty_stream_is_empty_map() {
        let map = read_change_log("timestamp,indicator,value\n".as_bytes()).unwrap();
        assert!(map.is_empty());
        assert!(group_records(Vec::new()).unwrap().is_empty());
    }

    #[test]
    fn malformed_value_names_line() {
        let csv = "timestamp,indicator,value\n2022/02/07 10:51:30.000,A,1\n2022/02/07 10:51:32.000,A,x\n";
        match read_change_log(csv.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_timestamp_names_line() {
        let csv = "timestamp,indicator,value\nyesterday,A,1\n";
        match read_change_log(csv.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("timestamp"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn decreasing_timestamp_is_ordering_error() {
        let csv = "timestamp,indicator,value\n2022/02/07 10:51:32.000,A,1\n2022/02/07 10:51:30.000,A,2\n";
        assert!(matches!(
            read_change_log(csv.as_bytes()),
            Err(Error::Ordering { .. })
        ));
    }

    #[test]
    fn duplicate_timestamp_rejected() {
        let csv = "timestamp,indicator,value\n2022/02/07 10:51:32.000,A,1\n2022/02/07 10:51:32.000,A,2\n";
        assert!(matches!(
            read_change_log(csv.as_bytes()),
            Err(Error::DuplicateTimestamp { .. })
        ));
    }

    #[test]
    fn repeated_values_collapse() {
        let s = ChangeLogSeries::new(
            "A",
            vec![(Timestamp(0), 1.0), (Timestamp(2000), 1.0), (Timestamp(4000), 2.0)],
        )
        .unwrap();
        assert_eq!(s.entries(), &[(Timestamp(0), 1.0), (Timestamp(4000), 2.0)]);
    }
}
