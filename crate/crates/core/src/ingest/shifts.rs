use std::fmt;
use std::io::{Read, Write};

use super::fill::Grid;
use crate::error::{Error, Result};
use crate::time::Timestamp;

/// Largest plausible counter increase per 2 s grid step.
pub const DEFAULT_MAX_STEP: f64 = 2000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftLabel {
    Morning,
    Mid,
}

impl ShiftLabel {
    /// Morning when the detected start is before noon.
    pub fn for_start(start: Timestamp) -> Self {
        if start.hour() < 12 {
            ShiftLabel::Morning
        } else {
            ShiftLabel::Mid
        }
    }
}

impl fmt::Display for ShiftLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShiftLabel::Morning => "Morning",
            ShiftLabel::Mid => "Mid",
        })
    }
}

/// A detected production session. Sample rows cover `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftWindow {
    pub start: Timestamp,
    pub end: Timestamp,
    pub label: ShiftLabel,
    /// Window was still open when the stream ended.
    pub truncated: bool,
}

/// Zeroes every counter value whose rise over the previous grid value exceeds `max_step`.
pub fn clean_counter(values: &[f64], max_step: f64) -> Vec<f64> {
    let mut out = values.to_vec();
    for k in 1..values.len() {
        if values[k] - values[k - 1] > max_step {
            out[k] = 0.0;
        }
    }
    out
}

/// Holds the previous value over single zeros left by [`clean_counter`] in
/// the middle of production. A zero is bridged when the next value carries on
/// the count from before it (no decrease, at most two steps of growth).
pub fn bridge_masked_faults(values: &[f64], max_step: f64) -> Vec<f64> {
    let mut out = values.to_vec();
    for k in 1..values.len().saturating_sub(1) {
        let (before, after) = (out[k - 1], values[k + 1]);
        if values[k] == 0.0 && before > 0.0 && after >= before && after - before <= 2.0 * max_step {
            out[k] = before;
        }
    }
    out
}

/// Segments a cleaned cumulative counter into production windows.
///
/// A window opens where the counter rises from 0 into `(0, max_step]` and
/// closes at the point where it falls from a positive value back to 0.
pub fn detect_shifts(counter: &[f64], grid: &Grid, max_step: f64) -> Vec<ShiftWindow> {
    let mut out = Vec::new();
    let mut open: Option<usize> = None;
    for k in 1..counter.len() {
        let (prev, cur) = (counter[k - 1], counter[k]);
        match open {
            None if prev == 0.0 && cur > 0.0 && cur <= max_step => open = Some(k),
            Some(s) if prev > 0.0 && cur == 0.0 => {
                out.push(window(grid, s, k, false));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        let last = counter.len() - 1;
        out.push(window(grid, s, last, true));
    }
    out
}

fn window(grid: &Grid, start: usize, end: usize, truncated: bool) -> ShiftWindow {
    let start = grid.at(start);
    ShiftWindow {
        start,
        end: grid.at(end),
        label: ShiftLabel::for_start(start),
        truncated,
    }
}

pub fn write_shifts<W: Write>(writer: W, shifts: &[ShiftWindow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["start", "end", "label"])?;
    for s in shifts {
        w.write_record([s.start.to_string(), s.end.to_string(), s.label.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_shifts<R: Read>(reader: R) -> Result<Vec<ShiftWindow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let parse = |s: &str| {
            Timestamp::parse(s).ok_or_else(|| Error::Parse {
                line,
                message: format!("malformed timestamp {s:?}"),
            })
        };
        let start = parse(&row[0])?;
        let end = parse(&row[1])?;
        let label = match &row[2] {
            "Morning" => ShiftLabel::Morning,
            "Mid" => ShiftLabel::Mid,
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown shift label {other:?}"),
                })
            }
        };
        out.push(ShiftWindow {
            start,
            end,
            label,
            truncated: false,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn grid(len: usize) -> Grid {
        Grid {
            start: Timestamp::parse("2022/02/08 06:40:00").unwrap(),
            step_ms: 2000,
            length: len,
        }
    }

    #[test]
    fn jump_zeroed() {
        let v = [23449.0, 23451.0, 23453.0, 73453.0, 23455.0];
        assert_eq!(clean_counter(&v, 2000.0), vec![23449.0, 23451.0, 23453.0, 0.0, 23455.0]);
    }

    #[test]
    fn steady_counter_untouched() {
        let v: Vec<f64> = (0..100).map(|k| k as f64 * 1999.0).collect();
        assert_eq!(clean_counter(&v, 2000.0), v);
    }

    #[test]
    fn injected_jumps_all_found() {
        let mut rng = crate::rng::seeded(3);
        let mut v: Vec<f64> = (0..5000).map(|k| 500.0 + k as f64 * 333.0).collect();
        let mut injected = Vec::new();
        let mut k = 10;
        while k < v.len() - 10 {
            v[k] += rng.gen_range(10_000.0..60_000.0);
            injected.push(k);
            k += rng.gen_range(3..200);
        }
        let cleaned = clean_counter(&v, 2000.0);
        let zeroed: Vec<usize> = (0..v.len()).filter(|&k| cleaned[k] != v[k]).collect();
        assert_eq!(zeroed, injected);
    }

    #[test]
    fn single_production_episode() {
        let mut c = vec![0.0; 10];
        c.extend((0..50).map(|k| 1500.0 + 800.0 * k as f64));
        c.extend(vec![0.0; 5]);
        let g = grid(c.len());
        let w = detect_shifts(&c, &g, 2000.0);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].start, g.at(10));
        assert_eq!(w[0].end, g.at(60));
        assert_eq!(w[0].label, ShiftLabel::Morning);
        assert!(!w[0].truncated);
    }

    #[test]
    fn all_zero_counter_has_no_shift() {
        assert!(detect_shifts(&[0.0; 20], &grid(20), 2000.0).is_empty());
    }

    #[test]
    fn two_episodes_two_disjoint_windows() {
        let mut c = vec![0.0; 3];
        c.extend((1..=20).map(|k| k as f64 * 300.0));
        c.extend(vec![0.0; 4]);
        c.extend((1..=10).map(|k| k as f64 * 300.0));
        c.push(0.0);
        let g = grid(c.len());
        let w = detect_shifts(&c, &g, 2000.0);
        assert_eq!(w.len(), 2);
        assert_eq!((w[0].start, w[0].end), (g.at(3), g.at(23)));
        assert_eq!((w[1].start, w[1].end), (g.at(27), g.at(37)));
        assert!(w[0].end < w[1].start);
    }

    #[test]
    fn unterminated_window_is_truncated() {
        let c = [0.0, 0.0, 100.0, 400.0, 700.0];
        let g = grid(c.len());
        let w = detect_shifts(&c, &g, 2000.0);
        assert_eq!(w.len(), 1);
        assert!(w[0].truncated);
        assert_eq!(w[0].end, g.at(4));
    }

    #[test]
    fn afternoon_start_is_mid() {
        let mut g = grid(6);
        g.start = Timestamp::parse("2022/02/08 15:26:50").unwrap();
        let w = detect_shifts(&[0.0, 10.0, 20.0, 30.0, 0.0, 0.0], &g, 2000.0);
        assert_eq!(w[0].label, ShiftLabel::Mid);
    }

    #[test]
    fn bridged_fault_keeps_shift_whole() {
        let raw = [0.0, 300.0, 600.0, 60_000.0, 1200.0, 1500.0, 0.0];
        let cleaned = clean_counter(&raw, 2000.0);
        assert_eq!(cleaned[3], 0.0);
        let bridged = bridge_masked_faults(&cleaned, 2000.0);
        assert_eq!(bridged, vec![0.0, 300.0, 600.0, 600.0, 1200.0, 1500.0, 0.0]);
        let g = grid(raw.len());
        let w = detect_shifts(&bridged, &g, 2000.0);
        assert_eq!(w.len(), 1);
        assert_eq!((w[0].start, w[0].end), (g.at(1), g.at(6)));
    }

    #[test]
    fn windows_never_contain_interior_zero() {
        let mut rng = crate::rng::seeded(11);
        let c: Vec<f64> = (0..3000)
            .map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..5000.0) })
            .collect();
        let g = grid(c.len());
        let ws = detect_shifts(&c, &g, 2000.0);
        for pair in ws.windows(2) {
            assert!(pair[0].end < pair[1].start);
        }
        for w in &ws {
            let s = ((w.start.0 - g.start.0) / 2000) as usize;
            let e = ((w.end.0 - g.start.0) / 2000) as usize;
            let interior = if w.truncated { s..e + 1 } else { s..e };
            assert!(c[interior].iter().all(|&v| v != 0.0));
        }
    }

    #[test]
    fn zero_before_fresh_start_is_not_bridged() {
        let c = [0.0, 30_000.0, 0.0, 400.0, 700.0];
        assert_eq!(bridge_masked_faults(&c, 2000.0), c.to_vec());
    }

    #[test]
    fn shifts_csv_round_trip() {
        let g = grid(40);
        let ws = vec![window(&g, 2, 10, false), window(&g, 12, 30, false)];
        let mut buf = Vec::new();
        write_shifts(&mut buf, &ws).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("start,end,label\n"));
        assert_eq!(read_shifts(buf.as_slice()).unwrap(), ws);
    }
}
