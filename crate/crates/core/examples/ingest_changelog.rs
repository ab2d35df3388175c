//! Parse a change-only log, fill it onto the 2 s grid, repair a faulty
//! counter and find the production shifts.

use drawres::ingest::{
    bridge_masked_faults, clean_counter, detect_shifts, forward_fill, read_change_log, AlignedFrame, Grid,
};
use drawres::Timestamp;

const LOG: &str = "\
timestamp,indicator,value
2022/02/07 10:51:30.000,A,7002
2022/02/07 10:51:30.000,B,58
2022/02/07 10:51:32.000,A,8209
2022/02/07 10:51:36.000,A,9492
2022/02/07 10:51:44.000,A,9494
2022/02/07 10:51:46.000,A,9498
2022/02/07 10:52:06.000,B,59
2022/02/07 10:52:16.000,B,57
";

fn main() -> drawres::Result<()> {
    let series = read_change_log(LOG.as_bytes())?;
    for (id, s) in &series {
        println!("{id}: {} change records", s.len());
    }

    let start = Timestamp::parse("2022/02/07 10:51:30").unwrap();
    let end = Timestamp::parse("2022/02/07 10:51:50").unwrap();
    let filled = forward_fill(&series["A"], start, end, 2000)?;
    println!("A filled: {filled:?}");

    let frame = AlignedFrame::from_series(&series, "A", 2000)?;
    println!("frame: {} columns x {} points", frame.columns().len(), frame.len());

    // A per-shift counter with one spurious jump and a dropout to zero.
    let mut counter: Vec<f64> = (0..40).map(|k| if k < 5 || k >= 35 { 0.0 } else { 333.0 * (k - 4) as f64 }).collect();
    counter[15] += 40_000.0;
    counter[20] = 0.0;
    let cleaned = bridge_masked_faults(&clean_counter(&counter, 2000.0), 2000.0);
    let grid = Grid::spanning(start, start.add_millis(39 * 2000), 2000)?;
    for w in detect_shifts(&cleaned, &grid, 2000.0) {
        println!("shift {} .. {} ({})", w.start, w.end, w.label);
    }
    Ok(())
}
