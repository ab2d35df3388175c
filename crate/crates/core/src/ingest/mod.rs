//! Change-log ingestion: parse change-only sensor logs, fill them onto a
//! uniform grid, clean counter faults, segment shifts and build samples.

mod changelog;
mod fill;
mod samples;
mod shifts;

pub use changelog::{group_records, read_change_log, write_change_log, ChangeLogSeries, Record};
pub use fill::{forward_fill, AlignedFrame, Grid, DEFAULT_STEP_MS};
pub use samples::{build_samples, split, IndicatorGroup, SampleSet, Split, SplitMode, DEFAULT_TRAIN_FRACTION};
pub use shifts::{
    bridge_masked_faults, clean_counter, detect_shifts, read_shifts, write_shifts, ShiftLabel,
    ShiftWindow, DEFAULT_MAX_STEP,
};
