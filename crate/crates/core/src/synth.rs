//! Synthetic production telemetry with planted dependencies and injected
//! data-quality faults.
//!
//! Each candidate indicator is a held, quantised AR(1) signal. Draw
//! resistance is computed from the *logged* indicator values, so planted
//! linear terms are exactly affine in what the ingest path recovers. Reject
//! clusters are single-point process upsets that push every planted direct
//! indicator in the direction that drives draw resistance out of the spec
//! band.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use chrono::{NaiveDate, NaiveTime};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{write_shifts, Grid, Record, ShiftLabel, ShiftWindow};
use crate::predictors::SpecLimits;
use crate::rng;
use crate::time::Timestamp;

pub const TARGET: &str = "draw_resistance";
pub const COUNTER: &str = "cigarettes_total";
pub const HOURS: &str = "hours_worked";

/// Latent signals are clipped to this many standard deviations.
const LATENT_CLIP: f64 = 3.5;
/// Variance of `1[|z| > 1]` for standard normal `z`.
const THRESHOLD_VARIANCE: f64 = 0.2165;
const HOLD_CHOICES: [usize; 6] = [1, 1, 1, 2, 2, 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupSizes {
    pub raw: usize,
    pub ve: usize,
    pub se: usize,
    pub max: usize,
}

impl Default for GroupSizes {
    fn default() -> Self {
        Self {
            raw: 7,
            ve: 20,
            se: 30,
            max: 25,
        }
    }
}

impl GroupSizes {
    pub fn total(&self) -> usize {
        self.raw + self.ve + self.se + self.max
    }

    /// `A1..`, `B1..`, `C1..`, `D1..` in group order.
    pub fn indicator_ids(&self) -> Vec<String> {
        [('A', self.raw), ('B', self.ve), ('C', self.se), ('D', self.max)]
            .iter()
            .flat_map(|&(g, n)| (1..=n).map(move |k| format!("{g}{k}")))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedDirect {
    pub indicator: String,
    /// Pa per standard deviation of the indicator.
    pub coefficient: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    /// `z^2 - 1`
    Square,
    /// `z * z_partner`
    ProductPair,
    /// `1[|z| > 1]`, centred
    Threshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedPotential {
    pub indicator: String,
    pub transform: Transform,
    /// Second factor of a product pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partner: Option<String>,
    pub coefficient: f64,
}

/// Nominal production span within a day, `HH:MM:SS`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSpan {
    pub start: String,
    pub end: String,
}

/// Rejects per shift, placed in periods drawn from `Normal(center, spread^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RejectCluster {
    /// Periods per shift.
    pub periods: usize,
    /// 1-based centre period.
    pub center: f64,
    pub spread: f64,
    /// Rejects per shift.
    pub count: usize,
}

impl Default for RejectCluster {
    fn default() -> Self {
        Self {
            periods: 100,
            center: 50.0,
            spread: 1.16,
            count: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub groups: GroupSizes,
    pub step_ms: i64,
    /// First production day, `YYYY/MM/DD` or `YYYY-MM-DD`.
    pub start_date: String,
    pub days: usize,
    pub shift_schedule: Vec<ShiftSpan>,
    /// Actual shift boundaries drift uniformly by up to this many seconds.
    pub boundary_jitter_s: i64,
    /// Nominal draw resistance (Pa).
    pub base: f64,
    pub planted_direct: Vec<PlantedDirect>,
    pub planted_potential: Vec<PlantedPotential>,
    /// Standard deviation of additive Gaussian noise on draw resistance (Pa).
    pub noise_sd: f64,
    /// AR(1) coefficient of indicator latents.
    pub persistence: f64,
    pub reject_cluster: Option<RejectCluster>,
    pub limits: SpecLimits,
    /// Mean cigarettes per grid step.
    pub counter_rate: f64,
    /// Per-point probability of a spurious counter jump during production.
    pub counter_fault_rate: f64,
    /// Per idle gap probability of a spurious off-hours restart of the
    /// hours-worked counter.
    pub hours_reset_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let groups = GroupSizes::default();
        let (planted_direct, planted_potential) = default_planting(&groups);
        Self {
            seed: 0,
            groups,
            step_ms: 2000,
            start_date: "2022/02/07".into(),
            days: 1,
            shift_schedule: vec![
                ShiftSpan {
                    start: "07:00:00".into(),
                    end: "08:00:00".into(),
                },
                ShiftSpan {
                    start: "15:30:00".into(),
                    end: "16:30:00".into(),
                },
            ],
            boundary_jitter_s: 300,
            base: 1100.0,
            planted_direct,
            planted_potential,
            noise_sd: 0.5f64.sqrt(),
            persistence: 0.3,
            reject_cluster: Some(RejectCluster::default()),
            limits: SpecLimits::default(),
            counter_rate: 333.0,
            counter_fault_rate: 5e-4,
            hours_reset_rate: 0.5,
        }
    }
}

/// Default planting. Direct: 28 indicators (every third id), four dominant
/// ones carrying 20 Pa^2 of variance each and 24 minor ones 2.35 Pa^2 each,
/// signs alternating. Potential: 8 indicators carrying two squares (5 and
/// 0.5 Pa^2), two product pairs (1 and 0.5 Pa^2) and two thresholds
/// (0.25 Pa^2 each).
pub fn default_planting(groups: &GroupSizes) -> (Vec<PlantedDirect>, Vec<PlantedPotential>) {
    let ids = groups.indicator_ids();
    let direct = (0..ids.len())
        .step_by(3)
        .take(28)
        .enumerate()
        .map(|(k, i)| {
            let b = if k < 4 { 20f64.sqrt() } else { 2.35f64.sqrt() };
            PlantedDirect {
                indicator: ids[i].clone(),
                coefficient: if k % 2 == 0 { b } else { -b },
            }
        })
        .collect();
    let free: Vec<&String> = (0..ids.len())
        .filter(|i| i % 3 == 1)
        .map(|i| &ids[i])
        .collect();
    // coefficients giving each term the stated variance (Pa^2)
    let sq = |v: f64| (v / 2.0).sqrt();
    let th = |v: f64| (v / THRESHOLD_VARIANCE).sqrt();
    let pot = |k: usize, t: Transform, partner: Option<usize>, c: f64| PlantedPotential {
        indicator: free[k].clone(),
        transform: t,
        partner: partner.map(|p| free[p].clone()),
        coefficient: c,
    };
    let potential = if free.len() >= 8 {
        vec![
            pot(0, Transform::Square, None, sq(5.0)),
            pot(1, Transform::Square, None, sq(0.5)),
            pot(2, Transform::ProductPair, Some(3), 1.0),
            pot(4, Transform::ProductPair, Some(5), 0.5f64.sqrt()),
            pot(6, Transform::Threshold, None, th(0.25)),
            pot(7, Transform::Threshold, None, th(0.25)),
        ]
    } else {
        Vec::new()
    };
    (direct, potential)
}

/// Per-indicator logging constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub center: f64,
    pub scale: f64,
    /// Values are multiples of `10^decimals_exp`.
    pub decimals_exp: i32,
    /// Latent updates happen every `hold` grid points.
    pub hold: usize,
}

impl Channel {
    fn quantise(&self, v: f64) -> f64 {
        let e = self.decimals_exp;
        if e < 0 {
            let m = 10f64.powi(-e);
            (v * m).round() / m
        } else {
            let q = 10f64.powi(e);
            (v / q).round() * q
        }
    }

    /// Standardised value of a logged reading.
    pub fn standardise(&self, v: f64) -> f64 {
        (v - self.center) / self.scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultKind {
    CounterJump,
    HoursRestart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fault {
    pub index: usize,
    pub indicator: &'static str,
    pub kind: FaultKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub grid: Grid,
    /// Every logged column (indicators, target, counters) at every grid point.
    pub observed: BTreeMap<String, Vec<f64>>,
    pub draw_resistance: Vec<f64>,
    pub reject_mask: Vec<bool>,
    /// Reject points produced by planted upsets.
    pub planted_rejects: Vec<usize>,
    pub direct: Vec<String>,
    pub potential: Vec<String>,
    /// True production windows, closing index exclusive.
    pub shifts: Vec<ShiftWindow>,
    pub shift_ranges: Vec<(usize, usize)>,
    pub faults: Vec<Fault>,
    pub channels: BTreeMap<String, Channel>,
}

impl GroundTruth {
    pub fn shift_mask(&self, shift: usize) -> &[bool] {
        let (s, e) = self.shift_ranges[shift];
        &self.reject_mask[s..e]
    }
}

fn parse_time_of_day(s: &str) -> Result<NaiveTime> {
    NaiveTime::parse_from_str(s, "%H:%M:%S")
        .or_else(|_| NaiveTime::parse_from_str(s, "%H:%M"))
        .map_err(|_| Error::Config(format!("bad time of day `{s}` (expected HH:MM:SS)")))
}

fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y/%m/%d")
        .or_else(|_| NaiveDate::parse_from_str(s, "%Y-%m-%d"))
        .map_err(|_| Error::Config(format!("bad start_date `{s}`")))
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.groups.total() == 0 {
            return bad("at least one candidate indicator is required".into());
        }
        if self.step_ms <= 0 {
            return bad("step_ms must be positive".into());
        }
        if !(self.noise_sd >= 0.0) {
            return bad("noise_sd must be non-negative".into());
        }
        if !(0.0..1.0).contains(&self.persistence) {
            return bad("persistence must lie in [0, 1)".into());
        }
        if self.days == 0 || self.shift_schedule.is_empty() {
            return bad("need at least one day and one shift span".into());
        }
        if !(0.0..=1.0).contains(&self.counter_fault_rate) || !(0.0..=1.0).contains(&self.hours_reset_rate) {
            return bad("fault rates must lie in [0, 1]".into());
        }
        if self.counter_rate < 1.0 || self.counter_rate > 1000.0 {
            return bad("counter_rate must lie in [1, 1000] per step".into());
        }
        self.limits.validate()?;
        let ids: BTreeSet<String> = self.groups.indicator_ids().into_iter().collect();
        let mut seen = BTreeSet::new();
        let mut claim = |name: &str, role: &str| -> Result<()> {
            if !ids.contains(name) {
                return Err(Error::Config(format!("{role} indicator `{name}` is not in the catalogue")));
            }
            if !seen.insert(name.to_string()) {
                return Err(Error::Config(format!("indicator `{name}` is planted more than once")));
            }
            Ok(())
        };
        for d in &self.planted_direct {
            claim(&d.indicator, "direct")?;
        }
        for p in &self.planted_potential {
            claim(&p.indicator, "potential")?;
            match (p.transform, &p.partner) {
                (Transform::ProductPair, Some(q)) => claim(q, "partner")?,
                (Transform::ProductPair, None) => {
                    return bad(format!("product pair on `{}` needs a partner", p.indicator))
                }
                (_, Some(_)) => return bad(format!("only product pairs take a partner (`{}`)", p.indicator)),
                _ => {}
            }
        }
        if let Some(c) = &self.reject_cluster {
            if c.periods == 0 || !(c.spread > 0.0) || !c.center.is_finite() {
                return bad("reject_cluster needs periods >= 1 and spread > 0".into());
            }
            if c.count > 0 && self.planted_direct.iter().all(|d| d.coefficient == 0.0) {
                return bad("reject upsets need at least one non-zero direct coefficient".into());
            }
        }
        let mut spans = Vec::new();
        for s in &self.shift_schedule {
            let (a, b) = (parse_time_of_day(&s.start)?, parse_time_of_day(&s.end)?);
            if b <= a {
                return bad(format!("shift span {}-{} must end after it starts", s.start, s.end));
            }
            spans.push((a, b));
        }
        spans.sort();
        let j = chrono::Duration::seconds(2 * self.boundary_jitter_s.max(0) + 4 * self.step_ms / 1000 + 4);
        for w in spans.windows(2) {
            if w[1].0 - w[0].1 < j {
                return bad("shift spans overlap or are closer than twice the boundary jitter".into());
            }
        }
        parse_date(&self.start_date)?;
        Ok(())
    }

    /// Variance (Pa^2) of draw resistance under normal operation, ignoring
    /// clipping and quantisation.
    pub fn nominal_variance(&self) -> f64 {
        let lin: f64 = self.planted_direct.iter().map(|d| d.coefficient.powi(2)).sum();
        let nl: f64 = self
            .planted_potential
            .iter()
            .map(|p| {
                let v = match p.transform {
                    Transform::Square => 2.0,
                    Transform::ProductPair => 1.0,
                    Transform::Threshold => THRESHOLD_VARIANCE,
                };
                p.coefficient.powi(2) * v
            })
            .sum();
        lin + nl + self.noise_sd.powi(2)
    }
}

/// Generated records (time-ordered, change-only) and their ground truth.
pub struct SynthOutput {
    pub records: Vec<Record>,
    pub truth: GroundTruth,
}

struct Layout {
    grid: Grid,
    /// Production ranges on the grid, end exclusive.
    shifts: Vec<(usize, usize)>,
}

fn plan_layout(cfg: &SynthConfig, g: &mut ChaCha8Rng) -> Result<Layout> {
    let day0 = parse_date(&cfg.start_date)?;
    let mut spans: Vec<(NaiveTime, NaiveTime)> = cfg
        .shift_schedule
        .iter()
        .map(|s| Ok((parse_time_of_day(&s.start)?, parse_time_of_day(&s.end)?)))
        .collect::<Result<_>>()?;
    spans.sort();
    let step = cfg.step_ms;
    let lead_ms = (cfg.boundary_jitter_s.max(0) * 1000 + 60_000) / step * step + step;
    let first = day0.and_time(spans[0].0).and_utc().timestamp_millis() - lead_ms;
    let mut ranges = Vec::new();
    for day in 0..cfg.days {
        let date = day0 + chrono::Duration::days(day as i64);
        for &(a, b) in &spans {
            let jit = |g: &mut ChaCha8Rng| {
                if cfg.boundary_jitter_s > 0 {
                    g.gen_range(-cfg.boundary_jitter_s..=cfg.boundary_jitter_s) * 1000
                } else {
                    0
                }
            };
            let s = date.and_time(a).and_utc().timestamp_millis() + jit(g);
            let e = date.and_time(b).and_utc().timestamp_millis() + jit(g);
            let si = ((s - first) / step) as usize;
            let ei = ((e - first) / step) as usize;
            if ei <= si + 4 {
                return Err(Error::Config("shift span shorter than four grid steps".into()));
            }
            ranges.push((si, ei));
        }
    }
    let last_end = ranges.last().expect("at least one shift").1;
    let length = last_end + (lead_ms / step) as usize + 1;
    Ok(Layout {
        grid: Grid {
            start: Timestamp(first),
            step_ms: step,
            length,
        },
        shifts: ranges,
    })
}

fn channel(g: &mut ChaCha8Rng) -> Channel {
    // centre log-uniform over [10, 10^4), resolution about a twentieth of a
    // standard deviation rounded to a power of ten
    let center_raw = 10f64.powf(g.gen_range(1.0..4.0));
    let scale = center_raw * g.gen_range(0.01..0.05);
    let decimals_exp = (scale / 20.0).log10().floor() as i32;
    let m = 10f64.powi(decimals_exp);
    Channel {
        center: (center_raw / m).round() * m,
        scale,
        decimals_exp,
        hold: HOLD_CHOICES[g.gen_range(0..HOLD_CHOICES.len())],
    }
}

/// Deterministic generation of telemetry and ground truth.
pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let ids = cfg.groups.indicator_ids();
    let mut g_layout = rng::derived(cfg.seed, 1);
    let layout = plan_layout(cfg, &mut g_layout)?;
    let n = layout.grid.length;
    let mut in_shift = vec![false; n];
    for &(s, e) in &layout.shifts {
        in_shift[s..e].fill(true);
    }

    let mut g_cat = rng::derived(cfg.seed, 2);
    let channels: Vec<Channel> = ids.iter().map(|_| channel(&mut g_cat)).collect();

    // latent signals advance only during production, on each channel's hold
    let mut g_lat = rng::derived(cfg.seed, 3);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let phi = cfg.persistence;
    let innov = (1.0 - phi * phi).sqrt();
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(ids.len());
    for ch in &channels {
        let mut z: f64 = unit.sample(&mut g_lat);
        z = z.clamp(-LATENT_CLIP, LATENT_CLIP);
        let mut col = Vec::with_capacity(n);
        let mut ticks = 0usize;
        for &active in in_shift.iter() {
            if active {
                if ticks % ch.hold == 0 {
                    z = (phi * z + innov * unit.sample(&mut g_lat)).clamp(-LATENT_CLIP, LATENT_CLIP);
                }
                ticks += 1;
            }
            col.push(ch.quantise(ch.center + ch.scale * z));
        }
        values.push(col);
    }
    let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let direct: Vec<(usize, f64)> = cfg
        .planted_direct
        .iter()
        .map(|d| (index[d.indicator.as_str()], d.coefficient))
        .collect();
    let potential: Vec<(usize, Transform, Option<usize>, f64)> = cfg
        .planted_potential
        .iter()
        .map(|p| {
            (
                index[p.indicator.as_str()],
                p.transform,
                p.partner.as_deref().map(|q| index[q]),
                p.coefficient,
            )
        })
        .collect();
    let threshold_mean = 1.0 - libm::erf(1.0 / std::f64::consts::SQRT_2);
    let signal = |values: &[Vec<f64>], k: usize| -> f64 {
        let z = |j: usize| channels[j].standardise(values[j][k]);
        let lin: f64 = direct.iter().map(|&(j, b)| b * z(j)).sum();
        let nl: f64 = potential
            .iter()
            .map(|&(j, t, q, c)| {
                c * match t {
                    Transform::Square => z(j) * z(j) - 1.0,
                    Transform::ProductPair => z(j) * z(q.expect("validated partner")),
                    Transform::Threshold => f64::from(u8::from(z(j).abs() > 1.0)) - threshold_mean,
                }
            })
            .sum();
        cfg.base + lin + nl
    };

    // noise drawn for every production point; idle points hold the last value
    let mut g_noise = rng::derived(cfg.seed, 4);
    let noise_dist = Normal::new(0.0, cfg.noise_sd.max(0.0)).map_err(|e| Error::Config(e.to_string()))?;
    let noise: Vec<f64> = in_shift
        .iter()
        .map(|&a| if a && cfg.noise_sd > 0.0 { noise_dist.sample(&mut g_noise) } else { 0.0 })
        .collect();

    // planted upsets
    let mut planted_rejects = Vec::new();
    if let Some(cl) = cfg.reject_cluster.filter(|c| c.count > 0) {
        let mut g_rej = rng::derived(cfg.seed, 5);
        let spread = Normal::new(cl.center, cl.spread).map_err(|e| Error::Config(e.to_string()))?;
        let b2: f64 = direct.iter().map(|&(_, b)| b * b).sum();
        let limits = cfg.limits;
        for &(s, e) in &layout.shifts {
            let len = e - s;
            if len < cl.periods {
                return Err(Error::Config(format!(
                    "shift of {len} points cannot hold {} periods",
                    cl.periods
                )));
            }
            let mut used = BTreeSet::new();
            for _ in 0..cl.count {
                let p = (spread.sample(&mut g_rej).round() as i64).clamp(1, cl.periods as i64) as usize;
                // points i with floor(i * periods / len) + 1 == p
                let lo = ((p - 1) * len).div_ceil(cl.periods);
                let hi = (p * len).div_ceil(cl.periods);
                let free: Vec<usize> = (lo..hi).filter(|i| !used.contains(i)).collect();
                if free.is_empty() {
                    return Err(Error::Config(format!(
                        "reject period {p} is full; lengthen the shift or lower the reject count"
                    )));
                }
                let i = free[g_rej.gen_range(0..free.len())];
                used.insert(i);
                let k = s + i;
                let dir = if g_rej.gen_bool(0.5) { 1.0 } else { -1.0 };
                let margin = g_rej.gen_range(0.5..1.5) * limits.sigma1;
                let target = limits.mu1 + dir * (limits.n * limits.sigma1 + margin);
                let mut needed = target - (signal(&values, k) + noise[k]);
                for _ in 0..50 {
                    for &(j, b) in &direct {
                        let ch = channels[j];
                        let z = ch.standardise(values[j][k]) + needed * b / b2;
                        values[j][k] = ch.quantise(ch.center + ch.scale * z);
                    }
                    let y = signal(&values, k) + noise[k];
                    if limits.is_substandard(y) {
                        break;
                    }
                    needed = target - y + dir * 0.1 * limits.sigma1;
                }
                planted_rejects.push(k);
            }
        }
        planted_rejects.sort_unstable();
    }

    let mut draw = Vec::with_capacity(n);
    let mut last = signal(&values, 0);
    for k in 0..n {
        if in_shift[k] {
            last = signal(&values, k) + noise[k];
        }
        draw.push(last);
    }
    let reject_mask: Vec<bool> = draw
        .iter()
        .zip(&in_shift)
        .map(|(&y, &a)| a && cfg.limits.is_substandard(y))
        .collect();

    // counters
    let mut faults = Vec::new();
    let mut g_cnt = rng::derived(cfg.seed, 6);
    let rate_noise = Normal::new(0.0, 0.02 * cfg.counter_rate).expect("finite sd");
    let mut counter = vec![0.0; n];
    let mut hours = vec![0.0; n];
    let step_s = cfg.step_ms as f64 / 1000.0;
    for &(s, e) in &layout.shifts {
        let mut total = 0.0;
        for k in s..e {
            total += (cfg.counter_rate + rate_noise.sample(&mut g_cnt)).round().max(1.0);
            counter[k] = total;
            hours[k] = ((k - s + 1) as f64 * step_s).round();
        }
        for k in s + 2..e.saturating_sub(2) {
            if g_cnt.gen::<f64>() < cfg.counter_fault_rate {
                counter[k] += g_cnt.gen_range(10_000.0f64..60_000.0).round();
                faults.push(Fault {
                    index: k,
                    indicator: COUNTER,
                    kind: FaultKind::CounterJump,
                });
            }
        }
    }
    let mut g_hours = rng::derived(cfg.seed, 7);
    let mut gaps: Vec<(usize, usize)> = layout.shifts.windows(2).map(|w| (w[0].1, w[1].0)).collect();
    gaps.push((layout.shifts.last().unwrap().1, n));
    for (a, b) in gaps {
        if b > a + 20 && g_hours.gen::<f64>() < cfg.hours_reset_rate {
            let start = g_hours.gen_range(a + 2..b - 10);
            let stop = (start + g_hours.gen_range(3..10)).min(b - 1);
            for (off, k) in (start..stop).enumerate() {
                hours[k] = ((off + 1) as f64 * step_s * 3.0).round();
            }
            faults.push(Fault {
                index: start,
                indicator: HOURS,
                kind: FaultKind::HoursRestart,
            });
        }
    }

    let mut observed: BTreeMap<String, Vec<f64>> = ids.iter().cloned().zip(values).collect();
    observed.insert(TARGET.into(), draw.clone());
    observed.insert(COUNTER.into(), counter);
    observed.insert(HOURS.into(), hours);

    // the log ends at the last change of any indicator
    let last_change = observed
        .values()
        .filter_map(|c| (1..n).rev().find(|&k| c[k] != c[k - 1]))
        .max()
        .unwrap_or(0);
    let mut layout = layout;
    layout.grid.length = last_change + 1;
    for col in observed.values_mut() {
        col.truncate(last_change + 1);
    }
    let mut draw = draw;
    draw.truncate(last_change + 1);
    let mut reject_mask = reject_mask;
    reject_mask.truncate(last_change + 1);
    faults.retain(|f| f.index <= last_change);

    let records = change_only_records(&layout.grid, &observed);
    let shifts = layout
        .shifts
        .iter()
        .map(|&(s, e)| ShiftWindow {
            start: layout.grid.at(s),
            end: layout.grid.at(e),
            label: ShiftLabel::for_start(layout.grid.at(s)),
            truncated: false,
        })
        .collect();
    let mut pot_names: Vec<String> = Vec::new();
    for p in &cfg.planted_potential {
        pot_names.push(p.indicator.clone());
        pot_names.extend(p.partner.clone());
    }
    Ok(SynthOutput {
        records,
        truth: GroundTruth {
            grid: layout.grid,
            observed,
            draw_resistance: draw,
            reject_mask,
            planted_rejects,
            direct: cfg.planted_direct.iter().map(|d| d.indicator.clone()).collect(),
            potential: pot_names,
            shifts,
            shift_ranges: layout.shifts,
            faults,
            channels: ids.into_iter().zip(channels).collect(),
        },
    })
}

/// Time-ordered change-only records: a value is emitted at the first grid
/// point and whenever it differs from the previous point.
fn change_only_records(grid: &Grid, observed: &BTreeMap<String, Vec<f64>>) -> Vec<Record> {
    let names: Vec<(std::sync::Arc<str>, &Vec<f64>)> =
        observed.iter().map(|(k, v)| (std::sync::Arc::from(k.as_str()), v)).collect();
    let mut out = Vec::new();
    for k in 0..grid.length {
        let t = grid.at(k);
        for (name, col) in &names {
            if k == 0 || col[k] != col[k - 1] {
                out.push(Record {
                    timestamp: t,
                    indicator: name.clone(),
                    value: col[k],
                });
            }
        }
    }
    out
}

/// Writes `truth_series.csv`, `truth_shifts.csv`, `truth_planted.csv` and
/// `truth_faults.csv` under `dir`.
pub fn write_truth_bundle(dir: &Path, cfg: &SynthConfig, truth: &GroundTruth) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("truth_series.csv"))?);
    writeln!(f, "timestamp,{TARGET},reject,shift")?;
    let mut shift_of = vec![None; truth.grid.length];
    for (i, &(s, e)) in truth.shift_ranges.iter().enumerate() {
        shift_of[s..e].fill(Some(i + 1));
    }
    for k in 0..truth.grid.length {
        writeln!(
            f,
            "{},{},{},{}",
            truth.grid.at(k),
            truth.draw_resistance[k],
            u8::from(truth.reject_mask[k]),
            shift_of[k].map_or(String::new(), |s| s.to_string())
        )?;
    }
    f.flush()?;
    write_shifts(std::fs::File::create(dir.join("truth_shifts.csv"))?, &truth.shifts)?;

    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("truth_planted.csv"))?);
    writeln!(f, "indicator,role,transform,partner,coefficient")?;
    for d in &cfg.planted_direct {
        writeln!(f, "{},direct,linear,,{}", d.indicator, d.coefficient)?;
    }
    for p in &cfg.planted_potential {
        let t = match p.transform {
            Transform::Square => "square",
            Transform::ProductPair => "product-pair",
            Transform::Threshold => "threshold",
        };
        writeln!(
            f,
            "{},potential,{t},{},{}",
            p.indicator,
            p.partner.as_deref().unwrap_or(""),
            p.coefficient
        )?;
    }
    f.flush()?;

    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("truth_faults.csv"))?);
    writeln!(f, "timestamp,indicator,kind")?;
    for fault in &truth.faults {
        let kind = match fault.kind {
            FaultKind::CounterJump => "counter-jump",
            FaultKind::HoursRestart => "hours-restart",
        };
        writeln!(f, "{},{},{kind}", truth.grid.at(fault.index), fault.indicator)?;
    }
    f.flush()?;
    Ok(["truth_series.csv", "truth_shifts.csv", "truth_planted.csv", "truth_faults.csv"]
        .map(String::from)
        .to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{group_records, AlignedFrame};

    fn small() -> SynthConfig {
        SynthConfig {
            groups: GroupSizes {
                raw: 2,
                ve: 3,
                se: 3,
                max: 2,
            },
            planted_direct: vec![PlantedDirect {
                indicator: "B1".into(),
                coefficient: 5.0,
            }],
            planted_potential: vec![PlantedPotential {
                indicator: "C2".into(),
                transform: Transform::ProductPair,
                partner: Some("D1".into()),
                coefficient: 1.0,
            }],
            shift_schedule: vec![ShiftSpan {
                start: "07:00:00".into(),
                end: "07:20:00".into(),
            }],
            boundary_jitter_s: 30,
            reject_cluster: Some(RejectCluster {
                periods: 10,
                center: 5.0,
                spread: 1.0,
                count: 12,
            }),
            counter_fault_rate: 0.01,
            ..Default::default()
        }
    }

    #[test]
    fn default_config_is_valid() {
        let cfg = SynthConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.groups.total(), 82);
        let v = cfg.nominal_variance();
        let budget = 4.0 * 20.0 + 24.0 * 2.35 + (5.0 + 0.5 + 1.0 + 0.5 + 0.25 + 0.25) + 0.5;
        assert!((v - budget).abs() < 1e-9, "{v} vs {budget}");
    }

    #[test]
    fn same_seed_same_output() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.truth, b.truth);
        let c = generate(&SynthConfig { seed: 1, ..small() }).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn change_only_round_trip() {
        let out = generate(&small()).unwrap();
        let series = group_records(out.records.clone()).unwrap();
        let frame = AlignedFrame::from_series(&series, TARGET, 2000).unwrap();
        assert_eq!(frame.grid(), &out.truth.grid);
        for (name, col) in &out.truth.observed {
            assert_eq!(frame.column(name).unwrap(), col.as_slice(), "{name}");
        }
    }

    #[test]
    fn noiseless_single_linear_feature_is_affine() {
        let cfg = SynthConfig {
            planted_direct: vec![PlantedDirect {
                indicator: "A1".into(),
                coefficient: 2.0,
            }],
            planted_potential: vec![],
            noise_sd: 0.0,
            reject_cluster: None,
            ..small()
        };
        let out = generate(&cfg).unwrap();
        let ch = out.truth.channels["A1"];
        let x = &out.truth.observed["A1"];
        for &(s, e) in &out.truth.shift_ranges {
            for k in s..e {
                let want = cfg.base + 2.0 * (x[k] - ch.center) / ch.scale;
                assert!((out.truth.draw_resistance[k] - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn planted_rejects_leave_the_band() {
        let out = generate(&small()).unwrap();
        assert_eq!(out.truth.planted_rejects.len(), 12);
        for &k in &out.truth.planted_rejects {
            assert!(out.truth.reject_mask[k]);
        }
    }

    #[test]
    fn planted_sets_must_be_disjoint() {
        let mut cfg = small();
        cfg.planted_potential[0].partner = Some("B1".into());
        assert!(matches!(generate(&cfg), Err(Error::Config(_))));
        let mut cfg = small();
        cfg.noise_sd = -1.0;
        assert!(generate(&cfg).is_err());
    }
}
