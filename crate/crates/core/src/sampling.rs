//! Detection probability of at least one substandard cigarette under random
//! and distribution-targeted sampling plans.

use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Reject counts per production period (1-based period ids).
#[derive(Debug, Clone, PartialEq)]
pub struct SubstandardDistribution {
    pub j1: usize,
    /// Cigarettes produced per period.
    pub y_s: u64,
    /// `counts[k]` is the number of rejects in period `k + 1`.
    pub counts: Vec<u64>,
    pub m1: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalFit {
    pub mu: f64,
    pub sigma: f64,
}

pub const SIGMA_FLOOR: f64 = 0.5;

/// Histogram of a per-point reject mask over `j1` equal periods. Point `i` of
/// `len` falls in period `floor(i * j1 / len) + 1`.
pub fn period_histogram(mask: &[bool], j1: usize, y_s: u64) -> Result<SubstandardDistribution> {
    if j1 == 0 {
        return Err(Error::invalid("period count j1 must be positive"));
    }
    if mask.len() < j1 {
        return Err(Error::invalid(format!(
            "mask of {} points cannot cover {j1} periods",
            mask.len()
        )));
    }
    let len = mask.len();
    let ids: Vec<usize> = mask
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| i * j1 / len + 1)
        .collect();
    histogram_from_ids(&ids, j1, y_s)
}

/// Histogram from explicit 1-based period ids, one per reject.
pub fn histogram_from_ids(ids: &[usize], j1: usize, y_s: u64) -> Result<SubstandardDistribution> {
    if j1 == 0 {
        return Err(Error::invalid("period count j1 must be positive"));
    }
    let mut counts = vec![0u64; j1];
    for &id in ids {
        if id == 0 || id > j1 {
            return Err(Error::invalid(format!("period id {id} outside 1..={j1}")));
        }
        counts[id - 1] += 1;
    }
    Ok(SubstandardDistribution {
        j1,
        y_s,
        m1: ids.len() as u64,
        counts,
    })
}

/// Count-weighted mean and standard deviation of period ids.
pub fn fit_normal(dist: &SubstandardDistribution) -> Result<NormalFit> {
    if dist.m1 < 2 {
        return Err(Error::InsufficientRejects(dist.m1));
    }
    let m = dist.m1 as f64;
    let mu = dist
        .counts
        .iter()
        .enumerate()
        .map(|(k, &c)| (k + 1) as f64 * c as f64)
        .sum::<f64>()
        / m;
    let var = dist
        .counts
        .iter()
        .enumerate()
        .map(|(k, &c)| c as f64 * ((k + 1) as f64 - mu).powi(2))
        .sum::<f64>()
        / m;
    Ok(NormalFit {
        mu,
        sigma: var.sqrt().max(SIGMA_FLOOR),
    })
}

/// Normal mass within `n` standard deviations of the mean.
pub fn coverage(n: f64) -> Result<f64> {
    if !(n > 0.0) {
        return Err(Error::invalid("coverage multiplier n must be positive"));
    }
    Ok(libm::erf(n / std::f64::consts::SQRT_2))
}

fn ln_choose_ratio(y: u64, z: u64, m: u64) -> f64 {
    // ln C(Y-m, Z) - ln C(Y, Z) = sum over i < min(Z, m) of ln(1 - max(Z, m) / (Y - i))
    let (lo, hi) = (z.min(m), z.max(m));
    if lo <= 1_000_000 {
        return (0..lo).map(|i| (-(hi as f64) / (y - i) as f64).ln_1p()).sum();
    }
    let lg = |v: u64| libm::lgamma(v as f64 + 1.0);
    lg(y - m) - lg(y - m - z) - lg(y) + lg(y - z)
}

/// `1 - C(Y-m, Z) / C(Y, Z)`: chance that `Z` items drawn without
/// replacement from `Y` include at least one of `m` marked items.
pub fn p_sampled_exact(y: u64, z: u64, m: u64) -> Result<f64> {
    if m > y || z > y {
        return Err(Error::invalid(format!("need m <= Y and Z <= Y (Y={y}, Z={z}, m={m})")));
    }
    if m == 0 || z == 0 {
        return Ok(0.0);
    }
    if z > y - m {
        return Ok(1.0);
    }
    Ok(-ln_choose_ratio(y, z, m).exp_m1())
}

/// `1 - ((Y - m) / Y)^Z`, valid when `Y` is much larger than `m` and `Z`.
pub fn p_sampled_approx(y: f64, z: f64, m: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::invalid("Y must be positive"));
    }
    if m <= 0.0 || z <= 0.0 {
        return Ok(0.0);
    }
    if m >= y {
        return Ok(1.0);
    }
    Ok(-(z * (-m / y).ln_1p()).exp_m1())
}

/// Random sampling of `z1` cigarettes over a whole shift of `j1` periods.
pub fn p_old(j1: usize, y_s: u64, m1: f64, z1: u64) -> Result<f64> {
    let y = j1 as f64 * y_s as f64;
    if m1 > y {
        return Err(Error::invalid("m1 exceeds total production"));
    }
    p_sampled_approx(y, z1 as f64, m1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverageMode {
    /// Targeted rejects `m2 = coverage(n) * m1`.
    Eq19,
    /// Targeted rejects `m2 = m1`: every reject assumed inside the window.
    PaperExample,
}

impl fmt::Display for CoverageMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoverageMode::Eq19 => "eq19",
            CoverageMode::PaperExample => "paper-example",
        })
    }
}

impl std::str::FromStr for CoverageMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eq19" => Ok(CoverageMode::Eq19),
            "paper-example" => Ok(CoverageMode::PaperExample),
            other => Err(Error::invalid(format!(
                "unknown coverage mode `{other}` (expected eq19 or paper-example)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetedPlan {
    pub p: f64,
    pub j2: usize,
    pub m2: f64,
}

/// Targeted sampling of `z2` cigarettes over the `j2 = round(2 n sigma)`
/// periods around the fitted centre.
pub fn p_new(sigma: f64, n: f64, y_s: u64, m1: f64, z2: u64, mode: CoverageMode) -> Result<TargetedPlan> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    let phi = coverage(n)?;
    let j2 = ((2.0 * n * sigma).round() as usize).max(1);
    let m2 = match mode {
        CoverageMode::Eq19 => phi * m1,
        CoverageMode::PaperExample => m1,
    };
    let y2 = j2 as f64 * y_s as f64;
    let p = if m2 > y2 { 1.0 } else { p_sampled_approx(y2, z2 as f64, m2)? };
    Ok(TargetedPlan { p, j2, m2 })
}

pub fn delta_p(p_old: f64, p_new: f64) -> f64 {
    p_new - p_old
}

const MC_CHUNK: u64 = 8192;

/// Monte-Carlo estimate of [`p_sampled_exact`] and its standard error.
/// Trials run in fixed-size chunks, each with its own derived stream, so the
/// estimate does not depend on the thread count.
pub fn monte_carlo_p(y: u64, z: u64, m: u64, trials: u64, seed: u64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    if m > y || z > y {
        return Err(Error::invalid("need m <= Y and Z <= Y"));
    }
    let (yu, zu, mu) = (y as usize, z as usize, m as usize);
    let chunks = trials.div_ceil(MC_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = MC_CHUNK.min(trials - c * MC_CHUNK);
            let mut g = rng::derived(seed, c);
            (0..count)
                .filter(|_| mu > 0 && sample(&mut g, yu, zu).iter().any(|i| i < mu))
                .count() as u64
        })
        .sum();
    let p = hits as f64 / trials as f64;
    Ok((p, (p * (1.0 - p) / trials as f64).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingPlan {
    /// Periods per shift.
    pub j1: usize,
    /// Cigarettes per period.
    pub y_s: u64,
    /// Sample size, shared by both plans.
    pub z: u64,
    /// Coverage multiplier.
    pub n: f64,
    pub mode: CoverageMode,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self {
            j1: 100,
            y_s: 43200,
            z: 200,
            n: 2.576,
            mode: CoverageMode::PaperExample,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingReport {
    pub mode: CoverageMode,
    pub j1: usize,
    pub y_s: u64,
    pub y1: f64,
    pub z1: u64,
    pub m1: f64,
    pub mu: f64,
    pub sigma: f64,
    pub n: f64,
    pub coverage: f64,
    pub j2: usize,
    pub y2: f64,
    pub z2: u64,
    pub m2: f64,
    pub p_old: f64,
    pub p_new: f64,
    pub delta_p: f64,
}

impl SamplingReport {
    /// Targeted period interval `mu ± n sigma`.
    pub fn interval(&self) -> (f64, f64) {
        (self.mu - self.n * self.sigma, self.mu + self.n * self.sigma)
    }

    pub const CSV_HEADER: &'static str =
        "mode,j1,y_s,Y1,Z1,m1,mu,sigma,n,coverage,j2,Y2,Z2,m2,interval_lo,interval_hi,p_old,p_new,delta_p";

    pub fn csv_row(&self) -> String {
        let (lo, hi) = self.interval();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.mode,
            self.j1,
            self.y_s,
            self.y1,
            self.z1,
            self.m1,
            self.mu,
            self.sigma,
            self.n,
            self.coverage,
            self.j2,
            self.y2,
            self.z2,
            self.m2,
            lo,
            hi,
            self.p_old,
            self.p_new,
            self.delta_p
        )
    }
}

impl fmt::Display for SamplingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lo, hi) = self.interval();
        writeln!(f, "sampling report (mode {})", self.mode)?;
        writeln!(f, "  rejects m1          {}", self.m1)?;
        writeln!(f, "  fitted period       mu = {:.3}, sigma = {:.3}", self.mu, self.sigma)?;
        writeln!(f, "  random plan         Y1 = {}, Z1 = {}", self.y1, self.z1)?;
        writeln!(
            f,
            "  targeted plan       j2 = {}, periods [{:.2}, {:.2}], Y2 = {}, Z2 = {}, m2 = {:.2}",
            self.j2, lo, hi, self.y2, self.z2, self.m2
        )?;
        writeln!(f, "  P_old               {:.4}", self.p_old)?;
        writeln!(f, "  P_new               {:.4}", self.p_new)?;
        write!(f, "  delta P             {:.4}", self.delta_p)
    }
}

/// Both plans for a shift with `m1` rejects whose period ids fit `fit`.
pub fn sampling_report(plan: &SamplingPlan, m1: f64, fit: NormalFit) -> Result<SamplingReport> {
    let po = p_old(plan.j1, plan.y_s, m1, plan.z)?;
    let t = p_new(fit.sigma, plan.n, plan.y_s, m1, plan.z, plan.mode)?;
    if t.j2 >= plan.j1 {
        return Err(Error::invalid(format!(
            "targeted window of {} periods does not shrink the {}-period shift",
            t.j2, plan.j1
        )));
    }
    Ok(SamplingReport {
        mode: plan.mode,
        j1: plan.j1,
        y_s: plan.y_s,
        y1: plan.j1 as f64 * plan.y_s as f64,
        z1: plan.z,
        m1,
        mu: fit.mu,
        sigma: fit.sigma,
        n: plan.n,
        coverage: coverage(plan.n)?,
        j2: t.j2,
        y2: t.j2 as f64 * plan.y_s as f64,
        z2: plan.z,
        m2: t.m2,
        p_old: po,
        p_new: t.p,
        delta_p: delta_p(po, t.p),
    })
}

/// One CSV row per report, prefixed by a `shift` label column.
pub fn write_reports_csv(path: &Path, reports: &[(String, SamplingReport)]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "shift,{}", SamplingReport::CSV_HEADER)?;
    for (label, r) in reports {
        writeln!(f, "{label},{}", r.csv_row())?;
    }
    f.flush()?;
    Ok(())
}
