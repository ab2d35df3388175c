use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{FeatureSet, MethodKind, RunConfig};
use super::data::{feature_list, score_and_select, shift_samples, shifts_of, Ingested};
use super::svg::{bar_chart, line_chart, Series};
use super::train::train_model;
use crate::error::{Error, Result};
use crate::features::{write_scores, FeatureSelection};
use crate::ingest::{read_change_log, read_shifts, write_change_log, write_shifts, AlignedFrame, SampleSet, Split};
use crate::metaheur::write_history;
use crate::predictors::{anfis_eval, evaluate, write_metrics_table, Metrics, MetricsRow, ModelBody, TrainedModel};
use crate::sampling::{fit_normal, period_histogram, sampling_report, write_reports_csv, NormalFit, SamplingReport};
use crate::synth::{generate, write_truth_bundle};

pub const CHANGELOG: &str = "changelog.csv";
pub const FRAME: &str = "frame.csv";
pub const SHIFTS: &str = "shifts.csv";
pub const FEATURES: &str = "features.csv";
pub const SELECTION: &str = "selection.csv";
pub const TRAIN_METRICS: &str = "train_metrics.csv";
pub const METRICS: &str = "metrics.csv";
pub const FLAGS: &str = "flags.csv";
pub const SAMPLING_CSV: &str = "sampling_report.csv";
pub const SAMPLING_TXT: &str = "sampling_report.txt";
pub const MANIFEST: &str = "manifest.toml";

const SPOT_CHECK_ROWS: usize = 64;
const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Synth,
    Ingest,
    Features,
    Train,
    Evaluate,
    Flag,
    SamplePlan,
    Pipeline,
}

impl Subcommand {
    pub const STAGES: [Subcommand; 7] = [
        Subcommand::Synth,
        Subcommand::Ingest,
        Subcommand::Features,
        Subcommand::Train,
        Subcommand::Evaluate,
        Subcommand::Flag,
        Subcommand::SamplePlan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Synth => "synth",
            Subcommand::Ingest => "ingest",
            Subcommand::Features => "features",
            Subcommand::Train => "train",
            Subcommand::Evaluate => "evaluate",
            Subcommand::Flag => "flag",
            Subcommand::SamplePlan => "sample-plan",
            Subcommand::Pipeline => "pipeline",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subcommand::STAGES
            .into_iter()
            .chain([Subcommand::Pipeline])
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown subcommand {s:?}")))
    }
}

/// Files written by a run, relative to the output directory, plus
/// human-readable summary lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutcome {
    pub artifacts: Vec<String>,
    pub summary: Vec<String>,
}

/// Config hash, seed and SHA-256 of every artifact written so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub seed: u64,
    pub artifacts: BTreeMap<String, String>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

pub fn run(cmd: Subcommand, cfg: &RunConfig) -> Result<RunOutcome> {
    let ctx = Ctx::new(cfg)?;
    let mut out = RunOutcome::default();
    let stages: Vec<Subcommand> = if cmd == Subcommand::Pipeline {
        Subcommand::STAGES
            .into_iter()
            .filter(|s| *s != Subcommand::Synth || cfg.synth.is_some())
            .collect()
    } else {
        vec![cmd]
    };
    for stage in stages {
        let written = match stage {
            Subcommand::Synth => ctx.synth(&mut out)?,
            Subcommand::Ingest => ctx.ingest(&mut out)?,
            Subcommand::Features => ctx.features(&mut out)?,
            Subcommand::Train => ctx.train(&mut out)?,
            Subcommand::Evaluate => ctx.evaluate(&mut out)?,
            Subcommand::Flag => ctx.flag(&mut out)?,
            Subcommand::SamplePlan => ctx.sample_plan(&mut out)?,
            Subcommand::Pipeline => unreachable!("expanded above"),
        };
        ctx.record(&written)?;
        out.artifacts.extend(written);
    }
    out.artifacts.push(MANIFEST.to_string());
    Ok(out)
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    dir: PathBuf,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn model_name(method: MethodKind, set: FeatureSet) -> String {
    format!("{}-{}", method.key(), set.key())
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a RunConfig) -> Result<Self> {
        cfg.validate()?;
        std::fs::create_dir_all(&cfg.out_dir)?;
        Ok(Self {
            cfg,
            dir: cfg.out_dir.clone(),
        })
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.join(rel)
    }

    fn create(&self, rel: &str) -> Result<BufWriter<File>> {
        let p = self.path(rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent)?;
        }
        Ok(BufWriter::new(File::create(p)?))
    }

    fn write_text(&self, rel: &str, text: &str) -> Result<()> {
        let mut f = self.create(rel)?;
        f.write_all(text.as_bytes())?;
        f.flush()?;
        Ok(())
    }

    fn require(&self, rel: &str, subcommand: &'static str) -> Result<PathBuf> {
        let p = self.path(rel);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact {
                path: p.display().to_string(),
                subcommand,
            })
        }
    }

    /// Merges hashes of `written` into the manifest, starting afresh when the
    /// config or seed differs from the recorded one.
    fn record(&self, written: &[String]) -> Result<()> {
        let path = self.path(MANIFEST);
        let hash = self.cfg.hash();
        let mut m = Manifest::read(&path)
            .ok()
            .filter(|m| m.config_sha256 == hash && m.seed == self.cfg.seed)
            .unwrap_or(Manifest {
                config_sha256: hash,
                seed: self.cfg.seed,
                artifacts: BTreeMap::new(),
            });
        for rel in written {
            m.artifacts.insert(rel.clone(), sha256_file(&self.path(rel))?);
        }
        let text = toml::to_string(&m).map_err(|e| Error::Config(e.to_string()))?;
        self.write_text(MANIFEST, &text)
    }

    fn synth(&self, out: &mut RunOutcome) -> Result<Vec<String>> {
        let sc = self
            .cfg
            .synth_config()
            .ok_or_else(|| Error::Config("`synth` needs a [synth] table in the config".into()))?;
        let gen = generate(&sc)?;
        let mut f = self.create(CHANGELOG)?;
        write_change_log(&mut f, &gen.records)?;
        f.flush()?;
        let mut written = vec![CHANGELOG.to_string(), "config.toml".to_string()];
        self.write_text("config.toml", &self.cfg.canonical())?;
        for name in write_truth_bundle(&self.path("truth"), &sc, &gen.truth)? {
            written.push(format!("truth/{name}"));
        }
        out.summary.push(format!(
            "synth: {} records, {} grid points, {} shifts, {} planted rejects",
            gen.records.len(),
            gen.truth.grid.length,
            gen.truth.shifts.len(),
            gen.truth.planted_rejects.len()
        ));
        Ok(written)
    }

    fn ingest(&self, out: &mut RunOutcome) -> Result<Vec<String>> {
        let path = match &self.cfg.input {
            Some(i) => i.path.clone(),
            None => self.require(CHANGELOG, "synth")?,
        };
        let series = read_change_log(BufReader::new(File::open(&path)?))?;
        let frame = AlignedFrame::from_series(&series, &self.cfg.ingest.target, self.cfg.ingest.step_ms)?;
        let shifts = shifts_of(&frame, &self.cfg.ingest)?;
        let mut f = self.create(FRAME)?;
        frame.write_csv(&mut f)?;
        f.flush()?;
        let mut f = self.create(SHIFTS)?;
        write_shifts(&mut f, &shifts)?;
        f.flush()?;
        out.summary.push(format!(
            "ingest: {} indicators on {} grid points, {} shifts",
            frame.columns().len(),
            frame.len(),
            shifts.len()
        ));
        Ok(vec![FRAME.into(), SHIFTS.into()])
    }

    fn load_ingested(&self) -> Result<Ingested> {
        let fp = self.require(FRAME, "ingest")?;
        let sp = self.require(SHIFTS, "ingest")?;
        Ok(Ingested {
            frame: AlignedFrame::read_csv(BufReader::new(File::open(fp)?))?,
            shifts: read_shifts(BufReader::new(File::open(sp)?))?,
        })
    }

    fn features(&self, out: &mut RunOutcome) -> Result<Vec<String>> {
        let ing = self.load_ingested()?;
        let (scores, sel) = score_and_select(&ing, &self.cfg.ingest, &self.cfg.features, self.cfg.seed)?;
        let mut f = self.create(FEATURES)?;
        write_scores(&mut f, &scores, &sel)?;
        f.flush()?;
        let mut f = self.create(SELECTION)?;
        writeln!(f, "role,rank,indicator")?;
        for (role, ids) in [("direct", &sel.direct), ("potential", &sel.potential)] {
            for (i, id) in ids.iter().enumerate() {
                writeln!(f, "{role},{},{id}", i + 1)?;
            }
        }
        f.flush()?;
        out.summary.push(format!(
            "features: {} scored, {} direct, {} potential",
            scores.len(),
            sel.direct.len(),
            sel.potential.len()
        ));
        Ok(vec![FEATURES.into(), SELECTION.into()])
    }

    fn load_selection(&self) -> Result<FeatureSelection> {
        let p = self.require(SELECTION, "features")?;
        let mut rdr = csv::Reader::from_reader(BufReader::new(File::open(p)?));
        let mut sel = FeatureSelection {
            direct: Vec::new(),
            potential: Vec::new(),
            f_lin: self.cfg.features.f_lin,
            f_nonlin: self.cfg.features.f_nonlin,
        };
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line() as usize);
            let id = row.get(2).unwrap_or("").to_string();
            match row.get(0) {
                Some("direct") => sel.direct.push(id),
                Some("potential") => sel.potential.push(id),
                other => {
                    return Err(Error::Parse {
                        line,
                        message: format!("unknown role {other:?}"),
                    })
                }
            }
        }
        Ok(sel)
    }

    fn samples(&self, ing: &Ingested, features: &[String]) -> Result<(SampleSet, Vec<usize>)> {
        shift_samples(ing, features, &self.cfg.ingest, self.cfg.seed)
    }

    fn models(&self) -> impl Iterator<Item = (MethodKind, FeatureSet)> + '_ {
        let t = &self.cfg.train;
        t.methods
            .iter()
            .flat_map(move |&m| t.feature_sets.iter().map(move |&s| (m, s)))
    }

    fn train(&self, out: &mut RunOutcome) -> Result<Vec<String>> {
        let ing = self.load_ingested()?;
        let sel = self.load_selection()?;
        let tc = self.cfg.seeded_train();
        let mut written = Vec::new();
        let mut train_rows = Vec::new();
        let mut histories = Vec::new();
        for (method, set) in self.models() {
            let feats = feature_list(&sel, set);
            if feats.is_empty() {
                return Err(Error::invalid(format!("feature set {set} is empty")));
            }
            let (samples, _) = self.samples(&ing, &feats)?;
            let train = samples.subset(Split::Train);
            let t = train_model(method, set, &train, &tc)?;
            let name = model_name(method, set);
            let rel = format!("models/{name}.model");
            self.create(&rel)?;
            t.model.write(&self.path(&rel))?;
            written.push(rel);
            let m = evaluate(&t.model.predict(&train.x)?, &train.y)?;
            if let Some(h) = &t.history {
                let rel = format!("histories/{name}.csv");
                self.create(&rel)?;
                write_history(&self.path(&rel), h)?;
                written.push(rel);
                histories.push((name.clone(), h.clone()));
            }
            out.summary.push(format!("train: {name} train R {:.4}", m.r));
            train_rows.push((t.model.method.clone(), t.params, m));
        }
        let mut f = self.create(TRAIN_METRICS)?;
        writeln!(f, "method,params,train_mse,train_rmse,train_r")?;
        {
            let mut w = csv::Writer::from_writer(&mut f);
            for (method, params, m) in &train_rows {
                w.write_record([
                    method.clone(),
                    params.clone(),
                    m.mse.to_string(),
                    m.rmse.to_string(),
                    m.r.to_string(),
                ])?;
            }
            w.flush()?;
        }
        f.flush()?;
        written.push(TRAIN_METRICS.into());
        if !histories.is_empty() {
            let series: Vec<Series> = histories
                .iter()
                .map(|(n, h)| Series {
                    name: n,
                    points: h.iter().enumerate().map(|(i, &v)| ((i + 1) as f64, v)).collect(),
                })
                .collect();
            let svg = line_chart("Optimiser convergence", "iteration", "best training RMSE", &series);
            self.write_text("charts/convergence.svg", &svg)?;
            written.push("charts/convergence.svg".into());
        }
        Ok(written)
    }

    fn load_model(&self, method: MethodKind, set: FeatureSet) -> Result<TrainedModel> {
        let rel = format!("models/{}.model", model_name(method, set));
        TrainedModel::read(&self.require(&rel, "train")?)
    }

    fn load_params(&self) -> Result<Vec<String>> {
        let p = self.require(TRAIN_METRICS, "train")?;
        let mut rdr = csv::Reader::from_reader(BufReader::new(File::open(p)?));
        rdr.records()
            .map(|r| Ok(r?.get(1).unwrap_or("").to_string()))
            .collect()
    }

    fn evaluate(&self, out: &mut RunOutcome) -> Result<Vec<String>> {
        let ing = self.load_ingested()?;
        let params = self.load_params()?;
        let models: Vec<_> = self.models().collect();
        if params.len() != models.len() {
            return Err(Error::MissingArtifact {
                path: self.path(TRAIN_METRICS).display().to_string(),
                subcommand: "train",
            });
        }
        let mut rows = Vec::new();
        for ((method, set), params) in models.into_iter().zip(params) {
            let model = self.load_model(method, set)?;
            let (samples, _) = self.samples(&ing, &model.features)?;
            let train = samples.subset(Split::Train);
            let test = samples.subset(Split::Test);
            spot_check_anfis(&model, &test)?;
            let row = MetricsRow {
                method: model.method.clone(),
                params,
                train: evaluate(&model.predict(&train.x)?, &train.y)?,
                test: evaluate(&model.predict(&test.x)?, &test.y)?,
            };
            out.summary.push(format!(
                "evaluate: {:<10} {:<28} test RMSE {:.4} R {:.4}",
                row.method,
                row.params.split_whitespace().next().unwrap_or(""),
                row.test.rmse,
                row.test.r
            ));
            rows.push(row);
        }
        for r in &rows {
            check_metrics(&r.method, &r.train)?;
            check_metrics(&r.method, &r.test)?;
        }
        let mut f = self.create(METRICS)?;
        write_metrics_table(&mut f, &rows)?;
        f.flush()?;
        Ok(vec![METRICS.into()])
    }

    fn flag(&self, out: &mut RunOutcome) -> Result<Vec<String>> {
        let ing = self.load_ingested()?;
        let fc = &self.cfg.flag;
        let model = self.load_model(fc.method, fc.feature_set)?;
        let (samples, shift_of) = self.samples(&ing, &model.features)?;
        spot_check_anfis(&model, &samples)?;
        let pred = model.predict(&samples.x)?;
        let lim = &self.cfg.limits;
        let mut f = self.create(FLAGS)?;
        writeln!(f, "timestamp,shift,split,actual,predicted,predicted_reject,actual_reject")?;
        let mut flagged = 0usize;
        let mut agree = 0usize;
        for i in 0..samples.len() {
            let (p, a) = (lim.is_substandard(pred[i]), lim.is_substandard(samples.y[i]));
            flagged += p as usize;
            agree += (p && a) as usize;
            writeln!(
                f,
                "{},{},{},{},{},{},{}",
                samples.timestamps[i],
                shift_of[i] + 1,
                match samples.split[i] {
                    Split::Train => "train",
                    Split::Test => "test",
                },
                samples.y[i],
                pred[i],
                p as u8,
                a as u8
            )?;
        }
        f.flush()?;
        let mut written = vec![FLAGS.to_string()];
        for s in 0..ing.shifts.len() {
            let idx: Vec<usize> = (0..samples.len()).filter(|&i| shift_of[i] == s).collect();
            let series = [
                Series {
                    name: "actual",
                    points: idx.iter().enumerate().map(|(k, &i)| (k as f64, samples.y[i])).collect(),
                },
                Series {
                    name: "predicted",
                    points: idx.iter().enumerate().map(|(k, &i)| (k as f64, pred[i])).collect(),
                },
            ];
            let rel = format!("charts/prediction_shift{}.svg", s + 1);
            let title = format!("{} shift {}: predicted vs actual", model.method, s + 1);
            self.write_text(&rel, &line_chart(&title, "grid point", "draw resistance (Pa)", &series))?;
            written.push(rel);
        }
        out.summary.push(format!(
            "flag: {} of {} points flagged ({} also substandard in the measured target)",
            flagged,
            samples.len(),
            agree
        ));
        Ok(written)
    }

    fn sample_plan(&self, out: &mut RunOutcome) -> Result<Vec<String>> {
        let s = &self.cfg.sampling;
        let plan = s.plan();
        let mut reports: Vec<(String, SamplingReport)> = Vec::new();
        let mut notes = Vec::new();
        let mut written = Vec::new();
        if let (Some(m1), Some(sigma)) = (s.m1, s.sigma) {
            let mu = s.mu.unwrap_or((s.j1 as f64 + 1.0) / 2.0);
            reports.push(("config".into(), sampling_report(&plan, m1, NormalFit { mu, sigma })?));
        } else {
            for (label, mask) in self.load_flag_masks()? {
                let dist = period_histogram(&mask, s.j1, s.y_s)?;
                let fit = match fit_normal(&dist) {
                    Ok(f) => f,
                    Err(e) => {
                        notes.push(format!("shift {label}: skipped, {e}"));
                        continue;
                    }
                };
                let rel = format!("charts/reject_histogram_shift{label}.svg");
                self.write_text(&rel, &histogram_svg(&label, &dist.counts, dist.m1, fit))?;
                written.push(rel);
                match sampling_report(&plan, dist.m1 as f64, fit) {
                    Ok(r) => reports.push((label, r)),
                    Err(e) => notes.push(format!("shift {label}: skipped, {e}")),
                }
            }
        }
        if reports.is_empty() {
            return Err(Error::invalid(format!(
                "no shift produced a sampling report ({})",
                notes.join("; ")
            )));
        }
        write_reports_csv(&self.path(SAMPLING_CSV), &reports)?;
        let mut txt = String::new();
        for (label, r) in &reports {
            txt.push_str(&format!("shift {label}\n{r}\n\n"));
            out.summary.push(format!(
                "sample-plan: shift {label} P_old {:.3} P_new {:.3} delta P {:.3}",
                r.p_old, r.p_new, r.delta_p
            ));
        }
        for n in &notes {
            txt.push_str(n);
            txt.push('\n');
        }
        self.write_text(SAMPLING_TXT, &txt)?;
        out.summary.extend(notes);
        written.insert(0, SAMPLING_TXT.into());
        written.insert(0, SAMPLING_CSV.into());
        Ok(written)
    }

    /// Predicted reject masks per shift, in time order.
    fn load_flag_masks(&self) -> Result<Vec<(String, Vec<bool>)>> {
        let p = self.require(FLAGS, "flag")?;
        let mut rdr = csv::Reader::from_reader(BufReader::new(File::open(p)?));
        let mut by_shift: BTreeMap<usize, Vec<bool>> = BTreeMap::new();
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line() as usize);
            let bad = |what: &str| Error::Parse {
                line,
                message: format!("malformed {what}"),
            };
            let shift: usize = row.get(1).and_then(|v| v.parse().ok()).ok_or_else(|| bad("shift"))?;
            let flag = match row.get(5) {
                Some("1") => true,
                Some("0") => false,
                _ => return Err(bad("predicted_reject")),
            };
            by_shift.entry(shift).or_default().push(flag);
        }
        Ok(by_shift.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }
}

fn histogram_svg(label: &str, counts: &[u64], m1: u64, fit: NormalFit) -> String {
    let bars: Vec<(f64, f64)> = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| ((k + 1) as f64, c as f64))
        .collect();
    let norm = m1 as f64 / (fit.sigma * (2.0 * std::f64::consts::PI).sqrt());
    let points = (0..=counts.len() * 4)
        .map(|i| {
            let x = 0.5 + i as f64 / 4.0;
            let z = (x - fit.mu) / fit.sigma;
            (x, norm * (-0.5 * z * z).exp())
        })
        .collect();
    bar_chart(
        &format!("Shift {label}: rejects per period"),
        "period",
        "rejects",
        &bars,
        Some(Series {
            name: "fitted normal",
            points,
        }),
    )
}

fn check_metrics(method: &str, m: &Metrics) -> Result<()> {
    if (m.rmse - m.mse.sqrt()).abs() > SUM_TOLERANCE {
        return Err(Error::SelfCheck(format!("{method}: RMSE {} differs from sqrt(MSE {})", m.rmse, m.mse)));
    }
    Ok(())
}

/// Normalised firing strengths sum to one on evenly spaced rows.
fn spot_check_anfis(model: &TrainedModel, samples: &SampleSet) -> Result<()> {
    let ModelBody::Anfis(fis) = &model.body else {
        return Ok(());
    };
    let n = samples.len();
    if n == 0 {
        return Ok(());
    }
    let mut z = vec![0.0; samples.x.cols()];
    for k in 0..SPOT_CHECK_ROWS.min(n) {
        let i = k * n / SPOT_CHECK_ROWS.min(n);
        model.x_scaler.transform_row(samples.x.row(i), &mut z);
        let (_, trace) = anfis_eval(fis, &z)?;
        let sum: f64 = trace.normalized.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::SelfCheck(format!(
                "{}: normalised firing strengths sum to {sum} at row {i}",
                model.method
            )));
        }
    }
    Ok(())
}
