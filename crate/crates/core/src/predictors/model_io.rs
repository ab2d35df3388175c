//! Line-oriented text format for trained models.
//!
//! ```text
//! drawres-model 1
//! method ANFIS(FCM)
//! kind anfis
//! features 3 A1 B4 C7
//! x_mean <3 values>
//! x_scale <3 values>
//! <kind-specific block>
//! end
//! ```
//!
//! Reals are written in shortest round-trip form, so a write/read cycle is
//! exact. Kind-specific blocks:
//!
//! * `mlffnn`: `hidden h`, `y_mean v`, `y_scale v`, `inner_mean`, `inner_scale`
//!   (the network's own input scaler), `w1` (h*d values, row per hidden
//!   node), `b1`, `w2`, `b2`.
//! * `anfis`: `rules R`, then per rule a `rule r` line, d lines
//!   `premise i a b c`, and `consequent p_1 .. p_d bias`.
//! * `gmdh`: `config N L P fit_fraction seed`, `layers L`, then per layer
//!   `layer l count` followed by `count` lines `neuron i j criterion c0 .. c5`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use super::anfis::{Bell, FuzzyRuleBase, Rule};
use super::gmdh::{GmdhConfig, GmdhNetwork, Neuron};
use super::mlffnn::MlffnnModel;
use super::scaler::{Standardizer, TargetScaler};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelBody {
    Mlffnn(MlffnnModel),
    Anfis(FuzzyRuleBase),
    Gmdh(GmdhNetwork),
}

impl ModelBody {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelBody::Mlffnn(_) => "mlffnn",
            ModelBody::Anfis(_) => "anfis",
            ModelBody::Gmdh(_) => "gmdh",
        }
    }
}

/// A predictor plus the input standardisation it was trained behind.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    /// Display label, e.g. `ANFIS-GA`.
    pub method: String,
    pub features: Vec<String>,
    pub x_scaler: Standardizer,
    pub body: ModelBody,
}

impl TrainedModel {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.features.len() {
            return Err(Error::LayoutMismatch {
                expected: self.features.len(),
                actual: x.cols(),
            });
        }
        let z = self.x_scaler.transform(x);
        match &self.body {
            ModelBody::Mlffnn(m) => Ok(m.predict(&z)),
            ModelBody::Anfis(f) => f.predict(&z),
            ModelBody::Gmdh(g) => Ok(g.predict(&z)),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let d = self.features.len();
        let _ = writeln!(s, "drawres-model {FORMAT_VERSION}");
        let _ = writeln!(s, "method {}", self.method);
        let _ = writeln!(s, "kind {}", self.body.kind());
        let _ = writeln!(s, "features {d} {}", self.features.join(" "));
        line(&mut s, "x_mean", &self.x_scaler.mean);
        line(&mut s, "x_scale", &self.x_scaler.scale);
        match &self.body {
            ModelBody::Mlffnn(m) => {
                let _ = writeln!(s, "hidden {}", m.hidden);
                let _ = writeln!(s, "y_mean {}", m.y_scaler.mean);
                let _ = writeln!(s, "y_scale {}", m.y_scaler.scale);
                line(&mut s, "inner_mean", &m.x_scaler.mean);
                line(&mut s, "inner_scale", &m.x_scaler.scale);
                line(&mut s, "w1", &m.w1);
                line(&mut s, "b1", &m.b1);
                line(&mut s, "w2", &m.w2);
                let _ = writeln!(s, "b2 {}", m.b2);
            }
            ModelBody::Anfis(f) => {
                let _ = writeln!(s, "rules {}", f.rules.len());
                for (r, rule) in f.rules.iter().enumerate() {
                    let _ = writeln!(s, "rule {r}");
                    for (i, m) in rule.premises.iter().enumerate() {
                        let _ = writeln!(s, "premise {i} {} {} {}", m.a, m.b, m.c);
                    }
                    let mut cons = rule.coeffs.clone();
                    cons.push(rule.bias);
                    line(&mut s, "consequent", &cons);
                }
            }
            ModelBody::Gmdh(g) => {
                let c = &g.config;
                let _ = writeln!(
                    s,
                    "config {} {} {} {} {}",
                    c.max_neurons, c.max_layers, c.pressure, c.fit_fraction, c.seed
                );
                let _ = writeln!(s, "layers {}", g.layers.len());
                for (l, layer) in g.layers.iter().enumerate() {
                    let _ = writeln!(s, "layer {l} {}", layer.len());
                    for n in layer {
                        let _ = write!(s, "neuron {} {} {}", n.inputs.0, n.inputs.1, n.criterion);
                        for c in n.coeffs {
                            let _ = write!(s, " {c}");
                        }
                        s.push('\n');
                    }
                }
            }
        }
        s.push_str("end\n");
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let lines: Vec<String> = f.lines().collect::<std::io::Result<_>>()?;
        Self::parse(&lines.join("\n"))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut p = Parser::new(text);
        let version: u32 = p.scalar("drawres-model")?;
        if version != FORMAT_VERSION {
            return Err(p.error(format!("unsupported format version {version}")));
        }
        let method = p.rest("method")?;
        let kind = p.rest("kind")?;
        let feat = p.words("features")?;
        let d: usize = parse_tok(&p, feat.first().map(String::as_str).unwrap_or(""))?;
        if feat.len() != d + 1 {
            return Err(p.error(format!("expected {d} feature names, got {}", feat.len() - 1)));
        }
        let features = feat[1..].to_vec();
        let x_scaler = Standardizer {
            mean: p.reals("x_mean", Some(d))?,
            scale: p.reals("x_scale", Some(d))?,
        };
        let body = match kind.as_str() {
            "mlffnn" => {
                let hidden: usize = p.scalar("hidden")?;
                let y_scaler = TargetScaler {
                    mean: p.scalar("y_mean")?,
                    scale: p.scalar("y_scale")?,
                };
                let inner = Standardizer {
                    mean: p.reals("inner_mean", Some(d))?,
                    scale: p.reals("inner_scale", Some(d))?,
                };
                ModelBody::Mlffnn(MlffnnModel {
                    inputs: d,
                    hidden,
                    w1: p.reals("w1", Some(hidden * d))?,
                    b1: p.reals("b1", Some(hidden))?,
                    w2: p.reals("w2", Some(hidden))?,
                    b2: p.scalar("b2")?,
                    x_scaler: inner,
                    y_scaler,
                })
            }
            "anfis" => {
                let count: usize = p.scalar("rules")?;
                let mut rules = Vec::with_capacity(count);
                for r in 0..count {
                    let idx: usize = p.scalar("rule")?;
                    if idx != r {
                        return Err(p.error(format!("expected rule {r}, found {idx}")));
                    }
                    let mut premises = Vec::with_capacity(d);
                    for i in 0..d {
                        let v = p.reals("premise", Some(4))?;
                        if v[0] != i as f64 {
                            return Err(p.error(format!("expected premise {i}")));
                        }
                        premises.push(Bell { a: v[1], b: v[2], c: v[3] });
                    }
                    let mut cons = p.reals("consequent", Some(d + 1))?;
                    let bias = cons.pop().expect("length checked");
                    rules.push(Rule {
                        premises,
                        coeffs: cons,
                        bias,
                    });
                }
                let fis = FuzzyRuleBase { inputs: d, rules };
                fis.validate().map_err(|e| p.error(e.to_string()))?;
                ModelBody::Anfis(fis)
            }
            "gmdh" => {
                let c = p.words("config")?;
                if c.len() != 5 {
                    return Err(p.error("config needs 5 fields".into()));
                }
                let config = GmdhConfig {
                    max_neurons: parse_tok(&p, &c[0])?,
                    max_layers: parse_tok(&p, &c[1])?,
                    pressure: parse_tok(&p, &c[2])?,
                    fit_fraction: parse_tok(&p, &c[3])?,
                    seed: parse_tok(&p, &c[4])?,
                };
                let depth: usize = p.scalar("layers")?;
                let mut layers = Vec::with_capacity(depth);
                let mut width = d;
                for l in 0..depth {
                    let h = p.words("layer")?;
                    if h.len() != 2 || parse_tok::<usize>(&p, &h[0])? != l {
                        return Err(p.error(format!("expected `layer {l} <count>`")));
                    }
                    let count: usize = parse_tok(&p, &h[1])?;
                    let mut layer = Vec::with_capacity(count);
                    for _ in 0..count {
                        let w = p.words("neuron")?;
                        if w.len() != 9 {
                            return Err(p.error("neuron needs 9 fields".into()));
                        }
                        let (i, j): (usize, usize) = (parse_tok(&p, &w[0])?, parse_tok(&p, &w[1])?);
                        if i >= width || j >= width {
                            return Err(p.error(format!("neuron input out of range (width {width})")));
                        }
                        let mut coeffs = [0.0; 6];
                        for (k, c) in coeffs.iter_mut().enumerate() {
                            *c = parse_tok(&p, &w[3 + k])?;
                        }
                        layer.push(Neuron {
                            inputs: (i, j),
                            criterion: parse_tok(&p, &w[2])?,
                            coeffs,
                        });
                    }
                    width = count;
                    layers.push(layer);
                }
                if layers.last().map(Vec::len) != Some(1) {
                    return Err(p.error("final GMDH layer must hold exactly one neuron".into()));
                }
                ModelBody::Gmdh(GmdhNetwork {
                    inputs: d,
                    layers,
                    config,
                })
            }
            other => return Err(p.error(format!("unknown model kind `{other}`"))),
        };
        p.expect_end()?;
        Ok(Self {
            method,
            features,
            x_scaler,
            body,
        })
    }
}

fn line(s: &mut String, key: &str, values: &[f64]) {
    s.push_str(key);
    for v in values {
        let _ = write!(s, " {v}");
    }
    s.push('\n');
}

fn parse_tok<T: std::str::FromStr>(p: &Parser, tok: &str) -> Result<T> {
    tok.parse().map_err(|_| p.error(format!("cannot parse `{tok}`")))
}

struct Parser<'a> {
    /// (1-based source line, content) of non-blank lines.
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| (i + 1, l))
                .collect(),
            pos: 0,
        }
    }

    fn error(&self, message: String) -> Error {
        // pos has already advanced past the offending line
        let line = match self.pos.checked_sub(1).and_then(|k| self.lines.get(k)) {
            Some(&(n, _)) => n,
            None => self.lines.last().map_or(1, |&(n, _)| n + 1),
        };
        Error::ModelFormat { line, message }
    }

    /// Next line, which must start with `key`; returns the remainder.
    fn take(&mut self, key: &str) -> Result<&'a str> {
        let Some(&(_, l)) = self.lines.get(self.pos) else {
            self.pos += 1;
            return Err(self.error(format!("expected `{key}`, found end of file")));
        };
        self.pos += 1;
        let l = l.trim();
        let (head, rest) = l.split_once(' ').unwrap_or((l, ""));
        if head != key {
            return Err(self.error(format!("expected `{key}`, found `{head}`")));
        }
        Ok(rest.trim())
    }

    fn rest(&mut self, key: &str) -> Result<String> {
        Ok(self.take(key)?.to_string())
    }

    fn words(&mut self, key: &str) -> Result<Vec<String>> {
        Ok(self.take(key)?.split_whitespace().map(str::to_string).collect())
    }

    fn scalar<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let r = self.take(key)?;
        parse_tok(self, r)
    }

    fn reals(&mut self, key: &str, expect: Option<usize>) -> Result<Vec<f64>> {
        let w = self.words(key)?;
        if let Some(n) = expect {
            if w.len() != n {
                return Err(self.error(format!("`{key}` needs {n} values, got {}", w.len())));
            }
        }
        w.iter().map(|t| parse_tok(self, t)).collect()
    }

    fn expect_end(&mut self) -> Result<()> {
        self.take("end")?;
        if self.pos < self.lines.len() {
            return Err(self.error("trailing content after `end`".into()));
        }
        Ok(())
    }
}
