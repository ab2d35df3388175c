//! Flat parameter vectors for fuzzy rule bases.
//!
//! Order is rule-major: for each rule, `(a, b, c)` for every input, then the
//! input coefficients and the bias of its consequent.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::predictors::anfis::{Bell, FuzzyRuleBase, Rule, MIN_WIDTH};
use crate::stats::{min_max, std_dev};

pub const CONSEQUENT_LIMIT: f64 = 1e6;
pub const EXPONENT_RANGE: (f64, f64) = (0.5, 5.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Width { rule: usize, input: usize },
    Exponent { rule: usize, input: usize },
    Centre { rule: usize, input: usize },
    Coefficient { rule: usize, input: usize },
    Bias { rule: usize },
}

/// Per-input statistics that set the premise bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnStats {
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl ColumnStats {
    pub fn of(x: &Matrix) -> Vec<ColumnStats> {
        (0..x.cols())
            .map(|j| {
                let col = x.column(j);
                let (min, max) = min_max(&col);
                ColumnStats {
                    sd: std_dev(&col),
                    min,
                    max,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
    pub layout: Vec<Segment>,
    pub inputs: usize,
    pub rules: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Unflattened {
    pub fis: FuzzyRuleBase,
    /// True when any value lay outside its bounds and was clipped.
    pub clipped: bool,
}

pub fn layout_len(rules: usize, inputs: usize) -> usize {
    rules * (3 * inputs + inputs + 1)
}

fn nominal_bounds(seg: Segment, stats: &[ColumnStats]) -> (f64, f64) {
    match seg {
        Segment::Width { input, .. } => (MIN_WIDTH, (10.0 * stats[input].sd).max(MIN_WIDTH)),
        Segment::Exponent { .. } => EXPONENT_RANGE,
        Segment::Centre { input, .. } => {
            let s = stats[input];
            (s.min - s.sd, s.max + s.sd)
        }
        Segment::Coefficient { .. } | Segment::Bias { .. } => (-CONSEQUENT_LIMIT, CONSEQUENT_LIMIT),
    }
}

/// Flatten `fis`. Bounds are the nominal box widened, where needed, to
/// contain the current values so that the round trip is exact.
pub fn flatten(fis: &FuzzyRuleBase, stats: &[ColumnStats]) -> Result<ParamVector> {
    if stats.len() != fis.inputs {
        return Err(Error::LayoutMismatch {
            expected: fis.inputs,
            actual: stats.len(),
        });
    }
    let d = fis.inputs;
    let mut values = Vec::with_capacity(layout_len(fis.rules.len(), d));
    let mut layout = Vec::with_capacity(values.capacity());
    for (r, rule) in fis.rules.iter().enumerate() {
        for (i, m) in rule.premises.iter().enumerate() {
            values.extend_from_slice(&[m.a, m.b, m.c]);
            layout.extend_from_slice(&[
                Segment::Width { rule: r, input: i },
                Segment::Exponent { rule: r, input: i },
                Segment::Centre { rule: r, input: i },
            ]);
        }
        for (i, &p) in rule.coeffs.iter().enumerate() {
            values.push(p);
            layout.push(Segment::Coefficient { rule: r, input: i });
        }
        values.push(rule.bias);
        layout.push(Segment::Bias { rule: r });
    }
    let bounds = layout
        .iter()
        .zip(&values)
        .map(|(&seg, &v)| {
            let (lo, hi) = nominal_bounds(seg, stats);
            (lo.min(v), hi.max(v))
        })
        .collect();
    Ok(ParamVector {
        values,
        bounds,
        layout,
        inputs: d,
        rules: fis.rules.len(),
    })
}

/// Rebuild a rule base from `pv.values`, clipping each value to its bounds.
pub fn unflatten(pv: &ParamVector) -> Result<Unflattened> {
    unflatten_values(pv, &pv.values)
}

/// Like [`unflatten`] but with a candidate vector in place of `pv.values`.
pub fn unflatten_values(pv: &ParamVector, values: &[f64]) -> Result<Unflattened> {
    let expected = layout_len(pv.rules, pv.inputs);
    for actual in [values.len(), pv.bounds.len(), pv.layout.len()] {
        if actual != expected {
            return Err(Error::LayoutMismatch { expected, actual });
        }
    }
    let d = pv.inputs;
    let mut clipped = false;
    let mut it = values.iter().zip(&pv.bounds).map(|(&v, &(lo, hi))| {
        let c = v.clamp(lo, hi);
        clipped |= c != v;
        c
    });
    let mut rules = Vec::with_capacity(pv.rules);
    for _ in 0..pv.rules {
        let mut premises = Vec::with_capacity(d);
        for _ in 0..d {
            let (a, b, c) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
            premises.push(Bell { a, b, c });
        }
        let coeffs: Vec<f64> = (0..d).map(|_| it.next().unwrap()).collect();
        let bias = it.next().unwrap();
        rules.push(Rule { premises, coeffs, bias });
    }
    drop(it);
    Ok(Unflattened {
        fis: FuzzyRuleBase::new(d, rules)?,
        clipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fis() -> FuzzyRuleBase {
        let rule = |c: f64, bias| Rule {
            premises: vec![Bell { a: 0.8, b: 1.0, c }, Bell { a: 1.2, b: 2.0, c: -c }],
            coeffs: vec![0.5, -0.25],
            bias,
        };
        FuzzyRuleBase::new(2, vec![rule(-1.0, 3.0), rule(1.0, -3.0)]).unwrap()
    }

    fn stats() -> Vec<ColumnStats> {
        vec![ColumnStats { sd: 1.0, min: -2.0, max: 2.0 }; 2]
    }

    #[test]
    fn two_rules_two_inputs_is_18_long() {
        assert_eq!(flatten(&fis(), &stats()).unwrap().values.len(), 18);
    }

    #[test]
    fn round_trip_exact() {
        let mut f = fis();
        f.rules[0].premises[0].b = 0.1; // outside the nominal exponent range
        f.rules[1].bias = 5e7;
        let pv = flatten(&f, &stats()).unwrap();
        let back = unflatten(&pv).unwrap();
        assert_eq!(back.fis, f);
        assert!(!back.clipped);
    }

    #[test]
    fn out_of_bounds_clipped() {
        let pv = flatten(&fis(), &stats()).unwrap();
        let mut v = pv.values.clone();
        v[0] = -4.0; // width
        v[2] = 99.0; // centre
        v[17] = -1e9; // bias
        let u = unflatten_values(&pv, &v).unwrap();
        assert!(u.clipped);
        assert_eq!(u.fis.rules[0].premises[0].a, MIN_WIDTH);
        assert_eq!(u.fis.rules[0].premises[0].c, 3.0);
        assert_eq!(u.fis.rules[1].bias, -CONSEQUENT_LIMIT);
    }

    #[test]
    fn layout_mismatch_reported() {
        let pv = flatten(&fis(), &stats()).unwrap();
        assert!(matches!(
            unflatten_values(&pv, &pv.values[..17]),
            Err(Error::LayoutMismatch { expected: 18, actual: 17 })
        ));
        assert!(flatten(&fis(), &stats()[..1]).is_err());
    }
}
