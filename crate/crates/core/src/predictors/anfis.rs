//! First-order Sugeno fuzzy inference (ANFIS) with Gaussian-bell premises.
//!
//! Membership of input `x` in a set `(a, b, c)` is `exp(-((x - c) / a)^2)^b`.
//! Firing strengths are products of memberships, computed in the log domain
//! and normalised with a log-sum-exp so that far-away inputs still produce a
//! well-defined output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::matrix::Matrix;
use crate::stats::{mse, std_dev};

pub const MIN_WIDTH: f64 = 1e-6;
pub const MIN_EXPONENT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bell {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Bell {
    #[inline]
    pub fn log_membership(&self, x: f64) -> f64 {
        let u = (x - self.c) / self.a;
        -self.b * u * u
    }

    pub fn membership(&self, x: f64) -> f64 {
        self.log_membership(x).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    /// One membership function per input.
    pub premises: Vec<Bell>,
    /// Affine consequent `coeffs . x + bias`.
    pub coeffs: Vec<f64>,
    pub bias: f64,
}

impl Rule {
    #[inline]
    fn consequent(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(p, v)| p * v).sum::<f64>() + self.bias
    }

    fn log_strength(&self, x: &[f64]) -> f64 {
        self.premises.iter().zip(x).map(|(m, &v)| m.log_membership(v)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyRuleBase {
    pub inputs: usize,
    pub rules: Vec<Rule>,
}

/// Intermediate quantities of one evaluation, indexed by rule.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalTrace {
    /// `memberships[r][i]`: membership of input i in rule r's set.
    pub memberships: Vec<Vec<f64>>,
    pub firing: Vec<f64>,
    pub normalized: Vec<f64>,
    /// `normalized[r] * consequent_r(x)`.
    pub rule_outputs: Vec<f64>,
    pub output: f64,
}

impl FuzzyRuleBase {
    pub fn new(inputs: usize, rules: Vec<Rule>) -> Result<Self> {
        let fis = Self { inputs, rules };
        fis.validate()?;
        Ok(fis)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rules.is_empty() {
            return Err(Error::invalid("rule base needs at least one rule"));
        }
        for (r, rule) in self.rules.iter().enumerate() {
            if rule.premises.len() != self.inputs || rule.coeffs.len() != self.inputs {
                return Err(Error::invalid(format!("rule {r} does not have {} inputs", self.inputs)));
            }
            for (i, m) in rule.premises.iter().enumerate() {
                if !(m.a > 0.0 && m.b > 0.0 && m.c.is_finite() && m.a.is_finite() && m.b.is_finite()) {
                    return Err(Error::invalid(format!("rule {r}, input {i}: invalid membership {m:?}")));
                }
            }
        }
        Ok(())
    }

    /// Normalised firing strengths written into `wbar`.
    fn normalized_strengths(&self, x: &[f64], wbar: &mut [f64]) -> Result<()> {
        let mut top = f64::NEG_INFINITY;
        for (w, rule) in wbar.iter_mut().zip(&self.rules) {
            *w = rule.log_strength(x);
            top = top.max(*w);
        }
        if !top.is_finite() {
            return Err(Error::NoRuleFires);
        }
        let mut total = 0.0;
        for w in wbar.iter_mut() {
            *w = (*w - top).exp();
            total += *w;
        }
        for w in wbar.iter_mut() {
            *w /= total;
        }
        Ok(())
    }

    pub fn predict_row(&self, x: &[f64]) -> Result<f64> {
        let mut wbar = vec![0.0; self.rules.len()];
        self.normalized_strengths(x, &mut wbar)?;
        Ok(wbar.iter().zip(&self.rules).map(|(w, r)| w * r.consequent(x)).sum())
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        let mut wbar = vec![0.0; self.rules.len()];
        x.row_iter()
            .map(|row| {
                self.normalized_strengths(row, &mut wbar)?;
                Ok(wbar.iter().zip(&self.rules).map(|(w, r)| w * r.consequent(row)).sum())
            })
            .collect()
    }

    pub fn training_mse(&self, x: &Matrix, y: &[f64]) -> Result<f64> {
        Ok(mse(&self.predict(x)?, y))
    }
}

/// Evaluate with a full layer-by-layer trace.
pub fn anfis_eval(fis: &FuzzyRuleBase, x: &[f64]) -> Result<(f64, EvalTrace)> {
    if x.len() != fis.inputs {
        return Err(Error::invalid(format!("expected {} inputs, got {}", fis.inputs, x.len())));
    }
    let memberships: Vec<Vec<f64>> = fis
        .rules
        .iter()
        .map(|r| r.premises.iter().zip(x).map(|(m, &v)| m.membership(v)).collect())
        .collect();
    let firing: Vec<f64> = memberships.iter().map(|m| m.iter().product()).collect();
    let mut normalized = vec![0.0; fis.rules.len()];
    fis.normalized_strengths(x, &mut normalized)?;
    let rule_outputs: Vec<f64> = normalized
        .iter()
        .zip(&fis.rules)
        .map(|(w, r)| w * r.consequent(x))
        .collect();
    let output = rule_outputs.iter().sum();
    Ok((
        output,
        EvalTrace {
            memberships,
            firing,
            normalized,
            rule_outputs,
            output,
        },
    ))
}

/// One rule per centre, widths from column standard deviations, unit
/// exponents, consequents fitted by least squares.
pub fn anfis_init(centers: &[Vec<f64>], x: &Matrix, y: &[f64]) -> Result<FuzzyRuleBase> {
    if centers.is_empty() {
        return Err(Error::invalid("need at least one cluster centre"));
    }
    let d = x.cols();
    if centers.iter().any(|c| c.len() != d) {
        return Err(Error::invalid("centre dimension differs from input dimension"));
    }
    let widths: Vec<f64> = (0..d).map(|j| std_dev(&x.column(j)).max(MIN_WIDTH)).collect();
    let rules = centers
        .iter()
        .map(|c| Rule {
            premises: c.iter().zip(&widths).map(|(&c, &a)| Bell { a, b: 1.0, c }).collect(),
            coeffs: vec![0.0; d],
            bias: 0.0,
        })
        .collect();
    let fis = FuzzyRuleBase::new(d, rules)?;
    Ok(anfis_ls_consequents(&fis, x, y)?.fis)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsStep {
    pub fis: FuzzyRuleBase,
    pub rank: usize,
    pub rank_deficient: bool,
}

/// Rows of the consequent design matrix: for each rule, `wbar_r * [x, 1]`.
pub fn consequent_design(fis: &FuzzyRuleBase, x: &Matrix) -> Result<Vec<f64>> {
    let (rn, d) = (fis.rules.len(), fis.inputs);
    let cols = rn * (d + 1);
    let mut a = vec![0.0; x.rows() * cols];
    let mut wbar = vec![0.0; rn];
    for (i, row) in x.row_iter().enumerate() {
        fis.normalized_strengths(row, &mut wbar)?;
        let out = &mut a[i * cols..(i + 1) * cols];
        for (r, &w) in wbar.iter().enumerate() {
            let block = &mut out[r * (d + 1)..(r + 1) * (d + 1)];
            for (b, &v) in block.iter_mut().zip(row) {
                *b = w * v;
            }
            block[d] = w;
        }
    }
    Ok(a)
}

/// Replace consequents with the (minimum-norm) least-squares solution.
pub fn anfis_ls_consequents(fis: &FuzzyRuleBase, x: &Matrix, y: &[f64]) -> Result<LsStep> {
    if x.rows() != y.len() || x.rows() == 0 {
        return Err(Error::invalid("need equal, non-zero row and target counts"));
    }
    let d = fis.inputs;
    let a = consequent_design(fis, x)?;
    let sol = lstsq(&a, fis.rules.len() * (d + 1), y);
    let mut out = fis.clone();
    for (rule, theta) in out.rules.iter_mut().zip(sol.coefficients.chunks(d + 1)) {
        rule.coeffs.copy_from_slice(&theta[..d]);
        rule.bias = theta[d];
    }
    Ok(LsStep {
        fis: out,
        rank: sol.rank,
        rank_deficient: sol.rank_deficient,
    })
}

/// Training MSE and its gradient with respect to every premise parameter,
/// laid out as `grad[r][i] = [d/da, d/db, d/dc]`.
pub fn premise_gradient(fis: &FuzzyRuleBase, x: &Matrix, y: &[f64]) -> Result<(f64, Vec<Vec<[f64; 3]>>)> {
    let (rn, d) = (fis.rules.len(), fis.inputs);
    let n = y.len() as f64;
    let mut grad = vec![vec![[0.0; 3]; d]; rn];
    let mut wbar = vec![0.0; rn];
    let mut f = vec![0.0; rn];
    let mut loss = 0.0;
    for (row, &t) in x.row_iter().zip(y) {
        fis.normalized_strengths(row, &mut wbar)?;
        for (fr, rule) in f.iter_mut().zip(&fis.rules) {
            *fr = rule.consequent(row);
        }
        let out: f64 = wbar.iter().zip(&f).map(|(w, v)| w * v).sum();
        let e = out - t;
        loss += e * e;
        for r in 0..rn {
            // d out / d log w_r
            let s = 2.0 * e / n * wbar[r] * (f[r] - out);
            if s == 0.0 {
                continue;
            }
            for (i, m) in fis.rules[r].premises.iter().enumerate() {
                let u = (row[i] - m.c) / m.a;
                let g = &mut grad[r][i];
                g[0] += s * 2.0 * m.b * u * u / m.a;
                g[1] += s * -(u * u);
                g[2] += s * 2.0 * m.b * u / m.a;
            }
        }
    }
    for (r, per_rule) in grad.iter().enumerate() {
        for (i, g) in per_rule.iter().enumerate() {
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteGradient { rule: r, input: i });
            }
        }
    }
    Ok((loss / n, grad))
}

fn apply_premise_step(fis: &FuzzyRuleBase, grad: &[Vec<[f64; 3]>], lr: f64) -> FuzzyRuleBase {
    let mut out = fis.clone();
    for (rule, g) in out.rules.iter_mut().zip(grad) {
        for (m, gi) in rule.premises.iter_mut().zip(g) {
            m.a = (m.a - lr * gi[0]).max(MIN_WIDTH);
            m.b = (m.b - lr * gi[1]).max(MIN_EXPONENT);
            m.c -= lr * gi[2];
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridReport {
    /// Training MSE at the end of each epoch.
    pub mse_history: Vec<f64>,
    /// Training MSE right after each least-squares sub-step.
    pub ls_mse: Vec<f64>,
    pub final_learning_rate: f64,
    pub rank_deficient: bool,
}

/// Alternate a least-squares consequent update with one gradient step on the
/// premises. A step that raises the MSE halves the learning rate and is
/// retried once; if it still does not help, the premises are left as they were.
pub fn anfis_train_hybrid(
    fis: &FuzzyRuleBase,
    x: &Matrix,
    y: &[f64],
    epochs: usize,
    learning_rate: f64,
) -> Result<(FuzzyRuleBase, HybridReport)> {
    if epochs == 0 {
        return Err(Error::invalid("hybrid training needs at least one epoch"));
    }
    if !(learning_rate > 0.0) {
        return Err(Error::invalid("learning rate must be positive"));
    }
    let mut lr = learning_rate;
    let mut current = fis.clone();
    let mut report = HybridReport {
        mse_history: Vec::with_capacity(epochs),
        ls_mse: Vec::with_capacity(epochs),
        final_learning_rate: lr,
        rank_deficient: false,
    };
    for _ in 0..epochs {
        let ls = anfis_ls_consequents(&current, x, y)?;
        report.rank_deficient |= ls.rank_deficient;
        current = ls.fis;
        let (base, grad) = premise_gradient(&current, x, y)?;
        report.ls_mse.push(base);
        let mut accepted = None;
        for attempt in 0..2 {
            let cand = apply_premise_step(&current, &grad, lr);
            let m = cand.training_mse(x, y)?;
            if m <= base {
                accepted = Some((cand, m));
                break;
            }
            lr *= 0.5;
            if attempt == 1 {
                break;
            }
        }
        let epoch_mse = match accepted {
            Some((cand, m)) => {
                current = cand;
                m
            }
            None => base,
        };
        report.mse_history.push(epoch_mse);
    }
    report.final_learning_rate = lr;
    Ok((current, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn random_fis(seed: u64, rules: usize, d: usize) -> FuzzyRuleBase {
        let mut g = rng::seeded(seed);
        let rules = (0..rules)
            .map(|_| Rule {
                premises: (0..d)
                    .map(|_| Bell {
                        a: g.gen_range(0.5..2.0),
                        b: g.gen_range(0.5..2.0),
                        c: g.gen_range(-1.0..1.0),
                    })
                    .collect(),
                coeffs: (0..d).map(|_| g.gen_range(-2.0..2.0)).collect(),
                bias: g.gen_range(-2.0..2.0),
            })
            .collect();
        FuzzyRuleBase::new(d, rules).unwrap()
    }

    fn random_x(seed: u64, n: usize, d: usize) -> Matrix {
        let mut g = rng::seeded(seed);
        Matrix::from_vec(n, d, (0..n * d).map(|_| g.gen_range(-2.0..2.0)).collect()).unwrap()
    }

    #[test]
    fn constant_single_rule() {
        let fis = FuzzyRuleBase::new(
            2,
            vec![Rule {
                premises: vec![Bell { a: 1.0, b: 1.0, c: 0.0 }; 2],
                coeffs: vec![0.0, 0.0],
                bias: 5.0,
            }],
        )
        .unwrap();
        for x in [[0.0, 0.0], [3.0, -7.0], [100.0, 100.0]] {
            let (out, trace) = anfis_eval(&fis, &x).unwrap();
            assert_eq!(out, 5.0);
            assert_eq!(trace.normalized, vec![1.0]);
        }
    }

    #[test]
    fn identical_premises_average_biases() {
        let rule = |bias| Rule {
            premises: vec![Bell { a: 0.7, b: 1.3, c: 0.2 }; 2],
            coeffs: vec![0.0, 0.0],
            bias,
        };
        let fis = FuzzyRuleBase::new(2, vec![rule(2.0), rule(4.0)]).unwrap();
        let (out, _) = anfis_eval(&fis, &[0.4, -1.0]).unwrap();
        assert!((out - 3.0).abs() < 1e-12);
    }

    #[test]
    fn far_inputs_still_evaluate() {
        let fis = random_fis(1, 3, 2);
        let out = fis.predict_row(&[1e4, -1e4]).unwrap();
        assert!(out.is_finite());
    }

    #[test]
    fn duplicating_every_rule_leaves_output_unchanged() {
        let fis = random_fis(2, 3, 3);
        let mut dup = fis.clone();
        dup.rules.extend(fis.rules.iter().cloned());
        let x = random_x(3, 50, 3);
        for (p, q) in fis.predict(&x).unwrap().iter().zip(dup.predict(&x).unwrap()) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn ls_recovers_generating_consequents() {
        let truth = random_fis(4, 2, 2);
        let x = random_x(5, 60, 2);
        let y = truth.predict(&x).unwrap();
        let mut start = truth.clone();
        for r in start.rules.iter_mut() {
            r.coeffs.iter_mut().for_each(|c| *c = 0.0);
            r.bias = 0.0;
        }
        let fitted = anfis_ls_consequents(&start, &x, &y).unwrap().fis;
        assert!(fitted.training_mse(&x, &y).unwrap() < 1e-16);
    }

    #[test]
    fn ls_never_worse() {
        let fis = random_fis(6, 3, 2);
        let x = random_x(7, 40, 2);
        let y: Vec<f64> = x.row_iter().map(|r| (r[0] * 3.0).sin() + r[1] * r[1]).collect();
        let before = fis.training_mse(&x, &y).unwrap();
        let after = anfis_ls_consequents(&fis, &x, &y).unwrap().fis.training_mse(&x, &y).unwrap();
        assert!(after <= before);
    }

    #[test]
    fn init_widths_are_column_sd() {
        let x = random_x(8, 30, 2);
        let y: Vec<f64> = x.row_iter().map(|r| r[0] - r[1]).collect();
        let fis = anfis_init(&[vec![0.0, 0.0], vec![1.0, 1.0]], &x, &y).unwrap();
        assert_eq!(fis.rules.len(), 2);
        for rule in &fis.rules {
            for (j, m) in rule.premises.iter().enumerate() {
                assert_eq!(m.a, std_dev(&x.column(j)));
                assert_eq!(m.b, 1.0);
            }
        }
        assert_eq!(fis.rules[1].premises[0].c, 1.0);
    }

    #[test]
    fn hybrid_rejects_zero_epochs() {
        let fis = random_fis(9, 2, 2);
        let x = random_x(10, 20, 2);
        let y = vec![0.0; 20];
        assert!(anfis_train_hybrid(&fis, &x, &y, 0, 0.1).is_err());
    }

    #[test]
    fn hybrid_ls_substeps_never_increase() {
        let x = random_x(11, 80, 2);
        let y: Vec<f64> = x.row_iter().map(|r| (r[0] * 2.0).sin() * r[1] + r[0].abs()).collect();
        let fis = anfis_init(&[vec![-1.0, 0.0], vec![1.0, 0.0]], &x, &y).unwrap();
        let (trained, report) = anfis_train_hybrid(&fis, &x, &y, 30, 0.5).unwrap();
        let mut prev = fis.training_mse(&x, &y).unwrap();
        for (ls, ep) in report.ls_mse.iter().zip(&report.mse_history) {
            assert!(*ls <= prev + 1e-12);
            assert!(*ep <= *ls + 1e-12);
            prev = *ep;
        }
        assert!(trained.training_mse(&x, &y).unwrap() < fis.training_mse(&x, &y).unwrap());
    }
}
