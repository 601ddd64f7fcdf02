//! Dual soft-margin SVM on a precomputed kernel, solved by SMO, with
//! one-vs-one reduction for more than two classes.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{GramMatrix, PointMeta};

/// Coefficients above this count as support vectors.
pub const SUPPORT_THRESHOLD: f64 = 1e-9;
/// SMO stops once the maximal KKT violation drops below this.
pub const SMO_TOLERANCE: f64 = 1e-12;
const MAX_ITERATIONS: usize = 1_000_000;
const TAU: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub alphas: Vec<f64>,
    /// `+1` or `-1` per training index.
    pub labels: Vec<i8>,
    pub bias: f64,
    pub c: f64,
    /// `(positive class, negative class)` when part of a multiclass model.
    pub class_pair: Option<(usize, usize)>,
    pub metadata: Vec<PointMeta>,
}

impl TrainedModel {
    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn support_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.alphas[i] > SUPPORT_THRESHOLD).collect()
    }

    /// `y_i alpha_i` per training index.
    pub fn signed_coeffs(&self) -> Vec<f64> {
        self.alphas.iter().zip(&self.labels).map(|(a, &y)| a * f64::from(y)).collect()
    }

    /// `sum_i alpha_i - 1/2 sum_ij y_i y_j alpha_i alpha_j K_ij`.
    pub fn dual_objective(&self, gram: &GramMatrix) -> f64 {
        dual_objective(&self.alphas, &self.labels, gram)
    }

    /// Largest KKT violation `max_{I_up} -y G - min_{I_low} -y G` (0 when optimal).
    pub fn kkt_residual(&self, gram: &GramMatrix) -> f64 {
        let grad = gradient(&self.alphas, &self.labels, gram);
        let (up, low) = violation_extremes(&self.alphas, &self.labels, &grad, self.c);
        match (up, low) {
            (Some((_, m)), Some((_, mm))) => (m - mm).max(0.0),
            _ => 0.0,
        }
    }
}

/// Outcome of one SMO run.
#[derive(Clone, Debug)]
pub struct SmoReport {
    pub iterations: usize,
    pub final_gap: f64,
    /// Dual objective after every accepted update.
    pub objective_trace: Vec<f64>,
}

fn dual_objective(alphas: &[f64], labels: &[i8], gram: &GramMatrix) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alphas[i] * alphas[j] * f64::from(labels[i] * labels[j]) * gram.at(i, j);
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

fn q(gram: &GramMatrix, y: &[i8], i: usize, j: usize) -> f64 {
    f64::from(y[i] * y[j]) * gram.at(i, j)
}

/// Gradient of `1/2 a^T Q a - e^T a`.
fn gradient(alphas: &[f64], y: &[i8], gram: &GramMatrix) -> Vec<f64> {
    let n = alphas.len();
    (0..n)
        .map(|i| (0..n).map(|j| q(gram, y, i, j) * alphas[j]).sum::<f64>() - 1.0)
        .collect()
}

/// `(argmax over I_up of -y G, argmin over I_low of -y G)` with their values.
#[allow(clippy::type_complexity)]
fn violation_extremes(
    alphas: &[f64],
    y: &[i8],
    grad: &[f64],
    c: f64,
) -> (Option<(usize, f64)>, Option<(usize, f64)>) {
    let mut up: Option<(usize, f64)> = None;
    let mut low: Option<(usize, f64)> = None;
    for t in 0..alphas.len() {
        let v = -f64::from(y[t]) * grad[t];
        let in_up = (y[t] > 0 && alphas[t] < c) || (y[t] < 0 && alphas[t] > 0.0);
        let in_low = (y[t] < 0 && alphas[t] < c) || (y[t] > 0 && alphas[t] > 0.0);
        if in_up && up.is_none_or(|(_, b)| v > b) {
            up = Some((t, v));
        }
        if in_low && low.is_none_or(|(_, b)| v < b) {
            low = Some((t, v));
        }
    }
    (up, low)
}

fn check_inputs(gram: &GramMatrix, labels: &[i8], c: f64) -> Result<()> {
    if labels.len() != gram.n {
        return Err(Error::DimensionMismatch {
            expected: gram.n,
            got: labels.len(),
        });
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParams(format!("box parameter C must be positive, got {c}")));
    }
    if let Some(bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
        return Err(Error::InvalidParams(format!("binary labels must be +1 or -1, got {bad}")));
    }
    let pos = labels.iter().any(|&y| y > 0);
    let neg = labels.iter().any(|&y| y < 0);
    if !(pos && neg) {
        return Err(Error::SingleClass(if pos { 1 } else { -1 }));
    }
    for i in 0..gram.n {
        for j in 0..i {
            if (gram.at(i, j) - gram.at(j, i)).abs() > 1e-12 {
                return Err(Error::NotHermitian((gram.at(i, j) - gram.at(j, i)).abs()));
            }
        }
    }
    Ok(())
}

/// Train with SMO and the all-points bias, returning the iteration report.
pub fn train_binary_with_report(
    gram: &GramMatrix,
    labels: &[i8],
    c: f64,
    metadata: Vec<PointMeta>,
) -> Result<(TrainedModel, SmoReport)> {
    check_inputs(gram, labels, c)?;
    let n = gram.n;
    let y = labels;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut trace = Vec::new();
    let mut iterations = 0;
    let final_gap = loop {
        let (up, low) = violation_extremes(&alpha, y, &grad, c);
        let (Some((i, gmax)), Some((j, gmin))) = (up, low) else {
            break 0.0;
        };
        let gap = gmax - gmin;
        if gap < SMO_TOLERANCE {
            break gap.max(0.0);
        }
        if iterations >= MAX_ITERATIONS {
            if gap < 1e-6 {
                break gap;
            }
            return Err(Error::Numerical(format!("SMO did not converge (gap {gap:.3e})")));
        }
        iterations += 1;
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (qii, qjj, qij) = (q(gram, y, i, i), q(gram, y, j, j), q(gram, y, i, j));
        if y[i] != y[j] {
            let mut quad = qii + qjj + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = qii + qjj - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        if di == 0.0 && dj == 0.0 {
            // no representable progress left
            break gap;
        }
        for t in 0..n {
            grad[t] += q(gram, y, t, i) * di + q(gram, y, t, j) * dj;
        }
        // dual objective -(1/2 a^T Q a - e^T a) = -1/2 sum a (G - 1)
        trace.push(-0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>());
    };
    let bias = compute_bias(&alpha, y, gram);
    let model = TrainedModel {
        alphas: alpha,
        labels: y.to_vec(),
        bias,
        c,
        class_pair: None,
        metadata,
    };
    Ok((
        model,
        SmoReport {
            iterations,
            final_gap,
            objective_trace: trace,
        },
    ))
}

pub fn train_binary(gram: &GramMatrix, labels: &[i8], c: f64, metadata: Vec<PointMeta>) -> Result<TrainedModel> {
    Ok(train_binary_with_report(gram, labels, c, metadata)?.0)
}

/// `b = (1/M) sum_i (y_i - sum_j alpha_j y_j K_ij)`, averaged over every
/// training point.
pub fn compute_bias(alphas: &[f64], labels: &[i8], gram: &GramMatrix) -> f64 {
    let n = alphas.len();
    let total: f64 = (0..n)
        .map(|i| {
            let f: f64 = (0..n).map(|j| alphas[j] * f64::from(labels[j]) * gram.at(i, j)).sum();
            f64::from(labels[i]) - f
        })
        .sum();
    total / n as f64
}

/// The conventional bias: average of `y_i - f(x_i)` over free support
/// vectors, or the midpoint of the feasible interval when none are free.
pub fn free_support_bias(alphas: &[f64], labels: &[i8], gram: &GramMatrix, c: f64) -> f64 {
    let n = alphas.len();
    let resid = |i: usize| {
        let f: f64 = (0..n).map(|j| alphas[j] * f64::from(labels[j]) * gram.at(i, j)).sum();
        f64::from(labels[i]) - f
    };
    let free: Vec<usize> = (0..n).filter(|&i| alphas[i] > SUPPORT_THRESHOLD && alphas[i] < c - SUPPORT_THRESHOLD).collect();
    if !free.is_empty() {
        return free.iter().map(|&i| resid(i)).sum::<f64>() / free.len() as f64;
    }
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..n {
        let r = resid(i);
        let at_upper = alphas[i] >= c - SUPPORT_THRESHOLD;
        // y_i (f + b) >= 1 for alpha = 0, <= 1 for alpha = C
        if (labels[i] > 0) != at_upper {
            lo = lo.max(r);
        } else {
            hi = hi.min(r);
        }
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo,
        (false, true) => hi,
        _ => 0.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decision {
    pub sign: i8,
    pub margin: f64,
}

/// `margin = b + sum_i alpha_i y_i row_i`; `sign(0) = +1`.
pub fn decide_binary(model: &TrainedModel, row: &[f64]) -> Result<Decision> {
    if row.len() != model.len() {
        return Err(Error::DimensionMismatch {
            expected: model.len(),
            got: row.len(),
        });
    }
    let margin = model.bias + model.signed_coeffs().iter().zip(row).map(|(c, r)| c * r).sum::<f64>();
    Ok(Decision {
        sign: if margin >= 0.0 { 1 } else { -1 },
        margin,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairModel {
    /// Indices into the full training set.
    pub indices: Vec<usize>,
    pub model: TrainedModel,
}

impl PairModel {
    pub fn classes(&self) -> (usize, usize) {
        self.model.class_pair.expect("pair models always carry their classes")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MulticlassModel {
    pub classes: Vec<usize>,
    pub pairs: Vec<PairModel>,
    pub training_size: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub class: usize,
    /// Votes per entry of `classes`.
    pub votes: Vec<usize>,
    /// Margin of each pair model, in `pairs` order.
    pub margins: Vec<f64>,
}

/// One-vs-one training. `classes` lists the class ids to separate; each must
/// have members in `labels`. The lower id of a pair is its `+1` class.
pub fn train_multiclass(
    gram: &GramMatrix,
    labels: &[usize],
    classes: &[usize],
    c: f64,
    metadata: &[PointMeta],
) -> Result<MulticlassModel> {
    if labels.len() != gram.n {
        return Err(Error::DimensionMismatch {
            expected: gram.n,
            got: labels.len(),
        });
    }
    if metadata.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: metadata.len(),
        });
    }
    let mut classes = classes.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InvalidParams("need at least two classes".into()));
    }
    for &cl in &classes {
        if !labels.contains(&cl) {
            return Err(Error::EmptyClass(cl));
        }
    }
    if let Some(stray) = labels.iter().find(|l| !classes.contains(l)) {
        return Err(Error::InvalidParams(format!("label {stray} is not among the listed classes")));
    }
    let jobs: Vec<(usize, usize)> = (0..classes.len())
        .flat_map(|a| (a + 1..classes.len()).map(move |b| (a, b)))
        .map(|(a, b)| (classes[a], classes[b]))
        .collect();
    let pairs = jobs
        .par_iter()
        .map(|&(pos, neg)| {
            let indices: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == pos || labels[i] == neg).collect();
            let sub = gram.submatrix(&indices);
            let y: Vec<i8> = indices.iter().map(|&i| if labels[i] == pos { 1 } else { -1 }).collect();
            let meta = indices.iter().map(|&i| metadata[i].clone()).collect();
            let mut model = train_binary(&sub, &y, c, meta)?;
            model.class_pair = Some((pos, neg));
            Ok(PairModel { indices, model })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MulticlassModel {
        classes,
        pairs,
        training_size: labels.len(),
    })
}

/// Majority vote; ties go to the largest summed |margin| of won duels, then
/// to the lowest class id.
pub fn predict_multiclass(model: &MulticlassModel, row: &[f64]) -> Result<Prediction> {
    if row.len() != model.training_size {
        return Err(Error::DimensionMismatch {
            expected: model.training_size,
            got: row.len(),
        });
    }
    let mut votes = vec![0usize; model.classes.len()];
    let mut strength = vec![0.0f64; model.classes.len()];
    let mut margins = Vec::with_capacity(model.pairs.len());
    for pair in &model.pairs {
        let sub: Vec<f64> = pair.indices.iter().map(|&i| row[i]).collect();
        let d = decide_binary(&pair.model, &sub)?;
        let (pos, neg) = pair.classes();
        let winner = if d.sign > 0 { pos } else { neg };
        let w = model.classes.iter().position(|&c| c == winner).expect("pair classes are listed");
        votes[w] += 1;
        strength[w] += d.margin.abs();
        margins.push(d.margin);
    }
    let mut best = 0;
    for i in 1..model.classes.len() {
        let better = votes[i] > votes[best] || (votes[i] == votes[best] && strength[i] > strength[best]);
        if better {
            best = i;
        }
    }
    Ok(Prediction {
        class: model.classes[best],
        votes,
        margins,
    })
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_binary(out: &mut String, m: &TrainedModel) {
    let pair = match m.class_pair {
        Some((a, b)) => format!("{a} {b}"),
        None => "- -".into(),
    };
    let _ = writeln!(out, "binary {} {} {}", m.len(), fmt_f64(m.c), pair);
    let _ = writeln!(out, "bias {}", fmt_f64(m.bias));
    for i in 0..m.len() {
        let meta = m.metadata.get(i);
        let _ = writeln!(
            out,
            "{} {:+} {} {} {} {}",
            fmt_f64(m.alphas[i]),
            m.labels[i],
            fmt_f64(meta.map_or(f64::NAN, |p| p.k)),
            fmt_f64(meta.map_or(f64::NAN, |p| p.h)),
            meta.map_or("none", |p| p.sector.as_str()),
            meta.map_or("none", |p| p.label.as_str()),
        );
    }
}

struct Tokens<'a> {
    lines: std::iter::Peekable<std::str::Lines<'a>>,
}

fn bad(reason: impl Into<String>) -> Error {
    Error::format("SVM model", reason)
}

impl<'a> Tokens<'a> {
    fn line(&mut self) -> Result<Vec<&'a str>> {
        loop {
            let l = self.lines.next().ok_or_else(|| bad("unexpected end of file"))?;
            if !l.trim().is_empty() {
                return Ok(l.split_whitespace().collect());
            }
        }
    }
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| bad(format!("cannot parse {s:?}")))
}

fn read_binary(tok: &mut Tokens<'_>) -> Result<TrainedModel> {
    let head = tok.line()?;
    if head.len() != 5 || head[0] != "binary" {
        return Err(bad("expected `binary M C pos neg`"));
    }
    let n: usize = parse(head[1])?;
    let c: f64 = parse(head[2])?;
    let class_pair = match (head[3], head[4]) {
        ("-", "-") => None,
        (a, b) => Some((parse(a)?, parse(b)?)),
    };
    let b = tok.line()?;
    if b.len() != 2 || b[0] != "bias" {
        return Err(bad("expected `bias b`"));
    }
    let bias = parse(b[1])?;
    let mut alphas = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut metadata = Vec::with_capacity(n);
    for _ in 0..n {
        let row = tok.line()?;
        if row.len() != 6 {
            return Err(bad("expected `alpha y k h sector label`"));
        }
        alphas.push(parse(row[0])?);
        let y: i8 = parse(row[1])?;
        if y != 1 && y != -1 {
            return Err(bad(format!("label {y} is not +-1")));
        }
        labels.push(y);
        metadata.push(PointMeta {
            k: parse(row[2])?,
            h: parse(row[3])?,
            sector: row[4].to_string(),
            label: row[5].to_string(),
        });
    }
    Ok(TrainedModel {
        alphas,
        labels,
        bias,
        c,
        class_pair,
        metadata,
    })
}

impl TrainedModel {
    pub fn to_text(&self) -> String {
        let mut out = String::from("qphase-svm 1\n");
        write_binary(&mut out, self);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tok = Tokens {
            lines: text.lines().peekable(),
        };
        if tok.line()? != ["qphase-svm", "1"] {
            return Err(bad("missing `qphase-svm 1` header"));
        }
        read_binary(&mut tok)
    }
}

impl MulticlassModel {
    pub fn to_text(&self) -> String {
        let mut out = String::from("qphase-svm-multiclass 1\n");
        let classes: Vec<String> = self.classes.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "classes {}", classes.join(" "));
        let _ = writeln!(out, "training_size {}", self.training_size);
        let _ = writeln!(out, "pairs {}", self.pairs.len());
        for p in &self.pairs {
            let idx: Vec<String> = p.indices.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(out, "indices {}", idx.join(" "));
            write_binary(&mut out, &p.model);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tok = Tokens {
            lines: text.lines().peekable(),
        };
        if tok.line()? != ["qphase-svm-multiclass", "1"] {
            return Err(bad("missing `qphase-svm-multiclass 1` header"));
        }
        let cl = tok.line()?;
        if cl.first() != Some(&"classes") {
            return Err(bad("expected `classes ...`"));
        }
        let classes = cl[1..].iter().map(|s| parse(s)).collect::<Result<Vec<usize>>>()?;
        let ts = tok.line()?;
        if ts.len() != 2 || ts[0] != "training_size" {
            return Err(bad("expected `training_size n`"));
        }
        let training_size = parse(ts[1])?;
        let pc = tok.line()?;
        if pc.len() != 2 || pc[0] != "pairs" {
            return Err(bad("expected `pairs n`"));
        }
        let count: usize = parse(pc[1])?;
        let mut pairs = Vec::with_capacity(count);
        for _ in 0..count {
            let ix = tok.line()?;
            if ix.first() != Some(&"indices") {
                return Err(bad("expected `indices ...`"));
            }
            let indices = ix[1..].iter().map(|s| parse(s)).collect::<Result<Vec<usize>>>()?;
            let model = read_binary(&mut tok)?;
            if model.class_pair.is_none() || model.len() != indices.len() {
                return Err(bad("pair block inconsistent with its index list"));
            }
            if indices.iter().any(|&i| i >= training_size) {
                return Err(bad("pair index beyond the training size"));
            }
            pairs.push(PairModel { indices, model });
        }
        Ok(MulticlassModel {
            classes,
            pairs,
            training_size,
        })
    }
}
