use std::fmt;

use crate::error::{Error, Result};

/// Counts of (true class, predicted class) pairs; rows are the true class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        Self {
            n: num_classes,
            counts: vec![0; num_classes * num_classes],
        }
    }

    pub fn from_counts(rows: &[Vec<u64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Validation("confusion matrix must be square".into()));
        }
        Ok(Self {
            n,
            counts: rows.concat(),
        })
    }

    pub fn num_classes(&self) -> usize {
        self.n
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.n + pred]
    }

    pub fn add(&mut self, truth: usize, pred: usize) {
        self.counts[truth * self.n + pred] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        (0..self.n).map(|j| self.get(truth, j)).sum()
    }

    pub fn col_sum(&self, pred: usize) -> u64 {
        (0..self.n).map(|i| self.get(i, pred)).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Header `true\pred,0,1,…`, then one row per true class.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("true\\pred");
        for j in 0..self.n {
            s.push_str(&format!(",{j}"));
        }
        s.push('\n');
        for i in 0..self.n {
            s.push_str(&i.to_string());
            for j in 0..self.n {
                s.push_str(&format!(",{}", self.get(i, j)));
            }
            s.push('\n');
        }
        s
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .counts
            .iter()
            .map(|c| c.to_string().len())
            .max()
            .unwrap_or(1)
            .max(self.n.to_string().len())
            .max(4);
        write!(f, "{:>6}", "t\\p")?;
        for j in 0..self.n {
            write!(f, " {j:>width$}")?;
        }
        for i in 0..self.n {
            write!(f, "\n{i:>6}")?;
            for j in 0..self.n {
                write!(f, " {:>width$}", self.get(i, j))?;
            }
        }
        Ok(())
    }
}

/// Tallies `pred` against `truth`.
pub fn confusion(pred: &[usize], truth: &[usize], num_classes: usize) -> Result<ConfusionMatrix> {
    if pred.len() != truth.len() {
        return Err(Error::dim(
            "confusion",
            format!("{} predictions", pred.len()),
            format!("{} labels", truth.len()),
        ));
    }
    let mut cm = ConfusionMatrix::new(num_classes);
    for (&p, &t) in pred.iter().zip(truth) {
        if p >= num_classes || t >= num_classes {
            return Err(Error::Validation(format!(
                "label pair (true {t}, predicted {p}) out of range for {num_classes} classes"
            )));
        }
        cm.add(t, p);
    }
    Ok(cm)
}

/// One-vs-rest scores of a single class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when a ratio had a zero denominator and was reported as 0.
    pub zero_division: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// True when any class hit a zero denominator.
    pub zero_division: bool,
}

fn ratio(num: u64, den: u64, flag: &mut bool) -> f64 {
    if den == 0 {
        *flag = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy plus per-class and macro-averaged precision, recall and F1.
/// Ratios with a zero denominator are 0 and raise `zero_division`.
pub fn compute_metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Validation("no evaluated windows".into()));
    }
    let n = cm.num_classes();
    let mut per_class = Vec::with_capacity(n);
    for c in 0..n {
        let tp = cm.get(c, c);
        let fp = cm.col_sum(c) - tp;
        let fn_ = cm.row_sum(c) - tp;
        let tn = total - tp - fp - fn_;
        let mut flag = false;
        let precision = ratio(tp, tp + fp, &mut flag);
        let recall = ratio(tp, tp + fn_, &mut flag);
        let f1 = if precision + recall == 0.0 {
            flag = true;
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class.push(ClassMetrics {
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1,
            zero_division: flag,
        });
    }
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / n as f64;
    let zero_division = per_class.iter().any(|c| c.zero_division);
    if zero_division {
        log::warn!("some per-class metrics had a zero denominator and were set to 0");
    }
    Ok(MetricsReport {
        accuracy: cm.trace() as f64 / total as f64,
        macro_precision: mean(|c| c.precision),
        macro_recall: mean(|c| c.recall),
        macro_f1: mean(|c| c.f1),
        per_class,
        zero_division,
    })
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "accuracy  {:.4}", self.accuracy)?;
        writeln!(f, "{:>7} {:>9} {:>9} {:>9}", "class", "precision", "recall", "f1")?;
        for (c, m) in self.per_class.iter().enumerate() {
            writeln!(
                f,
                "{c:>7} {:>9.4} {:>9.4} {:>9.4}{}",
                m.precision,
                m.recall,
                m.f1,
                if m.zero_division { "  (0/0)" } else { "" }
            )?;
        }
        write!(
            f,
            "{:>7} {:>9.4} {:>9.4} {:>9.4}",
            "macro", self.macro_precision, self.macro_recall, self.macro_f1
        )
    }
}
