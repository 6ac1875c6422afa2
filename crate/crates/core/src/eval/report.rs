use std::fmt::Write as _;

use crate::model::Arch;

/// Mean and sample standard deviation of repeated scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// `None` for fewer than two repeats.
    pub std: Option<f64>,
    pub repeats: usize,
}

impl Summary {
    pub fn of(scores: &[f64]) -> Self {
        let n = scores.len();
        let mean = if n == 0 {
            f64::NAN
        } else {
            scores.iter().sum::<f64>() / n as f64
        };
        let std = (n >= 2).then(|| {
            (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        });
        Self {
            mean,
            std,
            repeats: n,
        }
    }

    /// `0.900±0.141`, or `0.900±n/a` for a single repeat.
    pub fn cell(&self) -> String {
        match self.std {
            Some(s) => format!("{:.3}±{:.3}", self.mean, s),
            None => format!("{:.3}±n/a", self.mean),
        }
    }
}

/// Scores of every repeat of one (architecture, setting) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub arch: Arch,
    pub setting: String,
    pub scores: Vec<f64>,
}

/// Architectures down the side, settings across the top.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub settings: Vec<String>,
    pub rows: Vec<(Arch, Vec<Option<Summary>>)>,
}

/// Arranges cells in a table: rows in DNN, CNN, LSTM, GRU, HCG order, columns
/// in first-seen setting order.
pub fn sweep_report(cells: &[SweepCell]) -> SweepTable {
    let mut settings: Vec<String> = Vec::new();
    for c in cells {
        if !settings.contains(&c.setting) {
            settings.push(c.setting.clone());
        }
    }
    let rows = Arch::ALL
        .iter()
        .filter(|a| cells.iter().any(|c| c.arch == **a))
        .map(|&a| {
            let row = settings
                .iter()
                .map(|s| {
                    cells
                        .iter()
                        .find(|c| c.arch == a && &c.setting == s)
                        .map(|c| Summary::of(&c.scores))
                })
                .collect();
            (a, row)
        })
        .collect();
    SweepTable { settings, rows }
}

impl SweepTable {
    /// Aligned plain-text table.
    pub fn render_text(&self) -> String {
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|(_, r)| {
                r.iter()
                    .map(|s| s.map_or_else(|| "-".to_string(), |s| s.cell()))
                    .collect()
            })
            .collect();
        let first = self
            .rows
            .iter()
            .map(|(a, _)| a.label().len())
            .max()
            .unwrap_or(0)
            .max("Model".len());
        let widths: Vec<usize> = self
            .settings
            .iter()
            .enumerate()
            .map(|(j, s)| {
                cells
                    .iter()
                    .map(|r| r[j].chars().count())
                    .max()
                    .unwrap_or(0)
                    .max(s.chars().count())
            })
            .collect();
        let mut out = format!("{:<first$}", "Model");
        for (s, w) in self.settings.iter().zip(&widths) {
            let _ = write!(out, "  {s:>w$}");
        }
        out.push('\n');
        for ((arch, _), row) in self.rows.iter().zip(&cells) {
            let _ = write!(out, "{:<first$}", arch.label());
            for (c, w) in row.iter().zip(&widths) {
                let pad = w - c.chars().count();
                let _ = write!(out, "  {}{c}", " ".repeat(pad));
            }
            out.push('\n');
        }
        out
    }

    /// `model,setting,mean,std,repeats`, one line per cell; an undefined std
    /// is written as `n/a`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,setting,mean,std,repeats\n");
        for (arch, row) in &self.rows {
            for (setting, s) in self.settings.iter().zip(row) {
                if let Some(s) = s {
                    let std = s.std.map_or_else(|| "n/a".to_string(), |v| v.to_string());
                    let _ = writeln!(
                        out,
                        "{},\"{}\",{},{},{}",
                        arch.label(),
                        setting,
                        s.mean,
                        std,
                        s.repeats
                    );
                }
            }
        }
        out
    }
}

/// `"N-layer"` when every width is equal, otherwise `"[a, b, …]"`.
pub fn setting_label(sizes: &[usize]) -> String {
    if sizes.windows(2).all(|w| w[0] == w[1]) {
        format!("{}-layer", sizes.len())
    } else {
        format!(
            "[{}]",
            sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ")
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_cells() {
        assert_eq!(Summary::of(&[0.9, 0.9, 0.9]).cell(), "0.900±0.000");
        assert_eq!(Summary::of(&[0.8, 1.0]).cell(), "0.900±0.141");
        let one = Summary::of(&[0.9]);
        assert_eq!(one.std, None);
        assert_eq!(one.cell(), "0.900±n/a");
    }

    #[test]
    fn sample_std_fixture() {
        // tests/oracles/fixtures.py: sweep
        let s = Summary::of(&[0.8, 1.0]);
        assert!((s.mean - 0.9).abs() < 1e-15);
        assert!((s.std.unwrap() - 0.14142135623730948).abs() < 1e-15);
    }

    #[test]
    fn labels() {
        assert_eq!(setting_label(&[8, 8, 8]), "3-layer");
        assert_eq!(setting_label(&[40, 70, 32, 32]), "[40, 70, 32, 32]");
    }

    #[test]
    fn table_layout() {
        let mut cells = Vec::new();
        for arch in [Arch::Hcg, Arch::Dnn, Arch::Gru, Arch::Lstm, Arch::Cnn] {
            for setting in ["2-layer", "3-layer"] {
                cells.push(SweepCell {
                    arch,
                    setting: setting.into(),
                    scores: vec![0.5, 0.7],
                });
            }
        }
        let t = sweep_report(&cells);
        let order: Vec<Arch> = t.rows.iter().map(|r| r.0).collect();
        assert_eq!(order, vec![Arch::Dnn, Arch::Cnn, Arch::Lstm, Arch::Gru, Arch::Hcg]);
        let text = t.render_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert!(lines[0].starts_with("Model") && lines[0].contains("3-layer"));
        assert!(lines[5].starts_with("HCG") && lines[5].contains("0.600±0.141"));
        let widths: Vec<usize> = lines.iter().map(|l| l.chars().count()).collect();
        assert!(widths.iter().all(|&w| w == widths[0]));
        assert_eq!(t.to_csv().lines().count(), 11);
    }
}
