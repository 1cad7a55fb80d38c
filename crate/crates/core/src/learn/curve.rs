use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::runtime::Phase;

pub const CURVE_HEADER: &str = "idx,return,norm_return,smooth_norm,viol_during,viol_after,p_shield";
pub const LEDGER_HEADER: &str = "episode,violated,phase,p_shield";
pub const SMOOTHING_WINDOW: usize = 5;

/// Trailing mean over `min(window, i + 1)` entries at each index.
pub fn smooth_curve(values: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be at least 1");
    (0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            values[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    /// Training episodes completed when the evaluation ran.
    pub idx: usize,
    /// Mean sparse return over the evaluation episodes.
    pub ret: f64,
    pub norm_return: f64,
    pub smooth_norm: f64,
    /// Training episodes with a violation so far.
    pub viol_during: usize,
    /// Evaluation episodes with a violation so far.
    pub viol_after: usize,
    pub p_shield: f64,
}

/// One per-episode violation flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeFlag {
    pub episode: usize,
    pub violated: bool,
    pub phase: Phase,
    pub p_shield: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub rows: Vec<CurveRow>,
    /// Training episodes with a violation.
    pub violations_during: usize,
    /// Violating episodes in the final evaluation block.
    pub violations_after: usize,
    /// Training flags followed by evaluation flags, in the order they ran.
    pub flags: Vec<EpisodeFlag>,
}

impl LearningCurve {
    /// Builds rows from the raw evaluation columns and fills in the
    /// smoothed column.
    pub(crate) fn finish(&mut self) {
        let norm: Vec<f64> = self.rows.iter().map(|r| r.norm_return).collect();
        for (row, s) in self.rows.iter_mut().zip(smooth_curve(&norm, SMOOTHING_WINDOW)) {
            row.smooth_norm = s;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn final_smoothed(&self) -> Option<f64> {
        self.rows.last().map(|r| r.smooth_norm)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CURVE_HEADER);
        s.push('\n');
        for r in &self.rows {
            writeln!(s, "{},{},{},{},{},{},{}", r.idx, r.ret, r.norm_return, r.smooth_norm, r.viol_during, r.viol_after, r.p_shield)
                .expect("writing to a string");
        }
        s
    }

    pub fn ledger_csv(&self) -> String {
        let mut s = String::from(LEDGER_HEADER);
        s.push('\n');
        for f in &self.flags {
            let phase = match f.phase {
                Phase::During => "during",
                Phase::After => "after",
            };
            writeln!(s, "{},{},{phase},{}", f.episode, u8::from(f.violated), f.p_shield).expect("writing to a string");
        }
        s
    }

    /// Parses the curve CSV written by [`LearningCurve::to_csv`]. Only rows
    /// are restored.
    pub fn from_csv(text: &str) -> Result<LearningCurve, String> {
        let mut lines = text.lines();
        if lines.next() != Some(CURVE_HEADER) {
            return Err("missing curve header".into());
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(format!("row {}: expected 7 fields, got {}", i + 1, f.len()));
            }
            let num = |k: usize| f[k].parse::<f64>().map_err(|e| format!("row {}: {e}", i + 1));
            let int = |k: usize| f[k].parse::<usize>().map_err(|e| format!("row {}: {e}", i + 1));
            rows.push(CurveRow {
                idx: int(0)?,
                ret: num(1)?,
                norm_return: num(2)?,
                smooth_norm: num(3)?,
                viol_during: int(4)?,
                viol_after: int(5)?,
                p_shield: num(6)?,
            });
        }
        Ok(LearningCurve { rows, ..LearningCurve::default() })
    }
}

/// Row-wise mean of the normalized columns of curves sharing one index
/// grid; the smoothed column is recomputed from the mean.
pub fn mean_curve(curves: &[&LearningCurve]) -> Vec<(usize, f64, f64)> {
    let Some(first) = curves.first() else { return Vec::new() };
    let len = curves.iter().map(|c| c.rows.len()).min().unwrap_or(0);
    let means: Vec<f64> =
        (0..len).map(|i| curves.iter().map(|c| c.rows[i].norm_return).sum::<f64>() / curves.len() as f64).collect();
    let smooth = smooth_curve(&means, SMOOTHING_WINDOW);
    (0..len).map(|i| (first.rows[i].idx, means[i], smooth[i])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trailing_mean() {
        assert_eq!(smooth_curve(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 5), vec![1.0, 1.5, 2.0, 2.5, 3.0, 4.0]);
        assert_eq!(smooth_curve(&[2.5; 7], 5), vec![2.5; 7]);
        let v = [3.0, -1.0, 4.5];
        assert_eq!(smooth_curve(&v, 1), v.to_vec());
        assert!(smooth_curve(&[], 5).is_empty());
    }

    fn curve(vals: &[f64]) -> LearningCurve {
        let mut c = LearningCurve::default();
        for (i, &v) in vals.iter().enumerate() {
            c.rows.push(CurveRow {
                idx: 100 * (i + 1),
                ret: v * 10.0,
                norm_return: v,
                smooth_norm: 0.0,
                viol_during: i,
                viol_after: 0,
                p_shield: 1.0,
            });
        }
        c.finish();
        c
    }

    #[test]
    fn csv_round_trip() {
        let c = curve(&[0.1, 0.25, 1.0 / 3.0]);
        let text = c.to_csv();
        assert!(text.starts_with(CURVE_HEADER));
        assert_eq!(LearningCurve::from_csv(&text).unwrap().rows, c.rows);
        assert!(LearningCurve::from_csv("idx\n").is_err());
    }

    #[test]
    fn mean_of_identical_curves() {
        let c = curve(&[0.2, 0.4, 0.9]);
        let m = mean_curve(&[&c, &c, &c]);
        for (row, (idx, mean, smooth)) in c.rows.iter().zip(m) {
            assert_eq!(idx, row.idx);
            assert!((mean - row.norm_return).abs() < 1e-15);
            assert!((smooth - row.smooth_norm).abs() < 1e-15);
        }
    }
}
