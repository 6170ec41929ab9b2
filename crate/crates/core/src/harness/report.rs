use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{Summary, SUMMARY_FILE};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareRow {
    /// 1-based; tied utilities share a rank.
    pub rank: usize,
    pub run: String,
    pub algo: String,
    pub seed: u64,
    pub mean_utility: f64,
    /// Best utility in the report minus this run's.
    pub utility_gap: f64,
    pub mean_se: f64,
    pub ssr_volte: f64,
    pub ssr_video: f64,
    pub ssr_urllc: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
}

/// Read `summary.json` from a run directory, or a summary file directly.
pub fn load_summary(path: &Path) -> Result<Summary> {
    let file = if path.is_dir() { path.join(SUMMARY_FILE) } else { path.to_path_buf() };
    Ok(serde_json::from_str(&fs::read_to_string(file)?)?)
}

/// Rank named runs by mean utility. All runs must share one environment.
pub fn compare(runs: &[(String, Summary)]) -> Result<CompareReport> {
    if runs.len() < 2 {
        return Err(Error::config("comparison needs at least two runs"));
    }
    let env = &runs[0].1.env;
    if let Some((name, _)) = runs.iter().find(|(_, s)| s.env != *env) {
        return Err(Error::config(format!("run {name} used a different environment than {}", runs[0].0)));
    }
    let mut order: Vec<&(String, Summary)> = runs.iter().collect();
    order.sort_by(|a, b| b.1.mean_utility.total_cmp(&a.1.mean_utility));
    let best = order[0].1.mean_utility;
    let mut rows: Vec<CompareRow> = Vec::with_capacity(order.len());
    for (i, (name, s)) in order.iter().enumerate() {
        let rank = match rows.last() {
            Some(prev) if prev.mean_utility == s.mean_utility => prev.rank,
            _ => i + 1,
        };
        let ssr = |k: usize| s.mean_ssr.get(k).copied().unwrap_or(f64::NAN);
        rows.push(CompareRow {
            rank,
            run: name.clone(),
            algo: s.algo.name().to_string(),
            seed: s.seed,
            mean_utility: s.mean_utility,
            utility_gap: best - s.mean_utility,
            mean_se: s.mean_se,
            ssr_volte: ssr(0),
            ssr_video: ssr(1),
            ssr_urllc: ssr(2),
        });
    }
    Ok(CompareReport { rows })
}

impl CompareReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>4}  {:<20} {:<9} {:>9} {:>8} {:>7} {:>7} {:>7} {:>7}",
            "rank", "run", "algo", "utility", "gap", "se", "volte", "video", "urllc"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>4}  {:<20} {:<9} {:>9.4} {:>8.4} {:>7.2} {:>7.3} {:>7.3} {:>7.3}",
                r.rank, r.run, r.algo, r.mean_utility, r.utility_gap, r.mean_se, r.ssr_volte, r.ssr_video, r.ssr_urllc
            );
        }
        out
    }
}
