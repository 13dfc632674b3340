//! CSV and SVG artifacts for an evaluation run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::svg::{box_plot, line_chart, Series};
use super::{Distribution, EpisodeMetrics, EvalError, SummaryStats};

pub const EPISODES_HEADER: &str = "episode,final_net_worth,final_balance,profit";
pub const SUMMARY_HEADER: &str = "metric,episodes,mean,median,q1,q3,min,max";
pub const TIMESERIES_HEADER: &str = "step,net_worth,balance,profit";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportFiles {
    pub csv: Vec<PathBuf>,
    pub svg: Vec<PathBuf>,
}

pub fn render_episodes_csv(metrics: &[EpisodeMetrics]) -> String {
    let mut out = format!("{EPISODES_HEADER}\n");
    for (i, m) in metrics.iter().enumerate() {
        writeln!(out, "{i},{},{},{}", m.final_net_worth, m.final_balance, m.cumulative_profit).unwrap();
    }
    out
}

pub fn render_summary_csv(stats: &SummaryStats) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for (name, d) in [("net_worth", &stats.net_worth), ("profit", &stats.profit)] {
        writeln!(
            out,
            "{name},{},{},{},{},{},{},{}",
            stats.episodes, d.mean, d.median, d.q1, d.q3, d.min, d.max
        )
        .unwrap();
    }
    out
}

pub fn render_timeseries_csv(metrics: &EpisodeMetrics) -> String {
    let mut out = format!("{TIMESERIES_HEADER}\n");
    for (i, p) in metrics.step_series.iter().enumerate() {
        writeln!(out, "{i},{},{},{}", p.net_worth, p.balance, p.profit).unwrap();
    }
    out
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf, EvalError> {
    std::fs::write(&path, contents).map_err(|source| EvalError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes the CSV tables and SVG charts for one run into `out_dir`.
///
/// The time series and within-episode chart describe the last episode.
/// When `baseline` is given, `comparison.svg` overlays it on that episode's
/// net worth.
pub fn emit_report(
    run_label: &str,
    metrics: &[EpisodeMetrics],
    stats: &SummaryStats,
    baseline: Option<&[f64]>,
    out_dir: &Path,
) -> Result<ReportFiles, EvalError> {
    let last = metrics
        .last()
        .ok_or_else(|| EvalError::Empty("no episodes to report".into()))?;
    std::fs::create_dir_all(out_dir).map_err(|source| EvalError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;

    let mut files = ReportFiles::default();
    files.csv.push(write(out_dir.join("episodes.csv"), &render_episodes_csv(metrics))?);
    files.csv.push(write(out_dir.join("summary.csv"), &render_summary_csv(stats))?);
    files.csv.push(write(out_dir.join("timeseries.csv"), &render_timeseries_csv(last))?);

    let finals: Vec<f64> = metrics.iter().map(|m| m.final_net_worth).collect();
    let profits: Vec<f64> = metrics.iter().map(|m| m.cumulative_profit).collect();
    let chart = line_chart(
        &format!("{run_label}: per-episode results"),
        "episode",
        &[Series::new("final net worth", &finals), Series::new("profit", &profits)],
    );
    files.svg.push(write(out_dir.join("episodes.svg"), &chart)?);

    let column = |f: fn(&super::StepPoint) -> f64| last.step_series.iter().map(f).collect::<Vec<_>>();
    let (nw, bal, pr) = (column(|p| p.net_worth), column(|p| p.balance), column(|p| p.profit));
    let chart = line_chart(
        &format!("{run_label}: last episode"),
        "step",
        &[Series::new("net worth", &nw), Series::new("balance", &bal), Series::new("profit", &pr)],
    );
    files.svg.push(write(out_dir.join("episode_timeseries.svg"), &chart)?);

    let chart = box_plot(
        &format!("{run_label}: distribution over {} episodes", stats.episodes),
        &[("net worth", &stats.net_worth), ("profit", &stats.profit)],
    );
    files.svg.push(write(out_dir.join("boxplot.svg"), &chart)?);

    if let Some(base) = baseline {
        let chart = line_chart(
            &format!("{run_label}: agent vs buy-and-hold"),
            "step",
            &[Series::new("agent net worth", &nw), Series::new("buy-and-hold", base)],
        );
        files.svg.push(write(out_dir.join("comparison.svg"), &chart)?);
    }
    Ok(files)
}

fn read_table(path: &Path, header: &str) -> Result<Vec<csv::StringRecord>, EvalError> {
    let parse_err = |message: String| EvalError::Parse {
        path: path.to_path_buf(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let found = reader
        .headers()
        .map_err(|e| parse_err(e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if found != header {
        return Err(parse_err(format!("expected header `{header}`, found `{found}`")));
    }
    reader
        .records()
        .map(|r| r.map_err(|e| parse_err(e.to_string())))
        .collect()
}

fn field<T: std::str::FromStr>(path: &Path, record: &csv::StringRecord, i: usize) -> Result<T, EvalError> {
    let raw = record.get(i).unwrap_or("");
    raw.parse().map_err(|_| EvalError::Parse {
        path: path.to_path_buf(),
        message: format!("bad value `{raw}` in column {}", i + 1),
    })
}

/// `(final_net_worth, final_balance, profit)` per episode row.
pub fn read_episodes_csv(path: &Path) -> Result<Vec<(f64, f64, f64)>, EvalError> {
    read_table(path, EPISODES_HEADER)?
        .iter()
        .map(|r| Ok((field(path, r, 1)?, field(path, r, 2)?, field(path, r, 3)?)))
        .collect()
}

pub fn read_summary_csv(path: &Path) -> Result<SummaryStats, EvalError> {
    let rows = read_table(path, SUMMARY_HEADER)?;
    let mut episodes = 0;
    let mut get = |name: &str| -> Result<Distribution, EvalError> {
        let r = rows
            .iter()
            .find(|r| r.get(0) == Some(name))
            .ok_or_else(|| EvalError::Parse {
                path: path.to_path_buf(),
                message: format!("missing `{name}` row"),
            })?;
        episodes = field(path, r, 1)?;
        Ok(Distribution {
            mean: field(path, r, 2)?,
            median: field(path, r, 3)?,
            q1: field(path, r, 4)?,
            q3: field(path, r, 5)?,
            min: field(path, r, 6)?,
            max: field(path, r, 7)?,
        })
    };
    let net_worth = get("net_worth")?;
    let profit = get("profit")?;
    Ok(SummaryStats {
        episodes,
        net_worth,
        profit,
    })
}
