use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::NaiveDate;
use log::{info, warn};
use sentio::env::{AccountSnapshot, Transition};
use sentio::evalkit::{
    buy_and_hold, emit_report, equal_split_buy_and_hold, evaluate, read_summary_csv, summarize, EpisodeMetrics,
    StepPoint,
};
use sentio::marketdata::{
    align_dataset, load_ohlcv_dir, merge_series, parse_ohlcv_csv, parse_sentiment_csv, write_sentiment_csv,
    SentimentTable,
};
use sentio::ppo::{load_model, save_model, train, write_training_log};
use sentio::sentiment::SentimentProvider;
use sentio::{EnvError, Environment, MarketDataset, PortfolioEnv, TradingEnv};

use crate::config::{Mode, RunConfig};
use crate::error::CliError;

/// Either simulator behind one type so training and evaluation stay generic.
pub enum AnyEnv {
    Single(TradingEnv),
    Portfolio(PortfolioEnv),
}

impl Environment for AnyEnv {
    fn observation_dim(&self) -> usize {
        match self {
            AnyEnv::Single(e) => e.observation_dim(),
            AnyEnv::Portfolio(e) => e.observation_dim(),
        }
    }

    fn action_bounds(&self) -> Vec<(f64, f64)> {
        match self {
            AnyEnv::Single(e) => e.action_bounds(),
            AnyEnv::Portfolio(e) => e.action_bounds(),
        }
    }

    fn reset(&mut self, seed: Option<u64>) -> Vec<f64> {
        match self {
            AnyEnv::Single(e) => Environment::reset(e, seed),
            AnyEnv::Portfolio(e) => e.reset(seed),
        }
    }

    fn step(&mut self, action: &[f64]) -> Result<Transition, EnvError> {
        match self {
            AnyEnv::Single(e) => Environment::step(e, action),
            AnyEnv::Portfolio(e) => e.step(action),
        }
    }

    fn snapshot(&self) -> AccountSnapshot {
        match self {
            AnyEnv::Single(e) => e.snapshot(),
            AnyEnv::Portfolio(e) => e.snapshot(),
        }
    }
}

pub struct LoadedData {
    pub dataset: MarketDataset,
    pub sentiment: SentimentTable,
    pub raw_rows: Vec<(String, usize)>,
    pub missing: Vec<String>,
}

pub fn load_data(cfg: &RunConfig) -> Result<LoadedData, CliError> {
    cfg.require_symbols()?;
    let (found, missing) = load_ohlcv_dir(&cfg.data_dir, &cfg.symbols)?;
    for sym in &missing {
        warn!("no price file for `{sym}` in {}; skipping it", cfg.data_dir.display());
    }
    if found.is_empty() {
        return Err(CliError::Data(format!(
            "none of the symbols [{}] has a price file in {}",
            cfg.symbols.join(", "),
            cfg.data_dir.display()
        )));
    }
    let sentiment = match &cfg.sentiment_file {
        Some(path) => parse_sentiment_csv(&std::fs::read_to_string(path).map_err(CliError::io(path))?)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
        None => SentimentTable::new(),
    };
    let empty = BTreeMap::new();
    let raw_rows = found.iter().map(|(s, bars)| (s.clone(), bars.len())).collect();
    let series = found
        .into_iter()
        .map(|(sym, bars)| merge_series(&sym, bars, sentiment.get(&sym).unwrap_or(&empty)))
        .collect::<Result<Vec<_>, _>>()?;
    let dataset = align_dataset(series, cfg.env.window)?;
    Ok(LoadedData {
        dataset,
        sentiment,
        raw_rows,
        missing,
    })
}

fn make_env(cfg: &RunConfig, data: &Arc<MarketDataset>, seed: u64) -> Result<AnyEnv, EnvError> {
    let env_cfg = cfg.env_config(seed);
    Ok(match cfg.mode {
        Mode::Single => AnyEnv::Single(TradingEnv::new(Arc::new(data.assets()[0].clone()), env_cfg)?),
        Mode::Portfolio => AnyEnv::Portfolio(PortfolioEnv::new(data.clone(), env_cfg)?),
    })
}

fn create_out_dir(cfg: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(CliError::io(&cfg.out_dir))
}

fn write_file(path: PathBuf, text: &str) -> Result<PathBuf, CliError> {
    std::fs::write(&path, text).map_err(CliError::io(&path))?;
    Ok(path)
}

pub fn ingest(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let data = load_data(cfg)?;
    let ds = &data.dataset;
    let dates = ds.dates();
    let cells = ds.len() * ds.n_assets();
    let filled = ds
        .assets()
        .iter()
        .map(|a| {
            let labels = data.sentiment.get(a.symbol());
            a.dates()
                .filter(|d| labels.is_none_or(|l| !l.contains_key(d)))
                .count()
        })
        .sum::<usize>();

    let mut report = String::new();
    writeln!(report, "symbols = {}", ds.symbols().join(",")).unwrap();
    writeln!(report, "missing = {}", data.missing.join(",")).unwrap();
    writeln!(report, "first_date = {}", dates[0]).unwrap();
    writeln!(report, "last_date = {}", dates[dates.len() - 1]).unwrap();
    writeln!(report, "aligned_days = {}", ds.len()).unwrap();
    for (sym, rows) in &data.raw_rows {
        writeln!(report, "rows.{sym} = {rows}").unwrap();
    }
    writeln!(report, "neutral_fill_ratio = {}", filled as f64 / cells as f64).unwrap();

    create_out_dir(cfg)?;
    let path = write_file(cfg.out_dir.join("dataset.check"), &report)?;
    info!("aligned {} symbols over {} days", ds.n_assets(), ds.len());
    Ok(path)
}

/// Groups `Date,Symbol,Text` rows by symbol and day and labels the joined text.
pub fn label(news_csv: &Path, provider: &dyn SentimentProvider, output: &Path) -> Result<PathBuf, CliError> {
    let text = std::fs::read_to_string(news_csv).map_err(CliError::io(news_csv))?;
    let bad = |line: u64, message: String| CliError::Data(format!("{} line {line}: {message}", news_csv.display()));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| bad(1, e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    if header != ["Date", "Symbol", "Text"] {
        return Err(bad(1, format!("expected header `Date,Symbol,Text`, found `{}`", header.join(","))));
    }
    let mut days: BTreeMap<(String, NaiveDate), Vec<String>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| bad(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(bad(line, format!("expected 3 fields, found {}", record.len())));
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| bad(line, format!("bad date `{}`: {e}", &record[0])))?;
        if record[1].is_empty() {
            return Err(bad(line, "empty symbol".into()));
        }
        days.entry((record[1].to_string(), date))
            .or_default()
            .push(record[2].to_string());
    }
    let mut table = SentimentTable::new();
    for ((sym, date), texts) in days {
        let label = provider.label(date, &texts.join(" "));
        table.entry(sym).or_default().insert(date, label);
    }
    if let Some(dir) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    write_file(output.to_path_buf(), &write_sentiment_csv(&table))
}

pub fn train_cmd(cfg: &RunConfig, jobs: usize) -> Result<PathBuf, CliError> {
    let data = Arc::new(load_data(cfg)?.dataset);
    let model = train(
        |k| make_env(cfg, &data, cfg.seed.wrapping_add(k as u64)),
        &cfg.ppo_config(),
        jobs,
    )?;
    create_out_dir(cfg)?;
    let path = cfg.out_dir.join("model.txt");
    save_model(&model.params, &path)?;
    write_training_log(&model.log, &cfg.out_dir.join("training_log.csv"))?;
    write_file(cfg.out_dir.join("effective_config"), &cfg.render())?;
    info!("trained {} iterations; model written to {}", model.log.len(), path.display());
    Ok(path)
}

fn dataset_baseline(cfg: &RunConfig, data: &MarketDataset) -> Result<Vec<f64>, CliError> {
    let closes: Vec<Vec<f64>> = data.assets().iter().map(|a| a.closes()).collect();
    Ok(match cfg.mode {
        Mode::Single => buy_and_hold(&closes[0], cfg.env.initial_balance)?,
        Mode::Portfolio => equal_split_buy_and_hold(&closes, cfg.env.initial_balance)?,
    })
}

pub fn evaluate_cmd(cfg: &RunConfig, model_path: &Path, with_baseline: bool, jobs: usize) -> Result<PathBuf, CliError> {
    let params = load_model(model_path)?;
    let data = Arc::new(load_data(cfg)?.dataset);
    let eval_cfg = RunConfig {
        env: sentio::EnvConfig {
            max_steps: cfg.eval.steps,
            ..cfg.env.clone()
        },
        ..cfg.clone()
    };
    let probe = make_env(&eval_cfg, &data, cfg.seed)?;
    if params.obs_dim() != probe.observation_dim() {
        return Err(CliError::DimensionMismatch {
            model: params.obs_dim(),
            env: probe.observation_dim(),
        });
    }
    if params.action_dim() != probe.action_dim() {
        return Err(CliError::Config(format!(
            "model has {} action outputs but the environment takes {}",
            params.action_dim(),
            probe.action_dim()
        )));
    }
    let (metrics, stats) = evaluate(
        &params,
        |i| make_env(&eval_cfg, &data, cfg.seed.wrapping_add(i as u64)),
        cfg.eval.episodes,
        cfg.eval.steps,
        cfg.seed,
        cfg.eval.deterministic,
        jobs,
    )?;
    let baseline = if with_baseline {
        Some(dataset_baseline(cfg, &data)?)
    } else {
        None
    };
    emit_report(&run_label(&cfg.out_dir), &metrics, &stats, baseline.as_deref(), &cfg.out_dir)?;
    write_file(cfg.out_dir.join("effective_config"), &cfg.render())?;
    info!(
        "{} episodes: mean net worth {:.2}, mean profit {:.2}",
        stats.episodes, stats.net_worth.mean, stats.profit.mean
    );
    Ok(cfg.out_dir.join("summary.csv"))
}

/// Buy-and-hold over the aligned closes, or over `series` when given.
pub fn baseline_cmd(cfg: &RunConfig, series: Option<&Path>) -> Result<PathBuf, CliError> {
    let nw = match series {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
            let bars = parse_ohlcv_csv(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let closes: Vec<f64> = bars.iter().map(|b| b.close).collect();
            buy_and_hold(&closes, cfg.env.initial_balance)?
        }
        None => dataset_baseline(cfg, &load_data(cfg)?.dataset)?,
    };
    let b0 = cfg.env.initial_balance;
    let points = nw
        .iter()
        .map(|&v| StepPoint {
            net_worth: v,
            balance: 0.0,
            profit: v - b0,
        })
        .collect();
    let metrics = vec![EpisodeMetrics::from_series(b0, points)?];
    let stats = summarize(&metrics)?;
    create_out_dir(cfg)?;
    emit_report("buy-and-hold", &metrics, &stats, Some(&nw), &cfg.out_dir)?;
    let mut csv = String::from("step,net_worth,profit\n");
    for (i, v) in nw.iter().enumerate() {
        writeln!(csv, "{i},{v},{}", v - b0).unwrap();
    }
    write_file(cfg.out_dir.join("baseline.csv"), &csv)?;
    info!("buy-and-hold final net worth {:.2}", stats.net_worth.mean);
    Ok(cfg.out_dir.join("summary.csv"))
}

pub fn run_label(dir: &Path) -> String {
    dir.file_name()
        .map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn dollars(v: f64) -> String {
    let cents = (v.abs() * 100.0).round() as u128;
    let whole = (cents / 100).to_string();
    let mut grouped = String::new();
    for (i, c) in whole.chars().enumerate() {
        if i > 0 && (whole.len() - i).is_multiple_of(3) {
            grouped.push(',');
        }
        grouped.push(c);
    }
    let sign = if v < 0.0 && cents > 0 { "-" } else { "" };
    format!("{sign}${grouped}.{:02}", cents % 100)
}

/// Average profit and net worth per run, as CSV plus a console table.
pub fn compare(run_dirs: &[PathBuf], out_dir: &Path) -> Result<(PathBuf, String), CliError> {
    if run_dirs.len() < 2 {
        return Err(CliError::Config("compare needs at least two run directories".into()));
    }
    let mut rows = Vec::new();
    for dir in run_dirs {
        let path = dir.join("summary.csv");
        if !path.is_file() {
            return Err(CliError::Data(format!("run directory {} has no summary.csv", dir.display())));
        }
        let stats = read_summary_csv(&path)?;
        rows.push((run_label(dir), stats.profit.mean, stats.net_worth.mean));
    }

    let mut csv = String::from("run,average_profit,average_net_worth\n");
    for (name, profit, nw) in &rows {
        writeln!(csv, "{name},{profit},{nw}").unwrap();
    }
    std::fs::create_dir_all(out_dir).map_err(CliError::io(out_dir))?;
    let path = write_file(out_dir.join("comparison.csv"), &csv)?;

    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(3);
    let mut table = format!("{:<width$}  {:>16}  {:>18}\n", "Run", "Average Profit", "Average Net Worth");
    for (name, profit, nw) in &rows {
        writeln!(table, "{name:<width$}  {:>16}  {:>18}", dollars(*profit), dollars(*nw)).unwrap();
    }
    Ok((path, table))
}
