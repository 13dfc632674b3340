//! Price and sentiment data: parsing, validation, merging, alignment and the
//! windowed views both environments observe.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use thiserror::Error;

pub const OHLCV_HEADER: [&str; 6] = ["Date", "Open", "High", "Low", "Close", "Volume"];
pub const SENTIMENT_HEADER: [&str; 3] = ["Date", "Symbol", "Label"];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("bad header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("line {line}: duplicate date {date}")]
    DuplicateDate { line: u64, date: NaiveDate },
    #[error("line {line}: unknown sentiment label `{label}`")]
    UnknownLabel { line: u64, label: String },
    #[error("insufficient date overlap for [{}]: {overlap} common days, need at least {required}", symbols.join(", "))]
    InsufficientOverlap {
        symbols: Vec<String>,
        overlap: usize,
        required: usize,
    },
    #[error("window underflow: index {t} is before the end of the first window of length {window}")]
    WindowUnderflow { t: usize, window: usize },
    #[error("index {t} out of range for series of length {len}")]
    IndexOutOfRange { t: usize, len: usize },
    #[error("invalid series `{symbol}`: {message}")]
    InvalidSeries { symbol: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One trading day of price-volume data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OhlcvBar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

impl OhlcvBar {
    pub fn new(
        date: NaiveDate,
        open: f64,
        high: f64,
        low: f64,
        close: f64,
        volume: f64,
    ) -> Result<Self, String> {
        let bar = Self {
            date,
            open,
            high,
            low,
            close,
            volume,
        };
        bar.validate()?;
        Ok(bar)
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("open", self.open),
            ("high", self.high),
            ("low", self.low),
            ("close", self.close),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(format!("{name} must be a positive finite price, got {v}"));
            }
        }
        if !self.volume.is_finite() || self.volume < 0.0 {
            return Err(format!("volume must be non-negative, got {}", self.volume));
        }
        let body_lo = self.open.min(self.close);
        let body_hi = self.open.max(self.close);
        if self.low > body_lo || body_hi > self.high {
            return Err(format!(
                "OHLC ordering violated (low {} / open {} / close {} / high {})",
                self.low, self.open, self.close, self.high
            ));
        }
        Ok(())
    }

    /// Constant bar used by tests and synthetic generators.
    pub fn flat(date: NaiveDate, price: f64, volume: f64) -> Self {
        Self {
            date,
            open: price,
            high: price,
            low: price,
            close: price,
            volume,
        }
    }
}

/// Five ordered news-sentiment categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SentimentLabel {
    ExtremelyNegative,
    Negative,
    Neutral,
    Positive,
    ExtremelyPositive,
}

impl SentimentLabel {
    pub const ALL: [SentimentLabel; 5] = [
        SentimentLabel::ExtremelyNegative,
        SentimentLabel::Negative,
        SentimentLabel::Neutral,
        SentimentLabel::Positive,
        SentimentLabel::ExtremelyPositive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SentimentLabel::ExtremelyNegative => "ExtremelyNegative",
            SentimentLabel::Negative => "Negative",
            SentimentLabel::Neutral => "Neutral",
            SentimentLabel::Positive => "Positive",
            SentimentLabel::ExtremelyPositive => "ExtremelyPositive",
        }
    }

    /// Position in the ordering, 0 (most negative) to 4.
    pub fn rank(self) -> usize {
        self as usize
    }

    pub fn score(self) -> SentimentScore {
        label_to_score(self)
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SentimentLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        SentimentLabel::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| s.to_string())
    }
}

/// Sentiment scaled into `[-1, 1]`; zero is neutral.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct SentimentScore(f64);

impl SentimentScore {
    pub const NEUTRAL: SentimentScore = SentimentScore(0.0);

    pub fn new(value: f64) -> Option<Self> {
        (-1.0..=1.0).contains(&value).then_some(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Uniform grid over `[-1, 1]`: -1, -0.5, 0, 0.5, 1.
pub fn label_to_score(label: SentimentLabel) -> SentimentScore {
    let score = match label {
        SentimentLabel::ExtremelyNegative => -1.0,
        SentimentLabel::Negative => -0.5,
        SentimentLabel::Neutral => 0.0,
        SentimentLabel::Positive => 0.5,
        SentimentLabel::ExtremelyPositive => 1.0,
    };
    SentimentScore(score)
}

fn parse_date(field: &str) -> Result<NaiveDate, String> {
    let field = field.trim();
    // %m/%d accept unpadded digits; require the canonical 10-char form.
    if field.len() != 10 {
        return Err(format!("date `{field}` is not ISO-8601 (YYYY-MM-DD)"));
    }
    NaiveDate::parse_from_str(field, "%Y-%m-%d")
        .map_err(|_| format!("date `{field}` is not ISO-8601 (YYYY-MM-DD)"))
}

fn parse_num(field: &str, name: &str) -> Result<f64, String> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| format!("{name} `{}` is not a number", field.trim()))
}

fn check_header(
    reader: &mut csv::Reader<&[u8]>,
    expected: &[&str],
) -> Result<(), DataError> {
    let headers = reader.headers().map_err(|e| DataError::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    let found: Vec<&str> = headers.iter().map(str::trim).collect();
    if found != expected {
        return Err(DataError::Header {
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    Ok(())
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

/// Parses a `Date,Open,High,Low,Close,Volume` file into ascending bars.
pub fn parse_ohlcv_csv(text: &str) -> Result<Vec<OhlcvBar>, DataError> {
    if text.trim().is_empty() {
        return Err(DataError::EmptyInput("OHLCV file has no content".into()));
    }
    let mut reader = csv_reader(text);
    check_header(&mut reader, &OHLCV_HEADER)?;

    let mut rows: Vec<(u64, OhlcvBar)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| DataError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let perr = |message: String| DataError::Parse { line, message };
        if record.len() != 6 {
            return Err(perr(format!("expected 6 fields, found {}", record.len())));
        }
        let date = parse_date(&record[0]).map_err(perr)?;
        let bar = OhlcvBar::new(
            date,
            parse_num(&record[1], "Open").map_err(perr)?,
            parse_num(&record[2], "High").map_err(perr)?,
            parse_num(&record[3], "Low").map_err(perr)?,
            parse_num(&record[4], "Close").map_err(perr)?,
            parse_num(&record[5], "Volume").map_err(perr)?,
        )
        .map_err(perr)?;
        rows.push((line, bar));
    }
    if rows.is_empty() {
        return Err(DataError::EmptyInput("OHLCV file has a header but no rows".into()));
    }

    rows.sort_by_key(|(_, bar)| bar.date);
    for pair in rows.windows(2) {
        if pair[0].1.date == pair[1].1.date {
            let line = pair[0].0.max(pair[1].0);
            return Err(DataError::DuplicateDate {
                line,
                date: pair[1].1.date,
            });
        }
    }
    Ok(rows.into_iter().map(|(_, bar)| bar).collect())
}

/// Per-symbol daily labels, keyed by symbol then date.
pub type SentimentTable = BTreeMap<String, BTreeMap<NaiveDate, SentimentLabel>>;

/// Parses a `Date,Symbol,Label` file. Labels match case-insensitively.
pub fn parse_sentiment_csv(text: &str) -> Result<SentimentTable, DataError> {
    let mut table = SentimentTable::new();
    if text.trim().is_empty() {
        return Ok(table);
    }
    let mut reader = csv_reader(text);
    check_header(&mut reader, &SENTIMENT_HEADER)?;
    for record in reader.records() {
        let record = record.map_err(|e| DataError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(DataError::Parse {
                line,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let date = parse_date(&record[0]).map_err(|message| DataError::Parse { line, message })?;
        let symbol = record[1].to_string();
        if symbol.is_empty() {
            return Err(DataError::Parse {
                line,
                message: "empty symbol".into(),
            });
        }
        let label: SentimentLabel = record[2]
            .parse()
            .map_err(|label| DataError::UnknownLabel { line, label })?;
        if table.entry(symbol).or_default().insert(date, label).is_some() {
            return Err(DataError::Parse {
                line,
                message: format!("duplicate sentiment entry for {} on {date}", &record[1]),
            });
        }
    }
    Ok(table)
}

/// Renders a sentiment table in the `Date,Symbol,Label` schema, ordered by date then symbol.
pub fn write_sentiment_csv(table: &SentimentTable) -> String {
    let mut rows: Vec<(NaiveDate, &str, SentimentLabel)> = table
        .iter()
        .flat_map(|(sym, days)| days.iter().map(move |(d, l)| (*d, sym.as_str(), *l)))
        .collect();
    rows.sort();
    let mut out = SENTIMENT_HEADER.join(",");
    out.push('\n');
    for (date, sym, label) in rows {
        out.push_str(&format!("{date},{sym},{label}\n"));
    }
    out
}

/// A symbol's bars with index-aligned sentiment scores.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetSeries {
    symbol: String,
    bars: Vec<OhlcvBar>,
    scores: Vec<SentimentScore>,
}

impl AssetSeries {
    pub fn new(
        symbol: impl Into<String>,
        bars: Vec<OhlcvBar>,
        scores: Vec<SentimentScore>,
    ) -> Result<Self, DataError> {
        let symbol = symbol.into();
        let invalid = |message: String| DataError::InvalidSeries {
            symbol: symbol.clone(),
            message,
        };
        if bars.len() != scores.len() {
            return Err(invalid(format!(
                "{} bars but {} sentiment scores",
                bars.len(),
                scores.len()
            )));
        }
        if let Some(pair) = bars.windows(2).find(|p| p[0].date >= p[1].date) {
            return Err(invalid(format!(
                "dates not strictly ascending at {}",
                pair[1].date
            )));
        }
        for bar in &bars {
            bar.validate()
                .map_err(|m| invalid(format!("{}: {m}", bar.date)))?;
        }
        Ok(Self {
            symbol,
            bars,
            scores,
        })
    }

    /// Series with neutral sentiment throughout.
    pub fn without_sentiment(symbol: impl Into<String>, bars: Vec<OhlcvBar>) -> Result<Self, DataError> {
        let n = bars.len();
        Self::new(symbol, bars, vec![SentimentScore::NEUTRAL; n])
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn bars(&self) -> &[OhlcvBar] {
        &self.bars
    }

    pub fn scores(&self) -> &[SentimentScore] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn close(&self, t: usize) -> f64 {
        self.bars[t].close
    }

    pub fn score(&self, t: usize) -> f64 {
        self.scores[t].value()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.close).collect()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.bars.iter().map(|b| b.date)
    }

    fn restricted_to(&self, keep: &BTreeSet<NaiveDate>) -> Self {
        let (bars, scores) = self
            .bars
            .iter()
            .zip(&self.scores)
            .filter(|(b, _)| keep.contains(&b.date))
            .map(|(b, s)| (*b, *s))
            .unzip();
        Self {
            symbol: self.symbol.clone(),
            bars,
            scores,
        }
    }
}

/// Attaches per-day sentiment to bars; days without a label are neutral.
pub fn merge_series(
    symbol: &str,
    bars: Vec<OhlcvBar>,
    sentiment: &BTreeMap<NaiveDate, SentimentLabel>,
) -> Result<AssetSeries, DataError> {
    let scores = bars
        .iter()
        .map(|b| {
            sentiment
                .get(&b.date)
                .map_or(SentimentScore::NEUTRAL, |l| label_to_score(*l))
        })
        .collect();
    AssetSeries::new(symbol, bars, scores)
}

/// Assets sharing one date vector, ordered by symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketDataset {
    assets: Vec<AssetSeries>,
}

impl MarketDataset {
    pub fn new(mut assets: Vec<AssetSeries>) -> Result<Self, DataError> {
        let Some(first) = assets.first() else {
            return Err(DataError::EmptyInput("dataset needs at least one asset".into()));
        };
        let dates: Vec<NaiveDate> = first.dates().collect();
        for a in &assets[1..] {
            if !a.dates().eq(dates.iter().copied()) {
                return Err(DataError::InvalidSeries {
                    symbol: a.symbol.clone(),
                    message: format!("dates differ from `{}`", first.symbol),
                });
            }
        }
        assets.sort_by(|a, b| a.symbol.cmp(&b.symbol));
        if let Some(pair) = assets.windows(2).find(|p| p[0].symbol == p[1].symbol) {
            return Err(DataError::InvalidSeries {
                symbol: pair[0].symbol.clone(),
                message: "symbol appears twice".into(),
            });
        }
        Ok(Self { assets })
    }

    pub fn single(series: AssetSeries) -> Self {
        Self {
            assets: vec![series],
        }
    }

    pub fn assets(&self) -> &[AssetSeries] {
        &self.assets
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn len(&self) -> usize {
        self.assets[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.assets[0].dates().collect()
    }

    pub fn symbols(&self) -> Vec<&str> {
        self.assets.iter().map(|a| a.symbol()).collect()
    }
}

/// Restricts every series to the dates common to all of them.
///
/// At least `window + 2` common days are required so an episode can start
/// after a full observation window and still take a step.
pub fn align_dataset(series: Vec<AssetSeries>, window: usize) -> Result<MarketDataset, DataError> {
    if series.is_empty() {
        return Err(DataError::EmptyInput("no series to align".into()));
    }
    let mut common: BTreeSet<NaiveDate> = series[0].dates().collect();
    for s in &series[1..] {
        let dates: BTreeSet<NaiveDate> = s.dates().collect();
        common.retain(|d| dates.contains(d));
    }
    let required = window + 2;
    if common.len() < required {
        let mut offending: Vec<String> = series
            .iter()
            .filter(|s| s.len() != common.len())
            .map(|s| s.symbol.clone())
            .collect();
        if offending.is_empty() {
            offending = series.iter().map(|s| s.symbol.clone()).collect();
        }
        return Err(DataError::InsufficientOverlap {
            symbols: offending,
            overlap: common.len(),
            required,
        });
    }
    let aligned = series.iter().map(|s| s.restricted_to(&common)).collect();
    MarketDataset::new(aligned)
}

/// A `window × 5` block of normalised `[open, high, low, close, volume]` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationFrame {
    pub rows: Vec<[f64; 5]>,
}

impl ObservationFrame {
    pub fn flatten(&self) -> Vec<f64> {
        self.rows.iter().flatten().copied().collect()
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[c]).collect()
    }
}

/// Bars `t-w+1..=t`; prices scaled by the window's max high, volume by its max volume.
pub fn normalize_window(series: &AssetSeries, t: usize, w: usize) -> Result<ObservationFrame, DataError> {
    if w == 0 || t + 1 < w {
        return Err(DataError::WindowUnderflow { t, window: w });
    }
    if t >= series.len() {
        return Err(DataError::IndexOutOfRange { t, len: series.len() });
    }
    let bars = &series.bars[t + 1 - w..=t];
    let max_high = bars.iter().map(|b| b.high).fold(f64::MIN, f64::max);
    let max_vol = bars.iter().map(|b| b.volume).fold(0.0, f64::max);
    let vol_scale = if max_vol > 0.0 { max_vol } else { 1.0 };
    let rows = bars
        .iter()
        .map(|b| {
            [
                b.open / max_high,
                b.high / max_high,
                b.low / max_high,
                b.close / max_high,
                b.volume / vol_scale,
            ]
        })
        .collect();
    Ok(ObservationFrame { rows })
}

/// Population standard deviation of simple close-to-close returns over the
/// last `min(w, t+1)` closes ending at `t`. Zero with fewer than two returns.
pub fn rolling_volatility(series: &AssetSeries, t: usize, w: usize) -> f64 {
    let t = t.min(series.len().saturating_sub(1));
    let n = w.min(t + 1);
    if n < 3 {
        return 0.0;
    }
    let closes = &series.bars[t + 1 - n..=t];
    let returns: Vec<f64> = closes
        .windows(2)
        .map(|p| p[1].close / p[0].close - 1.0)
        .collect();
    let m = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / m;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / m;
    var.sqrt()
}

/// Reads `<dir>/<SYMBOL>.csv` for each symbol. Symbols without a file are
/// returned in the second list rather than treated as errors.
#[allow(clippy::type_complexity)]
pub fn load_ohlcv_dir(
    dir: &Path,
    symbols: &[String],
) -> Result<(Vec<(String, Vec<OhlcvBar>)>, Vec<String>), DataError> {
    let mut found = Vec::new();
    let mut missing = Vec::new();
    for sym in symbols {
        let path = dir.join(format!("{sym}.csv"));
        if !path.is_file() {
            missing.push(sym.clone());
            continue;
        }
        let text = std::fs::read_to_string(&path).map_err(|source| DataError::Io {
            path: path.clone(),
            source,
        })?;
        let bars = parse_ohlcv_csv(&text).map_err(|e| match e {
            DataError::Parse { line, message } => DataError::Parse {
                line,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })?;
        found.push((sym.clone(), bars));
    }
    Ok((found, missing))
}
