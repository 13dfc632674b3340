#![allow(dead_code)]

use chrono::{Days, NaiveDate};
use rand::Rng;
use sentio::marketdata::{label_to_score, AssetSeries, OhlcvBar, SentimentLabel};

/// Random-walk bars with random labels, starting 2021-01-04.
pub fn random_series<R: Rng>(symbol: &str, len: usize, rng: &mut R) -> AssetSeries {
    let d0 = NaiveDate::from_ymd_opt(2021, 1, 4).unwrap();
    let mut price: f64 = rng.random_range(5.0..500.0);
    let mut bars = Vec::with_capacity(len);
    let mut scores = Vec::with_capacity(len);
    for i in 0..len {
        let open = price;
        price *= 1.0 + rng.random_range(-0.05..0.05);
        let close = price;
        let high = open.max(close) * (1.0 + rng.random_range(0.0..0.01));
        let low = open.min(close) * (1.0 - rng.random_range(0.0..0.01));
        let volume = rng.random_range(0.0..1e6);
        bars.push(OhlcvBar { date: d0 + Days::new(i as u64), open, high, low, close, volume });
        scores.push(label_to_score(SentimentLabel::ALL[rng.random_range(0..5)]));
    }
    AssetSeries::new(symbol, bars, scores).unwrap()
}

pub fn constant_series(symbol: &str, closes: &[f64]) -> AssetSeries {
    let d0 = NaiveDate::from_ymd_opt(2021, 1, 4).unwrap();
    let bars = closes
        .iter()
        .enumerate()
        .map(|(i, &c)| OhlcvBar::flat(d0 + Days::new(i as u64), c, 1000.0))
        .collect();
    AssetSeries::without_sentiment(symbol, bars).unwrap()
}
