//! Generated price series for smoke tests and controlled experiments.

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::marketdata::{label_to_score, AssetSeries, OhlcvBar, SentimentLabel, SentimentScore};

fn start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 1, 1).unwrap()
}

fn bars_from_closes(closes: &[f64], volume: f64) -> Vec<OhlcvBar> {
    let start = start_date();
    closes
        .iter()
        .enumerate()
        .map(|(i, &close)| {
            let open = if i == 0 { close } else { closes[i - 1] };
            OhlcvBar {
                date: start + Days::new(i as u64),
                open,
                high: open.max(close),
                low: open.min(close),
                close,
                volume,
            }
        })
        .collect()
}

/// Closes compounding by `daily_return` from `start_price`, neutral sentiment.
pub fn monotone_series(symbol: &str, days: usize, start_price: f64, daily_return: f64) -> AssetSeries {
    let closes: Vec<f64> = (0..days)
        .map(|i| start_price * (1.0 + daily_return).powi(i as i32))
        .collect();
    AssetSeries::without_sentiment(symbol, bars_from_closes(&closes, 1_000_000.0)).expect("valid synthetic series")
}

/// Random walk whose sentiment on day t carries the sign of the move from t to t+1.
///
/// Daily moves are ±U(0.5%, 3%) with a fair coin for the sign. Moves larger
/// than 2% are labelled extreme. The last day is neutral.
pub fn sentiment_led_series(symbol: &str, days: usize, seed: u64) -> AssetSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut closes = Vec::with_capacity(days);
    let mut scores = Vec::with_capacity(days);
    let mut price = 100.0;
    for _ in 0..days {
        closes.push(price);
        let magnitude: f64 = rng.random_range(0.005..0.03);
        let up = rng.random_bool(0.5);
        let label = match (up, magnitude > 0.02) {
            (true, true) => SentimentLabel::ExtremelyPositive,
            (true, false) => SentimentLabel::Positive,
            (false, false) => SentimentLabel::Negative,
            (false, true) => SentimentLabel::ExtremelyNegative,
        };
        scores.push(label_to_score(label));
        price *= if up { 1.0 + magnitude } else { 1.0 - magnitude };
    }
    if let Some(last) = scores.last_mut() {
        *last = SentimentScore::NEUTRAL;
    }
    AssetSeries::new(symbol, bars_from_closes(&closes, 1_000_000.0), scores).expect("valid synthetic series")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_grows_by_half_percent() {
        let s = monotone_series("UP", 300, 100.0, 0.005);
        assert_eq!(s.len(), 300);
        assert!((s.close(1) - 100.5).abs() < 1e-12);
        assert!(s.closes().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn sentiment_predicts_next_move() {
        let s = sentiment_led_series("LEAD", 200, 9);
        for t in 0..s.len() - 1 {
            let delta = s.close(t + 1) - s.close(t);
            assert!(s.score(t) * delta > 0.0, "day {t}");
        }
        assert_eq!(s.score(s.len() - 1), 0.0);
    }

    #[test]
    fn seeded() {
        assert_eq!(sentiment_led_series("A", 50, 1), sentiment_led_series("A", 50, 1));
        assert_ne!(sentiment_led_series("A", 50, 1), sentiment_led_series("A", 50, 2));
    }
}
