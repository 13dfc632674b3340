//! Turning daily news text into sentiment labels.
//!
//! The only shipped provider is a keyword lexicon. Remote language-model
//! labelers would implement the same trait.

use chrono::NaiveDate;

use crate::marketdata::SentimentLabel;

pub trait SentimentProvider {
    /// Labels the concatenated news text of one symbol on one day.
    fn label(&self, date: NaiveDate, text: &str) -> SentimentLabel;
}

pub const POSITIVE_WORDS: &[&str] = &[
    "beat", "beats", "bullish", "gain", "gains", "growth", "improve", "improved", "outperform",
    "profit", "profits", "rally", "record", "rise", "rises", "soar", "soars", "strong", "surge",
    "surges", "upgrade", "upgraded",
];

pub const NEGATIVE_WORDS: &[&str] = &[
    "bearish", "crash", "cut", "cuts", "decline", "declines", "downgrade", "downgraded", "drop",
    "drops", "fall", "falls", "fraud", "lawsuit", "loss", "losses", "miss", "misses", "plunge",
    "plunges", "recall", "weak",
];

/// Net hit count at or beyond which a day is labelled extreme.
pub const EXTREME_THRESHOLD: i64 = 3;

/// Counts whole-word, case-insensitive matches against fixed word lists.
///
/// | positive − negative | label              |
/// |---------------------|--------------------|
/// | ≥ 3                 | ExtremelyPositive  |
/// | 1, 2                | Positive           |
/// | 0                   | Neutral            |
/// | −1, −2              | Negative           |
/// | ≤ −3                | ExtremelyNegative  |
#[derive(Debug, Clone, Copy, Default)]
pub struct LexiconProvider;

impl LexiconProvider {
    pub fn net_hits(text: &str) -> i64 {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .map(|w| {
                let w = w.to_lowercase();
                if POSITIVE_WORDS.contains(&w.as_str()) {
                    1
                } else if NEGATIVE_WORDS.contains(&w.as_str()) {
                    -1
                } else {
                    0
                }
            })
            .sum()
    }

    pub fn label_for_net(net: i64) -> SentimentLabel {
        match net {
            n if n >= EXTREME_THRESHOLD => SentimentLabel::ExtremelyPositive,
            n if n > 0 => SentimentLabel::Positive,
            0 => SentimentLabel::Neutral,
            n if n > -EXTREME_THRESHOLD => SentimentLabel::Negative,
            _ => SentimentLabel::ExtremelyNegative,
        }
    }
}

impl SentimentProvider for LexiconProvider {
    fn label(&self, _date: NaiveDate, text: &str) -> SentimentLabel {
        Self::label_for_net(Self::net_hits(text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 1, 2).unwrap()
    }

    #[test]
    fn rule_table() {
        let p = LexiconProvider;
        assert_eq!(p.label(day(), "Shares surge on record profit"), SentimentLabel::ExtremelyPositive);
        assert_eq!(p.label(day(), "Analysts upgrade the stock"), SentimentLabel::Positive);
        assert_eq!(p.label(day(), "Gains offset by a lawsuit"), SentimentLabel::Neutral);
        assert_eq!(p.label(day(), "Quarterly loss"), SentimentLabel::Negative);
        assert_eq!(p.label(day(), "Fraud lawsuit, shares plunge"), SentimentLabel::ExtremelyNegative);
    }

    #[test]
    fn empty_text_is_neutral() {
        assert_eq!(LexiconProvider.label(day(), ""), SentimentLabel::Neutral);
    }

    #[test]
    fn matching_is_whole_word_and_case_insensitive() {
        assert_eq!(LexiconProvider::net_hits("RALLY rallying"), 1);
        assert_eq!(LexiconProvider::net_hits("crashed"), 0);
    }
}
