//! Writes the synthetic credential corpus used by the corpus tests.
//!
//! Every password embeds its owner's birth year; gender is drawn
//! independently of the password.
//!
//! ```text
//! cargo run -p hyperqif --example gen_corpus -- tests/data/synthetic_corpus.csv
//! ```

use std::error::Error;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use hyperqif::corpus::{extract_year, FIRST_YEAR, LAST_YEAR};
use hyperqif::testkit::rng_from;

const ROWS: usize = 2000;
const SEED: u64 = 1983;

const WORDS: &[&str] = &[
    "love", "baby", "angel", "princess", "jesus", "mike", "john", "blessed", "sexy", "dragon", "soccer",
    "maria", "monkey", "star", "summer", "lucky", "honey", "tiger", "chris", "shadow", "david", "daniel",
    "sunshine", "pretty", "jordan", "hello", "master", "football", "happy", "ashley", "queen", "sweet",
    "rocky", "buster", "charlie", "pepper", "ginger", "junior", "cookie", "eagle",
];

fn main() -> Result<(), Box<dyn Error>> {
    let path = std::env::args().nth(1).ok_or("usage: gen_corpus OUT.csv")?;
    let mut rng = rng_from(SEED);

    let years: Vec<u32> = (FIRST_YEAR..=LAST_YEAR).collect();
    // skewed toward recent birth years
    let year_w: Vec<f64> = years
        .iter()
        .map(|&y| 1.0 + ((y - FIRST_YEAR) as f64 / 8.0).powi(2))
        .collect();
    let year_d = WeightedIndex::new(&year_w)?;
    let word_w: Vec<f64> = (1..=WORDS.len()).map(|r| 1.0 / r as f64).collect();
    let word_d = WeightedIndex::new(&word_w)?;

    let mut out = csv::Writer::from_path(&path)?;
    out.write_record(["password", "year", "gender"])?;
    for _ in 0..ROWS {
        let year = years[year_d.sample(&mut rng)];
        let word = WORDS[word_d.sample(&mut rng)];
        let password = match rng.random_range(0..10) {
            0..=4 => format!("{word}{year}"),
            5 | 6 => format!("{year}{word}"),
            7 => format!("{word}_{year}"),
            _ => year.to_string(),
        };
        assert_eq!(extract_year(&password), Some(year.to_string().as_str()));
        let gender = if rng.random_bool(0.5) { "f" } else { "m" };
        out.write_record([password.as_str(), &year.to_string(), gender])?;
    }
    out.flush()?;
    Ok(())
}
