//! Text utilities shared by every stage: cell normalization, the numeric
//! parsing rule, decimal rendering and the statement tokenizer.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::HashSet;
use std::sync::OnceLock;
use unicode_normalization::UnicodeNormalization;

/// Sentinel that replaces the masked span of a cloze example.
pub const MASK: &str = "[MASK]";

/// Exact decimal value used for every numeric cell and aggregate.
pub type Decimal = BigRational;

/// NFC, lowercase, internal whitespace collapsed to single spaces, trimmed.
pub fn normalize(s: &str) -> String {
    let nfc: String = s.nfc().collect();
    let lower = nfc.to_lowercase();
    lower.split_whitespace().collect::<Vec<_>>().join(" ")
}

const CURRENCY: [char; 3] = ['$', '€', '£'];

fn strip_sign(s: &str) -> (bool, &str) {
    if let Some(rest) = s.strip_prefix('-').or_else(|| s.strip_prefix('\u{2212}')) {
        (true, rest)
    } else if let Some(rest) = s.strip_prefix('+') {
        (false, rest)
    } else {
        (false, s)
    }
}

/// Parses a cell under the numeric rule: surrounding whitespace, thousands
/// separators, one leading currency symbol and a trailing `%` are stripped,
/// then the remainder must be a plain decimal (`12`, `-3.5`, `.25`).
pub fn parse_number(cell: &str) -> Option<Decimal> {
    let s = cell.trim();
    let (mut negative, mut rest) = strip_sign(s);
    if let Some(c) = rest.chars().next().filter(|c| CURRENCY.contains(c)) {
        rest = &rest[c.len_utf8()..];
        if !negative {
            let (neg, r) = strip_sign(rest);
            negative = neg;
            rest = r;
        }
    }
    let rest = rest.strip_suffix('%').unwrap_or(rest).trim();
    let digits: String = rest.chars().filter(|&c| c != ',').collect();
    parse_plain_decimal(&digits).map(|v| if negative { -v } else { v })
}

fn parse_plain_decimal(s: &str) -> Option<Decimal> {
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit())
        || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let mut all = String::with_capacity(int_part.len() + frac_part.len());
    all.push_str(int_part);
    all.push_str(frac_part);
    let numer: BigInt = all.parse().ok()?;
    let denom = num_traits::pow(BigInt::from(10u32), frac_part.len());
    Some(BigRational::new(numer, denom))
}

/// Renders an exact terminating decimal with no trailing zeros
/// (`1234`, `3.61`, `-0.5`). Returns `None` when the value has no finite
/// decimal expansion.
pub fn render_exact(value: &Decimal) -> Option<String> {
    let mut denom = value.denom().clone();
    let two = BigInt::from(2u32);
    let five = BigInt::from(5u32);
    let (mut twos, mut fives) = (0usize, 0usize);
    while (&denom % &two).is_zero() {
        denom /= &two;
        twos += 1;
    }
    while (&denom % &five).is_zero() {
        denom /= &five;
        fives += 1;
    }
    if !denom.is_one() {
        return None;
    }
    let places = twos.max(fives);
    let scaled = value * BigRational::from_integer(num_traits::pow(BigInt::from(10u32), places));
    debug_assert!(scaled.is_integer());
    Some(format_scaled(&scaled.to_integer(), places))
}

fn format_scaled(scaled: &BigInt, places: usize) -> String {
    let negative = scaled.is_negative();
    let digits = scaled.abs().to_string();
    let body = if places == 0 {
        digits
    } else {
        let padded = format!("{:0>width$}", digits, width = places + 1);
        let (int, frac) = padded.split_at(padded.len() - places);
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            int.to_string()
        } else {
            format!("{int}.{frac}")
        }
    };
    if negative && body != "0" {
        format!("-{body}")
    } else {
        body
    }
}

/// Answer rendering for computed values: integers print without a decimal
/// point, anything else is rounded half away from zero to one decimal place.
pub fn render_rounded(value: &Decimal) -> String {
    if value.is_integer() {
        return value.to_integer().to_string();
    }
    let tenths = value * BigRational::from_integer(BigInt::from(10u32));
    let half = BigRational::new(BigInt::one(), BigInt::from(2u32));
    let magnitude = (tenths.abs() + half).floor().to_integer();
    let negative = value.is_negative() && !magnitude.is_zero();
    let ten = BigInt::from(10u32);
    let int: BigInt = &magnitude / &ten;
    let frac = (&magnitude % &ten).to_u8().unwrap_or(0);
    format!("{}{}.{}", if negative { "-" } else { "" }, int, frac)
}

/// Splits on whitespace and punctuation after normalization. Every maximal
/// run of alphanumeric characters is one token.
pub fn tokenize(s: &str) -> Vec<String> {
    normalize(s)
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Fixed 50-word English stopword list used for entity linking and row
/// relevance.
pub const STOPWORDS: [&str; 50] = [
    "a", "an", "the", "and", "or", "but", "if", "of", "at", "by", "for", "with", "about", "to",
    "from", "in", "on", "into", "as", "is", "are", "was", "were", "be", "been", "being", "has",
    "have", "had", "do", "does", "did", "this", "that", "these", "those", "it", "its", "he", "she",
    "they", "them", "his", "her", "their", "which", "who", "whom", "s", "there",
];

pub fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS.iter().copied().collect())
}

/// Deduplicated non-stopword token set.
pub fn content_tokens(s: &str) -> HashSet<String> {
    let stop = stopwords();
    tokenize(s)
        .into_iter()
        .filter(|t| !stop.contains(t.as_str()))
        .collect()
}

/// Whitespace token count, used for answer-length statistics.
pub fn whitespace_len(s: &str) -> usize {
    s.split_whitespace().count()
}
