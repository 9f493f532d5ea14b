//! Vector-to-token encoding and high-pass feature filtering.
//!
//! A token is `<feature><scheme>i<value>`:
//!
//! * `feature` is the decimal feature index,
//! * `scheme` is `P<p>` (rounding to `p` decimals) or `I<W>` (interval start,
//!   intervals `1/W` wide),
//! * `value` is the quantized value with `.` written as `d` and a leading
//!   `neg` for negatives, e.g. `0d07` or `neg0d13`.
//!
//! Tokens are strictly alphanumeric so that no fulltext tokenizer can split
//! them.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write};

use crate::config::{Best, EncodingConfig, FilterConfig, Interval, Precision};
use crate::error::{Error, Result};
use crate::vector::{DenseVector, DocId};

/// One encoded feature value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureToken(String);

impl FeatureToken {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }

    pub fn parse(&self) -> Result<ParsedToken> {
        ParsedToken::parse(&self.0)
    }
}

impl TryFrom<String> for FeatureToken {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        ParsedToken::parse(&s)?;
        Ok(Self(s))
    }
}

impl fmt::Display for FeatureToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for FeatureToken {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// An exact signed decimal `±units / 10^scale`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Decimal {
    pub negative: bool,
    pub units: u64,
    pub scale: u8,
}

impl Decimal {
    pub fn to_f64(self) -> f64 {
        let v = self.units as f64 / libm::pow(10.0, self.scale as f64);
        if self.negative {
            -v
        } else {
            v
        }
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pow = 10u64.pow(self.scale as u32);
        if self.negative && self.units != 0 {
            f.write_str("neg")?;
        }
        write!(
            f,
            "{}d{:0width$}",
            self.units / pow,
            self.units % pow,
            width = self.scale as usize
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenScheme {
    Rounding(u32),
    Interval(u32),
}

/// The components of a feature token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParsedToken {
    pub feature: usize,
    pub scheme: TokenScheme,
    pub value: Decimal,
}

fn take_digits(s: &str) -> (&str, &str) {
    let end = s.bytes().position(|b| !b.is_ascii_digit()).unwrap_or(s.len());
    s.split_at(end)
}

impl ParsedToken {
    pub fn parse(token: &str) -> Result<Self> {
        let bad = || Error::MalformedToken(token.into());
        let (feature, rest) = take_digits(token);
        let feature = feature.parse().map_err(|_| bad())?;
        let (kind, rest) = rest.split_at_checked(1).ok_or_else(bad)?;
        let (param, rest) = take_digits(rest);
        let param: u32 = param.parse().map_err(|_| bad())?;
        let scheme = match kind {
            "P" => TokenScheme::Rounding(param),
            "I" => TokenScheme::Interval(param),
            _ => return Err(bad()),
        };
        let rest = rest.strip_prefix('i').ok_or_else(bad)?;
        let (negative, rest) = match rest.strip_prefix("neg") {
            Some(r) => (true, r),
            None => (false, rest),
        };
        let (int, rest) = take_digits(rest);
        let frac = rest.strip_prefix('d').ok_or_else(bad)?;
        if int.is_empty()
            || frac.is_empty()
            || frac.len() > 9
            || !frac.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(bad());
        }
        let scale = frac.len() as u8;
        let units = int
            .parse::<u64>()
            .ok()
            .and_then(|i| i.checked_mul(10u64.pow(scale as u32)))
            .and_then(|i| i.checked_add(frac.parse::<u64>().ok()?))
            .ok_or_else(bad)?;
        if negative && units == 0 {
            return Err(bad());
        }
        Ok(Self { feature, scheme, value: Decimal { negative, units, scale } })
    }
}

/// Rounds `x` half away from zero to `digits` decimals, working on the
/// shortest decimal string that round-trips `x` rather than on its binary
/// expansion (0.015 rounds to 0.02 even though the nearest double is below).
fn round_decimal(x: f64, digits: usize) -> Decimal {
    let mut text = String::new();
    let _ = write!(text, "{}", libm::fabs(x));
    let (int, frac) = text.split_once('.').unwrap_or((&text, ""));

    let mut kept: Vec<u8> = int.bytes().map(|b| b - b'0').collect();
    let frac = frac.as_bytes();
    kept.extend((0..digits).map(|i| frac.get(i).map_or(0, |b| b - b'0')));
    let round_up = frac.get(digits).is_some_and(|&b| b >= b'5');

    if round_up {
        let mut i = kept.len();
        loop {
            if i == 0 {
                kept.insert(0, 1);
                break;
            }
            i -= 1;
            if kept[i] == 9 {
                kept[i] = 0;
            } else {
                kept[i] += 1;
                break;
            }
        }
    }
    let units = kept.iter().fold(0u64, |acc, &d| acc.saturating_mul(10).saturating_add(d as u64));
    Decimal { negative: x < 0.0 && units != 0, units, scale: digits as u8 }
}

/// Renders `x` with exactly `digits` decimals, `.` as `d` and a `neg`
/// prefix; values that round to zero are unsigned.
pub fn render_value(x: f64, digits: usize) -> String {
    debug_assert!((1..=9).contains(&digits));
    format!("{}", round_decimal(x, digits))
}

/// Index of the `1/W` interval holding `x`: `floor(round(x * W, 9))`.
fn interval_index(x: f64, interval: Interval) -> i64 {
    let scaled = x * interval.denominator() as f64;
    let snapped = libm::round(scaled * 1e9) / 1e9;
    libm::floor(snapped) as i64
}

/// Exact start of the interval holding `x`.
pub fn interval_start(x: f64, interval: Interval) -> Decimal {
    let index = interval_index(x, interval);
    Decimal {
        negative: index < 0,
        units: index.unsigned_abs() * interval.step_units(),
        scale: interval.digits() as u8,
    }
}

fn push_rounding(out: &mut Vec<FeatureToken>, feature: usize, x: f64, p: Precision) {
    let mut s = String::with_capacity(16);
    let _ = write!(s, "{feature}P{}i{}", p.digits(), round_decimal(x, p.digits()));
    out.push(FeatureToken(s));
}

fn push_interval(out: &mut Vec<FeatureToken>, feature: usize, x: f64, w: Interval) {
    let mut s = String::with_capacity(16);
    let _ = write!(s, "{feature}I{}i{}", w.denominator(), interval_start(x, w));
    out.push(FeatureToken(s));
}

fn encode_features(
    values: &[f64],
    features: impl IntoIterator<Item = usize>,
    cfg: &EncodingConfig,
) -> Vec<FeatureToken> {
    let features = features.into_iter();
    let mut out = Vec::with_capacity(features.size_hint().0 * cfg.tokens_per_feature());
    for j in features {
        let x = values[j];
        if let Some(p) = cfg.precision() {
            push_rounding(&mut out, j, x, p);
        }
        if let Some(w) = cfg.interval_scheme() {
            push_interval(&mut out, j, x, w);
        }
    }
    out
}

/// One `P<p>` token per feature.
pub fn encode_rounding(values: &[f64], precision: Precision) -> Vec<FeatureToken> {
    encode_features(values, 0..values.len(), &EncodingConfig::Rounding(precision))
}

/// One `I<W>` token per feature.
pub fn encode_interval(values: &[f64], interval: Interval) -> Vec<FeatureToken> {
    encode_features(values, 0..values.len(), &EncodingConfig::Interval(interval))
}

/// Tokens for every feature under `cfg`, in feature order (`P` before `I`
/// for the combined scheme).
pub fn encode(values: &[f64], cfg: &EncodingConfig) -> Vec<FeatureToken> {
    encode_features(values, 0..values.len(), cfg)
}

/// Features with `|v| >= threshold`, ascending.
pub fn apply_trim(values: &[f64], threshold: f64) -> Vec<usize> {
    (0..values.len()).filter(|&j| libm::fabs(values[j]) >= threshold).collect()
}

/// The `m` features of largest magnitude, ascending by index. Ties prefer
/// the lower index.
pub fn apply_best(values: &[f64], m: usize) -> Vec<usize> {
    if m >= values.len() {
        return (0..values.len()).collect();
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    let by_magnitude =
        |a: &usize, b: &usize| libm::fabs(values[*b]).total_cmp(&libm::fabs(values[*a])).then(a.cmp(b));
    order.select_nth_unstable_by(m, by_magnitude);
    order.truncate(m);
    order.sort_unstable();
    order
}

/// Features surviving both filters, ascending.
pub fn surviving_features(values: &[f64], filter: &FilterConfig) -> Vec<usize> {
    let trimmed = if filter.trim > 0.0 {
        apply_trim(values, filter.trim)
    } else {
        (0..values.len()).collect()
    };
    match filter.best {
        Best::All => trimmed,
        Best::Top(m) => {
            let best = apply_best(values, m);
            trimmed.into_iter().filter(|j| best.binary_search(j).is_ok()).collect()
        }
    }
}

/// Tokens for the features that pass `filter`. May be empty.
pub fn filter_encode(values: &[f64], filter: &FilterConfig, cfg: &EncodingConfig) -> Vec<FeatureToken> {
    if filter.is_noop() {
        return encode(values, cfg);
    }
    encode_features(values, surviving_features(values, filter), cfg)
}

/// A document's token set.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDocument {
    pub doc_id: DocId,
    /// Number of features that produced tokens.
    pub features: usize,
    pub tokens: Vec<FeatureToken>,
}

impl EncodedDocument {
    pub fn new(v: &DenseVector, filter: &FilterConfig, cfg: &EncodingConfig) -> Self {
        let (features, tokens) = if filter.is_noop() {
            (v.dim(), encode(v.values(), cfg))
        } else {
            let kept = surviving_features(v.values(), filter);
            (kept.len(), encode_features(v.values(), kept, cfg))
        };
        Self { doc_id: v.id(), features, tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}
