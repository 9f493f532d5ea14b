//! Encoding, filtering and search parameter records.

use alloc::format;
use alloc::string::ToString;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Decimal places kept by the rounding scheme (`P<p>`), `1..=9`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Precision(u8);

impl Precision {
    pub fn new(digits: u32) -> Result<Self> {
        if (1..=9).contains(&digits) {
            Ok(Self(digits as u8))
        } else {
            Err(Error::InvalidEncoding(format!(
                "rounding precision must be in 1..=9, got {digits}"
            )))
        }
    }

    pub fn digits(self) -> usize {
        self.0 as usize
    }
}

/// Interval denominator `W` of the interval scheme (`I<W>`); intervals are
/// `1/W` wide.
///
/// `W` must factor into 2s and 5s only so that every interval start has a
/// finite decimal expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    denominator: u32,
    digits: u8,
}

impl Interval {
    pub fn new(denominator: u32) -> Result<Self> {
        if denominator == 0 {
            return Err(Error::InvalidEncoding("interval denominator must be >= 1".to_string()));
        }
        let (mut twos, mut fives, mut rest) = (0u32, 0u32, denominator);
        while rest % 2 == 0 {
            rest /= 2;
            twos += 1;
        }
        while rest % 5 == 0 {
            rest /= 5;
            fives += 1;
        }
        if rest != 1 {
            return Err(Error::InvalidEncoding(format!(
                "interval denominator {denominator} has no finite decimal reciprocal"
            )));
        }
        // W = 1 still renders one fractional digit ("0d0").
        let digits = twos.max(fives).max(1);
        if digits > 9 {
            return Err(Error::InvalidEncoding(format!(
                "interval denominator {denominator} needs {digits} fractional digits (max 9)"
            )));
        }
        Ok(Self { denominator, digits: digits as u8 })
    }

    pub fn denominator(self) -> u32 {
        self.denominator
    }

    /// Fractional digits needed to write `1/W` exactly.
    pub fn digits(self) -> usize {
        self.digits as usize
    }

    /// `10^digits / W`, an integer by construction.
    pub(crate) fn step_units(self) -> u64 {
        10u64.pow(self.digits as u32) / self.denominator as u64
    }
}

/// Which quantization schemes produce tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EncodingConfig {
    Rounding(Precision),
    Interval(Interval),
    Combined(Precision, Interval),
}

impl EncodingConfig {
    pub fn rounding(digits: u32) -> Result<Self> {
        Ok(Self::Rounding(Precision::new(digits)?))
    }

    pub fn interval(denominator: u32) -> Result<Self> {
        Ok(Self::Interval(Interval::new(denominator)?))
    }

    pub fn combined(digits: u32, denominator: u32) -> Result<Self> {
        Ok(Self::Combined(Precision::new(digits)?, Interval::new(denominator)?))
    }

    /// Tokens emitted per surviving feature.
    pub fn tokens_per_feature(&self) -> usize {
        match self {
            Self::Combined(..) => 2,
            _ => 1,
        }
    }

    pub fn precision(&self) -> Option<Precision> {
        match *self {
            Self::Rounding(p) | Self::Combined(p, _) => Some(p),
            Self::Interval(_) => None,
        }
    }

    pub fn interval_scheme(&self) -> Option<Interval> {
        match *self {
            Self::Interval(w) | Self::Combined(_, w) => Some(w),
            Self::Rounding(_) => None,
        }
    }
}

impl Default for EncodingConfig {
    /// `P2+I10`.
    fn default() -> Self {
        Self::Combined(Precision(2), Interval { denominator: 10, digits: 1 })
    }
}

impl fmt::Display for EncodingConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Rounding(p) => write!(f, "P{}", p.0),
            Self::Interval(w) => write!(f, "I{}", w.denominator),
            Self::Combined(p, w) => write!(f, "P{}+I{}", p.0, w.denominator),
        }
    }
}

fn parse_component(part: &str, prefix: char) -> Result<u32> {
    let malformed = || Error::InvalidEncoding(format!("malformed component {part:?}"));
    let digits = part.strip_prefix(prefix).ok_or_else(malformed)?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed());
    }
    digits.parse().map_err(|_| malformed())
}

impl FromStr for EncodingConfig {
    type Err = Error;

    /// Parses `P<p>`, `I<W>` or `P<p>+I<W>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.split_once('+') {
            Some((p, w)) => {
                let p = parse_component(p, 'P')?;
                let w = parse_component(w, 'I')?;
                Self::combined(p, w)
            }
            None if s.starts_with('P') => Self::rounding(parse_component(s, 'P')?),
            None if s.starts_with('I') => Self::interval(parse_component(s, 'I')?),
            None => Err(Error::InvalidEncoding(format!("malformed component {s:?}"))),
        }
    }
}

/// Number of highest-magnitude features to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Best {
    #[default]
    All,
    Top(usize),
}

impl fmt::Display for Best {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Best::All => f.write_str("all"),
            Best::Top(m) => write!(f, "{m}"),
        }
    }
}

impl FromStr for Best {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match parse_count(s) {
            Some(None) => Ok(Best::All),
            Some(Some(m)) if m >= 1 => Ok(Best::Top(m)),
            _ => Err(Error::InvalidFilter(format!("best must be a positive integer or 'all', got {s:?}"))),
        }
    }
}

/// Candidate page size `|E|` requested from phase 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Page {
    #[default]
    All,
    Size(usize),
}

impl Page {
    pub fn limit(self) -> Option<usize> {
        match self {
            Page::All => None,
            Page::Size(n) => Some(n),
        }
    }
}

impl fmt::Display for Page {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Page::All => f.write_str("all"),
            Page::Size(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for Page {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match parse_count(s) {
            Some(None) => Ok(Page::All),
            Some(Some(n)) if n >= 1 => Ok(Page::Size(n)),
            _ => Err(Error::InvalidParams(format!("page must be a positive integer or 'all', got {s:?}"))),
        }
    }
}

/// `Some(None)` for "all", `Some(Some(n))` for an integer.
fn parse_count(s: &str) -> Option<Option<usize>> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("all") {
        return Some(None);
    }
    s.parse().ok().map(Some)
}

/// High-pass filters applied before token generation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FilterConfig {
    /// Features with `|v| < trim` are dropped; `0` disables trimming.
    pub trim: f64,
    pub best: Best,
}

impl FilterConfig {
    pub const NONE: FilterConfig = FilterConfig { trim: 0.0, best: Best::All };

    pub fn new(trim: f64, best: Best) -> Result<Self> {
        let cfg = Self { trim, best };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn trim(trim: f64) -> Result<Self> {
        Self::new(trim, Best::All)
    }

    pub fn best(m: usize) -> Result<Self> {
        Self::new(0.0, Best::Top(m))
    }

    pub fn is_noop(&self) -> bool {
        self.trim == 0.0 && self.best == Best::All
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.trim) {
            return Err(Error::InvalidFilter(format!("trim must be in [0, 1], got {}", self.trim)));
        }
        if self.best == Best::Top(0) {
            return Err(Error::InvalidFilter("best must be >= 1".to_string()));
        }
        Ok(())
    }

    /// Also checks `best <= dim`.
    pub fn validate_for(&self, dim: usize) -> Result<()> {
        self.validate()?;
        match self.best {
            Best::Top(m) if m > dim => {
                Err(Error::InvalidFilter(format!("best {m} exceeds dimension {dim}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for FilterConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "trim={} best={}", self.trim, self.best)
    }
}

/// Phase-1 relevance function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Scorer {
    /// BM25 with `k1 = 1.2`, `b = 0.75`.
    #[default]
    Bm25,
    /// Number of shared tokens.
    MatchCount,
}

impl Scorer {
    pub fn as_str(self) -> &'static str {
        match self {
            Scorer::Bm25 => "bm25",
            Scorer::MatchCount => "matchcount",
        }
    }
}

impl fmt::Display for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scorer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bm25" => Ok(Scorer::Bm25),
            "matchcount" => Ok(Scorer::MatchCount),
            other => Err(Error::InvalidParams(format!(
                "unknown scorer {other:?} (expected bm25 or matchcount)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchParams {
    pub k: usize,
    pub page: Page,
    pub exclude_self: bool,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self { k: 10, page: Page::All, exclude_self: false }
    }
}

impl SearchParams {
    pub fn new(k: usize, page: Page) -> Result<Self> {
        let params = Self { k, page, exclude_self: false };
        params.validate()?;
        Ok(params)
    }

    pub fn excluding_self(mut self, exclude: bool) -> Self {
        self.exclude_self = exclude;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParams("k must be >= 1".into()));
        }
        match self.page {
            Page::Size(0) => Err(Error::InvalidParams("page must be >= 1".into())),
            Page::Size(p) if p < self.k => Err(Error::InvalidParams(format!(
                "page {p} is smaller than k {}",
                self.k
            ))),
            _ => Ok(()),
        }
    }
}
