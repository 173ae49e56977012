use std::collections::BTreeMap;
use std::io::Read;

use chrono::NaiveDate;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::VictimLedger;
use crate::chain::Chain;

const WEI_DIGITS: usize = 18;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("no prices for {chain} between {from} and {to}")]
    EmptyPricePeriod {
        chain: Chain,
        from: NaiveDate,
        to: NaiveDate,
    },
    #[error("price table line {line}: {message}")]
    BadPriceRow { line: usize, message: String },
    #[error("price table: {0}")]
    Csv(#[from] csv::Error),
}

/// Daily close prices in USD, per chain.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PriceTable {
    prices: BTreeMap<Chain, BTreeMap<NaiveDate, BigRational>>,
}

#[derive(Deserialize)]
struct PriceRow {
    date: NaiveDate,
    chain: Chain,
    close_usd: String,
}

impl PriceTable {
    pub fn new() -> Self {
        PriceTable::default()
    }

    /// Adds one close price; duplicates and non-positive prices are rejected.
    pub fn insert(&mut self, chain: Chain, date: NaiveDate, close_usd: BigRational) -> Result<(), String> {
        if !close_usd.is_positive() {
            return Err(format!("price for {chain} on {date} is not positive"));
        }
        let day = self.prices.entry(chain.clone()).or_default();
        if day.insert(date, close_usd).is_some() {
            return Err(format!("duplicate price for {chain} on {date}"));
        }
        Ok(())
    }

    /// Reads CSV with header `date,chain,close_usd`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, LossError> {
        let mut table = PriceTable::new();
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        for (i, row) in rdr.deserialize::<PriceRow>().enumerate() {
            let line = i + 2;
            let row = row?;
            let price = parse_decimal(&row.close_usd)
                .ok_or_else(|| LossError::BadPriceRow { line, message: format!("bad price `{}`", row.close_usd) })?;
            table
                .insert(row.chain, row.date, price)
                .map_err(|message| LossError::BadPriceRow { line, message })?;
        }
        Ok(table)
    }

    /// Lowest and highest close for `chain` within `[from, to]`.
    pub fn band(&self, chain: &Chain, from: NaiveDate, to: NaiveDate) -> Option<(BigRational, BigRational)> {
        let days = self.prices.get(chain)?;
        let mut it = days.range(from..=to).map(|(_, p)| p);
        let first = it.next()?.clone();
        Some(it.fold((first.clone(), first), |(lo, hi), p| {
            (if *p < lo { p.clone() } else { lo }, if *p > hi { p.clone() } else { hi })
        }))
    }

    pub fn is_empty(&self) -> bool {
        self.prices.values().all(BTreeMap::is_empty)
    }
}

/// Parses a plain decimal (`1234.5`, `-0.25`) into an exact fraction.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let t = text.trim();
    let (neg, t) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let (int, frac) = t.split_once('.').unwrap_or((t, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    let value = BigRational::new(digits, BigInt::from(10u32).pow(frac.len() as u32));
    Some(if neg { -value } else { value })
}

fn round_to(value: &BigRational, decimals: usize) -> BigInt {
    let scaled = value * BigRational::from_integer(BigInt::from(10u32).pow(decimals as u32));
    scaled.round().to_integer()
}

fn format_scaled(units: BigInt, decimals: usize, trim: bool) -> String {
    let neg = units < BigInt::zero();
    let digits = units.magnitude().to_string();
    let digits = format!("{digits:0>width$}", width = decimals + 1);
    let (int, frac) = digits.split_at(digits.len() - decimals);
    let frac = if trim { frac.trim_end_matches('0') } else { frac };
    let sign = if neg { "-" } else { "" };
    if frac.is_empty() {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// Wei amount as native-coin units, exact to 18 decimals, trailing zeros trimmed.
pub fn format_wei(wei: &BigRational) -> String {
    format_scaled(round_to(wei, 0), WEI_DIGITS, true)
}

/// USD value with two decimals.
pub fn format_usd(usd: &BigRational) -> String {
    format_scaled(round_to(usd, 2), 2, false)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub chain: Chain,
    pub victims: usize,
    pub victim_txs: usize,
    pub total_wei: u128,
    /// Mean and median over per-victim-address totals, in wei.
    pub mean_wei: BigRational,
    pub median_wei: BigRational,
    pub usd_min: BigRational,
    pub usd_max: BigRational,
}

/// Rendered form of [`LossReport`] for JSON/CSV output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LossRow {
    pub chain: String,
    pub victim_addresses: usize,
    pub victim_txs: usize,
    pub total_amount: String,
    pub mean_amount_per_address: String,
    pub median_amount_per_address: String,
    pub usd_min: String,
    pub usd_max: String,
}

impl LossReport {
    pub fn total_coin(&self) -> BigRational {
        wei_to_coin(&BigRational::from_integer(BigInt::from(self.total_wei)))
    }

    pub fn row(&self) -> LossRow {
        LossRow {
            chain: self.chain.to_string(),
            victim_addresses: self.victims,
            victim_txs: self.victim_txs,
            total_amount: format_wei(&BigRational::from_integer(BigInt::from(self.total_wei))),
            mean_amount_per_address: format_wei(&self.mean_wei),
            median_amount_per_address: format_wei(&self.median_wei),
            usd_min: format_usd(&self.usd_min),
            usd_max: format_usd(&self.usd_max),
        }
    }
}

fn wei_to_coin(wei: &BigRational) -> BigRational {
    wei / BigRational::from_integer(BigInt::from(10u32).pow(WEI_DIGITS as u32))
}

/// Totals, per-address mean/median and the USD band for one ledger. The band
/// prices the whole total at the lowest and highest daily close in the period.
pub fn aggregate_loss(
    ledger: &VictimLedger,
    prices: &PriceTable,
    period: (NaiveDate, NaiveDate),
) -> Result<LossReport, LossError> {
    let zero = BigRational::zero();
    let per_victim: Vec<u128> = ledger.per_victim_totals().values().map(|(w, _)| *w).collect();
    if per_victim.is_empty() {
        return Ok(LossReport {
            chain: ledger.chain.clone(),
            victims: 0,
            victim_txs: 0,
            total_wei: 0,
            mean_wei: zero.clone(),
            median_wei: zero.clone(),
            usd_min: zero.clone(),
            usd_max: zero,
        });
    }
    let (lo, hi) = prices
        .band(&ledger.chain, period.0, period.1)
        .ok_or_else(|| LossError::EmptyPricePeriod {
            chain: ledger.chain.clone(),
            from: period.0,
            to: period.1,
        })?;

    let total = ledger.total_wei();
    let n = per_victim.len();
    let big = |v: u128| BigRational::from_integer(BigInt::from(v));
    let mean = big(total) / BigRational::from_integer(BigInt::from(n));
    let mut sorted = per_victim;
    sorted.sort_unstable();
    let median = if n % 2 == 1 {
        big(sorted[n / 2])
    } else {
        (big(sorted[n / 2 - 1]) + big(sorted[n / 2])) / BigRational::from_integer(BigInt::from(2))
    };
    let coin = wei_to_coin(&big(total));
    Ok(LossReport {
        chain: ledger.chain.clone(),
        victims: n,
        victim_txs: ledger.victim_txs.len(),
        total_wei: total,
        mean_wei: mean,
        median_wei: median,
        usd_min: &coin * lo,
        usd_max: coin * hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(text: &str) -> BigRational {
        parse_decimal(text).unwrap()
    }

    #[test]
    fn decimals() {
        assert_eq!(r("1.50"), BigRational::new(3.into(), 2.into()));
        assert_eq!(r("-0.25"), BigRational::new((-1).into(), 4.into()));
        assert_eq!(r("7"), BigRational::from_integer(7.into()));
        assert!(parse_decimal("1e5").is_none());
        assert!(parse_decimal(".").is_none());
    }

    #[test]
    fn formatting() {
        assert_eq!(format_wei(&r("300000000000000000")), "0.3");
        assert_eq!(format_wei(&r("5000000000000000000")), "5");
        assert_eq!(format_wei(&r("0")), "0");
        assert_eq!(format_usd(&r("6")), "6.00");
        assert_eq!(format_usd(&r("1234.567")), "1234.57");
    }

    #[test]
    fn band_and_csv() {
        let csv = "date,chain,close_usd\n2023-05-01,ETH,1800.5\n2023-05-02,ETH,1750\n2023-05-03,BSC,300\n";
        let t = PriceTable::from_csv(csv.as_bytes()).unwrap();
        let d = |s: &str| s.parse::<NaiveDate>().unwrap();
        assert_eq!(t.band(&Chain::Eth, d("2023-05-01"), d("2023-05-31")), Some((r("1750"), r("1800.5"))));
        assert_eq!(t.band(&Chain::Eth, d("2023-06-01"), d("2023-06-30")), None);
        let dup = "date,chain,close_usd\n2023-05-01,ETH,1\n2023-05-01,ETH,2\n";
        assert!(matches!(PriceTable::from_csv(dup.as_bytes()), Err(LossError::BadPriceRow { line: 3, .. })));
        let neg = "date,chain,close_usd\n2023-05-01,ETH,0\n";
        assert!(PriceTable::from_csv(neg.as_bytes()).is_err());
    }
}
