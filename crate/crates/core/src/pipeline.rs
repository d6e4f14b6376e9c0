//! Preprocessing of raw sales and mortgage-rate tables into labeled
//! town-year groups:
//!
//! 1. median mortgage rate per calendar year,
//! 2. inner join of sales onto those medians by year,
//! 3. grouping by `(town, year)` with median sale ratio and sale count,
//! 4. affordable assessed value and total mortgage payment per group,
//! 5. buy label: metric strictly below the town's mean metric.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};

use crate::error::{Error, Result};
use crate::format::format_g17;

/// Rates below this are probably fractions (0.065) rather than percents (6.5).
pub const FRACTION_RATE_WARNING: f64 = 0.5;

/// One mortgage-rate observation, in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRecord {
    pub year: i32,
    pub date: Option<NaiveDate>,
    pub rate: f64,
}

impl RateRecord {
    pub fn on(date: NaiveDate, rate: f64) -> Self {
        RateRecord {
            year: date.year(),
            date: Some(date),
            rate,
        }
    }

    pub fn for_year(year: i32, rate: f64) -> Self {
        RateRecord {
            year,
            date: None,
            rate,
        }
    }
}

/// One recorded real-estate sale.
#[derive(Debug, Clone, PartialEq)]
pub struct SaleRecord {
    pub town: String,
    pub year: i32,
    pub sale_amount: f64,
    pub assessed_value: f64,
    pub sale_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Financials {
    /// Assessed value the investment buys at the group's sale ratio.
    pub assessed_value: f64,
    /// Sum of all mortgage payments on the investment.
    pub total_payment: f64,
    /// `total_payment - assessed_value`.
    pub metric: f64,
}

/// Aggregated `(town, year)` row.
#[derive(Debug, Clone, PartialEq)]
pub struct TownYearGroup {
    pub town: String,
    pub year: i32,
    pub median_sale_ratio: f64,
    pub sale_count: usize,
    pub median_rate: f64,
    pub financials: Option<Financials>,
    pub buy: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessConfig {
    investment: f64,
    term_years: u32,
    payments_per_year: u32,
}

impl PreprocessConfig {
    pub const DEFAULT_INVESTMENT: f64 = 500_000.0;
    pub const DEFAULT_TERM_YEARS: u32 = 30;
    pub const DEFAULT_PAYMENTS_PER_YEAR: u32 = 12;

    pub fn new(investment: f64, term_years: u32, payments_per_year: u32) -> Result<Self> {
        if !(investment > 0.0 && investment.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "investment must be positive, got {investment}"
            )));
        }
        if term_years == 0 || payments_per_year == 0 {
            return Err(Error::InvalidArgument(
                "term_years and payments_per_year must be positive".to_string(),
            ));
        }
        Ok(PreprocessConfig {
            investment,
            term_years,
            payments_per_year,
        })
    }

    pub fn investment(&self) -> f64 {
        self.investment
    }

    pub fn term_years(&self) -> u32 {
        self.term_years
    }

    pub fn payments_per_year(&self) -> u32 {
        self.payments_per_year
    }

    pub fn periods(&self) -> u32 {
        self.term_years * self.payments_per_year
    }
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            investment: Self::DEFAULT_INVESTMENT,
            term_years: Self::DEFAULT_TERM_YEARS,
            payments_per_year: Self::DEFAULT_PAYMENTS_PER_YEAR,
        }
    }
}

/// Middle element, or the mean of the two middle elements for even counts.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("median"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Ok(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    })
}

pub fn median_rate_by_year(rates: &[RateRecord]) -> Result<BTreeMap<i32, f64>> {
    if rates.is_empty() {
        return Err(Error::Empty("median_rate_by_year"));
    }
    let mut by_year: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for r in rates {
        by_year.entry(r.year).or_default().push(r.rate);
    }
    by_year
        .into_iter()
        .map(|(year, values)| Ok((year, median(&values)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergedSales {
    pub joined: Vec<(SaleRecord, f64)>,
    /// Sales whose year has no rate median.
    pub dropped: usize,
}

/// Inner join of sales onto yearly median rates.
pub fn merge_rates(sales: &[SaleRecord], medians: &BTreeMap<i32, f64>) -> MergedSales {
    let mut joined = Vec::with_capacity(sales.len());
    let mut dropped = 0;
    for s in sales {
        match medians.get(&s.year) {
            Some(&rate) => joined.push((s.clone(), rate)),
            None => dropped += 1,
        }
    }
    MergedSales { joined, dropped }
}

/// One group per distinct `(town, year)`, sorted by town then year.
/// Financial fields and labels are left unset.
pub fn aggregate_town_year(joined: &[(SaleRecord, f64)]) -> Result<Vec<TownYearGroup>> {
    if joined.is_empty() {
        return Err(Error::Empty("aggregate_town_year"));
    }
    let mut buckets: BTreeMap<(&str, i32), (Vec<f64>, f64)> = BTreeMap::new();
    for (sale, rate) in joined {
        buckets
            .entry((sale.town.as_str(), sale.year))
            .or_insert_with(|| (Vec::new(), *rate))
            .0
            .push(sale.sale_ratio);
    }
    buckets
        .into_iter()
        .map(|((town, year), (ratios, rate))| {
            Ok(TownYearGroup {
                town: town.to_string(),
                year,
                median_sale_ratio: median(&ratios)?,
                sale_count: ratios.len(),
                median_rate: rate,
                financials: None,
                buy: None,
            })
        })
        .collect()
}

/// Assessed value an investment buys at the given sales ratio
/// (assessed value / sale price): `investment × ratio`.
pub fn affordable_assessed_value(cfg: &PreprocessConfig, median_sale_ratio: f64) -> Result<f64> {
    if !(median_sale_ratio > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sale ratio must be positive, got {median_sale_ratio}"
        )));
    }
    Ok(cfg.investment * median_sale_ratio)
}

/// Sum of all level payments on a fully amortizing loan.
///
/// With `n = term_years · payments_per_year` and periodic rate
/// `r = annual_rate / 100 / payments_per_year`, the payment is
/// `M = P·r·(1+r)ⁿ / ((1+r)ⁿ − 1)` and the total is `M·n` (`P` when `r = 0`).
pub fn mortgage_total_payment(
    principal: f64,
    annual_rate: f64,
    cfg: &PreprocessConfig,
) -> Result<f64> {
    if !(principal > 0.0 && principal.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "principal must be positive, got {principal}"
        )));
    }
    if !(annual_rate >= 0.0 && annual_rate.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "annual rate must be non-negative, got {annual_rate}"
        )));
    }
    let n = f64::from(cfg.periods());
    let r = annual_rate / 100.0 / f64::from(cfg.payments_per_year);
    if r == 0.0 {
        return Ok(principal);
    }
    let growth = (1.0 + r).powf(n);
    let payment = principal * r * growth / (growth - 1.0);
    Ok(payment * n)
}

/// Fills in the financial fields: the investment is the mortgage principal,
/// financed at the group's median rate.
pub fn assess_investments(
    groups: &[TownYearGroup],
    cfg: &PreprocessConfig,
) -> Result<Vec<TownYearGroup>> {
    groups
        .iter()
        .map(|g| {
            let assessed_value = affordable_assessed_value(cfg, g.median_sale_ratio)?;
            let total_payment = mortgage_total_payment(cfg.investment, g.median_rate, cfg)?;
            Ok(TownYearGroup {
                financials: Some(Financials {
                    assessed_value,
                    total_payment,
                    metric: total_payment - assessed_value,
                }),
                ..g.clone()
            })
        })
        .collect()
}

/// Labels each group `buy = metric < mean metric of its town` (strict).
/// Groups without financials get them computed from `cfg` first.
pub fn label_buy_recommendations(
    groups: &[TownYearGroup],
    cfg: &PreprocessConfig,
) -> Result<Vec<TownYearGroup>> {
    let mut out = Vec::with_capacity(groups.len());
    for g in groups {
        let mut g = g.clone();
        let fin = match g.financials {
            Some(f) => f,
            None => assess_investments(std::slice::from_ref(&g), cfg)?[0]
                .financials
                .expect("assess_investments sets financials"),
        };
        g.financials = Some(Financials {
            metric: fin.total_payment - fin.assessed_value,
            ..fin
        });
        out.push(g);
    }

    // Town means as `min + Σ(x − min)/n`, summed in input order. Shifting by
    // the minimum keeps the mean of identical metrics exactly equal to them,
    // so a town with one metric value has no buys.
    let metric = |g: &TownYearGroup| g.financials.map_or(0.0, |f| f.metric);
    let mut mins: HashMap<&str, f64> = HashMap::new();
    for g in &out {
        let m = mins.entry(g.town.as_str()).or_insert(f64::INFINITY);
        *m = m.min(metric(g));
    }
    let mut sums: HashMap<&str, (f64, usize)> = HashMap::new();
    for g in &out {
        let e = sums.entry(g.town.as_str()).or_insert((0.0, 0));
        e.0 += metric(g) - mins[g.town.as_str()];
        e.1 += 1;
    }
    let means: HashMap<String, f64> = sums
        .into_iter()
        .map(|(town, (sum, n))| (town.to_string(), mins[town] + sum / n as f64))
        .collect();

    for g in &mut out {
        let metric = g.financials.map_or(0.0, |f| f.metric);
        g.buy = Some(metric < means[&g.town]);
    }
    Ok(out)
}

/// Renames input headers before lookup: `source header → canonical name`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ColumnMap(HashMap<String, String>);

impl ColumnMap {
    /// Parses `Source=Target,Other Source=Other Target`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for pair in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (from, to) = pair.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("column map entry {pair:?} lacks '='"))
            })?;
            map.insert(from.trim().to_string(), to.trim().to_string());
        }
        Ok(ColumnMap(map))
    }

    fn rename<'a>(&'a self, header: &'a str) -> &'a str {
        self.0.get(header).map_or(header, String::as_str)
    }
}

/// Header lookup for one CSV file.
struct Columns {
    path: PathBuf,
    index: HashMap<String, usize>,
}

impl Columns {
    fn new(path: &Path, headers: &csv::StringRecord, map: &ColumnMap) -> Self {
        let mut index = HashMap::new();
        for (i, h) in headers.iter().enumerate() {
            index.entry(map.rename(h.trim()).to_string()).or_insert(i);
        }
        Columns {
            path: path.to_path_buf(),
            index,
        }
    }

    fn find(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.find(name).ok_or_else(|| Error::MissingColumn {
            path: self.path.clone(),
            column: name.to_string(),
        })
    }

    fn schema(&self, line: u64, message: impl Into<String>) -> Error {
        Error::Schema {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn field<'r>(&self, rec: &'r csv::StringRecord, idx: usize, name: &str) -> Result<&'r str> {
        let line = rec.position().map_or(0, |p| p.line());
        rec.get(idx)
            .map(str::trim)
            .ok_or_else(|| self.schema(line, format!("missing field {name:?}")))
    }

    fn number(&self, rec: &csv::StringRecord, idx: usize, name: &str) -> Result<f64> {
        let raw = self.field(rec, idx, name)?;
        let line = rec.position().map_or(0, |p| p.line());
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.schema(
                line,
                format!("{name}: expected a finite number, got {raw:?}"),
            )),
        }
    }

    fn integer(&self, rec: &csv::StringRecord, idx: usize, name: &str) -> Result<i64> {
        let raw = self.field(rec, idx, name)?;
        let line = rec.position().map_or(0, |p| p.line());
        raw.parse::<i64>()
            .or_else(|_| match raw.parse::<f64>() {
                Ok(v) if v.fract() == 0.0 && v.abs() < 1e15 => Ok(v as i64),
                _ => Err(()),
            })
            .map_err(|_| self.schema(line, format!("{name}: expected an integer, got {raw:?}")))
    }
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    match err.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        kind => Error::Schema {
            path: path.to_path_buf(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Reads sales from a CSV with `Town`, `Year` (or `List Year`),
/// `Assessed Value`, `Sale Amount` and `Sales Ratio` columns.
pub fn read_sales<R: Read>(input: R, path: &Path, map: &ColumnMap) -> Result<Vec<SaleRecord>> {
    let mut rdr = csv_reader(input);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let cols = Columns::new(path, &headers, map);
    let town = cols.require("Town")?;
    let year = match cols.find("Year") {
        Some(i) => i,
        None => cols.find("List Year").ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: "Year".to_string(),
        })?,
    };
    let assessed = cols.require("Assessed Value")?;
    let amount = cols.require("Sale Amount")?;
    let ratio = cols.require("Sales Ratio")?;

    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let town_name = cols.field(&rec, town, "Town")?;
        if town_name.is_empty() {
            return Err(cols.schema(line, "Town is empty"));
        }
        let y = cols.integer(&rec, year, "Year")?;
        if !(1900..=2100).contains(&y) {
            return Err(cols.schema(line, format!("Year {y} outside 1900..=2100")));
        }
        let sale = SaleRecord {
            town: town_name.to_string(),
            year: y as i32,
            sale_amount: cols.number(&rec, amount, "Sale Amount")?,
            assessed_value: cols.number(&rec, assessed, "Assessed Value")?,
            sale_ratio: cols.number(&rec, ratio, "Sales Ratio")?,
        };
        if sale.sale_amount < 0.0 || sale.assessed_value < 0.0 {
            return Err(cols.schema(line, "amounts must be non-negative"));
        }
        if !(sale.sale_ratio > 0.0) {
            return Err(cols.schema(
                line,
                format!("Sales Ratio must be positive, got {}", sale.sale_ratio),
            ));
        }
        out.push(sale);
    }
    Ok(out)
}

/// Reads rates from a CSV with `Interest Rate` (percent) and either `Date`
/// (`YYYY-MM-DD`) or `Year`. Returns the records and any warnings.
pub fn read_rates<R: Read>(
    input: R,
    path: &Path,
    map: &ColumnMap,
) -> Result<(Vec<RateRecord>, Vec<String>)> {
    let mut rdr = csv_reader(input);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let cols = Columns::new(path, &headers, map);
    let rate = cols.require("Interest Rate")?;
    let date = cols.find("Date");
    let year = match date {
        Some(_) => None,
        None => Some(cols.find("Year").ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: "Date".to_string(),
        })?),
    };

    let mut out = Vec::new();
    let mut small = 0usize;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let value = cols.number(&rec, rate, "Interest Rate")?;
        if value < 0.0 {
            return Err(cols.schema(
                line,
                format!("Interest Rate must be non-negative, got {value}"),
            ));
        }
        if value < FRACTION_RATE_WARNING {
            small += 1;
        }
        let record = match (date, year) {
            (Some(i), _) => {
                let raw = cols.field(&rec, i, "Date")?;
                let d = NaiveDate::parse_from_str(raw, "%Y-%m-%d").map_err(|_| {
                    cols.schema(line, format!("Date: expected YYYY-MM-DD, got {raw:?}"))
                })?;
                RateRecord::on(d, value)
            }
            (None, Some(i)) => {
                let y = cols.integer(&rec, i, "Year")?;
                if !(1900..=2100).contains(&y) {
                    return Err(cols.schema(line, format!("Year {y} outside 1900..=2100")));
                }
                RateRecord::for_year(y as i32, value)
            }
            (None, None) => unreachable!("either Date or Year was found"),
        };
        out.push(record);
    }
    let mut warnings = Vec::new();
    if small > 0 {
        warnings.push(format!(
            "{}: {small} interest rate(s) below {FRACTION_RATE_WARNING}; rates are read as percents (6.5 means 6.5%)",
            path.display()
        ));
    }
    Ok((out, warnings))
}

/// Everything `run_preprocess` learned along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessOutput {
    pub groups: Vec<TownYearGroup>,
    pub sales_rows: usize,
    pub rate_rows: usize,
    pub dropped_sales: usize,
    pub warnings: Vec<String>,
}

/// Runs all five preprocessing steps on in-memory records.
pub fn preprocess_records(
    sales: &[SaleRecord],
    rates: &[RateRecord],
    cfg: &PreprocessConfig,
) -> Result<(Vec<TownYearGroup>, usize)> {
    if rates.is_empty() {
        return Err(Error::NoUsableData("rates table has no rows".to_string()));
    }
    if sales.is_empty() {
        return Err(Error::NoUsableData("sales table has no rows".to_string()));
    }
    let medians = median_rate_by_year(rates)?;
    let merged = merge_rates(sales, &medians);
    if merged.joined.is_empty() {
        return Err(Error::NoUsableData(
            "no sale year matches any rate year".to_string(),
        ));
    }
    let groups = aggregate_town_year(&merged.joined)?;
    let groups = assess_investments(&groups, cfg)?;
    Ok((label_buy_recommendations(&groups, cfg)?, merged.dropped))
}

/// Reads both files and runs the five preprocessing steps.
pub fn run_preprocess(
    sales_path: &Path,
    rates_path: &Path,
    cfg: &PreprocessConfig,
    map: &ColumnMap,
) -> Result<PreprocessOutput> {
    let sales = read_sales(open(sales_path)?, sales_path, map)?;
    let (rates, warnings) = read_rates(open(rates_path)?, rates_path, map)?;
    let (groups, dropped_sales) = preprocess_records(&sales, &rates, cfg)?;
    Ok(PreprocessOutput {
        groups,
        sales_rows: sales.len(),
        rate_rows: rates.len(),
        dropped_sales,
        warnings,
    })
}

pub const GROUP_COLUMNS: [&str; 9] = [
    "Town",
    "Year",
    "Median Rate",
    "Median Sale Ratio",
    "Sale Count",
    "Assessed Value",
    "Total Payment",
    "Metric",
    "Buy Recommendation",
];

/// Writes labeled groups in the preprocessed CSV layout: fixed header,
/// `\n` line endings, reals with 17 significant digits.
pub fn write_groups<W: Write>(out: W, groups: &[TownYearGroup]) -> Result<()> {
    write_groups_with_extra(out, groups, None)
}

/// Like [`write_groups`], with one optional trailing real-valued column.
pub fn write_groups_with_extra<W: Write>(
    out: W,
    groups: &[TownYearGroup],
    extra: Option<(&str, &[f64])>,
) -> Result<()> {
    let sink = Path::new("<output>");
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header: Vec<&str> = GROUP_COLUMNS.to_vec();
    if let Some((name, values)) = extra {
        if values.len() != groups.len() {
            return Err(Error::LengthMismatch {
                op: "write_groups_with_extra",
                expected: groups.len(),
                actual: values.len(),
            });
        }
        header.push(name);
    }
    w.write_record(&header).map_err(|e| csv_error(sink, e))?;
    for (i, g) in groups.iter().enumerate() {
        let fin = g.financials.ok_or_else(|| {
            Error::InvalidArgument(format!("group ({}, {}) has no financials", g.town, g.year))
        })?;
        let buy = g.buy.ok_or_else(|| Error::Unlabeled {
            town: g.town.clone(),
            year: g.year,
        })?;
        let mut row = vec![
            g.town.clone(),
            g.year.to_string(),
            format_g17(g.median_rate),
            format_g17(g.median_sale_ratio),
            g.sale_count.to_string(),
            format_g17(fin.assessed_value),
            format_g17(fin.total_payment),
            format_g17(fin.metric),
            if buy { "1" } else { "0" }.to_string(),
        ];
        if let Some((_, values)) = extra {
            row.push(format_g17(values[i]));
        }
        w.write_record(&row).map_err(|e| csv_error(sink, e))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: sink.to_path_buf(),
        source,
    })
}

/// Reads a preprocessed CSV back into labeled groups. Extra columns are ignored.
pub fn read_groups<R: Read>(input: R, path: &Path) -> Result<Vec<TownYearGroup>> {
    let mut rdr = csv_reader(input);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let cols = Columns::new(path, &headers, &ColumnMap::default());
    let idx: Vec<usize> = GROUP_COLUMNS
        .iter()
        .map(|c| cols.require(c))
        .collect::<Result<_>>()?;

    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let town = cols.field(&rec, idx[0], "Town")?.to_string();
        if town.is_empty() {
            return Err(cols.schema(line, "Town is empty"));
        }
        let year = cols.integer(&rec, idx[1], "Year")?;
        if !(1900..=2100).contains(&year) {
            return Err(cols.schema(line, format!("Year {year} outside 1900..=2100")));
        }
        let count = cols.integer(&rec, idx[4], "Sale Count")?;
        if count < 1 {
            return Err(cols.schema(line, "Sale Count must be at least 1"));
        }
        let buy = match cols.number(&rec, idx[8], "Buy Recommendation")? {
            0.0 => false,
            1.0 => true,
            v => {
                return Err(cols.schema(line, format!("Buy Recommendation must be 0 or 1, got {v}")))
            }
        };
        out.push(TownYearGroup {
            town,
            year: year as i32,
            median_rate: cols.number(&rec, idx[2], "Median Rate")?,
            median_sale_ratio: cols.number(&rec, idx[3], "Median Sale Ratio")?,
            sale_count: count as usize,
            financials: Some(Financials {
                assessed_value: cols.number(&rec, idx[5], "Assessed Value")?,
                total_payment: cols.number(&rec, idx[6], "Total Payment")?,
                metric: cols.number(&rec, idx[7], "Metric")?,
            }),
            buy: Some(buy),
        });
    }
    if out.is_empty() {
        return Err(Error::NoUsableData(format!(
            "{} has no data rows",
            path.display()
        )));
    }
    Ok(out)
}

/// [`read_groups`] from a file path.
pub fn read_groups_file(path: &Path) -> Result<Vec<TownYearGroup>> {
    read_groups(open(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sale(town: &str, year: i32, ratio: f64) -> SaleRecord {
        SaleRecord {
            town: town.to_string(),
            year,
            sale_amount: 100_000.0,
            assessed_value: 100_000.0 * ratio,
            sale_ratio: ratio,
        }
    }

    fn labeled(town: &str, year: i32, metric: f64) -> TownYearGroup {
        TownYearGroup {
            town: town.to_string(),
            year,
            median_sale_ratio: 0.7,
            sale_count: 1,
            median_rate: 5.0,
            financials: Some(Financials {
                assessed_value: 0.0,
                total_payment: metric,
                metric,
            }),
            buy: None,
        }
    }

    /// Simulates the schedule month by month; the level payment is found by
    /// bisection on the final balance, independent of the closed form.
    fn amortization_total(principal: f64, annual_rate: f64, periods: u32, per_year: u32) -> f64 {
        let r = annual_rate / 100.0 / per_year as f64;
        let final_balance = |payment: f64| {
            let mut b = principal;
            for _ in 0..periods {
                b = b + b * r - payment;
            }
            b
        };
        let (mut lo, mut hi) = (0.0, principal * 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if final_balance(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi) * periods as f64
    }

    #[test]
    fn median_cases() {
        assert_eq!(median(&[3.0]).unwrap(), 3.0);
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 2.5);
        assert_eq!(median(&[5.0, 1.0, 9.0, 2.0, 7.0]).unwrap(), 5.0);
        assert!(matches!(median(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn yearly_medians() {
        let d = |s: &str| NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap();
        let one = median_rate_by_year(&[RateRecord::on(d("2010-03-04"), 5.0)]).unwrap();
        assert_eq!(one, BTreeMap::from([(2010, 5.0)]));

        let two = median_rate_by_year(&[
            RateRecord::on(d("2010-01-07"), 4.0),
            RateRecord::on(d("2010-06-10"), 6.0),
            RateRecord::for_year(2011, 5.0),
        ])
        .unwrap();
        assert_eq!(two, BTreeMap::from([(2010, 5.0), (2011, 5.0)]));
        assert!(median_rate_by_year(&[]).is_err());
    }

    #[test]
    fn weekly_rates_match_sorted_median() {
        let start = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap();
        let values: Vec<f64> = (0..52)
            .map(|i| 3.5 + ((i * 37) % 52) as f64 * 0.01)
            .collect();
        let records: Vec<RateRecord> = values
            .iter()
            .enumerate()
            .map(|(i, v)| RateRecord::on(start + chrono::Duration::weeks(i as i64), *v))
            .collect();
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let expected = (sorted[25] + sorted[26]) / 2.0;
        assert_eq!(median_rate_by_year(&records).unwrap()[&2015], expected);
    }

    #[test]
    fn merge_counts_drops() {
        let medians = BTreeMap::from([(2010, 5.0)]);
        let m = merge_rates(&[sale("A", 2010, 0.7)], &medians);
        assert_eq!(m.joined.len(), 1);
        assert_eq!(m.joined[0].1, 5.0);
        assert_eq!(m.dropped, 0);
        let m = merge_rates(&[sale("A", 1999, 0.7)], &medians);
        assert!(m.joined.is_empty());
        assert_eq!(m.dropped, 1);
    }

    #[test]
    fn aggregation() {
        let joined: Vec<_> = [0.5, 0.9, 0.7]
            .iter()
            .map(|&r| (sale("A", 2010, r), 5.0))
            .collect();
        let g = aggregate_town_year(&joined).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].median_sale_ratio, 0.7);
        assert_eq!(g[0].sale_count, 3);
        assert_eq!(g[0].median_rate, 5.0);

        let joined = vec![(sale("B", 2010, 0.5), 5.0), (sale("A", 2010, 0.6), 5.0)];
        let g = aggregate_town_year(&joined).unwrap();
        assert_eq!(
            g.iter().map(|g| g.town.as_str()).collect::<Vec<_>>(),
            ["A", "B"]
        );
        assert!(aggregate_town_year(&[]).is_err());
    }

    #[test]
    fn affordable_values() {
        let cfg = PreprocessConfig::default();
        assert_eq!(affordable_assessed_value(&cfg, 1.0).unwrap(), 500_000.0);
        assert_eq!(affordable_assessed_value(&cfg, 0.7).unwrap(), 350_000.0);
        assert!((affordable_assessed_value(&cfg, 0.654).unwrap() - 327_000.0).abs() < 1e-9);
        assert!(affordable_assessed_value(&cfg, 0.0).is_err());
        assert!(affordable_assessed_value(&cfg, -0.5).is_err());
    }

    #[test]
    fn mortgage_examples() {
        let cfg = PreprocessConfig::default();
        assert_eq!(
            mortgage_total_payment(250_000.0, 0.0, &cfg).unwrap(),
            250_000.0
        );

        let total = mortgage_total_payment(100_000.0, 6.0, &cfg).unwrap();
        assert!((total / 360.0 - 599.55).abs() < 0.005, "{}", total / 360.0);
        assert!((total - 215_838.19).abs() <= 0.01, "{total}");
        assert!((total - amortization_total(100_000.0, 6.0, 360, 12)).abs() <= 0.01);

        let total = mortgage_total_payment(350_000.0, 5.0, &cfg).unwrap();
        assert!((total - amortization_total(350_000.0, 5.0, 360, 12)).abs() <= 1.0);
        // Amortization schedule and closed form both give 676 395.24.
        assert!((total - 676_395.24).abs() <= 1.0, "{total}");

        assert!(mortgage_total_payment(0.0, 5.0, &cfg).is_err());
        assert!(mortgage_total_payment(1.0, -1.0, &cfg).is_err());
    }

    #[test]
    fn single_group_town_is_not_bought() {
        let cfg = PreprocessConfig::default();
        let out = label_buy_recommendations(&[labeled("A", 2010, 123.0)], &cfg).unwrap();
        assert_eq!(out[0].buy, Some(false));
    }

    #[test]
    fn two_point_mean() {
        let cfg = PreprocessConfig::default();
        let out = label_buy_recommendations(
            &[labeled("A", 2010, 100.0), labeled("A", 2011, 200.0)],
            &cfg,
        )
        .unwrap();
        assert_eq!(
            out.iter().map(|g| g.buy).collect::<Vec<_>>(),
            [Some(true), Some(false)]
        );
    }

    #[test]
    fn identical_metrics_are_never_below_their_mean() {
        // (0.1 + 0.1 + 0.1) / 3 rounds above 0.1.
        let cfg = PreprocessConfig::default();
        let groups: Vec<_> = (0..3).map(|i| labeled("A", 2010 + i, 0.1)).collect();
        let out = label_buy_recommendations(&groups, &cfg).unwrap();
        assert!(out.iter().all(|g| g.buy == Some(false)));
    }

    #[test]
    fn labeling_fills_missing_financials() {
        let cfg = PreprocessConfig::default();
        let mut g = labeled("A", 2010, 0.0);
        g.financials = None;
        let out = label_buy_recommendations(&[g], &cfg).unwrap();
        let f = out[0].financials.unwrap();
        assert_eq!(f.assessed_value, 350_000.0);
        assert_eq!(f.metric, f.total_payment - f.assessed_value);
    }

    #[test]
    fn sales_schema_errors() {
        let p = Path::new("sales.csv");
        let missing = "Town,Year,Assessed Value,Sale Amount\nA,2010,1,2\n";
        match read_sales(missing.as_bytes(), p, &ColumnMap::default()) {
            Err(Error::MissingColumn { column, .. }) => assert_eq!(column, "Sales Ratio"),
            other => panic!("{other:?}"),
        }
        let bad =
            "Town,Year,Assessed Value,Sale Amount,Sales Ratio\nA,2010,1,2,0.5\nB,20x0,1,2,0.5\n";
        match read_sales(bad.as_bytes(), p, &ColumnMap::default()) {
            Err(Error::Schema { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sales_list_year_and_column_map() {
        let p = Path::new("sales.csv");
        let text = "Serial,List Year,Name,Assessed Value,Sale Amount,Ratio\n1,2012,\"Hartford, CT\",70,100,0.7\n";
        let map = ColumnMap::parse("Name=Town, Ratio=Sales Ratio").unwrap();
        let s = read_sales(text.as_bytes(), p, &map).unwrap();
        assert_eq!(
            s,
            vec![SaleRecord {
                town: "Hartford, CT".to_string(),
                year: 2012,
                sale_amount: 100.0,
                assessed_value: 70.0,
                sale_ratio: 0.7,
            }]
        );
        assert!(ColumnMap::parse("novalue").is_err());
    }

    #[test]
    fn rates_by_year_column_and_fraction_warning() {
        let p = Path::new("rates.csv");
        let (r, warnings) = read_rates(
            "Year,Interest Rate\n2010,0.05\n".as_bytes(),
            p,
            &ColumnMap::default(),
        )
        .unwrap();
        assert_eq!(r, vec![RateRecord::for_year(2010, 0.05)]);
        assert_eq!(warnings.len(), 1);
        let err = read_rates(
            "Date,Interest Rate\n2010/01/01,5\n".as_bytes(),
            p,
            &ColumnMap::default(),
        );
        assert!(matches!(err, Err(Error::Schema { line: 2, .. })));
        let err = read_rates("When,Interest Rate\n".as_bytes(), p, &ColumnMap::default());
        assert!(matches!(err, Err(Error::MissingColumn { .. })));
    }

    #[test]
    fn zero_overlap_is_no_usable_data() {
        let sales = vec![sale("A", 2001, 0.7)];
        let rates = vec![RateRecord::for_year(2010, 5.0)];
        let err = preprocess_records(&sales, &rates, &PreprocessConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NoUsableData(_)));
    }

    #[test]
    fn groups_csv_round_trip() {
        let cfg = PreprocessConfig::default();
        let sales = vec![
            sale("A", 2010, 0.7),
            sale("A", 2011, 0.65),
            sale("B, East", 2010, 0.8),
        ];
        let rates = vec![
            RateRecord::for_year(2010, 4.69),
            RateRecord::for_year(2011, 4.45),
        ];
        let (groups, _) = preprocess_records(&sales, &rates, &cfg).unwrap();
        let mut buf = Vec::new();
        write_groups(&mut buf, &groups).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("Town,Year,Median Rate,"));
        assert!(text.contains("\"B, East\""));
        assert!(!text.contains('\r'));
        let back = read_groups(buf.as_slice(), Path::new("groups.csv")).unwrap();
        assert_eq!(back, groups);
    }

    proptest! {
        #[test]
        fn total_payment_monotone(p in 1_000.0f64..2_000_000.0, r in 0.0f64..15.0, dp in 1.0f64..1e5, dr in 0.01f64..3.0) {
            let cfg = PreprocessConfig::default();
            let base = mortgage_total_payment(p, r, &cfg).unwrap();
            prop_assert!(base >= p * (1.0 - 1e-12));
            prop_assert!(mortgage_total_payment(p + dp, r, &cfg).unwrap() > base);
            prop_assert!(mortgage_total_payment(p, r + dr, &cfg).unwrap() > base);
        }

        #[test]
        fn closed_form_matches_schedule(p in 10_000.0f64..1_000_000.0, r in 0.0f64..12.0) {
            let cfg = PreprocessConfig::default();
            let closed = mortgage_total_payment(p, r, &cfg).unwrap();
            let sim = amortization_total(p, r, 360, 12);
            prop_assert!((closed - sim).abs() <= 0.01 * p / 100_000.0);
        }
    }
}
