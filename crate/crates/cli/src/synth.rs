//! Synthetic preprocessed datasets with a planted linear model.
//!
//! Row `i` belongs to town `i mod towns`, so every town appears. Years are
//! uniform over the range, each year has one median rate, and sale ratios are
//! uniform on `[0.4, 1.0]`. The planted model uses the full feature layout
//! (intercept, one coefficient per town, year, rate, ratio) with the last
//! town's coefficient fixed at zero, which makes it the unique solution once
//! the dependent town column is dropped. The intercept centers the planted
//! value at 0.5 so thresholded labels are balanced.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use lsqbench_core::pipeline::{assess_investments, PreprocessConfig, TownYearGroup};
use lsqbench_core::solvers::INTERCEPT_NAME;

use crate::error::{CliError, Result};

pub const LABEL_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub rows: usize,
    pub towns: usize,
    pub year_start: i32,
    pub year_end: i32,
    pub seed: u64,
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    /// Labeled groups, sorted by `(town, year)`.
    pub groups: Vec<TownYearGroup>,
    /// Planted value plus noise, aligned with `groups`.
    pub targets: Vec<f64>,
    /// `(column name, coefficient)` in design-matrix order, intercept first.
    pub planted: Vec<(String, f64)>,
}

pub fn town_name(i: usize) -> String {
    format!("Town{:02}", i + 1)
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    if cfg.rows == 0 {
        return Err(CliError::Usage("--rows must be positive".to_string()));
    }
    if cfg.towns == 0 || cfg.towns > cfg.rows {
        return Err(CliError::Usage(format!(
            "--towns must be between 1 and --rows ({}), got {}",
            cfg.rows, cfg.towns
        )));
    }
    if cfg.year_start > cfg.year_end {
        return Err(CliError::Usage("empty year range".to_string()));
    }
    if !(cfg.noise >= 0.0 && cfg.noise.is_finite()) {
        return Err(CliError::Usage(format!(
            "--noise must be non-negative, got {}",
            cfg.noise
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let years: Vec<i32> = (cfg.year_start..=cfg.year_end).collect();
    let year_rate: Vec<f64> = years.iter().map(|_| rng.random_range(2.5..8.0)).collect();

    let mut town_coef: Vec<f64> = (0..cfg.towns)
        .map(|_| rng.random_range(-0.4..0.4))
        .collect();
    *town_coef.last_mut().expect("at least one town") = 0.0;
    let year_coef = rng.random_range(-0.03..0.03);
    let rate_coef = rng.random_range(-0.15..0.15);
    let ratio_coef = rng.random_range(-1.0..1.0);

    struct Row {
        town: usize,
        year: i32,
        rate: f64,
        ratio: f64,
        count: usize,
        signal: f64,
    }
    let mut rows: Vec<Row> = (0..cfg.rows)
        .map(|i| {
            let town = i % cfg.towns;
            let yi = rng.random_range(0..years.len() as u64) as usize;
            let ratio = rng.random_range(0.4..1.0);
            let count = rng.random_range(1..=10u64) as usize;
            let rate = year_rate[yi];
            let year = years[yi];
            let signal = town_coef[town]
                + year_coef * f64::from(year)
                + rate_coef * rate
                + ratio_coef * ratio;
            Row {
                town,
                year,
                rate,
                ratio,
                count,
                signal,
            }
        })
        .collect();

    let intercept = LABEL_THRESHOLD - rows.iter().map(|r| r.signal).sum::<f64>() / cfg.rows as f64;
    let noise: Vec<f64> = (0..cfg.rows)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            cfg.noise * z
        })
        .collect();

    // Stable sort keeps generation order within a (town, year) cell.
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by_key(|&i| (rows[i].town, rows[i].year));

    let mut groups = Vec::with_capacity(cfg.rows);
    let mut targets = Vec::with_capacity(cfg.rows);
    for &i in &order {
        let r = &mut rows[i];
        let target = intercept + r.signal + noise[i];
        groups.push(TownYearGroup {
            town: town_name(r.town),
            year: r.year,
            median_sale_ratio: r.ratio,
            sale_count: r.count,
            median_rate: r.rate,
            financials: None,
            buy: Some(target > LABEL_THRESHOLD),
        });
        targets.push(target);
    }
    let groups = assess_investments(&groups, &PreprocessConfig::default())?;

    let mut planted = vec![(INTERCEPT_NAME.to_string(), intercept)];
    planted.extend(
        town_coef
            .iter()
            .enumerate()
            .map(|(i, c)| (format!("town={}", town_name(i)), *c)),
    );
    planted.push(("year".to_string(), year_coef));
    planted.push(("median_rate".to_string(), rate_coef));
    planted.push(("median_sale_ratio".to_string(), ratio_coef));

    Ok(SynthData {
        groups,
        targets,
        planted,
    })
}
