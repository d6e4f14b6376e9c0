//! Shared fit-and-score harness behind `run` and `compare`.

use lsqbench_core::features::{build_design_matrix, train_test_split, DesignMatrix, SplitIndices};
use lsqbench_core::matrix::RealVector;
use lsqbench_core::metrics::{mse, r2_score, residuals, time_solver, EvalReport};
use lsqbench_core::pipeline::TownYearGroup;
use lsqbench_core::solvers::{
    condition_number, fit, predict, GeConfig, RankPolicy, SolverKind, SolverOptions,
};

use crate::error::Result;

/// Rank handling of the reference QR solver inside the CLI workflows. The
/// full one-hot block plus intercept is always rank deficient, so the strict
/// policy would reject every real dataset.
pub const CLI_QR_POLICY: RankPolicy = RankPolicy::DropDependent;

#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings {
    pub solvers: Vec<SolverKind>,
    pub test_size: f64,
    pub seed: u64,
    pub ge: GeConfig,
    pub repeat: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSuccess {
    pub report: EvalReport,
    pub dependent_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutcome {
    pub solver: SolverKind,
    pub result: std::result::Result<SolverSuccess, String>,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub design: DesignMatrix,
    pub split: SplitIndices,
    pub condition_number: f64,
    pub outcomes: Vec<SolverOutcome>,
    pub notes: Vec<String>,
}

impl Evaluation {
    pub fn any_succeeded(&self) -> bool {
        self.outcomes.iter().any(|o| o.result.is_ok())
    }

    pub fn successes(&self) -> impl Iterator<Item = &SolverSuccess> {
        self.outcomes.iter().filter_map(|o| o.result.as_ref().ok())
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Builds the design matrix, splits it, and fits every requested solver in
/// sequence. Solver failures are captured per solver.
pub fn evaluate(groups: &[TownYearGroup], settings: &FitSettings) -> Result<Evaluation> {
    let design = build_design_matrix(groups)?;
    let split = train_test_split(design.rows(), settings.test_size, settings.seed)?;
    evaluate_design(design, split, settings)
}

pub fn evaluate_design(
    design: DesignMatrix,
    split: SplitIndices,
    settings: &FitSettings,
) -> Result<Evaluation> {
    let x_train = design.x.select_rows(&split.train);
    let x_test = design.x.select_rows(&split.test);
    let y_train = design.y.select(&split.train);
    let y_test = design.y.select(&split.test);
    let kappa = condition_number(&design.x.augment_ones())?;

    let opts = SolverOptions {
        ge: settings.ge,
        qr_rank_policy: CLI_QR_POLICY,
    };
    let mut notes = Vec::new();
    let mut outcomes = Vec::with_capacity(settings.solvers.len());
    for &solver in &settings.solvers {
        let mut runtimes = Vec::with_capacity(settings.repeat.max(1));
        let mut first = None;
        for _ in 0..settings.repeat.max(1) {
            let (res, ms) = time_solver(|| {
                let outcome = fit(solver, &x_train, &y_train, &opts)?;
                let pred = predict(&outcome.coefficients, &x_test)?;
                Ok::<_, lsqbench_core::Error>((outcome, pred))
            });
            runtimes.push(ms);
            if first.is_none() {
                first = Some(res);
            }
        }
        let runtime_ms = median(runtimes);
        let result = match first.expect("at least one repetition") {
            Err(e) => Err(e.to_string()),
            Ok((outcome, pred_test)) => score(
                solver,
                outcome,
                &pred_test,
                &x_train,
                &y_train,
                &y_test,
                runtime_ms,
                &design.column_names,
                &mut notes,
            ),
        };
        outcomes.push(SolverOutcome {
            solver,
            result,
            runtime_ms,
        });
    }
    Ok(Evaluation {
        design,
        split,
        condition_number: kappa,
        outcomes,
        notes,
    })
}

#[allow(clippy::too_many_arguments)]
fn score(
    solver: SolverKind,
    outcome: lsqbench_core::solvers::FitOutcome,
    pred_test: &RealVector,
    x_train: &lsqbench_core::DenseMatrix,
    y_train: &RealVector,
    y_test: &RealVector,
    runtime_ms: f64,
    column_names: &[String],
    notes: &mut Vec<String>,
) -> std::result::Result<SolverSuccess, String> {
    let coefficients = outcome
        .coefficients
        .with_feature_names(column_names)
        .map_err(|e| e.to_string())?;
    let pred_train = predict(&coefficients, x_train).map_err(|e| e.to_string())?;
    let mut r2 = |set: &str, y: &[f64], p: &[f64]| match r2_score(y, p) {
        Ok(v) => v,
        Err(e) => {
            notes.push(format!("{solver}: {set} r2 undefined ({e})"));
            f64::NAN
        }
    };
    let train_r2 = r2("train", y_train.as_slice(), pred_train.as_slice());
    let test_r2 = r2("test", y_test.as_slice(), pred_test.as_slice());
    let mse = mse(y_test.as_slice(), pred_test.as_slice()).map_err(|e| e.to_string())?;
    let residuals_test =
        residuals(y_test.as_slice(), pred_test.as_slice()).map_err(|e| e.to_string())?;
    let dependent_columns = outcome
        .dependent_columns
        .iter()
        .map(|&j| coefficients.layout()[j].clone())
        .collect();
    Ok(SolverSuccess {
        report: EvalReport {
            solver,
            train_r2,
            test_r2,
            mse,
            runtime_ms,
            coefficients,
            residuals_test,
        },
        dependent_columns,
    })
}
