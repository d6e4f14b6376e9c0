//! The four subcommands. Each returns the exit code on completion; errors
//! that abort a command are returned as [`CliError`].

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use lsqbench_core::format::format_g17;
use lsqbench_core::metrics::{histogram, top_k_coefficients, EvalReport};
use lsqbench_core::pipeline::{
    read_groups_file, run_preprocess, write_groups, write_groups_with_extra, ColumnMap,
    PreprocessConfig,
};
use lsqbench_core::solvers::{GeConfig, RankPolicy, SolverKind};

use crate::args::{
    parse_solvers, parse_year_range, Command, CompareArgs, FitArgs, PreprocessArgs, RunArgs,
    SynthArgs, TargetMode,
};
use crate::error::{CliError, ExitCode, Result};
use crate::evaluate::{evaluate, Evaluation, FitSettings, CLI_QR_POLICY};
use crate::report::{
    ComparisonReport, ConditionNumber, DatasetSummary, EffectiveConfig, NamedCoefficient,
    SolverEntry, Status, SCHEMA_VERSION,
};
use crate::synth::{generate, SynthConfig};

pub fn dispatch(
    command: Command,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<ExitCode> {
    match command {
        Command::Preprocess(a) => cmd_preprocess(&a, stdout, stderr),
        Command::Run(a) => cmd_run(&a, stdout),
        Command::Compare(a) => cmd_compare(&a, stdout),
        Command::Synth(a) => cmd_synth(&a, stdout),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn say(out: &mut dyn Write, msg: std::fmt::Arguments<'_>) {
    // Summaries are best effort; a closed stdout must not fail the command.
    let _ = out.write_fmt(msg);
}

pub fn cmd_preprocess(
    args: &PreprocessArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<ExitCode> {
    let cfg = PreprocessConfig::new(args.investment, args.term_years, args.payments_per_year)?;
    let map = match &args.column_map {
        Some(spec) => ColumnMap::parse(spec)?,
        None => ColumnMap::default(),
    };
    let out = run_preprocess(&args.sales, &args.rates, &cfg, &map)?;
    for w in &out.warnings {
        say(stderr, format_args!("warning: {w}\n"));
    }
    let mut buf = Vec::new();
    write_groups(&mut buf, &out.groups)?;
    write_file(&args.out, &buf)?;
    say(
        stdout,
        format_args!(
            "sales rows: {}\nrate rows: {}\ndropped sales: {}\ngroups: {}\n",
            out.sales_rows,
            out.rate_rows,
            out.dropped_sales,
            out.groups.len()
        ),
    );
    Ok(ExitCode::Success)
}

fn fit_settings(fit: &FitArgs) -> Result<FitSettings> {
    let solvers = parse_solvers(&fit.solver).map_err(CliError::Usage)?;
    if !(fit.test_size > 0.0 && fit.test_size < 1.0) {
        return Err(CliError::Usage(format!(
            "--test-size must be in (0, 1), got {}",
            fit.test_size
        )));
    }
    if fit.repeat == 0 {
        return Err(CliError::Usage("--repeat must be at least 1".to_string()));
    }
    Ok(FitSettings {
        solvers,
        test_size: fit.test_size,
        seed: fit.seed,
        ge: GeConfig::new(fit.reg_factor)?,
        repeat: fit.repeat,
    })
}

fn policy_name(p: RankPolicy) -> &'static str {
    match p {
        RankPolicy::Strict => "strict",
        RankPolicy::DropDependent => "drop_dependent",
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn build_report(
    command: &str,
    fit: &FitArgs,
    settings: &FitSettings,
    eval: &Evaluation,
) -> ComparisonReport {
    let design = &eval.design;
    let years = design.x.column(design.x.cols() - 3);
    let year_min = years.iter().copied().fold(f64::INFINITY, f64::min) as i32;
    let year_max = years.iter().copied().fold(f64::NEG_INFINITY, f64::max) as i32;
    let solvers = eval
        .outcomes
        .iter()
        .map(|o| match &o.result {
            Ok(s) => SolverEntry {
                solver: o.solver.name().to_string(),
                status: Status::Ok,
                error: None,
                train_r2: finite(s.report.train_r2),
                test_r2: finite(s.report.test_r2),
                mse: finite(s.report.mse),
                runtime_ms: o.runtime_ms,
                coefficients: s
                    .report
                    .coefficients
                    .layout()
                    .iter()
                    .zip(s.report.coefficients.values())
                    .map(|(name, &value)| NamedCoefficient {
                        name: name.clone(),
                        value,
                    })
                    .collect(),
                dependent_columns: s.dependent_columns.clone(),
                residuals_test: s.report.residuals_test.clone(),
            },
            Err(e) => SolverEntry {
                solver: o.solver.name().to_string(),
                status: Status::Error,
                error: Some(e.clone()),
                train_r2: None,
                test_r2: None,
                mse: None,
                runtime_ms: o.runtime_ms,
                coefficients: Vec::new(),
                dependent_columns: Vec::new(),
                residuals_test: Vec::new(),
            },
        })
        .collect();
    ComparisonReport {
        schema_version: SCHEMA_VERSION,
        command: command.to_string(),
        config: EffectiveConfig {
            data_path: fit.data.display().to_string(),
            solvers: settings
                .solvers
                .iter()
                .map(|s| s.name().to_string())
                .collect(),
            test_size: settings.test_size,
            seed: settings.seed,
            reg_factor: settings.ge.reg_factor(),
            repeat: settings.repeat,
            qr_rank_policy: policy_name(CLI_QR_POLICY).to_string(),
            k: None,
            bins: None,
        },
        dataset: DatasetSummary {
            rows: design.rows(),
            columns: design.x.cols(),
            towns: design.encoder.len(),
            year_min,
            year_max,
            train_rows: eval.split.train.len(),
            test_rows: eval.split.test.len(),
        },
        condition_number: ConditionNumber::from_value(eval.condition_number),
        solvers,
        notes: eval.notes.clone(),
    }
}

fn summarize(stdout: &mut dyn Write, eval: &Evaluation) {
    say(
        stdout,
        format_args!("condition number: {}\n", eval.condition_number),
    );
    for o in &eval.outcomes {
        match &o.result {
            Ok(s) => say(
                stdout,
                format_args!(
                    "{}: train_r2={:.4} test_r2={:.4} mse={:.4} runtime_ms={:.3}\n",
                    o.solver, s.report.train_r2, s.report.test_r2, s.report.mse, o.runtime_ms
                ),
            ),
            Err(e) => say(stdout, format_args!("{}: error: {e}\n", o.solver)),
        }
    }
}

fn completion(eval: &Evaluation) -> ExitCode {
    if eval.any_succeeded() {
        ExitCode::Success
    } else {
        ExitCode::AllSolversFailed
    }
}

/// Fits the selected solvers and writes the JSON report, including when every
/// solver failed (exit 3) so the errors are inspectable.
pub fn cmd_run(args: &RunArgs, stdout: &mut dyn Write) -> Result<ExitCode> {
    let settings = fit_settings(&args.fit)?;
    let groups = read_groups_file(&args.fit.data)?;
    let eval = evaluate(&groups, &settings)?;
    let report = build_report("run", &args.fit, &settings, &eval);
    write_file(&args.report, report.to_json().as_bytes())?;
    summarize(stdout, &eval);
    Ok(completion(&eval))
}

/// Tracks files written into the output directory so a failed compare can
/// remove them again.
struct OutputDir {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
    keep: bool,
}

impl OutputDir {
    fn open(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            created_dir,
            written: Vec::new(),
            keep: false,
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        write_file(&path, bytes)
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        if self.keep {
            return;
        }
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let sink = || CliError::Usage("failed to encode CSV".to_string());
    w.write_record(header).map_err(|_| sink())?;
    for r in rows {
        w.write_record(r).map_err(|_| sink())?;
    }
    w.into_inner().map_err(|_| sink())
}

fn opt_g17(x: Option<f64>) -> String {
    x.map(format_g17).unwrap_or_default()
}

fn metrics_csv(report: &ComparisonReport) -> Result<Vec<u8>> {
    let rows: Vec<Vec<String>> = report
        .solvers
        .iter()
        .map(|e| {
            vec![
                e.solver.clone(),
                opt_g17(e.train_r2),
                opt_g17(e.test_r2),
                opt_g17(e.mse),
                format_g17(e.runtime_ms),
                e.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    csv_bytes(
        &[
            "solver",
            "train_r2",
            "test_r2",
            "mse",
            "runtime_ms",
            "error",
        ],
        &rows,
    )
}

fn residuals_csv(residuals: &[f64], bins: usize) -> Result<Vec<u8>> {
    let h = histogram(residuals, bins)?;
    let mut rows = Vec::with_capacity(bins + residuals.len());
    for (i, &count) in h.counts.iter().enumerate() {
        rows.push(vec![
            "histogram".to_string(),
            i.to_string(),
            format_g17(h.bin_edges[i]),
            format_g17(h.bin_edges[i + 1]),
            count.to_string(),
            String::new(),
        ]);
    }
    for (i, &r) in residuals.iter().enumerate() {
        rows.push(vec![
            "residual".to_string(),
            i.to_string(),
            String::new(),
            String::new(),
            String::new(),
            format_g17(r),
        ]);
    }
    csv_bytes(
        &[
            "section",
            "index",
            "bin_lower",
            "bin_upper",
            "count",
            "residual",
        ],
        &rows,
    )
}

/// Reference for the top-k table: QR when it succeeded, else LU, else GE.
fn reference_solver(reports: &[EvalReport]) -> Option<SolverKind> {
    [SolverKind::Qr, SolverKind::Lu, SolverKind::Ge]
        .into_iter()
        .find(|k| reports.iter().any(|r| r.solver == *k))
}

pub fn cmd_compare(args: &CompareArgs, stdout: &mut dyn Write) -> Result<ExitCode> {
    let settings = fit_settings(&args.fit)?;
    if args.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".to_string()));
    }
    if args.bins == 0 {
        return Err(CliError::Usage("--bins must be at least 1".to_string()));
    }
    let groups = read_groups_file(&args.fit.data)?;
    let eval = evaluate(&groups, &settings)?;
    let mut report = build_report("compare", &args.fit, &settings, &eval);
    report.config.k = Some(args.k);
    report.config.bins = Some(args.bins);

    let reports: Vec<EvalReport> = eval.successes().map(|s| s.report.clone()).collect();
    let topk = match reference_solver(&reports) {
        Some(reference) => {
            if reference != SolverKind::Qr {
                report.notes.push(format!(
                    "qr unavailable; top-k columns ranked by {reference}"
                ));
            }
            let table = top_k_coefficients(&reports, reference, args.k)?;
            if table.clamped() {
                report.notes.push(format!(
                    "k clamped from {} to {} (coefficient count)",
                    table.k_requested,
                    table.k_used()
                ));
            }
            Some(table)
        }
        None => None,
    };

    let mut out = OutputDir::open(&args.out_dir)?;
    out.write("metrics.csv", &metrics_csv(&report)?)?;
    for r in &reports {
        out.write(
            &format!("residuals_{}.csv", r.solver),
            &residuals_csv(&r.residuals_test, args.bins)?,
        )?;
    }
    if let Some(table) = &topk {
        let mut header = vec!["rank", "index", "column"];
        header.extend(table.solvers.iter().map(|s| s.name()));
        let rows: Vec<Vec<String>> = table
            .rows
            .iter()
            .enumerate()
            .map(|(rank, row)| {
                let mut r = vec![
                    (rank + 1).to_string(),
                    row.index.to_string(),
                    row.column.clone(),
                ];
                r.extend(row.values.iter().map(|&v| format_g17(v)));
                r
            })
            .collect();
        out.write("coefficients_topk.csv", &csv_bytes(&header, &rows)?)?;
    }
    out.write("report.json", report.to_json().as_bytes())?;
    out.keep = true;

    summarize(stdout, &eval);
    Ok(completion(&eval))
}

pub fn cmd_synth(args: &SynthArgs, stdout: &mut dyn Write) -> Result<ExitCode> {
    let (year_start, year_end) = parse_year_range(&args.years).map_err(CliError::Usage)?;
    let data = generate(&SynthConfig {
        rows: args.rows,
        towns: args.towns,
        year_start,
        year_end,
        seed: args.seed,
        noise: args.noise,
    })?;

    let mut buf = Vec::new();
    match args.target {
        TargetMode::Label => write_groups(&mut buf, &data.groups)?,
        TargetMode::Continuous => {
            write_groups_with_extra(&mut buf, &data.groups, Some(("Target", &data.targets)))?
        }
    }
    write_file(&args.out, &buf)?;

    if let Some(path) = &args.planted_coefs {
        let rows: Vec<Vec<String>> = data
            .planted
            .iter()
            .map(|(name, v)| vec![name.clone(), format_g17(*v)])
            .collect();
        write_file(path, &csv_bytes(&["name", "value"], &rows)?)?;
    }
    let positives = data.groups.iter().filter(|g| g.buy == Some(true)).count();
    say(
        stdout,
        format_args!(
            "rows: {}\ntowns: {}\nbuy=1: {positives}\n",
            data.groups.len(),
            args.towns
        ),
    );
    Ok(ExitCode::Success)
}
