//! Implementations behind the subcommands.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use foga::flagspace::{FlagCatalog, OptLevel};
use foga::ga::{self, GAConfig, StoppingPolicy};
use foga::harness::mock::{MockBackend, MockModel};
use foga::harness::{
    evaluate_predefined, CompilerProfile, Evaluator, FitnessBackend, MeasuredCell,
    MeasurementProtocol,
};
use foga::importance::{one_hot_importance, render_importance};
use foga::meta::{self, ParameterSpace};
use foga::report::{emit_convergence, ComparisonReport, RunReport};

use crate::{
    BackendArgs, CliError, CompareArgs, ConvergenceArgs, ImportanceArgs, MetaTuneArgs, TuneArgs,
};

type CliResult<T = ()> = Result<T, CliError>;

pub fn tune(args: TuneArgs) -> CliResult {
    let started = Instant::now();
    let catalog = FlagCatalog::load(&args.catalog)?;
    let mut config = match &args.config {
        Some(path) => GAConfig::load(path)?,
        None => GAConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.rng_seed = seed;
    }
    let stopping = match &args.stopping {
        Some(path) => StoppingPolicy::load(path)?,
        None => StoppingPolicy::default(),
    };
    let protocol = load_protocol(&args.backend)?;
    config.validate()?;
    let levels = parse_levels(&args.levels)?;

    let eval_log = args
        .eval_log
        .clone()
        .unwrap_or_else(|| args.out.with_extension("evals.jsonl"));
    let backend = build_backend(
        &args.backend,
        catalog.clone(),
        protocol.clone(),
        args.workload_n,
        Some(&eval_log),
    )?;

    let baselines = measure_baselines(backend.as_ref(), &levels, args.workload_n)?;

    let result = ga::run(&config, &stopping, catalog.genome_length(), |g| {
        backend.fitness_of(g)
    })?;

    let best_flags = catalog.enabled_names(&result.best.genome)?;
    let best_arguments = catalog.decode(&result.best.genome)?;
    let evaluation_count = result
        .history
        .last()
        .map(|stat| stat.evaluations)
        .unwrap_or(0);
    let report = RunReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        catalog_digest: catalog.digest(),
        config,
        stopping,
        protocol,
        workload_n: args.workload_n,
        best_genome: result.best.genome.clone(),
        best_flags,
        best_arguments,
        best_fitness: result.best.fitness,
        history: result.history,
        baselines,
        stop_reason: result.stop_reason,
        evaluation_count,
        total_wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    write_json(&args.out, &report)?;

    println!("best fitness: {:.6} s", report.best_fitness);
    println!(
        "best flags ({} of {} enabled): {}",
        report.best_flags.len(),
        catalog.genome_length(),
        report.best_arguments.join(" ")
    );
    for cell in &report.baselines {
        if cell.ok {
            println!(
                "vs {}: {:.6} s ({:.3}x)",
                cell.configuration,
                cell.fitness,
                cell.fitness / report.best_fitness
            );
        }
    }
    println!(
        "stopped by {:?} after {} generations, {} evaluations, {:.1} s",
        report.stop_reason,
        report.history.len(),
        report.evaluation_count,
        report.total_wall_clock_seconds
    );
    println!("report written to {}", args.out.display());
    Ok(())
}

pub fn compare(args: CompareArgs) -> CliResult {
    let catalog = FlagCatalog::load(&args.catalog)?;
    let protocol = load_protocol(&args.backend)?;
    let levels = parse_levels(&args.levels)?;
    let workloads = optional_workloads(&args.workloads);
    let backend = build_backend(&args.backend, catalog, protocol.clone(), None, None)?;

    let mut cells = evaluate_predefined(backend.as_ref(), &levels, &workloads);
    for spec in &args.external {
        let (label, path) = spec.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "--external takes LABEL=FILE, got {spec:?}"
            ))
        })?;
        let arguments = read_argument_file(Path::new(path))?;
        for &workload_n in &workloads {
            cells.push(measure_cell(backend.as_ref(), label, &arguments, workload_n));
        }
    }
    if let Some(report_path) = &args.foga_report {
        let report = RunReport::load(report_path)?;
        for &workload_n in &workloads {
            cells.push(measure_cell(
                backend.as_ref(),
                "FOGA",
                &report.best_arguments,
                workload_n,
            ));
        }
    }

    let report = ComparisonReport::from_cells(protocol, cells);
    write_json(&args.out, &report)?;
    print!("{}", report.render_table());
    println!();
    print!("{}", report.render_columns());
    println!("comparison written to {}", args.out.display());

    if report.rows.iter().any(|r| r.ok) {
        Ok(())
    } else {
        Err(CliError::Baseline(
            "every configuration failed to compile or run".into(),
        ))
    }
}

pub fn importance(args: ImportanceArgs) -> CliResult {
    if args.top_k == 0 {
        return Err(CliError::Usage("--top-k must be at least 1".into()));
    }
    let catalog = FlagCatalog::load(&args.catalog)?;
    let protocol = load_protocol(&args.backend)?;
    let backend = build_backend(&args.backend, catalog.clone(), protocol, None, None)?;
    let baseline_arguments: Vec<String> = args
        .baseline_args
        .split_whitespace()
        .map(str::to_string)
        .collect();

    let mut report = one_hot_importance(&catalog, backend.as_ref(), &baseline_arguments)?;
    report.top_k = args.top_k;
    write_json(&args.out, &report)?;
    print!("{}", render_importance(&report, args.top_k));
    if report.degenerate {
        println!("(no flag improved on the baseline; importances are all zero)");
    }
    println!("importance written to {}", args.out.display());
    Ok(())
}

pub fn meta_tune(args: MetaTuneArgs) -> CliResult {
    let catalog = FlagCatalog::load(&args.catalog)?;
    let protocol = load_protocol(&args.backend)?;
    let space = match &args.space {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let space: ParameterSpace = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("parameter space: {e}")))?;
            space
        }
        None => ParameterSpace::default(),
    };
    let backend = build_backend(
        &args.backend,
        catalog.clone(),
        protocol,
        args.workload_n,
        None,
    )?;

    let outcome = meta::tune(
        &space,
        catalog.genome_length(),
        |g| backend.fitness_of(g),
        args.budget,
        args.seeds_per_trial,
        args.seed,
    )?;

    write_json(&args.out, &outcome.best_config)?;
    let stopping_out = args
        .stopping_out
        .clone()
        .unwrap_or_else(|| args.out.with_extension("stopping.json"));
    write_json(&stopping_out, &outcome.best_stopping)?;
    let trials_log = args
        .trials_log
        .clone()
        .unwrap_or_else(|| args.out.with_extension("trials.jsonl"));
    let mut log = std::fs::File::create(&trials_log)?;
    for trial in &outcome.trials {
        let line = serde_json::to_string(trial)
            .map_err(|e| CliError::Internal(format!("serializing trial: {e}")))?;
        writeln!(log, "{line}")?;
    }

    let best = outcome
        .trials
        .iter()
        .min_by(|a, b| a.objective.total_cmp(&b.objective))
        .expect("budget is positive");
    println!(
        "{} trials, best objective {:.6} s (trial {})",
        outcome.trials.len(),
        best.objective,
        best.index
    );
    println!(
        "winning configuration: population {}, {:?}/{:?}/{:?}, mutation {:.3}, crossover {:.3}",
        outcome.best_config.population_size,
        outcome.best_config.crossover_type,
        outcome.best_config.mutation_type,
        outcome.best_config.selection_type,
        outcome.best_config.mutation_probability,
        outcome.best_config.crossover_probability,
    );
    println!("config written to {}", args.out.display());
    println!("stopping policy written to {}", stopping_out.display());
    println!("trials written to {}", trials_log.display());
    Ok(())
}

pub fn convergence(args: ConvergenceArgs) -> CliResult {
    let report = RunReport::load(&args.report)?;
    if report.history.is_empty() {
        return Err(CliError::Config("report has an empty history".into()));
    }
    print!("{}", emit_convergence(&report.history));
    Ok(())
}

fn load_protocol(backend: &BackendArgs) -> CliResult<MeasurementProtocol> {
    Ok(match &backend.protocol {
        Some(path) => MeasurementProtocol::load(path)?,
        None => MeasurementProtocol::default(),
    })
}

/// Builds the fitness backend the arguments describe: exactly one of
/// --compiler and --mock-model must be present.
fn build_backend(
    args: &BackendArgs,
    catalog: FlagCatalog,
    protocol: MeasurementProtocol,
    workload_n: Option<u64>,
    eval_log: Option<&Path>,
) -> CliResult<Box<dyn FitnessBackend>> {
    match (&args.compiler, &args.mock_model) {
        (Some(compiler), None) => {
            if args.sources.is_empty() {
                return Err(CliError::Usage(
                    "--compiler requires at least one --source".into(),
                ));
            }
            let profile = CompilerProfile {
                compiler_command: compiler.clone(),
                source_files: args.sources.clone(),
                extra_compile_args: args.compile_args.clone(),
                run_command_template: args.run_args.clone(),
            };
            let mut evaluator = Evaluator::new(catalog, profile, protocol, workload_n)?;
            if let Some(path) = eval_log {
                evaluator = evaluator.with_eval_log(path)?;
            }
            Ok(Box::new(evaluator))
        }
        (None, Some(model_path)) => {
            let model = MockModel::load(model_path)?;
            Ok(Box::new(MockBackend::new(model, catalog)?))
        }
        (None, None) => Err(CliError::Usage(
            "one of --compiler or --mock-model is required".into(),
        )),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    }
}

fn parse_levels(labels: &[String]) -> CliResult<Vec<OptLevel>> {
    labels
        .iter()
        .map(|label| {
            OptLevel::from_label(label).ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown optimization level {label:?} (expected O0, O1, O2, O3, or Ofast)"
                ))
            })
        })
        .collect()
}

fn optional_workloads(workloads: &[u64]) -> Vec<Option<u64>> {
    if workloads.is_empty() {
        vec![None]
    } else {
        workloads.iter().copied().map(Some).collect()
    }
}

/// Baselines requested on the command line must all succeed; a broken
/// baseline invalidates every speedup the report would claim.
fn measure_baselines(
    backend: &dyn FitnessBackend,
    levels: &[OptLevel],
    workload_n: Option<u64>,
) -> CliResult<Vec<MeasuredCell>> {
    if levels.is_empty() {
        return Ok(Vec::new());
    }
    let cells = evaluate_predefined(backend, levels, &[workload_n]);
    if let Some(failed) = cells.iter().find(|c| !c.ok) {
        return Err(CliError::Baseline(format!(
            "baseline {} failed: {}",
            failed.configuration,
            failed.detail.as_deref().unwrap_or("measurement failed")
        )));
    }
    Ok(cells)
}

fn measure_cell(
    backend: &dyn FitnessBackend,
    label: &str,
    arguments: &[String],
    workload_n: Option<u64>,
) -> MeasuredCell {
    let record = backend.eval_arguments(arguments, workload_n);
    MeasuredCell {
        configuration: label.to_string(),
        workload_n,
        fitness: record.fitness,
        ok: record.succeeded(),
        detail: record.detail,
    }
}

fn read_argument_file(path: &Path) -> CliResult<Vec<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(text.split_whitespace().map(str::to_string).collect())
}

fn write_json<T: serde::Serialize>(path: &PathBuf, value: &T) -> CliResult {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Internal(format!("serializing document: {e}")))?;
    text.push('\n');
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}
