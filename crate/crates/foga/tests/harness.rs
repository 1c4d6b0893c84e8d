//! Subprocess fitness path exercised against the generated mock compiler
//! pair: real compiles, real process timing, real failure modes.

use std::path::Path;
use std::time::Instant;

use foga::ga::{self, GAConfig, StoppingPolicy};
use foga::harness::mock::{MockCompilerFixture, MockModel};
use foga::harness::{
    evaluate_predefined, CompileStatus, Evaluator, FitnessBackend, MeasurementProtocol, RunStatus,
};
use foga::{FlagCatalog, FlagSpec, Genome, OptLevel};

/// Process spawn and sleep-precision slack for sleep-backed runtimes.
const SLACK: f64 = 0.05;

fn spec(name: &str) -> FlagSpec {
    FlagSpec {
        name: name.to_string(),
        on_form: format!("-f{name}"),
        off_form: Some(format!("-fno-{name}")),
    }
}

fn three_flag_catalog() -> FlagCatalog {
    FlagCatalog {
        flags: vec![spec("alpha"), spec("beta"), spec("gamma")],
        base_arguments: vec![],
    }
}

fn three_flag_model(base_runtime: f64) -> MockModel {
    MockModel {
        base_runtime,
        weights: vec![0.5, 0.8, 1.25],
        interactions: vec![],
        noise_fraction: 0.0,
        noise_seed: 0,
    }
}

fn fast_protocol() -> MeasurementProtocol {
    MeasurementProtocol::from_json_str(
        r#"{"warmup_runs": 0, "measured_runs": 1, "run_timeout": 20.0, "compile_timeout": 30.0}"#,
    )
    .unwrap()
}

fn write_pair(model: &MockModel, catalog: &FlagCatalog, dir: &Path) -> MockCompilerFixture {
    model.write_executable_pair(catalog, dir).unwrap()
}

#[test]
fn pair_measures_the_modelled_runtime() {
    let dir = tempfile::tempdir().unwrap();
    let catalog = three_flag_catalog();
    let model = three_flag_model(0.2);
    let fixture = write_pair(&model, &catalog, dir.path());
    let evaluator =
        Evaluator::new(catalog, fixture.profile(), fast_protocol(), None).unwrap();

    let genome: Genome = "101".parse().unwrap();
    let expected = model.fitness(&genome);
    assert!((expected - 0.125).abs() < 1e-12);

    let record = evaluator.eval_genome(&genome);
    assert!(record.succeeded(), "detail: {:?}", record.detail);
    assert!(
        (record.fitness - expected).abs() <= SLACK,
        "measured {} vs modelled {expected}",
        record.fitness
    );
    assert_eq!(record.raw_runtimes.len(), 1);
    assert_eq!(record.genome.as_ref(), Some(&genome));
    // Decoded argument list carries one form per flag.
    assert_eq!(
        record.argument_list,
        vec!["-falpha", "-fno-beta", "-fgamma"]
    );
}

#[test]
fn predefined_levels_score_the_base_runtime() {
    let dir = tempfile::tempdir().unwrap();
    let catalog = three_flag_catalog();
    let model = three_flag_model(0.15);
    let fixture = write_pair(&model, &catalog, dir.path());
    let evaluator =
        Evaluator::new(catalog, fixture.profile(), fast_protocol(), None).unwrap();

    let cells = evaluate_predefined(&evaluator, &[OptLevel::O0, OptLevel::O2], &[]);
    assert_eq!(cells.len(), 2);
    for cell in &cells {
        assert!(cell.ok, "{}: {:?}", cell.configuration, cell.detail);
        assert!(
            (cell.fitness - 0.15).abs() <= SLACK,
            "{}: {}",
            cell.configuration,
            cell.fitness
        );
    }
    assert_eq!(cells[0].configuration, "O0");
    assert_eq!(cells[1].configuration, "O2");
}

#[test]
fn cache_hits_return_the_original_record_verbatim() {
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("evals.jsonl");
    let catalog = three_flag_catalog();
    let model = three_flag_model(0.1);
    let fixture = write_pair(&model, &catalog, dir.path());
    let evaluator = Evaluator::new(catalog, fixture.profile(), fast_protocol(), None)
        .unwrap()
        .with_eval_log(&log_path)
        .unwrap();

    let a: Genome = "110".parse().unwrap();
    let b: Genome = "001".parse().unwrap();
    let first = evaluator.eval_genome(&a);
    let again = evaluator.eval_genome(&a);
    let other = evaluator.eval_genome(&b);

    // Identical timestamps prove the second lookup never re-ran anything.
    assert_eq!(first, again);
    assert!(other.started_unix >= first.finished_unix - 1e-6);

    let log = std::fs::read_to_string(&log_path).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines.len(), 2, "cache hits must not be logged again");
    for line in lines {
        let record: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(record.get("fitness").is_some());
    }
}

#[test]
fn unknown_flag_fails_the_compile_and_earns_the_penalty() {
    let dir = tempfile::tempdir().unwrap();
    let known = three_flag_catalog();
    let model = three_flag_model(0.1);
    let fixture = write_pair(&model, &known, dir.path());

    // The evaluator searches a wider catalog than the compiler was built
    // for, so the extra flag is rejected like any unsupported argument.
    // No off-form: disabling it emits nothing, only enabling can fail.
    let mut wider = known.clone();
    wider.flags.push(FlagSpec {
        name: "delta".into(),
        on_form: "-fdelta".into(),
        off_form: None,
    });
    let protocol = fast_protocol();
    let penalty = protocol.penalty_fitness;
    let evaluator = Evaluator::new(wider, fixture.profile(), protocol, None).unwrap();

    let record = evaluator.eval_genome(&"0001".parse().unwrap());
    assert_eq!(record.compile_status, CompileStatus::CompileError);
    assert!(!record.succeeded());
    assert_eq!(record.fitness, penalty);
    let detail = record.detail.as_deref().unwrap_or("");
    assert!(detail.contains("delta"), "diagnostics lost: {detail}");

    // The same catalog with the flag disabled still compiles: off-forms
    // of known flags are harmless.
    let ok = evaluator.eval_genome(&"1000".parse().unwrap());
    assert!(ok.succeeded(), "detail: {:?}", ok.detail);
}

#[test]
fn slow_runs_time_out_with_the_penalty() {
    let dir = tempfile::tempdir().unwrap();
    let catalog = three_flag_catalog();
    let model = three_flag_model(3.0);
    let fixture = write_pair(&model, &catalog, dir.path());
    let protocol = MeasurementProtocol::from_json_str(
        r#"{"warmup_runs": 0, "measured_runs": 1, "run_timeout": 0.3, "compile_timeout": 30.0}"#,
    )
    .unwrap();
    let penalty = protocol.penalty_fitness;
    let evaluator = Evaluator::new(catalog, fixture.profile(), protocol, None).unwrap();

    let started = Instant::now();
    let record = evaluator.eval_genome(&"000".parse().unwrap());
    let took = started.elapsed().as_secs_f64();
    assert_eq!(record.run_status, RunStatus::RunTimeout);
    assert_eq!(record.fitness, penalty);
    assert!(took < 2.0, "timeout was not enforced, took {took}s");
}

#[test]
fn search_over_the_pair_recovers_the_argmin() {
    let dir = tempfile::tempdir().unwrap();
    let catalog = three_flag_catalog();
    let model = three_flag_model(0.2);
    let fixture = write_pair(&model, &catalog, dir.path());
    let evaluator =
        Evaluator::new(catalog, fixture.profile(), fast_protocol(), None).unwrap();

    let config = GAConfig {
        population_size: 10,
        max_generations: 8,
        rng_seed: 5,
        ..GAConfig::default()
    };
    let stopping = StoppingPolicy {
        max_iterations_without_improvement: 5,
    };
    let result = ga::run(&config, &stopping, 3, |g| evaluator.fitness_of(g)).unwrap();

    // Weights 0.5 and 0.8 help, 1.25 hurts: the argmin is 110.
    assert_eq!(result.best.genome, "110".parse().unwrap());
    let analytic = model.fitness(&result.best.genome);
    assert!(
        (result.best.fitness - analytic).abs() <= SLACK,
        "measured {} vs modelled {analytic}",
        result.best.fitness
    );
}

#[test]
fn real_compiler_smoke_when_present() {
    let Some(cc) = ["gcc", "cc", "clang"]
        .iter()
        .find(|cc| which(cc).is_some())
    else {
        eprintln!("skipping: no C compiler on PATH");
        return;
    };
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let source = manifest.join("../../benchmarks/matmul.c");
    assert!(source.exists(), "bundled benchmark missing: {source:?}");

    let profile = foga::harness::CompilerProfile {
        compiler_command: (*cc).to_string(),
        source_files: vec![source],
        extra_compile_args: vec![],
        run_command_template: vec!["{binary}".into(), "{N}".into()],
    };
    let catalog = FlagCatalog {
        flags: vec![spec("omit-frame-pointer")],
        base_arguments: vec![],
    };
    let evaluator = Evaluator::new(catalog, profile, fast_protocol(), Some(64)).unwrap();
    let record = evaluator.eval_arguments(&["-O1".to_string()], Some(64));
    assert!(record.succeeded(), "detail: {:?}", record.detail);
    assert!(record.fitness > 0.0 && record.fitness < 5.0);
}

fn which(name: &str) -> Option<std::path::PathBuf> {
    std::env::var_os("PATH").and_then(|paths| {
        std::env::split_paths(&paths)
            .map(|dir| dir.join(name))
            .find(|p| p.is_file())
    })
}
