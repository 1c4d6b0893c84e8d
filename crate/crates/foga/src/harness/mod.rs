//! Fitness measurement: compile a flag assignment, run the produced
//! binary, aggregate wall-clock runtimes into a fitness.
//!
//! Failures never abort a search. A genome whose compile or run fails gets
//! the protocol's penalty fitness and a record explaining why; the penalty
//! exceeds any measurable runtime by construction, so the search simply
//! avoids the region.
//!
//! Concurrency: compiles may overlap (the caller's thread pool is the job
//! limit), but all timed runs are serialized through a per-evaluator token
//! so measurements never compete for the machine.

pub mod mock;

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitStatus, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use tempfile::TempDir;

use crate::error::{Error, Result};
use crate::flagspace::{FlagCatalog, Genome, OptLevel};

/// How to build and run the program under measurement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompilerProfile {
    pub compiler_command: String,
    pub source_files: Vec<PathBuf>,
    /// Arguments placed before the searched flags on every compile.
    #[serde(default)]
    pub extra_compile_args: Vec<String>,
    /// Tokens invoking the produced binary; `{binary}` expands to the
    /// executable path and `{N}` to the workload size. Empty runs the
    /// binary with no arguments.
    #[serde(default)]
    pub run_command_template: Vec<String>,
}

impl CompilerProfile {
    pub fn validate(&self) -> Result<()> {
        if self.compiler_command.is_empty() {
            return Err(Error::InvalidConfig("compiler_command is empty".into()));
        }
        if self.source_files.is_empty() {
            return Err(Error::InvalidConfig("no source files given".into()));
        }
        for source in &self.source_files {
            if !source.exists() {
                return Err(Error::InvalidConfig(format!(
                    "source file {} does not exist",
                    source.display()
                )));
            }
        }
        Ok(())
    }

    /// Whether the run command references the `{N}` workload placeholder.
    pub fn needs_workload(&self) -> bool {
        self.run_command_template.iter().any(|t| t.contains("{N}"))
    }

    fn run_argv(&self, binary: &Path, workload_n: Option<u64>) -> Result<Vec<String>> {
        let binary = binary.display().to_string();
        if self.run_command_template.is_empty() {
            return Ok(vec![binary]);
        }
        self.run_command_template
            .iter()
            .map(|token| {
                let mut token = token.replace("{binary}", &binary);
                if token.contains("{N}") {
                    match workload_n {
                        Some(n) => token = token.replace("{N}", &n.to_string()),
                        None => {
                            return Err(Error::InvalidConfig(
                                "run command references {N} but no workload size was given"
                                    .into(),
                            ))
                        }
                    }
                }
                Ok(token)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Aggregator {
    Median,
    Mean,
    Min,
}

impl Aggregator {
    /// Collapses raw runtimes to one number. `values` must be non-empty.
    pub fn aggregate(self, values: &[f64]) -> f64 {
        assert!(!values.is_empty(), "no runtimes to aggregate");
        match self {
            Aggregator::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregator::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
            Aggregator::Median => {
                let mut sorted = values.to_vec();
                sorted.sort_by(f64::total_cmp);
                let mid = sorted.len() / 2;
                if sorted.len() % 2 == 1 {
                    sorted[mid]
                } else {
                    (sorted[mid - 1] + sorted[mid]) / 2.0
                }
            }
        }
    }
}

/// Repetition counts, timeouts (seconds), and the penalty assigned to
/// failed evaluations. `penalty_fitness` defaults to ten times the run
/// timeout and must stay above it, so a failure is always worse than any
/// successful measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "ProtocolDoc")]
pub struct MeasurementProtocol {
    pub warmup_runs: u32,
    pub measured_runs: u32,
    pub aggregator: Aggregator,
    pub run_timeout: f64,
    pub compile_timeout: f64,
    pub penalty_fitness: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ProtocolDoc {
    warmup_runs: u32,
    measured_runs: u32,
    aggregator: Aggregator,
    run_timeout: f64,
    compile_timeout: f64,
    penalty_fitness: Option<f64>,
}

impl Default for ProtocolDoc {
    fn default() -> Self {
        ProtocolDoc {
            warmup_runs: 1,
            measured_runs: 5,
            aggregator: Aggregator::Median,
            run_timeout: 60.0,
            compile_timeout: 120.0,
            penalty_fitness: None,
        }
    }
}

impl From<ProtocolDoc> for MeasurementProtocol {
    fn from(doc: ProtocolDoc) -> Self {
        MeasurementProtocol {
            warmup_runs: doc.warmup_runs,
            measured_runs: doc.measured_runs,
            aggregator: doc.aggregator,
            run_timeout: doc.run_timeout,
            compile_timeout: doc.compile_timeout,
            penalty_fitness: doc.penalty_fitness.unwrap_or(10.0 * doc.run_timeout),
        }
    }
}

impl Default for MeasurementProtocol {
    fn default() -> Self {
        ProtocolDoc::default().into()
    }
}

impl MeasurementProtocol {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let protocol: MeasurementProtocol =
            serde_json::from_str(text).map_err(|e| Error::DocumentParse(e.to_string()))?;
        protocol.validate()?;
        Ok(protocol)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::DocumentParse(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.measured_runs == 0 {
            return Err(Error::InvalidConfig("measured_runs must be positive".into()));
        }
        for (name, value) in [
            ("run_timeout", self.run_timeout),
            ("compile_timeout", self.compile_timeout),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be a positive number of seconds, got {value}"
                )));
            }
        }
        if !(self.penalty_fitness > self.run_timeout) {
            return Err(Error::InvalidConfig(format!(
                "penalty_fitness {} must exceed run_timeout {}",
                self.penalty_fitness, self.run_timeout
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompileStatus {
    Ok,
    CompileError,
    CompileTimeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Ok,
    RunError,
    RunTimeout,
    /// The binary was never run because compilation already failed.
    Skipped,
}

/// Everything known about one evaluation; appended verbatim to the
/// evaluation log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    /// Absent for raw argument-list measurements (baselines, one-hot rows).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genome: Option<Genome>,
    pub argument_list: Vec<String>,
    pub compile_status: CompileStatus,
    pub run_status: RunStatus,
    pub raw_runtimes: Vec<f64>,
    pub fitness: f64,
    pub started_unix: f64,
    pub finished_unix: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl EvaluationRecord {
    pub fn succeeded(&self) -> bool {
        self.compile_status == CompileStatus::Ok && self.run_status == RunStatus::Ok
    }
}

/// Uniform fitness source for the search, the baselines, and the one-hot
/// scan: either a real compiler behind [`Evaluator`] or the in-process
/// model behind [`mock::MockBackend`].
pub trait FitnessBackend: Sync {
    fn eval_genome(&self, genome: &Genome) -> EvaluationRecord;
    fn eval_arguments(&self, arguments: &[String], workload_n: Option<u64>) -> EvaluationRecord;

    fn fitness_of(&self, genome: &Genome) -> f64 {
        self.eval_genome(genome).fitness
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CompileFailure {
    #[error("compile failed: {diagnostics}")]
    Failed { diagnostics: String },
    #[error("compile timed out after {0} seconds")]
    Timeout(f64),
}

#[derive(Debug, thiserror::Error)]
pub enum RunFailure {
    #[error("run failed ({code:?}): {detail}")]
    Failed { code: Option<i32>, detail: String },
    #[error("run timed out after {0} seconds")]
    Timeout(f64),
}

pub struct CompiledBinary {
    pub path: PathBuf,
}

/// Compiles the profile's sources with `arguments` appended after the
/// profile's fixed compile arguments, writing the executable to
/// `output_path`. Compiler diagnostics are captured into the failure.
pub fn compile(
    profile: &CompilerProfile,
    arguments: &[String],
    output_path: &Path,
    timeout_seconds: f64,
) -> std::result::Result<CompiledBinary, CompileFailure> {
    let mut command = Command::new(&profile.compiler_command);
    command.args(&profile.extra_compile_args);
    command.args(arguments);
    command.args(&profile.source_files);
    command.arg("-o").arg(output_path);
    match run_with_timeout(&mut command, seconds(timeout_seconds), true) {
        Err(e) => Err(CompileFailure::Failed {
            diagnostics: format!("failed to launch {}: {e}", profile.compiler_command),
        }),
        Ok(WaitOutcome::TimedOut) => Err(CompileFailure::Timeout(timeout_seconds)),
        Ok(WaitOutcome::Finished {
            status,
            stdout,
            stderr,
            ..
        }) => {
            if status.success() {
                Ok(CompiledBinary {
                    path: output_path.to_path_buf(),
                })
            } else {
                let mut diagnostics = stderr;
                if diagnostics.trim().is_empty() {
                    diagnostics = stdout;
                }
                Err(CompileFailure::Failed {
                    diagnostics: clip(&diagnostics, 8 * 1024),
                })
            }
        }
    }
}

/// Runs the binary `warmup_runs` untimed times, then `measured_runs` timed
/// times, returning the raw spawn-to-exit wall-clock seconds in run order.
/// Any nonzero exit or timeout fails the whole measurement.
pub fn measure(
    profile: &CompilerProfile,
    binary: &CompiledBinary,
    protocol: &MeasurementProtocol,
    workload_n: Option<u64>,
) -> std::result::Result<Vec<f64>, RunFailure> {
    let argv = profile
        .run_argv(&binary.path, workload_n)
        .map_err(|e| RunFailure::Failed {
            code: None,
            detail: e.to_string(),
        })?;
    let mut runtimes = Vec::with_capacity(protocol.measured_runs as usize);
    let total = protocol.warmup_runs + protocol.measured_runs;
    for round in 0..total {
        let mut command = Command::new(&argv[0]);
        command.args(&argv[1..]);
        match run_with_timeout(&mut command, seconds(protocol.run_timeout), false) {
            Err(e) => {
                return Err(RunFailure::Failed {
                    code: None,
                    detail: format!("failed to launch {}: {e}", argv[0]),
                })
            }
            Ok(WaitOutcome::TimedOut) => return Err(RunFailure::Timeout(protocol.run_timeout)),
            Ok(WaitOutcome::Finished { status, elapsed, .. }) => {
                if !status.success() {
                    return Err(RunFailure::Failed {
                        code: status.code(),
                        detail: format!("nonzero exit on run {round}"),
                    });
                }
                if round >= protocol.warmup_runs {
                    runtimes.push(elapsed.as_secs_f64());
                }
            }
        }
    }
    Ok(runtimes)
}

/// One measured configuration in a baseline or comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredCell {
    pub configuration: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workload_n: Option<u64>,
    pub fitness: f64,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Measures each predefined optimization level at each workload size. A
/// failing cell is recorded with `ok: false` rather than aborting the
/// table.
pub fn evaluate_predefined(
    backend: &dyn FitnessBackend,
    levels: &[OptLevel],
    workloads: &[Option<u64>],
) -> Vec<MeasuredCell> {
    let workloads: &[Option<u64>] = if workloads.is_empty() {
        &[None]
    } else {
        workloads
    };
    let mut cells = Vec::with_capacity(levels.len() * workloads.len());
    for &level in levels {
        for &workload_n in workloads {
            let record =
                backend.eval_arguments(&[level.argument().to_string()], workload_n);
            cells.push(MeasuredCell {
                configuration: level.label().to_string(),
                workload_n,
                fitness: record.fitness,
                ok: record.succeeded(),
                detail: record.detail,
            });
        }
    }
    cells
}

/// Subprocess-backed fitness: decode genome to arguments, compile, run,
/// aggregate. Every distinct genome is compiled and measured exactly once
/// per evaluator; repeat lookups return the cached record without logging
/// it again.
pub struct Evaluator {
    catalog: FlagCatalog,
    profile: CompilerProfile,
    protocol: MeasurementProtocol,
    workload_n: Option<u64>,
    scratch: TempDir,
    cache: Mutex<HashMap<Genome, Arc<OnceLock<EvaluationRecord>>>>,
    timing_token: Mutex<()>,
    log: Option<Mutex<File>>,
    name_counter: AtomicU64,
}

impl Evaluator {
    pub fn new(
        catalog: FlagCatalog,
        profile: CompilerProfile,
        protocol: MeasurementProtocol,
        workload_n: Option<u64>,
    ) -> Result<Self> {
        catalog.validate()?;
        profile.validate()?;
        protocol.validate()?;
        if profile.needs_workload() && workload_n.is_none() {
            return Err(Error::InvalidConfig(
                "run command references {N} but no workload size was given".into(),
            ));
        }
        Ok(Evaluator {
            catalog,
            profile,
            protocol,
            workload_n,
            scratch: scratch_dir()?,
            cache: Mutex::new(HashMap::new()),
            timing_token: Mutex::new(()),
            log: None,
            name_counter: AtomicU64::new(0),
        })
    }

    /// Appends every fresh evaluation record to `path` as one JSON object
    /// per line.
    pub fn with_eval_log(mut self, path: &Path) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        self.log = Some(Mutex::new(file));
        Ok(self)
    }

    pub fn catalog(&self) -> &FlagCatalog {
        &self.catalog
    }

    pub fn protocol(&self) -> &MeasurementProtocol {
        &self.protocol
    }

    pub fn workload_n(&self) -> Option<u64> {
        self.workload_n
    }

    /// Directory holding compiled binaries for this evaluator's lifetime.
    pub fn scratch_path(&self) -> &Path {
        self.scratch.path()
    }

    fn evaluate_arguments_uncached(
        &self,
        genome: Option<&Genome>,
        arguments: &[String],
        workload_n: Option<u64>,
    ) -> EvaluationRecord {
        let started_unix = unix_now();
        let output = self.scratch.path().join(format!(
            "bin-{:06}",
            self.name_counter.fetch_add(1, Ordering::Relaxed)
        ));
        let penalty = self.protocol.penalty_fitness;
        let mut record = EvaluationRecord {
            genome: genome.cloned(),
            argument_list: arguments.to_vec(),
            compile_status: CompileStatus::Ok,
            run_status: RunStatus::Skipped,
            raw_runtimes: Vec::new(),
            fitness: penalty,
            started_unix,
            finished_unix: started_unix,
            detail: None,
        };
        match compile(
            &self.profile,
            arguments,
            &output,
            self.protocol.compile_timeout,
        ) {
            Err(CompileFailure::Failed { diagnostics }) => {
                record.compile_status = CompileStatus::CompileError;
                record.detail = Some(diagnostics);
            }
            Err(CompileFailure::Timeout(_)) => {
                record.compile_status = CompileStatus::CompileTimeout;
            }
            Ok(binary) => {
                let outcome = {
                    // Timed runs never overlap, even when compiles do.
                    let _token = self.timing_token.lock().unwrap();
                    measure(&self.profile, &binary, &self.protocol, workload_n)
                };
                let _ = std::fs::remove_file(&binary.path);
                match outcome {
                    Ok(runtimes) => {
                        record.fitness = self.protocol.aggregator.aggregate(&runtimes);
                        record.raw_runtimes = runtimes;
                        record.run_status = RunStatus::Ok;
                    }
                    Err(RunFailure::Failed { code, detail }) => {
                        record.run_status = RunStatus::RunError;
                        record.detail = Some(format!("{detail} (exit code {code:?})"));
                    }
                    Err(RunFailure::Timeout(_)) => {
                        record.run_status = RunStatus::RunTimeout;
                    }
                }
            }
        }
        record.finished_unix = unix_now();
        self.append_log(&record);
        record
    }

    fn append_log(&self, record: &EvaluationRecord) {
        if let Some(log) = &self.log {
            let mut line = serde_json::to_string(record).expect("record serializes");
            line.push('\n');
            let mut file = log.lock().unwrap();
            // A failed audit write must not poison the search.
            let _ = file.write_all(line.as_bytes());
        }
    }
}

impl FitnessBackend for Evaluator {
    /// Total over genomes of the catalog's length: failures come back as
    /// penalty records, never as errors.
    fn eval_genome(&self, genome: &Genome) -> EvaluationRecord {
        let cell = {
            let mut cache = self.cache.lock().unwrap();
            cache
                .entry(genome.clone())
                .or_insert_with(|| Arc::new(OnceLock::new()))
                .clone()
        };
        cell.get_or_init(|| match self.catalog.decode(genome) {
            Ok(arguments) => {
                self.evaluate_arguments_uncached(Some(genome), &arguments, self.workload_n)
            }
            Err(e) => {
                let now = unix_now();
                EvaluationRecord {
                    genome: Some(genome.clone()),
                    argument_list: Vec::new(),
                    compile_status: CompileStatus::CompileError,
                    run_status: RunStatus::Skipped,
                    raw_runtimes: Vec::new(),
                    fitness: self.protocol.penalty_fitness,
                    started_unix: now,
                    finished_unix: now,
                    detail: Some(e.to_string()),
                }
            }
        })
        .clone()
    }

    fn eval_arguments(&self, arguments: &[String], workload_n: Option<u64>) -> EvaluationRecord {
        self.evaluate_arguments_uncached(None, arguments, workload_n)
    }
}

/// Scratch directory for compiled binaries: `$FOGA_SCRATCH` if set
/// (created if missing), otherwise the system temp dir. Always a fresh
/// subdirectory, removed when the evaluator is dropped.
fn scratch_dir() -> Result<TempDir> {
    let mut builder = tempfile::Builder::new();
    builder.prefix("foga-");
    match std::env::var_os("FOGA_SCRATCH") {
        Some(root) => {
            std::fs::create_dir_all(&root)?;
            Ok(builder.tempdir_in(root)?)
        }
        None => Ok(builder.tempdir()?),
    }
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .unwrap_or(Duration::ZERO)
        .as_secs_f64()
}

fn seconds(s: f64) -> Duration {
    Duration::from_secs_f64(s.max(0.0))
}

/// Clips diagnostics to `limit` bytes on a character boundary.
fn clip(text: &str, limit: usize) -> String {
    if text.len() <= limit {
        return text.to_string();
    }
    let mut end = limit;
    while !text.is_char_boundary(end) {
        end -= 1;
    }
    format!("{}... ({} bytes clipped)", &text[..end], text.len() - end)
}

enum WaitOutcome {
    Finished {
        status: ExitStatus,
        elapsed: Duration,
        stdout: String,
        stderr: String,
    },
    TimedOut,
}

const WAIT_POLL: Duration = Duration::from_micros(500);

/// Spawns the command and polls for exit. `elapsed` is spawn-to-exit wall
/// clock as observed by the poll, so it overshoots by at most one poll
/// interval. Output pipes are drained on threads so a chatty child cannot
/// deadlock against a full pipe while we poll.
fn run_with_timeout(
    command: &mut Command,
    timeout: Duration,
    capture: bool,
) -> std::io::Result<WaitOutcome> {
    command.stdin(Stdio::null());
    if capture {
        command.stdout(Stdio::piped());
        command.stderr(Stdio::piped());
    } else {
        command.stdout(Stdio::null());
        command.stderr(Stdio::null());
    }
    let start = Instant::now();
    let mut child = command.spawn()?;
    let stdout_reader = child.stdout.take().map(drain_on_thread);
    let stderr_reader = child.stderr.take().map(drain_on_thread);
    let collect = |reader: Option<std::thread::JoinHandle<String>>| {
        reader
            .and_then(|handle| handle.join().ok())
            .unwrap_or_default()
    };
    loop {
        if let Some(status) = child.try_wait()? {
            let elapsed = start.elapsed();
            return Ok(WaitOutcome::Finished {
                status,
                elapsed,
                stdout: collect(stdout_reader),
                stderr: collect(stderr_reader),
            });
        }
        if start.elapsed() >= timeout {
            let _ = child.kill();
            let _ = child.wait();
            collect(stdout_reader);
            collect(stderr_reader);
            return Ok(WaitOutcome::TimedOut);
        }
        std::thread::sleep(WAIT_POLL);
    }
}

fn drain_on_thread<R: Read + Send + 'static>(mut reader: R) -> std::thread::JoinHandle<String> {
    std::thread::spawn(move || {
        let mut buffer = Vec::new();
        let _ = reader.read_to_end(&mut buffer);
        String::from_utf8_lossy(&buffer).into_owned()
    })
}
