//! Synthetic runtime model standing in for a real compiler.
//!
//! The model prices a genome as `base_runtime` scaled by one factor per
//! enabled flag plus one factor per fully enabled interaction group, with
//! an optional deterministic noise band. It is available in-process as a
//! [`FitnessBackend`] and as a generated pair of executables (a mock
//! compiler plus the runner it emits) for exercising the real subprocess
//! path without a compiler installed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    unix_now, CompileStatus, CompilerProfile, EvaluationRecord, FitnessBackend, RunStatus,
};
use crate::error::{Error, Result};
use crate::flagspace::{FlagCatalog, Genome};

/// Multiplicative effect applied when every flag in `flags` is enabled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interaction {
    /// Catalog indices of the participating flags.
    pub flags: Vec<usize>,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockModel {
    /// Runtime with every flag disabled; also what the compiler's own
    /// predefined levels score, since they enable no cataloged flag.
    pub base_runtime: f64,
    /// Per-flag runtime factor, applied when the flag is enabled.
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interactions: Vec<Interaction>,
    /// Half-width of the relative noise band; 0 disables noise. Noise is a
    /// pure function of (noise_seed, genome), so repeated evaluations of
    /// one genome agree exactly.
    #[serde(default)]
    pub noise_fraction: f64,
    #[serde(default)]
    pub noise_seed: u64,
}

impl MockModel {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let model: MockModel =
            serde_json::from_str(text).map_err(|e| Error::InvalidModel(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidModel(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_runtime.is_finite() && self.base_runtime > 0.0) {
            return Err(Error::InvalidModel(format!(
                "base_runtime must be positive, got {}",
                self.base_runtime
            )));
        }
        for (i, &w) in self.weights.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidModel(format!(
                    "weight {i} must be positive, got {w}"
                )));
            }
        }
        for (i, interaction) in self.interactions.iter().enumerate() {
            if !(interaction.factor.is_finite() && interaction.factor > 0.0) {
                return Err(Error::InvalidModel(format!(
                    "interaction {i} factor must be positive, got {}",
                    interaction.factor
                )));
            }
            if interaction.flags.is_empty() {
                return Err(Error::InvalidModel(format!("interaction {i} names no flags")));
            }
            for &flag in &interaction.flags {
                if flag >= self.weights.len() {
                    return Err(Error::InvalidModel(format!(
                        "interaction {i} references flag {flag}, but the model has {} weights",
                        self.weights.len()
                    )));
                }
            }
        }
        if !(0.0..1.0).contains(&self.noise_fraction) {
            return Err(Error::InvalidModel(format!(
                "noise_fraction must lie in [0, 1), got {}",
                self.noise_fraction
            )));
        }
        Ok(())
    }

    pub fn genome_length(&self) -> usize {
        self.weights.len()
    }

    /// Modelled runtime of a genome. Panics if the genome length does not
    /// match the weight count; validate against the catalog first.
    pub fn fitness(&self, genome: &Genome) -> f64 {
        assert_eq!(
            genome.len(),
            self.weights.len(),
            "genome length does not match model weight count"
        );
        let mut runtime = self.base_runtime;
        for (i, on) in genome.iter().enumerate() {
            if on {
                runtime *= self.weights[i];
            }
        }
        for interaction in &self.interactions {
            if interaction.flags.iter().all(|&i| genome.bit(i)) {
                runtime *= interaction.factor;
            }
        }
        if self.noise_fraction > 0.0 {
            let unit = deterministic_unit(self.noise_seed, genome);
            runtime *= 1.0 + self.noise_fraction * (2.0 * unit - 1.0);
        }
        runtime
    }

    /// Runtime for a raw argument list: flag i counts as enabled iff its
    /// on form appears verbatim among the arguments. Predefined level
    /// arguments enable nothing, so they score `base_runtime`.
    pub fn fitness_of_arguments(&self, catalog: &FlagCatalog, arguments: &[String]) -> Result<f64> {
        if catalog.genome_length() != self.weights.len() {
            return Err(Error::InvalidModel(format!(
                "model has {} weights but the catalog has {} flags",
                self.weights.len(),
                catalog.genome_length()
            )));
        }
        let bits = catalog
            .flags
            .iter()
            .map(|f| arguments.iter().any(|a| *a == f.on_form))
            .collect();
        Ok(self.fitness(&Genome::new(bits)))
    }

    /// Writes the mock compiler executable and the dummy source file it
    /// expects, returning paths bundled as a ready-to-use profile. The
    /// compiler prices its argument list with this model and emits a
    /// runner script that sleeps for the modelled runtime; unknown
    /// dash-arguments fail the compile like a real compiler. Noise is not
    /// representable in the generated script, so noisy models are
    /// rejected.
    pub fn write_executable_pair(
        &self,
        catalog: &FlagCatalog,
        directory: &Path,
    ) -> Result<MockCompilerFixture> {
        self.validate()?;
        if catalog.genome_length() != self.weights.len() {
            return Err(Error::InvalidModel(format!(
                "model has {} weights but the catalog has {} flags",
                self.weights.len(),
                catalog.genome_length()
            )));
        }
        if self.noise_fraction != 0.0 {
            return Err(Error::InvalidModel(
                "the executable pair supports only noise-free models".into(),
            ));
        }
        std::fs::create_dir_all(directory)?;
        let compiler = directory.join("mockcc");
        let source = directory.join("program.mock");
        std::fs::write(&source, "mock program source\n")?;
        std::fs::write(&compiler, self.compiler_script(catalog))?;
        make_executable(&compiler)?;
        Ok(MockCompilerFixture { compiler, source })
    }

    fn compiler_script(&self, catalog: &FlagCatalog) -> String {
        let mut known = Vec::new();
        for flag in &catalog.flags {
            known.push(flag.on_form.clone());
            if let Some(off) = &flag.off_form {
                known.push(off.clone());
            }
        }
        for level in ["-O0", "-O1", "-O2", "-O3", "-Ofast"] {
            known.push(level.to_string());
        }
        for arg in &catalog.base_arguments {
            if arg.starts_with('-') {
                known.push(arg.clone());
            }
        }

        let mut awk = String::new();
        awk.push_str("BEGIN {\n");
        awk.push_str("  n = split(tokens, t, \" \")\n");
        awk.push_str("  for (i = 1; i <= n; i++) seen[t[i]] = 1\n");
        awk.push_str(&format!("  f = {:?}\n", self.base_runtime));
        for (i, flag) in catalog.flags.iter().enumerate() {
            awk.push_str(&format!(
                "  if (seen[\"{}\"]) {{ on{i} = 1; f *= {:?} }}\n",
                awk_escape(&flag.on_form),
                self.weights[i]
            ));
        }
        for interaction in &self.interactions {
            let condition = interaction
                .flags
                .iter()
                .map(|i| format!("on{i}"))
                .collect::<Vec<_>>()
                .join(" && ");
            awk.push_str(&format!("  if ({condition}) f *= {:?}\n", interaction.factor));
        }
        awk.push_str("  printf \"%.9f\", f\n");
        awk.push_str("}\n");

        format!(
            r#"#!/bin/sh
# Mock compiler: prices its argument list with a fixed runtime model and
# writes a runner script that sleeps for that long.
known='{known}'
out=a.out
expect_out=0
unknown=''
args=''
for arg in "$@"; do
  if [ "$expect_out" = 1 ]; then out=$arg; expect_out=0; continue; fi
  case $arg in
    -o) expect_out=1 ;;
    -*) case " $known " in
          *" $arg "*) args="$args $arg" ;;
          *) unknown=$arg ;;
        esac ;;
    *) : ;;
  esac
done
if [ -n "$unknown" ]; then
  echo "mockcc: error: unrecognized command-line option '$unknown'" >&2
  exit 1
fi
runtime=$(awk -v tokens="$args" '{awk}')
printf '#!/bin/sh\nsleep %s\n' "$runtime" > "$out"
chmod +x "$out"
"#,
            known = known.join(" "),
            awk = awk
        )
    }
}

/// Paths written by [`MockModel::write_executable_pair`].
pub struct MockCompilerFixture {
    pub compiler: PathBuf,
    pub source: PathBuf,
}

impl MockCompilerFixture {
    /// Profile invoking the generated compiler like any real one.
    pub fn profile(&self) -> CompilerProfile {
        CompilerProfile {
            compiler_command: self.compiler.display().to_string(),
            source_files: vec![self.source.clone()],
            extra_compile_args: Vec::new(),
            run_command_template: Vec::new(),
        }
    }
}

/// In-process fitness backend over a [`MockModel`]: no subprocesses, no
/// caching needed, microsecond evaluations.
pub struct MockBackend {
    model: MockModel,
    catalog: FlagCatalog,
}

impl MockBackend {
    pub fn new(model: MockModel, catalog: FlagCatalog) -> Result<Self> {
        model.validate()?;
        catalog.validate()?;
        if catalog.genome_length() != model.genome_length() {
            return Err(Error::InvalidModel(format!(
                "model has {} weights but the catalog has {} flags",
                model.genome_length(),
                catalog.genome_length()
            )));
        }
        Ok(MockBackend { model, catalog })
    }

    pub fn model(&self) -> &MockModel {
        &self.model
    }

    pub fn catalog(&self) -> &FlagCatalog {
        &self.catalog
    }
}

impl FitnessBackend for MockBackend {
    fn eval_genome(&self, genome: &Genome) -> EvaluationRecord {
        let now = unix_now();
        let fitness = self.model.fitness(genome);
        EvaluationRecord {
            genome: Some(genome.clone()),
            argument_list: self.catalog.decode(genome).expect("length was validated"),
            compile_status: CompileStatus::Ok,
            run_status: RunStatus::Ok,
            raw_runtimes: vec![fitness],
            fitness,
            started_unix: now,
            finished_unix: now,
            detail: None,
        }
    }

    fn eval_arguments(&self, arguments: &[String], _workload_n: Option<u64>) -> EvaluationRecord {
        let now = unix_now();
        let fitness = self
            .model
            .fitness_of_arguments(&self.catalog, arguments)
            .expect("length was validated");
        EvaluationRecord {
            genome: None,
            argument_list: arguments.to_vec(),
            compile_status: CompileStatus::Ok,
            run_status: RunStatus::Ok,
            raw_runtimes: vec![fitness],
            fitness,
            started_unix: now,
            finished_unix: now,
            detail: None,
        }
    }
}

/// Pure hash of (seed, genome) onto the unit interval.
fn deterministic_unit(seed: u64, genome: &Genome) -> f64 {
    let mut state = splitmix64(seed);
    for (i, bit) in genome.iter().enumerate() {
        state = splitmix64(state ^ ((i as u64) << 1 | u64::from(bit)));
    }
    (state >> 11) as f64 / (1u64 << 53) as f64
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn awk_escape(token: &str) -> String {
    token.replace('\\', "\\\\").replace('"', "\\\"")
}

#[cfg(unix)]
fn make_executable(path: &Path) -> Result<()> {
    use std::os::unix::fs::PermissionsExt;
    let mut permissions = std::fs::metadata(path)?.permissions();
    permissions.set_mode(0o755);
    std::fs::set_permissions(path, permissions)?;
    Ok(())
}

#[cfg(not(unix))]
fn make_executable(_path: &Path) -> Result<()> {
    Err(Error::InvalidModel(
        "the executable pair is only supported on unix".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flagspace::FlagSpec;

    fn catalog3() -> FlagCatalog {
        FlagCatalog {
            flags: vec![
                FlagSpec {
                    name: "a".into(),
                    on_form: "-fa".into(),
                    off_form: Some("-fno-a".into()),
                },
                FlagSpec {
                    name: "b".into(),
                    on_form: "-fb".into(),
                    off_form: None,
                },
                FlagSpec {
                    name: "c".into(),
                    on_form: "-fc".into(),
                    off_form: Some("-fno-c".into()),
                },
            ],
            base_arguments: vec![],
        }
    }

    fn model3() -> MockModel {
        MockModel {
            base_runtime: 2.0,
            weights: vec![0.5, 1.25, 0.8],
            interactions: vec![Interaction {
                flags: vec![0, 2],
                factor: 0.9,
            }],
            noise_fraction: 0.0,
            noise_seed: 0,
        }
    }

    #[test]
    fn fitness_multiplies_weights_of_enabled_flags() {
        let model = model3();
        assert_eq!(model.fitness(&"000".parse().unwrap()), 2.0);
        assert_eq!(model.fitness(&"100".parse().unwrap()), 1.0);
        assert_eq!(model.fitness(&"010".parse().unwrap()), 2.5);
        // Both interaction members on: 2.0 * 0.5 * 0.8 * 0.9
        let expected = 2.0 * 0.5 * 0.8 * 0.9;
        assert!((model.fitness(&"101".parse().unwrap()) - expected).abs() < 1e-12);
    }

    #[test]
    fn noise_is_a_pure_function_of_seed_and_genome() {
        let mut model = model3();
        model.noise_fraction = 0.05;
        model.noise_seed = 42;
        let genome: Genome = "110".parse().unwrap();
        let first = model.fitness(&genome);
        for _ in 0..10 {
            assert_eq!(model.fitness(&genome), first);
        }
        let clean = {
            let mut m = model.clone();
            m.noise_fraction = 0.0;
            m.fitness(&genome)
        };
        assert!((first / clean - 1.0).abs() < 0.05);
        // A different seed perturbs differently.
        let mut other = model.clone();
        other.noise_seed = 43;
        assert_ne!(other.fitness(&genome), first);
    }

    #[test]
    fn arguments_enable_flags_by_on_form_only() {
        let model = model3();
        let catalog = catalog3();
        let f = model
            .fitness_of_arguments(&catalog, &["-fa".into(), "-fno-c".into()])
            .unwrap();
        assert_eq!(f, 1.0); // only flag a on
        let level = model
            .fitness_of_arguments(&catalog, &["-O3".into()])
            .unwrap();
        assert_eq!(level, 2.0); // predefined levels score base_runtime
    }

    #[test]
    fn backend_requires_matching_lengths() {
        let model = MockModel {
            weights: vec![0.5],
            ..model3()
        };
        assert!(MockBackend::new(model, catalog3()).is_err());
    }

    #[test]
    fn validation_rejects_bad_models() {
        assert!(MockModel {
            base_runtime: 0.0,
            ..model3()
        }
        .validate()
        .is_err());
        assert!(MockModel {
            weights: vec![0.5, -1.0, 0.8],
            ..model3()
        }
        .validate()
        .is_err());
        assert!(MockModel {
            interactions: vec![Interaction {
                flags: vec![7],
                factor: 0.9
            }],
            ..model3()
        }
        .validate()
        .is_err());
        assert!(MockModel {
            noise_fraction: 1.0,
            ..model3()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn document_round_trip() {
        let model = model3();
        let json = serde_json::to_string(&model).unwrap();
        let back = MockModel::from_json_str(&json).unwrap();
        assert_eq!(back, model);
        assert!(MockModel::from_json_str(r#"{"base_runtime":1.0,"weights":[],"bogus":1}"#)
            .is_err());
    }
}
