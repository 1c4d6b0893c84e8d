//! Property tests for the flag-space encoding plus checks pinning the
//! bundled catalog fixture.

use std::collections::HashSet;
use std::path::Path;

use foga::{FlagCatalog, FlagSpec, Genome};
use proptest::prelude::*;

fn arbitrary_catalog() -> impl Strategy<Value = FlagCatalog> {
    // Unique lowercase names; roughly half the flags lack an off-form.
    proptest::collection::hash_set("[a-z]{1,8}", 1..12).prop_flat_map(|names| {
        let names: Vec<String> = names.into_iter().collect();
        let n = names.len();
        proptest::collection::vec(any::<bool>(), n).prop_map(move |has_off| {
            FlagCatalog {
                flags: names
                    .iter()
                    .zip(&has_off)
                    .map(|(name, &off)| FlagSpec {
                        name: name.clone(),
                        on_form: format!("-f{name}"),
                        off_form: off.then(|| format!("-fno-{name}")),
                    })
                    .collect(),
                base_arguments: vec![],
            }
        })
    })
}

proptest! {
    #[test]
    fn enabled_names_encode_back_to_the_same_genome(
        catalog in arbitrary_catalog(),
        seed in any::<u64>(),
    ) {
        let mut bits = Vec::new();
        let mut state = seed;
        for _ in 0..catalog.genome_length() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            bits.push(state >> 63 == 1);
        }
        let genome = Genome::new(bits);
        let names = catalog.enabled_names(&genome).unwrap();
        let back = catalog.encode(&names).unwrap();
        prop_assert_eq!(back, genome);
    }

    #[test]
    fn decode_emits_one_argument_per_flag_with_an_off_form(
        catalog in arbitrary_catalog(),
        seed in any::<u64>(),
    ) {
        let mut bits = Vec::new();
        let mut state = seed;
        for _ in 0..catalog.genome_length() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            bits.push(state >> 63 == 1);
        }
        let genome = Genome::new(bits);
        let arguments = catalog.decode(&genome).unwrap();
        let expected = genome
            .iter()
            .zip(&catalog.flags)
            .filter(|(on, flag)| *on || flag.off_form.is_some())
            .count();
        prop_assert_eq!(arguments.len(), expected);
        // Every enabled flag's on-form appears verbatim.
        for (on, flag) in genome.iter().zip(&catalog.flags) {
            if on {
                prop_assert!(arguments.contains(&flag.on_form));
            }
        }
    }

    #[test]
    fn genome_text_round_trips(bits in proptest::collection::vec(any::<bool>(), 0..64)) {
        let genome = Genome::new(bits);
        let text = genome.to_string();
        let back: Genome = text.parse().unwrap();
        prop_assert_eq!(back, genome);
    }

    #[test]
    fn digest_distinguishes_any_renamed_flag(
        catalog in arbitrary_catalog(),
        which in any::<prop::sample::Index>(),
    ) {
        let mut renamed = catalog.clone();
        let i = which.index(renamed.flags.len());
        renamed.flags[i].name.push('x');
        prop_assert_ne!(catalog.digest(), renamed.digest());
    }
}

#[test]
fn bundled_catalog_is_valid_and_complete() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../catalogs/gcc-9.3-fflags.json");
    let catalog = FlagCatalog::load(&path).unwrap();
    assert_eq!(catalog.genome_length(), 114);
    assert!(catalog.base_arguments.is_empty());

    let names: HashSet<&str> = catalog.flags.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(names.len(), 114, "names must be unique");
    for flag in &catalog.flags {
        assert_eq!(flag.on_form, format!("-f{}", flag.name));
        assert_eq!(flag.off_form.as_deref(), Some(&*format!("-fno-{}", flag.name)));
    }
    // Spot-check flags that anchor the optimization groups.
    for name in ["dce", "gcse", "tree-loop-vectorize", "unroll-loops", "fast-math"] {
        assert!(names.contains(name), "missing {name}");
    }

    // The digest is a stable function of the document content.
    let again = FlagCatalog::load(&path).unwrap();
    assert_eq!(catalog.digest(), again.digest());
    assert_eq!(catalog.digest().len(), 64);
}
