//! The committed fixture corpus parses, re-emits byte for byte and matches its
//! generator.

use std::fs;
use std::path::PathBuf;

use bfclock::format::{emit_instance, parse_instance};
use bfclock::lower_bounds::{gen_additive_sqrt_instances, gen_lemma3_instance, gen_symmetric_log_instance};
use bfclock::random::{generate, RandomFamily, RandomSpec};
use bfclock::Instance;

fn corpus() -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let mut files: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read_to_string(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn fixtures_round_trip() {
    let files = corpus();
    assert!(files.len() >= 19);
    for (name, text) in files {
        let inst = parse_instance(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(emit_instance(&inst), text, "{name}");
    }
}

fn regenerate(name: &str) -> Option<Instance> {
    let stem = name.strip_suffix(".toml")?;
    if stem == "lemma3" {
        let eps = 1.0 / 75.0;
        return gen_lemma3_instance(eps, eps / 7500.0, 1.0).ok();
    }
    if let Some(rest) = stem.strip_prefix("additive-sqrt-n16-") {
        return gen_additive_sqrt_instances(16, 1.0, None)
            .ok()?
            .into_iter()
            .find(|(case, _)| case.label() == rest)
            .map(|(_, inst)| inst);
    }
    if let Some(k) = stem.strip_prefix("symmetric-log-n256-k") {
        return gen_symmetric_log_instance(256, k.parse().ok()?, 1.0).ok();
    }
    let (family, seed) = stem.rsplit_once("-n8-s")?;
    generate(family.parse::<RandomFamily>().ok()?, RandomSpec::new(8, seed.parse().ok()?)).ok()
}

#[test]
fn fixtures_match_their_generators() {
    for (name, text) in corpus() {
        let inst = regenerate(&name).unwrap_or_else(|| panic!("no generator for {name}"));
        assert_eq!(emit_instance(&inst), text, "{name}");
    }
}
