#![allow(dead_code)]

pub mod checks;
pub mod gen;
pub mod oracle;

use std::fs;
use std::path::{Path, PathBuf};

use minigo_verify::model::{build_model, partition_program, BehaviouralModel};
use minigo_verify::syntax::parse_program_named;

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn corpus_files() -> Vec<PathBuf> {
    let mut files: Vec<_> = fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "go"))
        .collect();
    files.sort();
    files
}

/// All partition models of a source text.
pub fn models_of(file: &str, src: &str) -> Vec<BehaviouralModel> {
    let prog = parse_program_named(file, src).unwrap_or_else(|e| panic!("{file}: {e}"));
    partition_program(&prog)
        .iter()
        .map(|entry| build_model(entry, &prog).unwrap_or_else(|e| panic!("{file}: {e}")))
        .collect()
}

/// Models of a corpus file by stem.
pub fn corpus_models(stem: &str) -> Vec<BehaviouralModel> {
    let path = corpus_dir().join(format!("{stem}.go"));
    let src = fs::read_to_string(&path).unwrap();
    models_of(&format!("corpus/{stem}.go"), &src)
}

pub fn corpus_model(stem: &str, entry: &str) -> BehaviouralModel {
    corpus_models(stem).into_iter().find(|m| m.name == entry).unwrap_or_else(|| panic!("{stem}: no {entry}"))
}
