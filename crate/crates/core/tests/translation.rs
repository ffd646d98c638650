mod common;

use common::checks::shape;
use common::gen::{program_with, random_program, random_stmts};
use common::{corpus_files, corpus_model, models_of};
use minigo_verify::model::{walk_ir, BehaviouralModel, IrKind};
use minigo_verify::params::{Bound, Role};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus_sources() -> Vec<(String, String)> {
    corpus_files()
        .into_iter()
        .map(|p| {
            let name = format!("corpus/{}", p.file_name().unwrap().to_string_lossy());
            (name, std::fs::read_to_string(&p).unwrap())
        })
        .collect()
}

fn random_sources(n: u64) -> Vec<(String, String)> {
    (0..n)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (format!("random_{seed}.go"), random_program(&mut rng))
        })
        .collect()
}

fn all_sources() -> Vec<(String, String)> {
    let mut v = corpus_sources();
    v.extend(random_sources(500));
    v
}

fn single(src: &str) -> BehaviouralModel {
    models_of("t.go", src).into_iter().find(|m| m.name == "main").unwrap()
}

#[test]
fn no_async_run_under_nondeterministic_loop() {
    for (name, src) in all_sources() {
        for m in models_of(&name, &src) {
            for p in m.all_procs() {
                walk_ir(&p.body, &mut |ir, ancestors| {
                    if matches!(ir.kind, IrKind::RunAsync { .. }) {
                        assert!(
                            !ancestors.iter().any(|a| matches!(a.kind, IrKind::NDLoop(_) | IrKind::Forever(_))),
                            "{name}: {} spawns under an unbounded loop\n{}",
                            p.name,
                            m.canonical_text()
                        );
                    }
                });
            }
        }
    }
}

#[test]
fn canonical_text_is_deterministic() {
    for (name, src) in all_sources() {
        let a: Vec<String> = models_of(&name, &src).iter().map(BehaviouralModel::canonical_text).collect();
        let b: Vec<String> = models_of(&name, &src).iter().map(BehaviouralModel::canonical_text).collect();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn branch_environment_is_discarded() {
    let inside = "\tif x > 0 {\n\t\tfor i := 0; i < m; i++ {\n\t\t\tgo worker(c)\n\t\t}\n\t}\n";
    let after = "\tfor j := 0; j < m; j++ {\n\t\t<-c\n\t}\n";
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let with_branch = single(&program_with(&mut rng, &format!("{inside}{after}")));
    let IrKind::NDLoop(_) = &with_branch.entry.body.last().unwrap().kind else {
        panic!("bound seen only in a branch must not be reused\n{}", with_branch.canonical_text());
    };

    let straight = format!("\tfor i := 0; i < m; i++ {{\n\t\tgo worker(c)\n\t}}\n{after}");
    let without = single(&program_with(&mut rng, &straight));
    assert!(matches!(without.entry.body.last().unwrap().kind, IrKind::BoundedFor { .. }));

    // Prefixing any statement list wrapped in a branch leaves the
    // translation of what follows unchanged.
    for seed in 0..500 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_stmts(&mut rng, 1..=3).replace('\n', "\n\t");
        let t = random_stmts(&mut rng, 1..=3);
        let plain = single(&program_with(&mut ChaCha8Rng::seed_from_u64(seed), &format!("\tif x > 0 {{\n\t}}\n{t}")));
        let wrapped = single(&program_with(
            &mut ChaCha8Rng::seed_from_u64(seed),
            &format!("\tif x > 0 {{\n\t{}\n\t}}\n{t}", s.trim_end()),
        ));
        let tail = |m: &BehaviouralModel| {
            let skip = m.entry.body.iter().position(|s| matches!(s.kind, IrKind::NDChoice(_))).unwrap();
            shape(&m.entry.body[skip + 1..])
        };
        assert_eq!(tail(&plain), tail(&wrapped), "seed {seed}\n{}", wrapped.canonical_text());
    }
}

#[test]
fn file_processing_symbol_flow() {
    let m = corpus_model("file_processing", "main");
    assert_eq!(m.free_params.len(), 1);
    let p = &m.free_params[0];
    assert_eq!(p.name, "len_files_0");
    assert_eq!(p.role, Role::Capacity);
    assert_eq!(p.expr.as_deref(), Some("len(files)"));
    assert_eq!((p.origin.line, p.origin.column), (11, 2));

    assert_eq!(m.channels[0].capacity, Bound::Sym("len_files_0".into()));
    let loops: Vec<_> = m
        .entry
        .body
        .iter()
        .filter_map(|s| match &s.kind {
            IrKind::BoundedFor { from, to, .. } => Some((from.clone(), to.clone())),
            _ => None,
        })
        .collect();
    let sym = (Bound::Lit(0), Bound::Sym("len_files_0".into()));
    assert_eq!(loops, vec![sym.clone(), sym]);
}

#[test]
fn literal_bounds_map_to_themselves() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let m = single(&program_with(&mut rng, "\tfor i := 0; i < 5; i++ {\n\t\tgo worker(c)\n\t}\n"));
    assert!(matches!(
        &m.entry.body[1].kind,
        IrKind::BoundedFor { from: Bound::Lit(0), to: Bound::Lit(5), .. }
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let m = single(&program_with(&mut rng, "\tfor i := 0; i <= 4; i++ {\n\t\t<-c\n\t}\n"));
    assert!(matches!(
        &m.entry.body[1].kind,
        IrKind::BoundedFor { from: Bound::Lit(0), to: Bound::Lit(5), .. }
    ));
}

#[test]
fn unrecognized_spawning_loops_get_fresh_symbols() {
    let body = "\tfor i := 0; i != n; i++ {\n\t\tgo worker(c)\n\t}\n\tfor i := 0; i != n; i++ {\n\t\tgo worker(c)\n\t}\n";
    let m = single(&program_with(&mut ChaCha8Rng::seed_from_u64(1), body));
    let bounds: Vec<_> = m
        .entry
        .body
        .iter()
        .filter_map(|s| match &s.kind {
            IrKind::BoundedFor { from, to, .. } => Some((from.to_string(), to.to_string())),
            _ => None,
        })
        .collect();
    assert_eq!(
        bounds,
        vec![("fresh_0".into(), "fresh_1".into()), ("fresh_2".into(), "fresh_3".into())],
        "{}",
        m.canonical_text()
    );
}

#[test]
fn non_spawning_loop_over_unseen_bound_is_nondeterministic() {
    let src = "package main\n\nfunc g() {\n}\n\nfunc main() {\n\tc := make(chan int)\n\tfor i := 0; i < k; i++ {\n\t\tg()\n\t}\n\tm := make(chan int, k)\n\tfor i := 0; i < k; i++ {\n\t\tg()\n\t}\n\tclose(c)\n\tclose(m)\n}\n";
    let m = single(src);
    let kinds: Vec<_> = m.entry.body.iter().map(|s| s.kind.name()).collect();
    assert_eq!(kinds, ["DeclareChan", "NDLoop", "DeclareChan", "BoundedFor", "MonClose", "MonClose"]);
}
