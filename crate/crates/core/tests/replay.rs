mod common;

use minigo_verify::checker::{explore, replay_trace, Action, Bounds, CheckOptions, ReplayError};

#[test]
fn double_close_replays_to_error() {
    let m = common::corpus_model("double_close", "main");
    let v = explore(&m, &Bounds::new(), &CheckOptions::default()).unwrap();
    let s = replay_trace(&m, &Bounds::new(), v.trace.as_ref().unwrap()).unwrap();
    assert!(s.has_error());
}

#[test]
fn empty_trace_gives_initial_state() {
    let m = common::corpus_model("double_close", "main");
    let s = replay_trace(&m, &Bounds::new(), &[]).unwrap();
    assert_eq!(s.procs.len(), 1);
    assert!(s.chans.is_empty());
    assert!(!s.has_error());
}

#[test]
fn every_corpus_witness_replays() {
    let b = Bounds::new().with("len_files_0", 3).with("k_0", 2).with("n_0", 3).with("m_0", 3);
    for path in common::corpus_files() {
        let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
        for m in common::corpus_models(&stem) {
            let v = explore(&m, &b, &CheckOptions::default()).unwrap();
            if let Some(t) = &v.trace {
                replay_trace(&m, &b, t).unwrap_or_else(|e| panic!("{stem}/{}: {e}", m.name));
            }
        }
    }
}

#[test]
fn forged_event_diverges() {
    let m = common::corpus_model("double_close", "main");
    let v = explore(&m, &Bounds::new(), &CheckOptions::default()).unwrap();
    let mut t = v.trace.unwrap();
    let k = t.iter().position(|e| e.action == Action::Close).unwrap();
    t[k].action = Action::SendAck;
    assert!(matches!(replay_trace(&m, &Bounds::new(), &t), Err(ReplayError::DivergentTrace(_))));
}
