//! State vectors and their canonical form.
//!
//! Non-entry processes are interchangeable when they run the same code in
//! the same local state, so states are stored with those processes sorted
//! and channel instances renumbered by first use. Terminated non-entry
//! processes and unreferenced channels are dropped.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub const NIL: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monitor {
    Open,
    Closed,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChanState {
    pub cap: u32,
    pub len: u32,
    pub monitor: Monitor,
    /// Index into the model's channel origin names.
    pub origin: u16,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProcState {
    pub code: u16,
    pub pc: u32,
    pub terminated: bool,
    pub counters: Box<[u32]>,
    /// Channel instance per variable slot, [`NIL`] when unset.
    pub slots: Box<[u32]>,
}

/// A global state: process 0 is the entry.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct State {
    pub procs: Vec<ProcState>,
    pub chans: Vec<ChanState>,
}

impl State {
    pub fn has_error(&self) -> bool {
        self.chans.iter().any(|c| c.monitor == Monitor::Error)
    }
}

/// Where each process and channel of a raw state ended up.
#[derive(Clone, Debug, Default)]
pub(crate) struct Perm {
    pub procs: Vec<Option<usize>>,
    pub chans: Vec<Option<usize>>,
}

fn local_key<'a>(s: &'a State, p: &'a ProcState) -> impl Ord + 'a {
    let chans: Vec<Option<&ChanState>> =
        p.slots.iter().map(|&c| (c != NIL).then(|| &s.chans[c as usize])).collect();
    (p.code, p.pc, p.terminated, p.counters.clone(), chans)
}

fn renumber(s: &State, order: &[usize]) -> Vec<Option<usize>> {
    let mut map = vec![None; s.chans.len()];
    let mut next = 0;
    for &i in order {
        for &c in s.procs[i].slots.iter() {
            if c != NIL && map[c as usize].is_none() {
                map[c as usize] = Some(next);
                next += 1;
            }
        }
    }
    map
}

fn mapped(p: &ProcState, map: &[Option<usize>]) -> Vec<u32> {
    p.slots.iter().map(|&c| if c == NIL { NIL } else { map[c as usize].unwrap() as u32 }).collect()
}

pub(crate) fn canonicalize(raw: &State) -> (State, Perm) {
    let mut order: Vec<usize> = (1..raw.procs.len()).filter(|&i| !raw.procs[i].terminated).collect();
    order.sort_by(|&a, &b| local_key(raw, &raw.procs[a]).cmp(&local_key(raw, &raw.procs[b])));
    let full = |order: &[usize]| {
        let mut all = Vec::with_capacity(order.len() + 1);
        all.push(0);
        all.extend_from_slice(order);
        all
    };
    let mut map = renumber(raw, &full(&order));
    for _ in 0..4 {
        let mut next = order.clone();
        next.sort_by(|&a, &b| {
            let (pa, pb) = (&raw.procs[a], &raw.procs[b]);
            match local_key(raw, pa).cmp(&local_key(raw, pb)) {
                Ordering::Equal => mapped(pa, &map).cmp(&mapped(pb, &map)),
                o => o,
            }
        });
        if next == order {
            break;
        }
        order = next;
        map = renumber(raw, &full(&order));
    }
    let all = full(&order);
    let mut procs_map = vec![None; raw.procs.len()];
    let procs = all
        .iter()
        .enumerate()
        .map(|(new, &old)| {
            procs_map[old] = Some(new);
            let p = &raw.procs[old];
            ProcState { slots: mapped(p, &map).into_boxed_slice(), ..p.clone() }
        })
        .collect();
    let mut chans = vec![None; map.iter().flatten().count()];
    for (old, new) in map.iter().enumerate() {
        if let Some(n) = new {
            chans[*n] = Some(raw.chans[old].clone());
        }
    }
    let chans = chans.into_iter().map(Option::unwrap).collect();
    (State { procs, chans }, Perm { procs: procs_map, chans: map })
}
