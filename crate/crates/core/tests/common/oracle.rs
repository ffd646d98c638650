//! Naive reference semantics for behavioural models: a direct interpreter
//! of the structured IR with explicit continuation stacks, exhaustive
//! interleaving and a linear visited list.

use minigo_verify::checker::Bounds;
use minigo_verify::model::{BehaviouralModel, Ir, IrKind, ProcDef};
use minigo_verify::params::Bound;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Flags {
    pub channel_safe: bool,
    pub global_deadlock_free: bool,
    pub leaks: bool,
}

#[derive(Clone, Copy, Debug)]
struct Blk<'a>(&'a [Ir]);

impl PartialEq for Blk<'_> {
    fn eq(&self, o: &Self) -> bool {
        std::ptr::eq(self.0, o.0)
    }
}
impl Eq for Blk<'_> {}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Frame<'a> {
    Seq(Blk<'a>, usize),
    Bounded(Blk<'a>, i64, i64),
    Nd,
    Forever(Blk<'a>),
    Range,
    Wait(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Run,
    Signal,
    End,
    Dead,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mon {
    Open,
    Closed,
    Error,
}

#[derive(Clone, Debug)]
struct Chan {
    cap: i64,
    len: i64,
    mon: Mon,
    /// Creation number, used only to label walk events.
    uid: usize,
}

impl PartialEq for Chan {
    fn eq(&self, o: &Self) -> bool {
        (self.cap, self.len, self.mon) == (o.cap, o.len, o.mon)
    }
}
impl Eq for Chan {}

/// A monitor-relevant action observed during a walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MonEvent {
    Ack(usize),
    Close(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Proc<'a> {
    def: &'a str,
    stack: Vec<Frame<'a>>,
    env: Vec<(String, usize)>,
    done: Option<usize>,
    phase: Phase,
}

impl Proc<'_> {
    fn chan(&self, name: &str) -> Option<usize> {
        self.env.iter().rev().find(|(n, _)| n == name).map(|(_, c)| *c)
    }

    fn bind(&mut self, name: &str, c: usize) {
        self.env.retain(|(n, _)| n != name);
        self.env.push((name.to_string(), c));
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct St<'a> {
    procs: Vec<Proc<'a>>,
    chans: Vec<Chan>,
}

struct Ctx<'a> {
    model: &'a BehaviouralModel,
    bounds: &'a Bounds,
    cap: usize,
    uids: std::cell::Cell<usize>,
}

impl<'a> Ctx<'a> {
    fn def(&self, name: &str) -> &'a ProcDef {
        let m: &'a BehaviouralModel = self.model;
        if m.entry.name == name {
            &m.entry
        } else {
            m.procs.iter().find(|p| p.name == name).expect("known process")
        }
    }

    fn chan(&self, cap: i64) -> Chan {
        let uid = self.uids.get();
        self.uids.set(uid + 1);
        Chan { cap, len: 0, mon: Mon::Open, uid }
    }

    fn value(&self, b: &Bound) -> i64 {
        match b {
            Bound::Lit(n) => *n,
            Bound::Sym(s) => self.bounds.values[s] as i64,
        }
    }
}

fn current<'a>(p: &Proc<'a>) -> Option<&'a Ir> {
    match p.stack.last() {
        Some(Frame::Seq(b, pos)) => b.0.get(*pos),
        _ => None,
    }
}

fn is_fused(a: &Ir, b: Option<&Ir>) -> bool {
    matches!((&a.kind, b.map(|b| &b.kind)), (IrKind::SendIn(x), Some(IrKind::MonSendAck(y))) if x == y)
}

fn advance(p: &mut Proc<'_>, by: usize) {
    match p.stack.last_mut() {
        Some(Frame::Seq(_, pos)) => *pos += by,
        other => panic!("advance on {other:?}"),
    }
}

/// Perform administrative moves until the process sits on a statement,
/// a wait, or has finished its body.
fn settle(p: &mut Proc<'_>) {
    if p.phase != Phase::Run {
        return;
    }
    loop {
        match p.stack.last() {
            None => {
                p.phase = if p.done.is_some() { Phase::Signal } else { Phase::End };
                return;
            }
            Some(Frame::Wait(_)) => return,
            Some(Frame::Seq(b, pos)) if *pos < b.0.len() => return,
            Some(Frame::Seq(..)) => {
                p.stack.pop();
                match p.stack.last_mut() {
                    Some(Frame::Bounded(body, i, n)) => {
                        *i += 1;
                        if *i < *n {
                            let body = *body;
                            p.stack.push(Frame::Seq(body, 0));
                        } else {
                            p.stack.pop();
                            advance(p, 1);
                        }
                    }
                    Some(Frame::Nd) | Some(Frame::Range) => {
                        p.stack.pop();
                    }
                    Some(Frame::Forever(body)) => {
                        let body = *body;
                        p.stack.push(Frame::Seq(body, 0));
                    }
                    _ => {}
                }
            }
            Some(f) => panic!("unexpected frame on top: {f:?}"),
        }
    }
}

/// Remove finished helper processes and channels nobody refers to.
fn collect(s: &mut St<'_>) {
    let mut i = 1;
    while i < s.procs.len() {
        if s.procs[i].phase == Phase::Dead {
            s.procs.remove(i);
        } else {
            i += 1;
        }
    }
    let mut used = vec![false; s.chans.len()];
    for p in &s.procs {
        for (_, c) in &p.env {
            used[*c] = true;
        }
        if let Some(d) = p.done {
            used[d] = true;
        }
        for f in &p.stack {
            if let Frame::Wait(c) = f {
                used[*c] = true;
            }
        }
    }
    let mut map = vec![usize::MAX; s.chans.len()];
    let mut next = 0;
    for (i, u) in used.iter().enumerate() {
        if *u {
            map[i] = next;
            next += 1;
        }
    }
    let old = std::mem::take(&mut s.chans);
    s.chans = old.into_iter().enumerate().filter(|(i, _)| used[*i]).map(|(_, c)| c).collect();
    for p in &mut s.procs {
        for (_, c) in &mut p.env {
            *c = map[*c];
        }
        if let Some(d) = &mut p.done {
            *d = map[*d];
        }
        for f in &mut p.stack {
            if let Frame::Wait(c) = f {
                *c = map[*c];
            }
        }
    }
}

/// Ways process `j` can take a synchronous receive on `ch`, each as a
/// function producing the receiver's new local state.
fn receive_options<'a>(p: &Proc<'a>, ch: usize) -> Vec<Proc<'a>> {
    let mut out = Vec::new();
    if p.phase != Phase::Run {
        return out;
    }
    if let Some(Frame::Wait(c)) = p.stack.last() {
        if *c == ch {
            let mut q = p.clone();
            q.stack.pop();
            out.push(q);
        }
        return out;
    }
    let Some(s) = current(p) else { return out };
    match &s.kind {
        IrKind::RecvIn(c) if p.chan(c) == Some(ch) => {
            let mut q = p.clone();
            advance(&mut q, 1);
            out.push(q);
        }
        IrKind::RangeRecv { chan, body } if p.chan(chan) == Some(ch) => {
            let mut q = p.clone();
            q.stack.push(Frame::Range);
            q.stack.push(Frame::Seq(Blk(body), 0));
            out.push(q);
        }
        IrKind::GuardedChoice { branches, .. } => {
            for g in branches {
                if let IrKind::RecvIn(c) = &g.guard.kind {
                    if p.chan(c) == Some(ch) {
                        let mut q = p.clone();
                        advance(&mut q, 1);
                        q.stack.push(Frame::Seq(Blk(&g.cont), 0));
                        out.push(q);
                    }
                }
            }
        }
        _ => {}
    }
    out
}

struct Succ<'a> {
    state: St<'a>,
    error: bool,
    event: Option<MonEvent>,
}

fn finish<'a>(s: St<'a>, error: bool, out: &mut Vec<Succ<'a>>) {
    finish_with(s, error, None, out);
}

fn finish_with<'a>(mut s: St<'a>, error: bool, event: Option<MonEvent>, out: &mut Vec<Succ<'a>>) {
    for p in &mut s.procs {
        settle(p);
    }
    collect(&mut s);
    out.push(Succ { state: s, error, event });
}

/// Sender `i` offers a message on `ch`; `after` is its local state once
/// the send is done; `ack` applies the monitor edge for a fused send.
fn send<'a>(s: &St<'a>, i: usize, ch: usize, after: Proc<'a>, ack: bool, out: &mut Vec<Succ<'a>>) {
    let c = &s.chans[ch];
    let event = ack.then_some(MonEvent::Ack(c.uid));
    if c.mon != Mon::Open {
        let mut n = s.clone();
        n.procs[i] = after;
        if ack {
            n.chans[ch].mon = Mon::Error;
        }
        finish_with(n, ack, event, out);
    } else if c.cap > 0 {
        if c.len < c.cap {
            let mut n = s.clone();
            n.procs[i] = after;
            n.chans[ch].len += 1;
            finish_with(n, false, event, out);
        }
    } else {
        for j in 0..s.procs.len() {
            if j == i {
                continue;
            }
            for r in receive_options(&s.procs[j], ch) {
                let mut n = s.clone();
                n.procs[i] = after.clone();
                n.procs[j] = r;
                finish_with(n, false, event, out);
            }
        }
    }
}

fn recv_alone(s: &St<'_>, ch: usize) -> Option<bool> {
    let c = &s.chans[ch];
    if c.len > 0 {
        Some(true)
    } else if c.mon != Mon::Open {
        Some(false)
    } else {
        None
    }
}

fn monitor(m: Mon, closing: bool) -> (Mon, bool) {
    match (m, closing) {
        (Mon::Open, true) => (Mon::Closed, false),
        (Mon::Open, false) => (Mon::Open, false),
        _ => (Mon::Error, true),
    }
}

fn live(s: &St<'_>) -> usize {
    s.procs.len()
}

fn successors<'a>(cx: &Ctx<'a>, s: &St<'a>, capped: &mut bool) -> Vec<Succ<'a>> {
    let mut out = Vec::new();
    for i in 0..s.procs.len() {
        let p = &s.procs[i];
        match p.phase {
            Phase::Dead => continue,
            Phase::End => {
                let mut n = s.clone();
                n.procs[i].phase = Phase::Dead;
                finish(n, false, &mut out);
                continue;
            }
            Phase::Signal => {
                let mut after = p.clone();
                after.phase = Phase::Dead;
                send(s, i, p.done.unwrap(), after, false, &mut out);
                continue;
            }
            Phase::Run => {}
        }
        if let Some(Frame::Wait(ch)) = p.stack.last() {
            if let Some(buffered) = recv_alone(s, *ch) {
                let mut n = s.clone();
                if buffered {
                    n.chans[*ch].len -= 1;
                }
                n.procs[i].stack.pop();
                finish(n, false, &mut out);
            }
            continue;
        }
        let stmt = current(p).expect("settled process has a statement");
        let Some(Frame::Seq(blk, pos)) = p.stack.last() else { unreachable!() };
        let (blk, pos) = (*blk, *pos);
        let step = |f: &dyn Fn(&mut Proc<'a>)| {
            let mut n = s.clone();
            f(&mut n.procs[i]);
            n
        };
        match &stmt.kind {
            IrKind::SendIn(c) => {
                let Some(ch) = p.chan(c) else { continue };
                let fused = is_fused(stmt, blk.0.get(pos + 1));
                let mut after = p.clone();
                advance(&mut after, if fused { 2 } else { 1 });
                send(s, i, ch, after, fused, &mut out);
            }
            IrKind::RecvIn(c) => {
                let Some(ch) = p.chan(c) else { continue };
                if let Some(buffered) = recv_alone(s, ch) {
                    let mut n = step(&|q| advance(q, 1));
                    if buffered {
                        n.chans[ch].len -= 1;
                    }
                    finish(n, false, &mut out);
                }
            }
            IrKind::MonSendAck(c) | IrKind::MonClose(c) => {
                let Some(ch) = p.chan(c) else { continue };
                let closing = matches!(stmt.kind, IrKind::MonClose(_));
                let mut n = step(&|q| advance(q, 1));
                let (m, err) = monitor(n.chans[ch].mon, closing);
                n.chans[ch].mon = m;
                let uid = n.chans[ch].uid;
                let event = if closing { MonEvent::Close(uid) } else { MonEvent::Ack(uid) };
                finish_with(n, err, Some(event), &mut out);
            }
            IrKind::NDChoice(branches) => {
                for b in branches {
                    let n = step(&|q| {
                        advance(q, 1);
                        q.stack.push(Frame::Seq(Blk(b), 0));
                    });
                    finish(n, false, &mut out);
                }
            }
            IrKind::GuardedChoice { branches, default } => {
                for g in branches {
                    match &g.guard.kind {
                        IrKind::SendIn(c) => {
                            let Some(ch) = p.chan(c) else { continue };
                            let fused = is_fused(&g.guard, g.cont.first());
                            let mut after = p.clone();
                            advance(&mut after, 1);
                            after.stack.push(Frame::Seq(Blk(&g.cont), usize::from(fused)));
                            send(s, i, ch, after, fused, &mut out);
                        }
                        IrKind::RecvIn(c) => {
                            let Some(ch) = p.chan(c) else { continue };
                            if let Some(buffered) = recv_alone(s, ch) {
                                let mut n = step(&|q| {
                                    advance(q, 1);
                                    q.stack.push(Frame::Seq(Blk(&g.cont), 0));
                                });
                                if buffered {
                                    n.chans[ch].len -= 1;
                                }
                                finish(n, false, &mut out);
                            }
                        }
                        _ => panic!("bad guard"),
                    }
                }
                if let Some(d) = default {
                    let n = step(&|q| {
                        advance(q, 1);
                        q.stack.push(Frame::Seq(Blk(d), 0));
                    });
                    finish(n, false, &mut out);
                }
            }
            IrKind::RunBlocking { proc, args } | IrKind::RunAsync { proc, args } => {
                if live(s) >= cx.cap {
                    *capped = true;
                    continue;
                }
                let blocking = matches!(stmt.kind, IrKind::RunBlocking { .. });
                let def = cx.def(proc);
                let mut n = s.clone();
                let mut child = Proc {
                    def: &def.name,
                    stack: vec![Frame::Seq(Blk(&def.body), 0)],
                    env: Vec::new(),
                    done: None,
                    phase: Phase::Run,
                };
                for (param, arg) in def.chan_params.iter().zip(args) {
                    if let Some(c) = p.chan(arg) {
                        child.bind(param, c);
                    }
                }
                advance(&mut n.procs[i], 1);
                if blocking {
                    n.chans.push(cx.chan(0));
                    let ch = n.chans.len() - 1;
                    child.done = Some(ch);
                    n.procs[i].stack.push(Frame::Wait(ch));
                }
                n.procs.push(child);
                finish(n, false, &mut out);
            }
            IrKind::BoundedFor { from, to, body } => {
                let count = (cx.value(to) - cx.value(from)).max(0);
                let n = step(&|q| {
                    if count > 0 {
                        q.stack.push(Frame::Bounded(Blk(body), 0, count));
                        q.stack.push(Frame::Seq(Blk(body), 0));
                    } else {
                        advance(q, 1);
                    }
                });
                finish(n, false, &mut out);
            }
            IrKind::NDLoop(body) => {
                let enter = step(&|q| {
                    q.stack.push(Frame::Nd);
                    q.stack.push(Frame::Seq(Blk(body), 0));
                });
                finish(enter, false, &mut out);
                finish(step(&|q| advance(q, 1)), false, &mut out);
            }
            IrKind::Forever(body) => {
                let n = step(&|q| {
                    if !body.is_empty() {
                        q.stack.push(Frame::Forever(Blk(body)));
                        q.stack.push(Frame::Seq(Blk(body), 0));
                    }
                });
                finish(n, false, &mut out);
            }
            IrKind::RangeRecv { chan, body } => {
                let Some(ch) = p.chan(chan) else { continue };
                match recv_alone(s, ch) {
                    Some(true) => {
                        let mut n = step(&|q| {
                            q.stack.push(Frame::Range);
                            q.stack.push(Frame::Seq(Blk(body), 0));
                        });
                        n.chans[ch].len -= 1;
                        finish(n, false, &mut out);
                    }
                    Some(false) => finish(step(&|q| advance(q, 1)), false, &mut out),
                    None => {}
                }
            }
            IrKind::DeclareChan(d) => {
                let mut n = s.clone();
                n.chans.push(cx.chan(cx.value(&d.capacity).max(0)));
                let ch = n.chans.len() - 1;
                advance(&mut n.procs[i], 1);
                n.procs[i].bind(&d.name, ch);
                finish(n, false, &mut out);
            }
            IrKind::Skip => finish(step(&|q| advance(q, 1)), false, &mut out),
            IrKind::BreakLoop => {
                let n = step(&|q| {
                    while let Some(f) = q.stack.pop() {
                        if matches!(f, Frame::Bounded(..) | Frame::Nd | Frame::Forever(_) | Frame::Range) {
                            break;
                        }
                    }
                    advance(q, 1);
                });
                finish(n, false, &mut out);
            }
            IrKind::Return => finish(step(&|q| q.stack.clear()), false, &mut out),
        }
    }
    out
}

/// Exhaustive verdict flags for `m` under `bounds`.
pub fn oracle(m: &BehaviouralModel, bounds: &Bounds, process_cap: usize) -> Flags {
    let cx = Ctx { model: m, bounds, cap: process_cap, uids: Default::default() };
    let mut visited = vec![initial(m)];
    let mut flags = Flags { channel_safe: true, global_deadlock_free: true, leaks: false };
    let mut k = 0;
    while k < visited.len() {
        let s = visited[k].clone();
        let mut capped = false;
        let succs = successors(&cx, &s, &mut capped);
        if succs.is_empty() && !capped {
            if s.procs[0].phase != Phase::Dead {
                flags.global_deadlock_free = false;
            } else if s.procs.len() > 1 {
                flags.leaks = true;
            }
        }
        for n in succs {
            if n.error {
                flags.channel_safe = false;
            }
            if !visited.contains(&n.state) {
                visited.push(n.state);
            }
        }
        k += 1;
    }
    flags
}

fn initial(m: &BehaviouralModel) -> St<'_> {
    let mut entry = Proc {
        def: &m.entry.name,
        stack: vec![Frame::Seq(Blk(&m.entry.body), 0)],
        env: Vec::new(),
        done: None,
        phase: Phase::Run,
    };
    settle(&mut entry);
    St { procs: vec![entry], chans: Vec::new() }
}

/// One random execution of at most `steps` moves: the monitor events it
/// performed, in order, and whether its last move raised the error flag.
pub fn random_walk(
    m: &BehaviouralModel,
    bounds: &Bounds,
    rng: &mut impl rand::Rng,
    steps: usize,
) -> (Vec<MonEvent>, bool) {
    let cx = Ctx { model: m, bounds, cap: 64, uids: Default::default() };
    let mut s = initial(m);
    let mut events = Vec::new();
    for _ in 0..steps {
        let mut capped = false;
        let mut succs = successors(&cx, &s, &mut capped);
        if succs.is_empty() {
            break;
        }
        let n = succs.swap_remove(rng.gen_range(0..succs.len()));
        events.extend(n.event);
        if n.error {
            return (events, true);
        }
        s = n.state;
    }
    (events, false)
}
