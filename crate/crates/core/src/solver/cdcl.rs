//! Conflict-driven clause learning with two watched literals, VSIDS
//! branching, phase saving, LBD-driven restarts and learnt-clause reduction.

use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SolverStats;

/// `2 * var + negated`, with 0-based variables.
type Lit = u32;
type CRef = u32;

const NO_REASON: CRef = u32::MAX;
const HEADER: usize = 3;
const LEARNT: u32 = 1;
const DELETED: u32 = 2;

#[inline]
fn var(l: Lit) -> usize {
    (l >> 1) as usize
}

#[inline]
fn from_dimacs(l: i32) -> Lit {
    ((l.unsigned_abs() - 1) << 1) | (l < 0) as u32
}

#[derive(Clone, Copy)]
struct Watcher {
    cref: CRef,
    blocker: Lit,
}

/// Clause arena. Each clause is `[len, flags | lbd << 2, activity bits, lits...]`.
#[derive(Default)]
struct Arena {
    data: Vec<u32>,
    wasted: usize,
}

impl Arena {
    fn alloc(&mut self, lits: &[Lit], learnt: bool, lbd: u32) -> CRef {
        let cref = self.data.len() as CRef;
        self.data.push(lits.len() as u32);
        self.data.push(if learnt { LEARNT } else { 0 } | lbd << 2);
        self.data.push(0f32.to_bits());
        self.data.extend_from_slice(lits);
        cref
    }

    #[inline]
    fn len(&self, c: CRef) -> usize {
        self.data[c as usize] as usize
    }

    #[inline]
    fn lits(&self, c: CRef) -> &[Lit] {
        let s = c as usize + HEADER;
        &self.data[s..s + self.len(c)]
    }

    #[inline]
    fn lits_mut(&mut self, c: CRef) -> &mut [Lit] {
        let s = c as usize + HEADER;
        let n = self.len(c);
        &mut self.data[s..s + n]
    }

    fn flags(&self, c: CRef) -> u32 {
        self.data[c as usize + 1]
    }

    fn is_deleted(&self, c: CRef) -> bool {
        self.flags(c) & DELETED != 0
    }

    fn lbd(&self, c: CRef) -> u32 {
        self.flags(c) >> 2
    }

    fn set_lbd(&mut self, c: CRef, lbd: u32) {
        let f = self.flags(c) & 3;
        self.data[c as usize + 1] = f | lbd << 2;
    }

    fn activity(&self, c: CRef) -> f32 {
        f32::from_bits(self.data[c as usize + 2])
    }

    fn set_activity(&mut self, c: CRef, a: f32) {
        self.data[c as usize + 2] = a.to_bits();
    }

    fn delete(&mut self, c: CRef) {
        self.data[c as usize + 1] |= DELETED;
        self.wasted += HEADER + self.len(c);
    }
}

/// Max-heap of variables keyed by activity.
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<u32>,
}

const NOT_IN_HEAP: u32 = u32::MAX;

impl VarHeap {
    fn new(n: usize) -> Self {
        Self { heap: Vec::with_capacity(n), pos: vec![NOT_IN_HEAP; n] }
    }

    fn contains(&self, v: usize) -> bool {
        self.pos[v] != NOT_IN_HEAP
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.pos[v] = self.heap.len() as u32;
        self.heap.push(v as u32);
        self.up(self.heap.len() - 1, act);
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.pos[top as usize] = NOT_IN_HEAP;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.down(0, act);
        }
        Some(top as usize)
    }

    fn bumped(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            self.up(self.pos[v] as usize, act);
        }
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let p = (i - 1) / 2;
            if act[self.heap[p] as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = self.heap[p];
            self.pos[self.heap[i] as usize] = i as u32;
            i = p;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as u32;
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let c = if r < n && act[self.heap[r] as usize] > act[self.heap[l] as usize] { r } else { l };
            if act[self.heap[c] as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = self.heap[c];
            self.pos[self.heap[i] as usize] = i as u32;
            i = c;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as u32;
    }
}

pub(crate) enum Outcome {
    Sat(Vec<bool>),
    Unsat,
    Unknown,
}

pub(crate) struct Limits<'a> {
    pub deadline: Option<Instant>,
    pub max_conflicts: Option<u64>,
    pub interrupt: Option<&'a AtomicBool>,
}

pub(crate) struct Cdcl {
    num_vars: usize,
    arena: Arena,
    clauses: Vec<CRef>,
    learnts: Vec<CRef>,
    watches: Vec<Vec<Watcher>>,
    bin_watches: Vec<Vec<(Lit, CRef)>>,
    /// Indexed by literal: 1 true, -1 false, 0 unassigned.
    vals: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<CRef>,
    phase: Vec<bool>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f32,
    heap: VarHeap,
    seen: Vec<u8>,
    level_stamp: Vec<u64>,
    stamp: u64,
    analyze_stack: Vec<Lit>,
    analyze_clear: Vec<usize>,
    lbd_fast: f64,
    lbd_slow: f64,
    trail_slow: f64,
    conflicts_since_restart: u64,
    next_reduce: u64,
    reduce_count: u64,
    unsat: bool,
    pub stats: SolverStats,
}

const VAR_DECAY: f64 = 0.95;
const CLA_DECAY: f32 = 0.999;

impl Cdcl {
    pub fn new(num_vars: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let activity: Vec<f64> = (0..num_vars).map(|_| rng.gen::<f64>() * 1e-5).collect();
        let mut heap = VarHeap::new(num_vars);
        for v in 0..num_vars {
            heap.insert(v, &activity);
        }
        Self {
            num_vars,
            arena: Arena::default(),
            clauses: Vec::new(),
            learnts: Vec::new(),
            watches: vec![Vec::new(); 2 * num_vars],
            bin_watches: vec![Vec::new(); 2 * num_vars],
            vals: vec![0; 2 * num_vars],
            level: vec![0; num_vars],
            reason: vec![NO_REASON; num_vars],
            phase: vec![false; num_vars],
            trail: Vec::with_capacity(num_vars),
            trail_lim: Vec::new(),
            qhead: 0,
            activity,
            var_inc: 1.0,
            cla_inc: 1.0,
            heap,
            seen: vec![0; num_vars],
            level_stamp: vec![0; num_vars + 1],
            stamp: 0,
            analyze_stack: Vec::new(),
            analyze_clear: Vec::new(),
            lbd_fast: 0.0,
            lbd_slow: 0.0,
            trail_slow: 0.0,
            conflicts_since_restart: 0,
            next_reduce: 2000,
            reduce_count: 0,
            unsat: false,
            stats: SolverStats::default(),
        }
    }

    #[inline]
    fn value(&self, l: Lit) -> i8 {
        self.vals[l as usize]
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    #[inline]
    fn assign(&mut self, l: Lit, reason: CRef) {
        let v = var(l);
        self.vals[l as usize] = 1;
        self.vals[(l ^ 1) as usize] = -1;
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Adds an input clause (DIMACS literals). Must be called at level 0.
    pub fn add_clause(&mut self, lits: &[i32]) {
        if self.unsat {
            return;
        }
        let mut c: Vec<Lit> = lits.iter().map(|&l| from_dimacs(l)).collect();
        c.sort_unstable();
        c.dedup();
        if c.windows(2).any(|w| w[0] ^ 1 == w[1]) {
            return;
        }
        if c.iter().any(|&l| self.value(l) == 1) {
            return;
        }
        c.retain(|&l| self.value(l) == 0);
        match c.len() {
            0 => self.unsat = true,
            1 => {
                self.assign(c[0], NO_REASON);
                if self.propagate().is_some() {
                    self.unsat = true;
                }
            }
            _ => {
                let cref = self.arena.alloc(&c, false, 0);
                self.clauses.push(cref);
                self.attach(cref);
            }
        }
    }

    fn attach(&mut self, cref: CRef) {
        let lits = self.arena.lits(cref);
        let (a, b) = (lits[0], lits[1]);
        if lits.len() == 2 {
            self.bin_watches[a as usize].push((b, cref));
            self.bin_watches[b as usize].push((a, cref));
        } else {
            self.watches[a as usize].push(Watcher { cref, blocker: b });
            self.watches[b as usize].push(Watcher { cref, blocker: a });
        }
    }

    /// Returns the conflicting clause, if any.
    fn propagate(&mut self) -> Option<CRef> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = p ^ 1;

            for i in 0..self.bin_watches[false_lit as usize].len() {
                let (other, cref) = self.bin_watches[false_lit as usize][i];
                match self.value(other) {
                    1 => {}
                    0 => self.assign(other, cref),
                    _ => return Some(cref),
                }
            }

            let mut ws = std::mem::take(&mut self.watches[false_lit as usize]);
            let (mut i, mut j) = (0, 0);
            let mut conflict = None;
            'watches: while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == 1 {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref;
                let lits = self.arena.lits_mut(cref);
                if lits[0] == false_lit {
                    lits.swap(0, 1);
                }
                let first = lits[0];
                let nw = Watcher { cref, blocker: first };
                if first != w.blocker && self.vals[first as usize] == 1 {
                    ws[j] = nw;
                    j += 1;
                    continue;
                }
                for k in 2..lits.len() {
                    if self.vals[lits[k] as usize] != -1 {
                        lits.swap(1, k);
                        let new_watch = lits[1];
                        self.watches[new_watch as usize].push(nw);
                        continue 'watches;
                    }
                }
                ws[j] = nw;
                j += 1;
                if self.value(first) == -1 {
                    conflict = Some(cref);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.assign(first, cref);
                }
            }
            ws.truncate(j);
            self.watches[false_lit as usize] = ws;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v, &self.activity);
    }

    fn bump_clause(&mut self, c: CRef) {
        let a = self.arena.activity(c) + self.cla_inc;
        self.arena.set_activity(c, a);
        if a > 1e20 {
            for &l in &self.learnts {
                let x = self.arena.activity(l);
                self.arena.set_activity(l, x * 1e-20);
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn compute_lbd(&mut self, lits: &[Lit]) -> u32 {
        self.stamp += 1;
        let mut n = 0;
        for &l in lits {
            let lv = self.level[var(l)] as usize;
            if self.level_stamp[lv] != self.stamp {
                self.level_stamp[lv] = self.stamp;
                n += 1;
            }
        }
        n
    }

    /// First-UIP learning with recursive minimization. Returns the learnt
    /// clause (asserting literal first) and the backjump level.
    fn analyze(&mut self, mut confl: CRef) -> (Vec<Lit>, u32) {
        let mut learnt: Vec<Lit> = vec![0];
        let mut path = 0;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        let cur = self.decision_level();
        loop {
            if self.arena.flags(confl) & LEARNT != 0 {
                self.bump_clause(confl);
                if self.arena.lbd(confl) > 2 {
                    let lits = self.arena.lits(confl).to_vec();
                    let lbd = self.compute_lbd(&lits);
                    if lbd + 1 < self.arena.lbd(confl) {
                        self.arena.set_lbd(confl, lbd);
                    }
                }
            }
            let n = self.arena.len(confl);
            for k in 0..n {
                let q = self.arena.lits(confl)[k];
                let v = var(q);
                if p.is_some_and(|p| var(p) == v) {
                    continue;
                }
                if self.seen[v] == 0 && self.level[v] > 0 {
                    self.seen[v] = 1;
                    self.bump_var(v);
                    if self.level[v] == cur {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[var(self.trail[idx])] != 0 {
                    break;
                }
            }
            let pl = self.trail[idx];
            p = Some(pl);
            confl = self.reason[var(pl)];
            self.seen[var(pl)] = 0;
            path -= 1;
            if path == 0 {
                break;
            }
        }
        learnt[0] = p.unwrap() ^ 1;

        // minimization
        self.analyze_clear.clear();
        self.analyze_clear.extend(learnt.iter().map(|&l| var(l)));
        let mut abstract_levels = 0u32;
        for &l in &learnt[1..] {
            abstract_levels |= 1 << (self.level[var(l)] & 31);
        }
        let mut keep = 1;
        for i in 1..learnt.len() {
            let l = learnt[i];
            if self.reason[var(l)] == NO_REASON || !self.redundant(l, abstract_levels) {
                learnt[keep] = l;
                keep += 1;
            }
        }
        learnt.truncate(keep);
        for &v in &self.analyze_clear {
            self.seen[v] = 0;
        }

        let bt = if learnt.len() == 1 {
            0
        } else {
            let mut mi = 1;
            for i in 2..learnt.len() {
                if self.level[var(learnt[i])] > self.level[var(learnt[mi])] {
                    mi = i;
                }
            }
            learnt.swap(1, mi);
            self.level[var(learnt[1])]
        };
        (learnt, bt)
    }

    fn redundant(&mut self, l: Lit, abstract_levels: u32) -> bool {
        self.analyze_stack.clear();
        self.analyze_stack.push(l);
        let top = self.analyze_clear.len();
        while let Some(q) = self.analyze_stack.pop() {
            let c = self.reason[var(q)];
            let n = self.arena.len(c);
            for k in 0..n {
                let r = self.arena.lits(c)[k];
                let v = var(r);
                if v == var(q) || self.seen[v] != 0 || self.level[v] == 0 {
                    continue;
                }
                if self.reason[v] != NO_REASON && abstract_levels & (1 << (self.level[v] & 31)) != 0 {
                    self.seen[v] = 1;
                    self.analyze_stack.push(r);
                    self.analyze_clear.push(v);
                } else {
                    for &u in &self.analyze_clear[top..] {
                        self.seen[u] = 0;
                    }
                    self.analyze_clear.truncate(top);
                    return false;
                }
            }
        }
        true
    }

    fn backtrack(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl as usize];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = var(l);
            self.vals[l as usize] = 0;
            self.vals[(l ^ 1) as usize] = 0;
            self.reason[v] = NO_REASON;
            self.phase[v] = l & 1 == 0;
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = lim;
    }

    fn locked(&self, c: CRef) -> bool {
        let l0 = self.arena.lits(c)[0];
        self.value(l0) == 1 && self.reason[var(l0)] == c
    }

    fn reduce_db(&mut self) {
        self.reduce_count += 1;
        let mut cand: Vec<CRef> = self
            .learnts
            .iter()
            .copied()
            .filter(|&c| self.arena.lbd(c) > 2 && self.arena.len(c) > 2 && !self.locked(c))
            .collect();
        cand.sort_by(|&a, &b| {
            self.arena
                .lbd(b)
                .cmp(&self.arena.lbd(a))
                .then(self.arena.activity(a).total_cmp(&self.arena.activity(b)))
        });
        for &c in &cand[..cand.len() / 2] {
            self.arena.delete(c);
        }
        self.learnts.retain(|&c| !self.arena.is_deleted(c));
        for ws in &mut self.watches {
            ws.retain(|w| self.arena.data[w.cref as usize + 1] & DELETED == 0);
        }
        if self.arena.wasted * 2 > self.arena.data.len() {
            self.collect_garbage();
        }
    }

    fn collect_garbage(&mut self) {
        let old = std::mem::take(&mut self.arena.data);
        let mut forward = vec![NO_REASON; old.len()];
        let mut data = Vec::with_capacity(old.len() - self.arena.wasted);
        for list in [&mut self.clauses, &mut self.learnts] {
            for c in list.iter_mut() {
                let s = *c as usize;
                let end = s + HEADER + old[s] as usize;
                let n = data.len() as CRef;
                data.extend_from_slice(&old[s..end]);
                forward[s] = n;
                *c = n;
            }
        }
        for ws in &mut self.watches {
            for w in ws.iter_mut() {
                w.cref = forward[w.cref as usize];
            }
        }
        for ws in &mut self.bin_watches {
            for w in ws.iter_mut() {
                w.1 = forward[w.1 as usize];
            }
        }
        for &l in &self.trail {
            let r = &mut self.reason[var(l)];
            if *r != NO_REASON {
                *r = forward[*r as usize];
            }
        }
        self.arena.data = data;
        self.arena.wasted = 0;
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.vals[2 * v] == 0 {
                return Some(((v as u32) << 1) | (!self.phase[v]) as u32);
            }
        }
        None
    }

    fn out_of_budget(&self, limits: &Limits<'_>) -> bool {
        limits.max_conflicts.is_some_and(|m| self.stats.conflicts >= m)
            || limits.deadline.is_some_and(|d| Instant::now() >= d)
            || limits.interrupt.is_some_and(|f| f.load(Ordering::Relaxed))
    }

    pub fn solve(&mut self, limits: &Limits<'_>) -> Outcome {
        if self.unsat {
            return Outcome::Unsat;
        }
        if self.propagate().is_some() {
            self.unsat = true;
            return Outcome::Unsat;
        }
        let mut since_check = 0u32;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                self.conflicts_since_restart += 1;
                if self.decision_level() == 0 {
                    self.unsat = true;
                    return Outcome::Unsat;
                }
                self.trail_slow += (self.trail.len() as f64 - self.trail_slow) / 5000.0f64.min(self.stats.conflicts as f64);
                if self.stats.conflicts > 10_000 && self.trail.len() as f64 > 1.4 * self.trail_slow {
                    // a long trail suggests a nearby model: hold off restarting
                    self.conflicts_since_restart = 0;
                }
                let (learnt, bt) = self.analyze(confl);
                let lbd = self.compute_lbd(&learnt);
                self.lbd_fast += (lbd as f64 - self.lbd_fast) / 32.0;
                self.lbd_slow += (lbd as f64 - self.lbd_slow) / 4096.0f64.min(self.stats.conflicts as f64);
                self.backtrack(bt);
                if learnt.len() == 1 {
                    self.assign(learnt[0], NO_REASON);
                } else {
                    let cref = self.arena.alloc(&learnt, true, lbd);
                    self.learnts.push(cref);
                    self.attach(cref);
                    self.bump_clause(cref);
                    self.assign(learnt[0], cref);
                }
                self.var_inc /= VAR_DECAY;
                self.cla_inc /= CLA_DECAY;
                since_check += 1;
                if limits.max_conflicts.is_some_and(|m| self.stats.conflicts >= m) {
                    self.backtrack(0);
                    return Outcome::Unknown;
                }
                if since_check >= 256 {
                    since_check = 0;
                    if self.out_of_budget(limits) {
                        self.backtrack(0);
                        return Outcome::Unknown;
                    }
                }
            } else {
                if self.conflicts_since_restart >= 50 && self.lbd_fast * 0.8 > self.lbd_slow {
                    self.stats.restarts += 1;
                    self.conflicts_since_restart = 0;
                    self.backtrack(0);
                }
                if self.stats.conflicts >= self.next_reduce {
                    self.next_reduce = self.stats.conflicts + 2000 + 300 * self.reduce_count;
                    self.reduce_db();
                }
                match self.pick_branch() {
                    None => {
                        let model = (0..self.num_vars).map(|v| self.vals[2 * v] == 1).collect();
                        self.backtrack(0);
                        return Outcome::Sat(model);
                    }
                    Some(l) => {
                        self.stats.decisions += 1;
                        self.trail_lim.push(self.trail.len());
                        self.assign(l, NO_REASON);
                    }
                }
            }
        }
    }
}
