//! Isomorphism of state-relabeled transition systems.
//!
//! A candidate bijection must preserve state labels, map edges onto edges
//! with the same label name, and send initial state to initial state when
//! both systems have one. The search first refines colors on the disjoint
//! union of both systems (label, then successor/predecessor color
//! multisets) and only backtracks inside color classes. Rooted deterministic
//! pairs skip the search and walk both systems in lockstep.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::ts::{is_deterministic, StateRelabeledTS, TransitionSystem};

/// Returns `g` with `g[s]` the image of state `s` of `a` in `b`, or `None`
/// when the systems are not isomorphic.
pub fn isomorphic(a: &StateRelabeledTS, b: &StateRelabeledTS) -> Option<Vec<usize>> {
    let (ta, tb) = (&a.system, &b.system);
    if ta.num_states() != tb.num_states()
        || ta.edges().len() != tb.edges().len()
        || ta.labels() != tb.labels()
        || ta.initial().is_some() != tb.initial().is_some()
    {
        return None;
    }
    let mut la: Vec<&str> = a.labeling.values().iter().map(|s| s.as_str()).collect();
    let mut lb: Vec<&str> = b.labeling.values().iter().map(|s| s.as_str()).collect();
    la.sort_unstable();
    lb.sort_unstable();
    if la != lb {
        return None;
    }
    if let (Some(ia), Some(ib)) = (ta.initial(), tb.initial()) {
        if a.label_of(ia) != b.label_of(ib) {
            return None;
        }
        if is_deterministic(ta) && is_deterministic(tb) {
            if let Some(m) = rooted_walk(a, b, ia, ib) {
                return Some(m);
            }
            // Unreachable states may still be matched by search.
            if ta.reachable_from([ia]).len() == ta.num_states() {
                return None;
            }
        }
    }
    let (ca, cb) = refine_colors(a, b);
    let mut count: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for &c in &ca {
        count.entry(c).or_default().0 += 1;
    }
    for &c in &cb {
        count.entry(c).or_default().1 += 1;
    }
    if count.values().any(|(x, y)| x != y) {
        return None;
    }
    let n = ta.num_states();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&s| (count[&ca[s]].0, s));
    let mut search = Search {
        a: ta,
        b: tb,
        ca: &ca,
        cb: &cb,
        map: alloc::vec![usize::MAX; n],
        used: alloc::vec![false; n],
        in_a: in_edges(ta),
    };
    if let Some(ia) = ta.initial() {
        let ib = tb.initial().unwrap();
        if ca[ia] != cb[ib] {
            return None;
        }
        search.map[ia] = ib;
        search.used[ib] = true;
        if !search.consistent(ia) {
            return None;
        }
        order.retain(|&s| s != ia);
    }
    if search.extend(&order, 0) {
        Some(search.map)
    } else {
        None
    }
}

/// True iff `map` is an isomorphism from `a` to `b`.
pub fn is_isomorphism(a: &StateRelabeledTS, b: &StateRelabeledTS, map: &[usize]) -> bool {
    let (ta, tb) = (&a.system, &b.system);
    if map.len() != ta.num_states() || ta.num_states() != tb.num_states() {
        return false;
    }
    let mut hit = alloc::vec![false; tb.num_states()];
    for &m in map {
        if m >= hit.len() || hit[m] {
            return false;
        }
        hit[m] = true;
    }
    if (0..map.len()).any(|s| a.label_of(s) != b.label_of(map[s])) {
        return false;
    }
    match (ta.initial(), tb.initial()) {
        (Some(x), Some(y)) if map[x] != y => return false,
        (Some(_), None) | (None, Some(_)) => return false,
        _ => {}
    }
    if ta.edges().len() != tb.edges().len() {
        return false;
    }
    ta.edges().iter().all(|e| {
        tb.label_index(ta.label_name(e.label))
            .is_some_and(|l| tb.has_edge(map[e.from], l, map[e.to]))
    })
}

fn rooted_walk(
    a: &StateRelabeledTS,
    b: &StateRelabeledTS,
    ia: usize,
    ib: usize,
) -> Option<Vec<usize>> {
    let (ta, tb) = (&a.system, &b.system);
    let n = ta.num_states();
    let mut map = alloc::vec![usize::MAX; n];
    let mut back = alloc::vec![usize::MAX; n];
    map[ia] = ib;
    back[ib] = ia;
    let mut stack = alloc::vec![ia];
    while let Some(s) = stack.pop() {
        let t = map[s];
        if a.label_of(s) != b.label_of(t) {
            return None;
        }
        let ea = ta.out_edges(s);
        let eb = tb.out_edges(t);
        if ea.len() != eb.len() {
            return None;
        }
        // Label indices agree because label name lists are equal.
        for (x, y) in ea.iter().zip(eb) {
            if x.label != y.label {
                return None;
            }
            match (map[x.to], back[y.to]) {
                (usize::MAX, usize::MAX) => {
                    map[x.to] = y.to;
                    back[y.to] = x.to;
                    stack.push(x.to);
                }
                (m, _) if m == y.to => {}
                _ => return None,
            }
        }
    }
    if map.contains(&usize::MAX) {
        return None;
    }
    Some(map)
}

fn in_edges(ts: &TransitionSystem) -> Vec<Vec<(usize, usize)>> {
    let mut v = alloc::vec![Vec::new(); ts.num_states()];
    for e in ts.edges() {
        v[e.to].push((e.label, e.from));
    }
    v
}

fn refine_colors(a: &StateRelabeledTS, b: &StateRelabeledTS) -> (Vec<usize>, Vec<usize>) {
    let init = |x: &StateRelabeledTS, s: usize| -> (usize, Vec<usize>) {
        (usize::from(x.system.initial() == Some(s)), Vec::new())
    };
    // Seed colors from (label string, initial flag).
    let mut keys: BTreeMap<(&str, usize), usize> = BTreeMap::new();
    for x in [a, b] {
        for s in 0..x.system.num_states() {
            let k = (x.label_of(s), init(x, s).0);
            let next = keys.len();
            keys.entry(k).or_insert(next);
        }
    }
    let seed = |x: &StateRelabeledTS| -> Vec<usize> {
        (0..x.system.num_states())
            .map(|s| keys[&(x.label_of(s), init(x, s).0)])
            .collect()
    };
    let (mut ca, mut cb) = (seed(a), seed(b));
    let (ia, ib) = (in_edges(&a.system), in_edges(&b.system));
    let mut classes = keys.len();
    loop {
        let sig = |ts: &TransitionSystem, ins: &[Vec<(usize, usize)>], c: &[usize], s: usize| {
            let mut out: Vec<(usize, usize)> =
                ts.out_edges(s).iter().map(|e| (e.label, c[e.to])).collect();
            out.sort_unstable();
            let mut inc: Vec<(usize, usize)> = ins[s].iter().map(|&(l, f)| (l, c[f])).collect();
            inc.sort_unstable();
            (c[s], out, inc)
        };
        let sa: Vec<_> = (0..ca.len()).map(|s| sig(&a.system, &ia, &ca, s)).collect();
        let sb: Vec<_> = (0..cb.len()).map(|s| sig(&b.system, &ib, &cb, s)).collect();
        let mut ids = BTreeMap::new();
        for s in sa.iter().chain(sb.iter()) {
            let next = ids.len();
            ids.entry(s).or_insert(next);
        }
        let na: Vec<usize> = sa.iter().map(|s| ids[s]).collect();
        let nb: Vec<usize> = sb.iter().map(|s| ids[s]).collect();
        let done = ids.len() == classes;
        classes = ids.len();
        ca = na;
        cb = nb;
        if done {
            return (ca, cb);
        }
    }
}

struct Search<'a> {
    a: &'a TransitionSystem,
    b: &'a TransitionSystem,
    ca: &'a [usize],
    cb: &'a [usize],
    map: Vec<usize>,
    used: Vec<bool>,
    in_a: Vec<Vec<(usize, usize)>>,
}

impl Search<'_> {
    fn consistent(&self, s: usize) -> bool {
        let m = self.map[s];
        let out_ok = self.a.out_edges(s).iter().all(|e| {
            let t = self.map[e.to];
            t == usize::MAX || self.b.has_edge(m, e.label, t)
        });
        let in_ok = self.in_a[s].iter().all(|&(l, f)| {
            let t = self.map[f];
            t == usize::MAX || self.b.has_edge(t, l, m)
        });
        out_ok && in_ok
    }

    fn extend(&mut self, order: &[usize], i: usize) -> bool {
        let Some(&s) = order.get(i) else {
            return true;
        };
        for t in 0..self.b.num_states() {
            if self.used[t] || self.cb[t] != self.ca[s] {
                continue;
            }
            self.map[s] = t;
            self.used[t] = true;
            if self.consistent(s) && self.extend(order, i + 1) {
                return true;
            }
            self.used[t] = false;
            self.map[s] = usize::MAX;
        }
        false
    }
}
