//! Task machines: finite, complete, output-labeled machines over letters
//! `(u, y)` that compute a task labeling of finite histories.
//!
//! Outputs are free-form strings; the built-in tasks use [`SUCCESS`],
//! [`FAIL`] and [`PENDING`].

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{HistError, TsError};
use crate::external::ExternalSystem;
use crate::history::{check_name, letter, HistoryState, HistoryTree, IMap, NO_ACTION};
use crate::ts::{Labeling, StateRelabeledTS, TsBuilder};

pub const SUCCESS: &str = "1";
pub const FAIL: &str = "0";
pub const PENDING: &str = "⊥";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskMachine {
    alphabet_u: Vec<String>,
    alphabet_y: Vec<String>,
    /// `alphabet_u` plus [`NO_ACTION`], sorted; letter `(i, j)` has index
    /// `i * |Y| + j`.
    letter_u: Vec<String>,
    states: Vec<String>,
    delta: Vec<Vec<Option<usize>>>,
    output: Vec<String>,
    initial: usize,
}

fn sorted_set<S: AsRef<str>>(xs: &[S]) -> Vec<String> {
    xs.iter()
        .map(|x| x.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

impl TaskMachine {
    /// Builds and validates a machine. `delta` lists `(s, u, y, s')`.
    pub fn new<S: AsRef<str>>(
        alphabet_u: &[S],
        alphabet_y: &[S],
        states: &[S],
        delta: impl IntoIterator<Item = (String, String, String, String)>,
        output: &BTreeMap<String, String>,
        initial: &str,
    ) -> Result<Self, HistError> {
        let alphabet_u = sorted_set(alphabet_u);
        let alphabet_y = sorted_set(alphabet_y);
        if alphabet_u.is_empty() || alphabet_y.is_empty() {
            return Err(HistError::EmptyAlphabet);
        }
        for u in &alphabet_u {
            if u != NO_ACTION {
                check_name(u)?;
            }
        }
        for y in &alphabet_y {
            check_name(y)?;
        }
        let mut letter_u = alphabet_u.clone();
        if !letter_u.iter().any(|u| u == NO_ACTION) {
            letter_u.push(NO_ACTION.to_string());
            letter_u.sort();
        }
        let states = sorted_set(states);
        let find = |n: &str| {
            states
                .binary_search_by(|s| s.as_str().cmp(n))
                .map_err(|_| HistError::UnknownMachineState(n.to_string()))
        };
        let ny = alphabet_y.len();
        let mut table = alloc::vec![alloc::vec![None; letter_u.len() * ny]; states.len()];
        for (s, u, y, t) in delta {
            let (si, ti) = (find(&s)?, find(&t)?);
            let ui = letter_u.binary_search(&u).map_err(|_| HistError::NotALetter(letter(&u, &y)))?;
            let yi = alphabet_y.binary_search(&y).map_err(|_| HistError::NotALetter(letter(&u, &y)))?;
            let slot = &mut table[si][ui * ny + yi];
            if slot.is_some_and(|old| old != ti) {
                return Err(TsError::Nondeterministic {
                    state: s,
                    label: letter(&u, &y),
                }
                .into());
            }
            *slot = Some(ti);
        }
        let initial = find(initial)?;
        let mut out = Vec::with_capacity(states.len());
        for s in &states {
            out.push(output.get(s).cloned().ok_or_else(|| HistError::MissingOutput(s.clone()))?);
        }
        for k in output.keys() {
            find(k)?;
        }
        let m = TaskMachine {
            alphabet_u,
            alphabet_y,
            letter_u,
            states,
            delta: table,
            output: out,
            initial,
        };
        m.check_complete()?;
        Ok(m)
    }

    /// Breadth-first construction from a step function on arbitrary keys.
    /// `name` must be injective on the keys reached.
    pub fn explore<K: Ord + Clone, S: AsRef<str>>(
        alphabet_u: &[S],
        alphabet_y: &[S],
        init: K,
        step: impl Fn(&K, &str, &str) -> K,
        output: impl Fn(&K) -> String,
        name: impl Fn(&K) -> String,
    ) -> Result<Self, HistError> {
        let us = sorted_set(alphabet_u);
        let ys = sorted_set(alphabet_y);
        let mut ids: BTreeMap<K, usize> = BTreeMap::new();
        let mut keys: Vec<K> = Vec::new();
        let mut delta = Vec::new();
        let mut queue = VecDeque::new();
        ids.insert(init.clone(), 0);
        keys.push(init);
        queue.push_back(0usize);
        while let Some(i) = queue.pop_front() {
            let mut letters: Vec<&str> = us.iter().map(String::as_str).collect();
            if i == 0 && !letters.contains(&NO_ACTION) {
                letters.push(NO_ACTION);
            }
            for u in letters {
                for y in &ys {
                    let next = step(&keys[i], u, y);
                    let j = match ids.get(&next) {
                        Some(&j) => j,
                        None => {
                            let j = keys.len();
                            ids.insert(next.clone(), j);
                            keys.push(next);
                            queue.push_back(j);
                            j
                        }
                    };
                    delta.push((i, u.to_string(), y.clone(), j));
                }
            }
        }
        let names: Vec<String> = keys.iter().map(&name).collect();
        if names.iter().collect::<BTreeSet<_>>().len() != names.len() {
            let mut seen = BTreeSet::new();
            let dup = names.iter().find(|n| !seen.insert(*n)).unwrap();
            return Err(TsError::DuplicateState(dup.clone()).into());
        }
        let output: BTreeMap<String, String> = keys
            .iter()
            .zip(&names)
            .map(|(k, n)| (n.clone(), output(k)))
            .collect();
        TaskMachine::new(
            &us,
            &ys,
            &names,
            delta
                .into_iter()
                .map(|(i, u, y, j)| (names[i].clone(), u, y, names[j].clone())),
            &output,
            &names[0],
        )
    }

    fn check_complete(&self) -> Result<(), HistError> {
        for s in 0..self.states.len() {
            for u in &self.alphabet_u {
                for y in &self.alphabet_y {
                    if self.step(s, u, y).is_none() {
                        return Err(self.incomplete(s, u, y));
                    }
                }
            }
        }
        for y in &self.alphabet_y {
            if self.step(self.initial, NO_ACTION, y).is_none() {
                return Err(self.incomplete(self.initial, NO_ACTION, y));
            }
        }
        Ok(())
    }

    fn incomplete(&self, s: usize, u: &str, y: &str) -> HistError {
        HistError::IncompleteMachine {
            state: self.states[s].clone(),
            letter: letter(u, y),
        }
    }

    pub fn alphabet_u(&self) -> &[String] {
        &self.alphabet_u
    }

    pub fn alphabet_y(&self) -> &[String] {
        &self.alphabet_y
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn output(&self, s: usize) -> &str {
        &self.output[s]
    }

    pub fn state_index(&self, n: &str) -> Option<usize> {
        self.states.binary_search_by(|s| s.as_str().cmp(n)).ok()
    }

    pub fn step(&self, s: usize, u: &str, y: &str) -> Option<usize> {
        let ui = self.letter_u.binary_search_by(|x| x.as_str().cmp(u)).ok()?;
        let yi = self.alphabet_y.binary_search_by(|x| x.as_str().cmp(y)).ok()?;
        self.delta[s][ui * self.alphabet_y.len() + yi]
    }

    /// All defined transitions `(s, u, y, s')`.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, &str, &str, usize)> + '_ {
        let ny = self.alphabet_y.len();
        self.delta.iter().enumerate().flat_map(move |(s, row)| {
            row.iter().enumerate().filter_map(move |(l, t)| {
                t.map(|t| (s, self.letter_u[l / ny].as_str(), self.alphabet_y[l % ny].as_str(), t))
            })
        })
    }

    /// Runs `pairs` from `s`.
    pub fn run_from<'a>(
        &self,
        s: usize,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<usize, HistError> {
        let mut cur = s;
        for (u, y) in pairs {
            cur = self.step(cur, u, y).ok_or_else(|| self.incomplete(cur, u, y))?;
        }
        Ok(cur)
    }

    /// The state reached on `h` from the initial state.
    pub fn run(&self, h: &HistoryState) -> Result<usize, HistError> {
        self.run_from(
            self.initial,
            h.pairs.iter().map(|(u, y)| (u.as_str(), y.as_str())),
        )
    }

    /// The machine as a labeled transition system over letters.
    pub fn to_srts(&self) -> StateRelabeledTS {
        let mut b = TsBuilder::new();
        for s in &self.states {
            b.state(s.clone());
        }
        for (s, u, y, t) in self.transitions() {
            b.edge(&self.states[s], &letter(u, y), &self.states[t]);
        }
        b.initial(&self.states[self.initial]);
        let ts = b.build();
        let labeling = Labeling::from_fn(&ts, |i, _| self.output[i].clone());
        StateRelabeledTS { system: ts, labeling }
    }

    /// [`TaskMachine::to_srts`] restricted to states reachable from the
    /// initial state.
    pub fn reachable_srts(&self) -> StateRelabeledTS {
        let full = self.to_srts();
        let keep = full.system.reachable_from(full.system.initial());
        let sub = full.system.induced(&keep);
        let labeling = Labeling::from_values(keep.iter().map(|&s| full.labeling.get(s).to_string()).collect());
        StateRelabeledTS { system: sub, labeling }
    }
}

impl IMap for TaskMachine {
    fn label(&self, h: &HistoryState) -> Option<String> {
        self.run(h).ok().map(|s| self.output[s].clone())
    }

    fn label_tree(&self, tree: &HistoryTree) -> Result<Labeling, HistError> {
        let states = tree.fold(
            |_| Some(self.initial),
            |s, u, y| s.and_then(|s| self.step(s, u, y)),
        );
        let values = states
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                s.map(|s| self.output[s].clone())
                    .ok_or_else(|| HistError::PartialMap(tree.history(i).name()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Labeling::from_values(values))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Status {
    Pending,
    Success,
    Fail,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Reach,
    Avoid,
}

fn ids<S: AsRef<str>>(ext: &ExternalSystem, xs: &[S]) -> Result<BTreeSet<usize>, HistError> {
    xs.iter()
        .map(|x| {
            ext.state_index(x.as_ref())
                .ok_or_else(|| HistError::UnknownMachineState(x.as_ref().to_string()))
        })
        .collect()
}

/// Set filter over `(x, status)` pairs; `None` is the empty history.
fn task_machine(
    ext: &ExternalSystem,
    goal: &BTreeSet<usize>,
    bad: &BTreeSet<usize>,
    mode: Mode,
) -> Result<TaskMachine, HistError> {
    type Key = Option<BTreeSet<(usize, Status)>>;
    let advance = |st: Status, x: usize| match st {
        Status::Pending if bad.contains(&x) => Status::Fail,
        Status::Pending if goal.contains(&x) => Status::Success,
        s => s,
    };
    let obs_index = |y: &str| ext.observation_index(y);
    let step = |k: &Key, u: &str, y: &str| -> Key {
        let Some(yi) = obs_index(y) else {
            return Some(BTreeSet::new());
        };
        let seen = |x: usize| ext.possible_observations(x).contains(&yi);
        match k {
            None => Some(
                ext.initial()
                    .iter()
                    .filter(|&&x| u == NO_ACTION && seen(x))
                    .map(|&x| (x, advance(Status::Pending, x)))
                    .collect(),
            ),
            Some(set) => {
                let Some(ui) = ext.action_index(u) else {
                    return Some(BTreeSet::new());
                };
                Some(
                    set.iter()
                        .flat_map(|&(x, st)| ext.image(x, ui).into_iter().map(move |t| (t, st)))
                        .filter(|&(t, _)| seen(t))
                        .map(|(t, st)| (t, advance(st, t)))
                        .collect(),
                )
            }
        }
    };
    // Every consistent trajectory must agree for a decided label; the empty
    // set (no consistent trajectory) is vacuously successful.
    let output = |k: &Key| -> String {
        let Some(set) = k else {
            return PENDING.to_string();
        };
        let good = match mode {
            Mode::Reach => Status::Success,
            Mode::Avoid => Status::Pending,
        };
        if set.iter().all(|&(_, s)| s == good) {
            SUCCESS.to_string()
        } else if set.iter().all(|&(_, s)| s == Status::Fail) {
            FAIL.to_string()
        } else {
            PENDING.to_string()
        }
    };
    let name = |k: &Key| -> String {
        match k {
            None => "start".to_string(),
            Some(set) => {
                let parts: Vec<String> = set
                    .iter()
                    .map(|&(x, s)| {
                        let c = match s {
                            Status::Pending => 'p',
                            Status::Success => 's',
                            Status::Fail => 'f',
                        };
                        format!("{}:{c}", ext.states()[x])
                    })
                    .collect();
                format!("{{{}}}", parts.join(","))
            }
        }
    };
    TaskMachine::explore(ext.actions(), ext.observations(), None, step, output, name)
}

/// Reach some goal state: success once every trajectory consistent with the
/// history has visited the goal.
pub fn build_reach_task<S: AsRef<str>>(ext: &ExternalSystem, goal: &[S]) -> Result<TaskMachine, HistError> {
    let goal = ids(ext, goal)?;
    if goal.is_empty() {
        return Err(HistError::EmptyGoal);
    }
    task_machine(ext, &goal, &BTreeSet::new(), Mode::Reach)
}

/// Never visit a bad state: 1 while no consistent trajectory has visited
/// one, 0 once all have.
pub fn build_avoid_task<S: AsRef<str>>(ext: &ExternalSystem, bad: &[S]) -> Result<TaskMachine, HistError> {
    let bad = ids(ext, bad)?;
    task_machine(ext, &BTreeSet::new(), &bad, Mode::Avoid)
}

/// Reach a goal state without visiting a bad state first. A state in both
/// sets counts as bad.
pub fn build_reach_avoid_task<S: AsRef<str>>(
    ext: &ExternalSystem,
    goal: &[S],
    bad: &[S],
) -> Result<TaskMachine, HistError> {
    let goal = ids(ext, goal)?;
    if goal.is_empty() {
        return Err(HistError::EmptyGoal);
    }
    let bad = ids(ext, bad)?;
    task_machine(ext, &goal, &bad, Mode::Reach)
}
