//! Worked systems: the red-green gates, the L-shaped corridor, the binary
//! toy model and the insufficient labeling of a history tree.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{CoupledError, HistError};
use crate::external::ExternalSystem;
use crate::filters::NdetIState;
use crate::history::{letter, HistoryState, HistoryTree, NO_ACTION};
use crate::task::{TaskMachine, FAIL, PENDING, SUCCESS};
use crate::ts::{Labeling, StateRelabeledTS, TsBuilder};

fn s(x: &str) -> String {
    x.to_string()
}

fn outputs(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(a, b)| (s(a), s(b))).collect()
}

/// Observation-only task for the rotating robot: crossing colors must
/// alternate. `ok_*` remember the last color, `bad_*` are absorbing.
pub fn red_green_filter_task() -> TaskMachine {
    let states = ["bad_g", "bad_r", "ok_g", "ok_r", "start"];
    let delta = [
        ("start", "r", "ok_r"),
        ("start", "g", "ok_g"),
        ("ok_r", "g", "ok_g"),
        ("ok_r", "r", "bad_r"),
        ("ok_g", "r", "ok_r"),
        ("ok_g", "g", "bad_g"),
        ("bad_r", "r", "bad_r"),
        ("bad_r", "g", "bad_g"),
        ("bad_g", "r", "bad_r"),
        ("bad_g", "g", "bad_g"),
    ];
    let out = outputs(&[
        ("start", SUCCESS),
        ("ok_r", SUCCESS),
        ("ok_g", SUCCESS),
        ("bad_r", FAIL),
        ("bad_g", FAIL),
    ]);
    TaskMachine::new(
        &[NO_ACTION],
        &["g", "r"],
        &states,
        delta.iter().map(|(a, y, b)| (s(a), s(NO_ACTION), s(y), s(b))),
        &out,
        "start",
    )
    .unwrap()
}

/// The four-state filter: `ι0`, `ιr`, `ιg` consistent, `ιnt` not.
pub fn red_green_filter_reference() -> StateRelabeledTS {
    let (r, g) = (letter(NO_ACTION, "r"), letter(NO_ACTION, "g"));
    let mut b = TsBuilder::new();
    b.initial("ι0");
    for (from, l, to) in [
        ("ι0", &r, "ιr"),
        ("ι0", &g, "ιg"),
        ("ιr", &g, "ιg"),
        ("ιr", &r, "ιnt"),
        ("ιg", &r, "ιr"),
        ("ιg", &g, "ιnt"),
        ("ιnt", &r, "ιnt"),
        ("ιnt", &g, "ιnt"),
    ] {
        b.edge(from, l, to);
    }
    let ts = b.build();
    let labeling = Labeling::from_fn(&ts, |_, n| s(if n == "ιnt" { FAIL } else { SUCCESS }));
    StateRelabeledTS::new(ts, labeling).unwrap()
}

pub const U_GREEN: &str = "u_g";
pub const U_RED: &str = "u_r";

/// The annulus with `n` regions. Gate `i` joins regions `i` and `i+1 mod n`
/// and is green iff `i` is even. States are `region-color`, the color of the
/// last crossed gate, which is also what the sensor reports. `u_g` crosses
/// the green gate of the current region and `u_r` the red one.
pub fn red_green_annulus(n: usize) -> Result<ExternalSystem, CoupledError> {
    if n < 2 || n % 2 != 0 {
        return Err(CoupledError::Invalid(format!("annulus needs an even number of regions, got {n}")));
    }
    let mut states = Vec::new();
    for i in 0..n {
        for c in ["g", "r"] {
            states.push(format!("{i}-{c}"));
        }
    }
    let color = |gate: usize| if gate % 2 == 0 { "g" } else { "r" };
    ExternalSystem::from_fn(
        states,
        [s(U_GREEN), s(U_RED)],
        |x, u| {
            let i: usize = x.split('-').next().unwrap().parse().unwrap();
            let want = if u == U_GREEN { "g" } else { "r" };
            // Region i sits between gates i-1 and i.
            let (left, right) = ((i + n - 1) % n, i);
            if color(right) == want {
                format!("{}-{want}", (i + 1) % n)
            } else {
                debug_assert_eq!(color(left), want);
                format!("{}-{want}", (i + n - 1) % n)
            }
        },
        |x| s(x.rsplit('-').next().unwrap()),
    )
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Progress {
    Start,
    /// Last color and the length of the alternating run ending in it.
    Run(String, usize),
    Done,
    Failed,
}

fn progress_step(p: &Progress, y: &str, n: usize) -> Progress {
    match p {
        Progress::Start => {
            if n <= 1 {
                Progress::Done
            } else {
                Progress::Run(s(y), 1)
            }
        }
        Progress::Run(last, k) if last != y => {
            if k + 1 >= n {
                Progress::Done
            } else {
                Progress::Run(s(y), k + 1)
            }
        }
        Progress::Run(..) => Progress::Failed,
        Progress::Done => Progress::Done,
        Progress::Failed => Progress::Failed,
    }
}

fn progress_output(p: &Progress) -> String {
    s(match p {
        Progress::Done => SUCCESS,
        Progress::Failed => FAIL,
        _ => PENDING,
    })
}

fn progress_name(p: &Progress) -> String {
    match p {
        Progress::Start => s("start"),
        Progress::Run(c, k) => format!("{c}{k}"),
        Progress::Done => s("done"),
        Progress::Failed => s("failed"),
    }
}

/// Consistent crossing around the annulus: success after `n` alternating
/// observations, absorbing failure on two equal ones in a row.
pub fn red_green_plan_task(n: usize) -> TaskMachine {
    TaskMachine::explore(
        &[U_GREEN, U_RED],
        &["g", "r"],
        Progress::Start,
        |p, _, y| progress_step(p, y, n),
        progress_output,
        progress_name,
    )
    .unwrap()
}

/// The plan: cross the gate of the color not just seen.
pub fn red_green_action(last_observation: Option<&str>) -> &'static str {
    match last_observation {
        None => NO_ACTION,
        Some("r") => U_GREEN,
        Some(_) => U_RED,
    }
}

/// [`red_green_action`] as an I-map on histories.
pub fn red_green_policy(h: &HistoryState) -> Option<String> {
    Some(s(red_green_action(h.last_observation())))
}

/// The plan over a regular history encoding: the task progress together
/// with the last observation, labeled by the action prescribed.
pub fn red_green_policy_machine(n: usize) -> StateRelabeledTS {
    type Key = (Progress, Option<String>);
    let m = TaskMachine::explore(
        &[U_GREEN, U_RED],
        &["g", "r"],
        (Progress::Start, None),
        |(p, _): &Key, _, y| (progress_step(p, y, n), Some(s(y))),
        |(_, last): &Key| s(red_green_action(last.as_deref())),
        |(p, last): &Key| format!("{}/{}", progress_name(p), last.as_deref().unwrap_or("-")),
    )
    .unwrap();
    m.reachable_srts()
}

/// The three-state executor of the plan over observations, labeled by
/// its actions.
pub fn red_green_plan_reference() -> StateRelabeledTS {
    let mut b = TsBuilder::new();
    b.initial("ι0");
    for from in ["ι0", "ι1", "ι2"] {
        b.edge(from, "r", "ι1");
        b.edge(from, "g", "ι2");
    }
    let ts = b.build();
    let labeling = Labeling::from_fn(&ts, |_, n| {
        s(match n {
            "ι0" => NO_ACTION,
            "ι1" => U_GREEN,
            _ => U_RED,
        })
    });
    StateRelabeledTS::new(ts, labeling).unwrap()
}

/// Internal system over `U × Y` with `U = Y = {0,1}`, `φ(ι,(u,y)) = |y - u|`,
/// labeled by the policy `π(ι) = ι`. Initial state `0`.
pub fn binary_toy() -> StateRelabeledTS {
    let mut b = TsBuilder::new();
    b.initial("0");
    for i in 0..2u8 {
        for u in 0..2u8 {
            for y in 0..2u8 {
                let to = y.abs_diff(u);
                b.edge(&format!("{i}"), &letter(&format!("{u}"), &format!("{y}")), &format!("{to}"));
            }
        }
    }
    let ts = b.build();
    let labeling = Labeling::identity(&ts);
    StateRelabeledTS::new(ts, labeling).unwrap()
}

pub const RIGHT: &str = "right";
pub const UP: &str = "up";

/// The L-shaped corridor family `E_l`: a horizontal leg from `(0,0)` to
/// `(l1,0)` and a vertical leg up to `(l1,l2)`, for `1 <= l1, l2 <= l`.
/// The sensor reports `1` at the corner and at the end of the corridor.
#[derive(Clone, Debug)]
pub struct Corridor {
    pub l: usize,
    pub ext: ExternalSystem,
    /// Start cell in every environment.
    pub x0: NdetIState,
}

/// `q1-q2@l1xl2`.
pub fn corridor_state(q: (usize, usize), env: (usize, usize)) -> String {
    format!("{}-{}@{}x{}", q.0, q.1, env.0, env.1)
}

/// Inverse of [`corridor_state`].
pub fn parse_corridor_state(name: &str) -> Option<((usize, usize), (usize, usize))> {
    let (q, e) = name.split_once('@')?;
    let (q1, q2) = q.split_once('-')?;
    let (l1, l2) = e.split_once('x')?;
    Some((
        (q1.parse().ok()?, q2.parse().ok()?),
        (l1.parse().ok()?, l2.parse().ok()?),
    ))
}

pub fn corridor(l: usize) -> Result<Corridor, CoupledError> {
    if l == 0 {
        return Err(CoupledError::Invalid(s("corridor bound must be at least 1")));
    }
    let mut states = Vec::new();
    for l1 in 1..=l {
        for l2 in 1..=l {
            for q1 in 0..=l1 {
                states.push(corridor_state((q1, 0), (l1, l2)));
            }
            for q2 in 1..=l2 {
                states.push(corridor_state((l1, q2), (l1, l2)));
            }
        }
    }
    let ext = ExternalSystem::from_fn(
        states,
        [s(RIGHT), s(UP)],
        |x, u| {
            let ((q1, q2), (l1, l2)) = parse_corridor_state(x).unwrap();
            let q = match u {
                RIGHT if q2 == 0 && q1 < l1 => (q1 + 1, 0),
                UP if q1 == l1 && q2 < l2 => (l1, q2 + 1),
                _ => (q1, q2),
            };
            corridor_state(q, (l1, l2))
        },
        |x| {
            let ((q1, q2), (l1, l2)) = parse_corridor_state(x).unwrap();
            s(if (q1, q2) == (l1, 0) || (q1, q2) == (l1, l2) { "1" } else { "0" })
        },
    )?;
    let x0 = (0..ext.num_states())
        .filter(|&x| parse_corridor_state(&ext.states()[x]).unwrap().0 == (0, 0))
        .collect();
    Ok(Corridor { l, ext, x0 })
}

impl Corridor {
    /// Right while the robot is surely on the horizontal leg short of the
    /// corner, up afterwards.
    pub fn policy(&self, set: &NdetIState) -> usize {
        let horizontal = set.iter().all(|&x| {
            let ((q1, q2), (l1, _)) = parse_corridor_state(&self.ext.states()[x]).unwrap();
            q2 == 0 && q1 < l1
        });
        let u = if horizontal { RIGHT } else { UP };
        self.ext.action_index(u).unwrap()
    }

    /// The start state in environment `(l1, l2)`.
    pub fn start_in(&self, env: (usize, usize)) -> Option<usize> {
        self.ext.state_index(&corridor_state((0, 0), env))
    }
}

/// Labels `l1` and `l2` on a history tree: `l1` for stage `k > 3` histories
/// whose actions all equal `u`, `l2` otherwise.
pub fn insufficient_labeling(u: &str) -> impl Fn(&HistoryState) -> Option<String> + '_ {
    move |h| {
        let uniform = h.actions().skip(1).all(|a| a == u);
        Some(s(if h.stage() > 3 && uniform { "l1" } else { "l2" }))
    }
}

/// Three consecutive histories `η2, η3, η4` applying `u` and observing `y`
/// throughout: `η2 → η3` stays in `l2`, `η3 → η4` enters `l1`, over the
/// same letter.
pub fn insufficient_witness(tree: &HistoryTree, u: &str, y: &str) -> Result<[usize; 3], HistError> {
    let mut h = HistoryState::root(&tree.initials()[0]).extended(NO_ACTION, y);
    let mut out = [0; 3];
    for k in 2..=4 {
        h = h.extended(u, y);
        out[k - 2] = tree.node_of(&h).ok_or(HistError::TooShallow(tree.depth()))?;
    }
    Ok(out)
}
