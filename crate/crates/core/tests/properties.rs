mod common;

use std::collections::{BTreeMap, BTreeSet};

use minbrain_core::coupled::{
    agreeing_starts, backward_reachable_set, minimal_dits_for_policy, rollout, rollout_all, CoupledSystem,
    DisturbanceSource, PolicyEncoding,
};
use minbrain_core::dbi::{alpha, enumerate_test_classes, xi_partition, MooreMachine};
use minbrain_core::external::{DisturbedTables, ExternalSystem, ModelTables};
use minbrain_core::filters::{bayes_filter, bayes_step, ndet_observe, ndet_step, NdetIState};
use minbrain_core::history::{letter, restrict, strong_restrict, project_observations, HistoryState, NO_ACTION};
use minbrain_core::psr::{exact_test_probability, Test};
use minbrain_core::refine::{minimal_sufficient_refinement_ordered, refine_rounds, BlockOrder};
use minbrain_core::task::{build_avoid_task, build_reach_task, TaskMachine};
use minbrain_core::ts::{is_deterministic, quotient, Labeling, StateRelabeledTS, TsBuilder};
use minbrain_core::{is_sufficient, minimal_sufficient_refinement, verify_minimality, Partition};
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::Rng;

fn blocks(p: &Partition) -> Vec<usize> {
    common::canonical(p.block_ids())
}

/// A random policy over letters: a start state taking `((),y)` and
/// states labeled by actions taking every `(u,y)`.
fn random_policy_machine(rng: &mut StdRng, actions: &[String], observations: &[String]) -> StateRelabeledTS {
    let n = rng.random_range(1..=5);
    let name = |i: usize| format!("p{i}");
    let mut b = TsBuilder::new();
    b.initial("start");
    for y in observations {
        b.edge("start", &letter(NO_ACTION, y), &name(rng.random_range(0..n)));
    }
    for i in 0..n {
        for u in actions {
            for y in observations {
                b.edge(&name(i), &letter(u, y), &name(rng.random_range(0..n)));
            }
        }
    }
    let ts = b.build();
    let act: Vec<String> = (0..n).map(|_| actions[rng.random_range(0..actions.len())].clone()).collect();
    let pi = Labeling::from_fn(&ts, |_, s| match s.strip_prefix('p') {
        Some(i) => act[i.parse::<usize>().unwrap()].clone(),
        None => NO_ACTION.to_string(),
    });
    StateRelabeledTS::new(ts, pi).unwrap()
}

/// A random executor over observations: start state plus `n` action states.
fn random_executor(rng: &mut StdRng, ext: &ExternalSystem) -> CoupledSystem {
    let n = rng.random_range(1..=3);
    let mut b = TsBuilder::new();
    b.initial("start");
    for from in std::iter::once("start".to_string()).chain((0..n).map(|i| format!("e{i}"))) {
        for y in ext.observations() {
            b.edge(&from, y, &format!("e{}", rng.random_range(0..n)));
        }
    }
    let ts = b.build();
    let act: Vec<String> = (0..n).map(|_| ext.actions()[rng.random_range(0..ext.actions().len())].clone()).collect();
    let pi = Labeling::from_fn(&ts, |_, s| match s.strip_prefix('e') {
        Some(i) => act[i.parse::<usize>().unwrap()].clone(),
        None => NO_ACTION.to_string(),
    });
    CoupledSystem::new(ext.clone(), ts, pi).unwrap()
}

/// A nondeterministically disturbed system. With `always_two`, every
/// `Θ(x,u)` has both disturbances and `Ψ(x)` a single one.
fn random_disturbed(rng: &mut StdRng, always_two: bool) -> ExternalSystem {
    let n = rng.random_range(1..=4);
    let states: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let actions: Vec<String> = vec!["a".into(), "b".into()];
    let thetas: Vec<String> = vec!["t0".into(), "t1".into()];
    let psis: Vec<String> = if always_two { vec!["p0".into()] } else { vec!["p0".into(), "p1".into()] };
    let mut tables = DisturbedTables {
        thetas: thetas.clone(),
        psis: psis.clone(),
        ..Default::default()
    };
    let mut theta = BTreeMap::new();
    let mut psi = BTreeMap::new();
    let pick = |rng: &mut StdRng, names: &[String]| -> Vec<String> {
        let v: Vec<String> = names.iter().filter(|_| rng.random_bool(0.5)).cloned().collect();
        if v.is_empty() {
            vec![names[0].clone()]
        } else {
            v
        }
    };
    for x in &states {
        for u in &actions {
            for t in &thetas {
                tables
                    .f
                    .insert((x.clone(), u.clone(), t.clone()), states[rng.random_range(0..n)].clone());
            }
            let set = if always_two { thetas.clone() } else { pick(rng, &thetas) };
            theta.insert((x.clone(), u.clone()), set);
        }
        for p in &psis {
            tables.h.insert((x.clone(), p.clone()), format!("y{}", rng.random_range(0..2)));
        }
        psi.insert(x.clone(), pick(rng, &psis));
    }
    ExternalSystem::disturbed(states, actions, &tables, &ModelTables::Nondeterministic { theta, psi }).unwrap()
}

/// The history of observations and actions along a plain trajectory.
fn history_of(ext: &ExternalSystem, x0: usize, us: &[usize]) -> (HistoryState, Vec<usize>) {
    let mut xs = vec![x0];
    let mut h = HistoryState::model_free().extended(NO_ACTION, &ext.observations()[ext.h(x0).unwrap()]);
    for &u in us {
        let x = ext.f(*xs.last().unwrap(), u).unwrap();
        xs.push(x);
        h = h.extended(&ext.actions()[u], &ext.observations()[ext.h(x).unwrap()]);
    }
    (h, xs)
}

/// Label of a reach/avoid task from the consistent trajectories directly.
fn set_task_label(ext: &ExternalSystem, x0: usize, us: &[usize], marked: &BTreeSet<usize>, reach: bool) -> &'static str {
    let (_, truth) = history_of(ext, x0, us);
    let ys: Vec<usize> = truth.iter().map(|&x| ext.h(x).unwrap()).collect();
    let hits: Vec<bool> = (0..ext.num_states())
        .filter_map(|s| {
            let (_, xs) = history_of(ext, s, us);
            let same = xs.iter().map(|&x| ext.h(x).unwrap()).eq(ys.iter().copied());
            same.then(|| xs.iter().any(|x| marked.contains(x)))
        })
        .collect();
    let good = |hit: bool| if reach { hit } else { !hit };
    if hits.iter().all(|&h| good(h)) {
        "1"
    } else if !reach && hits.iter().all(|&h| h) {
        "0"
    } else {
        "⊥"
    }
}

/// Whether some action sequence of length `≤ depth` from `x` produces a
/// history the task labels `1`.
fn succeeds_within(ext: &ExternalSystem, task: &TaskMachine, x: usize, depth: usize) -> bool {
    fn go(ext: &ExternalSystem, task: &TaskMachine, x: usize, m: usize, left: usize) -> bool {
        if task.output(m) == "1" {
            return true;
        }
        left > 0
            && (0..ext.actions().len()).any(|u| {
                let x2 = ext.f(x, u).unwrap();
                let m2 = task
                    .step(m, &ext.actions()[u], &ext.observations()[ext.h(x2).unwrap()])
                    .unwrap();
                go(ext, task, x2, m2, left - 1)
            })
    }
    let m = task
        .step(task.initial(), NO_ACTION, &ext.observations()[ext.h(x).unwrap()])
        .unwrap();
    go(ext, task, x, m, depth)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sufficiency_iff_deterministic_quotient(seed in any::<u64>()) {
        let srts = common::random_full_system(&mut common::rng(seed));
        prop_assert_eq!(is_sufficient(&srts).is_ok(), is_deterministic(&quotient(&srts)));
        prop_assert_eq!(is_sufficient(&srts).is_ok(), common::sufficient(&srts.system, srts.labeling.partition().block_ids()));
    }

    #[test]
    fn msr_matches_lattice_on_full_systems(seed in any::<u64>()) {
        let srts = common::random_full_system(&mut common::rng(seed));
        let r = minimal_sufficient_refinement(&srts).unwrap();
        prop_assert_eq!(Some(blocks(&r.partition)), common::lattice_msr(&srts));
        prop_assert!(verify_minimality(&srts, &r.partition));
        let desc = minimal_sufficient_refinement_ordered(&srts, BlockOrder::Descending).unwrap();
        prop_assert_eq!(desc.partition, r.partition.clone());
        let n = srts.system.num_states();
        prop_assert_eq!(refine_rounds(&srts, n).unwrap(), r.partition);
    }

    #[test]
    fn msr_on_partial_systems_is_sufficient_refinement(seed in any::<u64>(), density in 0.2f64..1.0) {
        let mut rng = common::rng(seed);
        let (n, k, v) = (rng.random_range(1..=8), rng.random_range(1..=3), rng.random_range(1..=3));
        let srts = common::random_system(&mut rng, n, k, density, v);
        let r = minimal_sufficient_refinement(&srts).unwrap();
        let b = blocks(&r.partition);
        prop_assert!(common::sufficient(&srts.system, &b));
        prop_assert!(common::refines(&b, srts.labeling.partition().block_ids()));
        prop_assert!(is_deterministic(&quotient(&srts.relabel_by(&r.partition))));
        // A missing successor splits like a distinct value: the result is the
        // lattice MSR once labels also record the enabled edge labels.
        let sys = &srts.system;
        let enabled = Labeling::from_values(
            (0..n)
                .map(|s| {
                    let ls: Vec<String> = (0..k).filter(|&l| common::succ(sys, s, l).is_some()).map(|l| l.to_string()).collect();
                    format!("{}/{}", srts.label_of(s), ls.join(","))
                })
                .collect(),
        );
        let widened = StateRelabeledTS::new(sys.clone(), enabled).unwrap();
        prop_assert_eq!(Some(b), common::lattice_msr(&widened));
    }

    #[test]
    fn restriction_keeps_only_policy_edges(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let actions = vec!["a".to_string(), "b".to_string()];
        let observations = vec!["0".to_string(), "1".to_string()];
        let pm = random_policy_machine(&mut rng, &actions, &observations);
        let r = restrict(&pm.system, &pm.labeling).unwrap();
        prop_assert!(r.edges().len() <= pm.system.edges().len());
        for e in r.edges() {
            prop_assert!(pm.system.has_edge(e.from, e.label, e.to));
            let (u, _) = minbrain_core::history::parse_letter(r.label_name(e.label)).unwrap();
            prop_assert_eq!(u, pm.labeling.get(e.from));
        }
        let strong = strong_restrict(&pm.system, &pm.labeling).unwrap();
        prop_assert_eq!(strong, project_observations(&r).unwrap());
        // One observation edge per state and observation after restriction.
        let exec = strong_restrict(&pm.system, &pm.labeling).unwrap();
        prop_assert!(is_deterministic(&exec));
        for s in 0..exec.num_states() {
            prop_assert_eq!(exec.out_edges(s).len(), observations.len());
        }
    }

    #[test]
    fn minimal_executor_replays_the_policy(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let ext = common::random_moore(&mut rng, 5);
        let pm = random_policy_machine(&mut rng, ext.actions(), ext.observations());
        let m = minimal_dits_for_policy(PolicyEncoding::Regular(&pm)).unwrap();
        prop_assert!(m.executor.system.num_states() <= pm.system.num_states());
        let full = CoupledSystem::new(
            ext.clone(),
            strong_restrict(&pm.system, &pm.labeling).unwrap(),
            pm.labeling.clone(),
        )
        .unwrap();
        let small = m.couple(ext.clone()).unwrap();
        let all: BTreeSet<usize> = (0..ext.num_states()).collect();
        prop_assert_eq!(agreeing_starts(&full, &small, 8).unwrap(), all);
    }

    #[test]
    fn dbi_classes_and_alpha(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let ext = common::random_moore(&mut rng, 6);
        let m = MooreMachine::new(ext.clone(), 0).unwrap();
        let classes = enumerate_test_classes(&m);
        let n = ext.num_states();
        // Success functions of tests by number of actions, until a level
        // brings nothing new.
        let mut level: BTreeSet<Vec<bool>> = (0..ext.observations().len())
            .map(|y| (0..n).map(|x| ext.h(x).unwrap() == y).collect())
            .collect();
        let mut direct = BTreeSet::new();
        while !level.is_subset(&direct) {
            direct.extend(level.iter().cloned());
            level = level
                .iter()
                .flat_map(|s| (0..ext.actions().len()).map(move |u| (s, u)))
                .map(|(s, u)| (0..n).map(|x| s[ext.f(x, u).unwrap()]).collect())
                .collect();
        }
        let found: BTreeSet<Vec<bool>> = classes.iter().map(|c| c.bits.clone()).collect();
        prop_assert_eq!(found.len(), classes.len());
        prop_assert_eq!(found, direct);
        for u in 0..ext.actions().len() {
            let a = alpha(&m, &classes, u).unwrap();
            for (k, c) in classes.iter().enumerate() {
                for x in 0..n {
                    prop_assert_eq!(classes[a[k]].bits[x], c.bits[ext.f(x, u).unwrap()]);
                }
            }
        }
        let msr = minimal_sufficient_refinement(&m.to_srts()).unwrap();
        prop_assert_eq!(xi_partition(&m, &classes), msr.partition);
    }

    #[test]
    fn bayes_posteriors_are_normalized(seed in any::<u64>(), pairs in proptest::collection::vec((0usize..3, 0usize..3), 1..6)) {
        let mut rng = common::rng(seed);
        let pm = common::random_prob_model(&mut rng, 4, 3, 3, 3);
        let pairs: Vec<(usize, usize)> = pairs
            .into_iter()
            .map(|(u, y)| (u % pm.num_actions(), y % pm.num_observations()))
            .collect();
        match bayes_filter(&pm, &pairs) {
            Ok(p) => {
                let total = p.iter().fold(BigRational::zero(), |a, v| a + v);
                prop_assert!(total.is_one());
                prop_assert!(p.iter().all(|v| *v >= BigRational::zero()));
                if pairs.len() > 1 {
                    let prev = bayes_filter(&pm, &pairs[..pairs.len() - 1]).unwrap();
                    let (u, y) = pairs[pairs.len() - 1];
                    prop_assert_eq!(bayes_step(&pm, &prev, u, y).unwrap(), p);
                }
            }
            Err(_) => {
                let consistent = common::trajectory_posteriors(&pm, pairs.len())
                    .into_iter()
                    .any(|(h, _)| h.iter().map(|p| p.1).eq(pairs.iter().map(|p| p.1))
                        && h.iter().skip(1).map(|p| p.0).eq(pairs.iter().skip(1).map(|p| p.0)));
                prop_assert!(!consistent);
            }
        }
    }

    #[test]
    fn ndet_filter_contains_the_true_state(seed in any::<u64>(), steps in 1usize..8) {
        let mut rng = common::rng(seed);
        let ext = random_disturbed(&mut rng, false);
        let d = ext.disturbance().unwrap().clone();
        let mut x = rng.random_range(0..ext.num_states());
        let all: NdetIState = (0..ext.num_states()).collect();
        let psis = d.admissible_psis(x);
        let mut set = ndet_observe(&ext, &all, d.h[x][psis[rng.random_range(0..psis.len())]]).unwrap();
        prop_assert!(set.contains(&x));
        for _ in 0..steps {
            let u = rng.random_range(0..2);
            let ts = d.admissible_thetas(x, u);
            x = d.f[x][u][ts[rng.random_range(0..ts.len())]];
            let psis = d.admissible_psis(x);
            let y = d.h[x][psis[rng.random_range(0..psis.len())]];
            set = ndet_step(&ext, &set, u, y).unwrap();
            prop_assert!(set.contains(&x));
        }
    }

    #[test]
    fn psr_chain_rule(seed in any::<u64>(), len in 0usize..3) {
        let mut rng = common::rng(seed);
        let pm = common::random_prob_model(&mut rng, 4, 2, 2, 3);
        let mut draw = |n: usize| -> Vec<(usize, usize)> {
            (0..n).map(|_| (rng.random_range(0..pm.num_actions()), rng.random_range(0..pm.num_observations()))).collect()
        };
        let h = draw(len);
        let t1 = draw(1);
        let t2 = draw(2);
        let Ok(p1) = exact_test_probability(&pm, &h, &Test { pairs: t1.clone() }) else {
            return Ok(());
        };
        let both = exact_test_probability(&pm, &h, &Test { pairs: [t1.clone(), t2.clone()].concat() }).unwrap();
        if p1.is_zero() {
            prop_assert!(both.is_zero());
        } else {
            let h1 = [h.clone(), t1].concat();
            let p2 = exact_test_probability(&pm, &h1, &Test { pairs: t2 }).unwrap();
            prop_assert_eq!(both, p1 * p2);
        }
        // Observation probabilities of one action sum to one.
        let u = 0;
        let total = (0..pm.num_observations()).fold(BigRational::zero(), |a, y| {
            a + exact_test_probability(&pm, &h, &Test { pairs: vec![(u, y)] }).unwrap()
        });
        prop_assert!(total.is_one());
    }

    #[test]
    fn reach_and_avoid_tasks_match_trajectories(seed in any::<u64>(), us in proptest::collection::vec(0usize..3, 0..5)) {
        let mut rng = common::rng(seed);
        let ext = common::random_moore(&mut rng, 5);
        let us: Vec<usize> = us.into_iter().map(|u| u % ext.actions().len()).collect();
        let n = ext.num_states();
        let mut marked: BTreeSet<usize> = (0..n).filter(|_| rng.random_bool(0.3)).collect();
        if marked.is_empty() {
            marked.insert(rng.random_range(0..n));
        }
        let names: Vec<&str> = marked.iter().map(|&x| ext.states()[x].as_str()).collect();
        let reach = build_reach_task(&ext, &names).unwrap();
        let avoid = build_avoid_task(&ext, &names).unwrap();
        let x0 = rng.random_range(0..n);
        let (h, _) = history_of(&ext, x0, &us);
        prop_assert_eq!(reach.output(reach.run(&h).unwrap()), set_task_label(&ext, x0, &us, &marked, true));
        prop_assert_eq!(avoid.output(avoid.run(&h).unwrap()), set_task_label(&ext, x0, &us, &marked, false));
    }

    #[test]
    fn backward_reachable_set_matches_enumeration(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let ext = common::random_moore(&mut rng, 3);
        let goal = ext.states()[rng.random_range(0..ext.num_states())].clone();
        let task = build_reach_task(&ext, &[goal]).unwrap();
        // Shortest successful sequences visit each (x, task state) pair once.
        let bound = ext.num_states() * task.states().len();
        prop_assume!(bound <= 12);
        let brs = backward_reachable_set(&ext, &task).unwrap();
        let direct: Vec<usize> = (0..ext.num_states()).filter(|&x| succeeds_within(&ext, &task, x, bound)).collect();
        prop_assert_eq!(brs, direct);
    }

    #[test]
    fn seeded_rollouts_repeat_and_are_admissible(seed in any::<u64>(), draw in any::<u64>()) {
        let mut rng = common::rng(seed);
        let ext = random_disturbed(&mut rng, false);
        let cs = random_executor(&mut rng, &ext);
        let x = rng.random_range(0..ext.num_states());
        let a = rollout(&cs, x, 4, &DisturbanceSource::Seeded(draw)).unwrap();
        prop_assert_eq!(&a, &rollout(&cs, x, 4, &DisturbanceSource::Seeded(draw)).unwrap());
        prop_assert_eq!(a.x.len(), 5);
        prop_assert_eq!(a.y.len(), 4);
        let all = rollout_all(&cs, x, 4, 1 << 16).unwrap();
        prop_assert!(all.contains(&a));
        let replay = rollout(&cs, x, 4, &DisturbanceSource::Fixed(a.disturbances.clone())).unwrap();
        prop_assert_eq!(replay, a);
    }

    #[test]
    fn exhaustive_rollouts_branch_on_every_disturbance(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let ext = random_disturbed(&mut rng, true);
        let cs = random_executor(&mut rng, &ext);
        let x = rng.random_range(0..ext.num_states());
        let all = rollout_all(&cs, x, 3, 1 << 10).unwrap();
        prop_assert_eq!(all.len(), 8);
        let traces: BTreeSet<Vec<(usize, usize)>> = all.iter().map(|r| r.disturbances.clone()).collect();
        prop_assert_eq!(traces.len(), 8);
    }
}
