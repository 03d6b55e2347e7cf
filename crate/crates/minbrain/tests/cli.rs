use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use minbrain::format::{
    CoupledJson, ExternalJson, PartitionJson, ProbModelJson, PsrJson, SystemJson, TaskJson,
};
use minbrain_core::coupled::CoupledSystem;
use minbrain_core::external::{DisturbedTables, ExternalSystem, ModelTables};
use minbrain_core::prob::ProbModel;
use minbrain_core::psr::discover_core_tests;
use minbrain_core::scenarios::*;
use minbrain_core::{isomorphic, Labeling, StateRelabeledTS, TransitionSystem};
use num_rational::BigRational;
use serde_json::Value;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn minbrain(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_minbrain"));
    cmd.args(args).env_remove("MINBRAIN_SIZE_LIMIT");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn write<T: serde::Serialize>(dir: &TempDir, name: &str, v: &T) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn system(stdout: &str) -> StateRelabeledTS {
    serde_json::from_str::<SystemJson>(stdout).unwrap().to_srts().unwrap()
}

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

fn plan_coupling(policy: &StateRelabeledTS) -> CoupledSystem {
    CoupledSystem::new(red_green_annulus(6).unwrap(), policy.system.clone(), policy.labeling.clone()).unwrap()
}

fn disturbed(probabilistic: bool) -> ExternalSystem {
    let names = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let mut tables = DisturbedTables {
        thetas: names(&["slip", "step"]),
        psis: names(&["clear", "noisy"]),
        ..Default::default()
    };
    for x in ["a", "b"] {
        for u in ["go", "stay"] {
            for t in ["slip", "step"] {
                let to = if u == "go" && t == "step" { if x == "a" { "b" } else { "a" } } else { x };
                tables.f.insert((x.into(), u.into(), t.into()), to.into());
            }
        }
        tables.h.insert((x.into(), "clear".into()), format!("see_{x}"));
        tables.h.insert((x.into(), "noisy".into()), "blur".into());
    }
    let pairs = [("a", "go"), ("a", "stay"), ("b", "go"), ("b", "stay")];
    let model = if probabilistic {
        let d = |a: BigRational, b: BigRational, n: [&str; 2]| -> BTreeMap<String, BigRational> {
            [(n[0].to_string(), a), (n[1].to_string(), b)].into_iter().collect()
        };
        ModelTables::Probabilistic {
            theta: pairs
                .iter()
                .map(|&(x, u)| ((x.into(), u.into()), d(q(1, 4), q(3, 4), ["slip", "step"])))
                .collect(),
            psi: ["a", "b"]
                .iter()
                .map(|&x| (x.to_string(), d(q(2, 3), q(1, 3), ["clear", "noisy"])))
                .collect(),
        }
    } else {
        ModelTables::Nondeterministic {
            theta: pairs
                .iter()
                .map(|&(x, u)| ((x.into(), u.into()), names(&["slip", "step"])))
                .collect(),
            psi: [("a".to_string(), names(&["clear", "noisy"])), ("b".to_string(), names(&["clear"]))]
                .into_iter()
                .collect(),
        }
    };
    ExternalSystem::disturbed(names(&["a", "b"]), names(&["go", "stay"]), &tables, &model).unwrap()
}

/// Two states that swap, each showing the other's name, plus a sink.
fn small_model() -> ProbModel<BigRational> {
    let z = || q(0, 1);
    ProbModel::new(
        vec!["l".into(), "r".into()],
        vec!["look".into(), "move".into()],
        vec!["dark".into(), "light".into()],
        vec![
            vec![vec![q(1, 1), z()], vec![q(1, 3), q(2, 3)]],
            vec![vec![z(), q(1, 1)], vec![q(1, 2), q(1, 2)]],
        ],
        vec![vec![q(3, 4), q(1, 4)], vec![q(1, 5), q(4, 5)]],
        vec![q(1, 2), q(1, 2)],
    )
    .unwrap()
}

#[test]
fn red_green_filter_example() {
    let dir = TempDir::new().unwrap();
    let dot = dir.path().join("f.dot");
    let r = minbrain(&["example", "red-green-filter", "--dot", s(&dot)], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let out = system(&r.stdout);
    assert_eq!(out.system.num_states(), 4);
    assert!(isomorphic(&out, &red_green_filter_reference()).is_some());
    let dot = std::fs::read_to_string(dot).unwrap();
    assert!(dot.starts_with("digraph"));
    assert_eq!(dot.matches("->").count(), 8);
}

#[test]
fn red_green_plan_example() {
    let r = minbrain(&["example", "red-green-plan"], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let out = system(&r.stdout);
    assert!(isomorphic(&out, &red_green_plan_reference()).is_some());
}

#[test]
fn output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        assert_eq!(minbrain(&["example", "red-green-filter", "--output", s(p)], &[]).code, 0);
    }
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn check_sufficient_reports_witness() {
    let dir = TempDir::new().unwrap();
    let task = red_green_filter_task().reachable_srts();
    let input = write(&dir, "task.json", &SystemJson::from_srts(&task));
    let r = minbrain(&["check-sufficient", "--input", s(&input)], &[]);
    assert_eq!(r.code, 1);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["sufficient"], false);
    let w = &v["witness"];
    let ts = &task.system;
    let idx = |k: &str| ts.state_index(w[k].as_str().unwrap()).unwrap();
    let l = ts.label_index(w["label"].as_str().unwrap()).unwrap();
    assert_eq!(task.label_of(idx("s")), task.label_of(idx("t")));
    assert!(ts.has_edge(idx("s"), l, idx("s_next")));
    assert!(ts.has_edge(idx("t"), l, idx("t_next")));
    assert_ne!(task.label_of(idx("s_next")), task.label_of(idx("t_next")));

    let reference = write(&dir, "ref.json", &SystemJson::from_srts(&red_green_plan_reference()));
    let r = minbrain(&["check-sufficient", "--input", s(&reference)], &[]);
    assert_eq!(r.code, 0);
    assert_eq!(serde_json::from_str::<Value>(&r.stdout).unwrap()["sufficient"], true);
}

#[test]
fn minimize_keeps_a_sufficient_partition() {
    let dir = TempDir::new().unwrap();
    let ts = TransitionSystem::new(
        ["a", "b", "c"],
        ["x"],
        [("a", "x", "b"), ("b", "x", "a"), ("c", "x", "c")],
    )
    .unwrap();
    let labeling = Labeling::from_values(vec!["p".into(), "p".into(), "q".into()]);
    let srts = StateRelabeledTS::new(ts, labeling).unwrap();
    let input = write(&dir, "s.json", &SystemJson::from_srts(&srts));
    let r = minbrain(&["minimize", "--input", s(&input)], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let p: PartitionJson = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(p, PartitionJson::from_partition(&srts.system, &srts.labeling.partition()));

    let r = minbrain(&["quotient", "--input", s(&input)], &[]);
    assert_eq!(r.code, 0);
    assert_eq!(system(&r.stdout).system.num_states(), 2);
}

#[test]
fn minimize_then_quotient_by_partition() {
    let dir = TempDir::new().unwrap();
    let task = red_green_filter_task().reachable_srts();
    let input = write(&dir, "task.json", &SystemJson::from_srts(&task));
    let part = dir.path().join("p.json");
    assert_eq!(minbrain(&["minimize", "--input", s(&input), "--output", s(&part)], &[]).code, 0);
    let r = minbrain(&["quotient", "--input", s(&input), "--partition", s(&part)], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(system(&r.stdout).system.num_states(), 4);
}

#[test]
fn derive_minimal_filter_from_task() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "task.json", &TaskJson::from_task(&red_green_filter_task()));
    let r = minbrain(&["derive", "--input", s(&input), "--depth", "6"], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(isomorphic(&system(&r.stdout), &red_green_filter_reference()).is_some());

    let r = minbrain(&["derive", "--input", s(&input), "--depth", "3", "--raw"], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);

    let r = minbrain(&["derive", "--input", s(&input), "--depth", "8"], &[("MINBRAIN_SIZE_LIMIT", "100")]);
    assert_eq!(r.code, 1);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["error"], "size-limit");
    let r = minbrain(&["derive", "--input", s(&input), "--depth", "3"], &[("MINBRAIN_SIZE_LIMIT", "lots")]);
    assert_eq!(r.code, 2);
}

#[test]
fn restrict_binary_toy() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "toy.json", &SystemJson::from_srts(&binary_toy()));
    let r = minbrain(&["restrict", "--input", s(&input), "--strong"], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let exec = system(&r.stdout);
    for i in ["0", "1"] {
        for y in ["0", "1"] {
            let want = if i == y { "0" } else { "1" };
            assert_eq!(exec.system.successor_by_name(i, y), Some(want));
        }
    }
    let r = minbrain(&["restrict", "--input", s(&input)], &[]);
    assert_eq!(system(&r.stdout).system.edges().len(), 4);
}

#[test]
fn simulate_feasible_and_reach_set() {
    let dir = TempDir::new().unwrap();
    let cs = plan_coupling(&red_green_plan_reference());
    let input = write(&dir, "plan.json", &CoupledJson::from_coupled(&cs));
    let task = write(&dir, "task.json", &TaskJson::from_task(&red_green_plan_task(6)));

    let r = minbrain(&["simulate", "--input", s(&input), "--horizon", "5", "--start", "0-g"], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let lines: Vec<Value> = r.stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0]["x"], "0-g");
    for w in lines.windows(2) {
        assert_eq!(w[0]["next"], w[1]["x"]);
    }

    let r = minbrain(&["feasible", "--input", s(&input), "--task", s(&task), "--horizon", "20"], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(serde_json::from_str::<Value>(&r.stdout).unwrap()["feasible"], true);

    let mut green = red_green_plan_reference();
    green.labeling = Labeling::from_fn(&green.system, |_, n| {
        (if n == "ι0" { "()" } else { U_GREEN }).to_string()
    });
    let bad = write(&dir, "green.json", &CoupledJson::from_coupled(&plan_coupling(&green)));
    let r = minbrain(&["feasible", "--input", s(&bad), "--task", s(&task), "--horizon", "20"], &[]);
    assert_eq!(r.code, 1);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["feasible"], false);
    assert_eq!(v["failure"], "definite-failure");

    let r = minbrain(&["reach-set", "--input", s(&input), "--task", s(&task)], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["states"].as_array().unwrap().len(), cs.external.num_states());
}

#[test]
fn seeded_simulation_repeats() {
    let dir = TempDir::new().unwrap();
    let ext = disturbed(true);
    let mut b = minbrain_core::ts::TsBuilder::new();
    b.initial("i");
    for y in ext.observations() {
        b.edge("i", y, "m");
        b.edge("m", y, "m");
    }
    let ts = b.build();
    let pi = Labeling::from_fn(&ts, |_, n| (if n == "i" { "()" } else { "go" }).to_string());
    let cs = CoupledSystem::new(ext, ts, pi).unwrap();
    let input = write(&dir, "c.json", &CoupledJson::from_coupled(&cs));
    let args = ["simulate", "--input", s(&input), "--horizon", "12", "--seed", "7"];
    let a = minbrain(&args, &[]);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.stdout, minbrain(&args, &[]).stdout);
    assert!(a.stdout.lines().all(|l| l.contains("\"theta\"") && l.contains("\"psi\"")));
}

#[test]
fn dbi_graph_of_a_reduced_machine() {
    let dir = TempDir::new().unwrap();
    let ts = TransitionSystem::new(
        ["a", "b", "c"],
        ["u", "v"],
        [
            ("a", "u", "b"),
            ("b", "u", "c"),
            ("c", "u", "a"),
            ("a", "v", "a"),
            ("b", "v", "a"),
            ("c", "v", "c"),
        ],
    )
    .unwrap()
    .with_initial("a")
    .unwrap();
    let labeling = Labeling::from_values(vec!["0".into(), "0".into(), "1".into()]);
    let m = StateRelabeledTS::new(ts, labeling).unwrap();
    let input = write(&dir, "m.json", &SystemJson::from_srts(&m));
    let r = minbrain(&["dbi-graph", "--input", s(&input)], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let g = system(&r.stdout);
    assert!(g.system.states().iter().all(|n| n.chars().all(|c| c == '0' || c == '1')));
    assert!(isomorphic(&g, &m).is_some());
}

#[test]
fn psr_run_exact_and_float() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "pm.json", &ProbModelJson::from_model(&small_model()));
    let psr = dir.path().join("psr.json");
    let r = minbrain(
        &["psr-run", "--input", s(&input), "--max-test-len", "3", "--history", "look:dark.move:light", "--psr", s(&psr)],
        &[],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let lines: Vec<Value> = r.stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    let saved: PsrJson = serde_json::from_str(&std::fs::read_to_string(&psr).unwrap()).unwrap();
    assert_eq!(saved.to_psr().unwrap(), discover_core_tests(&small_model(), 3).unwrap());

    let r = minbrain(
        &["psr-run", "--input", s(&input), "--max-test-len", "3", "--history", "look:dark", "--float"],
        &[],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let last: Value = serde_json::from_str(r.stdout.lines().last().unwrap()).unwrap();
    assert!(last["probability"].is_f64());

    let r = minbrain(&["psr-run", "--input", s(&input), "--exact", "--float"], &[]);
    assert_eq!(r.code, 2);
}

#[test]
fn malformed_input_exits_two() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"states\": [\"a\"]").unwrap();
    assert_eq!(minbrain(&["check-sufficient", "--input", s(&bad)], &[]).code, 2);
    std::fs::write(&bad, r#"{"states":["a"],"labels":["x"],"transitions":[["a","x","b"]]}"#).unwrap();
    let r = minbrain(&["quotient", "--input", s(&bad)], &[]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("b"));
    assert_eq!(minbrain(&["check-sufficient"], &[]).code, 2);
    assert_eq!(minbrain(&["no-such-verb"], &[]).code, 2);
    assert_eq!(minbrain(&["--help"], &[]).code, 0);
}

#[test]
fn json_round_trips() {
    let srts = red_green_filter_task().reachable_srts();
    let j = SystemJson::from_srts(&srts);
    let back: SystemJson = serde_json::from_str(&serde_json::to_string(&j).unwrap()).unwrap();
    assert_eq!(back.to_srts().unwrap(), srts);

    for task in [red_green_filter_task(), red_green_plan_task(6)] {
        let j = TaskJson::from_task(&task);
        let back: TaskJson = serde_json::from_str(&serde_json::to_string(&j).unwrap()).unwrap();
        assert_eq!(back, j);
        assert_eq!(back.to_task().unwrap(), task);
    }

    let corridor = corridor(3).unwrap();
    for ext in [red_green_annulus(6).unwrap(), corridor.ext.clone(), disturbed(false), disturbed(true)] {
        let j = ExternalJson::from_external(&ext);
        let back: ExternalJson = serde_json::from_str(&serde_json::to_string(&j).unwrap()).unwrap();
        assert_eq!(back.to_external().unwrap(), ext);
    }
    let restricted = corridor.ext.clone().with_initial(&["0-0@1x1"]).unwrap();
    assert_eq!(ExternalJson::from_external(&restricted).to_external().unwrap(), restricted);

    let cs = plan_coupling(&red_green_plan_reference());
    assert_eq!(CoupledJson::from_coupled(&cs).to_coupled().unwrap(), cs);

    let pm = small_model();
    let j = ProbModelJson::from_model(&pm);
    let back: ProbModelJson = serde_json::from_str(&serde_json::to_string(&j).unwrap()).unwrap();
    assert_eq!(back.to_model().unwrap(), pm);

    let psr = discover_core_tests(&pm, 3).unwrap();
    assert_eq!(PsrJson::from_psr(&psr).to_psr().unwrap(), psr);

    let p = srts.labeling.partition();
    assert_eq!(PartitionJson::from_partition(&srts.system, &p).to_partition(&srts.system).unwrap(), p);
}

#[test]
fn decimal_probabilities_are_exact() {
    let mut j = ProbModelJson::from_model(&small_model());
    j.init = [("l".to_string(), "0.5".to_string()), ("r".to_string(), "0.50".to_string())]
        .into_iter()
        .collect();
    assert_eq!(j.to_model().unwrap(), small_model());
}
