//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{
    brute_force, bytetrack_split, check_adm, check_ddm, check_tdm, context, dyadic_matrix,
    is_partition, is_valid_matching, onms_oracle, random_frame, random_scene, rng,
};
use deconfuse_core::assignment::{solve, solve_pinned};
use deconfuse_core::io::{result_rows, MotRow};
use deconfuse_core::metrics::{clear, evaluate, Counts};
use deconfuse_core::motion::{MotionModel, NoiseModel};
use deconfuse_core::onms::{partition, NmsThresholds};
use deconfuse_core::synth::{crossing_scenario, generate, occlusion_scenario};
use deconfuse_core::{BBox, Components, Tracker, TrackerConfig};
use rand::Rng;

const HUNGARIAN_BUDGET: Duration = Duration::from_secs(5);
const CROSSING_BUDGET: Duration = Duration::from_secs(60);
const KALMAN_TOLERANCE: f64 = 1e-3;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn hungarian() -> Outcome {
    let mut r = rng(1001);
    let mut solver_time = Duration::ZERO;
    let mut pinned_trials = 0;
    for trial in 0..1000 {
        let (rows, cols) = (r.random_range(1..=7), r.random_range(1..=7));
        let rate = [0.0, 0.2, 0.4][trial % 3];
        let c = dyadic_matrix(&mut r, rows, cols, rate);
        let mut pins: Vec<(usize, usize)> = Vec::new();
        if trial % 2 == 1 {
            for _ in 0..r.random_range(1..=2) {
                let (pr, pc) = (r.random_range(0..rows), r.random_range(0..cols));
                if !c.is_forbidden(pr, pc) && pins.iter().all(|&(a, b)| a != pr && b != pc) {
                    pins.push((pr, pc));
                }
            }
        }
        let t = Instant::now();
        let got = if pins.is_empty() {
            solve(&c)
        } else {
            pinned_trials += 1;
            solve_pinned(&c, &pins).map_err(|e| format!("trial {trial}: {e}"))?
        };
        solver_time += t.elapsed();
        let (n, cost) = brute_force(&c, &pins).expect("pins are feasible");
        if !is_valid_matching(&c, &got) || !pins.iter().all(|p| got.contains(p)) {
            return Err(format!("trial {trial}: invalid matching"));
        }
        if got.len() != n || c.total(&got) != cost {
            return Err(format!(
                "trial {trial}: got ({}, {}), optimum ({n}, {cost})",
                got.len(),
                c.total(&got)
            ));
        }
    }
    if solver_time >= HUNGARIAN_BUDGET {
        return Err(format!("solver time {solver_time:?}"));
    }
    Ok(format!(
        "1000 matrices ({pinned_trials} pinned) optimal, solver time {solver_time:.2?}"
    ))
}

fn onms() -> Outcome {
    let mut r = rng(1002);
    let cfg = TrackerConfig::default();
    let reduced = TrackerConfig {
        nms_second: cfg.nms_first,
        ..cfg.clone()
    };
    for trial in 0..1000 {
        let dets = random_frame(&mut r);
        let p = partition(&dets, &cfg);
        if p != onms_oracle(&dets, &NmsThresholds::from_config(&cfg)) {
            return Err(format!(
                "trial {trial}: partition differs from direct evaluation"
            ));
        }
        if !is_partition(&p, dets.len()) {
            return Err(format!("trial {trial}: not a partition"));
        }
        if partition(&dets, &reduced) != bytetrack_split(&dets, &reduced) {
            return Err(format!("trial {trial}: reduction differs"));
        }
    }
    Ok("1000 frames match direct evaluation and the single-threshold reduction".into())
}

fn ddm_margin() -> Outcome {
    let mut r = rng(1003);
    let replaced: usize = (0..500)
        .map(|_| check_ddm(&context(&random_scene(&mut r))))
        .sum();
    Ok(format!("500 contexts, {replaced} replacements checked"))
}

fn tdm_adm() -> Outcome {
    let mut r = rng(1004);
    let (mut moved, mut swapped) = (0, 0);
    for _ in 0..500 {
        let scene = random_scene(&mut r);
        let ctx = context(&scene);
        moved += check_tdm(&ctx);
        swapped += check_adm(&ctx);
    }
    Ok(format!(
        "500 contexts, {moved} TDM moves, {swapped} ADM re-matchings checked"
    ))
}

fn kalman() -> Outcome {
    let model = MotionModel::new(NoiseModel::noiseless());
    let truth = |f: u32| {
        let f = f64::from(f);
        BBox::new(
            120.0 + 4.0 * f,
            300.0 - 2.5 * f,
            42.0 + 0.2 * f,
            95.0 + 0.5 * f,
        )
        .unwrap()
    };
    let mut state = model.init(&truth(1));
    let mut worst: f64 = 0.0;
    for f in 2..=20 {
        let predicted = model.predict(&state);
        let (p, g) = (predicted.bbox(), truth(f));
        let err = [p.cx - g.cx, p.cy - g.cy, p.w - g.w, p.h - g.h]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if f >= 5 {
            worst = worst.max(err);
        }
        state = model.update(&predicted, &g).map_err(|e| e.to_string())?;
    }
    if worst < KALMAN_TOLERANCE {
        Ok(format!(
            "max one-step error {worst:.2e} px over frames 5-20"
        ))
    } else {
        Err(format!("max one-step error {worst:.2e} px"))
    }
}

fn total_over_seeds(
    build: fn(u64) -> deconfuse_core::synth::Scenario,
    components: Components,
) -> Vec<Counts> {
    (0..100)
        .map(|seed| {
            let g = generate(&build(seed));
            let mut t = Tracker::new(TrackerConfig::default())
                .unwrap()
                .with_components(components);
            evaluate(&g.gt, &result_rows(&t.run(&g.detections.frames).unwrap()))
        })
        .collect()
}

fn sum(counts: &[Counts]) -> Counts {
    let mut t = Counts::default();
    for c in counts {
        t.add(c);
    }
    t
}

fn crossing() -> Outcome {
    let start = Instant::now();
    let full = sum(&total_over_seeds(crossing_scenario, Components::default()));
    let base = sum(&total_over_seeds(crossing_scenario, Components::baseline()));
    let elapsed = start.elapsed();
    let msg = format!(
        "IDSW {} vs baseline {}, IDF1 {:.4} vs {:.4}, {elapsed:.2?}",
        full.id_switches,
        base.id_switches,
        full.idf1(),
        base.idf1()
    );
    if full.id_switches < base.id_switches && full.idf1() > base.idf1() && elapsed < CROSSING_BUDGET
    {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn occlusion() -> Outcome {
    let with = total_over_seeds(occlusion_scenario, Components::default());
    let without = total_over_seeds(
        occlusion_scenario,
        Components {
            onms: false,
            ..Components::default()
        },
    );
    let worse: Vec<usize> = (0..100)
        .filter(|&i| with[i].false_negatives > without[i].false_negatives)
        .collect();
    let (a, b) = (sum(&with).false_negatives, sum(&without).false_negatives);
    let msg = format!(
        "FN {a} with ONMS vs {b} single-threshold, {} seeds worse",
        worse.len()
    );
    if worse.is_empty() && a < b {
        Ok(msg)
    } else {
        Err(format!("{msg}: {worse:?}"))
    }
}

fn metrics() -> Outcome {
    let row = |frame: u32, id: i64, x: f64| MotRow {
        frame,
        id,
        bbox: BBox::new(x, 0.0, 10.0, 10.0).unwrap(),
        conf: 1.0,
    };
    // MOTA: 10 gt boxes, 2 misses, 1 stray, 1 switch -> 1 - 4/10.
    let gt: Vec<MotRow> = (1..=10).map(|f| row(f, 1, 0.0)).collect();
    let mut preds: Vec<MotRow> = (1..=8)
        .map(|f| row(f, if f < 5 { 7 } else { 8 }, 0.0))
        .collect();
    preds.push(row(3, 9, 500.0));
    let c = clear(&gt, &preds);
    let mota = c.mota().map_err(|e| e.to_string())?;
    if (c.false_negatives, c.false_positives, c.id_switches) != (2, 1, 1)
        || (mota - 0.6).abs() > 1e-15
    {
        return Err(format!("MOTA fixture: {c:?}"));
    }
    // IDSW: predicted id flips once.
    let gt4: Vec<MotRow> = (1..=4).map(|f| row(f, 1, 0.0)).collect();
    let flip = vec![
        row(1, 5, 0.0),
        row(2, 5, 0.0),
        row(3, 6, 0.0),
        row(4, 6, 0.0),
    ];
    if clear(&gt4, &flip).id_switches != 1 {
        return Err("IDSW fixture".into());
    }
    // IDF1: identity split 6/4 over 10 frames -> 2*6 / 20.
    let split: Vec<MotRow> = (1..=10)
        .map(|f| row(f, if f <= 6 { 5 } else { 6 }, 0.0))
        .collect();
    let e = evaluate(&gt, &split);
    if e.idtp != 6 || (e.idf1() - 0.6).abs() > 1e-15 {
        return Err(format!("IDF1 fixture: {e:?}"));
    }
    Ok("MOTA 0.6, IDSW 1, IDF1 0.6".into())
}

fn deconfuse(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_deconfuse"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn kappa_sweep() -> Outcome {
    let out = deconfuse(&["ablate", "--kappa", "0.1,0.2,0.3,0.4,0.5", "--seeds", "5"])?;
    let lines: Vec<&str> = out.lines().filter(|l| !l.trim().is_empty()).collect();
    let rows: Vec<&str> = lines
        .iter()
        .skip(1)
        .copied()
        .filter(|l| !l.starts_with('-'))
        .collect();
    let kappas: Vec<&str> = rows
        .iter()
        .filter_map(|l| l.split_whitespace().next())
        .collect();
    if lines
        .first()
        .is_some_and(|h| h.split_whitespace().next() == Some("kappa"))
        && kappas == ["0.10", "0.20", "0.30", "0.40", "0.50"]
        && rows.iter().all(|l| l.split_whitespace().count() == 11)
    {
        Ok("header and 5 rows".into())
    } else {
        Err(format!("unexpected table:\n{out}"))
    }
}

fn without_runtime(stdout: &str) -> String {
    stdout
        .lines()
        .filter(|l| !l.starts_with("runtime:"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn run_all_commands(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let mut outputs = vec![(
        "synth".to_string(),
        deconfuse(&["synth", "crossing", "--seed", "7", "--out-dir", &p("scene")])?.into_bytes(),
    )];
    let track = deconfuse(&[
        "track",
        "--det",
        &p("scene/det.txt"),
        "--emb",
        &p("scene/emb.csv"),
        "--out",
        &p("res.txt"),
    ])?;
    outputs.push((
        "track".into(),
        without_runtime(&track).replace(&p(""), "").into_bytes(),
    ));
    outputs.push((
        "eval".into(),
        deconfuse(&[
            "eval",
            "--results",
            &p("res.txt"),
            "--gt",
            &p("scene/gt.txt"),
            "--csv",
            &p("eval.csv"),
        ])?
        .into_bytes(),
    ));
    outputs.push((
        "ablate".into(),
        deconfuse(&[
            "ablate",
            "--components",
            "ddm,adm",
            "--seeds",
            "3",
            "--csv",
            &p("ablate.csv"),
        ])?
        .into_bytes(),
    ));
    for f in [
        "scene/gt.txt",
        "scene/det.txt",
        "scene/emb.csv",
        "res.txt",
        "eval.csv",
        "ablate.csv",
    ] {
        outputs.push((
            f.to_string(),
            std::fs::read(dir.join(f)).map_err(|e| format!("{f}: {e}"))?,
        ));
    }
    Ok(outputs)
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = run_all_commands(a.path())?;
    let second = run_all_commands(b.path())?;
    for ((name, x), (_, y)) in first.iter().zip(&second) {
        if x != y {
            return Err(format!("{name} differs between runs"));
        }
    }
    Ok(format!(
        "{} outputs byte-identical (track stdout without the runtime line)",
        first.len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("hungarian optimality", hungarian),
        ("onms correctness", onms),
        ("ddm margin", ddm_margin),
        ("tdm/adm optimality", tdm_adm),
        ("kalman sanity", kalman),
        ("crossing deconfusion", crossing),
        ("onms recall", occlusion),
        ("metrics fixtures", metrics),
        ("kappa sweep", kappa_sweep),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
