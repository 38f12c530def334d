//! The nine acceptance criteria, one line each. Runs without the test
//! harness so the summary is always printed; exits nonzero on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde_json::json;
use torgrad::constructions::cheap::{integers_cheap, integers_tile_for};
use torgrad::constructions::resolutions::ResolutionData;
use torgrad::constructions::rokhlin::integers_embedding;
use torgrad::discretize::retract_inequality_check;
use torgrad::pipeline::{run_gradient, run_verify, ExperimentConfig, GradientTable, Suite, VerifyReport};

const SEED: u64 = 7;
const SLACK: f64 = 1e-9;

struct Outcome {
    ok: bool,
    detail: String,
}

fn gradient(v: serde_json::Value) -> GradientTable {
    run_gradient(&ExperimentConfig::from_json(&v.to_string()).unwrap()).unwrap()
}

fn free_groups() -> Outcome {
    let abelian = gradient(json!({
        "group": { "kind": "free", "rank": 2 },
        "degrees": [1],
        "chain": [
            { "kind": "abelian", "moduli": [2, 2] },
            { "kind": "abelian", "moduli": [3, 3] },
            { "kind": "abelian", "moduli": [4, 4] },
        ],
    }));
    let s3 = gradient(json!({
        "group": { "kind": "free", "rank": 2 },
        "degrees": [1],
        "chain": [{ "kind": "permutation", "degree": 3, "images": [[1, 0, 2], [1, 2, 0]] }],
    }));
    let rows: Vec<_> = abelian.rows.iter().chain(&s3.rows).collect();
    let got: Vec<usize> = rows.iter().map(|r| r.betti_q).collect();
    let exact = got == [5, 10, 17, 7] && rows.iter().all(|r| r.betti_q == 1 + r.order);
    let close = rows.iter().all(|r| (r.betti_q_norm - 1.0).abs() <= 1.0 / r.order as f64 + SLACK);
    Outcome { ok: exact && close, detail: format!("b1 = {got:?}") }
}

fn surface_groups() -> Outcome {
    let chain: Vec<_> = (2..=8).map(|n| json!({ "kind": "abelian", "moduli": [n] })).collect();
    let t = gradient(json!({
        "group": { "kind": "surface", "genus": 2 },
        "degrees": [1, 2],
        "chain": chain,
    }));
    let mut ok = true;
    let mut b1 = Vec::new();
    for r in &t.rows {
        match r.degree {
            1 => {
                ok &= r.betti_q == 2 + 2 * r.order && r.torsion.is_empty();
                b1.push(r.betti_q);
            }
            _ => ok &= r.betti_q == 1 && r.torsion.is_empty(),
        }
    }
    Outcome { ok: ok && b1.len() == 7, detail: format!("b1 = {b1:?}, torsion-free, b2 = 1") }
}

fn rokhlin() -> Outcome {
    let mut ok = true;
    let mut failed = Vec::new();
    for (m, n) in [(6, 2), (7, 2), (12, 4), (100, 10)] {
        let (_, rep) = integers_embedding(m, n).unwrap();
        let pair_ok = rep.all_pass() && rep.norm_d1 == BigInt::from(2);
        if !pair_ok {
            failed.push(format!("({m},{n})"));
        }
        ok &= pair_ok;
    }
    let detail = if failed.is_empty() { "(6,2) (7,2) (12,4) (100,10)".to_string() } else { format!("failed at {}", failed.join(" ")) };
    Outcome { ok, detail }
}

fn suite(s: Suite, trials: usize) -> Outcome {
    let rep: VerifyReport = run_verify(s, SEED, trials);
    let notes: String = rep.notes.iter().map(|(k, v)| format!(", {k} = {v}")).collect();
    let mut detail = format!("{}/{} trials{}", rep.passed, rep.trials, notes);
    if let Some(f) = rep.failures.first() {
        detail.push_str(&format!(", first failure {f}"));
    }
    Outcome { ok: rep.ok() && rep.trials == trials, detail }
}

fn cheap_integers() -> Outcome {
    let mut ok = true;
    let mut levels = Vec::new();
    for q in [2, 4, 8] {
        let eps = BigRational::new(BigInt::from(1), BigInt::from(q));
        for k in 2..=4 {
            let e = integers_cheap(&eps, k).unwrap();
            let d = &e.d;
            ok &= d.is_strict();
            ok &= d.dims().iter().all(|x| x < &eps);
            ok &= d.boundaries().iter().all(|b| b.op_norm() <= BigInt::from(2));
            ok &= e.chain_defects().unwrap().iter().all(|x| x.is_zero());
            for n in 0..=2 {
                let r = retract_inequality_check(&ResolutionData::integers(), d, n).unwrap();
                ok &= r.holds(SLACK);
                // H_n of the subgroup of index kN is ℤ for n ≤ 1
                ok &= r.betti == usize::from(n <= 1) && r.logtors == 0.0;
            }
            levels.push(k * integers_tile_for(&eps));
        }
    }
    Outcome { ok, detail: format!("levels Z/{levels:?}") }
}

fn main() -> ExitCode {
    type Check = Box<dyn Fn() -> Outcome>;
    let criteria: Vec<(&str, u64, Check)> = vec![
        ("free-group gradients", 5, Box::new(free_groups)),
        ("surface-group gradients", 20, Box::new(surface_groups)),
        ("Rokhlin resolution identities", 5, Box::new(rokhlin)),
        ("operator-norm formula", 30, Box::new(|| suite(Suite::Opnorm, 500))),
        ("Gabber bound", 30, Box::new(|| suite(Suite::Gabber, 500))),
        ("per-level torsion growth", 30, Box::new(|| suite(Suite::Torsion, 200))),
        ("strictification", 60, Box::new(|| suite(Suite::Strictify, 100))),
        ("cheap embeddings for Z", 10, Box::new(cheap_integers)),
        ("lognorm calculus", 60, Box::new(|| suite(Suite::Lognorm, 200))),
    ];
    let mut all = true;
    for (k, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(*budget);
        let ok = out.ok && in_time;
        all &= ok;
        println!(
            "criterion {}: {} {} ({}; {:.2}s of {}s)",
            k + 1,
            if ok { "PASS" } else { "FAIL" },
            name,
            out.detail,
            took.as_secs_f64(),
            budget
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
