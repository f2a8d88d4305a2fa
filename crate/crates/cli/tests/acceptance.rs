//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use histq_core::consistency::{check_k, check_op, pvm_from_basis, refine_check, Window};
use histq_core::decoherence::DecoherenceState;
use histq_core::divergence::{
    appendix_b1_series, appendix_b2_series, b1_direct_value, b1_reduced_value, default_truncations, growth_fit, Growth,
    OmegaRule, QChoice,
};
use histq_core::entropy::{entropy_il_p, entropy_tw, fq};
use histq_core::histories::{embed_at, HomogeneousHistory};
use histq_core::linalg::{fourier_basis, identity, matrix_unit};
use histq_core::model::{SystemModel, TimeGrid};
use histq_core::partitions::{blocks, RestrictedGrowth};
use histq_core::propositions::{wright_construct, PropositionSpace, WrightOperator};
use histq_core::{sampling, CMat, Tolerances, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize, n: usize) -> (DecoherenceState, Vec<f64>) {
    let model = sampling::random_model(rng, dim);
    let mut t = 0.0;
    let times: Vec<f64> = (0..n)
        .map(|_| {
            t += rng.random_range(0.3..1.2);
            t
        })
        .collect();
    let ds = DecoherenceState::new(model, TimeGrid::new(times.clone(), 0.0).unwrap()).unwrap();
    (ds, times)
}

fn axioms() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut norm, mut herm, mut pos) = (0.0f64, 0.0f64, 0.0f64);
    let mut scenarios = 0;
    for dim in [2, 3, 4] {
        for n in 0..=3 {
            for _ in 0..2 {
                let (ds, times) = random_state(&mut rng, dim, n);
                let e = HomogeneousHistory::new();
                norm = norm.max((ds.eval_homogeneous(&e, &e).unwrap() - 1.0).norm());
                for _ in 0..50 {
                    let p = sampling::random_history(&mut rng, dim, &times);
                    let q = sampling::random_history(&mut rng, dim, &times);
                    let pq = ds.eval_homogeneous(&p, &q).unwrap();
                    let qp = ds.eval_homogeneous(&q, &p).unwrap();
                    herm = herm.max((pq - qp.conj()).norm());
                    pos = pos.max(-ds.eval_homogeneous(&p, &p).unwrap().re);
                }
                scenarios += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        scenarios >= 20 && norm <= 1e-12 && herm <= 1e-12 && pos <= 1e-12 && elapsed < Duration::from_secs(30),
        format!(
            "{scenarios} scenarios, |d(1,1)-1|={norm:.1e}, hermiticity {herm:.1e}, min diagonal {:.1e}, {elapsed:.2?}",
            -pos
        ),
    )
}

fn representations() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for dim in [2, 3] {
        for n in 1..=2 {
            for _ in 0..5 {
                let (ds, times) = random_state(&mut rng, dim, n);
                let ils = ds.ils_construct(&times).unwrap();
                for _ in 0..5 {
                    let h = sampling::random_history(&mut rng, dim, &times);
                    let k = sampling::random_history(&mut rng, dim, &times);
                    let p = embed_at(ds.model(), &h, &times).unwrap();
                    let q = embed_at(ds.model(), &k, &times).unwrap();
                    let d = ds.eval_homogeneous(&h, &k).unwrap();
                    let sum = ds.eval_sum_form(&p, &q).unwrap();
                    let x = ils.pair_value(&p, &q).unwrap();
                    worst = worst.max((d - sum).norm()).max((d - x).norm()).max((sum - x).norm());
                    pairs += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        pairs >= 100 && worst <= 1e-9 && elapsed < Duration::from_secs(60),
        format!("{pairs} pairs, max disagreement {worst:.1e}, {elapsed:.2?}"),
    )
}

fn wright() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut unit, mut form, mut adjoint) = (0.0f64, 0.0f64, 0.0f64);
    let mut samples = 0;
    for (dim, n) in [(2, 1), (3, 1), (2, 2), (3, 2)] {
        let (ds, times) = random_state(&mut rng, dim, n);
        let t = wright_construct(&ds, &times).unwrap();
        unit = unit.max((t.unit_weight() - 1.0).norm());
        let size = t.space().space_dim();
        for _ in 0..25 {
            let b = t
                .space()
                .proposition(sampling::random_operator(&mut rng, size))
                .unwrap();
            let c = t
                .space()
                .proposition(sampling::random_operator(&mut rng, size))
                .unwrap();
            let d = ds.eval_extended(&b, &b).unwrap();
            form = form.max((t.form(&b, &b).unwrap() - d).norm());
            adjoint = adjoint.max(t.self_adjoint_residual(&b, &c).unwrap());
            samples += 1;
        }
    }
    outcome(
        unit <= 1e-12 && form <= 1e-9 && adjoint <= 1e-10 && samples >= 100,
        format!("|<e,Te>-1|={unit:.1e}, {samples} samples, form {form:.1e}, self-adjoint {adjoint:.1e}"),
    )
}

fn qubit(rho_diag: [f64; 2], times: &[f64]) -> (DecoherenceState, WrightOperator) {
    let rho = CMat::from_diagonal(&nalgebra_vector(&rho_diag));
    let model = SystemModel::new(CMat::zeros(2, 2), rho).unwrap();
    let ds = DecoherenceState::new(model, TimeGrid::new(times.to_vec(), 0.0).unwrap()).unwrap();
    let t = wright_construct(&ds, times).unwrap();
    (ds, t)
}

fn nalgebra_vector(v: &[f64]) -> histq_core::linalg::CVec {
    histq_core::linalg::CVec::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0)))
}

fn window(t: &WrightOperator, ops: Vec<CMat>) -> Window {
    Window::new(ops.into_iter().map(|o| t.space().proposition(o).unwrap()).collect()).unwrap()
}

fn worked_numbers() -> Outcome {
    let tol = Tolerances::default();
    let (ds, _) = qubit([1.0, 0.0], &[1.0, 2.0]);
    let plus = pvm_from_basis(&fourier_basis(2))[0].clone();
    let h = HomogeneousHistory::from_entries([(1.0, plus), (2.0, matrix_unit(2, 0, 0))]);
    let d = ds.eval_homogeneous(&h, &h).unwrap();

    let (ds, t) = qubit([0.75, 0.25], &[1.0]);
    let comp = window(&t, vec![matrix_unit(2, 0, 0), matrix_unit(2, 1, 1)]);
    let tw = entropy_tw(&t, &comp, &tol).unwrap().value;
    let il = entropy_il_p(&ds, &comp, 1.0, &tol).unwrap().value;
    outcome(
        (d - 0.25).norm() <= 1e-12 && (tw + 0.13081).abs() <= 1e-4 && (il + 0.82396).abs() <= 1e-4,
        format!("d={:.15}, I_TW={tw:.5}, I_IL(p=1)={il:.5}", d.re),
    )
}

fn entropy_vector(ds: &DecoherenceState, t: &WrightOperator, w: &Window, tol: &Tolerances) -> Vec<f64> {
    let mut out = vec![entropy_tw(t, w, tol).unwrap().value];
    out.extend([1.0, 1.5, 2.0].map(|p| entropy_il_p(ds, w, p, tol).unwrap().value));
    out
}

fn monotonicity() -> Outcome {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut pairs = 0;
    let mut worst = f64::NEG_INFINITY;
    while pairs < 600 {
        let dim = rng.random_range(2..=4);
        let model = sampling::random_model(&mut rng, dim);
        let ds = DecoherenceState::new(model, TimeGrid::new(vec![0.7], 0.0).unwrap()).unwrap();
        let t = wright_construct(&ds, &[0.7]).unwrap();
        let finest = pvm_from_basis(&sampling::random_unitary(&mut rng, dim));
        let windows: Vec<Window> = RestrictedGrowth::new(dim)
            .map(|labels| {
                let ops = blocks(&labels)
                    .iter()
                    .map(|b| b.iter().fold(CMat::zeros(dim, dim), |acc, &i| acc + &finest[i]))
                    .collect();
                window(&t, ops)
            })
            .collect();
        let values: Vec<Vec<f64>> = windows.iter().map(|w| entropy_vector(&ds, &t, w, &tol)).collect();
        for (a, coarse) in windows.iter().enumerate() {
            for (b, fine) in windows.iter().enumerate() {
                if fine.len() <= coarse.len() || !refine_check(coarse, fine, tol.consistency) {
                    continue;
                }
                pairs += 1;
                for (x, y) in values[a].iter().zip(&values[b]) {
                    worst = worst.max(y - x);
                }
            }
        }
    }
    let (ds, t) = qubit([0.5, 0.5], &[1.0]);
    let coarse = window(&t, vec![identity(2)]);
    let fine = window(&t, vec![matrix_unit(2, 0, 0), matrix_unit(2, 1, 1)]);
    let increase =
        entropy_il_p(&ds, &fine, 3.0, &tol).unwrap().value - entropy_il_p(&ds, &coarse, 3.0, &tol).unwrap().value;
    let expected = std::f64::consts::LN_2 / 3.0;
    outcome(
        pairs >= 500 && worst <= 1e-10 && (increase - expected).abs() <= 1e-6,
        format!("{pairs} refinement pairs, largest increase {worst:.1e}; p=3 increase {increase:.7} (expected {expected:.7})"),
    )
}

fn fq_grid() -> Outcome {
    let grid: Vec<f64> = (0..60).map(|k| 0.1 + 9.9 * k as f64 / 59.0).collect();
    let mut lowest = f64::INFINITY;
    let mut drift = 0;
    for q in [1.0, 1.5, 2.0, 3.0] {
        for (ia, &a) in grid.iter().enumerate() {
            let values: Vec<f64> = grid.iter().map(|&b| fq(a, b, q).unwrap()).collect();
            lowest = values.iter().copied().fold(lowest, f64::min);
            let argmin = (0..grid.len())
                .min_by(|&x, &y| values[x].total_cmp(&values[y]))
                .unwrap();
            drift = drift.max(argmin.abs_diff(ia));
        }
    }
    outcome(
        lowest >= -1e-12 && drift <= 1,
        format!("min f_q = {lowest:.1e}, largest argmin offset {drift} grid steps"),
    )
}

fn divergence() -> Outcome {
    let start = Instant::now();
    let omega = OmegaRule::default();
    let b1 = appendix_b1_series(&omega, &QChoice::Identity, &default_truncations(2, 10_000)).unwrap();
    let fit = growth_fit(&b1).unwrap();
    let b1_ok = fit.classification == Growth::Linear && (fit.slope - 0.25).abs() <= 0.0025;

    let ns: Vec<usize> = (10..=15).map(|k| 1usize << k).collect();
    let b2 = appendix_b2_series(&omega, &ns).unwrap();
    let diffs: Vec<f64> = b2.points.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let doubling = diffs
        .iter()
        .map(|d| (d - std::f64::consts::LN_2).abs())
        .fold(0.0, f64::max);

    let mut reduced: f64 = 0.0;
    for n in 2..=6 {
        let w = omega.weights(n);
        let q = identity(n * n);
        reduced = reduced.max((b1_reduced_value(&w, &q).unwrap() - b1_direct_value(&w, &q).unwrap()).norm());
    }
    let elapsed = start.elapsed();
    outcome(
        b1_ok && doubling <= 0.05 && reduced <= 1e-10 && elapsed < Duration::from_secs(60),
        format!(
            "B1 {:?} slope {:.6}; B2 doubling max |dS - ln 2| = {doubling:.4} over N=2^10..2^14; reduced vs direct {reduced:.1e}; {elapsed:.2?}",
            fit.classification, fit.slope
        ),
    )
}

fn bridge() -> Outcome {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let (mut compared, mut mismatches) = (0, 0);
    for s in 0..50 {
        let (dim, n) = if s % 5 == 4 { (3, 1) } else { (2, 2) };
        let (ds, times) = random_state(&mut rng, dim, n);
        let space = PropositionSpace::new(times.clone(), dim).unwrap();
        let t = wright_construct(&ds, &times).unwrap();
        let mut family = vec![HomogeneousHistory::new()];
        for &time in &times {
            let pvm = sampling::random_pvm(&mut rng, dim);
            family = family
                .iter()
                .flat_map(|h| pvm.iter().map(move |p| h.clone().with(time, p.clone())))
                .collect();
        }
        let ops: Vec<CMat> = family
            .iter()
            .map(|h| embed_at(ds.model(), h, &times).unwrap().into_op())
            .collect();
        let size = space.space_dim();
        for labels in RestrictedGrowth::new(ops.len()) {
            let members = blocks(&labels)
                .iter()
                .map(|b| b.iter().fold(CMat::zeros(size, size), |acc, &i| acc + &ops[i]))
                .collect();
            let w = window(&t, members);
            let k = check_k(&w, &t, &tol).unwrap();
            if k.probabilities.iter().all(|&p| p > 1e-12) {
                compared += 1;
                if k.is_consistent() != check_op(&ds, &w, &tol).unwrap().is_consistent() {
                    mismatches += 1;
                }
            }
        }
    }
    outcome(
        compared > 0 && mismatches == 0,
        format!("{compared} positive projector windows over 50 scenarios, {mismatches} verdict mismatches"),
    )
}

fn run_verify(scenario: &Path, out: &Path) -> (Option<i32>, Vec<u8>) {
    let status = Command::new(env!("CARGO_BIN_EXE_histq"))
        .args(["verify", "--scenario"])
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .status()
        .expect("binary runs");
    let bytes = std::fs::read(out.join("verify.json")).unwrap_or_default();
    (status.code(), bytes)
}

fn determinism() -> Outcome {
    let scenario = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/qubit.json");
    let dir = tempfile::tempdir().unwrap();
    let (code_a, a) = run_verify(&scenario, &dir.path().join("a"));
    let (code_b, b) = run_verify(&scenario, &dir.path().join("b"));
    outcome(
        code_a == Some(0) && code_b == Some(0) && !a.is_empty() && a == b,
        format!(
            "exit codes {code_a:?}/{code_b:?}, {} bytes, identical: {}",
            a.len(),
            a == b
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("decoherence axioms", axioms),
        ("representation agreement", representations),
        ("wright operator", wright),
        ("worked qubit numbers", worked_numbers),
        ("entropy monotonicity", monotonicity),
        ("f_q inequality", fq_grid),
        ("divergence trends", divergence),
        ("consistency-picture bridge", bridge),
        ("cli determinism", determinism),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {}: {name} ({})", k + 1, o.detail);
        if !o.passed {
            failures += 1;
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
