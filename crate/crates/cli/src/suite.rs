//! The `verify` property suite: scenario-driven checks plus seeded random
//! systems.

use histq_core::consistency::{check_k, check_op, pvm_from_basis, refine_check, Window};
use histq_core::decoherence::{checked_sector_dim, DecoherenceState};
use histq_core::entropy::{entropy_il_p, entropy_tw, fq};
use histq_core::histories::{embed_at, HomogeneousHistory};
use histq_core::linalg::{identity, matrix_unit};
use histq_core::model::{SystemModel, TimeGrid};
use histq_core::partitions::{blocks, RestrictedGrowth};
use histq_core::propositions::{wright_construct, WrightOperator};
use histq_core::{sampling, CMat, Error, Tolerances};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::commands::{divergence, proposition, Catalog, REPRESENTATION_TOL};
use crate::report::*;
use crate::{Artifact, CliError, Outcome, Setup};

const AXIOM_TOL: f64 = 1e-12;
const WRIGHT_UNIT_TOL: f64 = 1e-12;
const SELF_ADJOINT_TOL: f64 = 1e-10;
const PROBABILITY_SUM_TOL: f64 = 1e-9;
const ENTROPY_TOL: f64 = 1e-10;
const COUNTEREXAMPLE_TOL: f64 = 1e-6;
const RANDOM_SYSTEMS: usize = 6;
const RANDOM_B: usize = 10;
/// Families larger than this are skipped by the picture comparison.
const BRIDGE_FAMILY_CAP: usize = 6;

struct Context {
    ds: DecoherenceState,
    times: Vec<f64>,
    histories: Vec<HomogeneousHistory>,
    /// One measurement per time, used for the picture comparison.
    pvms: Vec<Vec<CMat>>,
}

impl Context {
    fn sector_ok(&self) -> bool {
        checked_sector_dim(self.ds.dim(), self.times.len()).is_ok()
    }
}

fn random_context(rng: &mut ChaCha8Rng, dim: usize, n: usize) -> Context {
    let model = sampling::random_model(rng, dim);
    let times: Vec<f64> = (0..n).map(|k| 0.4 + 0.9 * k as f64).collect();
    let ds = DecoherenceState::new(model, TimeGrid::new(times.clone(), 0.0).expect("increasing times"))
        .expect("origins agree");
    let mut histories = vec![HomogeneousHistory::new()];
    histories.extend((0..4).map(|_| sampling::random_history(rng, dim, &times)));
    let pvms = (0..n).map(|_| sampling::random_pvm(rng, dim)).collect();
    Context {
        ds,
        times,
        histories,
        pvms,
    }
}

fn contexts(s: &Setup, rng: &mut ChaCha8Rng) -> Vec<Context> {
    let mut histories = vec![HomogeneousHistory::new()];
    histories.extend(s.histories.iter().map(|(_, h)| h.clone()));
    histories.extend((0..3).map(|_| sampling::random_history(rng, s.dim(), &s.times)));
    let mut out = vec![Context {
        ds: s.ds.clone(),
        times: s.times.clone(),
        histories,
        pvms: s.pvms.iter().map(|alts| alts[0].clone()).collect(),
    }];
    for k in 0..RANDOM_SYSTEMS {
        let dim = 2 + k % 3;
        let n = if dim == 4 { 1 } else { 1 + k % 2 };
        out.push(random_context(rng, dim, n));
    }
    out
}

fn axiom_checks(ctxs: &[Context]) -> Result<Vec<Check>, CliError> {
    let (mut norm, mut herm, mut pos, mut pairs) = (0.0f64, 0.0f64, 0.0f64, 0);
    for c in ctxs {
        let e = HomogeneousHistory::new();
        norm = norm.max((c.ds.eval_homogeneous(&e, &e)? - 1.0).norm());
        for h in &c.histories {
            pos = pos.max(-c.ds.eval_homogeneous(h, h)?.re);
            for k in &c.histories {
                let hk = c.ds.eval_homogeneous(h, k)?;
                let kh = c.ds.eval_homogeneous(k, h)?;
                herm = herm.max((hk - kh.conj()).norm());
                pairs += 1;
            }
        }
    }
    Ok(vec![
        Check::bounded("normalization", TAG_CLASS, ctxs.len(), norm, AXIOM_TOL),
        Check::bounded("hermiticity", TAG_CLASS, pairs, herm, AXIOM_TOL),
        Check::bounded("positivity", TAG_CLASS, pairs, pos.max(0.0), AXIOM_TOL),
    ])
}

fn representation_checks(ctxs: &[Context]) -> Result<Vec<Check>, CliError> {
    let (mut sum_res, mut ils_res, mut pairs) = (0.0f64, 0.0f64, 0);
    for c in ctxs.iter().filter(|c| c.sector_ok()) {
        let ils = c.ds.ils_construct(&c.times)?;
        let ops = c
            .histories
            .iter()
            .map(|h| embed_at(c.ds.model(), h, &c.times))
            .collect::<Result<Vec<_>, _>>()?;
        for (i, h) in c.histories.iter().enumerate() {
            for (j, k) in c.histories.iter().enumerate() {
                let d = c.ds.eval_homogeneous(h, k)?;
                sum_res = sum_res.max((c.ds.eval_sum_form(&ops[i], &ops[j])? - d).norm());
                ils_res = ils_res.max((ils.pair_value(&ops[i], &ops[j])? - d).norm());
                pairs += 1;
            }
        }
    }
    Ok(vec![
        Check::bounded("sum-form-agreement", TAG_SUM, pairs, sum_res, REPRESENTATION_TOL),
        Check::bounded("ils-agreement", TAG_ILS, pairs, ils_res, REPRESENTATION_TOL),
    ])
}

fn wright_checks(ctxs: &[Context], rng: &mut ChaCha8Rng) -> Result<Vec<Check>, CliError> {
    let (mut unit, mut form, mut adjoint, mut count) = (0.0f64, 0.0f64, 0.0f64, 0);
    let mut sectors = 0;
    for c in ctxs.iter().filter(|c| c.sector_ok()) {
        let t = wright_construct(&c.ds, &c.times)?;
        unit = unit.max((t.unit_weight() - 1.0).norm());
        sectors += 1;
        let size = t.space().space_dim();
        for _ in 0..RANDOM_B {
            let b = t.space().proposition(sampling::random_operator(rng, size))?;
            let b2 = t.space().proposition(sampling::random_operator(rng, size))?;
            let d = c.ds.eval_extended(&b, &b)?;
            form = form.max((t.form(&b, &b)? - d).norm());
            adjoint = adjoint.max(t.self_adjoint_residual(&b, &b2)?);
            count += 1;
        }
    }
    Ok(vec![
        Check::bounded("wright-unit", TAG_WRIGHT, sectors, unit, WRIGHT_UNIT_TOL),
        Check::bounded("wright-form", TAG_WRIGHT, count, form, REPRESENTATION_TOL),
        Check::bounded("wright-self-adjoint", TAG_WRIGHT, count, adjoint, SELF_ADJOINT_TOL),
    ])
}

fn bridge_check(ctxs: &[Context], tol: &Tolerances) -> Result<Check, CliError> {
    let (mut mismatches, mut compared) = (0usize, 0usize);
    for c in ctxs.iter().filter(|c| c.sector_ok() && !c.times.is_empty()) {
        let family_len: usize = c.pvms.iter().map(Vec::len).product();
        if family_len > BRIDGE_FAMILY_CAP {
            continue;
        }
        let t = wright_construct(&c.ds, &c.times)?;
        let mut family = vec![HomogeneousHistory::new()];
        for (&time, pvm) in c.times.iter().zip(&c.pvms) {
            family = family
                .iter()
                .flat_map(|h| pvm.iter().map(move |p| h.clone().with(time, p.clone())))
                .collect();
        }
        let props = family
            .iter()
            .map(|h| proposition(&c.ds, &t, h))
            .collect::<Result<Vec<_>, _>>()?;
        for labels in RestrictedGrowth::new(props.len()) {
            let members = blocks(&labels)
                .iter()
                .map(|b| {
                    b.iter()
                        .skip(1)
                        .try_fold(props[b[0]].clone(), |acc, &i| acc.add(&props[i]))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let w = Window::new(members)?;
            let k = check_k(&w, &t, tol)?;
            if k.probabilities.iter().all(|&p| p > tol.positivity) {
                compared += 1;
                if k.is_consistent() != check_op(&c.ds, &w, tol)?.is_consistent() {
                    mismatches += 1;
                }
            }
        }
    }
    Ok(Check::bounded(
        "picture-bridge",
        TAG_WRIGHT,
        compared,
        mismatches as f64,
        0.0,
    ))
}

fn single_time_windows(
    rng: &mut ChaCha8Rng,
    dim: usize,
) -> Result<(DecoherenceState, WrightOperator, Vec<Window>), CliError> {
    let model = sampling::random_model(rng, dim);
    let ds = DecoherenceState::new(model, TimeGrid::new(vec![0.6], 0.0)?)?;
    let t = wright_construct(&ds, &[0.6])?;
    let finest = pvm_from_basis(&sampling::random_unitary(rng, dim));
    let windows = RestrictedGrowth::new(dim)
        .map(|labels| {
            let members = blocks(&labels)
                .iter()
                .map(|b| {
                    t.space()
                        .proposition(b.iter().fold(CMat::zeros(dim, dim), |acc, &i| acc + &finest[i]))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Window::new(members)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok((ds, t, windows))
}

/// Largest entropy increase over strict refinement pairs, and the pair count.
fn refinement_increase(
    ds: &DecoherenceState,
    t: &WrightOperator,
    windows: &[Window],
    tol: &Tolerances,
) -> Result<(f64, usize), CliError> {
    let (mut worst, mut pairs) = (f64::NEG_INFINITY, 0);
    let entropies = |w: &Window| -> Result<Option<Vec<f64>>, CliError> {
        let mut out = match entropy_tw(t, w, tol) {
            Ok(r) => vec![r.value],
            Err(Error::InconsistentWindow) => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        for p in [1.0, 1.5, 2.0] {
            match entropy_il_p(ds, w, p, tol) {
                Ok(r) => out.push(r.value),
                Err(Error::InconsistentWindow) => return Ok(None),
                Err(e) => return Err(e.into()),
            }
        }
        Ok(Some(out))
    };
    let values = windows.iter().map(entropies).collect::<Result<Vec<_>, _>>()?;
    for (a, coarse) in windows.iter().enumerate() {
        for (b, fine) in windows.iter().enumerate() {
            let (Some(before), Some(after)) = (&values[a], &values[b]) else {
                continue;
            };
            if fine.len() <= coarse.len() || !refine_check(coarse, fine, tol.consistency) {
                continue;
            }
            pairs += 1;
            for (x, y) in before.iter().zip(after) {
                worst = worst.max(y - x);
            }
        }
    }
    Ok((worst, pairs))
}

fn entropy_checks(s: &Setup, catalog: &Catalog, rng: &mut ChaCha8Rng) -> Result<Vec<Check>, CliError> {
    let tol = &s.tol;
    let (_, consistent) = catalog.consistent();
    let mut sum_res: f64 = 0.0;
    let mut p2_res: f64 = 0.0;
    let mut p2_count = 0;
    for w in &consistent {
        sum_res = sum_res.max((w.probabilities().iter().sum::<f64>() - 1.0).abs());
        if w.is_projective(tol.projector) {
            if let Ok(il) = entropy_il_p(&s.ds, w, 2.0, tol) {
                p2_res = p2_res.max((il.value - entropy_tw(&catalog.t, w, tol)?.value).abs());
                p2_count += 1;
            }
        }
    }
    let projective: Vec<Window> = consistent
        .into_iter()
        .filter(|w| w.is_projective(tol.projector))
        .collect();
    let (mut worst, mut pairs) = refinement_increase(&s.ds, &catalog.t, &projective, tol)?;
    for dim in [2, 3, 4, 2, 3, 4] {
        let (ds, t, windows) = single_time_windows(rng, dim)?;
        let (w, p) = refinement_increase(&ds, &t, &windows, tol)?;
        worst = worst.max(w);
        pairs += p;
    }

    let rho = identity(2).map(|z| z * 0.5);
    let ds = DecoherenceState::new(
        SystemModel::with_tolerances(CMat::zeros(2, 2), rho, *tol)?,
        TimeGrid::new(vec![1.0], 0.0)?,
    )?;
    let t = wright_construct(&ds, &[1.0])?;
    let coarse = Window::unit(t.space());
    let fine = Window::new(vec![
        t.space().proposition(matrix_unit(2, 0, 0))?,
        t.space().proposition(matrix_unit(2, 1, 1))?,
    ])?;
    let increase = entropy_il_p(&ds, &fine, 3.0, tol)?.value - entropy_il_p(&ds, &coarse, 3.0, tol)?.value;

    Ok(vec![
        Check::bounded(
            "probability-sum",
            TAG_WRIGHT,
            projective.len(),
            sum_res,
            PROBABILITY_SUM_TOL,
        ),
        Check::bounded("entropy-p2-matches-wright", TAG_ENTROPY, p2_count, p2_res, ENTROPY_TOL),
        Check::bounded("refinement-monotone", TAG_ENTROPY, pairs, worst.max(0.0), ENTROPY_TOL),
        Check::bounded(
            "p3-counterexample",
            TAG_ENTROPY,
            1,
            (increase - std::f64::consts::LN_2 / 3.0).abs(),
            COUNTEREXAMPLE_TOL,
        ),
    ])
}

fn fq_checks() -> Result<Vec<Check>, CliError> {
    let grid: Vec<f64> = (0..60).map(|k| 0.1 * 100f64.powf(k as f64 / 59.0)).collect();
    let (mut lowest, mut drift, mut points) = (f64::INFINITY, 0usize, 0);
    for q in [1.0, 1.5, 2.0, 3.0] {
        for (ia, &a) in grid.iter().enumerate() {
            let values = grid.iter().map(|&b| fq(a, b, q)).collect::<Result<Vec<_>, _>>()?;
            points += values.len();
            lowest = values.iter().copied().fold(lowest, f64::min);
            let argmin = (0..grid.len())
                .min_by(|&x, &y| values[x].total_cmp(&values[y]))
                .expect("nonempty grid");
            drift = drift.max(argmin.abs_diff(ia));
        }
    }
    Ok(vec![
        Check::bounded("fq-nonnegative", TAG_ENTROPY, points, (-lowest).max(0.0), AXIOM_TOL),
        Check::bounded("fq-argmin", TAG_ENTROPY, 240, drift as f64, 1.0),
    ])
}

pub(crate) fn verify(s: &Setup, max_n: usize) -> Result<Outcome, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let ctxs = contexts(s, &mut rng);
    let catalog = Catalog::build(s)?;
    let mut checks = axiom_checks(&ctxs)?;
    checks.extend(representation_checks(&ctxs)?);
    checks.extend(wright_checks(&ctxs, &mut rng)?);
    checks.push(bridge_check(&ctxs, &s.tol)?);
    checks.extend(entropy_checks(s, &catalog, &mut rng)?);
    checks.extend(fq_checks()?);
    checks.extend(divergence(&s.omega, None, max_n)?.checks);
    let failed: Vec<&'static str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    let report = VerifyReport {
        command: "verify",
        scenario: s.name.clone(),
        seed: s.seed,
        max_n,
        passed: failed.is_empty(),
        checks,
        failed,
    };
    Ok(Outcome {
        passed: report.passed,
        artifacts: vec![Artifact {
            file_name: "verify.json".into(),
            contents: to_json(&report),
        }],
    })
}
