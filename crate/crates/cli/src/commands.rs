use histq_core::consistency::{is_maximally_refined, search_windows, Window, WindowSearch};
use histq_core::decoherence::DecoherenceState;
use histq_core::divergence::{
    appendix_b1_series, appendix_b2_series, b1_direct_value, b1_reduced_value, cauchy_excess, default_truncations,
    growth_fit, Growth, OmegaRule, QChoice, TruncationSeries, B1_MIN_N, B2_MIN_N,
};
use histq_core::entropy::{entropy_il_p, entropy_min, entropy_sup, entropy_tw};
use histq_core::histories::{embed_at, HomogeneousHistory};
use histq_core::linalg::identity;
use histq_core::propositions::{wright_construct, Proposition, WrightOperator};
use histq_core::Error;

use crate::report::*;
use crate::{Artifact, CliError, Outcome, Series, Setup};

/// Agreement threshold between representations of the functional.
pub(crate) const REPRESENTATION_TOL: f64 = 1e-9;

pub(crate) struct Entry {
    pub source: &'static str,
    pub label: Option<String>,
    pub window: Window,
}

/// Scenario windows followed by search results, all assessed.
pub(crate) struct Catalog {
    pub t: WrightOperator,
    pub search: WindowSearch,
    pub entries: Vec<Entry>,
}

impl Catalog {
    pub fn build(s: &Setup) -> Result<Self, CliError> {
        let t = wright_construct(&s.ds, &s.times)?;
        let mut entries = Vec::new();
        for (label, members) in &s.windows {
            let props = members
                .iter()
                .map(|h| proposition(&s.ds, &t, h))
                .collect::<Result<Vec<_>, _>>()?;
            entries.push(Entry {
                source: "scenario",
                label: Some(label.clone()),
                window: Window::new(props)?.assess(&s.ds, &t, &s.tol)?,
            });
        }
        let search = search_windows(&s.ds, &t, &s.pvms, s.budget, &s.tol)?;
        entries.extend(search.windows.iter().map(|w| Entry {
            source: "search",
            label: None,
            window: w.clone(),
        }));
        Ok(Self { t, search, entries })
    }

    /// Ids and windows of the consistent entries.
    pub fn consistent(&self) -> (Vec<usize>, Vec<Window>) {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.window.is_consistent())
            .map(|(id, e)| (id, e.window.clone()))
            .unzip()
    }
}

pub(crate) fn proposition(
    ds: &DecoherenceState,
    t: &WrightOperator,
    h: &HomogeneousHistory,
) -> Result<Proposition, CliError> {
    let op = embed_at(ds.model(), h, t.space().support())?;
    Ok(t.space().proposition(op.into_op())?)
}

fn json_artifact(name: &str, body: String) -> Artifact {
    Artifact {
        file_name: format!("{name}.json"),
        contents: body,
    }
}

pub(crate) fn decohere(s: &Setup) -> Result<Outcome, CliError> {
    let mut labels = vec!["unit".to_string()];
    let mut histories = vec![HomogeneousHistory::new()];
    for (label, h) in &s.histories {
        labels.push(label.clone());
        histories.push(h.clone());
    }
    let model = s.model();
    let ops = histories
        .iter()
        .map(|h| embed_at(model, h, &s.times))
        .collect::<Result<Vec<_>, _>>()?;

    let (ils, wright, sector_note) = match (s.ds.ils_construct(&s.times), wright_construct(&s.ds, &s.times)) {
        (Ok(x), Ok(t)) => (Some(x), Some(t), None),
        (Err(e @ Error::SectorTooLarge { .. }), _) | (_, Err(e @ Error::SectorTooLarge { .. })) => {
            (None, None, Some(e.to_string()))
        }
        (Err(e), _) | (_, Err(e)) => return Err(e.into()),
    };
    let props = match &wright {
        Some(t) => Some(
            ops.iter()
                .map(|p| t.space().proposition(p.op().clone()))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => None,
    };

    let mut rows = Vec::new();
    let mut residuals = AgreementResiduals {
        decf: 0.0,
        ils2: ils.as_ref().map(|_| 0.0),
        propa: wright.as_ref().map(|_| 0.0),
    };
    for (i, h) in histories.iter().enumerate() {
        for (j, k) in histories.iter().enumerate() {
            let row = |tag, value| PairRow {
                tag,
                h: labels[i].clone(),
                k: labels[j].clone(),
                value: Complex::from(value),
            };
            let d = s.ds.eval_homogeneous(h, k)?;
            rows.push(row(TAG_CLASS, d));
            let sum = s.ds.eval_sum_form(&ops[i], &ops[j])?;
            residuals.decf = residuals.decf.max((sum - d).norm());
            rows.push(row(TAG_SUM, sum));
            if let (Some(x), Some(r)) = (&ils, residuals.ils2.as_mut()) {
                let v = x.pair_value(&ops[i], &ops[j])?;
                *r = r.max((v - d).norm());
                rows.push(row(TAG_ILS, v));
            }
            if let (Some(t), Some(p), Some(r)) = (&wright, &props, residuals.propa.as_mut()) {
                let v = t.form(&p[i], &p[j])?;
                *r = r.max((v - d).norm());
                rows.push(row(TAG_WRIGHT, v));
            }
        }
    }
    let passed = [Some(residuals.decf), residuals.ils2, residuals.propa]
        .into_iter()
        .flatten()
        .all(|r| r <= REPRESENTATION_TOL);
    let report = DecohereReport {
        command: "decohere",
        scenario: s.name.clone(),
        dim: s.dim(),
        times: s.times.clone(),
        histories: labels,
        rows,
        residuals,
        sector_note,
    };
    Ok(Outcome {
        artifacts: vec![json_artifact("decohere", to_json(&report))],
        passed,
    })
}

fn tagged(w: &Window) -> Vec<TaggedCheck> {
    let mut out = Vec::new();
    if let Some(r) = w.k_report() {
        out.push(TaggedCheck {
            tag: TAG_WRIGHT,
            report: r.clone(),
        });
    }
    if let Some(r) = w.op_report() {
        out.push(TaggedCheck {
            tag: TAG_CLASS,
            report: r.clone(),
        });
    }
    out
}

pub(crate) fn windows(s: &Setup) -> Result<Outcome, CliError> {
    let catalog = Catalog::build(s)?;
    let (_, consistent) = catalog.consistent();
    let windows = catalog
        .entries
        .iter()
        .enumerate()
        .map(|(id, e)| {
            let ok = e.window.is_consistent();
            WindowRecord {
                id,
                source: e.source,
                label: e.label.clone(),
                size: e.window.len(),
                consistent: ok,
                maximally_refined: ok && is_maximally_refined(&e.window, &consistent, s.tol.consistency),
                checks: tagged(&e.window),
                members: e.window.members().iter().map(|m| Matrix::from(m.op())).collect(),
            }
        })
        .collect();
    let report = WindowsReport {
        command: "windows",
        scenario: s.name.clone(),
        times: s.times.clone(),
        search: SearchSummary {
            examined: catalog.search.examined,
            truncated: catalog.search.truncated,
            budget: s.budget,
            found: catalog.search.windows.len(),
        },
        windows,
    };
    Ok(Outcome {
        artifacts: vec![json_artifact("windows", to_json(&report))],
        passed: true,
    })
}

fn row(window: usize, measure: Measure, r: histq_core::entropy::EntropyReport) -> EntropyRow {
    EntropyRow {
        tag: TAG_ENTROPY,
        window,
        measure,
        p: r.p,
        value: r.value,
        terms: r.terms,
    }
}

pub(crate) fn entropy(s: &Setup) -> Result<Outcome, CliError> {
    let catalog = Catalog::build(s)?;
    let (ids, family) = catalog.consistent();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (id, e) in catalog.entries.iter().enumerate() {
        let w = &e.window;
        if !w.is_consistent() {
            skipped.push(Skipped {
                window: id,
                measure: Measure::Tw,
                p: None,
                reason: Error::InconsistentWindow.to_string(),
            });
            continue;
        }
        rows.push(row(id, Measure::Tw, entropy_tw(&catalog.t, w, &s.tol)?));
        for &p in &s.entropy_p {
            if !w.is_projective(s.tol.projector) {
                skipped.push(Skipped {
                    window: id,
                    measure: Measure::Il,
                    p: Some(p),
                    reason: "members are not projectors".into(),
                });
                continue;
            }
            match entropy_il_p(&s.ds, w, p, &s.tol) {
                Ok(r) => rows.push(row(id, Measure::Il, r)),
                Err(Error::InconsistentWindow) => skipped.push(Skipped {
                    window: id,
                    measure: Measure::Il,
                    p: Some(p),
                    reason: "a member has zero probability".into(),
                }),
                Err(e) => return Err(e.into()),
            }
        }
    }
    let min = match entropy_min(&catalog.t, &family, &s.tol) {
        Ok(m) => Some(WindowValue {
            tag: TAG_ENTROPY,
            window: ids[m.index],
            value: m.value,
        }),
        Err(Error::NoConsistentWindow) => None,
        Err(e) => return Err(e.into()),
    };
    let sup = ids
        .iter()
        .zip(&family)
        .map(|(&id, w)| {
            Ok(WindowValue {
                tag: TAG_ENTROPY,
                window: id,
                value: entropy_sup(&catalog.t, w, &family, &s.tol)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let report = EntropyReportOut {
        command: "entropy",
        scenario: s.name.clone(),
        rows,
        skipped,
        min,
        sup,
    };
    Ok(Outcome {
        artifacts: vec![json_artifact("entropy", to_json(&report))],
        passed: true,
    })
}

pub(crate) struct Divergence {
    pub omega: OmegaRule,
    pub series: Vec<(SeriesRecord, TruncationSeries)>,
    pub checks: Vec<Check>,
}

fn growth_record(
    series: &TruncationSeries,
    label: &'static str,
    expected: Growth,
    expected_slope: f64,
    slope_tolerance: f64,
) -> (SeriesRecord, Check) {
    let (growth, growth_error) = match growth_fit(series) {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let name = if label == "B1" { "b1-growth" } else { "b2-growth" };
    let check = match growth {
        Some(v) => {
            let residual = (v.slope - expected_slope).abs();
            Check {
                passed: v.classification == expected && residual <= slope_tolerance,
                ..Check::bounded(name, TAG_SUM, series.points.len(), residual, slope_tolerance)
            }
        }
        None => Check::failed(name, TAG_SUM, slope_tolerance),
    };
    let record = SeriesRecord {
        tag: TAG_SUM,
        label,
        expected_growth: match expected {
            Growth::Bounded => "bounded",
            Growth::Logarithmic => "logarithmic",
            Growth::Linear => "linear",
        },
        expected_slope,
        slope_tolerance,
        growth,
        growth_error,
        points: series.points.clone(),
    };
    (record, check)
}

/// Series, fits and structural checks for the two singular histories.
pub(crate) fn divergence(omega: &OmegaRule, which: Option<Series>, max_n: usize) -> Result<Divergence, CliError> {
    let mut out = Divergence {
        omega: omega.clone(),
        series: Vec::new(),
        checks: Vec::new(),
    };
    if which != Some(Series::B2) {
        let w = omega.weights(max_n);
        let series = appendix_b1_series(omega, &QChoice::Identity, &default_truncations(B1_MIN_N, max_n))?;
        let slope = 0.5 * w[0];
        let (record, check) = growth_record(&series, "B1", Growth::Linear, slope, 0.01 * slope);
        out.checks.push(check);
        let mut worst: f64 = 0.0;
        let closed = appendix_b1_series(omega, &QChoice::Identity, &[2, 3, 4, 5, 6])?;
        for (n, value) in closed.points {
            let weights = omega.weights(n);
            let q = identity(n * n);
            let reduced = b1_reduced_value(&weights, &q)?;
            let direct = b1_direct_value(&weights, &q)?;
            worst = worst.max((reduced - direct).norm()).max((reduced.re - value).abs());
        }
        out.checks
            .push(Check::bounded("b1-reduced-vs-direct", TAG_SUM, 5, worst, 1e-10));
        out.series.push((record, series));
    }
    if which != Some(Series::B1) {
        if max_n < 2 * B2_MIN_N {
            return Err(CliError::Invalid(format!(
                "--max-n must be at least {} for b2",
                2 * B2_MIN_N
            )));
        }
        let total: f64 = omega.weights(max_n).iter().sum();
        let series = appendix_b2_series(omega, &default_truncations(B2_MIN_N, max_n))?;
        let (record, check) = growth_record(&series, "B2", Growth::Logarithmic, total, 0.05 * total);
        out.checks.push(check);
        let lookup = |n: usize| series.points.iter().find(|p| p.0 == n).map(|p| p.1);
        let doublings: Vec<(usize, f64)> = series
            .points
            .iter()
            .filter_map(|&(n, v)| lookup(2 * n).map(|v2| (n, v2 - v)))
            .collect();
        let late: Vec<f64> = doublings.iter().filter(|d| d.0 >= 1024).map(|d| d.1).collect();
        let used = if late.is_empty() {
            doublings.iter().map(|d| d.1).collect()
        } else {
            late
        };
        let target = std::f64::consts::LN_2 * total;
        let worst = used.iter().map(|d| (d - target).abs()).fold(0.0, f64::max);
        out.checks
            .push(Check::bounded("b2-doubling", TAG_SUM, used.len(), worst, 0.05));
        let excess = cauchy_excess(&[2, 3, 4, 6, 8, 12, 16], 8);
        out.checks
            .push(Check::bounded("b2-cauchy", TAG_SUM, 21, excess.max(0.0), 1e-12));
        out.series.push((record, series));
    }
    Ok(out)
}

pub(crate) fn diverge(s: Option<&Setup>, which: Option<Series>, max_n: usize) -> Result<Outcome, CliError> {
    let omega = s.map_or_else(OmegaRule::default, |s| s.omega.clone());
    let d = divergence(&omega, which, max_n)?;
    let passed = d.checks.iter().all(|c| c.passed);
    let mut artifacts = Vec::new();
    let mut records = Vec::new();
    let mut csvs = Vec::new();
    for (record, series) in d.series {
        csvs.push(Artifact {
            file_name: format!("{}.csv", record.label.to_lowercase()),
            contents: series.to_csv(),
        });
        records.push(record);
    }
    let report = DivergeReport {
        command: "diverge",
        omega_rule: d.omega.describe(),
        series: records,
        checks: d.checks,
        passed,
    };
    artifacts.push(json_artifact("diverge", to_json(&report)));
    artifacts.extend(csvs);
    Ok(Outcome { artifacts, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_divergence_checks_pass() {
        let d = divergence(&OmegaRule::default(), None, 16384).unwrap();
        for c in &d.checks {
            assert!(c.passed, "{c:?}");
        }
        assert_eq!(d.series.len(), 2);
        let b1 = d.series[0].0.growth.unwrap();
        assert!((b1.slope - 0.25).abs() < 0.0025);
    }

    #[test]
    fn csv_names_follow_the_series() {
        let out = diverge(None, Some(Series::B1), 4096).unwrap();
        let names: Vec<&str> = out.artifacts.iter().map(|a| a.file_name.as_str()).collect();
        assert_eq!(names, ["diverge.json", "b1.csv"]);
        assert!(out.artifacts[1].contents.starts_with("N,value\n2,0.375\n"));
    }

    #[test]
    fn short_series_cannot_be_certified() {
        let out = diverge(None, Some(Series::B2), 512).unwrap();
        assert!(!out.passed);
        assert!(diverge(None, Some(Series::B2), 20).is_err());
    }
}
