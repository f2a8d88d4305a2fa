//! Scenario files: JSON input describing a system, a time grid, histories,
//! measurements and windows.

use std::fmt;
use std::path::Path;

use histq_core::consistency::{default_pvms, pvm_from_basis, Pvm, DEFAULT_SEARCH_BUDGET};
use histq_core::decoherence::DecoherenceState;
use histq_core::divergence::OmegaRule;
use histq_core::histories::HomogeneousHistory;
use histq_core::linalg::{self, fourier_basis, CMat, CVec, C64};
use histq_core::model::{SystemModel, TimeGrid};
use histq_core::Tolerances;
use serde::Deserialize;

/// Input failure with the JSON path of the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError {
    pub path: String,
    pub message: String,
}

impl ScenarioError {
    fn at(path: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ScenarioError {}

/// Complex matrix as parallel real and imaginary row arrays; `im` defaults to
/// zero.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorJson {
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralJson {
    pub weight: f64,
    pub vector: VectorJson,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RhoJson {
    Matrix(MatrixJson),
    Spectral(Vec<SpectralJson>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisName {
    Computational,
    /// Discrete Fourier basis; the Hadamard basis for a qubit.
    Hadamard,
    Fourier,
}

impl BasisName {
    fn unitary(self, dim: usize) -> CMat {
        match self {
            BasisName::Computational => linalg::identity(dim),
            BasisName::Hadamard | BasisName::Fourier => fourier_basis(dim),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpanJson {
    pub basis: BasisName,
    pub indices: Vec<usize>,
}

/// One single-time projector.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProjectorJson {
    Identity,
    Matrix(MatrixJson),
    /// Projector onto the span of the listed vectors of a named basis.
    Span(SpanJson),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PvmJson {
    /// Rank-one projectors onto a named basis.
    Basis(BasisName),
    Projectors(Vec<ProjectorJson>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoryJson {
    pub label: String,
    /// One projector per grid time.
    pub projectors: Vec<ProjectorJson>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowJson {
    pub label: String,
    /// Each member is a history with one projector per grid time.
    pub members: Vec<Vec<ProjectorJson>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OmegaJson {
    Geometric(f64),
    Explicit(Vec<f64>),
}

fn default_entropy_p() -> Vec<f64> {
    vec![1.0, 1.5, 2.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub dim: usize,
    #[serde(default)]
    pub hamiltonian: Option<MatrixJson>,
    pub rho: RhoJson,
    #[serde(default)]
    pub origin: f64,
    pub times: Vec<f64>,
    #[serde(default)]
    pub histories: Vec<HistoryJson>,
    /// Alternative measurements per grid time; computational and Fourier
    /// bases at every time when absent.
    #[serde(default)]
    pub pvms: Vec<Vec<PvmJson>>,
    #[serde(default)]
    pub windows: Vec<WindowJson>,
    #[serde(default = "default_entropy_p")]
    pub entropy_p: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub omega: Option<OmegaJson>,
    #[serde(default)]
    pub budget: Option<u64>,
}

/// A scenario that passed validation.
#[derive(Debug, Clone)]
pub struct Setup {
    pub name: String,
    pub ds: DecoherenceState,
    pub times: Vec<f64>,
    pub histories: Vec<(String, HomogeneousHistory)>,
    pub pvms: Vec<Vec<Pvm>>,
    pub windows: Vec<(String, Vec<HomogeneousHistory>)>,
    pub entropy_p: Vec<f64>,
    pub seed: u64,
    pub omega: OmegaRule,
    pub budget: u64,
    pub tol: Tolerances,
}

impl Setup {
    pub fn model(&self) -> &SystemModel {
        self.ds.model()
    }

    pub fn dim(&self) -> usize {
        self.ds.dim()
    }
}

pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let path = if path == "." { String::new() } else { path };
        ScenarioError::at(path, err.into_inner())
    })
}

pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::at("", format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

fn matrix(m: &MatrixJson, dim: usize, path: &str) -> Result<CMat, ScenarioError> {
    let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == dim && rows.iter().all(|r| r.len() == dim);
    if !shape_ok(&m.re) {
        return Err(ScenarioError::at(
            format!("{path}.re"),
            format!("expected a {dim}x{dim} array"),
        ));
    }
    if let Some(im) = &m.im {
        if !shape_ok(im) {
            return Err(ScenarioError::at(
                format!("{path}.im"),
                format!("expected a {dim}x{dim} array"),
            ));
        }
    }
    let out = CMat::from_fn(dim, dim, |r, c| {
        C64::new(m.re[r][c], m.im.as_ref().map_or(0.0, |im| im[r][c]))
    });
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(ScenarioError::at(path, "entries must be finite"));
    }
    Ok(out)
}

fn vector(v: &VectorJson, dim: usize, path: &str) -> Result<CVec, ScenarioError> {
    if v.re.len() != dim || v.im.as_ref().is_some_and(|im| im.len() != dim) {
        return Err(ScenarioError::at(path, format!("expected {dim} components")));
    }
    Ok(CVec::from_fn(dim, |k, _| {
        C64::new(v.re[k], v.im.as_ref().map_or(0.0, |im| im[k]))
    }))
}

fn projector(p: &ProjectorJson, dim: usize, tol: &Tolerances, path: &str) -> Result<CMat, ScenarioError> {
    let out = match p {
        ProjectorJson::Identity => linalg::identity(dim),
        ProjectorJson::Matrix(m) => matrix(m, dim, &format!("{path}.matrix"))?,
        ProjectorJson::Span(span) => {
            let u = span.basis.unitary(dim);
            let mut seen = vec![false; dim];
            let mut vectors = Vec::new();
            for (k, &i) in span.indices.iter().enumerate() {
                if i >= dim || seen[i] {
                    return Err(ScenarioError::at(
                        format!("{path}.span.indices[{k}]"),
                        format!("index {i} is out of range or repeated"),
                    ));
                }
                seen[i] = true;
                vectors.push(u.column(i).into_owned());
            }
            linalg::span_projector(&vectors, dim)
        }
    };
    if !linalg::is_projector(&out, tol.projector) {
        return Err(ScenarioError::at(path, "not an orthogonal projector"));
    }
    Ok(out)
}

fn history(
    entries: &[ProjectorJson],
    times: &[f64],
    dim: usize,
    tol: &Tolerances,
    path: &str,
) -> Result<HomogeneousHistory, ScenarioError> {
    if entries.len() != times.len() {
        return Err(ScenarioError::at(
            path,
            format!("expected {} projectors, one per time", times.len()),
        ));
    }
    let mut h = HomogeneousHistory::new();
    for (k, (entry, &t)) in entries.iter().zip(times).enumerate() {
        h.insert(t, projector(entry, dim, tol, &format!("{path}[{k}]"))?);
    }
    Ok(h)
}

impl Scenario {
    pub fn validate(&self, fallback_name: &str, tol: Tolerances) -> Result<Setup, ScenarioError> {
        let dim = self.dim;
        if dim == 0 {
            return Err(ScenarioError::at("dim", "must be positive"));
        }
        let hamiltonian = match &self.hamiltonian {
            Some(m) => matrix(m, dim, "hamiltonian")?,
            None => CMat::zeros(dim, dim),
        };
        let rho = match &self.rho {
            RhoJson::Matrix(m) => matrix(m, dim, "rho.matrix")?,
            RhoJson::Spectral(terms) => {
                if terms.is_empty() {
                    return Err(ScenarioError::at("rho.spectral", "needs at least one term"));
                }
                let mut rho = CMat::zeros(dim, dim);
                for (k, term) in terms.iter().enumerate() {
                    let path = format!("rho.spectral[{k}]");
                    if !(term.weight.is_finite() && term.weight >= 0.0) {
                        return Err(ScenarioError::at(
                            format!("{path}.weight"),
                            "must be finite and nonnegative",
                        ));
                    }
                    let v = vector(&term.vector, dim, &format!("{path}.vector"))?;
                    if (v.norm() - 1.0).abs() > 1e-10 {
                        return Err(ScenarioError::at(format!("{path}.vector"), "must be normalized"));
                    }
                    rho += linalg::ket_bra(&v, &v).scale(term.weight);
                }
                rho
            }
        };
        let model = SystemModel::with_tolerances(hamiltonian, rho, tol)
            .map_err(|e| {
                let field = if e.to_string().contains("rho") {
                    "rho"
                } else {
                    "hamiltonian"
                };
                ScenarioError::at(field, e)
            })?
            .with_origin(self.origin);
        if !self.origin.is_finite() {
            return Err(ScenarioError::at("origin", "must be finite"));
        }
        let grid = TimeGrid::new(self.times.clone(), self.origin).map_err(|e| ScenarioError::at("times", e))?;
        let ds = DecoherenceState::new(model, grid).map_err(|e| ScenarioError::at("origin", e))?;
        let times = self.times.clone();

        let histories = self
            .histories
            .iter()
            .enumerate()
            .map(|(k, h)| {
                let path = format!("histories[{k}].projectors");
                Ok((h.label.clone(), history(&h.projectors, &times, dim, &tol, &path)?))
            })
            .collect::<Result<Vec<_>, ScenarioError>>()?;

        let pvms = if self.pvms.is_empty() {
            vec![default_pvms(dim); times.len()]
        } else {
            if self.pvms.len() != times.len() {
                return Err(ScenarioError::at(
                    "pvms",
                    format!("expected one list per time ({})", times.len()),
                ));
            }
            self.pvms
                .iter()
                .enumerate()
                .map(|(t, alternatives)| {
                    if alternatives.is_empty() {
                        return Err(ScenarioError::at(
                            format!("pvms[{t}]"),
                            "needs at least one measurement",
                        ));
                    }
                    alternatives
                        .iter()
                        .enumerate()
                        .map(|(a, pvm)| match pvm {
                            PvmJson::Basis(name) => Ok(pvm_from_basis(&name.unitary(dim))),
                            PvmJson::Projectors(list) => list
                                .iter()
                                .enumerate()
                                .map(|(k, p)| projector(p, dim, &tol, &format!("pvms[{t}][{a}].projectors[{k}]")))
                                .collect(),
                        })
                        .collect::<Result<Vec<Pvm>, ScenarioError>>()
                })
                .collect::<Result<Vec<_>, ScenarioError>>()?
        };

        let windows = self
            .windows
            .iter()
            .enumerate()
            .map(|(w, win)| {
                if win.members.is_empty() {
                    return Err(ScenarioError::at(
                        format!("windows[{w}].members"),
                        "window has no members",
                    ));
                }
                let members = win
                    .members
                    .iter()
                    .enumerate()
                    .map(|(m, entries)| history(entries, &times, dim, &tol, &format!("windows[{w}].members[{m}]")))
                    .collect::<Result<Vec<_>, ScenarioError>>()?;
                Ok((win.label.clone(), members))
            })
            .collect::<Result<Vec<_>, ScenarioError>>()?;

        for (k, &p) in self.entropy_p.iter().enumerate() {
            if !(p.is_finite() && p >= 1.0) {
                return Err(ScenarioError::at(
                    format!("entropy_p[{k}]"),
                    "norm order must be at least 1",
                ));
            }
        }

        let omega = match &self.omega {
            None => OmegaRule::default(),
            Some(OmegaJson::Geometric(ratio)) => OmegaRule::Geometric { ratio: *ratio },
            Some(OmegaJson::Explicit(w)) => OmegaRule::Explicit(w.clone()),
        };
        omega.validate().map_err(|e| ScenarioError::at("omega", e))?;

        Ok(Setup {
            name: self.name.clone().unwrap_or_else(|| fallback_name.to_string()),
            ds,
            times,
            histories,
            pvms,
            windows,
            entropy_p: self.entropy_p.clone(),
            seed: self.seed,
            omega,
            budget: self.budget.unwrap_or(DEFAULT_SEARCH_BUDGET),
            tol,
        })
    }
}
