//! Machine-readable analysis reports.
//!
//! A report collects whichever sections a command computed. Verdicts are
//! tri-state so that an undecidable numerical question is never read as a
//! plain `false`.

use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::analysis::Analysis;
use crate::boundary::EndpointAnalysis;
use crate::classification::{lambda_sets, regular_decomposition, AtlasEntry, LambdaSets};
use crate::dirichlet::{
    check_adapted_in, check_regular_form_in, energy, form_descriptor_in, AdaptedReport, FormDescriptor,
    TestFunction, BOUNDARY_TOL,
};
use crate::error::{Error, Result};
use crate::hunt::{check_hunt_in, HXiStatus, StatusEntry, Witness};
use crate::measure::{Measure, MeasurePart};
use crate::reachability::CommunicationClasses;
use crate::sets::{PointSet, Span};
use crate::simulator::{
    analytic_hitting, build_chain_in, estimate_hitting, estimate_symmetry_defect, simulate_path, DefectEstimate,
    HittingEstimate, Holding, Mode, Observable, PathStatus, SimConfig,
};
use crate::spec_model::{validate, DiffusionSpec, Piece, ValidationReport, Violation};
use crate::symmetry::{check_symmetrizable_in, measure_family_in, ComponentInterval};

pub const TOOL: &str = "diffusion1d";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    True,
    False,
    Undetermined,
}

impl From<bool> for Verdict {
    fn from(b: bool) -> Verdict {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(match self {
            Verdict::True => "true",
            Verdict::False => "false",
            Verdict::Undetermined => "undetermined",
        })
    }
}

/// SHA-256 of the canonical JSON form of `spec`.
pub fn spec_digest(spec: &DiffusionSpec) -> String {
    hex::encode(Sha256::digest(spec.to_json().as_bytes()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationSection {
    pub valid: Verdict,
    pub violations: Vec<Violation>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationSection {
    pub sets: LambdaSets,
    pub regular_intervals: Vec<Span>,
    pub singular_atlas: Vec<AtlasEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HuntSection {
    pub holds: Verdict,
    pub witnesses: Vec<Witness>,
    pub singleton_statuses: Vec<StatusEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_xi: Option<HXiStatus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetrySection {
    pub symmetrizable_killed: Verdict,
    pub symmetrizable_full: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_ap: Option<PointSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_at: Option<PointSet>,
    pub components: Vec<ComponentInterval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub killed_measure: Option<Measure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub canonical_measure: Option<Measure>,
    /// A family member requested with explicit constants.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure: Option<Measure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergySection {
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirichletSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub descriptor: Option<FormDescriptor>,
    pub regular: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adapted: Option<AdaptedReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy: Option<EnergySection>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainSummary {
    pub window: [f64; 2],
    pub h: f64,
    pub nodes: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathSummary {
    pub status: PathStatus,
    pub lifetime: Option<f64>,
    pub final_time: f64,
    pub final_position: f64,
    pub events: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HittingSection {
    #[serde(flatten)]
    pub estimate: HittingEstimate,
    /// Closed-form value when start and target lie in one regular interval.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefectSection {
    pub f: Observable,
    pub g: Observable,
    /// Which measure the start points were drawn from.
    pub measure: String,
    #[serde(flatten)]
    pub estimate: DefectEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationSection {
    pub chain: ChainSummary,
    pub mode: Mode,
    pub holding: Holding,
    pub seed: u64,
    pub n_rep: u64,
    pub x0: f64,
    pub t_max: f64,
    pub path: PathSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hitting: Option<HittingSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub defect: Option<DefectSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub spec_name: String,
    pub spec_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<ClassificationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub communication_classes: Option<CommunicationClasses>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Vec<EndpointAnalysis>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hunt: Option<HuntSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<SymmetrySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dirichlet: Option<DirichletSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    pub warnings: Vec<String>,
}

fn verdict_of(r: &Result<bool>) -> Verdict {
    match r {
        Ok(b) => (*b).into(),
        Err(_) => Verdict::Undetermined,
    }
}

impl Report {
    pub fn new(spec: &DiffusionSpec) -> Report {
        Report {
            tool: TOOL,
            version: VERSION,
            spec_name: spec.name.clone(),
            spec_digest: spec_digest(spec),
            validation: None,
            classification: None,
            communication_classes: None,
            boundary: None,
            hunt: None,
            symmetry: None,
            dirichlet: None,
            simulation: None,
            warnings: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Runs validation; returns whether `spec` is valid.
    pub fn add_validation(&mut self, spec: &DiffusionSpec) -> bool {
        let ValidationReport { violations, warnings } = validate(spec);
        let valid = violations.is_empty();
        self.warnings.extend(warnings);
        self.validation = Some(ValidationSection {
            valid: valid.into(),
            violations,
        });
        valid
    }

    pub fn add_classification(&mut self, an: &Analysis) {
        let line = regular_decomposition(&an.spec);
        self.classification = Some(ClassificationSection {
            sets: lambda_sets(&an.spec),
            regular_intervals: line.lambda2_intervals,
            singular_atlas: line.singular_atlas,
        });
        self.boundary = Some(an.endpoints.clone());
        match an.classes() {
            Ok(c) => self.communication_classes = Some(c.clone()),
            Err(e) => self.warnings.push(format!("communication classes: {e}")),
        }
    }

    pub fn add_hunt(&mut self, an: &Analysis) {
        self.hunt = Some(match check_hunt_in(an) {
            Ok(h) => HuntSection {
                holds: h.holds.into(),
                witnesses: h.witnesses,
                singleton_statuses: h.singleton_statuses,
                h_xi: Some(h.h_xi),
                error: None,
            },
            Err(e) => HuntSection {
                holds: Verdict::Undetermined,
                witnesses: Vec::new(),
                singleton_statuses: Vec::new(),
                h_xi: None,
                error: Some(e.to_string()),
            },
        });
    }

    pub fn add_symmetry(&mut self, an: &Analysis, constants: Option<&[f64]>) -> Result<()> {
        let section = match check_symmetrizable_in(an) {
            Ok(r) => {
                let measure = match constants {
                    Some(c) => Some(measure_family_in(an, c)?),
                    None => None,
                };
                SymmetrySection {
                    symmetrizable_killed: r.symmetrizable_killed.into(),
                    symmetrizable_full: r.symmetrizable_full.into(),
                    lambda_ap: Some(r.lambda_ap),
                    lambda_at: Some(r.lambda_at),
                    components: r.components,
                    killed_measure: r.killed_measure,
                    canonical_measure: r.canonical_measure,
                    measure,
                    error: None,
                }
            }
            Err(e) if e.is_undetermined() => SymmetrySection {
                symmetrizable_killed: Verdict::Undetermined,
                symmetrizable_full: Verdict::Undetermined,
                lambda_ap: None,
                lambda_at: None,
                components: Vec::new(),
                killed_measure: None,
                canonical_measure: None,
                measure: None,
                error: Some(e.to_string()),
            },
            Err(e) => return Err(e),
        };
        self.symmetry = Some(section);
        Ok(())
    }

    pub fn add_dirichlet(&mut self, an: &Analysis, profiles: Option<(&TestFunction, &TestFunction)>) -> Result<()> {
        let mut notes = Vec::new();
        let descriptor = match form_descriptor_in(an) {
            Ok(d) => Some(d),
            Err(e @ Error::NotSymmetrizable(_)) => {
                notes.push(e.to_string());
                None
            }
            Err(e) if e.is_undetermined() => {
                notes.push(e.to_string());
                None
            }
            Err(e) => return Err(e),
        };
        let full = check_symmetrizable_in(an).ok().filter(|r| r.symmetrizable_full);
        let (regular, adapted) = match full.as_ref().and_then(|r| r.canonical_measure.as_ref()) {
            Some(m) => {
                let regular = check_regular_form_in(an, m);
                if let Err(e) = &regular {
                    notes.push(e.to_string());
                }
                let adapted = check_adapted_in(an).ok();
                (verdict_of(&regular), adapted)
            }
            None => {
                notes.push("regularity is decided only for processes symmetrizable on the whole line".into());
                (Verdict::Undetermined, None)
            }
        };
        let energy = match (profiles, &descriptor) {
            (Some((f, g)), Some(d)) => Some(EnergySection {
                value: energy(an, d, f, g)?,
                tolerance: BOUNDARY_TOL,
            }),
            _ => None,
        };
        self.dirichlet = Some(DirichletSection {
            descriptor,
            regular,
            adapted,
            energy,
            notes,
        });
        Ok(())
    }

    pub fn add_simulation(&mut self, an: &Analysis, req: &SimulationRequest) -> Result<()> {
        self.simulation = Some(simulation_section(an, req)?);
        Ok(())
    }

    /// True when some verdict in the report is undetermined.
    pub fn has_undetermined(&self) -> bool {
        let h = self.hunt.as_ref().is_some_and(|h| h.holds == Verdict::Undetermined);
        let s = self.symmetry.as_ref().is_some_and(|s| {
            s.symmetrizable_killed == Verdict::Undetermined || s.symmetrizable_full == Verdict::Undetermined
        });
        let d = self.dirichlet.as_ref().is_some_and(|d| {
            d.regular == Verdict::Undetermined && d.notes.iter().any(|n| n.contains("undetermined"))
        });
        let b = self.boundary.as_ref().is_some_and(|b| b.iter().any(|e| e.role.is_none()));
        h || s || d || b
    }

    pub fn validation_failed(&self) -> bool {
        self.validation.as_ref().is_some_and(|v| v.valid == Verdict::False)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationRequest {
    pub window: (f64, f64),
    pub h: f64,
    pub x0: f64,
    /// Hitting target; defaults to the right end of the window.
    pub target: Option<f64>,
    /// Time horizon for paths, hitting and the symmetry defect.
    pub t_max: f64,
    pub n_rep: u64,
    pub seed: u64,
    pub config: SimConfig,
    pub f: Option<Observable>,
    pub g: Option<Observable>,
}

impl Default for SimulationRequest {
    fn default() -> Self {
        SimulationRequest {
            window: (-10.0, 10.0),
            h: 0.02,
            x0: 0.0,
            target: None,
            t_max: 100.0,
            n_rep: 1000,
            seed: 0,
            config: SimConfig::default(),
            f: None,
            g: None,
        }
    }
}

/// The measure the symmetry defect is taken against: the canonical one if
/// the process is symmetrizable on the line, m⁰ in killed mode if the killed
/// process is, Lebesgue measure otherwise.
pub fn defect_measure(an: &Analysis, mode: Mode) -> (String, Measure) {
    if let Ok(r) = check_symmetrizable_in(an) {
        if let Some(m) = r.canonical_measure {
            return ("canonical".into(), m);
        }
        if mode == Mode::KilledAtTraps {
            if let Some(m) = r.killed_measure {
                return ("killed".into(), m);
            }
        }
    }
    let line = MeasurePart::lebesgue(Span::open(f64::NEG_INFINITY, f64::INFINITY));
    ("lebesgue".into(), Measure::new(vec![line], true))
}

pub fn simulation_section(an: &Analysis, req: &SimulationRequest) -> Result<SimulationSection> {
    let spec = &an.spec;
    let chain = build_chain_in(an, req.window, req.h)?;
    let cfg = &req.config;
    let path = simulate_path(spec, &chain, req.x0, req.t_max, cfg, req.seed)?;
    let path = PathSummary {
        status: path.status,
        lifetime: path.lifetime,
        final_time: *path.times.last().unwrap(),
        final_position: *path.positions.last().unwrap(),
        events: path.times.len(),
    };
    let target = req.target.unwrap_or(req.window.1);
    let estimate = estimate_hitting(spec, &chain, req.x0, target, req.t_max, req.n_rep, req.seed, cfg)?;
    let analytic = oracle_hitting(spec, req.window, req.x0, target);
    let hitting = Some(HittingSection { estimate, analytic });
    let defect = match (&req.f, &req.g) {
        (Some(f), Some(g)) => {
            let (name, m) = defect_measure(an, cfg.mode);
            let estimate = estimate_symmetry_defect(&chain, f, g, req.t_max, &m, req.n_rep, req.seed, cfg)?;
            Some(DefectSection {
                f: f.clone(),
                g: g.clone(),
                measure: name,
                estimate,
            })
        }
        (None, None) => None,
        _ => return Err(Error::InvalidArgument("the symmetry defect needs both f and g".into())),
    };
    Ok(SimulationSection {
        chain: ChainSummary {
            window: chain.window,
            h: chain.h,
            nodes: chain.nodes.len(),
            diagnostics: chain.diagnostics.clone(),
        },
        mode: cfg.mode,
        holding: cfg.holding,
        seed: req.seed,
        n_rep: req.n_rep,
        x0: req.x0,
        t_max: req.t_max,
        path,
        hitting,
        defect,
    })
}

/// The closed-form oracle applies when start, target and the window end
/// beyond the start all lie inside one regular interval, so the chain is
/// killed on that side exactly where the formula assumes.
fn oracle_hitting(spec: &DiffusionSpec, window: (f64, f64), x: f64, target: f64) -> Option<f64> {
    let Piece::RegularInterval(r) = spec.piece_at(x)? else {
        return None;
    };
    let (a, c) = if target > x { (window.0, target) } else { (target, window.1) };
    if !(r.contains(a) && r.contains(c)) || target == x {
        return None;
    }
    let p = analytic_hitting(spec, a, x, c).ok()?;
    Some(if target > x { p } else { 1.0 - p })
}
