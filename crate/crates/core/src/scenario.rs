//! Scenario files: a flat, human-writable `key.path = value` format, one file
//! per run. Unknown keys are rejected with their line number. Sweeps reuse a
//! base scenario plus a `sweep.*` grid block.

use crate::classify::{Classifier, TrichotomyCase};
use crate::coeff::{Coefficient, DomainKind, Side};
use crate::error::{Error, Result};
use crate::evolve::{self, Scheme};
use crate::grid::{self, BoundaryCondition, MeshGeometry};
use crate::krein::{self, KreinDiagnostics};
use crate::report::*;
use crate::shoot::{self, BlowupBoundary};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Word(String),
    Text(String),
    List(Vec<Value>),
    Call(String, Vec<f64>),
}

impl Value {
    fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(*v),
            _ => None,
        }
    }
    fn as_word(&self) -> Option<&str> {
        match self {
            Value::Word(w) => Some(w),
            Value::Text(t) => Some(t),
            _ => None,
        }
    }
    fn as_list_of_nums(&self) -> Option<Vec<f64>> {
        match self {
            Value::List(items) => items.iter().map(|v| v.as_num()).collect(),
            Value::Num(v) => Some(vec![*v]),
            _ => None,
        }
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Num(v) => write!(f, "{v}"),
            Value::Word(w) => write!(f, "{w}"),
            Value::Text(t) => write!(f, "\"{t}\""),
            Value::List(items) => {
                write!(f, "[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, "]")
            }
            Value::Call(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn parse_scalar(tok: &str, line: usize) -> Result<Value> {
    let tok = tok.trim();
    if tok.is_empty() {
        return Err(Error::Parse {
            line,
            detail: "empty value".into(),
        });
    }
    if let Ok(v) = tok.parse::<f64>() {
        return Ok(Value::Num(v));
    }
    if tok.starts_with('"') && tok.ends_with('"') && tok.len() >= 2 {
        return Ok(Value::Text(tok[1..tok.len() - 1].to_string()));
    }
    if let Some(open) = tok.find('(') {
        if tok.ends_with(')') {
            let name = tok[..open].trim().to_string();
            let inner = &tok[open + 1..tok.len() - 1];
            let args: std::result::Result<Vec<f64>, _> = inner
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse::<f64>())
                .collect();
            match args {
                Ok(args) => return Ok(Value::Call(name, args)),
                Err(_) => {
                    return Err(Error::Parse {
                        line,
                        detail: format!("arguments of `{name}(...)` must be numbers"),
                    })
                }
            }
        }
    }
    if tok
        .chars()
        .all(|c| c.is_alphanumeric() || c == '_' || c == '-' || c == '.')
    {
        return Ok(Value::Word(tok.to_string()));
    }
    Err(Error::Parse {
        line,
        detail: format!("cannot parse value `{tok}`"),
    })
}

fn parse_value(raw: &str, line: usize) -> Result<Value> {
    let raw = raw.trim();
    if raw.starts_with('[') {
        if !raw.ends_with(']') {
            return Err(Error::Parse {
                line,
                detail: "unterminated list".into(),
            });
        }
        let inner = &raw[1..raw.len() - 1];
        let mut items = Vec::new();
        let mut depth = 0usize;
        let mut start = 0usize;
        for (i, ch) in inner.char_indices() {
            match ch {
                '(' => depth += 1,
                ')' => depth = depth.saturating_sub(1),
                ',' if depth == 0 => {
                    let piece = &inner[start..i];
                    if !piece.trim().is_empty() {
                        items.push(parse_scalar(piece, line)?);
                    }
                    start = i + 1;
                }
                _ => {}
            }
        }
        let piece = &inner[start..];
        if !piece.trim().is_empty() {
            items.push(parse_scalar(piece, line)?);
        }
        return Ok(Value::List(items));
    }
    parse_scalar(raw, line)
}

/// Ordered key-value pairs of one scenario file.
#[derive(Debug, Clone, Default)]
pub struct RawScenario {
    pub entries: Vec<(String, Value, usize)>,
}

impl RawScenario {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let eq = stripped.find('=').ok_or_else(|| Error::Parse {
                line,
                detail: format!("expected `key = value`, got `{stripped}`"),
            })?;
            let key = stripped[..eq].trim().to_string();
            if key.is_empty() {
                return Err(Error::Parse {
                    line,
                    detail: "empty key".into(),
                });
            }
            let value = parse_value(&stripped[eq + 1..], line)?;
            entries.push((key, value, line));
        }
        Ok(RawScenario { entries })
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, _)| v)
    }

    fn num(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(|v| v.as_num())
    }

    fn word(&self, key: &str) -> Option<String> {
        self.get(key)
            .and_then(|v| v.as_word().map(|s| s.to_string()))
    }

    fn nums(&self, key: &str) -> Option<Vec<f64>> {
        self.get(key).and_then(|v| v.as_list_of_nums())
    }

    pub fn echo(&self) -> Vec<(String, String)> {
        self.entries
            .iter()
            .map(|(k, v, _)| (k.clone(), v.to_string()))
            .collect()
    }
}

const KNOWN_KEYS: &[&str] = &[
    "analyses",
    "seed",
    "coefficient.model",
    "coefficient.amplitude_left",
    "coefficient.amplitude_right",
    "coefficient.exponent_left",
    "coefficient.exponent_right",
    "coefficient.exponent",
    "coefficient.amplitude",
    "coefficient.table",
    "geometry",
    "geometry.length",
    "geometry.a",
    "geometry.b",
    "mesh.n_cells",
    "mesh.grading",
    "bc.kind",
    "bc.alpha",
    "bc.beta",
    "evolve.horizon",
    "evolve.steps",
    "evolve.scheme",
    "evolve.datum",
    "evolve.trials",
    "deficiency.gammas",
    "krein.gammas",
    "krein.alpha",
    "krein.beta",
    "cutoffs.n",
    "cutoffs.side",
    "blowup.boundary",
    "blowup.x_max",
    "sweep.exponents",
    "sweep.alpha_over_beta",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Analysis {
    Classify,
    Deficiency,
    Evolve,
    Krein,
    Blowup,
    Decompose,
    Cutoffs,
}

impl Analysis {
    fn from_word(w: &str) -> Option<Analysis> {
        match w {
            "classify" => Some(Analysis::Classify),
            "deficiency" => Some(Analysis::Deficiency),
            "evolve" => Some(Analysis::Evolve),
            "krein" => Some(Analysis::Krein),
            "blowup" => Some(Analysis::Blowup),
            "decompose" => Some(Analysis::Decompose),
            "cutoffs" => Some(Analysis::Cutoffs),
            _ => None,
        }
    }
    fn name(&self) -> &'static str {
        match self {
            Analysis::Classify => "classify",
            Analysis::Deficiency => "deficiency",
            Analysis::Evolve => "evolve",
            Analysis::Krein => "krein",
            Analysis::Blowup => "blowup",
            Analysis::Decompose => "decompose",
            Analysis::Cutoffs => "cutoffs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DatumSpec {
    Gaussian { center: f64, width: f64 },
    Indicator { a: f64, b: f64 },
    Constant,
}

impl DatumSpec {
    pub fn sample(&self, x: f64) -> f64 {
        match *self {
            DatumSpec::Gaussian { center, width } => {
                let z = (x - center) / width;
                (-0.5 * z * z).exp()
            }
            DatumSpec::Indicator { a, b } => {
                if x >= a && x <= b {
                    1.0
                } else {
                    0.0
                }
            }
            DatumSpec::Constant => 1.0,
        }
    }

    pub fn extent(&self) -> f64 {
        match *self {
            DatumSpec::Gaussian { center, width } => center.abs() + 6.0 * width,
            DatumSpec::Indicator { a, b } => a.abs().max(b.abs()),
            DatumSpec::Constant => 1.0,
        }
    }
}

/// Numerical tolerances pinned by the verification suite; every assertion
/// threshold lives here so a tolerance-override file can adjust them.
#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub quad_rel: f64,
    pub positivity: f64,
    pub markov: f64,
    pub l2_monotone: f64,
    pub drift: f64,
    pub far_flux: f64,
    pub rank_ratio: f64,
    pub kappa_floor: f64,
    pub alignment: f64,
    pub cutoff_identity: f64,
    pub cutoff_l1_ratio: f64,
    pub growth_threshold: f64,
    pub lambda_negative: f64,
    pub invariance_leak: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            quad_rel: 1e-10,
            positivity: 1e-12,
            markov: 1e-10,
            l2_monotone: 1e-12,
            drift: 1e-6,
            far_flux: 1e-7,
            rank_ratio: 1e-6,
            kappa_floor: -1e-10,
            alignment: 0.999,
            cutoff_identity: 1e-8,
            cutoff_l1_ratio: 0.05,
            growth_threshold: 1e3,
            lambda_negative: 1e-8,
            invariance_leak: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn apply_overrides(&mut self, text: &str) -> Result<()> {
        let raw = RawScenario::parse(text)?;
        for (key, value, line) in &raw.entries {
            let v = value.as_num().ok_or_else(|| Error::Parse {
                line: *line,
                detail: format!("tolerance `{key}` must be a number"),
            })?;
            match key.as_str() {
                "quad_rel" => self.quad_rel = v,
                "positivity" => self.positivity = v,
                "markov" => self.markov = v,
                "l2_monotone" => self.l2_monotone = v,
                "drift" => self.drift = v,
                "far_flux" => self.far_flux = v,
                "rank_ratio" => self.rank_ratio = v,
                "kappa_floor" => self.kappa_floor = v,
                "alignment" => self.alignment = v,
                "cutoff_identity" => self.cutoff_identity = v,
                "cutoff_l1_ratio" => self.cutoff_l1_ratio = v,
                "growth_threshold" => self.growth_threshold = v,
                "lambda_negative" => self.lambda_negative = v,
                "invariance_leak" => self.invariance_leak = v,
                other => {
                    return Err(Error::Parse {
                        line: *line,
                        detail: format!("unknown tolerance key `{other}`"),
                    })
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub raw: RawScenario,
    pub analyses: BTreeSet<Analysis>,
    pub seed: u64,
    pub coefficient: Coefficient,
    pub n_cells: usize,
    pub grading: f64,
    pub bc: BoundaryCondition,
    pub horizon: f64,
    pub steps: usize,
    pub scheme: Scheme,
    pub datum: DatumSpec,
    pub trials: usize,
    pub deficiency_gammas: Vec<f64>,
    pub krein_gammas: Vec<f64>,
    pub krein_alpha: f64,
    pub krein_beta: f64,
    pub cutoff_ns: Vec<f64>,
    pub cutoff_side: Side,
    pub blowup_boundaries: Vec<BlowupBoundary>,
    pub blowup_x_max: f64,
    pub sweep_exponents: Vec<f64>,
    pub sweep_alpha_over_beta: Vec<f64>,
}

impl Scenario {
    pub fn from_file(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text, path.parent().map(PathBuf::from))
    }

    pub fn from_text(text: &str, base_dir: Option<PathBuf>) -> Result<Scenario> {
        let raw = RawScenario::parse(text)?;
        for (key, _, line) in &raw.entries {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Parse {
                    line: *line,
                    detail: format!("unknown key `{key}`"),
                });
            }
        }

        let mut analyses = BTreeSet::new();
        match raw.get("analyses") {
            Some(Value::List(items)) => {
                for item in items {
                    let w = item.as_word().ok_or_else(|| Error::Parse {
                        line: 0,
                        detail: "analyses must be words".into(),
                    })?;
                    let a = Analysis::from_word(w).ok_or_else(|| Error::Parse {
                        line: 0,
                        detail: format!("unknown analysis `{w}`"),
                    })?;
                    analyses.insert(a);
                }
            }
            Some(_) => {
                return Err(Error::Parse {
                    line: 0,
                    detail: "analyses must be a list".into(),
                })
            }
            None => {
                analyses.insert(Analysis::Classify);
            }
        }

        let geometry_word = raw.word("geometry").unwrap_or_else(|| "line".into());
        let domain = match geometry_word.as_str() {
            "line" => DomainKind::Line,
            "halfline" | "halfline_right" => DomainKind::HalfLine(Side::Right),
            "halfline_left" => DomainKind::HalfLine(Side::Left),
            "interval" => {
                let a = raw
                    .num("geometry.a")
                    .ok_or_else(|| Error::MissingParameter {
                        analysis: "geometry".into(),
                        key: "geometry.a".into(),
                    })?;
                let b = raw
                    .num("geometry.b")
                    .ok_or_else(|| Error::MissingParameter {
                        analysis: "geometry".into(),
                        key: "geometry.b".into(),
                    })?;
                DomainKind::Interval(a, b)
            }
            other => {
                return Err(Error::Parse {
                    line: 0,
                    detail: format!("unknown geometry `{other}`"),
                })
            }
        };

        let model = raw
            .word("coefficient.model")
            .unwrap_or_else(|| "powerlaw".into());
        let coefficient = match model.as_str() {
            "powerlaw" => {
                let sym_exp = raw.num("coefficient.exponent");
                let sym_amp = raw.num("coefficient.amplitude").unwrap_or(1.0);
                let el = raw
                    .num("coefficient.exponent_left")
                    .or(sym_exp)
                    .ok_or_else(|| Error::MissingParameter {
                        analysis: "coefficient".into(),
                        key: "coefficient.exponent_left".into(),
                    })?;
                let er = raw
                    .num("coefficient.exponent_right")
                    .or(sym_exp)
                    .ok_or_else(|| Error::MissingParameter {
                        analysis: "coefficient".into(),
                        key: "coefficient.exponent_right".into(),
                    })?;
                let al = raw.num("coefficient.amplitude_left").unwrap_or(sym_amp);
                let ar = raw.num("coefficient.amplitude_right").unwrap_or(sym_amp);
                Coefficient::power_law(al, el, ar, er, domain)?
            }
            "tabulated" => {
                let rel = raw
                    .word("coefficient.table")
                    .ok_or_else(|| Error::MissingParameter {
                        analysis: "coefficient".into(),
                        key: "coefficient.table".into(),
                    })?;
                let path = match &base_dir {
                    Some(dir) => dir.join(&rel),
                    None => PathBuf::from(&rel),
                };
                let (xs, cs) = read_table_csv(&path)?;
                Coefficient::tabulated(xs, cs, domain)?
            }
            other => {
                return Err(Error::Parse {
                    line: 0,
                    detail: format!("unknown coefficient model `{other}`"),
                })
            }
        };

        let bc_word = raw.word("bc.kind").unwrap_or_else(|| "friedrichs".into());
        let alpha = raw.num("bc.alpha").unwrap_or(0.0);
        let beta = raw.num("bc.beta").unwrap_or(1.0);
        let bc = match bc_word.as_str() {
            "friedrichs" => BoundaryCondition::FriedrichsAuto,
            "dirichlet" => BoundaryCondition::Dirichlet,
            "neumann" => BoundaryCondition::NeumannFlux,
            "robin" => BoundaryCondition::Robin { alpha, beta },
            "linejump" => BoundaryCondition::LineJump { alpha, beta },
            other => {
                return Err(Error::Parse {
                    line: 0,
                    detail: format!("unknown bc `{other}`"),
                })
            }
        };

        let datum = match raw.get("evolve.datum") {
            Some(Value::Call(name, args)) => match (name.as_str(), args.len()) {
                ("gaussian", 2) => DatumSpec::Gaussian {
                    center: args[0],
                    width: args[1],
                },
                ("indicator", 2) => DatumSpec::Indicator {
                    a: args[0],
                    b: args[1],
                },
                _ => {
                    return Err(Error::Parse {
                        line: 0,
                        detail: format!("unknown datum `{name}` with {} arguments", args.len()),
                    })
                }
            },
            Some(Value::Word(w)) if w == "constant" => DatumSpec::Constant,
            Some(_) => {
                return Err(Error::Parse {
                    line: 0,
                    detail: "evolve.datum must be gaussian(c,w), indicator(a,b) or constant".into(),
                })
            }
            None => DatumSpec::Constant,
        };

        let scheme = match raw.word("evolve.scheme").as_deref() {
            Some("crank_nicolson") => Scheme::CrankNicolson,
            Some("backward_euler") | None => Scheme::BackwardEuler,
            Some(other) => {
                return Err(Error::Parse {
                    line: 0,
                    detail: format!("unknown scheme `{other}`"),
                })
            }
        };

        let scenario = Scenario {
            analyses,
            seed: raw.num("seed").map(|v| v as u64).unwrap_or(0),
            n_cells: raw.num("mesh.n_cells").map(|v| v as usize).unwrap_or(512),
            grading: raw.num("mesh.grading").unwrap_or(0.9),
            bc,
            horizon: raw.num("evolve.horizon").unwrap_or(0.0),
            steps: raw.num("evolve.steps").map(|v| v as usize).unwrap_or(0),
            scheme,
            datum,
            trials: raw.num("evolve.trials").map(|v| v as usize).unwrap_or(8),
            deficiency_gammas: raw.nums("deficiency.gammas").unwrap_or_else(|| vec![1.0]),
            krein_gammas: raw.nums("krein.gammas").unwrap_or_default(),
            krein_alpha: raw.num("krein.alpha").unwrap_or(0.0),
            krein_beta: raw.num("krein.beta").unwrap_or(1.0),
            cutoff_ns: raw.nums("cutoffs.n").unwrap_or_default(),
            cutoff_side: match raw.word("cutoffs.side").as_deref() {
                Some("left") => Side::Left,
                _ => Side::Right,
            },
            blowup_boundaries: match raw.get("blowup.boundary") {
                Some(Value::List(items)) => items
                    .iter()
                    .map(|v| match v {
                        Value::Num(g) => Ok(BlowupBoundary::FluxRatio(*g)),
                        Value::Word(w) if w == "dirichlet" => Ok(BlowupBoundary::Dirichlet),
                        _ => Err(Error::Parse {
                            line: 0,
                            detail: "blowup.boundary entries are numbers or `dirichlet`".into(),
                        }),
                    })
                    .collect::<Result<Vec<_>>>()?,
                Some(Value::Num(g)) => vec![BlowupBoundary::FluxRatio(*g)],
                Some(_) => {
                    return Err(Error::Parse {
                        line: 0,
                        detail: "bad blowup.boundary".into(),
                    })
                }
                None => vec![],
            },
            blowup_x_max: raw.num("blowup.x_max").unwrap_or(0.0),
            sweep_exponents: raw.nums("sweep.exponents").unwrap_or_default(),
            sweep_alpha_over_beta: raw.nums("sweep.alpha_over_beta").unwrap_or_default(),
            coefficient,
            raw,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Required parameters are checked before any computation starts.
    fn validate(&self) -> Result<()> {
        let need = |cond: bool, analysis: Analysis, key: &str| -> Result<()> {
            if cond {
                Ok(())
            } else {
                Err(Error::MissingParameter {
                    analysis: analysis.name().into(),
                    key: key.into(),
                })
            }
        };
        if self.analyses.contains(&Analysis::Evolve) {
            need(self.horizon > 0.0, Analysis::Evolve, "evolve.horizon")?;
            need(self.steps > 0, Analysis::Evolve, "evolve.steps")?;
        }
        if self.analyses.contains(&Analysis::Krein) {
            need(
                !self.krein_gammas.is_empty(),
                Analysis::Krein,
                "krein.gammas",
            )?;
        }
        if self.analyses.contains(&Analysis::Cutoffs) {
            need(!self.cutoff_ns.is_empty(), Analysis::Cutoffs, "cutoffs.n")?;
        }
        if self.analyses.contains(&Analysis::Blowup) {
            need(self.blowup_x_max > 0.0, Analysis::Blowup, "blowup.x_max")?;
            need(
                !self.blowup_boundaries.is_empty(),
                Analysis::Blowup,
                "blowup.boundary",
            )?;
        }
        Ok(())
    }

    /// Mesh geometry for the coefficient's domain; infinite domains are
    /// truncated wide enough for the requested horizon.
    pub fn resolve_geometry(&self) -> MeshGeometry {
        let length = self.raw.num("geometry.length").unwrap_or_else(|| {
            grid::suggested_truncation(
                &self.coefficient,
                self.horizon.max(1.0),
                self.datum.extent(),
            )
        });
        match self.coefficient.domain() {
            DomainKind::Line => MeshGeometry::Line { length },
            DomainKind::HalfLine(side) => MeshGeometry::HalfLine { length, side },
            DomainKind::Interval(a, b) => MeshGeometry::Interval { a, b },
        }
    }
}

fn read_table_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let mut xs = Vec::new();
    let mut cs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(',');
        let sx = parts.next().unwrap_or("").trim();
        let sc = parts.next().unwrap_or("").trim();
        if idx == 0 && sx.parse::<f64>().is_err() {
            continue; // header row
        }
        let x: f64 = sx.parse().map_err(|_| Error::Parse {
            line: idx + 1,
            detail: format!("bad x value `{sx}` in table"),
        })?;
        let c: f64 = sc.parse().map_err(|_| Error::Parse {
            line: idx + 1,
            detail: format!("bad c value `{sc}` in table"),
        })?;
        xs.push(x);
        cs.push(c);
    }
    Ok((xs, cs))
}

pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Execute the requested analyses in dependency order (classification first);
/// analysis errors are recorded per analysis without aborting the rest.
pub fn run_scenario(scenario: &Scenario, tol: &Tolerances) -> (RunReport, Vec<Artifact>) {
    let mut artifacts = Vec::new();
    let mut assertions = Vec::new();
    let mut analyses = AnalysisResults::default();
    let c = &scenario.coefficient;
    let classifier = Classifier::default();

    // classification runs first: later analyses consult it
    let classification = classifier.classify(c);
    if let Ok(report) = &classification {
        for p in &report.profiles {
            assertions.push(Assertion::check(
                &format!("classify.linf_implies_l2.{}", p.side.name()),
                !p.nu_in_linf.holds || p.nu_in_l2.holds,
                format!("linf {} l2 {}", p.nu_in_linf.holds, p.nu_in_l2.holds),
            ));
        }
    }
    let case = classification.as_ref().ok().map(|r| r.case);
    analyses.classification = Outcome::from_result(classification);

    let geometry = scenario.resolve_geometry();
    let mut mesh_info = None;

    if scenario.analyses.contains(&Analysis::Deficiency) {
        let result: crate::error::Result<Vec<DeficiencySummary>> = (|| {
            let mut out = Vec::new();
            let sides: Vec<Side> = [Side::Left, Side::Right]
                .into_iter()
                .filter(|s| c.domain().has_side(*s))
                .collect();
            for &gamma in &scenario.deficiency_gammas {
                let mut side_diags = Vec::new();
                for &side in &sides {
                    let d = shoot::deficiency_index(c, side, gamma)?;
                    side_diags.push((side.name().to_string(), d));
                }
                let eta_summary = sides
                    .iter()
                    .find(|s| **s == Side::Right)
                    .and_then(|&s| shoot::eta(c, s, gamma, 1e-8).ok())
                    .map(|sol| {
                        let props = shoot::eta_properties(&sol);
                        artifacts.push(Artifact {
                            name: format!("eta_gamma_{gamma}.csv"),
                            bytes: shooting_csv(&sol).into_bytes(),
                        });
                        EtaSummary {
                            positive: props.positive,
                            non_increasing: props.non_increasing,
                            tail_exponent: props.tail_exponent,
                        }
                    });
                if let (Some(case), Some((_, d))) = (case, side_diags.first()) {
                    let max_index = side_diags
                        .iter()
                        .map(|(_, d)| d.index)
                        .max()
                        .unwrap_or(d.index);
                    let agree = match case {
                        TrichotomyCase::I => max_index == 0,
                        _ => max_index == 1,
                    };
                    assertions.push(Assertion::check(
                        &format!("deficiency.agrees_with_classification.gamma_{gamma}"),
                        agree,
                        format!("case {case:?}, max side index {max_index}"),
                    ));
                }
                if let Some(eta) = &eta_summary {
                    assertions.push(Assertion::check(
                        &format!("deficiency.eta_positive_nonincreasing.gamma_{gamma}"),
                        eta.positive && eta.non_increasing,
                        format!(
                            "positive {} non_increasing {}",
                            eta.positive, eta.non_increasing
                        ),
                    ));
                }
                out.push(DeficiencySummary {
                    gamma,
                    sides: side_diags,
                    eta: eta_summary,
                });
            }
            Ok(out)
        })();
        analyses.deficiency = Outcome::from_result(result);
    }

    if scenario.analyses.contains(&Analysis::Evolve) {
        let result: crate::error::Result<EvolveSummary> = (|| {
            let mesh = grid::build_mesh(geometry, scenario.n_cells, scenario.grading)?;
            mesh_info = Some(MeshInfo {
                n_cells: mesh.n_cells(),
                grading_ratio: mesh.grading_ratio,
                truncation: {
                    let (a, b) = geometry.span();
                    b.max(-a)
                },
                min_cell: mesh.min_cell(),
                max_min_cell_ratio: mesh.max_min_cell_ratio,
            });
            let op = grid::assemble(c, &mesh, scenario.bc)?;
            let datum: Vec<f64> = op
                .positions()
                .iter()
                .map(|x| scenario.datum.sample(*x))
                .collect();
            let trace = evolve::evolve(
                &op,
                &datum,
                scenario.horizon,
                scenario.steps,
                scenario.scheme,
            )?;
            let sup0 = trace.metrics[0].sup_norm.max(1e-300);
            let min_over_trace = trace
                .metrics
                .iter()
                .map(|m| m.min_value)
                .fold(f64::INFINITY, f64::min);
            let sup_expansion = trace
                .metrics
                .iter()
                .map(|m| m.sup_norm / sup0)
                .fold(0.0f64, f64::max);
            let l2_monotone = trace
                .metrics
                .windows(2)
                .all(|w| w[1].l2_norm <= w[0].l2_norm * (1.0 + tol.l2_monotone));
            let final_m = *trace.metrics.last().unwrap();
            let left_frac = final_m.mass_left_of_origin / final_m.l1_mass.max(1e-300);

            let markovian = op.bc.penalty_sign() != Some(-1.0);
            if markovian && scenario.scheme == Scheme::BackwardEuler {
                assertions.push(Assertion::check(
                    "evolve.positivity",
                    datum.iter().all(|v| *v >= 0.0) && min_over_trace >= -tol.positivity * sup0,
                    format!("min over trace {min_over_trace:.3e}"),
                ));
                assertions.push(Assertion::check(
                    "evolve.markov_sup_bound",
                    sup_expansion <= 1.0 + tol.markov,
                    format!("sup expansion {sup_expansion}"),
                ));
                assertions.push(Assertion::check(
                    "evolve.l2_contraction",
                    l2_monotone,
                    "l2 norm monotone along the trace".into(),
                ));
            }
            let conservative_bc = matches!(
                op.bc,
                BoundaryCondition::NeumannFlux
                    | BoundaryCondition::FriedrichsAuto
                    | BoundaryCondition::LineJump { .. }
            );
            let conservativeness = if conservative_bc && op.bc.penalty_sign() != Some(-1.0) {
                match evolve::conservativeness(&op, &trace, tol.far_flux) {
                    Ok(r) => {
                        // Neumann-type interior conservation; Dirichlet would absorb
                        let expect_conservative = match case {
                            Some(TrichotomyCase::III) => {
                                matches!(geometry, MeshGeometry::Line { .. })
                            }
                            _ => true,
                        };
                        if expect_conservative {
                            assertions.push(Assertion::check(
                                "evolve.conservative",
                                r.max_mass_drift < tol.drift,
                                format!("mass drift {:.3e}", r.max_mass_drift),
                            ));
                        }
                        Some(r)
                    }
                    Err(e) => {
                        assertions.push(Assertion::check(
                            "evolve.conservative",
                            false,
                            e.to_string(),
                        ));
                        None
                    }
                }
            } else {
                None
            };

            artifacts.push(Artifact {
                name: "trace.csv".into(),
                bytes: trace_csv(&trace).into_bytes(),
            });
            artifacts.push(Artifact {
                name: "snapshots.bin".into(),
                bytes: snapshot_dump(&trace),
            });

            // penalty extensions additionally run the violation probe
            if matches!(
                op.bc,
                BoundaryCondition::Robin { .. } | BoundaryCondition::LineJump { .. }
            ) {
                let v = evolve::submarkov_violation(
                    &op,
                    scenario.trials,
                    scenario.horizon,
                    scenario.steps,
                    scenario.seed ^ 0x5eed,
                )?;
                match op.bc.penalty_sign() {
                    Some(s) if s < 0.0 => {
                        assertions.push(Assertion::check(
                            "submarkov.negative_eigenvalue",
                            v.lambda_min < -tol.lambda_negative,
                            format!("lambda_min {:.6e}", v.lambda_min),
                        ));
                        assertions.push(Assertion::check(
                            "submarkov.sup_expands",
                            v.sup_expansion > 1.0,
                            format!("sup expansion {}", v.sup_expansion),
                        ));
                    }
                    _ => {
                        assertions.push(Assertion::check(
                            "submarkov.clean",
                            v.positivity_failures == 0 && v.sup_expansion <= 1.0 + tol.markov,
                            format!(
                                "failures {} expansion {}",
                                v.positivity_failures, v.sup_expansion
                            ),
                        ));
                    }
                }
                analyses.submarkov = Outcome::Ok { data: v };
            }

            Ok(EvolveSummary {
                scheme: format!("{:?}", scenario.scheme),
                positivity_reliable: scenario.scheme == Scheme::BackwardEuler,
                horizon: scenario.horizon,
                n_steps: scenario.steps,
                final_metrics: final_m,
                min_over_trace,
                sup_expansion,
                l2_monotone,
                left_mass_fraction_final: left_frac,
                conservativeness,
            })
        })();
        analyses.evolve = Outcome::from_result(result);
    }

    if scenario.analyses.contains(&Analysis::Krein) {
        let result: crate::error::Result<Vec<KreinDiagnostics>> = (|| {
            let geometry = match geometry {
                MeshGeometry::Line { length } => {
                    // the rank-one statement is against the half-line baseline
                    MeshGeometry::HalfLine {
                        length,
                        side: Side::Right,
                    }
                }
                g => g,
            };
            let mesh = grid::build_mesh(geometry, scenario.n_cells, scenario.grading)?;
            let mut out = Vec::new();
            for &gamma in &scenario.krein_gammas {
                let d = krein::krein_check(
                    c,
                    scenario.krein_alpha,
                    scenario.krein_beta,
                    gamma,
                    &mesh,
                    scenario.seed ^ 0x12e1,
                )?;
                assertions.push(Assertion::check(
                    &format!("krein.rank_one.gamma_{gamma}"),
                    d.rank_ratio < tol.rank_ratio,
                    format!("rank ratio {:.3e}", d.rank_ratio),
                ));
                assertions.push(Assertion::check(
                    &format!("krein.kappa_nonnegative.gamma_{gamma}"),
                    d.kappa >= tol.kappa_floor,
                    format!("kappa {:.6e}", d.kappa),
                ));
                assertions.push(Assertion::check(
                    &format!("krein.range_alignment.gamma_{gamma}"),
                    d.range_alignment > tol.alignment,
                    format!("alignment {:.6}", d.range_alignment),
                ));
                out.push(d);
            }
            Ok(out)
        })();
        analyses.krein = Outcome::from_result(result);
    }

    if scenario.analyses.contains(&Analysis::Blowup) {
        let result: crate::error::Result<Vec<BlowupSummary>> = (|| {
            let mut out = Vec::new();
            for &boundary in &scenario.blowup_boundaries {
                let r = shoot::blowup_check(c, boundary, scenario.blowup_x_max)?;
                let name = match boundary {
                    BlowupBoundary::FluxRatio(g) => format!("ratio_{g}"),
                    BlowupBoundary::Dirichlet => "dirichlet".into(),
                };
                assertions.push(Assertion::check(
                    &format!("blowup.monotone_square.{name}"),
                    r.monotone_square,
                    "psi^2 non-decreasing past the first node".into(),
                ));
                assertions.push(Assertion::check(
                    &format!("blowup.growth.{name}"),
                    r.growth_factor > tol.growth_threshold,
                    format!("growth factor {:.3e}", r.growth_factor),
                ));
                artifacts.push(Artifact {
                    name: format!("blowup_{name}.csv"),
                    bytes: shooting_csv(&r.solution).into_bytes(),
                });
                out.push(BlowupSummary {
                    boundary: name,
                    monotone_square: r.monotone_square,
                    growth_factor: r.growth_factor,
                });
            }
            Ok(out)
        })();
        analyses.blowup = Outcome::from_result(result);
    }

    if scenario.analyses.contains(&Analysis::Decompose) {
        let result = crate::decompose::decompose(c);
        if let Ok(dec) = &result {
            let never_case_iii = dec
                .components
                .iter()
                .filter(|cp| cp.left.lipschitz && cp.right.lipschitz)
                .all(|cp| {
                    let ends = [&cp.left, &cp.right];
                    ends.iter().all(|e| {
                        e.kind != crate::decompose::EndpointKind::Degenerate || e.nu_unbounded
                    })
                });
            assertions.push(Assertion::check(
                "decompose.lipschitz_components_never_case_iii",
                never_case_iii,
                format!(
                    "{} components, lipschitz {}",
                    dec.components.len(),
                    dec.lipschitz
                ),
            ));
        }
        analyses.decompose = Outcome::from_result(result);
    }

    if scenario.analyses.contains(&Analysis::Cutoffs) {
        let result: crate::error::Result<Vec<CutoffSummary>> = (|| {
            let mut out = Vec::new();
            for &n in &scenario.cutoff_ns {
                let side = scenario.cutoff_side;
                let energy = classifier.cutoff_energy(c, side, n)?;
                let nu_n = classifier.nu(c, side, 1.0 / n)?;
                let sc = classifier.smooth_cutoff_l1(c, side, n)?;
                let identity = energy * nu_n;
                assertions.push(Assertion::check(
                    &format!("cutoffs.energy_identity.n_{n}"),
                    (identity - 1.0).abs() < tol.cutoff_identity,
                    format!("energy * nu(1/n) = {identity}"),
                ));
                assertions.push(Assertion::check(
                    &format!("cutoffs.flux_l1_ratio.n_{n}"),
                    (sc.flux_divergence_l1 * nu_n - 1.0).abs() < tol.cutoff_l1_ratio,
                    format!("l1 * nu(1/n) = {}", sc.flux_divergence_l1 * nu_n),
                ));
                out.push(CutoffSummary {
                    n,
                    energy,
                    nu_n,
                    energy_times_nu: identity,
                    flux_divergence_l1: sc.flux_divergence_l1,
                    corrected_l1: sc.corrected_l1,
                });
            }
            Ok(out)
        })();
        analyses.cutoffs = Outcome::from_result(result);
    }

    let report = RunReport {
        version: crate::VERSION.to_string(),
        seed: scenario.seed,
        scenario: scenario.raw.echo(),
        tolerances: tol.clone(),
        mesh: mesh_info,
        analyses,
        assertions,
    };
    artifacts.insert(
        0,
        Artifact {
            name: "report.json".into(),
            bytes: report.to_json().into_bytes(),
        },
    );
    (report, artifacts)
}

/// Matrix dump artifact for the `dump-matrix` verb.
pub fn dump_matrix_artifact(scenario: &Scenario) -> Result<Artifact> {
    let geometry = scenario.resolve_geometry();
    let mesh = grid::build_mesh(geometry, scenario.n_cells, scenario.grading)?;
    let op = grid::assemble(&scenario.coefficient, &mesh, scenario.bc)?;
    let mut bytes = Vec::new();
    op.dump_matrix(&mut bytes)?;
    Ok(Artifact {
        name: "matrix.mtx".into(),
        bytes,
    })
}

/// One sweep over the exponent / penalty grids; rows evaluate independently
/// in parallel and partial failures are marked per row.
pub fn sweep_scenario(scenario: &Scenario, tol: &Tolerances) -> Result<Vec<SweepRow>> {
    let exponents: Vec<Option<f64>> = if scenario.sweep_exponents.is_empty() {
        vec![None]
    } else {
        scenario.sweep_exponents.iter().map(|d| Some(*d)).collect()
    };
    let penalties: Vec<Option<f64>> = if scenario.sweep_alpha_over_beta.is_empty() {
        vec![None]
    } else {
        scenario
            .sweep_alpha_over_beta
            .iter()
            .map(|q| Some(*q))
            .collect()
    };
    if scenario.sweep_exponents.is_empty() && scenario.sweep_alpha_over_beta.is_empty() {
        return Err(Error::Invalid("sweep grid is empty".into()));
    }
    let mut grid_points = Vec::new();
    for d in &exponents {
        for q in &penalties {
            grid_points.push((*d, *q));
        }
    }
    let _ = tol;
    let rows: Vec<SweepRow> = grid_points
        .par_iter()
        .map(|(delta, q)| sweep_row(scenario, *delta, *q))
        .collect();
    Ok(rows)
}

fn sweep_row(scenario: &Scenario, delta: Option<f64>, q: Option<f64>) -> SweepRow {
    let run = || -> Result<SweepRow> {
        let base = &scenario.coefficient;
        let (dl, dr) = match delta {
            Some(d) => (d, d),
            None => {
                let l = base
                    .origin_power(Side::Left)
                    .map(|(_, d)| d)
                    .unwrap_or(f64::NAN);
                let r = base
                    .origin_power(Side::Right)
                    .map(|(_, d)| d)
                    .unwrap_or(f64::NAN);
                (l, r)
            }
        };
        let c_line = match delta {
            Some(d) => Coefficient::symmetric_power_law(d, DomainKind::Line)?,
            None => base.clone(),
        };
        let classifier = Classifier::default();
        let report = classifier.classify(&c_line)?;
        let case = format!("{:?}", report.case);
        let index = shoot::deficiency_index(&c_line, Side::Right, 1.0)?.index;

        // lambda_1 of the Robin half-line operator for the penalty grid
        let lambda_min = match q {
            Some(q) => {
                let c_half =
                    Coefficient::symmetric_power_law(dr, DomainKind::HalfLine(Side::Right))?;
                let mesh = grid::build_mesh(
                    MeshGeometry::HalfLine {
                        length: 20.0,
                        side: Side::Right,
                    },
                    scenario.n_cells.min(400),
                    scenario.grading,
                )?;
                let op = grid::assemble(
                    &c_half,
                    &mesh,
                    BoundaryCondition::Robin {
                        alpha: q,
                        beta: 1.0,
                    },
                )?;
                Some(op.lowest_eigenpairs(1)?[0].0)
            }
            None => None,
        };

        // invariance leak on the line under the Friedrichs extension
        let mesh = grid::build_mesh(
            MeshGeometry::Line { length: 12.0 },
            scenario.n_cells.min(512),
            scenario.grading,
        )?;
        let op = grid::assemble(&c_line, &mesh, BoundaryCondition::FriedrichsAuto)?;
        let datum: Vec<f64> = op
            .positions()
            .iter()
            .map(|x| DatumSpec::Indicator { a: 0.5, b: 1.5 }.sample(*x))
            .collect();
        let trace = evolve::evolve(&op, &datum, 1.0, 100, Scheme::BackwardEuler)?;
        let m = trace.metrics.last().unwrap();
        let leak = m.mass_left_of_origin / m.l1_mass.max(1e-300);

        Ok(SweepRow {
            exponent_left: dl,
            exponent_right: dr,
            alpha_over_beta: q,
            case: Some(case),
            deficiency_index: Some(index),
            unique_submarkovian: Some(report.unique_submarkovian),
            submarkovian_bc: q.map(|q| q >= 0.0),
            invariance_leak: Some(leak),
            lambda_min,
            error: None,
        })
    };
    match run() {
        Ok(row) => row,
        Err(e) => SweepRow {
            exponent_left: delta.unwrap_or(f64::NAN),
            exponent_right: delta.unwrap_or(f64::NAN),
            alpha_over_beta: q,
            case: None,
            deficiency_index: None,
            unique_submarkovian: None,
            submarkovian_bc: None,
            invariance_leak: None,
            lambda_min: None,
            error: Some(e.to_string()),
        },
    }
}
