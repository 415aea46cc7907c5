//! Experiment configuration: TOML text to a validated [`ExperimentConfig`].
//!
//! Parsing walks the TOML tree by hand so that every problem is reported
//! with its dotted path, all at once, and unknown keys are rejected.

use std::fmt;

use fluxlab::geometry::{MAX_ORDER, MIN_ORDER};
use fluxlab::{canonical_g1, canonical_g2, Complex64, Cone, GaussianComponent, Vec3, WavePacket};
use toml::{Table, Value};

/// One problem found while parsing a config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    FasScan,
    Sict,
    Bohm,
    Remainder,
    Window,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [Self::FasScan, Self::Sict, Self::Bohm, Self::Remainder, Self::Window];

    pub fn name(self) -> &'static str {
        match self {
            Self::FasScan => "fas-scan",
            Self::Sict => "sict",
            Self::Bohm => "bohm",
            Self::Remainder => "remainder",
            Self::Window => "window",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub epsilon_tail: f64,
    pub time_tol: f64,
    pub ode_tol: f64,
    pub angular_order: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            epsilon_tail: fluxlab::flux::DEFAULT_EPSILON_TAIL,
            time_tol: fluxlab::flux::DEFAULT_TIME_TOL,
            ode_tol: fluxlab::bohm::DEFAULT_TOL,
            angular_order: fluxlab::geometry::DEFAULT_ORDER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ensemble {
    pub n: usize,
    pub seed: u64,
    pub t_budget: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub packet: WavePacket,
    pub cone: Option<Cone>,
    pub radii: Vec<f64>,
    /// Start time of the flux integrals.
    pub t_start: f64,
    pub times: Vec<f64>,
    pub window: Option<(f64, f64)>,
    pub tolerances: Tolerances,
    pub ensemble: Option<Ensemble>,
}

impl ExperimentConfig {
    /// The cone, which validation guarantees for kinds that need one.
    pub fn cone(&self) -> Cone {
        self.cone.expect("validated config has a cone")
    }
}

/// A TOML table together with the keys read from it so far.
struct Section<'a> {
    path: String,
    table: &'a Table,
    seen: Vec<&'static str>,
}

impl<'a> Section<'a> {
    fn new(path: &str, table: &'a Table) -> Self {
        Self {
            path: path.to_string(),
            table,
            seen: Vec::new(),
        }
    }

    fn key_path(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn get(&mut self, key: &'static str) -> Option<&'a Value> {
        self.seen.push(key);
        self.table.get(key)
    }

    fn required<T>(&mut self, key: &'static str, errs: &mut Vec<ConfigIssue>, f: impl FnOnce(&mut Self, &mut Vec<ConfigIssue>) -> Option<T>) -> Option<T> {
        if !self.table.contains_key(key) {
            self.seen.push(key);
            errs.push(issue(self.key_path(key), "missing required key"));
            return None;
        }
        f(self, errs)
    }

    fn f64(&mut self, key: &'static str, errs: &mut Vec<ConfigIssue>) -> Option<f64> {
        let path = self.key_path(key);
        self.get(key).and_then(|v| as_f64(v, &path, errs))
    }

    fn u64(&mut self, key: &'static str, errs: &mut Vec<ConfigIssue>) -> Option<u64> {
        let path = self.key_path(key);
        match self.get(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            Value::Integer(_) => {
                errs.push(issue(path, "must be a nonnegative integer"));
                None
            }
            other => {
                errs.push(issue(path, format!("expected an integer, found {}", other.type_str())));
                None
            }
        }
    }

    fn str(&mut self, key: &'static str, errs: &mut Vec<ConfigIssue>) -> Option<&'a str> {
        let path = self.key_path(key);
        match self.get(key)? {
            Value::String(s) => Some(s),
            other => {
                errs.push(issue(path, format!("expected a string, found {}", other.type_str())));
                None
            }
        }
    }

    fn bool(&mut self, key: &'static str, errs: &mut Vec<ConfigIssue>) -> Option<bool> {
        let path = self.key_path(key);
        match self.get(key)? {
            Value::Boolean(b) => Some(*b),
            other => {
                errs.push(issue(path, format!("expected a boolean, found {}", other.type_str())));
                None
            }
        }
    }

    fn list(&mut self, key: &'static str, errs: &mut Vec<ConfigIssue>) -> Option<Vec<f64>> {
        let path = self.key_path(key);
        match self.get(key)? {
            Value::Array(a) => {
                let before = errs.len();
                let xs: Vec<f64> = a
                    .iter()
                    .enumerate()
                    .filter_map(|(i, v)| as_f64(v, &format!("{path}[{i}]"), errs))
                    .collect();
                (errs.len() == before).then_some(xs)
            }
            other => {
                errs.push(issue(path, format!("expected an array of numbers, found {}", other.type_str())));
                None
            }
        }
    }

    fn vec3(&mut self, key: &'static str, errs: &mut Vec<ConfigIssue>) -> Option<Vec3> {
        let path = self.key_path(key);
        let xs = self.list(key, errs)?;
        if xs.len() != 3 {
            errs.push(issue(path, format!("expected 3 components, found {}", xs.len())));
            return None;
        }
        Some(Vec3::new(xs[0], xs[1], xs[2]))
    }

    fn table(&mut self, key: &'static str, errs: &mut Vec<ConfigIssue>) -> Option<Section<'a>> {
        let path = self.key_path(key);
        match self.get(key)? {
            Value::Table(t) => Some(Section::new(&path, t)),
            other => {
                errs.push(issue(path, format!("expected a table, found {}", other.type_str())));
                None
            }
        }
    }

    fn finish(self, errs: &mut Vec<ConfigIssue>) {
        for key in self.table.keys() {
            if !self.seen.contains(&key.as_str()) {
                errs.push(issue(self.key_path(key), "unknown key"));
            }
        }
    }
}

fn issue(path: impl Into<String>, message: impl Into<String>) -> ConfigIssue {
    ConfigIssue {
        path: path.into(),
        message: message.into(),
    }
}

fn as_f64(v: &Value, path: &str, errs: &mut Vec<ConfigIssue>) -> Option<f64> {
    match v {
        Value::Float(x) if x.is_finite() => Some(*x),
        Value::Float(_) => {
            errs.push(issue(path, "must be finite"));
            None
        }
        Value::Integer(i) => Some(*i as f64),
        other => {
            errs.push(issue(path, format!("expected a number, found {}", other.type_str())));
            None
        }
    }
}

fn check(ok: bool, path: impl Into<String>, message: &str, errs: &mut Vec<ConfigIssue>) {
    if !ok {
        errs.push(issue(path, message));
    }
}

fn parse_packet(mut s: Section<'_>, errs: &mut Vec<ConfigIssue>) -> Option<WavePacket> {
    let preset = s.str("preset", errs);
    let normalize = s.bool("normalize", errs).unwrap_or(true);
    let comps_path = s.key_path("components");
    let comps = s.get("components");
    let packet = match (preset, comps) {
        (Some(_), Some(_)) => {
            errs.push(issue(&s.path, "give either preset or components, not both"));
            None
        }
        (Some("G1"), None) => Some(canonical_g1()),
        (Some("G2"), None) => Some(canonical_g2()),
        (Some(other), None) => {
            errs.push(issue(s.key_path("preset"), format!("unknown preset {other:?}, expected \"G1\" or \"G2\"")));
            None
        }
        (None, None) => {
            errs.push(issue(&s.path, "needs a preset or a components list"));
            None
        }
        (None, Some(Value::Array(items))) if !items.is_empty() => {
            let before = errs.len();
            let mut out = Vec::new();
            for (i, item) in items.iter().enumerate() {
                let path = format!("{comps_path}[{i}]");
                match item {
                    Value::Table(t) => {
                        if let Some(c) = parse_component(Section::new(&path, t), errs) {
                            out.push(c);
                        }
                    }
                    other => errs.push(issue(path, format!("expected a table, found {}", other.type_str()))),
                }
            }
            if errs.len() > before {
                None
            } else {
                let built = if normalize {
                    WavePacket::normalized(out)
                } else {
                    WavePacket::new(out)
                };
                built.map_err(|e| errs.push(issue(&comps_path, e.to_string()))).ok()
            }
        }
        (None, Some(_)) => {
            errs.push(issue(comps_path, "expected a nonempty array of component tables"));
            None
        }
    };
    s.finish(errs);
    packet
}

fn parse_component(mut s: Section<'_>, errs: &mut Vec<ConfigIssue>) -> Option<GaussianComponent> {
    let amp_path = s.key_path("amplitude");
    let amplitude = match s.list("amplitude", errs) {
        None => Some(Complex64::new(1.0, 0.0)),
        Some(a) if a.len() == 2 => Some(Complex64::new(a[0], a[1])),
        Some(_) => {
            errs.push(issue(amp_path, "expected [re, im]"));
            None
        }
    };
    let center = s.required("center", errs, |s, e| s.vec3("center", e));
    let wavevector = s.required("wavevector", errs, |s, e| s.vec3("wavevector", e));
    let width = s.required("width", errs, |s, e| s.f64("width", e));
    if let Some(w) = width {
        check(w > 0.0, s.key_path("width"), "must be positive", errs);
    }
    let path = s.path.clone();
    s.finish(errs);
    let c = GaussianComponent::new(amplitude?, center?, wavevector?, width?);
    c.map_err(|e| errs.push(issue(path, e.to_string()))).ok()
}

fn parse_cone(mut s: Section<'_>, errs: &mut Vec<ConfigIssue>) -> Option<Cone> {
    let axis = s.required("axis", errs, |s, e| s.vec3("axis", e));
    let half = s.required("half_angle_deg", errs, |s, e| s.f64("half_angle_deg", e));
    if let Some(h) = half {
        check(h > 0.0 && h <= 180.0, s.key_path("half_angle_deg"), "must lie in (0, 180]", errs);
    }
    if let Some(a) = axis {
        check(a.norm() > 0.0, s.key_path("axis"), "must be nonzero", errs);
    }
    let path = s.path.clone();
    s.finish(errs);
    let (axis, half) = (axis?, half?);
    if !(half > 0.0 && half <= 180.0 && axis.norm() > 0.0) {
        return None;
    }
    Cone::from_degrees(axis, half).map_err(|e| errs.push(issue(path, e.to_string()))).ok()
}

/// Parse and validate a config. Every problem found is returned, each with
/// the dotted path of the offending key.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<ConfigIssue>> {
    let root: Table = toml::from_str(text).map_err(|e| vec![issue("", format!("syntax: {}", e.message().trim()))])?;
    let mut errs = Vec::new();
    let mut top = Section::new("", &root);

    let kind = top.required("experiment", &mut errs, |s, e| s.str("experiment", e)).and_then(|name| {
        let k = ExperimentKind::from_name(name);
        if k.is_none() {
            let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            errs.push(issue("experiment", format!("unknown experiment {name:?}, expected one of {names:?}")));
        }
        k
    });

    let packet = top
        .required("packet", &mut errs, |s, e| s.table("packet", e))
        .and_then(|s| parse_packet(s, &mut errs));
    let cone = top.table("cone", &mut errs).and_then(|s| parse_cone(s, &mut errs));

    let mut radii = Vec::new();
    let mut t_start = None;
    let mut times = Vec::new();
    let mut window = None;
    if let Some(mut s) = top.table("scan", &mut errs) {
        if let Some(r) = s.list("radii", &mut errs) {
            check(r.iter().all(|&x| x > 0.0), "scan.radii", "radii must be positive", &mut errs);
            radii = r;
        }
        t_start = s.f64("T", &mut errs);
        if let Some(t) = s.list("times", &mut errs) {
            check(t.iter().all(|&x| x >= 0.0), "scan.times", "times must be nonnegative", &mut errs);
            times = t;
        }
        if let Some(w) = s.list("window", &mut errs) {
            if w.len() == 2 && w[0] <= w[1] {
                window = Some((w[0], w[1]));
            } else {
                errs.push(issue("scan.window", "expected [t1, t2] with t1 <= t2"));
            }
        }
        s.finish(&mut errs);
    }

    let mut tolerances = Tolerances::default();
    if let Some(mut s) = top.table("tolerances", &mut errs) {
        for (key, slot) in [
            ("epsilon_tail", &mut tolerances.epsilon_tail),
            ("time_tol", &mut tolerances.time_tol),
            ("ode_tol", &mut tolerances.ode_tol),
        ] {
            if let Some(v) = s.f64(key, &mut errs) {
                check(v > 0.0, s.key_path(key), "must be positive", &mut errs);
                *slot = v;
            }
        }
        check(
            tolerances.epsilon_tail < 1.0,
            "tolerances.epsilon_tail",
            "must be below 1",
            &mut errs,
        );
        if let Some(o) = s.u64("angular_order", &mut errs) {
            let ok = (MIN_ORDER as u64..=MAX_ORDER as u64).contains(&o);
            check(ok, "tolerances.angular_order", &format!("must lie in [{MIN_ORDER}, {MAX_ORDER}]"), &mut errs);
            tolerances.angular_order = o as usize;
        }
        s.finish(&mut errs);
    }

    let ensemble = top.table("ensemble", &mut errs).and_then(|mut s| {
        let n = s.required("n", &mut errs, |s, e| s.u64("n", e));
        if let Some(n) = n {
            let min = fluxlab::bohm::MIN_ENSEMBLE as u64;
            check(n >= min, "ensemble.n", &format!("must be at least {min}"), &mut errs);
        }
        let seed = s.required("seed", &mut errs, |s, e| s.u64("seed", e));
        let t_budget = s.f64("t_budget", &mut errs);
        if let Some(t) = t_budget {
            check(t > 0.0, "ensemble.t_budget", "must be positive", &mut errs);
        }
        s.finish(&mut errs);
        Some(Ensemble {
            n: n? as usize,
            seed: seed?,
            t_budget,
        })
    });
    top.finish(&mut errs);

    if let Some(kind) = kind {
        let needs_cone = matches!(kind, ExperimentKind::FasScan | ExperimentKind::Sict | ExperimentKind::Bohm);
        if needs_cone && !root.contains_key("cone") {
            errs.push(issue("cone", format!("required by {kind}")));
        }
        let needs_radii = kind != ExperimentKind::Sict;
        if needs_radii && radii.is_empty() && !has_issue(&errs, "scan.radii") {
            errs.push(issue("scan.radii", format!("a nonempty list is required by {kind}")));
        }
        if kind == ExperimentKind::Sict && times.is_empty() && !has_issue(&errs, "scan.times") {
            errs.push(issue("scan.times", "a nonempty list is required by sict"));
        }
        if kind == ExperimentKind::Window && window.is_none() && !has_issue(&errs, "scan.window") {
            errs.push(issue("scan.window", "required by window"));
        }
        if kind == ExperimentKind::Bohm && !root.contains_key("ensemble") {
            errs.push(issue("ensemble", "required by bohm"));
        }
        if kind == ExperimentKind::Remainder {
            if let Some(t) = t_start {
                check(t > 0.0, "scan.T", "must be positive for remainder", &mut errs);
            }
        }
    }

    if !errs.is_empty() {
        return Err(errs);
    }
    let experiment = kind.expect("no errors implies a kind");
    let default_t = if experiment == ExperimentKind::Remainder { 1.0 } else { 0.0 };
    Ok(ExperimentConfig {
        experiment,
        packet: packet.expect("no errors implies a packet"),
        cone,
        radii,
        t_start: t_start.unwrap_or(default_t),
        times,
        window,
        tolerances,
        ensemble,
    })
}

fn has_issue(errs: &[ConfigIssue], path: &str) -> bool {
    errs.iter().any(|e| e.path.starts_with(path))
}
