//! Experiment configuration: TOML sections with strict key checking,
//! command-line overrides, per-experiment defaults and the config hash.

use std::fmt;
use std::path::{Path, PathBuf};

use rabisim::hilbert::{QubitBasis, SpaceSpec};
use rabisim::measure::{PhotonMeterSpec, CHI2_MHZ};
use rabisim::models::peak_amplitude;
use rabisim::predistort::StepForm;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Configuration problem, reported with the dotted path of the offending key.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

type CResult<T> = std::result::Result<T, ConfigError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    ParityChevron,
    PhotonChevron,
    WignerMovie,
    CatConditional,
    Nondegenerate,
    TrotterCompare,
    StepsizeCompare,
    EntropyChevron,
    JcChevron,
    PredistortDemo,
    InitCompare,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::ParityChevron,
        Experiment::PhotonChevron,
        Experiment::WignerMovie,
        Experiment::CatConditional,
        Experiment::Nondegenerate,
        Experiment::TrotterCompare,
        Experiment::StepsizeCompare,
        Experiment::EntropyChevron,
        Experiment::JcChevron,
        Experiment::PredistortDemo,
        Experiment::InitCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::ParityChevron => "parity_chevron",
            Experiment::PhotonChevron => "photon_chevron",
            Experiment::WignerMovie => "wigner_movie",
            Experiment::CatConditional => "cat_conditional",
            Experiment::Nondegenerate => "nondegenerate",
            Experiment::TrotterCompare => "trotter_compare",
            Experiment::StepsizeCompare => "stepsize_compare",
            Experiment::EntropyChevron => "entropy_chevron",
            Experiment::JcChevron => "jc_chevron",
            Experiment::PredistortDemo => "predistort_demo",
            Experiment::InitCompare => "init_compare",
        }
    }

    /// One-line summary of what the experiment computes.
    pub fn describe(self) -> &'static str {
        match self {
            Experiment::ParityChevron => "photon- and qubit-parity chevrons vs Trotter time and ω_rR/g (degenerate qubit)",
            Experiment::PhotonChevron => "mean photon number chevron read through the HDR Ramsey photon meter",
            Experiment::WignerMovie => "resonator Wigner functions along the degenerate dynamics",
            Experiment::CatConditional => "Wigner functions conditioned on the qubit σz outcome (Bell-cat halves)",
            Experiment::Nondegenerate => "qubit dynamics for nondegenerate qubit frequency, Trotter and ideal",
            Experiment::TrotterCompare => "paired first- and second-order Trotter parity chevrons",
            Experiment::StepsizeCompare => "Trotter error vs step size at fixed simulated time",
            Experiment::EntropyChevron => "qubit entanglement entropy chevron",
            Experiment::JcChevron => "analog and digital JC chevrons with off-phase aliasing",
            Experiment::PredistortDemo => "flux-line step responses, predistortion kernels and corrected steps",
            Experiment::InitCompare => "parity dynamics from |0,0⟩ and |1,0⟩ (initialization symmetry)",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    /// Physical JC coupling g/2π (MHz).
    pub g: Option<f64>,
    /// Simulated qubit frequency ω_qR (MHz), degenerate experiments only.
    pub omega_q: Option<f64>,
    pub kerr: Option<f64>,
    /// Resonator T1 (μs); absent means no decay.
    pub t1_res: Option<f64>,
    /// Extra decay time per Trotter step (μs).
    pub idle_per_step: Option<f64>,
    /// Fixed truncation; checked against the guard. Absent means auto.
    pub n_max: Option<usize>,
    /// Levels added on top of the guard when sizing automatically.
    pub margin: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    /// Simulated Trotter step τ (μs).
    pub tau: Option<f64>,
    pub n_steps: Option<usize>,
    pub order: Option<u8>,
    pub merge_half_steps: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Coupling ratios r = g/ω_rR; exclusive with `omega_r_values`.
    pub r_values: Option<Vec<f64>>,
    /// Simulated resonator frequencies ω_rR (MHz); 0 is r → ∞.
    pub omega_r_values: Option<Vec<f64>>,
    /// Simulated qubit frequencies ω_qR (MHz) for the nondegenerate runs.
    pub qubit_detunings: Option<Vec<f64>>,
    /// Step sizes (μs) for the step-size study.
    pub tau_values: Option<Vec<f64>>,
    /// Simulated time (μs) for the step-size study.
    pub duration: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeterPreset {
    Ldr,
    Hdr,
    Parity,
    Custom,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeterSection {
    pub preset: Option<MeterPreset>,
    pub tau_eff: Option<f64>,
    pub d: Option<usize>,
    /// Dispersive shift 2χ/2π (MHz).
    pub chi2: Option<f64>,
    /// Shots per point; absent means noiseless probabilities.
    pub shots: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionBasis {
    Z,
    X,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerSection {
    /// Half width of the square phase-space window.
    pub extent: Option<f64>,
    /// Points per axis.
    pub points: Option<usize>,
    /// Trotter steps to render; absent means every step.
    pub frames: Option<Vec<usize>>,
    pub initial: Option<QubitBasis>,
    pub basis: Option<ConditionBasis>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChevronSection {
    /// Qubit-resonator detunings (MHz).
    pub detunings: Option<Vec<f64>>,
    /// Interaction times (μs).
    pub durations: Option<Vec<f64>>,
    /// Digital pulse length (μs).
    pub pulse_len: Option<f64>,
    /// Phase accumulated in each off window (rad).
    pub off_phase: Option<f64>,
    pub compensate: Option<bool>,
    pub sweep_points: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredistortSection {
    /// Distortions composed into the flux line, in order.
    pub forms: Option<Vec<StepForm<f64>>>,
    /// Sample spacing (ns).
    pub dt: Option<f64>,
    pub n: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// Full configuration. After [`ExperimentConfig::resolve`] every field the
/// experiment reads is populated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub physics: PhysicsSection,
    #[serde(default)]
    pub plan: PlanSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub meter: MeterSection,
    #[serde(default)]
    pub wigner: WignerSection,
    #[serde(default)]
    pub chevron: ChevronSection,
    #[serde(default)]
    pub predistort: PredistortSection,
    /// Where results go; not part of the hash.
    #[serde(default, skip_serializing)]
    pub output: OutputSection,
}

/// One column of a Trotter sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    /// Value written to the CSV header.
    pub label: f64,
    /// Simulated resonator frequency (MHz).
    pub omega_r: f64,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Shortest-form parse of an override value: TOML literal if it parses,
/// bare string otherwise.
fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key just written"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies `key.path=value` to a parsed document.
pub fn apply_override(doc: &mut toml::Table, spec: &str) -> CResult<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::new("--override", format!("expected key=value, got `{spec}`")))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::new("--override", format!("bad key `{key}`")));
    }
    let mut table = doc;
    for (i, part) in parts[..parts.len() - 1].iter().enumerate() {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::new(parts[..=i].join("."), "is not a section"))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl ExperimentConfig {
    /// Parses TOML text, applies overrides, fills defaults and validates.
    pub fn from_toml(text: &str, overrides: &[String]) -> CResult<Self> {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::new("", e.message().to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let raw: ExperimentConfig = serde_path_to_error::deserialize(toml::Value::Table(doc)).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { String::new() } else { path };
            // value errors carry a trailing "in `section`" line; the path says it already
            ConfigError::new(path, e.into_inner().message().trim().to_string())
        })?;
        let cfg = raw.resolve();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> CResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("--config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, overrides)
    }

    /// Config for `experiment` with every default filled in.
    pub fn defaults(experiment: Experiment) -> Self {
        Self {
            experiment,
            seed: 0,
            physics: Default::default(),
            plan: Default::default(),
            sweep: Default::default(),
            meter: Default::default(),
            wigner: Default::default(),
            chevron: Default::default(),
            predistort: Default::default(),
            output: Default::default(),
        }
        .resolve()
    }

    /// Fills the experiment's defaults into unset fields.
    pub fn resolve(mut self) -> Self {
        use Experiment::*;
        let e = self.experiment;
        let trotter = !matches!(e, JcChevron | PredistortDemo);
        if trotter {
            let p = &mut self.physics;
            let g = *p.g.get_or_insert(1.95);
            p.kerr.get_or_insert(0.0);
            p.idle_per_step.get_or_insert(0.0);
            p.margin.get_or_insert(8);
            if e != Nondegenerate {
                p.omega_q.get_or_insert(0.0);
            }
            let plan = &mut self.plan;
            plan.tau.get_or_insert(0.02);
            plan.order.get_or_insert(2);
            plan.merge_half_steps.get_or_insert(true);
            plan.n_steps.get_or_insert(match e {
                PhotonChevron => 90,
                WignerMovie => 10,
                CatConditional => 8,
                _ => 60,
            });
            let s = &mut self.sweep;
            if s.r_values.is_none() && s.omega_r_values.is_none() {
                match e {
                    WignerMovie => s.r_values = Some(vec![0.9]),
                    CatConditional => s.r_values = Some(vec![0.9, 2.1]),
                    StepsizeCompare => s.r_values = Some(vec![1.0]),
                    // symmetric ω_rR/g axis, r → ∞ at the centre, |r| ≥ 0.3 at the edges
                    _ => s.omega_r_values = Some(linspace(-10.0 / 3.0, 10.0 / 3.0, 41).iter().map(|x| x * g).collect()),
                }
            }
            if e == Nondegenerate {
                s.qubit_detunings.get_or_insert_with(|| vec![g / 4.0, g / 2.0, g]);
            }
            if e == StepsizeCompare {
                s.tau_values.get_or_insert_with(|| vec![0.02, 0.03, 0.04, 0.05]);
                s.duration.get_or_insert(1.2);
            }
        }
        if e == PhotonChevron {
            let m = &mut self.meter;
            let preset = *m.preset.get_or_insert(MeterPreset::Hdr);
            let chi2 = *m.chi2.get_or_insert(CHI2_MHZ);
            match preset {
                MeterPreset::Ldr => {
                    let d = PhotonMeterSpec::<f64>::ldr();
                    m.tau_eff.get_or_insert(d.tau_eff);
                    m.d.get_or_insert(d.d);
                }
                MeterPreset::Hdr => {
                    let d = PhotonMeterSpec::<f64>::hdr();
                    m.tau_eff.get_or_insert(d.tau_eff);
                    m.d.get_or_insert(d.d);
                }
                MeterPreset::Parity => {
                    m.tau_eff.get_or_insert(rabisim::measure::parity_tau(chi2));
                    m.d.get_or_insert(0);
                }
                MeterPreset::Custom => {}
            }
        }
        if matches!(e, WignerMovie | CatConditional) {
            let w = &mut self.wigner;
            w.extent.get_or_insert(3.5);
            w.points.get_or_insert(41);
            w.initial.get_or_insert(QubitBasis::Excited);
            if e == CatConditional {
                w.basis.get_or_insert(ConditionBasis::Z);
            }
            if e == WignerMovie && w.frames.is_none() {
                w.frames = Some((0..=self.plan.n_steps.unwrap_or(0)).collect());
            }
        }
        if e == JcChevron {
            self.physics.g.get_or_insert(1.95);
            let c = &mut self.chevron;
            c.detunings.get_or_insert_with(|| (0..81).map(|k| -100.0 + 2.5 * k as f64).collect());
            c.durations.get_or_insert_with(|| (1..=101).map(|k| k as f64 * 0.015).collect());
            c.pulse_len.get_or_insert(0.02);
            c.off_phase.get_or_insert(1.0);
            c.compensate.get_or_insert(true);
            c.sweep_points.get_or_insert(720);
        }
        if e == PredistortDemo {
            let p = &mut self.predistort;
            p.forms.get_or_insert_with(|| {
                vec![
                    StepForm::ExpApproach { alpha: 0.0012, tau: 5100.0 },
                    StepForm::ExpApproach { alpha: 0.015, tau: 670.0 },
                    StepForm::ExpApproach { alpha: -0.00037, tau: 520.0 },
                ]
            });
            p.dt.get_or_insert(2.0);
            p.n.get_or_insert(3000);
        }
        self
    }

    fn positive(path: &str, v: Option<f64>) -> CResult<()> {
        match v {
            Some(x) if !(x.is_finite() && x > 0.0) => Err(ConfigError::new(path, format!("must be positive, got {x}"))),
            _ => Ok(()),
        }
    }

    fn finite(path: &str, v: Option<f64>) -> CResult<()> {
        match v {
            Some(x) if !x.is_finite() => Err(ConfigError::new(path, "must be finite")),
            _ => Ok(()),
        }
    }

    pub fn validate(&self) -> CResult<()> {
        Self::positive("physics.g", self.physics.g)?;
        Self::positive("physics.t1_res", self.physics.t1_res)?;
        Self::finite("physics.omega_q", self.physics.omega_q)?;
        Self::finite("physics.kerr", self.physics.kerr)?;
        if self.physics.idle_per_step.is_some_and(|x| !(x >= 0.0 && x.is_finite())) {
            return Err(ConfigError::new("physics.idle_per_step", "must be non-negative"));
        }
        if self.physics.n_max == Some(0) {
            return Err(ConfigError::new("physics.n_max", "must be at least 1"));
        }
        // the pulse sequence has no Kerr term; only the ideal reference takes it
        if self.physics.kerr.is_some_and(|k| k != 0.0) && self.experiment != Experiment::Nondegenerate {
            return Err(ConfigError::new("physics.kerr", "only the nondegenerate ideal reference supports Kerr"));
        }
        Self::positive("plan.tau", self.plan.tau)?;
        if self.plan.n_steps == Some(0) {
            return Err(ConfigError::new("plan.n_steps", "must be at least 1"));
        }
        if let Some(o) = self.plan.order {
            if o != 1 && o != 2 {
                return Err(ConfigError::new("plan.order", format!("must be 1 or 2, got {o}")));
            }
        }
        let s = &self.sweep;
        if s.r_values.is_some() && s.omega_r_values.is_some() {
            return Err(ConfigError::new(
                "sweep",
                "r_values and omega_r_values are mutually exclusive",
            ));
        }
        if let Some(rs) = &s.r_values {
            if rs.is_empty() {
                return Err(ConfigError::new("sweep.r_values", "must not be empty"));
            }
            for (i, r) in rs.iter().enumerate() {
                if !r.is_finite() || *r == 0.0 {
                    return Err(ConfigError::new(
                        format!("sweep.r_values[{i}]"),
                        "must be finite and nonzero (use omega_r_values = [0] for r → ∞)",
                    ));
                }
            }
        }
        if let Some(ws) = &s.omega_r_values {
            if ws.is_empty() {
                return Err(ConfigError::new("sweep.omega_r_values", "must not be empty"));
            }
            for (i, w) in ws.iter().enumerate() {
                Self::finite(&format!("sweep.omega_r_values[{i}]"), Some(*w))?;
            }
        }
        if let Some(ds) = &s.qubit_detunings {
            for (i, d) in ds.iter().enumerate() {
                Self::finite(&format!("sweep.qubit_detunings[{i}]"), Some(*d))?;
            }
        }
        if let Some(ts) = &s.tau_values {
            if ts.len() < 2 {
                return Err(ConfigError::new("sweep.tau_values", "needs at least two step sizes"));
            }
            for (i, t) in ts.iter().enumerate() {
                Self::positive(&format!("sweep.tau_values[{i}]"), Some(*t))?;
            }
        }
        Self::positive("sweep.duration", s.duration)?;
        if let (Some(ts), Some(d)) = (&s.tau_values, s.duration) {
            if let Some(i) = ts.iter().position(|t| *t > d) {
                return Err(ConfigError::new(format!("sweep.tau_values[{i}]"), "longer than sweep.duration"));
            }
        }
        self.validate_meter()?;
        self.validate_wigner()?;
        self.validate_chevron()?;
        self.validate_predistort()?;
        self.check_truncation()
    }

    fn validate_meter(&self) -> CResult<()> {
        let m = &self.meter;
        Self::positive("meter.tau_eff", m.tau_eff)?;
        Self::finite("meter.chi2", m.chi2)?;
        if m.chi2 == Some(0.0) {
            return Err(ConfigError::new("meter.chi2", "must be nonzero"));
        }
        if m.shots == Some(0) {
            return Err(ConfigError::new("meter.shots", "must be at least 1"));
        }
        if self.experiment == Experiment::PhotonChevron {
            if m.tau_eff.is_none() {
                return Err(ConfigError::new("meter.tau_eff", "required for a custom meter"));
            }
            if m.d.is_none() {
                return Err(ConfigError::new("meter.d", "required for a custom meter"));
            }
            self.meter_spec()
                .map_err(|e| ConfigError::new("meter", e.to_string()))?;
        }
        Ok(())
    }

    fn validate_wigner(&self) -> CResult<()> {
        let w = &self.wigner;
        Self::positive("wigner.extent", w.extent)?;
        if w.points.is_some_and(|p| p < 2) {
            return Err(ConfigError::new("wigner.points", "needs at least 2 points per axis"));
        }
        if let (Some(frames), Some(n)) = (&w.frames, self.plan.n_steps) {
            if let Some(i) = frames.iter().position(|&f| f > n) {
                return Err(ConfigError::new(format!("wigner.frames[{i}]"), format!("beyond plan.n_steps = {n}")));
            }
        }
        Ok(())
    }

    fn validate_chevron(&self) -> CResult<()> {
        if self.experiment != Experiment::JcChevron {
            return Ok(());
        }
        self.chevron_spec()
            .map_err(|e| ConfigError::new("chevron", e.to_string()))?;
        if self.chevron.sweep_points == Some(0) {
            return Err(ConfigError::new("chevron.sweep_points", "must be at least 1"));
        }
        Ok(())
    }

    fn validate_predistort(&self) -> CResult<()> {
        let p = &self.predistort;
        Self::positive("predistort.dt", p.dt)?;
        if p.n.is_some_and(|n| n < 2) {
            return Err(ConfigError::new("predistort.n", "needs at least 2 samples"));
        }
        if let Some(forms) = &p.forms {
            if forms.is_empty() {
                return Err(ConfigError::new("predistort.forms", "must not be empty"));
            }
            for (i, f) in forms.iter().enumerate() {
                f.validate()
                    .map_err(|e| ConfigError::new(format!("predistort.forms[{i}]"), e.to_string()))?;
            }
        }
        Ok(())
    }

    /// Truncation needed by the worst sweep column, or the fixed `n_max`
    /// after checking it against the guard.
    fn check_truncation(&self) -> CResult<()> {
        if matches!(self.experiment, Experiment::JcChevron | Experiment::PredistortDemo) {
            return Ok(());
        }
        let Some(fixed) = self.physics.n_max else {
            return Ok(());
        };
        for p in self.sweep_points() {
            for tau in self.step_sizes() {
                let need = self.guard_n_max(p.omega_r, tau);
                if fixed < need {
                    return Err(ConfigError::new(
                        "physics.n_max",
                        format!(
                            "truncation guard needs n_max ≥ {need} for ω_rR = {} MHz (r = {}), got {fixed}",
                            p.omega_r,
                            self.physics.g.unwrap_or(0.0) / p.omega_r
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    fn step_sizes(&self) -> Vec<f64> {
        match self.experiment {
            Experiment::StepsizeCompare => self.sweep.tau_values.clone().unwrap_or_default(),
            _ => self.plan.tau.into_iter().collect(),
        }
    }

    /// Simulated duration of a run with step `tau`.
    pub fn duration(&self, tau: f64) -> f64 {
        match self.experiment {
            Experiment::StepsizeCompare => self.sweep.duration.unwrap_or(0.0),
            _ => tau * self.plan.n_steps.unwrap_or(0) as f64,
        }
    }

    /// Guard `n_max ≥ 4|α_max|²` for a column, without margin.
    pub fn guard_n_max(&self, omega_r: f64, tau: f64) -> usize {
        let g = self.physics.g.unwrap_or(0.0);
        // the qubit detuning of the nondegenerate runs does not enlarge the excursion
        let a = peak_amplitude(g, omega_r, self.duration(tau));
        ((4.0 * a * a).ceil() as usize).max(1)
    }

    /// Space used for a column: the fixed `n_max`, or guard plus margin.
    pub fn space_for(&self, omega_r: f64, tau: f64) -> SpaceSpec {
        let n = self
            .physics
            .n_max
            .unwrap_or_else(|| self.guard_n_max(omega_r, tau) + self.physics.margin.unwrap_or(0));
        SpaceSpec::new(n.max(1)).expect("n_max ≥ 1")
    }

    /// Columns of a Trotter sweep.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let g = self.physics.g.unwrap_or(0.0);
        if let Some(rs) = &self.sweep.r_values {
            rs.iter().map(|&r| SweepPoint { label: r, omega_r: g / r }).collect()
        } else if let Some(ws) = &self.sweep.omega_r_values {
            ws.iter().map(|&w| SweepPoint { label: w, omega_r: w }).collect()
        } else {
            Vec::new()
        }
    }

    /// Header name and unit of the sweep axis.
    pub fn sweep_axis(&self) -> (&'static str, &'static str) {
        if self.sweep.r_values.is_some() {
            ("r", "1")
        } else {
            ("omega_r", "MHz")
        }
    }

    pub fn meter_spec(&self) -> rabisim::Result<PhotonMeterSpec<f64>> {
        let m = &self.meter;
        let chi2 = m.chi2.unwrap_or(CHI2_MHZ);
        match m.preset {
            Some(MeterPreset::Parity) => PhotonMeterSpec::parity(chi2),
            _ => PhotonMeterSpec::ramsey(m.tau_eff.unwrap_or(0.0), chi2, m.d.unwrap_or(0)),
        }
    }

    pub fn chevron_spec(&self) -> rabisim::Result<rabisim::chevron::ChevronSpec<f64>> {
        let c = &self.chevron;
        rabisim::chevron::ChevronSpec::digital(
            self.physics.g.unwrap_or(0.0),
            c.detunings.clone().unwrap_or_default(),
            c.durations.clone().unwrap_or_default(),
            c.pulse_len.unwrap_or(0.0),
            c.off_phase.unwrap_or(0.0),
        )
    }

    /// SHA-256 of the canonical JSON form of the resolved config (output
    /// location excluded).
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        sha256_hex(json.as_bytes())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output
            .dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out").join(self.experiment.name()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_experiment_resolves_and_validates() {
        for e in Experiment::ALL {
            let cfg = ExperimentConfig::defaults(e);
            cfg.validate().unwrap_or_else(|err| panic!("{e}: {err}"));
            let text = format!("experiment = \"{e}\"\n");
            assert_eq!(ExperimentConfig::from_toml(&text, &[]).unwrap(), cfg);
        }
    }

    #[test]
    fn override_creates_sections_and_parses_literals() {
        let mut doc = toml::Table::new();
        apply_override(&mut doc, "physics.g=2.5").unwrap();
        apply_override(&mut doc, "sweep.r_values=[0.5, 1.0]").unwrap();
        apply_override(&mut doc, "experiment=parity_chevron").unwrap();
        assert_eq!(doc["physics"]["g"].as_float(), Some(2.5));
        assert_eq!(doc["sweep"]["r_values"].as_array().unwrap().len(), 2);
        assert_eq!(doc["experiment"].as_str(), Some("parity_chevron"));
        assert!(apply_override(&mut doc, "novalue").is_err());
        assert!(apply_override(&mut doc, "physics.g.x=1").is_err());
    }

    #[test]
    fn errors_carry_field_paths() {
        let err = ExperimentConfig::from_toml("experiment = \"parity_chevron\"\n[physics]\ngee = 1\n", &[]).unwrap_err();
        assert_eq!(err.path, "physics.gee");
        assert!(err.message.contains("gee"));
        let err = ExperimentConfig::from_toml("experiment = \"parity_chevron\"\n[plan]\ntau = \"x\"\n", &[]).unwrap_err();
        assert_eq!(err.path, "plan.tau");
        let err = ExperimentConfig::from_toml(
            "experiment = \"parity_chevron\"\n[sweep]\nr_values = [1.0]\nomega_r_values = [1.0]\n",
            &[],
        )
        .unwrap_err();
        assert_eq!(err.path, "sweep");
        let err = ExperimentConfig::from_toml("experiment = \"parity_chevron\"\n", &["physics.n_max=10".into()]).unwrap_err();
        assert_eq!(err.path, "physics.n_max");
    }

    #[test]
    fn guard_sizes_infinite_coupling_by_elapsed_time() {
        let cfg = ExperimentConfig::defaults(Experiment::ParityChevron);
        // r → ∞ column: |α| grows as 2πgt up to 1.2 μs
        let a = std::f64::consts::TAU * 1.95 * 1.2;
        assert_eq!(cfg.guard_n_max(0.0, 0.02), (4.0 * a * a).ceil() as usize);
        assert_eq!(cfg.guard_n_max(1.95, 0.02), 16);
    }
}
