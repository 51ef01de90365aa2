//! Scenario files, full runs with every probe attached, convergence studies
//! and parameter sweeps.
//!
//! A scenario is a flat TOML table:
//!
//! ```toml
//! name = "theorem-1-1"
//! domain_mode = "half-line"
//! profile = "critical-tail-with-dead-zone"
//! tail = 6.0
//! dead_zone_end = 1.0
//! l2 = 2.0
//! data_shape = "smooth-bump"
//! support_radius = 2.0
//! dx = 0.05
//! t_final = 5000.0
//! multipliers = "paper-defaults"
//! fit_window = [500.0, 5000.0]
//! ```

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functionals::{budget_rhs, check_data_budget, BudgetReport, EnergyTrace, TraceRecorder};
use crate::multipliers::{
    check_feasibility, default_params, find_t0, threshold_warning, FeasibilityReport,
    MultiplierError, MultiplierParams, Multipliers, PhiSpec, ScanResolution, T0Search,
};
use crate::profiles::{
    derive_constants, validate_assumption_a, DampingProfile, ProfileConstants, ProfileError,
    ValidationReport,
};
use crate::rates::{
    bounded_weighted_energy, estimate_quadratic_constant, fit_decay_rate, quadratic_bound_check,
    QuadraticBoundReport, QuadraticConstant, RateFit, WeightedEnergyBound,
};
use crate::solver::{run, DataShape, DomainMode, InitialData, SolverConfig, SolverError, Stepper};

/// Target number of trace rows when `record_stride` is not given.
pub const DEFAULT_TRACE_ROWS: usize = 2000;

/// Sampling resolution for profile validation and constant extraction.
pub const PROFILE_RESOLUTION: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

impl ScenarioError {
    /// True for errors in the scenario itself rather than in the run.
    pub fn is_config_error(&self) -> bool {
        !matches!(self, Self::Solver(SolverError::Unstable { .. }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    CriticalTailWithDeadZone,
    PureCritical,
    Constant,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiplierSource {
    PaperDefaults,
    Explicit,
    None,
}

fn default_domain() -> DomainMode {
    DomainMode::HalfLine
}
fn default_one() -> f64 {
    1.0
}
fn default_cfl() -> f64 {
    0.9
}
fn default_margin() -> usize {
    16
}
fn default_true() -> bool {
    true
}
fn default_multipliers() -> MultiplierSource {
    MultiplierSource::None
}
fn default_exponent() -> f64 {
    2.0
}
fn default_t0_scan() -> f64 {
    1e4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default = "default_domain")]
    pub domain_mode: DomainMode,

    pub profile: ProfileKind,
    /// Tail amplitude `V0` for the critical kinds.
    pub tail: Option<f64>,
    pub dead_zone_end: Option<f64>,
    pub l2: Option<f64>,
    /// Level of the constant profile.
    pub value: Option<f64>,
    /// Refuse to run when the profile fails the structural tail clauses.
    #[serde(default = "default_true")]
    pub require_tail_hypothesis: bool,

    pub data_shape: DataShape,
    #[serde(default = "default_one")]
    pub amplitude: f64,
    pub support_radius: f64,

    pub dx: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub t_final: f64,
    #[serde(default = "default_margin")]
    pub wavefront_margin: usize,
    pub record_stride: Option<usize>,

    #[serde(default = "default_multipliers")]
    pub multipliers: MultiplierSource,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub eps3: Option<f64>,
    pub k: Option<f64>,
    /// Upper end of the activation-time scan.
    #[serde(default = "default_t0_scan")]
    pub t0_scan_max: f64,

    pub fit_window: Option<[f64; 2]>,
    /// Exponent `p` of the boundedness check on `E (1 + t)^p`.
    #[serde(default = "default_exponent")]
    pub decay_exponent: f64,

    pub trace_path: Option<String>,
    pub summary_path: Option<String>,
}

fn need(v: Option<f64>, key: &str, kind: &str) -> Result<f64, ScenarioError> {
    v.ok_or_else(|| ScenarioError::Invalid(format!("profile {kind} needs key `{key}`")))
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let s: Self = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario fields are all representable in TOML")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.support_radius > 0.0 && self.support_radius.is_finite()) {
            return Err(ScenarioError::Invalid(format!(
                "support_radius must be positive, got {}",
                self.support_radius
            )));
        }
        if let Some([lo, hi]) = self.fit_window {
            if !(lo >= 1.0 && hi > lo && hi <= self.t_final) {
                return Err(ScenarioError::Invalid(format!(
                    "fit_window [{lo}, {hi}] must satisfy 1 <= lo < hi <= t_final"
                )));
            }
        }
        if self.multipliers != MultiplierSource::None && self.domain_mode == DomainMode::WholeLine {
            return Err(ScenarioError::Invalid(
                "multiplier functionals are defined on the half-line only".into(),
            ));
        }
        self.solver_config().validate()?;
        self.damping_profile()?;
        Ok(())
    }

    pub fn damping_profile(&self) -> Result<DampingProfile, ScenarioError> {
        Ok(match self.profile {
            ProfileKind::CriticalTailWithDeadZone => DampingProfile::dead_zone(
                need(self.tail, "tail", "critical-tail-with-dead-zone")?,
                need(self.dead_zone_end, "dead_zone_end", "critical-tail-with-dead-zone")?,
                need(self.l2, "l2", "critical-tail-with-dead-zone")?,
            )?,
            ProfileKind::PureCritical => DampingProfile::pure_critical_from(
                need(self.tail, "tail", "pure-critical")?,
                self.l2.unwrap_or(0.0),
            )?,
            ProfileKind::Constant => DampingProfile::constant(need(self.value, "value", "constant")?)?,
            ProfileKind::Zero => DampingProfile::Zero,
        })
    }

    pub fn initial_data(&self) -> InitialData {
        InitialData::from_shape(self.data_shape, self.amplitude, self.support_radius)
    }

    /// Solver settings; `record_stride` defaults to about
    /// [`DEFAULT_TRACE_ROWS`] samples over the run.
    pub fn solver_config(&self) -> SolverConfig {
        let mut c = SolverConfig {
            dx: self.dx,
            cfl: self.cfl,
            t_final: self.t_final,
            domain: self.domain_mode,
            wavefront_margin: self.wavefront_margin,
            record_stride: 1,
        };
        c.record_stride = self
            .record_stride
            .unwrap_or_else(|| (c.step_count() / DEFAULT_TRACE_ROWS).max(1));
        c
    }

    /// Returns a copy with one sweep parameter replaced. Recognised names:
    /// `v0`, `l2`, `dead_zone_end`, `r`, `dx`.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Self, ScenarioError> {
        let mut s = self.clone();
        match name {
            "v0" => s.tail = Some(value),
            "l2" => s.l2 = Some(value),
            "dead_zone_end" => s.dead_zone_end = Some(value),
            "r" => s.support_radius = value,
            "dx" => s.dx = value,
            other => {
                return Err(ScenarioError::Invalid(format!(
                    "unknown sweep parameter `{other}` (expected v0, l2, dead_zone_end, r or dx)"
                )))
            }
        }
        s.name = format!("{}[{name}={value}]", self.name);
        s.validate()?;
        Ok(s)
    }

    fn multiplier_params(&self, c: &ProfileConstants) -> Result<MultiplierParams, MultiplierError> {
        match self.multipliers {
            MultiplierSource::PaperDefaults | MultiplierSource::None => default_params(c.v0, c.v_star),
            MultiplierSource::Explicit => {
                let get = |v: Option<f64>, key: &str| {
                    v.ok_or_else(|| MultiplierError::NonPositive(format!("missing `{key}`")))
                };
                MultiplierParams::new(
                    get(self.eps1, "eps1")?,
                    get(self.eps2, "eps2")?,
                    get(self.eps3, "eps3")?,
                    get(self.k, "k")?,
                )
            }
        }
    }
}

/// One named pass/fail entry of a summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Multiplier-side results for half-line runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSummary {
    pub params: MultiplierParams,
    pub feasibility: FeasibilityReport,
    pub t0: T0Search,
    pub lyap_combo_max_after_t0: Option<f64>,
    pub quadratic_constant: Option<QuadraticConstant>,
    pub quadratic_bound: Option<QuadraticBoundReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub domain_mode: DomainMode,
    pub profile: DampingProfile,
    pub dx: f64,
    pub dt: f64,
    pub steps: usize,
    pub t_final: f64,
    pub trace_rows: usize,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub energy_ratio: f64,
    pub rate_fit: Option<RateFit>,
    pub rate_fit_error: Option<String>,
    pub weighted_energy: Option<WeightedEnergyBound>,
    pub profile_validation: ValidationReport,
    pub constants: Option<ProfileConstants>,
    pub constants_error: Option<String>,
    pub multipliers: Option<MultiplierSummary>,
    pub multiplier_error: Option<String>,
    pub threshold_warning: Option<String>,
    pub max_hardy_ratio: Option<f64>,
    pub budget: BudgetReport,
    pub checks: Vec<Check>,
    pub all_checks_pass: bool,
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub trace: EnergyTrace,
    pub summary: Summary,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        pass,
        detail,
    }
}

/// Runs the scenario with the trace recorder attached and evaluates every
/// diagnostic that applies to it.
pub fn run_scenario(s: &Scenario) -> Result<ScenarioRun, ScenarioError> {
    s.validate()?;
    let profile = s.damping_profile()?;
    let tail = profile.declared_tail();
    let validation = validate_assumption_a(
        &profile,
        PROFILE_RESOLUTION,
        tail.l2 + 10.0 * (1.0 + tail.l2),
    )?;
    if s.require_tail_hypothesis && !validation.structural_pass() {
        return Err(ScenarioError::Profile(ProfileError::AssumptionFailed(format!(
            "profile {} fails the tail clauses; set require_tail_hypothesis = false for comparison runs",
            profile.kind_name()
        ))));
    }
    let half_line = s.domain_mode == DomainMode::HalfLine;
    let (constants, constants_error) = match derive_constants(&profile, PROFILE_RESOLUTION) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let mut multiplier_error = None;
    let multipliers = match (&constants, s.multipliers) {
        (_, MultiplierSource::None) => None,
        (None, _) => {
            multiplier_error = constants_error.clone();
            None
        }
        (Some(c), _) => match s
            .multiplier_params(c)
            .and_then(|p| Ok(Multipliers::new(p, PhiSpec::from_constants(c)?)))
        {
            Ok(m) => Some(m),
            Err(e) => {
                multiplier_error = Some(e.to_string());
                None
            }
        },
    };

    let config = s.solver_config();
    let data = s.initial_data();
    let stepper = Stepper::new(&profile, &config, data.support_radius)?;
    let (dt, steps) = (stepper.dt(), stepper.total_steps());
    let rhs = budget_rhs(&data, &profile, s.domain_mode, config.dx);
    let mut recorder = TraceRecorder::new(multipliers, config.record_stride, rhs);
    run(&data, &profile, &config, &mut [&mut recorder])?;
    let trace = recorder.into_trace();

    let mut checks = Vec::new();
    let e0 = trace.first().map_or(f64::NAN, |r| r.energy);
    let ef = trace.last().map_or(f64::NAN, |r| r.energy);

    let (rate_fit, rate_fit_error, weighted_energy) = match s.fit_window {
        Some(w) => {
            let bound = bounded_weighted_energy(&trace, s.decay_exponent, w);
            checks.push(check(
                "weighted-energy-bounded",
                bound.sup_ratio <= 2.0,
                format!(
                    "sup of E(1+t)^{} over [{}, {}] is {:.4} times its first value",
                    s.decay_exponent, w[0], w[1], bound.sup_ratio
                ),
            ));
            match fit_decay_rate(&trace, w) {
                Ok(f) => (Some(f), None, Some(bound)),
                Err(e) => (None, Some(e.to_string()), Some(bound)),
            }
        }
        None => (None, None, None),
    };

    let budget = check_data_budget(&trace, 1e-6);
    let max_hardy_ratio = half_line.then(|| {
        trace
            .samples
            .iter()
            .map(|r| r.hardy_ratio)
            .fold(0.0, f64::max)
    });
    if let Some(h) = max_hardy_ratio {
        let limit = 1.0 + 10.0 * s.dx;
        checks.push(check(
            "hardy",
            h <= limit,
            format!("max hardy ratio {h:.6} against limit {limit}"),
        ));
        checks.push(check(
            "data-budget",
            budget.pass,
            format!(
                "min relative margin {:.3e} at t = {}",
                budget.min_relative_margin, budget.worst_t
            ),
        ));
    }

    let multiplier_summary = match (multipliers, &constants) {
        (Some(m), Some(c)) => {
            let feasibility = check_feasibility(&m.params, c);
            checks.push(check(
                "feasibility",
                feasibility.pass,
                format!(
                    "margins ut-inner {:.4}, ut-tail {:.4}, ux-unified {:.4}",
                    feasibility.margin("ut-inner").unwrap_or(f64::NAN),
                    feasibility.margin("ut-tail").unwrap_or(f64::NAN),
                    feasibility.margin("ux-unified").unwrap_or(f64::NAN),
                ),
            ));
            let t0 = find_t0(&m, &profile, data.support_radius, s.t0_scan_max, &ScanResolution::default());
            checks.push(check(
                "t0-found",
                t0.t0.is_some(),
                match t0.t0 {
                    Some(t) => format!("conditions hold on [{t}, {}]", t0.t_max),
                    None => format!("no activation time up to {}", t0.t_max),
                },
            ));
            let mut params = m.params;
            params.t0 = t0.t0;
            let (combo_max, quad_c, quad) = match t0.t0 {
                Some(t) if t <= s.t_final => {
                    let combo = trace
                        .samples
                        .iter()
                        .filter(|r| r.t >= t)
                        .map(|r| r.lyap_combo)
                        .fold(f64::NEG_INFINITY, f64::max);
                    let k = estimate_quadratic_constant(&trace, &params, c.l2, t);
                    let rep = quadratic_bound_check(&trace, &params, k.c_est, k.t_start);
                    checks.push(check(
                        "quadratic-bound",
                        rep.pass,
                        format!(
                            "C = {:.4e}, min margin {:.3e} over {} samples from t = {}",
                            k.c_est, rep.min_margin, rep.samples_checked, k.t_start
                        ),
                    ));
                    (Some(combo), Some(k), Some(rep))
                }
                _ => (None, None, None),
            };
            Some(MultiplierSummary {
                params,
                feasibility,
                t0,
                lyap_combo_max_after_t0: combo_max,
                quadratic_constant: quad_c,
                quadratic_bound: quad,
            })
        }
        _ => None,
    };
    if s.multipliers != MultiplierSource::None && multiplier_summary.is_none() {
        checks.push(check(
            "feasibility",
            false,
            multiplier_error.clone().unwrap_or_default(),
        ));
    }

    let all_checks_pass = checks.iter().all(|c| c.pass);
    let summary = Summary {
        name: s.name.clone(),
        domain_mode: s.domain_mode,
        profile,
        dx: config.dx,
        dt,
        steps,
        t_final: s.t_final,
        trace_rows: trace.len(),
        energy_initial: e0,
        energy_final: ef,
        energy_ratio: ef / e0,
        rate_fit,
        rate_fit_error,
        weighted_energy,
        threshold_warning: threshold_warning(validation.tail.v0),
        profile_validation: validation,
        constants,
        constants_error,
        multipliers: multiplier_summary,
        multiplier_error,
        max_hardy_ratio,
        budget,
        checks,
        all_checks_pass,
    };
    Ok(ScenarioRun { trace, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub dx: f64,
    pub dt: f64,
    /// Discrete L2 distance to the reference at the checkpoint.
    pub error_l2: f64,
    pub error_max: f64,
    /// `log2(e_{2h} / e_h)`, absent on the coarsest row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub scenario: String,
    pub checkpoint: f64,
    pub reference_dx: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Order between the two finest levels.
    pub fn finest_order(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.order)
    }
}

/// Levels to refine beyond the finest compared level for the reference.
pub const REFERENCE_EXTRA_LEVELS: u32 = 2;

/// Runs the scenario at `dx, dx/2, ..., dx/2^(levels-1)` and compares the
/// solution at `t_final` against a run two levels finer still, at the
/// coarse nodes.
pub fn convergence_study(s: &Scenario, levels: usize) -> Result<ConvergenceTable, ScenarioError> {
    if levels < 3 {
        return Err(ScenarioError::Invalid(format!(
            "a convergence study needs at least 3 levels, got {levels}"
        )));
    }
    s.validate()?;
    let profile = s.damping_profile()?;
    let data = s.initial_data();
    let solve = |dx: f64| -> Result<_, ScenarioError> {
        let config = SolverConfig {
            dx,
            ..s.solver_config()
        };
        let mut stepper = Stepper::new(&profile, &config, data.support_radius)?;
        let state = stepper.run(&data, &mut [])?;
        Ok((stepper.dt(), state))
    };
    let refine = 1usize << (levels as u32 - 1 + REFERENCE_EXTRA_LEVELS);
    let ref_dx = s.dx / refine as f64;
    let (_, reference) = solve(ref_dx)?;
    let rg = reference.grid;

    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    for level in 0..levels {
        let dx = s.dx / (1usize << level) as f64;
        let ratio = refine >> level;
        let (dt, state) = solve(dx)?;
        let g = state.grid;
        let (mut sum, mut max) = (0.0f64, 0.0f64);
        for j in 0..g.len {
            let offset = j as isize - g.origin as isize;
            let r = rg.origin as isize + offset * ratio as isize;
            let reference_value = if r >= 0 && (r as usize) < rg.len {
                reference.u_curr[r as usize]
            } else {
                0.0
            };
            let d = state.u_curr[j] - reference_value;
            sum += d * d;
            max = max.max(d.abs());
        }
        let error_l2 = (sum * dx).sqrt();
        let order = rows.last().map(|p| (p.error_l2 / error_l2).log2());
        rows.push(ConvergenceRow {
            dx,
            dt,
            error_l2,
            error_max: max,
            order,
        });
    }
    Ok(ConvergenceTable {
        scenario: s.name.clone(),
        checkpoint: s.t_final,
        reference_dx: ref_dx,
        rows,
    })
}

/// One row of a sweep. Failed runs keep their error and carry no summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub parameter: String,
    pub value: f64,
    pub summary: Option<Summary>,
    pub error: Option<String>,
}

/// Flat row of the aggregated sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: String,
    pub value: f64,
    pub alpha: Option<f64>,
    pub rms_residual: Option<f64>,
    pub all_checks_pass: Option<bool>,
    pub failed_checks: String,
    pub error: String,
}

impl SweepPoint {
    pub fn row(&self) -> SweepRow {
        let fit = self.summary.as_ref().and_then(|s| s.rate_fit);
        SweepRow {
            parameter: self.parameter.clone(),
            value: self.value,
            alpha: fit.map(|f| f.alpha),
            rms_residual: fit.map(|f| f.rms_residual),
            all_checks_pass: self.summary.as_ref().map(|s| s.all_checks_pass),
            failed_checks: self
                .summary
                .as_ref()
                .map(|s| {
                    s.checks
                        .iter()
                        .filter(|c| !c.pass)
                        .map(|c| c.name.as_str())
                        .collect::<Vec<_>>()
                        .join(";")
                })
                .unwrap_or_default(),
            error: self.error.clone().unwrap_or_default(),
        }
    }
}

/// Runs the base scenario once per value, in parallel on the current rayon
/// pool. Output order follows `values`.
pub fn sweep(base: &Scenario, parameter: &str, values: &[f64]) -> Vec<SweepPoint> {
    values
        .par_iter()
        .map(|&value| {
            let outcome = base
                .with_parameter(parameter, value)
                .and_then(|s| run_scenario(&s));
            match outcome {
                Ok(r) => SweepPoint {
                    parameter: parameter.into(),
                    value,
                    summary: Some(r.summary),
                    error: None,
                },
                Err(e) => SweepPoint {
                    parameter: parameter.into(),
                    value,
                    summary: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

pub fn write_sweep_csv<W: std::io::Write>(points: &[SweepPoint], writer: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    if points.is_empty() {
        w.write_record([
            "parameter",
            "value",
            "alpha",
            "rms_residual",
            "all_checks_pass",
            "failed_checks",
            "error",
        ])?;
    }
    for p in points {
        w.serialize(p.row())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHORT: &str = r#"
name = "short"
profile = "critical-tail-with-dead-zone"
tail = 6.0
dead_zone_end = 1.0
l2 = 2.0
data_shape = "smooth-bump"
support_radius = 2.0
dx = 0.1
t_final = 200.0
multipliers = "paper-defaults"
t0_scan_max = 3000.0
fit_window = [20.0, 200.0]
"#;

    #[test]
    fn parses_and_defaults() {
        let s = Scenario::from_toml_str(SHORT).unwrap();
        assert_eq!(s.domain_mode, DomainMode::HalfLine);
        assert_eq!(s.cfl, 0.9);
        assert_eq!(s.amplitude, 1.0);
        assert_eq!(s.decay_exponent, 2.0);
        assert_eq!(s.solver_config().record_stride, 1);
        let back = Scenario::from_toml_str(&s.to_toml_string()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let bad = format!("{SHORT}\nspeed = 2.0\n");
        assert!(matches!(Scenario::from_toml_str(&bad), Err(ScenarioError::Parse(_))));
        let bad = SHORT.replace("\"smooth-bump\"", "\"spike\"");
        assert!(matches!(Scenario::from_toml_str(&bad), Err(ScenarioError::Parse(_))));
        let bad = SHORT.replace("support_radius = 2.0", "support_radius = -1.0");
        assert!(matches!(Scenario::from_toml_str(&bad), Err(ScenarioError::Invalid(_))));
        let bad = SHORT.replace("tail = 6.0\n", "");
        assert!(matches!(Scenario::from_toml_str(&bad), Err(ScenarioError::Invalid(_))));
        let bad = SHORT.replace("[20.0, 200.0]", "[20.0, 900.0]");
        assert!(matches!(Scenario::from_toml_str(&bad), Err(ScenarioError::Invalid(_))));
        let bad = SHORT.replace("dx = 0.1", "dx = 0.0");
        assert!(Scenario::from_toml_str(&bad).unwrap_err().is_config_error());
        let bad = format!("{}\ndomain_mode = \"whole-line\"\n", SHORT);
        assert!(matches!(Scenario::from_toml_str(&bad), Err(ScenarioError::Invalid(_))));
    }

    #[test]
    fn short_run_summary() {
        let s = Scenario::from_toml_str(SHORT).unwrap();
        let r = run_scenario(&s).unwrap();
        let sum = &r.summary;
        assert_eq!(sum.trace_rows, r.trace.len());
        assert!(sum.energy_ratio < 1e-3);
        let m = sum.multipliers.as_ref().unwrap();
        assert!(m.feasibility.pass);
        assert!(m.t0.t0.is_some());
        assert!(sum.rate_fit.unwrap().alpha > 1.0);
        assert!(sum.checks.iter().any(|c| c.name == "hardy" && c.pass));
        assert!(sum.checks.iter().any(|c| c.name == "data-budget" && c.pass));
        let json = serde_json::to_value(sum).unwrap();
        assert_eq!(json["profile"]["kind"], "critical-tail-with-dead-zone");
    }

    #[test]
    fn constant_profile_needs_opt_out() {
        let text = r#"
name = "constant"
profile = "constant"
value = 1.0
data_shape = "hat"
support_radius = 2.0
dx = 0.1
t_final = 20.0
"#;
        let s = Scenario::from_toml_str(text).unwrap();
        assert!(matches!(run_scenario(&s), Err(ScenarioError::Profile(_))));
        let s = Scenario {
            require_tail_hypothesis: false,
            ..s
        };
        let r = run_scenario(&s).unwrap();
        assert!(r.summary.multipliers.is_none());
        assert!(r.summary.constants.is_none());
        assert!(r.summary.constants_error.is_some());
    }

    #[test]
    fn sweep_parameters() {
        let s = Scenario::from_toml_str(SHORT).unwrap();
        assert!(sweep(&s, "v0", &[]).is_empty());
        let s = Scenario {
            t_final: 30.0,
            fit_window: None,
            t0_scan_max: 100.0,
            ..s
        };
        let pts = sweep(&s, "v0", &[3.0, -1.0]);
        assert!(pts[0].summary.is_some());
        assert!(pts[1].error.is_some());
        assert!(s.with_parameter("speed", 1.0).is_err());
        assert_eq!(s.with_parameter("r", 3.0).unwrap().support_radius, 3.0);
        let mut buf = Vec::new();
        write_sweep_csv(&pts, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("parameter,value,alpha,rms_residual,all_checks_pass,failed_checks,error\n"));
        assert_eq!(text.lines().count(), 3);
    }

    fn undamped(cfl: f64) -> Scenario {
        Scenario::from_toml_str(&format!(
            r#"
name = "undamped"
profile = "zero"
require_tail_hypothesis = false
data_shape = "smooth-bump"
support_radius = 2.0
dx = 0.1
cfl = {cfl}
t_final = 3.0
"#
        ))
        .unwrap()
    }

    #[test]
    fn convergence_orders() {
        let t = convergence_study(&undamped(0.9), 3).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert!(t.rows[0].order.is_none());
        let o = t.finest_order().unwrap();
        assert!(o > 1.5 && o < 2.5, "{o}");
        assert!(convergence_study(&undamped(0.9), 2).is_err());
    }

    #[test]
    fn unit_courant_is_exact_at_every_level() {
        let t = convergence_study(&undamped(1.0), 3).unwrap();
        for r in &t.rows {
            assert!(r.error_max < 1e-12, "{r:?}");
        }
    }
}
