//! Scalar functionals of a trajectory, evaluated on [`Snapshot`]s.
//!
//! Conventions shared by every functional here:
//!
//! * `u_t` at level `n` is the centred difference `(u^{n+1} - u^{n-1}) / 2dt`.
//! * `u_x` is the central difference at interior nodes and the one-sided
//!   second-order stencil `(-3u_0 + 4u_1 - u_2) / 2dx` at the half-line
//!   boundary.
//! * Integrals use the trapezoidal rule on the nodes. Far-field nodes carry
//!   zeros, so only the half-line boundary node gets the half weight.
//!
//! The Lyapunov pair is
//!
//! ```text
//! calE = 1/2 ∫ [ f (u_t² + u_x²) + 2 g u u_t + (g V - g_t) u² + 2 h u_x u_t ] dx
//! calF = 1/2 ∫ (2fV - f_t - 2g + h_x) u_t² + 1/2 ∫ (2g - f_t + h_x) u_x²
//!      + 1/2 ∫ (g_tt - g_t V) u² + ∫ (hV - h_t) u_x u_t + 1/2 h(t,0) u_x(t,0)²
//! ```
//!
//! and satisfies `d/dt calE + calF = 0` along smooth half-line solutions for
//! any choice of the weights.

use serde::{Deserialize, Serialize};

use crate::multipliers::Multipliers;
use crate::profiles::DampingProfile;
use crate::solver::{DomainMode, Grid, InitialData, Observer, Snapshot};

/// Values at one node, handed to integrand closures.
#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub x: f64,
    /// Quadrature weight (`dx`, or `dx/2` at the half-line boundary).
    pub w: f64,
    pub u: f64,
    pub u_t: f64,
    pub u_x: f64,
    pub v: f64,
}

fn node_bounds(grid: &Grid, range: (usize, usize)) -> (usize, usize) {
    let hi = (range.1 + 1).min(grid.len - 2);
    let lo = match grid.domain {
        DomainMode::HalfLine => 0,
        DomainMode::WholeLine => range.0.saturating_sub(1).max(1),
    };
    (lo, hi)
}

#[inline]
fn gradient(grid: &Grid, u: &[f64], j: usize) -> f64 {
    if j == 0 {
        (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * grid.dx)
    } else {
        (u[j + 1] - u[j - 1]) / (2.0 * grid.dx)
    }
}

/// Folds `f` over every node that can carry a nonzero integrand.
pub fn fold_nodes<A>(snap: &Snapshot<'_>, init: A, mut f: impl FnMut(A, Node) -> A) -> A {
    let g = snap.grid;
    let (lo, hi) = node_bounds(g, snap.range);
    let inv_2dt = 0.5 / snap.dt;
    let mut acc = init;
    for j in lo..=hi {
        let w = if j == 0 { 0.5 * g.dx } else { g.dx };
        acc = f(
            acc,
            Node {
                x: g.x(j),
                w,
                u: snap.curr[j],
                u_t: (snap.next[j] - snap.prev[j]) * inv_2dt,
                u_x: gradient(g, snap.curr, j),
                v: snap.damping[j],
            },
        );
    }
    acc
}

/// `E = 1/2 (||u_t||² + ||u_x||²)`.
pub fn energy(snap: &Snapshot<'_>) -> f64 {
    0.5 * fold_nodes(snap, 0.0, |a, n| a + n.w * (n.u_t * n.u_t + n.u_x * n.u_x))
}

/// `∫ V u_t²`, the instantaneous energy loss rate.
pub fn damping_power(snap: &Snapshot<'_>) -> f64 {
    fold_nodes(snap, 0.0, |a, n| a + n.w * n.v * n.u_t * n.u_t)
}

/// `sup |u| / sqrt(1 + x)` divided by `||u_x||`; zero when `u_x` vanishes.
/// Only meaningful on the half-line; whole-line snapshots give NaN.
pub fn hardy_ratio(snap: &Snapshot<'_>) -> f64 {
    if snap.grid.domain != DomainMode::HalfLine {
        return f64::NAN;
    }
    let (sup, grad2) = fold_nodes(snap, (0.0f64, 0.0), |(s, g), n| {
        (s.max(n.u.abs() / (1.0 + n.x).sqrt()), g + n.w * n.u_x * n.u_x)
    });
    if grad2 > 0.0 {
        sup / grad2.sqrt()
    } else {
        0.0
    }
}

pub fn lyapunov_e(snap: &Snapshot<'_>, m: &Multipliers) -> f64 {
    let t = snap.t;
    let p = &m.params;
    let (f, g, g_t) = (p.f(t), p.g(t), p.g_t());
    0.5 * fold_nodes(snap, 0.0, |a, n| {
        let h = m.h(t, n.x);
        a + n.w
            * (f * (n.u_t * n.u_t + n.u_x * n.u_x)
                + 2.0 * g * n.u * n.u_t
                + (g * n.v - g_t) * n.u * n.u
                + 2.0 * h * n.u_x * n.u_t)
    })
}

/// Boundary value of `u_x` at `x = 0` (half-line only).
fn boundary_gradient(snap: &Snapshot<'_>) -> f64 {
    match snap.grid.domain {
        DomainMode::HalfLine => gradient(snap.grid, snap.curr, 0),
        DomainMode::WholeLine => 0.0,
    }
}

pub fn dissipation_f(snap: &Snapshot<'_>, m: &Multipliers) -> f64 {
    let t = snap.t;
    let p = &m.params;
    let (f, f_t, g, g_t, g_tt) = (p.f(t), p.f_t(t), p.g(t), p.g_t(), p.g_tt());
    let bulk = fold_nodes(snap, 0.0, |a, n| {
        let h = m.h(t, n.x);
        let h_x = m.h_x(t, n.x);
        let h_t = m.h_t(n.x);
        a + n.w
            * (0.5 * (2.0 * f * n.v - f_t - 2.0 * g + h_x) * n.u_t * n.u_t
                + 0.5 * (2.0 * g - f_t + h_x) * n.u_x * n.u_x
                + 0.5 * (g_tt - g_t * n.v) * n.u * n.u
                + (h * n.v - h_t) * n.u_x * n.u_t)
    });
    let ux0 = boundary_gradient(snap);
    bulk + 0.5 * m.h(t, 0.0) * ux0 * ux0
}

/// `f E + g (u, u_t) + 2 (h u_x, u_t)`.
pub fn lyapunov_combo(snap: &Snapshot<'_>, m: &Multipliers) -> f64 {
    let t = snap.t;
    let p = &m.params;
    let (f, g) = (p.f(t), p.g(t));
    fold_nodes(snap, 0.0, |a, n| {
        a + n.w
            * (0.5 * f * (n.u_t * n.u_t + n.u_x * n.u_x)
                + g * n.u * n.u_t
                + 2.0 * m.h(t, n.x) * n.u_x * n.u_t)
    })
}

/// `||V u0 + u1||_{1,1/2} = ∫ sqrt(1 + |x|) |V u0 + u1| dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedDataNorm {
    pub value: f64,
    pub squared: f64,
}

/// Trapezoidal quadrature of the weighted source norm at spacing `dx`.
pub fn weighted_source_norm(
    data: &InitialData,
    profile: &DampingProfile,
    domain: DomainMode,
    dx: f64,
) -> WeightedDataNorm {
    let r = data.support_radius;
    let n = (r / dx).ceil() as usize + 1;
    let integrand = |x: f64| (1.0 + x.abs()).sqrt() * (profile.evaluate(x) * data.u0(x) + data.u1(x)).abs();
    let mut value = 0.0;
    for j in 0..=n {
        let x = j as f64 * dx;
        let w = if j == 0 || j == n { 0.5 } else { 1.0 };
        value += w * integrand(x);
        if domain == DomainMode::WholeLine && j > 0 {
            value += w * integrand(-x);
        }
    }
    value *= dx;
    WeightedDataNorm {
        value,
        squared: value * value,
    }
}

/// Running time integral `w(t, x) = ∫_0^t u(s, x) ds` together with the
/// damped mass `∫_0^t ∫ V u² dx ds`, both by the trapezoidal rule in time.
#[derive(Debug, Clone, Default)]
pub struct AuxiliaryState {
    pub w: Vec<f64>,
    pub damped_mass: f64,
    last_density: f64,
    started: bool,
}

impl AuxiliaryState {
    pub fn new() -> Self {
        Self::default()
    }

    /// `||w_x||²` with the same gradient and quadrature conventions as the
    /// energy.
    pub fn gradient_norm2(&self, snap: &Snapshot<'_>) -> f64 {
        if self.w.is_empty() {
            return 0.0;
        }
        let g = snap.grid;
        let (lo, hi) = node_bounds(g, snap.range);
        (lo..=hi)
            .map(|j| {
                let wq = if j == 0 { 0.5 * g.dx } else { g.dx };
                let d = gradient(g, &self.w, j);
                wq * d * d
            })
            .sum()
    }
}

fn damped_density(snap: &Snapshot<'_>) -> f64 {
    let (lo, hi) = node_bounds(snap.grid, snap.range);
    let bulk: f64 = snap.damping[lo..=hi]
        .iter()
        .zip(&snap.curr[lo..=hi])
        .map(|(v, u)| v * u * u)
        .sum();
    let edge = if lo == 0 {
        0.5 * snap.damping[0] * snap.curr[0] * snap.curr[0]
    } else {
        0.0
    };
    snap.grid.dx * (bulk - edge)
}

/// Advances `w` and the damped mass to the level of `snap`. Must be called
/// once for every step, starting at step 0.
pub fn accumulate_auxiliary(aux: &mut AuxiliaryState, snap: &Snapshot<'_>) {
    let density = damped_density(snap);
    if !aux.started || snap.step == 0 {
        aux.w = vec![0.0; snap.grid.len];
        aux.damped_mass = 0.0;
        aux.last_density = density;
        aux.started = true;
        return;
    }
    let half_dt = 0.5 * snap.dt;
    let (lo, hi) = node_bounds(snap.grid, snap.range);
    let pairs = snap.prev[lo..=hi].iter().zip(&snap.curr[lo..=hi]);
    for (w, (p, c)) in aux.w[lo..=hi].iter_mut().zip(pairs) {
        *w += half_dt * (p + c);
    }
    aux.damped_mass += half_dt * (aux.last_density + density);
    aux.last_density = density;
}

/// One row of the trace. Field names follow the CSV column contract.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSample {
    pub t: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "calE")]
    pub cal_e: f64,
    #[serde(rename = "calF")]
    pub cal_f: f64,
    pub hardy_ratio: f64,
    pub lyap_combo: f64,
    /// `||u||²`.
    pub u_l2: f64,
    pub damped_mass_accum: f64,
    pub weighted_budget_lhs: f64,
    pub weighted_budget_rhs: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub samples: Vec<FunctionalSample>,
}

impl EnergyTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> Option<&FunctionalSample> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&FunctionalSample> {
        self.samples.last()
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        for s in &self.samples {
            w.serialize(s)?;
        }
        if self.samples.is_empty() {
            w.write_record([
                "t",
                "E",
                "calE",
                "calF",
                "hardy_ratio",
                "lyap_combo",
                "u_l2",
                "damped_mass_accum",
                "weighted_budget_lhs",
                "weighted_budget_rhs",
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self, csv::Error> {
        let mut r = csv::Reader::from_reader(reader);
        let samples = r.deserialize().collect::<Result<Vec<FunctionalSample>, _>>()?;
        Ok(Self { samples })
    }
}

/// Observer that builds an [`EnergyTrace`]: accumulates the auxiliary
/// function every step and evaluates every functional each
/// `record_stride` steps (and at the final step).
#[derive(Debug, Clone)]
pub struct TraceRecorder {
    multipliers: Option<Multipliers>,
    record_stride: usize,
    budget_rhs: f64,
    aux: AuxiliaryState,
    trace: EnergyTrace,
}

impl TraceRecorder {
    /// `budget_rhs` is `1/2 ||u0||² + ||V u0 + u1||²_{1,1/2}`; see
    /// [`budget_rhs`].
    pub fn new(multipliers: Option<Multipliers>, record_stride: usize, budget_rhs: f64) -> Self {
        Self {
            multipliers,
            record_stride: record_stride.max(1),
            budget_rhs,
            aux: AuxiliaryState::new(),
            trace: EnergyTrace::default(),
        }
    }

    pub fn into_trace(self) -> EnergyTrace {
        self.trace
    }

    pub fn trace(&self) -> &EnergyTrace {
        &self.trace
    }

    fn sample(&self, snap: &Snapshot<'_>) -> FunctionalSample {
        let energy = energy(snap);
        let u_l2 = fold_nodes(snap, 0.0, |a, n| a + n.w * n.u * n.u);
        let (cal_e, cal_f, lyap_combo) = match &self.multipliers {
            Some(m) => (
                lyapunov_e(snap, m),
                dissipation_f(snap, m),
                lyapunov_combo(snap, m),
            ),
            None => (f64::NAN, f64::NAN, f64::NAN),
        };
        let lhs = 0.5 * u_l2 + 0.25 * self.aux.gradient_norm2(snap) + self.aux.damped_mass;
        FunctionalSample {
            t: snap.t,
            energy,
            cal_e,
            cal_f,
            hardy_ratio: hardy_ratio(snap),
            lyap_combo,
            u_l2,
            damped_mass_accum: self.aux.damped_mass,
            weighted_budget_lhs: lhs,
            weighted_budget_rhs: self.budget_rhs,
        }
    }
}

impl Observer for TraceRecorder {
    fn observe(&mut self, snap: &Snapshot<'_>) {
        accumulate_auxiliary(&mut self.aux, snap);
        if snap.step % self.record_stride == 0 || snap.is_last() {
            let s = self.sample(snap);
            self.trace.samples.push(s);
        }
    }
}

/// `1/2 ||u0||² + ||V u0 + u1||²_{1,1/2}` at grid spacing `dx`.
pub fn budget_rhs(data: &InitialData, profile: &DampingProfile, domain: DomainMode, dx: f64) -> f64 {
    let r = data.support_radius;
    let n = (r / dx).ceil() as usize + 1;
    let mut u0_sq = 0.0;
    for j in 0..=n {
        let x = j as f64 * dx;
        let w = if j == 0 || j == n { 0.5 } else { 1.0 };
        u0_sq += w * data.u0(x).powi(2);
        if domain == DomainMode::WholeLine && j > 0 {
            u0_sq += w * data.u0(-x).powi(2);
        }
    }
    u0_sq *= dx;
    0.5 * u0_sq + weighted_source_norm(data, profile, domain, dx).squared
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub pass: bool,
    pub samples: usize,
    /// Smallest `(rhs - lhs) / rhs` over the trace.
    pub min_relative_margin: f64,
    pub worst_t: f64,
}

/// Checks `lhs <= rhs (1 + rel_tol)` at every sample.
pub fn check_data_budget(trace: &EnergyTrace, rel_tol: f64) -> BudgetReport {
    let mut worst = (f64::INFINITY, f64::NAN);
    let mut pass = true;
    for s in &trace.samples {
        let (lhs, rhs) = (s.weighted_budget_lhs, s.weighted_budget_rhs);
        pass &= lhs <= rhs * (1.0 + rel_tol) || (lhs == 0.0 && rhs == 0.0);
        let margin = if rhs > 0.0 { (rhs - lhs) / rhs } else { 0.0 };
        if margin < worst.0 {
            worst = (margin, s.t);
        }
    }
    BudgetReport {
        pass,
        samples: trace.len(),
        min_relative_margin: worst.0,
        worst_t: worst.1,
    }
}

/// Captures the functionals at the three levels around a target time, for
/// local identity checks.
#[derive(Debug, Clone)]
pub struct WindowProbe {
    target: f64,
    multipliers: Option<Multipliers>,
    pub rows: Vec<WindowRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRow {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub energy: f64,
    pub damping_power: f64,
    pub cal_e: f64,
    pub cal_f: f64,
}

impl WindowProbe {
    pub fn new(target: f64, multipliers: Option<Multipliers>) -> Self {
        Self {
            target,
            multipliers,
            rows: Vec::new(),
        }
    }

    /// `(calE(t+dt) - calE(t-dt)) / 2dt + calF(t)` at the captured centre.
    pub fn identity_residual(&self) -> Option<f64> {
        let [a, b, c] = self.rows.as_slice() else {
            return None;
        };
        Some((c.cal_e - a.cal_e) / (2.0 * b.dt) + b.cal_f)
    }

    /// `(E(t+dt) - E(t-dt)) / 2dt + ∫ V u_t²` at the captured centre.
    pub fn dissipation_residual(&self) -> Option<f64> {
        let [a, b, c] = self.rows.as_slice() else {
            return None;
        };
        Some((c.energy - a.energy) / (2.0 * b.dt) + b.damping_power)
    }

    pub fn centre(&self) -> Option<&WindowRow> {
        self.rows.get(1)
    }
}

impl Observer for WindowProbe {
    fn observe(&mut self, snap: &Snapshot<'_>) {
        let centre = (self.target / snap.dt).round() as usize;
        if snap.step + 1 < centre || snap.step > centre + 1 {
            return;
        }
        let (cal_e, cal_f) = match &self.multipliers {
            Some(m) => (lyapunov_e(snap, m), dissipation_f(snap, m)),
            None => (f64::NAN, f64::NAN),
        };
        self.rows.push(WindowRow {
            step: snap.step,
            t: snap.t,
            dt: snap.dt,
            energy: energy(snap),
            damping_power: damping_power(snap),
            cal_e,
            cal_f,
        });
    }
}
