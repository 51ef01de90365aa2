//! Leapfrog integration of `u_tt - u_xx + V(x) u_t = 0`.
//!
//! The damping term is treated with the trapezoidal average of the two outer
//! time levels, so each step is an explicit diagonal update:
//!
//! ```text
//! (1 + V_j dt/2) u_j^{n+1} = 2 u_j^n - (1 - V_j dt/2) u_j^{n-1} + (dt/dx)^2 (u_{j+1}^n - 2 u_j^n + u_{j-1}^n)
//! ```
//!
//! Storage is allocated once for the whole run but only the cells inside the
//! wavefront `R + t + margin * dx` are ever touched. Cells beyond it stay
//! exactly zero.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profiles::DampingProfile;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("initial data incompatible with the problem: {0}")]
    Data(String),
    #[error("non-finite value in the solution at t = {t}")]
    Unstable { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainMode {
    /// `x >= 0` with `u(t, 0) = 0`.
    HalfLine,
    /// The full line, profile and data evaluated at `|x|`.
    WholeLine,
}

impl fmt::Display for DomainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::HalfLine => "half-line",
            Self::WholeLine => "whole-line",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dx: f64,
    /// Upper bound on `dt / dx`. The actual step is shortened so that an
    /// integer number of steps lands exactly on `t_final`.
    pub cfl: f64,
    pub t_final: f64,
    pub domain: DomainMode,
    pub wavefront_margin: usize,
    pub record_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dx: 0.05,
            cfl: 0.9,
            t_final: 10.0,
            domain: DomainMode::HalfLine,
            wavefront_margin: 16,
            record_stride: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(SolverError::Config(format!("dx must be positive, got {}", self.dx)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(SolverError::Config(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(SolverError::Config(format!(
                "t_final must be nonnegative, got {}",
                self.t_final
            )));
        }
        if self.wavefront_margin < 2 {
            return Err(SolverError::Config(format!(
                "wavefront_margin must be at least 2, got {}",
                self.wavefront_margin
            )));
        }
        if self.record_stride == 0 {
            return Err(SolverError::Config("record_stride must be positive".into()));
        }
        Ok(())
    }

    /// Number of steps to reach `t_final`.
    pub fn step_count(&self) -> usize {
        if self.t_final == 0.0 {
            return 0;
        }
        // the 1e-9 keeps exact ratios (cfl = 1, t_final a multiple of dx)
        // from rounding up to one extra step
        ((self.t_final / (self.cfl * self.dx)) * (1.0 - 1e-12) - 1e-9)
            .ceil()
            .max(1.0) as usize
    }

    pub fn dt(&self) -> f64 {
        match self.step_count() {
            0 => self.cfl * self.dx,
            n => self.t_final / n as f64,
        }
    }
}

type Field = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Named data shapes used by the scenario catalog. All are supported in
/// `[0, R]` and mirrored evenly for whole-line runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataShape {
    /// `u0` a hat of the given height on `[0, R]` peaking at `R/2`, `u1 = 0`.
    Hat,
    /// `u0 = A cos^2(pi (x - R/2) / R)` on `[0, R]`, `u1 = 0`.
    SmoothBump,
    /// `u0 = 0`, `u1 = A` on `[0, R]`.
    BoxVelocity,
}

/// Displacement and velocity at `t = 0` with their support radius.
#[derive(Clone)]
pub struct InitialData {
    u0: Field,
    u1: Field,
    pub support_radius: f64,
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialData")
            .field("support_radius", &self.support_radius)
            .finish_non_exhaustive()
    }
}

impl InitialData {
    pub fn new<F, G>(u0: F, u1: G, support_radius: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            u0: Arc::new(u0),
            u1: Arc::new(u1),
            support_radius,
        }
    }

    pub fn zero(support_radius: f64) -> Self {
        Self::new(|_| 0.0, |_| 0.0, support_radius)
    }

    pub fn from_shape(shape: DataShape, amplitude: f64, r: f64) -> Self {
        match shape {
            DataShape::Hat => Self::new(
                move |x| {
                    let x = x.abs();
                    if x >= r {
                        0.0
                    } else {
                        amplitude * (1.0 - (2.0 * x / r - 1.0).abs())
                    }
                },
                |_| 0.0,
                r,
            ),
            DataShape::SmoothBump => Self::new(
                move |x| {
                    let x = x.abs();
                    if x >= r {
                        0.0
                    } else {
                        let c = (std::f64::consts::PI * (x - 0.5 * r) / r).cos();
                        amplitude * c * c
                    }
                },
                |_| 0.0,
                r,
            ),
            DataShape::BoxVelocity => Self::new(
                |_| 0.0,
                move |x| if x.abs() <= r { amplitude } else { 0.0 },
                r,
            ),
        }
    }

    pub fn u0(&self, x: f64) -> f64 {
        (self.u0)(x)
    }

    pub fn u1(&self, x: f64) -> f64 {
        (self.u1)(x)
    }
}

/// Uniform node layout. Node `j` sits at `(j - origin) * dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub dx: f64,
    pub origin: usize,
    pub len: usize,
    pub domain: DomainMode,
}

impl Grid {
    fn for_run(config: &SolverConfig, support_radius: f64) -> Self {
        let reach = ((support_radius + config.t_final) / config.dx).ceil() as usize
            + config.wavefront_margin
            + 3;
        match config.domain {
            DomainMode::HalfLine => Self {
                dx: config.dx,
                origin: 0,
                len: reach + 1,
                domain: config.domain,
            },
            DomainMode::WholeLine => Self {
                dx: config.dx,
                origin: reach,
                len: 2 * reach + 1,
                domain: config.domain,
            },
        }
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        (j as f64 - self.origin as f64) * self.dx
    }
}

/// Two consecutive time levels of the solution.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub t: f64,
    pub step: usize,
    pub dt: f64,
    pub grid: Grid,
    pub u_prev: Vec<f64>,
    pub u_curr: Vec<f64>,
    /// Number of cells from the origin beyond which `u_curr` and `u_prev`
    /// are exactly zero.
    pub active_extent: usize,
}

impl WaveState {
    /// Inclusive node index range holding every possibly-nonzero value.
    pub fn active_range(&self) -> (usize, usize) {
        active_range(&self.grid, self.active_extent)
    }
}

fn active_range(grid: &Grid, extent: usize) -> (usize, usize) {
    let hi = (grid.origin + extent).min(grid.len - 2);
    let lo = match grid.domain {
        DomainMode::HalfLine => 0,
        DomainMode::WholeLine => grid.origin.saturating_sub(extent).max(1),
    };
    (lo, hi)
}

/// Three time levels around step `n`, handed to observers.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub step: usize,
    pub total_steps: usize,
    pub t: f64,
    pub dt: f64,
    pub grid: &'a Grid,
    /// `V` sampled at every node.
    pub damping: &'a [f64],
    pub prev: &'a [f64],
    pub curr: &'a [f64],
    pub next: &'a [f64],
    /// Inclusive index range outside of which all three levels vanish.
    pub range: (usize, usize),
}

impl Snapshot<'_> {
    pub fn is_last(&self) -> bool {
        self.step == self.total_steps
    }
}

/// Steps between scans of the new level for non-finite values.
pub const FINITE_CHECK_STRIDE: usize = 32;

pub trait Observer {
    fn observe(&mut self, snapshot: &Snapshot<'_>);
}

/// Coefficients of the update, precomputed for the whole run.
#[derive(Debug, Clone)]
pub struct Stepper {
    config: SolverConfig,
    grid: Grid,
    dt: f64,
    total_steps: usize,
    support_radius: f64,
    damping: Vec<f64>,
    /// `1 / (1 + V dt / 2)`
    inv_diag: Vec<f64>,
    /// `(1 - V dt / 2) / (1 + V dt / 2)`
    prev_coef: Vec<f64>,
    scratch: Vec<f64>,
}

impl Stepper {
    pub fn new(
        profile: &DampingProfile,
        config: &SolverConfig,
        support_radius: f64,
    ) -> Result<Self, SolverError> {
        config.validate()?;
        if !(support_radius > 0.0 && support_radius.is_finite()) {
            return Err(SolverError::Data(format!(
                "support radius must be positive, got {support_radius}"
            )));
        }
        let grid = Grid::for_run(config, support_radius);
        let dt = config.dt();
        let mut damping = vec![0.0; grid.len];
        profile.sample_into(grid.x(0), grid.dx, &mut damping);
        let inv_diag: Vec<f64> = damping.iter().map(|v| 1.0 / (1.0 + 0.5 * v * dt)).collect();
        let prev_coef = damping
            .iter()
            .zip(&inv_diag)
            .map(|(v, d)| (1.0 - 0.5 * v * dt) * d)
            .collect();
        Ok(Self {
            config: *config,
            grid,
            dt,
            total_steps: config.step_count(),
            support_radius,
            damping,
            inv_diag,
            prev_coef,
            scratch: vec![0.0; grid.len],
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn total_steps(&self) -> usize {
        self.total_steps
    }

    pub fn damping(&self) -> &[f64] {
        &self.damping
    }

    fn extent_at(&self, t: f64) -> usize {
        (((self.support_radius + t) / self.grid.dx) * (1.0 + 1e-12)).floor() as usize
            + self.config.wavefront_margin
    }

    /// Second-order Taylor level `u0 + s u1 + (s^2/2)(u0'' - V u1)` with
    /// `s = ±dt` and `u0''` from central differences.
    fn taylor_level(&self, u0: &[f64], u1: &[f64], s: f64) -> Vec<f64> {
        let g = &self.grid;
        let inv_dx2 = 1.0 / (g.dx * g.dx);
        let mut out = vec![0.0; g.len];
        for j in 1..g.len - 1 {
            let lap = (u0[j + 1] - 2.0 * u0[j] + u0[j - 1]) * inv_dx2;
            out[j] = u0[j] + s * u1[j] + 0.5 * s * s * (lap - self.damping[j] * u1[j]);
        }
        if g.domain == DomainMode::HalfLine {
            out[0] = 0.0;
        }
        out
    }

    fn sample_data(&self, data: &InitialData) -> Result<(Vec<f64>, Vec<f64>), SolverError> {
        let g = &self.grid;
        let r = data.support_radius;
        let mut u0 = vec![0.0; g.len];
        let mut u1 = vec![0.0; g.len];
        for j in 0..g.len {
            let x = g.x(j);
            let (a, b) = (data.u0(x), data.u1(x));
            if !(a.is_finite() && b.is_finite()) {
                return Err(SolverError::Data(format!("non-finite data at x = {x}")));
            }
            if x.abs() > r + g.dx && (a != 0.0 || b != 0.0) {
                return Err(SolverError::Data(format!(
                    "data nonzero at x = {x}, outside the support radius {r}"
                )));
            }
            u0[j] = a;
            u1[j] = b;
        }
        if g.domain == DomainMode::HalfLine {
            let scale = u0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if u0[0].abs() > 1e-9 * scale + 1e-14 {
                return Err(SolverError::Data(format!(
                    "u0(0) = {} is incompatible with u(t, 0) = 0",
                    u0[0]
                )));
            }
            u0[0] = 0.0;
        }
        Ok((u0, u1))
    }

    /// Samples the data and builds the first two levels.
    pub fn initialize(&self, data: &InitialData) -> Result<WaveState, SolverError> {
        let (u0, u1) = self.sample_data(data)?;
        let u_curr = self.taylor_level(&u0, &u1, self.dt);
        Ok(WaveState {
            t: self.dt,
            step: 1,
            dt: self.dt,
            grid: self.grid,
            u_prev: u0,
            u_curr,
            active_extent: self.extent_at(0.0),
        })
    }

    /// The level at `t = -dt`, from the same Taylor expansion as the start
    /// level. Used only to centre `u_t` at `t = 0`.
    pub fn backward_level(&self, data: &InitialData) -> Result<Vec<f64>, SolverError> {
        let (u0, u1) = self.sample_data(data)?;
        Ok(self.taylor_level(&u0, &u1, -self.dt))
    }

    /// Computes the level after `state.u_curr` into the internal scratch
    /// buffer and returns the new active extent. Nothing in `state` changes.
    fn compute_next(&mut self, state: &WaveState) -> Result<usize, SolverError> {
        let t_next = (state.step + 1) as f64 * self.dt;
        let extent = (state.active_extent + 1).min(self.extent_at(t_next));
        let (lo, hi) = active_range(&self.grid, extent);
        let lo = lo.max(1);
        let lambda2 = (self.dt / self.grid.dx).powi(2);
        let (prev, curr) = (&state.u_prev, &state.u_curr);
        let next = &mut self.scratch;
        let rows = next[lo..=hi]
            .iter_mut()
            .zip(curr[lo - 1..=hi + 1].windows(3))
            .zip(self.inv_diag[lo..=hi].iter().zip(&self.prev_coef[lo..=hi]))
            .zip(&prev[lo..=hi]);
        for (((out, c), (d, q)), p) in rows {
            *out = d * (2.0 * c[1] + lambda2 * (c[2] - 2.0 * c[1] + c[0])) - q * p;
        }
        // Non-finite values never return to finite ones, so a periodic scan
        // catches a blow-up within FINITE_CHECK_STRIDE steps.
        let step = state.step + 1;
        if (step % FINITE_CHECK_STRIDE == 0 || step == self.total_steps)
            && !next[lo..=hi].iter().all(|v| v.is_finite())
        {
            return Err(SolverError::Unstable { t: t_next });
        }
        if self.grid.domain == DomainMode::HalfLine {
            next[0] = 0.0;
        }
        Ok(extent)
    }

    fn commit(&mut self, state: &mut WaveState, extent: usize) {
        std::mem::swap(&mut state.u_prev, &mut state.u_curr);
        std::mem::swap(&mut state.u_curr, &mut self.scratch);
        state.step += 1;
        state.t = state.step as f64 * self.dt;
        state.active_extent = extent;
    }

    /// Advances `state` by one step.
    pub fn step(&mut self, state: &mut WaveState) -> Result<(), SolverError> {
        let extent = self.compute_next(state)?;
        self.commit(state, extent);
        Ok(())
    }

    /// Integrates to `t_final`, handing every level `n = 0..=N` to each
    /// observer together with its two neighbours. Returns the state at
    /// `t_final` (`u_curr` is the final level).
    pub fn run(
        &mut self,
        data: &InitialData,
        observers: &mut [&mut dyn Observer],
    ) -> Result<WaveState, SolverError> {
        let mut state = self.initialize(data)?;
        let u_minus = self.backward_level(data)?;
        let total = self.total_steps;
        let extent0 = self.extent_at(0.0);
        {
            let snap = Snapshot {
                step: 0,
                total_steps: total,
                t: 0.0,
                dt: self.dt,
                grid: &self.grid,
                damping: &self.damping,
                prev: &u_minus,
                curr: &state.u_prev,
                next: &state.u_curr,
                range: active_range(&self.grid, extent0 + 1),
            };
            for o in observers.iter_mut() {
                o.observe(&snap);
            }
        }
        if total == 0 {
            return Ok(state);
        }
        for n in 1..=total {
            let extent = self.compute_next(&state)?;
            let snap = Snapshot {
                step: n,
                total_steps: total,
                t: n as f64 * self.dt,
                dt: self.dt,
                grid: &self.grid,
                damping: &self.damping,
                prev: &state.u_prev,
                curr: &state.u_curr,
                next: &self.scratch,
                range: active_range(&self.grid, extent),
            };
            for o in observers.iter_mut() {
                o.observe(&snap);
            }
            if n < total {
                self.commit(&mut state, extent);
            }
        }
        Ok(state)
    }
}

/// One-call wrapper: build the stepper and run.
pub fn run(
    data: &InitialData,
    profile: &DampingProfile,
    config: &SolverConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<WaveState, SolverError> {
    Stepper::new(profile, config, data.support_radius)?.run(data, observers)
}

/// The energy the scheme conserves exactly when `V = 0`:
///
/// ```text
/// E^{n+1/2} = dx/2 * sum_j [ ((u^{n+1}_j - u^n_j)/dt)^2 + D+u^{n+1}_j D+u^n_j ]
/// ```
///
/// evaluated between `state.u_prev` (level n) and `state.u_curr` (level n+1).
pub fn staggered_energy(state: &WaveState) -> f64 {
    let (lo, hi) = state.active_range();
    let dx = state.grid.dx;
    let dt = state.dt;
    let (a, b) = (&state.u_prev, &state.u_curr);
    let lo = lo.saturating_sub(1);
    let hi = (hi + 1).min(state.grid.len - 1);
    let mut kinetic = 0.0;
    for j in lo..=hi {
        let v = (b[j] - a[j]) / dt;
        kinetic += v * v;
    }
    let mut potential = 0.0;
    for j in lo..hi {
        potential += (b[j + 1] - b[j]) * (a[j + 1] - a[j]);
    }
    0.5 * dx * (kinetic + potential / (dx * dx))
}
