//! Time/space weights for the energy multiplier argument and the pointwise
//! conditions that make the associated dissipation functional nonnegative.
//!
//! The weights are
//!
//! ```text
//! f(t) = eps1 (1 + t)^2,   g(t) = eps2 (1 + t),   h(t, x) = eps3 (1 + t) phi(x)
//! ```
//!
//! where `phi` grows like `1 + x` up to `L1`, is frozen at `1 + L2` from
//! `L2` on, and is bridged monotonically in between.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profiles::{DampingProfile, ProfileConstants};

#[derive(Debug, Error, PartialEq)]
pub enum MultiplierError {
    #[error("the explicit parameter choice needs V0 > 2, got V0 = {0}")]
    SubcriticalV0(f64),
    #[error("V* must be positive, got {0}")]
    BadVStar(f64),
    #[error("multiplier weights must be positive: {0}")]
    NonPositive(String),
    #[error("bridge interval needs 0 <= L1 <= L2, got L1 = {l1}, L2 = {l2}")]
    BadBridge { l1: f64, l2: f64 },
    #[error("bridge is not monotone: phi'({x}) = {slope}")]
    NotMonotone { x: f64, slope: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierParams {
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    /// Young-inequality weight splitting the `h V u_x u_t` cross term.
    pub k: f64,
    /// Activation time, once a scan has found one.
    pub t0: Option<f64>,
}

impl MultiplierParams {
    pub fn new(eps1: f64, eps2: f64, eps3: f64, k: f64) -> Result<Self, MultiplierError> {
        for (name, v) in [("eps1", eps1), ("eps2", eps2), ("eps3", eps3), ("k", k)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MultiplierError::NonPositive(format!("{name} = {v}")));
            }
        }
        Ok(Self {
            eps1,
            eps2,
            eps3,
            k,
            t0: None,
        })
    }

    #[inline]
    pub fn f(&self, t: f64) -> f64 {
        self.eps1 * (1.0 + t) * (1.0 + t)
    }

    #[inline]
    pub fn f_t(&self, t: f64) -> f64 {
        2.0 * self.eps1 * (1.0 + t)
    }

    #[inline]
    pub fn g(&self, t: f64) -> f64 {
        self.eps2 * (1.0 + t)
    }

    #[inline]
    pub fn g_t(&self) -> f64 {
        self.eps2
    }

    #[inline]
    pub fn g_tt(&self) -> f64 {
        0.0
    }

    /// Bound on `g_t - g V`, valid because `V >= 0`.
    pub fn c1(&self) -> f64 {
        self.eps2
    }

    /// Bound constant in `g_t V - g_tt <= C2 V`.
    pub fn c2(&self) -> f64 {
        self.eps2
    }
}

/// Returns `(1, V0/2, 2 V0, 4 V0 V* / (V0 - 2))`.
pub fn default_params(v0: f64, v_star: f64) -> Result<MultiplierParams, MultiplierError> {
    if !(v0 > 2.0) {
        return Err(MultiplierError::SubcriticalV0(v0));
    }
    if !(v_star > 0.0 && v_star.is_finite()) {
        return Err(MultiplierError::BadVStar(v_star));
    }
    MultiplierParams::new(1.0, 0.5 * v0, 2.0 * v0, 4.0 * v0 * v_star / (v0 - 2.0))
}

/// `k` blows up as `V0 -> 2`; below `V0 = 2.1` the default choice is legal
/// but numerically fragile.
pub fn threshold_warning(v0: f64) -> Option<String> {
    (v0 > 2.0 && v0 - 2.0 < 0.1).then(|| {
        format!("V0 - 2 = {:.3e} is small; k = 4 V0 V*/(V0 - 2) is very large", v0 - 2.0)
    })
}

/// The bridge function `phi`.
///
/// On `[L1, L2]` it is the quintic Hermite interpolant with values
/// `(1 + L1, 1 + L2)`, slopes `(1, 0)` and zero curvature at both ends. The
/// secant slope of the bridge is always 1, so in the unit variable
/// `s = (x - L1) / (L2 - L1)` it is the fixed polynomial
/// `s + 4 s^3 - 7 s^4 + 3 s^5`, whose derivative is positive on `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiSpec {
    pub l1: f64,
    pub l2: f64,
}

impl PhiSpec {
    pub fn new(l1: f64, l2: f64) -> Result<Self, MultiplierError> {
        if !(l1 >= 0.0 && l1 <= l2 && l2.is_finite()) {
            return Err(MultiplierError::BadBridge { l1, l2 });
        }
        let spec = Self { l1, l2 };
        if l2 > l1 {
            let n = 4096;
            for i in 0..=n {
                let x = l1 + (l2 - l1) * i as f64 / n as f64;
                let slope = spec.derivative(x);
                if slope < -1e-12 {
                    return Err(MultiplierError::NotMonotone { x, slope });
                }
            }
        }
        Ok(spec)
    }

    pub fn from_constants(c: &ProfileConstants) -> Result<Self, MultiplierError> {
        Self::new(c.l1, c.l2)
    }

    pub fn max_value(&self) -> f64 {
        1.0 + self.l2
    }

    pub fn value(&self, x: f64) -> f64 {
        let x = x.abs();
        if x < self.l1 {
            1.0 + x
        } else if x >= self.l2 {
            1.0 + self.l2
        } else {
            let w = self.l2 - self.l1;
            let s = (x - self.l1) / w;
            let s2 = s * s;
            1.0 + self.l1 + w * (s + s2 * s * (4.0 - 7.0 * s + 3.0 * s2))
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let x = x.abs();
        if x < self.l1 {
            1.0
        } else if x >= self.l2 {
            0.0
        } else {
            let s = (x - self.l1) / (self.l2 - self.l1);
            let s2 = s * s;
            1.0 + s2 * (12.0 - 28.0 * s + 15.0 * s2)
        }
    }
}

/// Weights plus bridge: everything needed to evaluate `f`, `g`, `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub params: MultiplierParams,
    pub phi: PhiSpec,
}

impl Multipliers {
    pub fn new(params: MultiplierParams, phi: PhiSpec) -> Self {
        Self { params, phi }
    }

    #[inline]
    pub fn h(&self, t: f64, x: f64) -> f64 {
        self.params.eps3 * (1.0 + t) * self.phi.value(x)
    }

    #[inline]
    pub fn h_x(&self, t: f64, x: f64) -> f64 {
        self.params.eps3 * (1.0 + t) * self.phi.derivative(x)
    }

    #[inline]
    pub fn h_t(&self, x: f64) -> f64 {
        self.params.eps3 * self.phi.value(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub label: String,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Margins of the six inequalities, in order: `eps3 - 2 eps1 - 2 eps2`,
    /// `2 eps1 V0 - 2 eps1 - 2 eps2`, the three large-time limits of the
    /// velocity-gradient coefficient on `[0, L1]`, `[L1, L2]`, `[L2, inf)`,
    /// and their common lower bound through `V*`.
    pub inequalities: Vec<Inequality>,
    pub pass: bool,
}

impl FeasibilityReport {
    pub fn margin(&self, label: &str) -> Option<f64> {
        self.inequalities
            .iter()
            .find(|i| i.label == label)
            .map(|i| i.margin)
    }
}

pub fn check_feasibility(p: &MultiplierParams, c: &ProfileConstants) -> FeasibilityReport {
    let (e1, e2, e3, k) = (p.eps1, p.eps2, p.eps3, p.k);
    let base = 2.0 * e2 - 2.0 * e1;
    let inequalities = vec![
        ("ut-inner", e3 - 2.0 * e1 - 2.0 * e2),
        ("ut-tail", 2.0 * e1 * c.v0 - 2.0 * e1 - 2.0 * e2),
        ("ux-inner", base + e3 - e3 / k * (1.0 + c.l1) * c.v_big_m),
        ("ux-bridge", base - e3 / k * (1.0 + c.l2) * c.v_big_m),
        ("ux-tail", base - e3 / k * c.v1),
        ("ux-unified", base - e3 / k * c.v_star),
    ];
    let pass = ["ut-inner", "ut-tail", "ux-unified"]
        .iter()
        .all(|l| inequalities.iter().any(|(m, v)| m == l && *v > 0.0));
    FeasibilityReport {
        inequalities: inequalities
            .into_iter()
            .map(|(label, margin)| Inequality {
                label: label.to_string(),
                margin,
            })
            .collect(),
        pass,
    }
}

/// Coefficient of `u_t^2` after the Young split:
/// `2 f V - f_t - 2 g + h_x - k h V - h_t`.
pub fn condition_iii(t: f64, x: f64, m: &Multipliers, profile: &DampingProfile) -> f64 {
    let p = &m.params;
    let v = profile.evaluate(x);
    2.0 * p.f(t) * v - p.f_t(t) - 2.0 * p.g(t) + m.h_x(t, x) - p.k * m.h(t, x) * v - m.h_t(x)
}

/// Coefficient of `u_x^2` after the Young split:
/// `2 g - f_t + h_x - h V / k - h_t`.
pub fn condition_iv(t: f64, x: f64, m: &Multipliers, profile: &DampingProfile) -> f64 {
    let p = &m.params;
    let v = profile.evaluate(x);
    2.0 * p.g(t) - p.f_t(t) + m.h_x(t, x) - m.h(t, x) * v / p.k - m.h_t(x)
}

/// Region-wise lower bounds for the two conditions, built from the profile
/// constants (and, on `[0, L1]`, the local value of `V`). Valid for
/// `0 <= x <= R + t`.
pub fn condition_lower_bounds(
    t: f64,
    x: f64,
    m: &Multipliers,
    c: &ProfileConstants,
    profile: &DampingProfile,
    support_radius: f64,
) -> (f64, f64) {
    let p = &m.params;
    let (e1, e2, e3, k) = (p.eps1, p.eps2, p.eps3, p.k);
    let tt = 1.0 + t;
    let reach = 1.0 + support_radius + t;
    if x <= c.l1 {
        let v = profile.evaluate(x);
        let iii = tt * tt * (2.0 * e1 - k * e3 * (1.0 + c.l1) / tt) * v
            + tt * (e3 - 2.0 * e1 - 2.0 * e2 - e3 * (1.0 + c.l1) / tt);
        let iv = tt * (2.0 * e2 - 2.0 * e1 + e3 - e3 / k * (1.0 + c.l1) * c.v_big_m
            - e3 * (1.0 + c.l1) / tt);
        (iii, iv)
    } else if x <= c.l2 {
        let iii = tt
            * tt
            * (2.0 * e1 * c.v_m
                - 2.0 * e1 / tt
                - 2.0 * e2 / tt
                - k * e3 * c.v_big_m * (1.0 + c.l2) / tt
                - e3 * (1.0 + c.l2) / (tt * tt));
        let iv = tt * (2.0 * e2 - 2.0 * e1 - e3 / k * (1.0 + c.l2) * c.v_big_m
            - e3 * (1.0 + c.l2) / tt);
        (iii, iv)
    } else {
        let iii = tt * tt / (1.0 + x)
            * (2.0 * e1 * c.v0
                - 2.0 * e1 * reach / tt
                - 2.0 * e2 * reach / tt
                - k * e3 * (1.0 + c.l2) * c.v1 / tt
                - e3 * (1.0 + c.l2) * reach / (tt * tt));
        let iv = tt * (2.0 * e2 - 2.0 * e1 - e3 / k * c.v1 - e3 * (1.0 + c.l2) / tt);
        (iii, iv)
    }
}

/// Sampling density for [`find_t0`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanResolution {
    pub t_step: f64,
    /// Spacing on `[0, L2 + 1]`; beyond that the spacing grows
    /// geometrically (relative step `tail_ratio`) out to `R + t`.
    pub x_step: f64,
    pub tail_ratio: f64,
}

impl Default for ScanResolution {
    fn default() -> Self {
        Self {
            t_step: 1.0,
            x_step: 0.01,
            tail_ratio: 0.005,
        }
    }
}

fn x_samples(t: f64, l2: f64, support_radius: f64, res: &ScanResolution) -> Vec<f64> {
    let end = support_radius + t;
    let dense_end = (l2 + 1.0).min(end);
    let n = (dense_end / res.x_step).ceil() as usize;
    let mut xs: Vec<f64> = (0..=n).map(|i| (i as f64 * res.x_step).min(dense_end)).collect();
    let mut x = dense_end;
    while x < end {
        x = (x + (res.tail_ratio * (1.0 + x)).max(res.x_step)).min(end);
        xs.push(x);
    }
    xs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T0Search {
    /// Smallest sampled `t` from which both conditions stay positive on
    /// every later sampled `(t', x)`.
    pub t0: Option<f64>,
    /// Minimum of both conditions over `[t0, t_max] x [0, R + t]`.
    pub min_margin: Option<f64>,
    /// Where that minimum sits.
    pub argmin: Option<(f64, f64)>,
    pub t_max: f64,
    pub samples: usize,
}

/// Scans `(t, x)` for the activation time of both conditions.
pub fn find_t0(
    m: &Multipliers,
    profile: &DampingProfile,
    support_radius: f64,
    t_max: f64,
    res: &ScanResolution,
) -> T0Search {
    let nt = (t_max / res.t_step).ceil() as usize;
    let l2 = m.phi.l2;
    let rows: Vec<(f64, f64, f64, usize)> = (0..=nt)
        .into_par_iter()
        .map(|i| {
            let t = (i as f64 * res.t_step).min(t_max);
            let xs = x_samples(t, l2, support_radius, res);
            let mut worst = (f64::INFINITY, 0.0);
            for &x in &xs {
                let v = condition_iii(t, x, m, profile).min(condition_iv(t, x, m, profile));
                if v < worst.0 {
                    worst = (v, x);
                }
            }
            (t, worst.0, worst.1, xs.len())
        })
        .collect();
    let samples = rows.iter().map(|r| r.3).sum();

    let mut t0 = None;
    let mut best: Option<(f64, f64, f64)> = None;
    for &(t, margin, x, _) in rows.iter().rev() {
        if margin <= 0.0 {
            break;
        }
        t0 = Some(t);
        if best.map_or(true, |b| margin < b.0) {
            best = Some((margin, t, x));
        }
    }
    T0Search {
        t0,
        min_margin: best.map(|b| b.0),
        argmin: best.map(|b| (b.1, b.2)),
        t_max,
        samples,
    }
}

/// One row of the condition dump: `(t, x, iii, iv)`.
pub fn condition_grid(
    m: &Multipliers,
    profile: &DampingProfile,
    support_radius: f64,
    t_max: f64,
    res: &ScanResolution,
) -> Vec<(f64, f64, f64, f64)> {
    let nt = (t_max / res.t_step).ceil() as usize;
    (0..=nt)
        .flat_map(|i| {
            let t = (i as f64 * res.t_step).min(t_max);
            x_samples(t, m.phi.l2, support_radius, res)
                .into_iter()
                .map(move |x| {
                    (
                        t,
                        x,
                        condition_iii(t, x, m, profile),
                        condition_iv(t, x, m, profile),
                    )
                })
        })
        .collect()
}

/// `inf_x (f(t) - 2 h(t, x)) / f(t) = 1 - 2 eps3 (1 + L2) / (eps1 (1 + t))`.
pub fn coercivity_ratio(p: &MultiplierParams, l2: f64, t: f64) -> f64 {
    1.0 - 2.0 * p.eps3 * (1.0 + l2) / (p.eps1 * (1.0 + t))
}

/// First time at which the coercivity ratio reaches 1/2.
pub fn coercivity_half_time(p: &MultiplierParams, l2: f64) -> f64 {
    4.0 * p.eps3 * (1.0 + l2) / p.eps1 - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::derive_constants;
    use proptest::prelude::*;

    fn headline_setup() -> (DampingProfile, ProfileConstants, Multipliers) {
        let p = DampingProfile::dead_zone(6.0, 1.0, 2.0).unwrap();
        let c = derive_constants(&p, 1e-3).unwrap();
        let params = default_params(c.v0, c.v_star).unwrap();
        (p, c, Multipliers::new(params, PhiSpec::from_constants(&c).unwrap()))
    }

    #[test]
    fn phi_pieces() {
        let phi = PhiSpec::new(1.0, 3.0).unwrap();
        assert_eq!(phi.value(0.5), 1.5);
        assert_eq!(phi.value(10.0), 4.0);
        let mid = phi.value(2.0);
        assert!(mid > 2.0 && mid < 4.0);
        assert!((mid - 3.3125).abs() < 1e-12);
        assert!(phi.derivative(2.0) >= 0.0);
        // value and slope continuity at both ends
        let e = 1e-9;
        assert!((phi.value(1.0 - e) - phi.value(1.0 + e)).abs() < 1e-8);
        assert!((phi.derivative(1.0 - e) - phi.derivative(1.0 + e)).abs() < 1e-7);
        assert!((phi.value(3.0 - e) - phi.value(3.0)).abs() < 1e-8);
        assert!(phi.derivative(3.0 - e).abs() < 1e-7);
    }

    #[test]
    fn phi_derivative_matches_finite_differences() {
        let phi = PhiSpec::new(0.7, 2.9).unwrap();
        let h = 1e-6;
        for i in 1..200 {
            let x = 0.7 + 2.2 * i as f64 / 200.0;
            let fd = (phi.value(x + h) - phi.value(x - h)) / (2.0 * h);
            assert!((fd - phi.derivative(x)).abs() < 1e-6);
        }
    }

    #[test]
    fn degenerate_phi_is_constant() {
        let phi = PhiSpec::new(0.0, 0.0).unwrap();
        assert_eq!(phi.value(0.0), 1.0);
        assert_eq!(phi.value(5.0), 1.0);
        assert_eq!(phi.derivative(0.0), 0.0);
        assert!(PhiSpec::new(2.0, 1.0).is_err());
    }

    #[test]
    fn default_params_values() {
        let p = default_params(6.0, 6.0).unwrap();
        assert_eq!((p.eps1, p.eps2, p.eps3, p.k), (1.0, 3.0, 12.0, 36.0));
        let p = default_params(4.0, 10.0).unwrap();
        assert_eq!((p.eps1, p.eps2, p.eps3, p.k), (1.0, 2.0, 8.0, 80.0));
        assert_eq!(default_params(2.0, 1.0), Err(MultiplierError::SubcriticalV0(2.0)));
        assert!(threshold_warning(2.05).is_some());
        assert!(threshold_warning(6.0).is_none());
    }

    fn constants(v0: f64, v_star: f64) -> ProfileConstants {
        ProfileConstants {
            v0,
            v1: v0,
            l1: 0.0,
            l2: 0.0,
            v_m: v0 / 2.0,
            v_big_m: v0,
            v_star,
        }
    }

    #[test]
    fn feasibility_for_defaults() {
        let r = check_feasibility(&default_params(6.0, 6.0).unwrap(), &constants(6.0, 6.0));
        assert_eq!(r.margin("ut-inner"), Some(4.0));
        assert_eq!(r.margin("ut-tail"), Some(4.0));
        assert_eq!(r.margin("ux-unified"), Some(2.0));
        assert!(r.pass);
    }

    #[test]
    fn feasibility_fails_for_uniform_weights() {
        let p = MultiplierParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let r = check_feasibility(&p, &constants(6.0, 6.0));
        assert_eq!(r.margin("ut-inner"), Some(-3.0));
        assert!(!r.pass);
    }

    proptest! {
        #[test]
        fn default_margins_are_closed_form(v0 in 2.0f64..100.0, v_star in 0.1f64..100.0) {
            prop_assume!(v0 > 2.0);
            let r = check_feasibility(&default_params(v0, v_star).unwrap(), &constants(v0, v_star));
            let want = [v0 - 2.0, v0 - 2.0, 0.5 * (v0 - 2.0)];
            for (label, w) in ["ut-inner", "ut-tail", "ux-unified"].iter().zip(want) {
                let got = r.margin(label).unwrap();
                prop_assert!(((got - w) / w).abs() < 1e-12, "{label}: {got} vs {w}");
            }
            prop_assert!(r.pass);
        }

        #[test]
        fn phi_is_monotone(l1 in 0.0f64..10.0, w in 1e-3f64..10.0, s in 0.0f64..1.0) {
            let phi = PhiSpec::new(l1, l1 + w).unwrap();
            prop_assert!(phi.derivative(l1 + s * w) >= 0.0);
            prop_assert!(phi.value(l1 + s * w) <= 1.0 + l1 + w + 1e-12);
        }
    }

    #[test]
    fn condition_iii_in_dead_zone() {
        let (p, _, m) = headline_setup();
        let t = 500.0;
        let x = 0.5;
        let want = (1.0 + t) * (12.0 - 2.0 - 6.0) - 12.0 * (1.0 + x);
        assert!((condition_iii(t, x, &m, &p) - want).abs() < 1e-9);
        assert!(condition_iii(t, x, &m, &p) > 0.0);
    }

    #[test]
    fn condition_iv_tail_slope() {
        let (p, c, m) = headline_setup();
        let e = &m.params;
        let limit = 2.0 * e.eps2 - 2.0 * e.eps1 - e.eps3 / e.k * c.v1;
        assert!(limit > 0.0);
        let t = 1e7;
        for x in [2.0, 5.0, 100.0] {
            let slope = condition_iv(t, x, &m, &p) / (1.0 + t);
            assert!(slope >= limit - 1e-5, "x={x} slope={slope}");
        }
    }

    #[test]
    fn infeasible_params_never_activate() {
        let (p, c, _) = headline_setup();
        let params = MultiplierParams::new(1.0, 3.0, 5.0, 36.0).unwrap();
        let m = Multipliers::new(params, PhiSpec::from_constants(&c).unwrap());
        let s = find_t0(&m, &p, 2.0, 2000.0, &ScanResolution { t_step: 10.0, ..Default::default() });
        assert_eq!(s.t0, None);
    }

    #[test]
    fn pure_critical_with_l2_zero_activates() {
        let p = DampingProfile::pure_critical(6.0).unwrap();
        let c = derive_constants(&p, 1e-3).unwrap();
        let m = Multipliers::new(
            default_params(c.v0, c.v_star).unwrap(),
            PhiSpec::from_constants(&c).unwrap(),
        );
        let s = find_t0(&m, &p, 2.0, 5000.0, &ScanResolution { t_step: 5.0, ..Default::default() });
        assert!(s.t0.is_some());
        assert!(s.min_margin.unwrap() > 0.0);
    }

    #[test]
    fn lower_bounds_never_exceed_exact_values() {
        let (p, c, m) = headline_setup();
        let r = 2.0;
        for &t in &[0.0, 10.0, 100.0, 1000.0, 3000.0, 10_000.0] {
            for x in x_samples(t, c.l2, r, &ScanResolution::default()) {
                let (lb3, lb4) = condition_lower_bounds(t, x, &m, &c, &p, r);
                let (e3, e4) = (condition_iii(t, x, &m, &p), condition_iv(t, x, &m, &p));
                let tol = 1e-9 * (1.0 + t).powi(2);
                assert!(lb3 <= e3 + tol, "iii t={t} x={x}: {lb3} > {e3}");
                assert!(lb4 <= e4 + tol, "iv t={t} x={x}: {lb4} > {e4}");
            }
        }
    }

    #[test]
    fn weight_bounds_hold_pointwise() {
        let (p, _, m) = headline_setup();
        let e = &m.params;
        for i in 0..1000 {
            let x = i as f64 * 0.05;
            let v = p.evaluate(x);
            for t in [0.0, 1.0, 100.0] {
                assert!(e.g_t() - e.g(t) * v <= e.c1());
                assert!(e.g_t() * v - e.g_tt() <= e.c2() * v + 1e-15);
            }
        }
    }

    #[test]
    fn coercivity_ratio_reaches_half() {
        let e = default_params(6.0, 6.0).unwrap();
        assert!((coercivity_ratio(&e, 2.0, 1e12) - 1.0).abs() < 1e-9);
        let th = coercivity_half_time(&e, 2.0);
        assert!(coercivity_ratio(&e, 2.0, th) >= 0.5 - 1e-15);
        assert!(coercivity_ratio(&e, 2.0, 0.0) < 0.0);
    }
}
