//! Damping coefficient families and the structural constants the multiplier
//! machinery needs.
//!
//! Every profile is a continuous, nonnegative function on `[0, ∞)`. The
//! families that are meant to sit under the critical-decay hypothesis carry a
//! declared tail `V0 / (1 + x) <= V(x) <= V1 / (1 + x)` for `x >= L2`, which
//! [`validate_assumption_a`] checks by sampling. Whole-line runs evaluate the
//! profile at `|x|`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative slack used when comparing sampled values against the declared
/// tail bounds. Sampling cannot prove an inequality, it can only fail to
/// refute it, so the comparison must not be sensitive to the last ulp.
const SAMPLE_RTOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("invalid profile parameter: {0}")]
    InvalidParameter(String),
    #[error("sample resolution must be positive, got {0}")]
    BadResolution(f64),
    #[error("x_max = {x_max} must exceed L2 = {l2}")]
    BadRange { x_max: f64, l2: f64 },
    #[error("profile does not satisfy the structural tail hypothesis: {0}")]
    AssumptionFailed(String),
    #[error("V(L2) = 0 at L2 = {0}; the positivity interval cannot be built")]
    VanishesAtL2(f64),
}

/// Registered damping families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DampingProfile {
    /// `V = 0` on `[0, dead_zone_end]`, a cubic Hermite ramp with zero end
    /// slopes up to `tail / (1 + l2)` on `[dead_zone_end, l2]`, and
    /// `tail / (1 + x)` beyond `l2`.
    CriticalTailWithDeadZone {
        tail: f64,
        dead_zone_end: f64,
        l2: f64,
    },
    /// `tail / (1 + x)` everywhere; `l2` only records where the tail bound
    /// is claimed to start (usually 0).
    PureCritical { tail: f64, l2: f64 },
    /// `V = value` everywhere. Outside the critical-tail class for any
    /// `value > 0`; kept as a comparison reference.
    Constant { value: f64 },
    Zero,
}

impl DampingProfile {
    pub fn dead_zone(tail: f64, dead_zone_end: f64, l2: f64) -> Result<Self, ProfileError> {
        if !(tail.is_finite() && tail > 0.0) {
            return Err(ProfileError::InvalidParameter(format!(
                "tail amplitude must be positive, got {tail}"
            )));
        }
        if !(dead_zone_end >= 0.0 && dead_zone_end < l2 && l2.is_finite()) {
            return Err(ProfileError::InvalidParameter(format!(
                "need 0 <= dead_zone_end < L2, got dead_zone_end = {dead_zone_end}, L2 = {l2}"
            )));
        }
        Ok(Self::CriticalTailWithDeadZone {
            tail,
            dead_zone_end,
            l2,
        })
    }

    pub fn pure_critical(tail: f64) -> Result<Self, ProfileError> {
        Self::pure_critical_from(tail, 0.0)
    }

    pub fn pure_critical_from(tail: f64, l2: f64) -> Result<Self, ProfileError> {
        if !(tail.is_finite() && tail > 0.0) {
            return Err(ProfileError::InvalidParameter(format!(
                "tail amplitude must be positive, got {tail}"
            )));
        }
        if !(l2.is_finite() && l2 >= 0.0) {
            return Err(ProfileError::InvalidParameter(format!(
                "L2 must be nonnegative, got {l2}"
            )));
        }
        Ok(Self::PureCritical { tail, l2 })
    }

    pub fn constant(value: f64) -> Result<Self, ProfileError> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(ProfileError::InvalidParameter(format!(
                "constant damping must be nonnegative, got {value}"
            )));
        }
        Ok(Self::Constant { value })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::CriticalTailWithDeadZone { .. } => "critical-tail-with-dead-zone",
            Self::PureCritical { .. } => "pure-critical",
            Self::Constant { .. } => "constant",
            Self::Zero => "zero",
        }
    }

    /// `V(x)`. Negative arguments are reflected, which is how the whole-line
    /// mode uses the profile.
    pub fn evaluate(&self, x: f64) -> f64 {
        let x = x.abs();
        match *self {
            Self::CriticalTailWithDeadZone {
                tail,
                dead_zone_end,
                l2,
            } => {
                if x <= dead_zone_end {
                    0.0
                } else if x < l2 {
                    let s = (x - dead_zone_end) / (l2 - dead_zone_end);
                    tail / (1.0 + l2) * s * s * (3.0 - 2.0 * s)
                } else {
                    tail / (1.0 + x)
                }
            }
            Self::PureCritical { tail, .. } => tail / (1.0 + x),
            Self::Constant { value } => value,
            Self::Zero => 0.0,
        }
    }

    /// The `(V0, V1, L2)` triple the profile is checked against.
    ///
    /// The critical families declare their own tail. A constant profile is
    /// compared against the tail `c / (1 + x)` anchored at the origin, which
    /// it violates for every `x > 0`; the zero profile declares `V0 = V1 = 0`.
    pub fn declared_tail(&self) -> TailBounds {
        match *self {
            Self::CriticalTailWithDeadZone { tail, l2, .. } | Self::PureCritical { tail, l2 } => {
                TailBounds {
                    v0: tail,
                    v1: tail,
                    l2,
                }
            }
            Self::Constant { value } => TailBounds {
                v0: value,
                v1: value,
                l2: 0.0,
            },
            Self::Zero => TailBounds {
                v0: 0.0,
                v1: 0.0,
                l2: 0.0,
            },
        }
    }

    /// Fills `out[j]` with `V(x0 + j * dx)`.
    pub fn sample_into(&self, x0: f64, dx: f64, out: &mut [f64]) {
        for (j, v) in out.iter_mut().enumerate() {
            *v = self.evaluate(x0 + j as f64 * dx);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBounds {
    pub v0: f64,
    pub v1: f64,
    pub l2: f64,
}

/// Outcome of one sampled clause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseResult {
    pub name: String,
    pub pass: bool,
    /// Sample point where the clause is closest to failing (or fails worst).
    pub worst_x: f64,
    /// Signed margin at `worst_x`; negative means violated.
    pub worst_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub kind: String,
    pub tail: TailBounds,
    pub resolution: f64,
    pub x_max: f64,
    pub clauses: Vec<ClauseResult>,
    /// `V0 > 2`, reported apart from the structural clauses: profiles with
    /// `V0 <= 2` are legal but sit outside the fast-decay regime.
    pub v0_gt_2: ClauseResult,
}

impl ValidationReport {
    pub fn structural_pass(&self) -> bool {
        self.clauses.iter().all(|c| c.pass)
    }

    pub fn fast_decay_hypothesis(&self) -> bool {
        self.structural_pass() && self.v0_gt_2.pass
    }
}

fn samples(lo: f64, hi: f64, h: f64) -> impl Iterator<Item = f64> {
    let n = ((hi - lo) / h).ceil().max(0.0) as usize;
    (0..=n).map(move |i| (lo + i as f64 * h).min(hi))
}

fn worst_clause<I>(name: &str, points: I) -> ClauseResult
where
    I: Iterator<Item = (f64, f64)>,
{
    let mut worst_x = f64::NAN;
    let mut worst_margin = f64::INFINITY;
    for (x, margin) in points {
        if margin < worst_margin {
            worst_margin = margin;
            worst_x = x;
        }
    }
    ClauseResult {
        name: name.to_string(),
        pass: worst_margin >= 0.0,
        worst_x,
        worst_margin,
    }
}

fn max_jump(profile: &DampingProfile, x_max: f64, h: f64) -> (f64, f64) {
    let mut worst = (0.0, 0.0);
    let mut prev = profile.evaluate(0.0);
    for x in samples(h, x_max, h) {
        let v = profile.evaluate(x);
        let jump = (v - prev).abs();
        if jump > worst.1 {
            worst = (x, jump);
        }
        prev = v;
    }
    worst
}

/// Samples the hypothesis clauses on `[0, x_max]` at the given resolution.
///
/// Continuity is tested by comparing the largest neighbour jump at `h` and
/// `h / 2`: a genuine discontinuity keeps the jump size, a continuous profile
/// shrinks it.
pub fn validate_assumption_a(
    profile: &DampingProfile,
    resolution: f64,
    x_max: f64,
) -> Result<ValidationReport, ProfileError> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(ProfileError::BadResolution(resolution));
    }
    let tail = profile.declared_tail();
    if !(x_max > tail.l2) {
        return Err(ProfileError::BadRange { x_max, l2: tail.l2 });
    }

    let scale = tail.v1.abs().max(1.0);
    let tol = SAMPLE_RTOL * scale;

    let nonneg = worst_clause(
        "nonnegative",
        samples(0.0, x_max, resolution).map(|x| (x, profile.evaluate(x))),
    );
    let bounded = worst_clause(
        "bounded",
        samples(0.0, x_max, resolution).map(|x| {
            let v = profile.evaluate(x);
            (x, if v.is_finite() { 0.0 } else { -1.0 })
        }),
    );
    let (jx, coarse) = max_jump(profile, x_max, resolution);
    let (_, fine) = max_jump(profile, x_max, resolution / 2.0);
    let continuous = ClauseResult {
        name: "continuous".to_string(),
        pass: coarse <= 1e-12 * scale || fine <= 0.75 * coarse,
        worst_x: jx,
        worst_margin: 0.75 * coarse - fine,
    };
    let mut lower = worst_clause(
        "tail-lower",
        samples(tail.l2, x_max, resolution)
            .map(|x| (x, (1.0 + x) * profile.evaluate(x) - tail.v0)),
    );
    lower.pass = lower.worst_margin >= -tol;
    let mut upper = worst_clause(
        "tail-upper",
        samples(tail.l2, x_max, resolution)
            .map(|x| (x, tail.v1 - (1.0 + x) * profile.evaluate(x))),
    );
    upper.pass = upper.worst_margin >= -tol;
    let ordered = ClauseResult {
        name: "v1-ge-v0".to_string(),
        pass: tail.v1 >= tail.v0,
        worst_x: tail.l2,
        worst_margin: tail.v1 - tail.v0,
    };
    let v0_gt_2 = ClauseResult {
        name: "v0-gt-2".to_string(),
        pass: tail.v0 > 2.0,
        worst_x: tail.l2,
        worst_margin: tail.v0 - 2.0,
    };

    Ok(ValidationReport {
        kind: profile.kind_name().to_string(),
        tail,
        resolution,
        x_max,
        clauses: vec![nonneg, bounded, continuous, lower, upper, ordered],
        v0_gt_2,
    })
}

/// Constants of the positivity interval `[L1, L2]` and the sup bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileConstants {
    pub v0: f64,
    pub v1: f64,
    pub l1: f64,
    pub l2: f64,
    /// Positive lower bound of `V` on `[L1, L2]`.
    pub v_m: f64,
    /// Sup of `V` on `[0, L2]`.
    pub v_big_m: f64,
    /// `max{(1 + L2) V_M, V1}`.
    pub v_star: f64,
}

/// Builds `L1`, `V_m`, `V_M` and `V*` by scanning the sampled profile.
///
/// `L1` is found by walking left from `L2` while `V` stays at or above half
/// its value at `L2`; `V_m` is half the sampled minimum over `[L1, L2]`.
/// The tail clauses are checked first (out to `x = 10 (1 + L2) + L2`) and a
/// profile that fails them is refused.
pub fn derive_constants(
    profile: &DampingProfile,
    resolution: f64,
) -> Result<ProfileConstants, ProfileError> {
    let tail = profile.declared_tail();
    let x_max = tail.l2 + 10.0 * (1.0 + tail.l2);
    let report = validate_assumption_a(profile, resolution, x_max)?;
    if let Some(bad) = report.clauses.iter().find(|c| !c.pass) {
        return Err(ProfileError::AssumptionFailed(format!(
            "clause {} fails at x = {} (margin {:e})",
            bad.name, bad.worst_x, bad.worst_margin
        )));
    }

    let l2 = tail.l2;
    let v_l2 = profile.evaluate(l2);
    if v_l2 <= 0.0 {
        return Err(ProfileError::VanishesAtL2(l2));
    }

    let threshold = 0.5 * v_l2;
    let mut l1 = l2;
    let mut min_v = v_l2;
    let mut i = 1usize;
    loop {
        let x = l2 - i as f64 * resolution;
        if x < 0.0 {
            // the scan ran off the origin; close it at x = 0 if V(0) qualifies
            let v0 = profile.evaluate(0.0);
            if l1 > 0.0 && v0 >= threshold {
                l1 = 0.0;
                min_v = min_v.min(v0);
            }
            break;
        }
        let v = profile.evaluate(x);
        if v < threshold {
            break;
        }
        l1 = x;
        min_v = min_v.min(v);
        i += 1;
    }

    let v_big_m = samples(0.0, l2, resolution)
        .map(|x| profile.evaluate(x))
        .fold(v_l2, f64::max);

    Ok(ProfileConstants {
        v0: tail.v0,
        v1: tail.v1,
        l1,
        l2,
        v_m: 0.5 * min_v,
        v_big_m,
        v_star: ((1.0 + l2) * v_big_m).max(tail.v1),
    })
}
