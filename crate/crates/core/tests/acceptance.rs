//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs every catalog scenario once, then evaluates the criteria against the
//! shared results. Failing criteria are reported, not fatal; set
//! `ACCEPTANCE_STRICT=1` to turn any FAIL into a nonzero exit.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use dampwave::functionals::WindowProbe;
use dampwave::multipliers::{
    check_feasibility, default_params, find_t0, Multipliers, PhiSpec, ScanResolution,
};
use dampwave::profiles::{derive_constants, ProfileConstants};
use dampwave::scenario::{convergence_study, run_scenario, Scenario, ScenarioRun};
use dampwave::solver::{run, DomainMode, Observer, Snapshot};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const CATALOG: &[&str] = &[
    "theorem-1-1",
    "wholeline-remark-1-1",
    "halfline-subcritical-v0-1",
    "halfline-subcritical-v0-1.5",
    "constant-damping-reference",
    "undamped-conservation",
    "l2-zero",
    "smooth-bump-convergence",
];

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.toml"))
}

fn load(name: &str) -> Scenario {
    Scenario::from_path(scenario_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

struct Verdict {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(name: &'static str, pass: bool, detail: String) -> Verdict {
    Verdict { name, pass, detail }
}

type Runs = BTreeMap<&'static str, (ScenarioRun, f64)>;

fn run_catalog() -> Runs {
    CATALOG
        .par_iter()
        .map(|&name| {
            let start = Instant::now();
            let r = run_scenario(&load(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
            (name, (r, start.elapsed().as_secs_f64()))
        })
        .collect()
}

fn headline_decay(runs: &Runs) -> Verdict {
    let (r, secs) = &runs["theorem-1-1"];
    let fit = r.summary.rate_fit.expect("fit window configured");
    let b = r.summary.weighted_energy.expect("fit window configured");
    let pass = fit.alpha >= 1.7 && b.sup_ratio <= 2.0;
    verdict(
        "headline-decay",
        pass,
        format!(
            "alpha = {:.4} (>= 1.7), sup E(1+t)^2 / value at t=500 = {:.4} (<= 2), run {:.1}s",
            fit.alpha, b.sup_ratio, secs
        ),
    )
}

fn whole_line(runs: &Runs) -> Verdict {
    let (r, _) = &runs["wholeline-remark-1-1"];
    let fit = r.summary.rate_fit.expect("fit window configured");
    let b = r.summary.weighted_energy.expect("fit window configured");
    let pass = (0.8..=1.4).contains(&fit.alpha) && b.sup_ratio <= 2.0;
    verdict(
        "whole-line-decay",
        pass,
        format!(
            "alpha = {:.4} (in [0.8, 1.4]), sup E(1+t) / value at t=500 = {:.4} (<= 2)",
            fit.alpha, b.sup_ratio
        ),
    )
}

fn subcritical_ordering(runs: &Runs) -> Verdict {
    let alpha = |n: &str| runs[n].0.summary.rate_fit.expect("fit window configured").alpha;
    let (a1, a15, a6) = (
        alpha("halfline-subcritical-v0-1"),
        alpha("halfline-subcritical-v0-1.5"),
        alpha("theorem-1-1"),
    );
    let pass = a15 - a1 >= 0.15 && a6 - a15 >= 0.15;
    verdict(
        "subcritical-ordering",
        pass,
        format!("alpha(V0=1) = {a1:.4}, alpha(V0=1.5) = {a15:.4}, alpha(V0=6) = {a6:.4}; gaps >= 0.15"),
    )
}

fn feasibility_suite() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut failures = 0;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let v0: f64 = 2.0 + (1.0 - rng.random::<f64>()) * 98.0;
        let v_star: f64 = 0.1 + (1.0 - rng.random::<f64>()) * 99.9;
        let params = default_params(v0, v_star).expect("V0 > 2");
        let c = ProfileConstants {
            v0,
            v1: v0,
            l1: 0.0,
            l2: 0.0,
            v_m: 1.0,
            v_big_m: v_star,
            v_star,
        };
        let rep = check_feasibility(&params, &c);
        let expected = [
            ("ut-inner", v0 - 2.0),
            ("ut-tail", v0 - 2.0),
            ("ux-unified", 0.5 * (v0 - 2.0)),
        ];
        let mut ok = rep.pass;
        for (label, want) in expected {
            let got = rep.margin(label).unwrap();
            let rel = ((got - want) / want).abs();
            worst = worst.max(rel);
            ok &= rel <= 1e-12;
        }
        failures += usize::from(!ok);
    }
    verdict(
        "feasibility-suite",
        failures == 0,
        format!("{} / 1000 draws pass, worst relative margin error {worst:.2e} (<= 1e-12)", 1000 - failures),
    )
}

fn activation_time() -> Verdict {
    let s = load("theorem-1-1");
    let profile = s.damping_profile().unwrap();
    let c = derive_constants(&profile, 1e-3).unwrap();
    let m = Multipliers::new(
        default_params(c.v0, c.v_star).unwrap(),
        PhiSpec::from_constants(&c).unwrap(),
    );
    let r = find_t0(&m, &profile, s.support_radius, 1e4, &ScanResolution::default());
    let pass = matches!((r.t0, r.min_margin), (Some(t), Some(mm)) if t <= 1e3 && mm > 0.0);
    verdict(
        "activation-time",
        pass,
        format!(
            "t0 = {:?} (<= 1000), min condition margin on [t0, 1e4] x [0, R+t] = {:?} at {:?}",
            r.t0, r.min_margin, r.argmin
        ),
    )
}

fn identity_residual() -> Verdict {
    let s = load("theorem-1-1");
    let profile = s.damping_profile().unwrap();
    let c = derive_constants(&profile, 1e-3).unwrap();
    let m = Multipliers::new(
        default_params(c.v0, c.v_star).unwrap(),
        PhiSpec::from_constants(&c).unwrap(),
    );
    let target = 100.0;
    let residual = |dx: f64| {
        let cfg = dampwave::SolverConfig {
            dx,
            t_final: target + 1.0,
            ..s.solver_config()
        };
        let mut probe = WindowProbe::new(target, Some(m));
        run(&s.initial_data(), &profile, &cfg, &mut [&mut probe]).unwrap();
        probe.identity_residual().unwrap().abs()
    };
    let (coarse, fine) = (residual(s.dx), residual(0.5 * s.dx));
    let ratio = coarse / fine;
    verdict(
        "identity-residual",
        (3.0..=5.0).contains(&ratio),
        format!(
            "|dcalE/dt + calF| at t=100: {coarse:.3e} (dx={}) -> {fine:.3e} (dx={}), ratio {ratio:.3} (in [3, 5])",
            s.dx,
            0.5 * s.dx
        ),
    )
}

fn hardy_suite(runs: &Runs) -> Verdict {
    let mut worst = (f64::NEG_INFINITY, "", 0.0);
    let mut pass = true;
    for (name, (r, _)) in runs {
        if r.summary.domain_mode != DomainMode::HalfLine {
            continue;
        }
        let h = r.summary.max_hardy_ratio.unwrap();
        let limit = 1.0 + 10.0 * r.summary.dx;
        pass &= h <= limit;
        if h - limit > worst.0 - worst.2 {
            worst = (h, name, limit);
        }
    }
    verdict(
        "hardy-suite",
        pass,
        format!("largest ratio {:.4} in {} (limit {})", worst.0, worst.1, worst.2),
    )
}

fn budget_suite(runs: &Runs) -> Verdict {
    let mut bad = Vec::new();
    let mut margins = Vec::new();
    for (name, (r, _)) in runs {
        let b = &r.summary.budget;
        margins.push(format!("{name} {:.2e}", b.min_relative_margin));
        if !b.pass {
            bad.push(*name);
        }
    }
    verdict(
        "data-budget",
        bad.is_empty(),
        format!(
            "violations in [{}]; min relative margins: {}",
            bad.join(", "),
            margins.join(", ")
        ),
    )
}

/// Compatible energy between levels n and n+1, which the scheme conserves
/// exactly when `V = 0`.
#[derive(Default)]
struct StaggeredEnergy {
    first: Option<f64>,
    last: f64,
}

impl Observer for StaggeredEnergy {
    fn observe(&mut self, s: &Snapshot<'_>) {
        let (dx, dt) = (s.grid.dx, s.dt);
        let (a, b) = (s.curr, s.next);
        let mut e = 0.0;
        for j in 0..s.grid.len - 1 {
            let v = (b[j] - a[j]) / dt;
            e += v * v + (b[j + 1] - b[j]) * (a[j + 1] - a[j]) / (dx * dx);
        }
        let e = 0.5 * dx * e;
        self.first.get_or_insert(e);
        self.last = e;
    }
}

fn conservation(runs: &Runs) -> Verdict {
    let (r, _) = &runs["undamped-conservation"];
    let drift = (r.summary.energy_ratio - 1.0).abs();
    let exact = Scenario {
        cfl: 1.0,
        ..load("undamped-conservation")
    };
    let e = run_scenario(&exact).unwrap();
    let exact_drift = (e.summary.energy_ratio - 1.0).abs();
    let mut compat = StaggeredEnergy::default();
    run(
        &exact.initial_data(),
        &exact.damping_profile().unwrap(),
        &exact.solver_config(),
        &mut [&mut compat],
    )
    .unwrap();
    let compat_drift = (compat.last / compat.first.unwrap() - 1.0).abs();
    verdict(
        "undamped-conservation",
        drift <= 1e-3 && exact_drift <= 1e-10,
        format!(
            "|E(T)/E(0) - 1| = {drift:.3e} at cfl 0.9 (<= 1e-3), {exact_drift:.3e} at cfl 1 (<= 1e-10); \
             compatible staggered energy drift at cfl 1 = {compat_drift:.3e}"
        ),
    )
}

fn convergence() -> Verdict {
    let t = convergence_study(&load("smooth-bump-convergence"), 4).unwrap();
    let orders: Vec<String> = t
        .rows
        .iter()
        .filter_map(|r| r.order.map(|o| format!("{o:.3}")))
        .collect();
    let o = t.finest_order().unwrap();
    verdict(
        "convergence-order",
        (o - 2.0).abs() <= 0.2,
        format!("observed orders [{}], finest {o:.3} (2.0 +/- 0.2)", orders.join(", ")),
    )
}

fn quadratic_bound(runs: &Runs) -> Verdict {
    let (r, _) = &runs["theorem-1-1"];
    let m = r.summary.multipliers.as_ref().expect("headline run attaches multipliers");
    match (&m.quadratic_bound, &m.quadratic_constant) {
        (Some(q), Some(k)) => verdict(
            "quadratic-bound",
            q.pass && q.samples_checked > 0,
            format!(
                "C_est = {:.4e}, {} samples from t = {}, min margin {:.3e}",
                k.c_est, q.samples_checked, q.t_start, q.min_margin
            ),
        ),
        _ => verdict(
            "quadratic-bound",
            false,
            format!("no activation time inside the run (t0 = {:?})", m.t0.t0),
        ),
    }
}

fn main() {
    let start = Instant::now();
    let runs = run_catalog();
    let verdicts = vec![
        headline_decay(&runs),
        whole_line(&runs),
        subcritical_ordering(&runs),
        feasibility_suite(),
        activation_time(),
        identity_residual(),
        hardy_suite(&runs),
        budget_suite(&runs),
        conservation(&runs),
        convergence(),
        quadratic_bound(&runs),
    ];
    println!();
    println!("acceptance ({:.0}s)", start.elapsed().as_secs_f64());
    for v in &verdicts {
        println!("{} {:<24} {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!("{} passed, {failed} failed", verdicts.len() - failed);
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
