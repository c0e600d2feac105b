//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p coeffid-core --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_rational::Ratio;

use coeffid_core::counterexamples::{inhomogeneous_pair, volterra_pair};
use coeffid_core::forward::{self, ForwardSolution};
use coeffid_core::gmt::{coarea_check, good_levels, level_budget, level_perimeter};
use coeffid_core::grid::{CoefficientBounds, GridFunction1D, Interval, LpNorm};
use coeffid_core::inverse::recover;
use coeffid_core::pw2d::{
    fem_solve, pw_bound_sweep, recover_pw, verify_pw_bound, NodalField, Partition2D,
    PwConstCoefficient,
};
use coeffid_core::random::{piecewise_linear_coefficient, rng, smooth_coefficient};
use coeffid_core::stability::{
    dyadic_build, dyadic_rate, holder_exponent, holder_exponent_exact, holder_sweep, DyadicFamily,
};
use coeffid_core::Source;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let mut o = f();
    let elapsed = t.elapsed();
    o.detail = format!("{} [{:.2}s", o.detail, elapsed.as_secs_f64());
    if let Some(limit) = limit {
        o.detail
            .push_str(&format!(" / limit {:.0}s", limit.as_secs_f64()));
        o.pass &= elapsed <= limit;
    }
    o.detail.push(']');
    o
}

/// Worst relative flux residual seen over every forward solve in the suite.
#[derive(Default)]
struct FluxLog {
    worst: f64,
    solves: usize,
}

impl FluxLog {
    fn record(&mut self, sol: &ForwardSolution, a: &GridFunction1D) {
        self.worst = self.worst.max(sol.relative_flux_residual(a));
        self.solves += 1;
    }
}

/// `max constant_needed` of the seeded 100-pair sweep, pinned on first run.
const BASELINE_HOLDER_CONSTANT: f64 = 1.216048576703;

fn roundtrip(flux: &mut FluxLog) -> Outcome {
    let bounds = CoefficientBounds::new(0.5, 2.0).unwrap();
    let n = 4096;
    let iv = Interval::unit();
    let f = GridFunction1D::from_fn(iv, n, |x| 1.0 - 2.0 * x).unwrap();
    let mut r = rng(2024);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let a = smooth_coefficient(&mut r, iv, n, 4, 0.5, 2.0).unwrap();
        let sol = forward::solve(&a, &f, &bounds).unwrap();
        flux.record(&sol, &a);
        let rec = recover(&sol.du, &Source::Density(f.clone()), &bounds, None).unwrap();
        worst = worst.max(rec.l1_error_unmasked(&a).unwrap());
    }
    outcome(
        worst < 1e-3,
        format!("max L1 error over 20 coefficients = {worst:.3e} (< 1e-3)"),
    )
}

fn flux_identity(flux: &mut FluxLog) -> Outcome {
    let bounds = CoefficientBounds::new(0.5, 2.0).unwrap();
    let iv = Interval::unit();
    let mut r = rng(99);
    for n in [64, 1000, 4096, 1 << 15] {
        let f = GridFunction1D::from_fn(iv, n, |x| (7.0 * x).cos() - 0.3).unwrap();
        for _ in 0..5 {
            let a = piecewise_linear_coefficient(&mut r, iv, n, 8, &bounds).unwrap();
            let sol = forward::solve(&a, &f, &bounds).unwrap();
            flux.record(&sol, &a);
        }
    }
    // dyadic solves carry their own residual
    let fam = DyadicFamily::new(2.0, 0.0, 10).unwrap();
    for j in [4, 7, 10] {
        let b = dyadic_build(&fam, j, 1 << 16).unwrap();
        flux.record(&b.u_j, &b.a_j);
    }
    outcome(
        flux.worst < 1e-10,
        format!(
            "max relative |a u' + F - C_a| over {} solves = {:.3e} (< 1e-10)",
            flux.solves, flux.worst
        ),
    )
}

fn holder() -> Outcome {
    let q = |n: i64, d: i64| Ratio::new(n, d);
    let one = q(1, 1);
    let exact_ok = holder_exponent_exact(q(2, 1), one, one) == q(2, 9)
        && holder_exponent_exact(one, one, one) == q(1, 4)
        && holder_exponent(2.0, 1.0, 1.0) == 2.0 / 9.0
        && holder_exponent(1.0, 1.0, 1.0) == 0.25;
    let f = GridFunction1D::constant(Interval::unit(), 2048, 1.0).unwrap();
    let bounds = CoefficientBounds::new(0.5, 2.0).unwrap();
    let rep = holder_sweep(&f, 2.0, 100, 17, &bounds).unwrap();
    let c = rep.metrics["max_constant_needed"];
    let baseline_ok = (c - BASELINE_HOLDER_CONSTANT).abs() <= 1e-9 * BASELINE_HOLDER_CONSTANT;
    outcome(
        exact_ok && c.is_finite() && baseline_ok,
        format!("exponents 2/9, 1/4 exact: {exact_ok}; max constant_needed over 100 pairs = {c:.12e} (baseline {BASELINE_HOLDER_CONSTANT})"),
    )
}

fn dyadic_rates() -> Outcome {
    let js: Vec<u32> = (4..=10).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for (alpha, beta, p) in [(2.0, 0.0, 1.0), (1.0, 0.0, 1.0), (4.0, 0.0, 2.0)] {
        let fam = DyadicFamily::new(alpha, beta, 10).unwrap();
        let rep = dyadic_rate(&fam, p, &js, 1 << 16).unwrap();
        let (s, g) = (
            rep.metrics["slope_measured"],
            rep.metrics["gamma_predicted"],
        );
        let rel = rep.metrics["slope_relative_error"];
        ok &= rel <= 0.15;
        parts.push(format!(
            "({alpha},{beta},{p}): slope {s:.4} vs {g:.4} ({:.1}%)",
            100.0 * rel
        ));
    }
    outcome(ok, parts.join("; "))
}

fn linf_failure() -> Outcome {
    let fam = DyadicFamily::new(1.0, 0.0, 10).unwrap();
    let mut v = Vec::new();
    let mut linf_ok = true;
    for j in 4..=10 {
        let b = dyadic_build(&fam, j, 1 << 16).unwrap();
        v.push(b.v_distance().unwrap());
        linf_ok &= (b.coefficient_distance(LpNorm::Infinity) - 1.0).abs() <= 1e-12;
    }
    let worst_ratio = v.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    outcome(
        linf_ok && worst_ratio <= 0.75,
        format!(
            "‖u-u_j‖_V from {:.3e} to {:.3e}, worst step ratio {worst_ratio:.4} (<= 0.75); ‖a-a_j‖_inf = 1: {linf_ok}",
            v[0],
            v[v.len() - 1]
        ),
    )
}

fn coarea() -> Outcome {
    let mut r = rng(6);
    let bounds = CoefficientBounds::new(0.1, 1.1).unwrap();
    let mut worst = 0.0f64;
    let mut levels_ok = true;
    let mut nlevels = 0;
    for k in 0..50 {
        let n = 200 + 37 * k;
        let g = piecewise_linear_coefficient(&mut r, Interval::unit(), n, 50, &bounds).unwrap();
        let h = g.map(|v| v - 0.6);
        let rep = coarea_check(&h, 64).unwrap();
        worst = worst.max(rep.metrics["relative_error"]);
        let lv = good_levels(&h, 0.5).unwrap();
        nlevels += lv.len();
        levels_ok &= lv.windows(2).all(|w| w[0] > w[1]);
        levels_ok &= lv
            .iter()
            .all(|&t| level_perimeter(&h, t) <= level_budget(t));
    }
    outcome(
        worst < 1e-12 && levels_ok,
        format!("max relative coarea error {worst:.3e} (< 1e-12); {nlevels} good levels all within budget: {levels_ok}"),
    )
}

fn certificates() -> Outcome {
    let v = volterra_pair(3, 1 << 15, 0.5).unwrap();
    let target = 0.5 * (0.5 + 0.0625);
    let v_ok = v.residual_a < 1e-8
        && v.residual_b < 1e-8
        && v.coeff_gap >= 0.28
        && (v.coeff_gap - target).abs() <= 1e-6;
    let inh = inhomogeneous_pair(4096).unwrap();
    let (fa, fb) = (inh.checks["flux_identity_a"], inh.checks["flux_identity_b"]);
    let i_ok = fa <= 1e-12 && fb <= 1e-12 && inh.is_certificate();
    outcome(
        v_ok && i_ok,
        format!(
            "volterra residuals {:.2e}/{:.2e}, gap {:.9}; inhomogeneous flux identities {fa:.2e}/{fb:.2e}, gap {:.6}",
            v.residual_a, v.residual_b, v.coeff_gap, inh.coeff_gap
        ),
    )
}

fn pw_bound() -> Outcome {
    let bounds = CoefficientBounds::new(0.5, 2.0).unwrap();
    let m = 64;
    let rep = pw_bound_sweep(Partition2D::new(2, 2).unwrap(), m, 50, 8, bounds).unwrap();
    let max_ratio = rep.metrics["max_ratio"];
    let one = Partition2D::new(1, 1).unwrap();
    let a = PwConstCoefficient::constant(one, 1.0, bounds).unwrap();
    let b = PwConstCoefficient::constant(one, 2.0, bounds).unwrap();
    let single = verify_pw_bound(&a, &b, &NodalField::constant(m, 1.0).unwrap(), m).unwrap();
    let r1 = single.metrics["max_ratio"];
    let slack = 1.0 + 5.0 / m as f64;
    outcome(
        max_ratio <= slack && (r1 - 0.5).abs() <= 0.02,
        format!("max block ratio over 50 pairs {max_ratio:.4} (<= {slack:.4}); 1x1 ratio {r1:.6}"),
    )
}

fn pw_recovery() -> Outcome {
    let bounds = CoefficientBounds::new(0.5, 2.0).unwrap();
    let m = 64;
    let p = Partition2D::new(2, 2).unwrap();
    let truth = PwConstCoefficient::new(p, vec![1.0, 1.5, 0.8, 1.2], bounds).unwrap();
    let f = NodalField::constant(m, 1.0).unwrap();
    let u = fem_solve(&truth, &f, m).unwrap();
    let rec = recover_pw(&u, &f, p, bounds, m).unwrap();
    let err = rec
        .coefficient
        .coeffs()
        .iter()
        .zip(truth.coeffs())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let zero = NodalField::constant(m, 0.0).unwrap();
    let degenerate = recover_pw(&zero, &zero, p, bounds, m).unwrap();
    let warned = degenerate
        .warnings
        .iter()
        .any(|w| w.contains("not identifiable"));
    outcome(
        err <= 1e-3 && warned,
        format!(
            "max block error {err:.3e} after {} sweeps (<= 1e-3); f = 0 warns: {warned}",
            rec.sweeps
        ),
    )
}

fn determinism() -> Outcome {
    let bounds = CoefficientBounds::new(0.5, 2.0).unwrap();
    let f = GridFunction1D::constant(Interval::unit(), 512, 1.0).unwrap();
    let holder = || holder_sweep(&f, 1.5, 20, 3, &bounds).unwrap().to_json();
    let pw = || {
        pw_bound_sweep(Partition2D::new(2, 2).unwrap(), 16, 8, 5, bounds)
            .unwrap()
            .to_json()
    };
    let fam = DyadicFamily::new(2.0, 0.0, 8).unwrap();
    let dy = || {
        dyadic_rate(&fam, 1.0, &[2, 3, 4, 5, 6], 1 << 12)
            .unwrap()
            .to_json()
    };
    let g = piecewise_linear_coefficient(&mut rng(1), Interval::unit(), 300, 20, &bounds).unwrap();
    let co = || coarea_check(&g, 32).unwrap().to_json();
    let same = [
        ("holder", holder() == holder()),
        ("pw2d", pw() == pw()),
        ("dyadic", dy() == dy()),
        ("coarea", co() == co()),
    ];
    let ok = same.iter().all(|s| s.1);
    let detail = same
        .iter()
        .map(|(k, v)| format!("{k}: {}", if *v { "identical" } else { "DIFFERS" }))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(ok, detail)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    // `cargo test -- --list` and friends: nothing to enumerate.
    if args.iter().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut flux = FluxLog::default();
    let secs = |s| Some(Duration::from_secs(s));
    let results = [
        (
            "1 forward/inverse roundtrip",
            timed(secs(5), || roundtrip(&mut flux)),
        ),
        ("2 flux identity", timed(None, || flux_identity(&mut flux))),
        ("3 Hölder exponent and constant", timed(secs(30), holder)),
        ("4 dyadic rates", timed(secs(60), dyadic_rates)),
        ("5 L-infinity failure", timed(None, linf_failure)),
        ("6 coarea identity and good levels", timed(None, coarea)),
        (
            "7 non-identifiability certificates",
            timed(None, certificates),
        ),
        ("8 block stability bound", timed(secs(120), pw_bound)),
        ("9 2D recovery", timed(None, pw_recovery)),
        ("10 determinism", timed(None, determinism)),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!(
            "{} criterion {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
