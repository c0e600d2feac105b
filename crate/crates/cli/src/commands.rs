use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use coeffid_core::counterexamples::{inhomogeneous_pair, volterra_pair, CounterexamplePair};
use coeffid_core::forward::{self, primitive};
use coeffid_core::gmt::{coarea_check, good_levels, level_budget, level_perimeter};
use coeffid_core::grid::derivative;
use coeffid_core::inverse::recover;
use coeffid_core::pw2d::{
    fem_solve, pw_bound_sweep, recover_pw, NodalField, Partition2D, PwConstCoefficient,
};
use coeffid_core::stability::{
    default_rho_grid, dyadic_rate, fit_exponents, verify_holder, DyadicFamily,
};
use coeffid_core::{CoefficientBounds, Curve, Error, ExperimentReport, GridFunction1D, Source};

use crate::emit::{csv_artifact, emit, json_artifact, Outcome, RunInfo};
use crate::input::{materialize, Literal};
use crate::{Cli, Command, Counterexample, Pw2d};

/// Reads `COEFFID_THREADS` and caps the global worker pool.
pub fn configure_threads() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var("COEFFID_THREADS") else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("COEFFID_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the worker pool")?;
    Ok(Some(n))
}

/// 1 for failed mathematical checks surfaced as errors, 2 otherwise.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(
            Error::ResidualTooLarge { .. }
            | Error::IdentifiabilityViolation { .. }
            | Error::TvBudgetViolated { .. },
        ) => 1,
        _ => 2,
    }
}

fn bounds(lambda: f64, upper: f64) -> Result<CoefficientBounds> {
    Ok(CoefficientBounds::new(lambda, upper)?)
}

/// Runs the selected subcommand; `Ok(false)` means a check failed.
pub fn run(cli: Cli, threads: Option<usize>) -> Result<bool> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut inputs: Vec<PathBuf> = Vec::new();
    let (name, outcome) = match cli.command {
        Command::Forward { a, f, n, bounds: b } => (
            "forward",
            forward_cmd(&a, &f, n, bounds(b.lambda, b.upper)?, &mut inputs)?,
        ),
        Command::Recover {
            du,
            u,
            f,
            n,
            bounds: b,
            threshold,
        } => {
            let state = match (du, u) {
                (Some(du), _) => State::Derivative(du),
                (None, Some(u)) => State::Value(u),
                (None, None) => unreachable!("clap enforces one of --du/--u"),
            };
            let b = bounds(b.lambda, b.upper)?;
            (
                "recover",
                recover_cmd(state, &f, n, b, threshold, &mut inputs)?,
            )
        }
        Command::Exponents {
            f,
            big_f,
            n,
            rho_min,
            rho_max,
            rho_count,
            m_points,
        } => {
            let rho = rho_min.zip(rho_max).map(|(lo, hi)| (lo, hi, rho_count));
            let out = exponents_cmd(f, big_f, n, rho, m_points, &mut inputs)?;
            ("exponents", out)
        }
        Command::Holder {
            a,
            b,
            f,
            p,
            n,
            bounds: bd,
        } => {
            let bd = bounds(bd.lambda, bd.upper)?;
            ("holder", holder_cmd(&a, &b, &f, p, n, bd, &mut inputs)?)
        }
        Command::Dyadic {
            alpha,
            beta,
            p,
            jmin,
            jmax,
            n,
        } => ("dyadic", dyadic_cmd(alpha, beta, p, jmin, jmax, n)?),
        Command::Counterexample(c) => {
            let pair = match c {
                Counterexample::Volterra { level, n, amp } => volterra_pair(level, n, amp)?,
                Counterexample::Inhomogeneous { n } => inhomogeneous_pair(n)?,
            };
            ("counterexample", pair_outcome(&pair)?)
        }
        Command::Coarea {
            h,
            n,
            levels,
            t_start,
        } => ("coarea", coarea_cmd(&h, n, levels, t_start, &mut inputs)?),
        Command::Pw2d(Pw2d::Verify {
            nx,
            ny,
            m,
            trials,
            seed,
            lambda,
            upper,
        }) => {
            let rep = pw_bound_sweep(
                Partition2D::new(nx, ny)?,
                m,
                trials,
                seed,
                bounds(lambda, upper)?,
            )?;
            ("pw2d verify", Outcome::from_report("pw2d_verify", &rep)?)
        }
        Command::Pw2d(Pw2d::Recover { truth, m, tol }) => {
            let out = pw2d_recover_cmd(&truth, m, tol)?;
            inputs.push(truth);
            ("pw2d recover", out)
        }
    };
    let run = RunInfo {
        command: name,
        args: &args,
        threads,
        inputs: &inputs,
    };
    emit(&outcome, cli.out.as_deref(), cli.format, &run)?;
    if !outcome.passed {
        eprintln!("{}", outcome.summary);
    }
    Ok(outcome.passed)
}

fn forward_cmd(
    a: &Literal,
    f: &Literal,
    n: Option<usize>,
    b: CoefficientBounds,
    inputs: &mut Vec<PathBuf>,
) -> Result<Outcome> {
    let [a, f]: [GridFunction1D; 2] = materialize(&[a, f], n, inputs)?
        .try_into()
        .expect("two inputs");
    let sol = forward::solve(&a, &f, &b)?;
    let xs: Vec<f64> = sol.u.nodes().collect();
    let table = csv_artifact(
        "forward.csv".into(),
        &["x", "u", "du", "F"],
        &[
            xs,
            sol.u.values().to_vec(),
            sol.du.values().to_vec(),
            sol.primitive.values().to_vec(),
        ],
    )?;
    Ok(Outcome {
        json: serde_json::to_string_pretty(&sol)?,
        stem: "forward".into(),
        extra: vec![table],
        passed: true,
        summary: format!(
            "forward: C_a = {:.16e}, relative flux residual {:.3e}",
            sol.ca,
            sol.relative_flux_residual(&a)
        ),
    })
}

enum State {
    Derivative(Literal),
    Value(Literal),
}

fn recover_cmd(
    state: State,
    f: &Literal,
    n: Option<usize>,
    b: CoefficientBounds,
    threshold: Option<f64>,
    inputs: &mut Vec<PathBuf>,
) -> Result<Outcome> {
    let (lit, differentiate) = match &state {
        State::Derivative(l) => (l, false),
        State::Value(l) => (l, true),
    };
    let [s, f]: [GridFunction1D; 2] = materialize(&[lit, f], n, inputs)?
        .try_into()
        .expect("two inputs");
    let du = if differentiate { derivative(&s)? } else { s };
    let rec = recover(&du, &Source::Density(f), &b, threshold)?;
    let xs: Vec<f64> = rec.a.nodes().collect();
    let masked: Vec<f64> = rec
        .degenerate_mask
        .iter()
        .map(|&m| f64::from(u8::from(m)))
        .collect();
    let table = csv_artifact(
        "recover.csv".into(),
        &["x", "a", "masked"],
        &[xs, rec.a.values().to_vec(), masked],
    )?;
    let summary = format!(
        "recover: C = {:.16e} at x0 = {:.6}, {:.2}% of nodes masked",
        rec.c,
        rec.x0,
        100.0 * rec.fraction_degenerate
    );
    Ok(Outcome {
        json: serde_json::to_string_pretty(&rec)?,
        stem: "recover".into(),
        extra: vec![table],
        passed: true,
        summary,
    })
}

fn exponents_cmd(
    f: Option<Literal>,
    big_f: Option<Literal>,
    n: Option<usize>,
    rho: Option<(f64, f64, usize)>,
    m_points: usize,
    inputs: &mut Vec<PathBuf>,
) -> Result<Outcome> {
    let (lit, is_density) = match (&f, &big_f) {
        (Some(l), _) => (l, true),
        (None, Some(l)) => (l, false),
        (None, None) => unreachable!("clap enforces one of --f/--F"),
    };
    let g = materialize(&[lit], n, inputs)?.remove(0);
    let big_f = if is_density { primitive(&g) } else { g };
    let grid = match rho {
        Some((lo, hi, count)) => geometric_grid(lo, hi, count)?,
        None => default_rho_grid(&big_f),
    };
    let fit = fit_exponents(&big_f, &grid, m_points)?;

    let mut rep = ExperimentReport::new("exponents");
    rep.input("n", big_f.n())
        .input("source", if is_density { "f" } else { "F" })
        .input("m_points", m_points)
        .metric("alpha", fit.alpha)
        .metric("beta", fit.beta)
        .metric("C1", fit.c1)
        .metric("C2", fit.c2)
        .metric("residual", fit.residual)
        .metric("beta_tail", fit.beta_tail)
        .check("bracket_holds", fit.bracket_holds())
        .check("beta_positive", fit.beta > 0.0);
    if fit.flat_source {
        rep.note("F has a plateau: the sup branch does not decay and beta degenerates to 0");
    }
    let mut curve = Curve::new(&["rho", "inf_measure", "sup_measure"]);
    for (i, &r) in fit.rho_grid.iter().enumerate() {
        curve.push(vec![r, fit.inf_measures[i], fit.sup_measures[i]]);
    }
    rep.curve("measures", curve);
    Outcome::from_report("exponents", &rep)
}

fn geometric_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || count < 3 {
        bail!("need 0 < rho-min < rho-max and at least 3 radii");
    }
    let ratio = (lo / hi).powf(1.0 / (count - 1) as f64);
    Ok((0..count).map(|k| hi * ratio.powi(k as i32)).collect())
}

fn holder_cmd(
    a: &Literal,
    b: &Literal,
    f: &Literal,
    p: f64,
    n: Option<usize>,
    bd: CoefficientBounds,
    inputs: &mut Vec<PathBuf>,
) -> Result<Outcome> {
    let [a, b, f]: [GridFunction1D; 3] = materialize(&[a, b, f], n, inputs)?
        .try_into()
        .expect("three inputs");
    let source = Source::Density(f);
    let big_f = source.primitive();
    let fit = fit_exponents(&big_f, &default_rho_grid(&big_f), 32)?;
    let hr = verify_holder(&a, &b, &source, p, &fit, &bd)?;

    let mut rep = ExperimentReport::new("holder");
    rep.input("n", a.n())
        .input("p", p)
        .metric("alpha", fit.alpha)
        .metric("beta", fit.beta)
        .metric("exponent", hr.exponent)
        .metric("lhs", hr.lhs)
        .metric("rhs_norm", hr.rhs_norm)
        .metric("constant_needed", hr.constant_needed)
        .metric("eta", hr.eta)
        .metric("c0_implied", hr.c0_implied)
        .check("constant_finite", hr.constant_needed.is_finite());
    Outcome::from_report("holder", &rep)
}

fn dyadic_cmd(alpha: f64, beta: f64, p: f64, jmin: u32, jmax: u32, n: usize) -> Result<Outcome> {
    if jmin + 2 > jmax {
        bail!("need at least three scales: --jmin {jmin} --jmax {jmax}");
    }
    let fam = DyadicFamily::new(alpha, beta, jmax)?;
    let js: Vec<u32> = (jmin..=jmax).collect();
    let rep = dyadic_rate(&fam, p, &js, n)?;
    Outcome::from_report("dyadic", &rep)
}

fn pair_outcome(pair: &CounterexamplePair) -> Result<Outcome> {
    let stem = format!("counterexample_{}", pair.name);
    let xs: Vec<f64> = pair.u.nodes().collect();
    let rhs_name = match pair.rhs {
        Source::Density(_) => "f",
        Source::Primitive(_) => "F",
    };
    let table = csv_artifact(
        format!("{stem}.csv"),
        &["x", "a", "b", "u", rhs_name],
        &[
            xs,
            pair.a.values().to_vec(),
            pair.b.values().to_vec(),
            pair.u.values().to_vec(),
            pair.rhs.grid().values().to_vec(),
        ],
    )?;
    let passed = pair.is_certificate();
    let summary = format!(
        "counterexample {}: residuals {:.3e} / {:.3e} (tol {:.1e}), coefficient gap {:.6}: {}",
        pair.name,
        pair.residual_a,
        pair.residual_b,
        pair.residual_tol,
        pair.coeff_gap,
        if passed {
            "certificate holds"
        } else {
            "certificate fails"
        }
    );
    Ok(Outcome {
        json: serde_json::to_string_pretty(pair)?,
        stem,
        extra: vec![table],
        passed,
        summary,
    })
}

fn coarea_cmd(
    h: &Literal,
    n: Option<usize>,
    levels: usize,
    t_start: Option<f64>,
    inputs: &mut Vec<PathBuf>,
) -> Result<Outcome> {
    let h = materialize(&[h], n, inputs)?.remove(0);
    let mut rep = coarea_check(&h, levels)?;
    if let Some(t0) = t_start {
        let good = good_levels(&h, t0)?;
        let mut curve = Curve::new(&["t", "perimeter", "budget"]);
        for &t in &good {
            curve.push(vec![t, level_perimeter(&h, t), level_budget(t)]);
        }
        rep.input("t_start", t0)
            .metric("good_level_count", good.len() as f64)
            .metric(
                "smallest_good_level",
                *good.last().expect("good_levels is never empty"),
            )
            .curve("good_levels", curve);
    }
    Outcome::from_report("coarea", &rep)
}

fn pw2d_recover_cmd(truth_path: &std::path::Path, m: usize, tol: f64) -> Result<Outcome> {
    let text = std::fs::read_to_string(truth_path)
        .with_context(|| format!("reading {}", truth_path.display()))?;
    let truth: PwConstCoefficient =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", truth_path.display()))?;
    // Deserialization skips the constructor; re-validate.
    let truth =
        PwConstCoefficient::new(truth.partition(), truth.coeffs().to_vec(), truth.bounds())?;
    let f = NodalField::constant(m, 1.0)?;
    let u = fem_solve(&truth, &f, m)?;
    let rec = recover_pw(&u, &f, truth.partition(), truth.bounds(), m)?;

    let mut curve = Curve::new(&["block", "truth", "recovered", "abs_error"]);
    let mut max_err = 0.0f64;
    for (i, (t, r)) in truth
        .coeffs()
        .iter()
        .zip(rec.coefficient.coeffs())
        .enumerate()
    {
        let e = (t - r).abs();
        max_err = max_err.max(e);
        curve.push(vec![i as f64, *t, *r, e]);
    }
    let mut rep = ExperimentReport::new("pw2d_recover");
    rep.input("m", m)
        .input("nx", truth.partition().nx())
        .input("ny", truth.partition().ny())
        .input("tol", tol)
        .metric("max_abs_error", max_err)
        .metric("objective", rec.objective)
        .metric("sweeps", rec.sweeps as f64)
        .check("converged", rec.converged)
        .check("error_within_tol", max_err <= tol)
        .curve("blocks", curve);
    for w in &rec.warnings {
        rep.note(w.clone());
    }
    let mut out = Outcome::from_report("pw2d_recover", &rep)?;
    out.extra
        .push(json_artifact("pw2d_recover.state.json".into(), &u)?);
    Ok(out)
}
