//! `coeffid`: experiments on identifying the coefficient `a` in
//! `-div(a ∇u) = f` from the state `u`.
//!
//! Exit status: 0 when every check holds, 1 when a mathematical check fails,
//! 2 for usage and input errors.

mod commands;
mod emit;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::emit::Format;
use crate::input::Literal;

/// Coefficient identification for -(a u')' = f in 1D and piecewise-constant
/// a in 2D.
///
/// 1D inputs accept `const:c`, `linear:a,b` (meaning a + b x), or
/// `csv:<path>` with columns x,value. Without --out the primary JSON document
/// goes to stdout; with --out all files plus manifest.json are written there.
/// COEFFID_THREADS caps the worker pool.
#[derive(Debug, Parser)]
#[command(name = "coeffid", version)]
struct Cli {
    /// Directory for reports, CSV tables and manifest.json.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Which files to write under --out.
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Bounds {
    /// Lower admissibility bound λ on the coefficient.
    #[arg(long, default_value_t = 1e-3)]
    lambda: f64,

    /// Upper admissibility bound Λ on the coefficient.
    #[arg(long = "Lambda", default_value_t = 1e3)]
    upper: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve -(a u')' = f on an interval with u = 0 at both ends.
    ///
    /// Integrating once gives the flux identity a u' = C_a - F, where F is the
    /// primitive of f and C_a = (∫F/a)/(∫1/a) is forced by the right boundary
    /// value. Fails with exit 1 if the identity is not met to 1e-10.
    Forward {
        #[arg(long)]
        a: Literal,
        #[arg(long)]
        f: Literal,
        /// Cells on [0, 1] for formula inputs (CSV inputs fix their own grid).
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        bounds: Bounds,
    },

    /// Recover a from u' and f in 1D.
    ///
    /// u' has a zero inside the interval, where the flux identity gives the
    /// constant C = F(x0); then a = (C - F)/u' wherever u' ≠ 0. Where u'
    /// vanishes a is not determined, so those nodes are masked and reported.
    #[command(group(clap::ArgGroup::new("state").required(true).args(["du", "u"])))]
    Recover {
        /// Derivative of the state.
        #[arg(long)]
        du: Option<Literal>,
        /// The state itself; differentiated on its grid.
        #[arg(long)]
        u: Option<Literal>,
        #[arg(long)]
        f: Literal,
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        bounds: Bounds,
        /// Nodes with |u'| below this are masked [default: sqrt(h) max|u'| / 100].
        #[arg(long)]
        threshold: Option<f64>,
    },

    /// Estimate the level-set exponents of the flux primitive F.
    ///
    /// Fits α ≥ β with C1 ρ^α ≤ |{x : |F(x) - M| < ρ}| ≤ C2 ρ^β uniformly in
    /// the level M. These exponents govern how stably a is determined by u'.
    #[command(group(clap::ArgGroup::new("source").required(true).args(["f", "big_f"])))]
    Exponents {
        /// Density f; F is its primitive.
        #[arg(long)]
        f: Option<Literal>,
        /// The primitive F directly.
        #[arg(long = "F")]
        big_f: Option<Literal>,
        #[arg(long)]
        n: Option<usize>,
        /// Smallest radius [default: automatic dyadic grid].
        #[arg(long, requires = "rho_max")]
        rho_min: Option<f64>,
        #[arg(long, requires = "rho_min")]
        rho_max: Option<f64>,
        /// Number of geometrically spaced radii between --rho-min and --rho-max.
        #[arg(long, default_value_t = 10)]
        rho_count: usize,
        /// Levels M sampled for the inf and sup of the band measure.
        #[arg(long = "M-points", default_value_t = 32)]
        m_points: usize,
    },

    /// Hölder stability of the map u' ↦ a for one pair of coefficients.
    ///
    /// ‖a - b‖_{L_p} ≤ C ‖u'_a - u'_b‖_{L_2}^γ, where the exponent γ depends on
    /// p and the level-set exponents α, β of F. Reports the constant C needed;
    /// exit 1 if different coefficients produce identical derivatives.
    Holder {
        #[arg(long)]
        a: Literal,
        #[arg(long)]
        b: Literal,
        #[arg(long)]
        f: Literal,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        bounds: Bounds,
    },

    /// Sharpness of the stability exponent on a dyadic family.
    ///
    /// u is a sum of bumps at scales 2^{-k} with amplitudes 2^{-αk}, a_j adds a
    /// spike of height 2^{βj} on (-2^{-j}, 2^{-j}). Then ‖a - a_j‖_{L_p} decays
    /// like ‖u - u_j‖^γ with γ = (1/p - β)/(α - 1/2 - β); exit 1 if the
    /// measured slope misses γ by more than 15%.
    Dyadic {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 4)]
        jmin: u32,
        #[arg(long, default_value_t = 10)]
        jmax: u32,
        /// Cells on [-1, 1].
        #[arg(long, default_value_t = 1 << 16)]
        n: usize,
    },

    /// Pairs of distinct coefficients that produce the same state.
    #[command(subcommand)]
    Counterexample(Counterexample),

    /// Coarea identity TV(h) = ∫ P({h > t}) dt and good level selection.
    ///
    /// Computes both sides exactly for a piecewise-linear h; with --t-start
    /// also lists levels t with P({h > t}) ≤ 1/(t |ln t|), which exist
    /// arbitrarily close to 0 for h of bounded variation.
    Coarea {
        #[arg(long)]
        h: Literal,
        #[arg(long)]
        n: Option<usize>,
        /// Levels in the perimeter profile.
        #[arg(long, default_value_t = 256)]
        levels: usize,
        #[arg(long)]
        t_start: Option<f64>,
    },

    /// Piecewise-constant coefficients on block partitions of the unit square.
    #[command(subcommand)]
    Pw2d(Pw2d),
}

#[derive(Debug, Subcommand)]
enum Counterexample {
    /// Non-identifiability on a fat Cantor set.
    ///
    /// u' vanishes on a Smith–Volterra–Cantor set S of positive measure and f
    /// lives on the removed intervals, so a = 1 and b = 1 + amp·χ_S give the
    /// same weak solution although ‖a - b‖ is bounded below.
    Volterra {
        #[arg(long, default_value_t = 3)]
        level: u32,
        #[arg(long, default_value_t = 1 << 15)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        amp: f64,
    },
    /// Non-identifiability with inhomogeneous boundary values.
    ///
    /// With u = -(x + 1/2)²/2 and f = 1, both a = 1 + 1/(x + 1/2) and b = 1
    /// solve the equation: their fluxes differ by a constant, which the
    /// nonzero boundary values of u absorb.
    Inhomogeneous {
        #[arg(long, default_value_t = 1024)]
        n: usize,
    },
}

#[derive(Debug, Subcommand)]
enum Pw2d {
    /// Lipschitz stability of piecewise-constant coefficients, per block.
    ///
    /// For a, b constant on each block D_i of an nx × ny partition,
    /// |a_i - b_i| ‖f‖_{H^{-1}(D_i)} ≤ Λ² ‖∇(u_a - u_b)‖_{L_2(D_i)}. Checks the
    /// ratio against 1 + 5/m over random pairs with f ≡ 1; exit 1 on violation.
    Verify {
        #[arg(long, default_value_t = 2)]
        nx: usize,
        #[arg(long, default_value_t = 2)]
        ny: usize,
        #[arg(long, default_value_t = 64)]
        m: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[arg(long = "Lambda", default_value_t = 2.0)]
        upper: f64,
    },
    /// Recover block values from the state they generate with f ≡ 1.
    ///
    /// Since each block value is determined by the state, a least-squares fit
    /// of the block values reproduces the truth; exit 1 if any block misses
    /// by more than --tol.
    Recover {
        /// JSON coefficient: {"partition":{"nx":..,"ny":..},"coeffs":[..],"bounds":{"lambda":..,"Lambda":..}}.
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value_t = 64)]
        m: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match commands::configure_threads() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match commands::run(cli, threads) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
