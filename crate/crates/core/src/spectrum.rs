//! `s_q`, the `L^q`-spectrum `τ`, its derivative by two routes, the Legendre
//! spectrum and Lyapunov dimensions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::AffineIFS;
use crate::numeric::extrapolate_depth;
use crate::pressure::{
    equilibrium_functionals, pressure_value, EquilibriumFunctionals, PotentialSpec, DEFAULT_BUDGET,
};
use crate::symbolic::CylinderWeightModel;

/// Half-width of the band around `s ∈ {1, 2}` treated as a regime boundary.
pub const REGIME_BAND: f64 = 1e-6;
/// Default half-width of the excluded band around `q = 1`.
pub const DEFAULT_EXCLUSION: f64 = 0.02;
pub const DEFAULT_FD_STEP: f64 = 1e-3;
pub const DEFAULT_TOL: f64 = 1e-12;
const S_MAX_START: f64 = 4.0;
const S_MAX_LIMIT: f64 = 64.0;
const MAX_BISECTIONS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "(0,1)")]
    Low,
    #[serde(rename = "(1,2)")]
    Mid,
    #[serde(rename = "(2,inf)")]
    High,
    #[serde(rename = "boundary")]
    Boundary,
}

impl Regime {
    pub fn of(s: f64) -> Regime {
        if (s - 1.0).abs() < REGIME_BAND || (s - 2.0).abs() < REGIME_BAND {
            Regime::Boundary
        } else if s < 1.0 {
            Regime::Low
        } else if s < 2.0 {
            Regime::Mid
        } else {
            Regime::High
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Regime::Low => "(0,1)",
            Regime::Mid => "(1,2)",
            Regime::High => "(2,inf)",
            Regime::Boundary => "boundary",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// The system and measure whose spectrum is computed.
#[derive(Clone, Copy)]
pub struct SpectrumContext<'a> {
    pub ifs: &'a AffineIFS,
    pub mu: &'a dyn CylinderWeightModel,
    pub budget: u64,
}

impl<'a> SpectrumContext<'a> {
    pub fn new(ifs: &'a AffineIFS, mu: &'a dyn CylinderWeightModel) -> Self {
        SpectrumContext {
            ifs,
            mu,
            budget: DEFAULT_BUDGET,
        }
    }

    fn pressure(&self, q: f64, s: f64, depth: usize) -> Result<f64> {
        pressure_value(
            &PotentialSpec::psi(self.ifs, self.mu, q, s)?,
            depth,
            self.budget,
        )
    }

    /// Lower bound for `|log α1|` over single letters; sets the pressure scale.
    fn slope_scale(&self) -> f64 {
        self.ifs
            .matrices()
            .iter()
            .map(|m| -m.op_norm().ln())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Root of a decreasing function with `g(0) >= 0`, bracketed by doubling
/// from 4 up to 64. Stops once the bracket is below `tol` and `|g| < tol·scale`.
fn bisect_decreasing(g: impl Fn(f64) -> Result<f64>, tol: f64, scale: f64, q: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if g(0.0)? <= 0.0 {
        return Ok(0.0);
    }
    let mut hi = S_MAX_START;
    while g(hi)? > 0.0 {
        if hi >= S_MAX_LIMIT {
            return Err(Error::NoSignChange {
                q,
                s_max: S_MAX_LIMIT,
            });
        }
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid)?;
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < tol && v.abs() < tol * scale {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The zero `s_q` of `s ↦ P_n(ψ^{q,s})`.
pub fn solve_sq(ctx: &SpectrumContext, q: f64, depth: usize, tol: f64) -> Result<f64> {
    if q == 1.0 {
        return Err(Error::UndefinedAtOne);
    }
    // decreasing in s for q < 1, increasing for q > 1
    let sign = if q < 1.0 { 1.0 } else { -1.0 };
    let scale = (1.0 - q).abs() * ctx.slope_scale();
    bisect_decreasing(|s| Ok(sign * ctx.pressure(q, s, depth)?), tol, scale, q)
}

/// `τ(q) = (q − 1) s_q`, and exactly 0 at `q = 1`.
pub fn tau(ctx: &SpectrumContext, q: f64, depth: usize, tol: f64) -> Result<f64> {
    if q == 1.0 {
        return Ok(0.0);
    }
    Ok((q - 1.0) * solve_sq(ctx, q, depth, tol)?)
}

/// Central difference of `τ`.
pub fn tau_prime_fd(
    ctx: &SpectrumContext,
    q: f64,
    step: f64,
    depth: usize,
    tol: f64,
) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {step}"
        )));
    }
    if q - step <= 1.0 && 1.0 <= q + step {
        return Err(Error::StraddlesOne);
    }
    let up = tau(ctx, q + step, depth, tol)?;
    let down = tau(ctx, q - step, depth, tol)?;
    Ok((up - down) / (2.0 * step))
}

/// `τ'(q)` from the functionals of the Gibbs measure of `ψ^{q,s_q}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauPrime {
    pub value: f64,
    pub s_q: f64,
    pub regime: Regime,
    pub functionals: EquilibriumFunctionals,
}

/// The regime formula for `τ'`, in the regime of `s`.
pub fn tau_prime_from_functionals(regime: Regime, f: &EquilibriumFunctionals) -> Option<f64> {
    let (hc, l1, l2) = (f.h_cross, f.lambda1, f.lambda2);
    match regime {
        Regime::Low => Some(-hc / l1),
        Regime::Mid => Some(1.0 - (hc + l1) / l2),
        Regime::High => Some(-2.0 * hc / (l1 + l2)),
        Regime::Boundary => None,
    }
}

pub fn tau_prime_formula(
    ctx: &SpectrumContext,
    q: f64,
    depth: usize,
    tol: f64,
) -> Result<TauPrime> {
    let s_q = solve_sq(ctx, q, depth, tol)?;
    let regime = Regime::of(s_q);
    if regime == Regime::Boundary {
        return Err(Error::Boundary { s: s_q });
    }
    let spec = PotentialSpec::psi(ctx.ifs, ctx.mu, q, s_q)?;
    let functionals = equilibrium_functionals(&spec, depth, ctx.budget)?;
    let value = tau_prime_from_functionals(regime, &functionals).expect("regime is not a boundary");
    Ok(TauPrime {
        value,
        s_q,
        regime,
        functionals,
    })
}

/// Lyapunov dimension with both the regime-consistent value and the plain
/// three-way minimum of the branch formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovDimension {
    /// Unique zero of `h + Λ(φ^s)`: the branch formula whose value lies in its own regime.
    pub value: f64,
    pub branch: Regime,
    /// Smallest of the three branch formulas.
    pub raw_min: f64,
    pub raw_min_branch: Regime,
    /// Whether the minimum agrees with the regime-consistent value.
    pub consistent: bool,
}

fn check_exponents(h: f64, lambda1: f64, lambda2: f64) -> Result<f64> {
    if !(lambda1 < 0.0) || !(lambda2 <= lambda1 + 1e-12 * lambda1.abs()) {
        return Err(Error::NonContractive { lambda1, lambda2 });
    }
    if !(h >= -1e-12) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "entropy must be >= 0, got {h}"
        )));
    }
    Ok(h.max(0.0))
}

pub fn lyapunov_dimension(h: f64, lambda1: f64, lambda2: f64) -> Result<LyapunovDimension> {
    let h = check_exponents(h, lambda1, lambda2)?;
    let low = -h / lambda1;
    let mid = 1.0 - (h + lambda1) / lambda2;
    let high = -2.0 * h / (lambda1 + lambda2);
    let (value, branch) = if low < 1.0 {
        (low, Regime::Low)
    } else if mid < 2.0 {
        (mid, Regime::Mid)
    } else {
        (high, Regime::High)
    };
    let (raw_min, raw_min_branch) = [(low, Regime::Low), (mid, Regime::Mid), (high, Regime::High)]
        .into_iter()
        .fold((f64::INFINITY, Regime::Low), |acc, c| {
            if c.0 < acc.0 {
                c
            } else {
                acc
            }
        });
    Ok(LyapunovDimension {
        value,
        branch,
        raw_min,
        raw_min_branch,
        consistent: (raw_min - value).abs() <= 1e-12 * value.abs().max(1.0),
    })
}

/// Same formula with the cross-entropy `h(μ,ν)` in place of `h(ν)`.
pub fn lyapunov_cross_dimension(
    h_cross: f64,
    lambda1: f64,
    lambda2: f64,
) -> Result<LyapunovDimension> {
    lyapunov_dimension(h_cross, lambda1, lambda2)
}

/// The zero of `s ↦ P_n(φ^s)`.
pub fn affinity_dimension(ifs: &AffineIFS, depth: usize, tol: f64) -> Result<f64> {
    let ctx_scale = ifs
        .matrices()
        .iter()
        .map(|m| -m.op_norm().ln())
        .fold(f64::INFINITY, f64::min);
    bisect_decreasing(
        |s| pressure_value(&PotentialSpec::svf(ifs, s)?, depth, DEFAULT_BUDGET),
        tol,
        ctx_scale,
        0.0,
    )
}

/// `(α, f) = (τ'(q), qτ'(q) − τ(q))` with regime and ordering diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegendrePoint {
    pub q: f64,
    pub alpha: f64,
    pub f: f64,
    pub tau: f64,
    pub s_q: f64,
    pub regime: Regime,
    /// `s_q`, `α` and `f` all lie in the same open regime interval.
    pub regimes_match: bool,
    /// `f ≤ α`, i.e. `dim_L(ν) ≤ dim_L(μ,ν)`; for `q > 1` this is `α ≤ s_q`.
    pub ordering_ok: bool,
    pub functionals: EquilibriumFunctionals,
    /// Lyapunov dimension of the Gibbs measure itself.
    pub dim_l: LyapunovDimension,
}

pub fn legendre_point(
    ctx: &SpectrumContext,
    q: f64,
    depth: usize,
    tol: f64,
) -> Result<LegendrePoint> {
    let tp = tau_prime_formula(ctx, q, depth, tol)?;
    let tau = (q - 1.0) * tp.s_q;
    let alpha = tp.value;
    let f = q * alpha - tau;
    let regimes_match = Regime::of(alpha) == tp.regime && Regime::of(f) == tp.regime;
    let fx = &tp.functionals;
    let dim_l = lyapunov_dimension(fx.h, fx.lambda1, fx.lambda2)?;
    Ok(LegendrePoint {
        q,
        alpha,
        f,
        tau,
        s_q: tp.s_q,
        regime: tp.regime,
        regimes_match,
        ordering_ok: f <= alpha + 1e-9,
        functionals: tp.functionals,
        dim_l,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableOptions {
    pub depth: usize,
    pub tol: f64,
    pub fd_step: f64,
    pub exclusion: f64,
    /// Second depth for linear-in-`1/n` extrapolation.
    pub extrapolation_depth: Option<usize>,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions {
            depth: 12,
            tol: DEFAULT_TOL,
            fd_step: DEFAULT_FD_STEP,
            exclusion: DEFAULT_EXCLUSION,
            extrapolation_depth: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    Boundary,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolated {
    pub depths: (usize, usize),
    pub tau: f64,
    pub tau_prime_formula: f64,
    pub f: f64,
    pub dim_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub q: f64,
    pub s_q: Option<f64>,
    pub tau: Option<f64>,
    pub tau_prime_fd: Option<f64>,
    pub tau_prime_formula: Option<f64>,
    pub f: Option<f64>,
    pub regime: Option<Regime>,
    pub functionals: Option<EquilibriumFunctionals>,
    pub dim_l: Option<LyapunovDimension>,
    pub regimes_match: bool,
    pub ordering_ok: Option<bool>,
    pub extrapolated: Option<Extrapolated>,
    pub status: PointStatus,
    pub message: Option<String>,
}

impl SpectrumPoint {
    fn failed(q: f64, err: &Error) -> Self {
        SpectrumPoint {
            q,
            s_q: None,
            tau: None,
            tau_prime_fd: None,
            tau_prime_formula: None,
            f: None,
            regime: None,
            functionals: None,
            dim_l: None,
            regimes_match: false,
            ordering_ok: None,
            extrapolated: None,
            status: PointStatus::Failed,
            message: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcavityDiagnostic {
    /// Largest increase between consecutive slopes of `τ` (including `τ(1) = 0`).
    pub max_slope_increase: f64,
    /// Largest increase of the formula route `τ'` along the grid.
    pub max_derivative_increase: f64,
    pub concave: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub options: TableOptions,
    pub points: Vec<SpectrumPoint>,
    /// Grid values dropped because they fall in the band around `q = 1`.
    pub excluded: Vec<f64>,
    pub concavity: ConcavityDiagnostic,
    /// Smallest and largest `q` with all regimes matching.
    pub admissible_range: Option<(f64, f64)>,
}

fn compute_point(ctx: &SpectrumContext, q: f64, opts: &TableOptions) -> SpectrumPoint {
    let s_q = match solve_sq(ctx, q, opts.depth, opts.tol) {
        Ok(s) => s,
        Err(e) => return SpectrumPoint::failed(q, &e),
    };
    let tau = (q - 1.0) * s_q;
    let fd = tau_prime_fd(ctx, q, opts.fd_step, opts.depth, opts.tol);
    let mut point = SpectrumPoint {
        q,
        s_q: Some(s_q),
        tau: Some(tau),
        tau_prime_fd: fd.as_ref().ok().copied(),
        tau_prime_formula: None,
        f: None,
        regime: Some(Regime::of(s_q)),
        functionals: None,
        dim_l: None,
        regimes_match: false,
        ordering_ok: None,
        extrapolated: None,
        status: PointStatus::Ok,
        message: fd.err().map(|e| format!("finite difference: {e}")),
    };
    let lp = match legendre_point(ctx, q, opts.depth, opts.tol) {
        Ok(lp) => lp,
        Err(e @ Error::Boundary { .. }) => {
            point.status = PointStatus::Boundary;
            point.message = Some(e.to_string());
            return point;
        }
        Err(e) => {
            point.status = PointStatus::Failed;
            point.message = Some(e.to_string());
            return point;
        }
    };
    point.tau_prime_formula = Some(lp.alpha);
    point.f = Some(lp.f);
    point.functionals = Some(lp.functionals);
    point.dim_l = Some(lp.dim_l);
    point.regimes_match = lp.regimes_match;
    point.ordering_ok = Some(lp.ordering_ok);
    if let Some(d2) = opts.extrapolation_depth {
        match legendre_point(ctx, q, d2, opts.tol) {
            Ok(deep) => {
                let d1 = opts.depth;
                let ex = |a: f64, b: f64| extrapolate_depth(d1, a, d2, b);
                point.extrapolated = Some(Extrapolated {
                    depths: (d1, d2),
                    tau: ex(lp.tau, deep.tau),
                    tau_prime_formula: ex(lp.alpha, deep.alpha),
                    f: ex(lp.f, deep.f),
                    dim_l: ex(lp.dim_l.value, deep.dim_l.value),
                });
            }
            Err(e) => {
                point.message = Some(format!("extrapolation: {e}"));
            }
        }
    }
    point
}

fn concavity(points: &[SpectrumPoint]) -> ConcavityDiagnostic {
    let mut pairs: Vec<(f64, f64)> = points.iter().filter_map(|p| Some((p.q, p.tau?))).collect();
    let has_one = pairs.iter().any(|(q, _)| *q < 1.0) && pairs.iter().any(|(q, _)| *q > 1.0);
    if has_one {
        pairs.push((1.0, 0.0));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let slopes: Vec<f64> = pairs
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .collect();
    let max_slope_increase = slopes
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let derivs: Vec<f64> = points.iter().filter_map(|p| p.tau_prime_formula).collect();
    let max_derivative_increase = derivs
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    ConcavityDiagnostic {
        max_slope_increase,
        max_derivative_increase,
        concave: max_slope_increase <= 1e-8 && max_derivative_increase <= 1e-8,
    }
}

/// Spectrum over a strictly increasing grid; points within the exclusion
/// band around `q = 1` are dropped and listed separately. Points are
/// computed in parallel; per-point failures are recorded, not propagated.
pub fn spectrum_table(
    ctx: &SpectrumContext,
    grid: &[f64],
    opts: &TableOptions,
) -> Result<SpectrumTable> {
    if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|q| !q.is_finite()) {
        return Err(Error::InvalidArgument(
            "q grid must be finite and strictly increasing".into(),
        ));
    }
    if opts.depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    let (excluded, kept): (Vec<f64>, Vec<f64>) =
        grid.iter().partition(|q| (*q - 1.0).abs() < opts.exclusion);
    let points: Vec<SpectrumPoint> = kept
        .par_iter()
        .map(|&q| compute_point(ctx, q, opts))
        .collect();
    let admissible: Vec<f64> = points
        .iter()
        .filter(|p| p.status == PointStatus::Ok && p.regimes_match)
        .map(|p| p.q)
        .collect();
    Ok(SpectrumTable {
        options: *opts,
        concavity: concavity(&points),
        admissible_range: admissible
            .first()
            .map(|&lo| (lo, *admissible.last().unwrap())),
        points,
        excluded,
    })
}

/// Uniform grid of `steps` points on `[qmin, qmax]`.
pub fn uniform_grid(qmin: f64, qmax: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![qmin],
        _ => (0..steps)
            .map(|k| qmin + (qmax - qmin) * k as f64 / (steps - 1) as f64)
            .collect(),
    }
}
