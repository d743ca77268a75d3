//! Distribution fits for per-game totals (achievements `N`, players `G`).
//!
//! The log-normal is fitted in closed form on the log-sample. Weibull, gamma
//! and Burr XII are fitted by maximum likelihood with Newton iterations on the
//! profile log-likelihood. [`select_best`] picks the family with the smallest
//! Kolmogorov-Smirnov distance.
//!
//! Counts are fitted with continuous densities, without continuity correction.
//! Iterative solvers run in `f64` regardless of the scalar type.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::scalar::{mean, sample_std};
use crate::special;
use crate::Real;

/// Iteration cap for the iterative maximum-likelihood solvers.
pub const MAX_ITERATIONS: usize = 200;
/// Convergence threshold on the per-sample profile score.
pub const GRADIENT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("{family} fit is degenerate: samples have no spread")]
    Degenerate { family: Family },
    #[error("{family} fit diverged after {iterations} iterations (last iterate {last:?})")]
    FitDiverged {
        family: Family,
        iterations: usize,
        last: Vec<f64>,
    },
    #[error("every family failed to fit")]
    AllFitsFailed(Vec<(Family, FitError)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    LogNormal,
    Weibull,
    Gamma,
    Burr,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::LogNormal, Family::Weibull, Family::Gamma, Family::Burr];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::LogNormal => "lognormal",
            Family::Weibull => "weibull",
            Family::Gamma => "gamma",
            Family::Burr => "burr",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lognormal" | "log-normal" => Ok(Family::LogNormal),
            "weibull" => Ok(Family::Weibull),
            "gamma" => Ok(Family::Gamma),
            "burr" => Ok(Family::Burr),
            other => Err(format!("unknown family '{other}'")),
        }
    }
}

/// Log-normal fit: `ln X ~ Normal(mu, sigma)` with 95% confidence intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogNormalParams<T> {
    pub mu: T,
    pub sigma: T,
    pub mu_ci: (T, T),
    pub sigma_ci: (T, T),
    pub sample_size: usize,
    /// Set when the log-sample has zero spread (`sigma == 0`).
    pub degenerate: bool,
}

impl<T: Real> LogNormalParams<T> {
    /// Parameters without an attached sample (zero-width intervals).
    pub fn new(mu: T, sigma: T) -> Self {
        Self {
            mu,
            sigma,
            mu_ci: (mu, mu),
            sigma_ci: (sigma, sigma),
            sample_size: 0,
            degenerate: sigma == T::zero(),
        }
    }

    pub fn cdf(&self, value: T) -> T {
        lognormal_cdf(value, self.mu, self.sigma)
    }
}

/// Log-normal density at `value > 0`.
pub fn lognormal_pdf<T: Real>(value: T, params: &LogNormalParams<T>) -> Result<T, FitError> {
    if !(value > T::zero()) {
        return Err(FitError::Domain(format!("log-normal density needs value > 0, got {value}")));
    }
    if !(params.sigma > T::zero()) {
        return Err(FitError::Domain(format!("sigma must be positive, got {}", params.sigma)));
    }
    let z = (value.ln() - params.mu) / params.sigma;
    let two_pi = T::lit(2.0 * PI);
    Ok((-(z * z) / T::lit(2.0)).exp() / (two_pi.sqrt() * params.sigma * value))
}

/// Log-normal CDF. A zero `sigma` gives the step function at `exp(mu)`.
pub fn lognormal_cdf<T: Real>(value: T, mu: T, sigma: T) -> T {
    if !(value > T::zero()) {
        return T::zero();
    }
    if sigma == T::zero() {
        return if value.ln() >= mu { T::one() } else { T::zero() };
    }
    special::std_normal_cdf((value.ln() - mu) / sigma)
}

/// Closed-form log-normal fit: mean and sample standard deviation of `ln x`,
/// with a Student-t interval for `mu` and a chi-square interval for `sigma`.
pub fn fit_lognormal<T: Real>(samples: &[T]) -> Result<LogNormalParams<T>, FitError> {
    if samples.len() < 2 {
        return Err(FitError::InsufficientData {
            needed: 2,
            got: samples.len(),
        });
    }
    if let Some(bad) = samples.iter().find(|&&v| !(v > T::zero()) || !v.is_finite()) {
        return Err(FitError::Domain(format!("log-normal samples must be positive, got {bad}")));
    }
    let logs: Vec<T> = samples.iter().map(|v| v.ln()).collect();
    let n = logs.len();
    let mu = mean(&logs).unwrap_or_else(T::zero);
    let sigma = sample_std(&logs);
    if sigma == T::zero() {
        return Ok(LogNormalParams {
            mu,
            sigma,
            mu_ci: (mu, mu),
            sigma_ci: (sigma, sigma),
            sample_size: n,
            degenerate: true,
        });
    }
    let dof = (n - 1) as f64;
    let s = sigma.to_f64_lossy();
    let half = special::students_t_quantile(0.975, dof) * s / (n as f64).sqrt();
    let sigma_lo = s * (dof / special::chi_squared_quantile(0.975, dof)).sqrt();
    let sigma_hi = s * (dof / special::chi_squared_quantile(0.025, dof)).sqrt();
    Ok(LogNormalParams {
        mu,
        sigma,
        mu_ci: (mu - T::lit(half), mu + T::lit(half)),
        sigma_ci: (T::lit(sigma_lo).min(sigma), T::lit(sigma_hi).max(sigma)),
        sample_size: n,
        degenerate: false,
    })
}

/// Fitted parameters of one family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FamilyParams<T> {
    LogNormal { mu: T, sigma: T },
    Weibull { shape: T, scale: T },
    Gamma { shape: T, scale: T },
    /// Burr type XII: `F(x) = 1 - (1 + (x/scale)^c)^(-k)`.
    Burr { c: T, k: T, scale: T },
}

impl<T: Real> FamilyParams<T> {
    pub fn family(&self) -> Family {
        match self {
            FamilyParams::LogNormal { .. } => Family::LogNormal,
            FamilyParams::Weibull { .. } => Family::Weibull,
            FamilyParams::Gamma { .. } => Family::Gamma,
            FamilyParams::Burr { .. } => Family::Burr,
        }
    }

    pub fn cdf(&self, x: T) -> T {
        if !(x > T::zero()) {
            return T::zero();
        }
        match *self {
            FamilyParams::LogNormal { mu, sigma } => lognormal_cdf(x, mu, sigma),
            FamilyParams::Weibull { shape, scale } => T::one() - (-(x / scale).powf(shape)).exp(),
            FamilyParams::Gamma { shape, scale } => special::gamma_p(shape, x / scale),
            FamilyParams::Burr { c, k, scale } => {
                // 1 - exp(-k * ln(1 + (x/s)^c)), written to keep precision in both tails
                let t = c * (x / scale).ln();
                -(-k * softplus(t)).exp_m1()
            }
        }
    }

    /// Parameter names and values in a fixed order.
    pub fn named(&self) -> Vec<(&'static str, T)> {
        match *self {
            FamilyParams::LogNormal { mu, sigma } => vec![("mu", mu), ("sigma", sigma)],
            FamilyParams::Weibull { shape, scale } => vec![("shape", shape), ("scale", scale)],
            FamilyParams::Gamma { shape, scale } => vec![("shape", shape), ("scale", scale)],
            FamilyParams::Burr { c, k, scale } => vec![("c", c), ("k", k), ("scale", scale)],
        }
    }
}

/// A fitted family with its goodness of fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistFit<T> {
    pub family: Family,
    pub params: FamilyParams<T>,
    /// Kolmogorov-Smirnov distance; `None` for degenerate fits.
    pub ks_stat: Option<T>,
    pub sample_size: usize,
    pub degenerate: bool,
    pub iterations: usize,
    /// Present for log-normal fits.
    pub lognormal: Option<LogNormalParams<T>>,
}

impl<T: Real> DistFit<T> {
    pub fn cdf(&self, x: T) -> T {
        self.params.cdf(x)
    }

    /// JSON report `{variable, family, params, ci, ks, n}`.
    pub fn report(&self, variable: &str) -> FitReport {
        let params = self
            .params
            .named()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_f64_lossy()))
            .collect();
        let ci = self.lognormal.as_ref().map(|ln| {
            let mut m = BTreeMap::new();
            m.insert("mu".to_string(), [ln.mu_ci.0.to_f64_lossy(), ln.mu_ci.1.to_f64_lossy()]);
            m.insert(
                "sigma".to_string(),
                [ln.sigma_ci.0.to_f64_lossy(), ln.sigma_ci.1.to_f64_lossy()],
            );
            m
        });
        FitReport {
            variable: variable.to_string(),
            family: self.family,
            params,
            ci,
            ks: self.ks_stat.map(|v| v.to_f64_lossy()),
            n: self.sample_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub variable: String,
    pub family: Family,
    pub params: BTreeMap<String, f64>,
    pub ci: Option<BTreeMap<String, [f64; 2]>>,
    pub ks: Option<f64>,
    pub n: usize,
}

/// Two-sided Kolmogorov-Smirnov distance between the empirical CDF of
/// `samples` and `cdf`.
pub fn ks_distance<T: Real>(samples: &[T], cdf: impl Fn(T) -> T) -> T {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = T::from_count(sorted.len());
    let mut d = T::zero();
    for (i, &x) in sorted.iter().enumerate() {
        let model = cdf(x);
        let above = T::from_count(i + 1) / n - model;
        let below = model - T::from_count(i) / n;
        d = d.max(above).max(below);
    }
    d.min(T::one())
}

/// Kolmogorov-Smirnov statistic of `samples` against a fitted family.
pub fn ks_statistic<T: Real>(samples: &[T], fit: &DistFit<T>) -> T {
    ks_distance(samples, |x| fit.cdf(x))
}

fn check_positive<T: Real>(samples: &[T], needed: usize) -> Result<Vec<f64>, FitError> {
    if samples.len() < needed {
        return Err(FitError::InsufficientData {
            needed,
            got: samples.len(),
        });
    }
    samples
        .iter()
        .map(|&v| {
            let v = v.to_f64_lossy();
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(FitError::Domain(format!("samples must be positive, got {v}")))
            }
        })
        .collect()
}

/// Maximum-likelihood fit of one family (at least 10 positive samples).
pub fn fit_family<T: Real>(samples: &[T], family: Family) -> Result<DistFit<T>, FitError> {
    let xs = check_positive(samples, 10)?;
    let (params, iterations, lognormal) = match family {
        Family::LogNormal => {
            let ln = fit_lognormal(samples)?;
            (
                FamilyParams::LogNormal {
                    mu: ln.mu,
                    sigma: ln.sigma,
                },
                0,
                Some(ln),
            )
        }
        Family::Weibull => {
            let (shape, scale, it) = solve_weibull(&xs)?;
            (
                FamilyParams::Weibull {
                    shape: T::lit(shape),
                    scale: T::lit(scale),
                },
                it,
                None,
            )
        }
        Family::Gamma => {
            let (shape, scale, it) = solve_gamma(&xs)?;
            (
                FamilyParams::Gamma {
                    shape: T::lit(shape),
                    scale: T::lit(scale),
                },
                it,
                None,
            )
        }
        Family::Burr => {
            let (c, k, scale, it) = solve_burr(&xs)?;
            (
                FamilyParams::Burr {
                    c: T::lit(c),
                    k: T::lit(k),
                    scale: T::lit(scale),
                },
                it,
                None,
            )
        }
    };
    let degenerate = lognormal.as_ref().is_some_and(|ln| ln.degenerate);
    let mut fit = DistFit {
        family,
        params,
        ks_stat: None,
        sample_size: samples.len(),
        degenerate,
        iterations,
        lognormal,
    };
    if !degenerate {
        fit.ks_stat = Some(ks_statistic(samples, &fit));
    }
    Ok(fit)
}

/// KS distances closer than this count as tied. It only absorbs rounding,
/// e.g. a Burr fit at its Weibull limit.
pub const KS_TIE_TOLERANCE: f64 = 1e-9;

/// Fits every family and returns the one with the smallest KS distance.
/// Ties go to the earlier family in `LogNormal, Weibull, Gamma, Burr`.
pub fn select_best<T: Real>(samples: &[T]) -> Result<DistFit<T>, FitError> {
    let mut failures = Vec::new();
    let mut best: Option<DistFit<T>> = None;
    for family in Family::ALL {
        match fit_family(samples, family) {
            Ok(fit) => {
                let Some(ks) = fit.ks_stat else {
                    failures.push((family, FitError::Degenerate { family }));
                    continue;
                };
                let better = match &best {
                    None => true,
                    Some(b) => ks.to_f64_lossy() < b.ks_stat.map_or(f64::INFINITY, |v| v.to_f64_lossy()) - KS_TIE_TOLERANCE,
                };
                if better {
                    best = Some(fit);
                }
            }
            Err(e @ FitError::InsufficientData { .. }) | Err(e @ FitError::Domain(_)) => return Err(e),
            Err(e) => {
                log::debug!("{family} fit failed: {e}");
                failures.push((family, e));
            }
        }
    }
    best.ok_or(FitError::AllFitsFailed(failures))
}

fn log_stats(xs: &[f64]) -> (Vec<f64>, f64, f64) {
    let logs: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let m = mean(&logs).unwrap_or(0.0);
    let sd = sample_std(&logs);
    (logs, m, sd)
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iterations: usize) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..iterations {
        if (hi - lo).abs() <= 1e-12 * (1.0 + lo.abs()) {
            break;
        }
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a);
        }
    }
    0.5 * (lo + hi)
}

/// Safeguarded Newton on a monotone one-dimensional score. `eval` returns
/// `(score, derivative)`; `profile` is the log-likelihood used by the
/// golden-section fallback. Returns the root and iterations used.
fn newton_shape(
    family: Family,
    init: f64,
    eval: impl Fn(f64) -> (f64, f64),
    profile: impl Fn(f64) -> f64,
) -> Result<(f64, usize), FitError> {
    let mut k = init;
    for it in 1..=MAX_ITERATIONS {
        let (g, dg) = eval(k);
        if !g.is_finite() || !dg.is_finite() {
            break;
        }
        if g.abs() < GRADIENT_TOLERANCE {
            return Ok((k, it));
        }
        let next = k - g / dg;
        if next > 0.0 && next.is_finite() && dg != 0.0 {
            // damp steps that shrink the shape by more than a factor of ten
            k = next.max(k / 10.0);
            continue;
        }
        // Newton left the domain: bracket and fall back to golden section
        let (mut lo, mut hi) = (k, k);
        for _ in 0..200 {
            lo /= 2.0;
            hi *= 2.0;
            if profile(lo) < profile(k) && profile(hi) < profile(k) {
                break;
            }
        }
        k = golden_max(&profile, lo, hi, 400);
        let (g, _) = eval(k);
        if g.abs() < GRADIENT_TOLERANCE {
            return Ok((k, it));
        }
    }
    Err(FitError::FitDiverged {
        family,
        iterations: MAX_ITERATIONS,
        last: vec![k],
    })
}

/// Weibull MLE. The score in the shape `k` is
/// `sum(x^k ln x) / sum(x^k) - 1/k - mean(ln x)`, which increases in `k`.
fn solve_weibull(xs: &[f64]) -> Result<(f64, f64, usize), FitError> {
    let (logs, mean_log, sd_log) = log_stats(xs);
    if sd_log == 0.0 {
        return Err(FitError::Degenerate {
            family: Family::Weibull,
        });
    }
    let max_log = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = logs.len() as f64;
    // moments of exp(k (ln x - max ln x)) to avoid overflow of x^k
    let sums = |k: f64| {
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for &l in &logs {
            let e = (k * (l - max_log)).exp();
            a += e;
            b += e * l;
            c += e * l * l;
        }
        (a, b, c)
    };
    let eval = |k: f64| {
        let (a, b, c) = sums(k);
        let g = b / a - 1.0 / k - mean_log;
        let dg = c / a - (b / a).powi(2) + 1.0 / (k * k);
        (g, dg)
    };
    let profile = |k: f64| {
        let (a, _, _) = sums(k);
        let ln_mean_pow = k * max_log + (a / n).ln();
        k.ln() + (k - 1.0) * mean_log - ln_mean_pow - 1.0
    };
    let init = PI / (6f64.sqrt() * sd_log);
    let (shape, it) = newton_shape(Family::Weibull, init, eval, profile)?;
    let (a, _, _) = sums(shape);
    let scale = (max_log + (a / n).ln() / shape).exp();
    Ok((shape, scale, it))
}

/// Gamma MLE: solve `ln k - digamma(k) = ln(mean x) - mean(ln x)`.
fn solve_gamma(xs: &[f64]) -> Result<(f64, f64, usize), FitError> {
    let (_, mean_log, _) = log_stats(xs);
    let m = mean(xs).unwrap_or(0.0);
    let s = m.ln() - mean_log;
    if !(s > 1e-14) {
        return Err(FitError::Degenerate {
            family: Family::Gamma,
        });
    }
    let eval = |k: f64| {
        let g = k.ln() - special::digamma(k) - s;
        let dg = 1.0 / k - special::trigamma(k);
        (g, dg)
    };
    let profile = |k: f64| (k - 1.0) * mean_log - k - special::ln_gamma(k) - k * (m / k).ln();
    // closed-form approximation of the root
    let init = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
    let (shape, it) = newton_shape(Family::Gamma, init, eval, profile)?;
    Ok((shape, m / shape, it))
}

fn softplus<T: Real>(t: T) -> T {
    if t > T::zero() {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Burr XII profile likelihood in `(ln c, ln scale)` with `k` profiled out:
/// `k = n / sum(ln(1 + (x/scale)^c))`. Values are per sample, constants dropped.
struct BurrProfile<'a> {
    logs: &'a [f64],
}

impl BurrProfile<'_> {
    fn value(&self, u: f64, a: f64) -> f64 {
        let c = u.exp();
        let n = self.logs.len() as f64;
        let (mut s, mut t_sum) = (0.0, 0.0);
        for &l in self.logs {
            let t = c * (l - a);
            s += softplus(t);
            t_sum += t;
        }
        let s_bar = s / n;
        u - s_bar.ln() + t_sum / n - s_bar
    }

    fn gradient(&self, u: f64, a: f64) -> [f64; 2] {
        let c = u.exp();
        let n = self.logs.len() as f64;
        let (mut s, mut t_sum, mut st, mut sig) = (0.0, 0.0, 0.0, 0.0);
        for &l in self.logs {
            let t = c * (l - a);
            let p = logistic(t);
            s += softplus(t);
            t_sum += t;
            st += p * t;
            sig += p;
        }
        let s_bar = s / n;
        let w = 1.0 / s_bar + 1.0;
        [1.0 - w * st / n + t_sum / n, c * (w * sig / n - 1.0)]
    }

    /// Second derivatives `[v_uu, v_ua, v_aa]`.
    fn hessian(&self, u: f64, a: f64) -> [f64; 3] {
        let c = u.exp();
        let n = self.logs.len() as f64;
        let (mut s, mut t_sum, mut pt, mut p_sum, mut qtt, mut qt, mut q_sum) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for &l in self.logs {
            let t = c * (l - a);
            let p = logistic(t);
            let q = p * (1.0 - p);
            s += softplus(t);
            t_sum += t;
            pt += p * t;
            p_sum += p;
            qtt += q * t * t;
            qt += q * t;
            q_sum += q;
        }
        let (s, t, pt, p, qtt, qt, q) = (s / n, t_sum / n, pt / n, p_sum / n, qtt / n, qt / n, q_sum / n);
        let w = 1.0 / s + 1.0;
        let s2 = s * s;
        [
            pt * pt / s2 - w * (qtt + pt) + t,
            c * (w * (qt + p) - p * pt / s2 - 1.0),
            c * c * (p * p / s2 - w * q),
        ]
    }

    fn k(&self, u: f64, a: f64) -> f64 {
        let c = u.exp();
        let s: f64 = self.logs.iter().map(|&l| softplus(c * (l - a))).sum();
        self.logs.len() as f64 / s
    }
}

/// Shape `k` beyond which the Burr fit is treated as its Weibull limit.
const BURR_WEIBULL_LIMIT_K: f64 = 1e6;
/// `k` reported for a fit at the Weibull limit.
const BURR_LIMIT_K: f64 = 1e12;

fn solve_burr(xs: &[f64]) -> Result<(f64, f64, f64, usize), FitError> {
    let (logs, _, sd_log) = log_stats(xs);
    if sd_log == 0.0 {
        return Err(FitError::Degenerate { family: Family::Burr });
    }
    let mut sorted = logs.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let profile = BurrProfile { logs: &logs };
    // log-logistic moments (k = 1): ln x has scale sqrt(3) sd / pi
    let mut u = (PI / (3f64.sqrt() * sd_log)).ln();
    let mut a = median;
    let diverged = |u: f64, a: f64, it: usize| FitError::FitDiverged {
        family: Family::Burr,
        iterations: it,
        last: vec![u.exp(), profile.k(u, a), a.exp()],
    };
    // With k -> infinity and scale -> infinity together the Burr CDF tends to
    // a Weibull with shape c; the likelihood supremum is then that Weibull fit.
    let weibull_limit = |u: f64, a: f64, it: usize| -> Result<(f64, f64, f64, usize), FitError> {
        let (shape, scale, _) = solve_weibull(xs).map_err(|_| diverged(u, a, it))?;
        Ok((shape, BURR_LIMIT_K, scale * BURR_LIMIT_K.powf(1.0 / shape), it))
    };
    for it in 1..=MAX_ITERATIONS {
        let g = profile.gradient(u, a);
        let norm = g[0].hypot(g[1]);
        if !norm.is_finite() {
            return Err(diverged(u, a, it));
        }
        let k = profile.k(u, a);
        if k > BURR_WEIBULL_LIMIT_K {
            return weibull_limit(u, a, it);
        }
        if norm < GRADIENT_TOLERANCE {
            return Ok((u.exp(), k, a.exp(), it));
        }
        let [huu, hua, haa] = profile.hessian(u, a);
        let det = huu * haa - hua * hua;
        let newton = huu < 0.0 && det > 0.0;
        let mut step = if newton {
            // Newton step -H^{-1} g
            [-(haa * g[0] - hua * g[1]) / det, -(-hua * g[0] + huu * g[1]) / det]
        } else {
            [g[0], g[1] * sd_log * sd_log]
        };
        let len = step[0].hypot(step[1] / sd_log);
        if len > 2.0 {
            step = [step[0] * 2.0 / len, step[1] * 2.0 / len];
        }
        if newton && len < 1e-4 {
            // close to the optimum the value gain falls below its rounding
            // noise; judge the step by the score instead
            let (nu, na) = (u + step[0], a + step[1]);
            let next = profile.gradient(nu, na);
            if next[0].hypot(next[1]) < norm {
                u = nu;
                a = na;
                continue;
            }
        }
        let current = profile.value(u, a);
        let slope = g[0] * step[0] + g[1] * step[1];
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let (nu, na) = (u + t * step[0], a + t * step[1]);
            let v = profile.value(nu, na);
            if v.is_finite() && v >= current + 1e-4 * t * slope.max(0.0) {
                u = nu;
                a = na;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            // no ascent possible at double precision: accept if the score is small
            if norm < 1e-6 {
                return Ok((u.exp(), k, a.exp(), it));
            }
            return Err(diverged(u, a, it));
        }
        if u.exp() > 1e8 || !a.is_finite() {
            return Err(diverged(u, a, it));
        }
    }
    Err(diverged(u, a, MAX_ITERATIONS))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinScheme {
    LinearBins,
    /// Geometrically spaced edges; centers are geometric midpoints.
    LogBins,
}

/// Probability-mass histogram.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram<T> {
    pub scheme: BinScheme,
    pub bin_edges: Vec<T>,
    pub bin_centers: Vec<T>,
    pub counts: Vec<usize>,
    pub probabilities: Vec<T>,
}

impl<T: Real> Histogram<T> {
    /// `bin_center<TAB>probability` lines under a header row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("bin_center\tprobability\n");
        for (c, p) in self.bin_centers.iter().zip(&self.probabilities) {
            out.push_str(&format!("{c}\t{p}\n"));
        }
        out
    }
}

/// Histogram over the sample range.
pub fn histogram<T: Real>(samples: &[T], scheme: BinScheme, bin_count: usize) -> Result<Histogram<T>, FitError> {
    if samples.is_empty() {
        return Err(FitError::InsufficientData { needed: 1, got: 0 });
    }
    let lo = samples.iter().copied().fold(T::infinity(), T::min);
    let hi = samples.iter().copied().fold(T::neg_infinity(), T::max);
    let (lo, hi) = if lo < hi {
        (lo, hi)
    } else {
        // single distinct value: one bin centered on it
        match scheme {
            BinScheme::LinearBins => (lo - T::lit(0.5), hi + T::lit(0.5)),
            BinScheme::LogBins => (lo / T::lit(2.0), hi * T::lit(2.0)),
        }
    };
    histogram_in(samples, scheme, bin_count, lo, hi)
}

/// Histogram over `[lo, hi]`; every sample must fall inside the range.
pub fn histogram_in<T: Real>(
    samples: &[T],
    scheme: BinScheme,
    bin_count: usize,
    lo: T,
    hi: T,
) -> Result<Histogram<T>, FitError> {
    if bin_count < 2 {
        return Err(FitError::Domain(format!("need at least 2 bins, got {bin_count}")));
    }
    if samples.is_empty() {
        return Err(FitError::InsufficientData { needed: 1, got: 0 });
    }
    if !(lo < hi) {
        return Err(FitError::Domain(format!("empty histogram range [{lo}, {hi}]")));
    }
    if scheme == BinScheme::LogBins && !(lo > T::zero()) {
        return Err(FitError::Domain("log bins need a positive range".into()));
    }
    let to_axis = |v: T| match scheme {
        BinScheme::LinearBins => v,
        BinScheme::LogBins => v.ln(),
    };
    let from_axis = |v: T| match scheme {
        BinScheme::LinearBins => v,
        BinScheme::LogBins => v.exp(),
    };
    let (a0, a1) = (to_axis(lo), to_axis(hi));
    let nb = T::from_count(bin_count);
    let width = (a1 - a0) / nb;
    let mut bin_edges: Vec<T> = (0..=bin_count)
        .map(|i| from_axis(a0 + width * T::from_count(i)))
        .collect();
    bin_edges[0] = lo;
    bin_edges[bin_count] = hi;
    let bin_centers = bin_edges
        .windows(2)
        .map(|w| match scheme {
            BinScheme::LinearBins => (w[0] + w[1]) / T::lit(2.0),
            BinScheme::LogBins => (w[0] * w[1]).sqrt(),
        })
        .collect();
    let mut counts = vec![0usize; bin_count];
    for &v in samples {
        if !(v >= lo && v <= hi) {
            return Err(FitError::Domain(format!("sample {v} outside histogram range [{lo}, {hi}]")));
        }
        let pos = ((to_axis(v) - a0) / width).floor().to_usize().unwrap_or(0);
        counts[pos.min(bin_count - 1)] += 1;
    }
    let total = T::from_count(samples.len());
    let probabilities = counts.iter().map(|&c| T::from_count(c) / total).collect();
    Ok(Histogram {
        scheme,
        bin_edges,
        bin_centers,
        counts,
        probabilities,
    })
}
