//! Scaling fits, cross ratios and residual diagnostics.
//!
//! Scaling fits are linear in their coefficients and solved by weighted least
//! squares on the normal equations. The cross-ratio power law is fitted by a
//! damped Gauss-Newton iteration from many starting points.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Solve, SVD};
use serde::{Deserialize, Serialize};

use crate::engine::TrajectoryStats;
use crate::{Error, Result};

/// Smallest accepted ratio of extreme singular values of the scaled design.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `gamma L + (c/3) ln L + beta`.
    EntropyAnsatz,
    /// `gamma L + (c/2) ln L + beta`.
    NegativityAnsatz,
    /// `gamma L + beta`.
    LinearOnly,
    /// `c ln L + beta`.
    LogOnly,
}

impl FitModel {
    /// Divisor `k` of the central charge in the log coefficient `c / k`.
    pub fn log_divisor(self) -> f64 {
        match self {
            FitModel::EntropyAnsatz => 3.0,
            FitModel::NegativityAnsatz => 2.0,
            FitModel::LinearOnly | FitModel::LogOnly => 1.0,
        }
    }

    fn has_linear(self) -> bool {
        self != FitModel::LogOnly
    }

    fn has_log(self) -> bool {
        self != FitModel::LinearOnly
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub l: f64,
    pub value: f64,
    pub weight: f64,
}

impl FitPoint {
    pub fn new(l: f64, value: f64) -> Self {
        FitPoint { l, value, weight: 1.0 }
    }

    /// Weight `1 / width^2` from the confidence interval; unit weight when
    /// the interval has zero width.
    pub fn from_stats(l: usize, stats: &TrajectoryStats) -> Self {
        let w = stats.ci_width();
        FitPoint { l: l as f64, value: stats.mean, weight: if w > 0.0 { 1.0 / (w * w) } else { 1.0 } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitRange {
    pub l_min: usize,
    pub l_max: usize,
}

impl FitRange {
    pub fn new(l_min: usize, l_max: usize) -> Result<Self> {
        if l_min >= l_max {
            return Err(Error::Fit(format!("empty fit range [{l_min}, {l_max}]")));
        }
        Ok(FitRange { l_min, l_max })
    }

    pub fn contains(&self, l: f64) -> bool {
        l >= self.l_min as f64 && l <= self.l_max as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub gamma: f64,
    /// Central charge: the log coefficient times [`FitModel::log_divisor`].
    pub c: f64,
    pub beta: f64,
    pub l_min: usize,
    pub l_max: usize,
    /// `sum (y - fit)^2` over the points in range, unweighted.
    pub rss: f64,
    pub weighted: bool,
    pub n_points: usize,
}

impl FitResult {
    pub fn log_coefficient(&self) -> f64 {
        self.c / self.model.log_divisor()
    }

    pub fn predict(&self, l: f64) -> f64 {
        self.gamma * l + self.log_coefficient() * l.ln() + self.beta
    }
}

fn in_range(points: &[FitPoint], range: FitRange) -> Result<Vec<FitPoint>> {
    let sel: Vec<FitPoint> = points.iter().copied().filter(|p| range.contains(p.l)).collect();
    for p in &sel {
        if !(p.l > 0.0 && p.value.is_finite() && p.weight.is_finite() && p.weight > 0.0) {
            return Err(Error::Fit(format!("invalid fit point {p:?}")));
        }
    }
    Ok(sel)
}

/// Weighted least squares for `model` on the points inside `range`.
pub fn fit_scaling(points: &[FitPoint], range: FitRange, model: FitModel) -> Result<FitResult> {
    let pts = in_range(points, range)?;
    let mut cols: Vec<Box<dyn Fn(f64) -> f64>> = Vec::new();
    if model.has_linear() {
        cols.push(Box::new(|l| l));
    }
    if model.has_log() {
        cols.push(Box::new(|l: f64| l.ln()));
    }
    cols.push(Box::new(|_| 1.0));
    let k = cols.len();
    if pts.len() < k {
        return Err(Error::Fit(format!("{} points in range for {k} coefficients", pts.len())));
    }
    let n = pts.len();
    let x = Array2::from_shape_fn((n, k), |(i, j)| cols[j](pts[i].l));
    let sw: Vec<f64> = pts.iter().map(|p| p.weight.sqrt()).collect();
    // scale columns to unit norm before the rank check and the solve
    let xw = Array2::from_shape_fn((n, k), |(i, j)| x[[i, j]] * sw[i]);
    let scale: Vec<f64> = (0..k).map(|j| xw.column(j).dot(&xw.column(j)).sqrt()).collect();
    if scale.contains(&0.0) {
        return Err(Error::Fit("zero design column".into()));
    }
    let xs = Array2::from_shape_fn((n, k), |(i, j)| xw[[i, j]] / scale[j]);
    let (_, sv, _) = xs.svd(false, false)?;
    let (smax, smin) = (sv[0], sv[sv.len() - 1]);
    if smin <= RANK_TOL * smax {
        return Err(Error::Fit(format!(
            "rank-deficient design over L in [{}, {}] (singular ratio {:.2e})",
            range.l_min,
            range.l_max,
            smin / smax
        )));
    }
    let yw = Array1::from_shape_fn(n, |i| pts[i].value * sw[i]);
    let normal = xs.t().dot(&xs);
    let rhs = xs.t().dot(&yw);
    let sol = normal.solve(&rhs)?;
    let coef: Vec<f64> = (0..k).map(|j| sol[j] / scale[j]).collect();
    let mut it = coef.iter().copied();
    let gamma = if model.has_linear() { it.next().unwrap() } else { 0.0 };
    let log_coef = if model.has_log() { it.next().unwrap() } else { 0.0 };
    let beta = it.next().unwrap();
    let mut fit = FitResult {
        model,
        gamma,
        c: log_coef * model.log_divisor(),
        beta,
        l_min: range.l_min,
        l_max: range.l_max,
        rss: 0.0,
        weighted: pts.iter().any(|p| p.weight != pts[0].weight),
        n_points: n,
    };
    fit.rss = pts.iter().map(|p| (p.value - fit.predict(p.l)).powi(2)).sum();
    Ok(fit)
}

/// `S = gamma L + (c/3) ln L + beta`.
pub fn fit_entropy_scaling(points: &[FitPoint], range: FitRange) -> Result<FitResult> {
    fit_scaling(points, range, FitModel::EntropyAnsatz)
}

/// `E = gamma L + (c/2) ln L + beta`.
pub fn fit_negativity_scaling(points: &[FitPoint], range: FitRange) -> Result<FitResult> {
    fit_scaling(points, range, FitModel::NegativityAnsatz)
}

/// `(gamma L_max, (c/k) ln L_max)`.
pub fn compare_contributions(fit: &FitResult) -> (f64, f64) {
    let l = fit.l_max as f64;
    (fit.gamma * l, fit.log_coefficient() * l.ln())
}

/// `t2` beyond which the linear contribution stays at or above the
/// logarithmic one, interpolated linearly across the last sign change.
/// `None` when the last scan value is still logarithm-dominated. `fits`
/// must be sorted by `t2`.
pub fn linear_onset(fits: &[(f64, FitResult)]) -> Option<f64> {
    let gaps: Vec<(f64, f64)> = fits
        .iter()
        .map(|(t2, fit)| {
            let (lin, log) = compare_contributions(fit);
            (*t2, lin - log)
        })
        .collect();
    match gaps.iter().rposition(|&(_, g)| g < 0.0) {
        None => gaps.first().map(|&(t2, _)| t2),
        Some(i) if i + 1 == gaps.len() => None,
        Some(i) => {
            let ((t0, g0), (t1, g1)) = (gaps[i], gaps[i + 1]);
            Some(t0 + (t1 - t0) * (-g0) / (g1 - g0))
        }
    }
}

/// Chord length `L/pi sin(pi |x| / L)` on a ring of `L` sites.
pub fn chord(l: f64, x: f64) -> f64 {
    l / std::f64::consts::PI * (std::f64::consts::PI * x.abs() / l).sin()
}

/// `eta = x12 x34 / (x13 x24)` for four boundaries visited in order around the ring.
pub fn cross_ratio(l: f64, x1: f64, x2: f64, x3: f64, x4: f64) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::param("ring size must be positive"));
    }
    let xs = [x1, x2, x3, x4];
    let wrap = |x: f64| x.rem_euclid(l);
    for i in 0..4 {
        for j in (i + 1)..4 {
            let gap = wrap(xs[j] - xs[i]);
            if gap < 1e-12 || l - gap < 1e-12 {
                return Err(Error::param(format!("coincident boundaries {} and {}", xs[i], xs[j])));
            }
        }
    }
    let turn = |v: [f64; 4]| (0..4).map(|k| wrap(v[(k + 1) % 4] - v[k])).sum::<f64>();
    let forward = turn(xs);
    let backward = turn([x4, x3, x2, x1]);
    if (forward - l).abs() > 1e-9 && (backward - l).abs() > 1e-9 {
        return Err(Error::param("boundaries are not in ring order"));
    }
    let d = |a: f64, b: f64| chord(l, b - a);
    Ok(d(x1, x2) * d(x3, x4) / (d(x1, x3) * d(x2, x4)))
}

/// Two disjoint arcs `A1 = [x1, x2)`, `A2 = [x3, x4)` with site boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcPair {
    pub x1: usize,
    pub x2: usize,
    pub x3: usize,
    pub x4: usize,
}

impl ArcPair {
    pub fn a1(&self) -> Vec<usize> {
        (self.x1..self.x2).collect()
    }

    pub fn a2(&self) -> Vec<usize> {
        (self.x3..self.x4).collect()
    }

    pub fn eta(&self, l: usize) -> f64 {
        cross_ratio(l as f64, self.x1 as f64, self.x2 as f64, self.x3 as f64, self.x4 as f64)
            .expect("arc pairs have distinct ordered boundaries")
    }
}

/// All arc pairs with `x1 = 0 < x2 < x3 < x4 < L`; translations of these
/// cover every contiguous pair on the ring.
pub fn enumerate_arc_pairs(l: usize) -> Vec<ArcPair> {
    let mut out = Vec::new();
    for x2 in 1..l {
        for x3 in (x2 + 1)..l {
            for x4 in (x3 + 1)..l {
                out.push(ArcPair { x1: 0, x2, x3, x4 });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// `c d`.
    pub delta: f64,
    /// `a b^d`, the small-`eta` amplitude of `I ~ a b^d eta^(c d)`.
    pub amplitude: f64,
    pub rss: f64,
    pub converged_starts: usize,
}

const LM_MAX_ITER: usize = 2000;

fn eta_model(theta: &[f64; 4], eta: f64) -> f64 {
    let [a, b, c, d] = theta.map(f64::exp);
    a * (b * eta.powf(c)).exp_m1().powf(d)
}

fn eta_cost(theta: &[f64; 4], pts: &[(f64, f64)]) -> f64 {
    let s: f64 = pts.iter().map(|&(x, y)| (y - eta_model(theta, x)).powi(2)).sum();
    if s.is_finite() {
        s
    } else {
        f64::INFINITY
    }
}

/// Residuals and Jacobian in the log-parameters `(ln a, ln b, ln c, ln d)`.
fn eta_jacobian(theta: &[f64; 4], pts: &[(f64, f64)]) -> Option<(Vec<f64>, Vec<[f64; 4]>)> {
    let [_, b, c, d] = theta.map(f64::exp);
    let mut r = Vec::with_capacity(pts.len());
    let mut jac = Vec::with_capacity(pts.len());
    for &(x, y) in pts {
        let u = x.powf(c);
        let g = (b * u).exp_m1();
        let f = eta_model(theta, x);
        // b u e^{bu} / (e^{bu} - 1), tending to 1 for small b u
        let ratio = if b * u < 1e-8 { 1.0 + 0.5 * b * u } else { b * u * (b * u).exp() / g };
        let row = [f, f * d * ratio, f * d * ratio * c * x.ln(), f * d * g.ln()];
        if !row.iter().all(|v| v.is_finite()) || !f.is_finite() {
            return None;
        }
        r.push(y - f);
        jac.push(row);
    }
    Some((r, jac))
}

fn solve4(m: [[f64; 4]; 4], v: [f64; 4]) -> Option<[f64; 4]> {
    let a = Array2::from_shape_fn((4, 4), |(i, j)| m[i][j]);
    let b = Array1::from(v.to_vec());
    let x = a.solve(&b).ok()?;
    let out = [x[0], x[1], x[2], x[3]];
    out.iter().all(|z| z.is_finite()).then_some(out)
}

/// Levenberg-Marquardt from one start; returns the final parameters and
/// cost when the relative cost change has settled.
fn levenberg_marquardt(mut theta: [f64; 4], pts: &[(f64, f64)]) -> Option<([f64; 4], f64)> {
    let mut cost = eta_cost(&theta, pts);
    if !cost.is_finite() {
        return None;
    }
    let mut lambda = 1e-3;
    let scale: f64 = pts.iter().map(|p| p.1 * p.1).sum::<f64>().max(f64::MIN_POSITIVE);
    for _ in 0..LM_MAX_ITER {
        let (r, jac) = eta_jacobian(&theta, pts)?;
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        for (row, ri) in jac.iter().zip(&r) {
            for i in 0..4 {
                jtr[i] += row[i] * ri;
                for j in 0..4 {
                    jtj[i][j] += row[i] * row[j];
                }
            }
        }
        let mut accepted = false;
        while lambda < 1e12 {
            let mut m = jtj;
            for (i, row) in m.iter_mut().enumerate() {
                row[i] += lambda * jtj[i][i].max(1e-12);
            }
            if let Some(step) = solve4(m, jtr) {
                let trial = [theta[0] + step[0], theta[1] + step[1], theta[2] + step[2], theta[3] + step[3]];
                let tc = eta_cost(&trial, pts);
                if tc < cost {
                    let rel = (cost - tc) / scale;
                    theta = trial;
                    cost = tc;
                    lambda = (lambda / 10.0).max(1e-12);
                    accepted = true;
                    if rel < 1e-15 {
                        return Some((theta, cost));
                    }
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no descent direction left: a local minimum up to roundoff
            return Some((theta, cost));
        }
    }
    Some((theta, cost))
}

/// Fits `I(eta) = a (exp(b eta^c) - 1)^d` and reports `Delta = c d`.
///
/// Starts: `(a, b)` on a 4 x 4 logarithmic grid, `(c, d)` in `{1/2, 1, 2}^2`.
pub fn fit_eta_powerlaw(points: &[(f64, f64)]) -> Result<EtaFit> {
    if points.len() < 6 {
        return Err(Error::Fit(format!("{} points; at least 6 are required", points.len())));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && x <= 1.0 + 1e-12) || !y.is_finite()) {
        return Err(Error::Fit("eta must lie in (0, 1] and I must be finite".into()));
    }
    let (lo, hi) = points.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    if hi / lo < 10.0 {
        return Err(Error::Fit(format!("eta spans [{lo:.3e}, {hi:.3e}], less than a decade")));
    }
    let grid_ab = [0.1f64, 1.0, 10.0, 100.0];
    let grid_cd = [0.5f64, 1.0, 2.0];
    let mut best: Option<([f64; 4], f64)> = None;
    let mut converged = 0;
    for &a in &grid_ab {
        for &b in &grid_ab {
            for &c in &grid_cd {
                for &d in &grid_cd {
                    let start = [a.ln(), b.ln(), c.ln(), d.ln()];
                    if let Some((theta, cost)) = levenberg_marquardt(start, points) {
                        converged += 1;
                        if best.is_none_or(|(_, bc)| cost < bc) {
                            best = Some((theta, cost));
                        }
                    }
                }
            }
        }
    }
    let (theta, rss) = best.ok_or_else(|| Error::Fit("no start converged for the eta power law".into()))?;
    let [a, b, c, d] = theta.map(f64::exp);
    Ok(EtaFit { a, b, c, d, delta: c * d, amplitude: a * b.powf(d), rss, converged_starts: converged })
}

/// Slope of `ln I` against `ln eta` over points with `eta <= eta_max`.
pub fn loglog_slope(points: &[(f64, f64)], eta_max: f64) -> Result<f64> {
    let sel: Vec<(f64, f64)> =
        points.iter().filter(|p| p.0 <= eta_max && p.0 > 0.0 && p.1 > 0.0).map(|p| (p.0.ln(), p.1.ln())).collect();
    if sel.len() < 2 {
        return Err(Error::Fit("fewer than two positive points below the cutoff".into()));
    }
    let n = sel.len() as f64;
    let mx = sel.iter().map(|p| p.0).sum::<f64>() / n;
    let my = sel.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = sel.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all eta values coincide".into()));
    }
    Ok(sel.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub linear: FitResult,
    pub log: FitResult,
    /// `sum (data - fit)` for each model.
    pub total_linear: f64,
    pub total_log: f64,
    pub residuals_linear: Vec<(f64, f64)>,
    pub residuals_log: Vec<(f64, f64)>,
    /// The model with the smaller `rss`.
    pub preferred: FitModel,
}

/// Linear-only against log-only fits over `range`.
pub fn residual_comparison(points: &[FitPoint], range: FitRange) -> Result<ResidualReport> {
    let linear = fit_scaling(points, range, FitModel::LinearOnly)?;
    let log = fit_scaling(points, range, FitModel::LogOnly)?;
    let pts = in_range(points, range)?;
    let res = |f: &FitResult| -> Vec<(f64, f64)> { pts.iter().map(|p| (p.l, p.value - f.predict(p.l))).collect() };
    let residuals_linear = res(&linear);
    let residuals_log = res(&log);
    Ok(ResidualReport {
        total_linear: residuals_linear.iter().map(|r| r.1).sum(),
        total_log: residuals_log.iter().map(|r| r.1).sum(),
        preferred: if log.rss < linear.rss { FitModel::LogOnly } else { FitModel::LinearOnly },
        linear,
        log,
        residuals_linear,
        residuals_log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth(f: impl Fn(f64) -> f64, ls: &[f64]) -> Vec<FitPoint> {
        ls.iter().map(|&l| FitPoint::new(l, f(l))).collect()
    }

    fn sizes() -> Vec<f64> {
        (1..=16).map(|k| 8.0 * k as f64).collect()
    }

    #[test]
    fn entropy_ansatz_is_recovered() {
        let pts = synth(|l| 0.02 * l + 0.5 * l.ln() + 1.0, &sizes());
        let f = fit_entropy_scaling(&pts, FitRange::new(8, 128).unwrap()).unwrap();
        assert!((f.gamma - 0.02).abs() < 1e-6);
        assert!((f.c - 1.5).abs() < 1e-6);
        assert!((f.beta - 1.0).abs() < 1e-6);
        assert!(f.rss < 1e-20);
    }

    #[test]
    fn negativity_ansatz_is_recovered() {
        let pts = synth(|l| 0.3 * l.ln() + 0.1, &sizes());
        let f = fit_negativity_scaling(&pts, FitRange::new(8, 128).unwrap()).unwrap();
        assert!((f.c - 0.6).abs() < 1e-6 && f.gamma.abs() < 1e-6);
    }

    #[test]
    fn constant_data_gives_zero_slopes() {
        let pts = synth(|_| 2.5, &sizes());
        let f = fit_entropy_scaling(&pts, FitRange::new(8, 128).unwrap()).unwrap();
        assert!(f.gamma.abs() < 1e-9 && f.c.abs() < 1e-9 && (f.beta - 2.5).abs() < 1e-9);
    }

    #[test]
    fn range_selects_points() {
        let pts = synth(|l| l, &sizes());
        let f = fit_scaling(&pts, FitRange::new(32, 80).unwrap(), FitModel::LinearOnly).unwrap();
        assert_eq!(f.n_points, 7);
        assert_eq!((f.l_min, f.l_max), (32, 80));
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let pts = synth(|l| l, &[16.0, 16.0, 16.0, 16.0]);
        assert!(matches!(fit_entropy_scaling(&pts, FitRange::new(8, 32).unwrap()), Err(Error::Fit(_))));
        let two = synth(|l| l, &[16.0, 32.0]);
        assert!(fit_entropy_scaling(&two, FitRange::new(8, 32).unwrap()).is_err());
        assert!(FitRange::new(10, 10).is_err());
    }

    #[test]
    fn equal_weights_match_unweighted() {
        let ls = sizes();
        let f = |l: f64| 0.01 * l + 0.3 * l.ln() + (l * 0.7).sin() * 0.05;
        let a = fit_entropy_scaling(&synth(f, &ls), FitRange::new(8, 128).unwrap()).unwrap();
        let w: Vec<FitPoint> = ls.iter().map(|&l| FitPoint { l, value: f(l), weight: 7.0 }).collect();
        let b = fit_entropy_scaling(&w, FitRange::new(8, 128).unwrap()).unwrap();
        assert!((a.gamma - b.gamma).abs() < 1e-12 && (a.c - b.c).abs() < 1e-10);
    }

    #[test]
    fn refit_is_idempotent() {
        let ls = sizes();
        let raw = synth(|l| 0.03 * l + (l * 0.3).cos(), &ls);
        let r = FitRange::new(8, 128).unwrap();
        let f = fit_entropy_scaling(&raw, r).unwrap();
        let g = fit_entropy_scaling(&synth(|l| f.predict(l), &ls), r).unwrap();
        assert!((f.gamma - g.gamma).abs() < 1e-9 && (f.c - g.c).abs() < 1e-9 && (f.beta - g.beta).abs() < 1e-9);
    }

    #[test]
    fn contributions() {
        let pts = synth(|l| 0.9 * l.ln(), &sizes());
        let f = fit_entropy_scaling(&pts, FitRange::new(8, 128).unwrap()).unwrap();
        let (lin, log) = compare_contributions(&f);
        assert!(lin.abs() < 1e-6 && log > 4.0);
    }

    #[test]
    fn onset_interpolates() {
        let mk = |gamma: f64| FitResult {
            model: FitModel::LogOnly,
            gamma,
            c: 1.0,
            beta: 0.0,
            l_min: 1,
            l_max: 100,
            rss: 0.0,
            weighted: false,
            n_points: 3,
        };
        let log = 100f64.ln();
        let fits = vec![(1.0, mk(0.0)), (2.0, mk(log / 100.0 * 2.0))];
        assert!((linear_onset(&fits).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(linear_onset(&fits[..1]), None);
        let noisy = vec![(0.5, mk(log / 100.0 * 1.5)), (1.0, mk(0.0)), (2.0, mk(log / 100.0 * 2.0))];
        assert!((linear_onset(&noisy).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(linear_onset(&fits[1..]), Some(2.0));
    }

    #[test]
    fn cross_ratio_examples() {
        assert!((cross_ratio(8.0, 0.0, 2.0, 4.0, 6.0).unwrap() - 0.5).abs() < 1e-15);
        let e0 = cross_ratio(16.0, 0.0, 3.0, 8.0, 11.0).unwrap();
        for s in 1..16 {
            let s = s as f64;
            let e = cross_ratio(16.0, s, 3.0 + s, 8.0 + s, 11.0 + s).unwrap();
            assert!((e - e0).abs() < 1e-12);
            let r = cross_ratio(16.0, -s, -3.0 - s, -8.0 - s, -11.0 - s).unwrap();
            assert!((r - e0).abs() < 1e-12);
        }
        let tiny = cross_ratio(100.0, 0.0, 1e-3, 50.0, 50.0 + 1e-3).unwrap();
        assert!(tiny < 1e-8);
        assert!(cross_ratio(8.0, 0.0, 0.0, 4.0, 6.0).is_err());
        assert!(cross_ratio(8.0, 0.0, 4.0, 2.0, 6.0).is_err());
    }

    #[test]
    fn arc_pairs_have_valid_cross_ratios() {
        let pairs = enumerate_arc_pairs(8);
        assert_eq!(pairs.len(), 35);
        for p in pairs {
            let e = p.eta(8);
            assert!(e > 0.0 && e <= 1.0 + 1e-12);
        }
    }

    fn eta_samples(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..24).map(|k| 10f64.powf(-2.0 + 2.0 * k as f64 / 23.0)).map(|x| (x, f(x))).collect()
    }

    #[test]
    fn eta_fit_recovers_linear_power() {
        let pts = eta_samples(|x| x);
        let fit = fit_eta_powerlaw(&pts).unwrap();
        assert!((fit.delta - 1.0).abs() < 1e-2, "delta {}", fit.delta);
    }

    #[test]
    fn eta_fit_recovers_square_root() {
        let pts = eta_samples(|x| 3.0 * x.sqrt());
        let fit = fit_eta_powerlaw(&pts).unwrap();
        assert!((fit.delta - 0.5).abs() < 1e-2, "delta {}", fit.delta);
        let slope = loglog_slope(&pts, 0.1).unwrap();
        assert!((fit.delta - slope).abs() < 0.02 * slope);
    }

    #[test]
    fn eta_fit_recovers_model_curve() {
        let pts = eta_samples(|x| 0.4 * (2.0 * x.powf(0.8)).exp_m1().powf(1.5));
        let fit = fit_eta_powerlaw(&pts).unwrap();
        assert!((fit.delta - 1.2).abs() < 1e-3, "delta {}", fit.delta);
    }

    #[test]
    fn eta_fit_preconditions() {
        assert!(fit_eta_powerlaw(&eta_samples(|x| x)[..5]).is_err());
        let narrow: Vec<(f64, f64)> = (0..8).map(|k| (0.5 + 0.05 * k as f64, 1.0)).collect();
        assert!(fit_eta_powerlaw(&narrow).is_err());
    }

    #[test]
    fn residual_comparison_prefers_generating_model() {
        let r = FitRange::new(8, 128).unwrap();
        let lin = residual_comparison(&synth(|l| 0.1 * l + 2.0, &sizes()), r).unwrap();
        assert_eq!(lin.preferred, FitModel::LinearOnly);
        assert!(lin.linear.rss < 1e-20 && lin.log.rss > 1e-3);
        let log = residual_comparison(&synth(|l| 0.7 * l.ln() - 1.0, &sizes()), r).unwrap();
        assert_eq!(log.preferred, FitModel::LogOnly);
        assert!(log.log.rss < 1e-20 && log.linear.rss > 1e-3);
        // ordinary least squares with an intercept leaves no signed total
        assert!(log.total_linear.abs() < 1e-9);
    }
}
