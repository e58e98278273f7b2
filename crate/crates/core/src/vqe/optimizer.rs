//! Gradient-free minimisers.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    NelderMead,
    Spsa,
    Cobyla,
}

/// SPSA gain sequences `a_k = a / (k + 1 + stability)^alpha`,
/// `c_k = c / (k + 1)^gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpsaGains {
    pub a: f64,
    pub c: f64,
    pub stability: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for SpsaGains {
    fn default() -> Self {
        SpsaGains {
            a: 0.2,
            c: 0.1,
            stability: 10.0,
            alpha: 0.602,
            gamma: 0.101,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub max_evaluations: usize,
    /// Final simplex size (Nelder-Mead) or trust radius (COBYLA).
    pub tolerance: f64,
    /// Initial simplex size or trust radius.
    pub initial_step: f64,
    pub seed: u64,
    pub spsa: SpsaGains,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Cobyla,
            max_evaluations: 500,
            tolerance: 1e-6,
            initial_step: 0.5,
            seed: 0,
            spsa: SpsaGains::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn new(kind: OptimizerKind) -> Self {
        OptimizerConfig {
            kind,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_evaluations < 1 {
            return Err(Error::Config("max_evaluations must be at least 1".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        if self.initial_step.is_nan() || self.initial_step <= 0.0 {
            return Err(Error::Config("initial_step must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of one minimisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeResult {
    pub best_params: Vec<f64>,
    pub best_energy: f64,
    /// `(evaluation index, energy)` for every objective call.
    pub history: Vec<(usize, f64)>,
    pub evaluations_used: usize,
}

enum Stop {
    Budget,
    Failed(Error),
}

impl From<Error> for Stop {
    fn from(e: Error) -> Self {
        Stop::Failed(e)
    }
}

type Step<T> = std::result::Result<T, Stop>;

/// Counts evaluations, records history and remembers the best point.
struct Tracker<F> {
    objective: F,
    budget: usize,
    history: Vec<(usize, f64)>,
    best: Option<(Vec<f64>, f64)>,
}

impl<F: FnMut(&[f64]) -> Result<f64>> Tracker<F> {
    fn eval(&mut self, x: &[f64]) -> Step<f64> {
        if self.history.len() >= self.budget {
            return Err(Stop::Budget);
        }
        let v = (self.objective)(x)?;
        if !v.is_finite() {
            return Err(Stop::Failed(Error::NonFinite {
                value: v,
                params: x.to_vec(),
            }));
        }
        self.history.push((self.history.len(), v));
        if self.best.as_ref().is_none_or(|(_, b)| v < *b) {
            self.best = Some((x.to_vec(), v));
        }
        Ok(v)
    }
}

/// Minimises an infallible objective.
pub fn minimize<F>(mut objective: F, initial: &[f64], config: &OptimizerConfig) -> Result<VqeResult>
where
    F: FnMut(&[f64]) -> f64,
{
    minimize_fallible(|x| Ok(objective(x)), initial, config)
}

/// Minimises an objective that may fail; the first error aborts the run.
pub fn minimize_fallible<F>(objective: F, initial: &[f64], config: &OptimizerConfig) -> Result<VqeResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    config.validate()?;
    if initial.is_empty() {
        return Err(Error::Config("cannot optimise zero parameters".into()));
    }
    let mut t = Tracker {
        objective,
        budget: config.max_evaluations,
        history: Vec::new(),
        best: None,
    };
    let outcome = match config.kind {
        OptimizerKind::NelderMead => nelder_mead(&mut t, initial, config),
        OptimizerKind::Spsa => spsa(&mut t, initial, config),
        OptimizerKind::Cobyla => cobyla(&mut t, initial, config),
    };
    if let Err(Stop::Failed(e)) = outcome {
        return Err(e);
    }
    let (best_params, best_energy) = t.best.expect("at least one evaluation happened");
    Ok(VqeResult {
        best_params,
        best_energy,
        evaluations_used: t.history.len(),
        history: t.history,
    })
}

fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn nelder_mead<F: FnMut(&[f64]) -> Result<f64>>(
    t: &mut Tracker<F>,
    x0: &[f64],
    cfg: &OptimizerConfig,
) -> Step<()> {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), t.eval(x0)?));
    for i in 0..d {
        let mut x = x0.to_vec();
        x[i] += cfg.initial_step;
        let f = t.eval(&x)?;
        simplex.push((x, f));
    }
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| dist_inf(x, &simplex[0].0))
            .fold(0.0, f64::max);
        if size <= cfg.tolerance {
            return Ok(());
        }
        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|(x, _)| x[j]).sum::<f64>() / d as f64)
            .collect();
        let along = |s: f64, worst: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(worst)
                .map(|(c, w)| c + s * (c - w))
                .collect()
        };
        let worst = simplex[d].0.clone();
        let (f_best, f_second, f_worst) = (simplex[0].1, simplex[d - 1].1, simplex[d].1);

        let xr = along(1.0, &worst);
        let fr = t.eval(&xr)?;
        if fr < f_best {
            let xe = along(2.0, &worst);
            let fe = t.eval(&xe)?;
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < f_second {
            simplex[d] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < f_worst {
            let xc = along(0.5, &worst);
            let fc = t.eval(&xc)?;
            (xc, fc)
        } else {
            let xc = along(-0.5, &worst);
            let fc = t.eval(&xc)?;
            (xc, fc)
        };
        if fc < f_worst.min(fr) {
            simplex[d] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = best
                .iter()
                .zip(&vertex.0)
                .map(|(b, v)| b + 0.5 * (v - b))
                .collect();
            let f = t.eval(&x)?;
            *vertex = (x, f);
        }
    }
}

fn spsa<F: FnMut(&[f64]) -> Result<f64>>(
    t: &mut Tracker<F>,
    x0: &[f64],
    cfg: &OptimizerConfig,
) -> Step<()> {
    let g = cfg.spsa;
    let mut rng = seed::rng(seed::derive(cfg.seed, &[0x5B5A]));
    let mut x = x0.to_vec();
    t.eval(&x)?;
    let mut k = 0usize;
    loop {
        let ak = g.a / (k as f64 + 1.0 + g.stability).powf(g.alpha);
        let ck = g.c / (k as f64 + 1.0).powf(g.gamma);
        let delta: Vec<f64> = x
            .iter()
            .map(|_| if rng.next_u32() & 1 == 1 { 1.0 } else { -1.0 })
            .collect();
        let plus: Vec<f64> = x.iter().zip(&delta).map(|(v, d)| v + ck * d).collect();
        let minus: Vec<f64> = x.iter().zip(&delta).map(|(v, d)| v - ck * d).collect();
        let fp = t.eval(&plus)?;
        let fm = t.eval(&minus)?;
        let slope = (fp - fm) / (2.0 * ck);
        for (v, d) in x.iter_mut().zip(&delta) {
            *v -= ak * slope * d;
        }
        k += 1;
    }
}

/// Solves `a x = b` (row-major `n x n`) by partial pivoting. Returns `None`
/// when a pivot falls below `tiny`.
fn solve(mut a: Vec<f64>, mut b: Vec<f64>, n: usize, tiny: f64) -> Option<Vec<f64>> {
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[piv * n + col].abs() <= tiny {
            return None;
        }
        if piv != col {
            for j in 0..n {
                a.swap(piv * n + j, col * n + j);
            }
            b.swap(piv, col);
        }
        for r in col + 1..n {
            let f = a[r * n + col] / a[col * n + col];
            for j in col..n {
                a[r * n + j] -= f * a[col * n + j];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|j| a[r * n + j] * x[j]).sum();
        x[r] = (b[r] - s) / a[r * n + r];
    }
    Some(x)
}

fn abs_det(mut a: Vec<f64>, n: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..n {
        let Some(piv) = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
        else {
            return 0.0;
        };
        let p = a[piv * n + col];
        if p == 0.0 {
            return 0.0;
        }
        if piv != col {
            for j in 0..n {
                a.swap(piv * n + j, col * n + j);
            }
        }
        det *= p.abs();
        for r in col + 1..n {
            let f = a[r * n + col] / p;
            for j in col..n {
                a[r * n + j] -= f * a[col * n + j];
            }
        }
    }
    det
}

/// Edge matrix of the simplex relative to vertex `base`, skipping `base`.
fn edges(points: &[(Vec<f64>, f64)], base: usize) -> Vec<f64> {
    points
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != base)
        .flat_map(|(_, (x, _))| x.iter().zip(&points[base].0).map(|(a, b)| a - b))
        .collect()
}

/// `|det|` of the edge matrix divided by the product of edge lengths: 1
/// for an orthogonal simplex, 0 for a degenerate one.
fn poisedness(points: &[(Vec<f64>, f64)], base: usize, d: usize) -> f64 {
    let e = edges(points, base);
    let lengths: f64 = e.chunks(d).map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).product();
    if lengths == 0.0 {
        return 0.0;
    }
    abs_det(e, d) / lengths
}

const MIN_POISEDNESS: f64 = 1e-2;

/// Linear-model trust-region search. The objective is interpolated by an
/// affine function on a simplex of `d + 1` points and a step of length
/// `delta` is taken down the model gradient. `delta` doubles after steps
/// that achieve most of the predicted decrease and halves after poor ones,
/// down to the resolution `rho`; when a step fails at `delta = rho` the
/// resolution halves, until it reaches the tolerance. Vertices farther than
/// `2 delta` from the best point, or a flattened simplex, trigger a
/// geometry step along the coordinate axis that maximises the simplex
/// volume.
fn cobyla<F: FnMut(&[f64]) -> Result<f64>>(
    t: &mut Tracker<F>,
    x0: &[f64],
    cfg: &OptimizerConfig,
) -> Step<()> {
    let d = x0.len();
    let mut rho = cfg.initial_step;
    let mut delta = rho;
    let delta_max = 16.0 * cfg.initial_step;
    let mut pts: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    pts.push((x0.to_vec(), t.eval(x0)?));
    for i in 0..d {
        let mut x = x0.to_vec();
        x[i] += rho;
        let f = t.eval(&x)?;
        pts.push((x, f));
    }

    // replaces a vertex other than `b` with `x`, keeping the fattest simplex
    let insert = |pts: &mut Vec<(Vec<f64>, f64)>, b: usize, x: Vec<f64>, f: f64, only: Option<usize>| {
        let mut pick = (f64::NEG_INFINITY, usize::MAX);
        for j in (0..=d).filter(|&j| j != b && only.is_none_or(|o| o == j)) {
            let mut cand = pts.clone();
            cand[j] = (x.clone(), f);
            let best = if f < pts[b].1 { j } else { b };
            let vol = poisedness(&cand, best, d);
            if vol > pick.0 {
                pick = (vol, j);
            }
        }
        pts[pick.1] = (x, f);
    };

    loop {
        if rho <= cfg.tolerance {
            return Ok(());
        }
        let b = (0..=d).min_by(|&i, &j| pts[i].1.total_cmp(&pts[j].1)).unwrap();
        let xb = pts[b].0.clone();
        let fb = pts[b].1;

        let far = (0..=d)
            .filter(|&i| i != b)
            .max_by(|&i, &j| dist2(&pts[i].0, &xb).total_cmp(&dist2(&pts[j].0, &xb)))
            .unwrap();
        let too_far = dist2(&pts[far].0, &xb) > 2.0 * delta;
        let gradient = if too_far || poisedness(&pts, b, d) < MIN_POISEDNESS {
            None
        } else {
            let rhs: Vec<f64> = (0..=d).filter(|&i| i != b).map(|i| pts[i].1 - fb).collect();
            solve(edges(&pts, b), rhs, d, 0.0)
        };

        let Some(grad) = gradient else {
            let target = if too_far { Some(far) } else { None };
            let mut best_axis: Option<(f64, usize, Vec<f64>)> = None;
            for j in (0..=d).filter(|&j| j != b && target.is_none_or(|o| o == j)) {
                for k in 0..d {
                    for sign in [1.0, -1.0] {
                        let mut cand = xb.clone();
                        cand[k] += sign * delta;
                        let mut trial = pts.clone();
                        trial[j].0 = cand.clone();
                        let vol = poisedness(&trial, b, d);
                        if best_axis.as_ref().is_none_or(|(v, _, _)| vol > *v) {
                            best_axis = Some((vol, j, cand));
                        }
                    }
                }
            }
            let (_, j, x) = best_axis.expect("at least one candidate");
            let f = t.eval(&x)?;
            insert(&mut pts, b, x, f, Some(j));
            continue;
        };

        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm == 0.0 || !gnorm.is_finite() {
            rho *= 0.5;
            delta = rho;
            continue;
        }
        let trial: Vec<f64> = xb.iter().zip(&grad).map(|(x, g)| x - delta * g / gnorm).collect();
        let ft = t.eval(&trial)?;
        let ratio = (fb - ft) / (delta * gnorm);
        let worst = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        if ft < worst {
            insert(&mut pts, b, trial, ft, None);
        }
        if ratio >= 0.75 {
            delta = (2.0 * delta).min(delta_max);
        } else if ratio < 0.1 {
            if delta > rho {
                delta = (0.5 * delta).max(rho);
            } else {
                rho *= 0.5;
                delta = rho;
            }
        }
    }
}
