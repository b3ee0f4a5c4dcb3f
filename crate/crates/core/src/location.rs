//! Robust multivariate location: the spatial median and the k-step
//! least trimmed squares estimator obtained from it by concentration steps.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1000;
/// Number of C-steps used by default (and by the simulation study).
pub const DEFAULT_LTS_STEPS: usize = 5;
/// Safety cap for C-steps iterated to convergence.
pub const MAX_CONCENTRATION_STEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LocationEstimate {
    pub center: DVector<f64>,
    pub iterations_used: usize,
    /// Sum of distances for the spatial median, trimmed sum of squared
    /// distances for LTS.
    pub objective: f64,
}

/// Number of C-steps to apply after the spatial median.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CSteps {
    Fixed(usize),
    /// Iterate until the selected subset repeats.
    UntilConvergence,
}

fn row(x: &DMatrix<f64>, i: usize) -> DVector<f64> {
    x.row(i).transpose()
}

fn distances(x: &DMatrix<f64>, center: &DVector<f64>) -> Vec<f64> {
    (0..x.nrows())
        .map(|i| {
            x.row(i)
                .iter()
                .zip(center.iter())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

fn check_nonempty(x: &DMatrix<f64>) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

fn coordinatewise_median(x: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(
        x.ncols(),
        x.column_iter().map(|c| {
            let v: Vec<f64> = c.iter().copied().collect();
            crate::numeric::median(&v).expect("nonempty column")
        }),
    )
}

/// Spatial (geometric) median: the minimizer of `sum_i |x_i - theta|`.
///
/// Weiszfeld iterations started at the coordinatewise median, with the
/// Vardi-Zhang correction when an iterate lands on data points: the
/// iterate is kept if the subgradient condition certifies it optimal,
/// otherwise it is pushed off the point. Off the data, each iteration takes
/// the best of the plain step, an over-relaxed step and a damped Newton
/// step. Stops when the step is below
/// `tol` relative to the iterate norm plus the data spread.
pub fn spatial_median(x: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<LocationEstimate> {
    weiszfeld(x, tol, max_iter, |_| {})
}

pub(crate) fn weiszfeld(
    x: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
    mut trace: impl FnMut(f64),
) -> Result<LocationEstimate> {
    check_nonempty(x)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let n = x.nrows();
    let p = x.ncols();
    let mut y = coordinatewise_median(x);
    let d0 = distances(x, &y);
    let spread = d0.iter().sum::<f64>() / n as f64;
    trace(d0.iter().sum());
    if spread == 0.0 {
        return Ok(LocationEstimate { center: y, iterations_used: 0, objective: 0.0 });
    }
    let coincide = f64::EPSILON * spread;
    let objective_at = |c: &DVector<f64>| distances(x, c).iter().sum::<f64>();
    let mut relax = 1.0;

    for it in 1..=max_iter {
        let d = distances(x, &y);
        let mut num = DVector::<f64>::zeros(p);
        let mut wsum = 0.0;
        let mut on_point = 0usize;
        for (i, &di) in d.iter().enumerate() {
            if di <= coincide {
                on_point += 1;
            } else {
                let w = 1.0 / di;
                num.axpy(w, &row(x, i), 1.0);
                wsum += w;
            }
        }
        if wsum == 0.0 {
            return Ok(LocationEstimate { center: y, iterations_used: it, objective: 0.0 });
        }
        let t = &num / wsum;
        let (next, next_obj) = if on_point == 0 {
            // Near a data point Weiszfeld contracts slowly; try an
            // over-relaxed step and keep it only if it descends further.
            let k = (0..n).min_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap_or(0);
            let xk = row(x, k);
            if let Some(objective) = optimal_at_data_point(x, &xk, coincide) {
                return Ok(LocationEstimate { center: xk, iterations_used: it, objective });
            }
            let plain = objective_at(&t);
            let stretched = &y + (&t - &y) * (2.0 * relax);
            let stretched_obj = objective_at(&stretched);
            let mut best = if stretched_obj < plain {
                relax = (2.0 * relax).min(1e6);
                (stretched, stretched_obj)
            } else {
                relax = 1.0;
                (t, plain)
            };
            if let Some(candidate) = newton_step(x, &y, &d, objective_at(&y), &objective_at) {
                if candidate.1 < best.1 {
                    best = candidate;
                }
            }
            best
        } else {
            // Resultant pull of the other points; y is optimal if it does
            // not exceed the number of points sitting on y.
            let pull = (&t - &y) * wsum;
            let r = pull.norm();
            let eta = on_point as f64;
            if r <= eta {
                let objective = d.iter().sum();
                return Ok(LocationEstimate { center: y, iterations_used: it, objective });
            }
            let a = eta / r;
            let next = &t * (1.0 - a) + &y * a;
            let obj = objective_at(&next);
            (next, obj)
        };
        let step = (&next - &y).norm();
        y = next;
        trace(next_obj);
        if step <= tol * (y.norm() + spread) {
            return Ok(LocationEstimate { center: y, iterations_used: it, objective: next_obj });
        }
    }
    Err(Error::NoConvergence {
        what: "spatial median",
        iterations: max_iter,
        last: y.iter().copied().collect(),
    })
}

/// Damped Newton step on the (smooth, off the data) objective; `None` if
/// the Hessian is singular or no halving of the step descends.
fn newton_step(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    d: &[f64],
    current: f64,
    objective_at: &impl Fn(&DVector<f64>) -> f64,
) -> Option<(DVector<f64>, f64)> {
    let p = x.ncols();
    let mut grad = DVector::<f64>::zeros(p);
    let mut hess = DMatrix::<f64>::zeros(p, p);
    for (i, &di) in d.iter().enumerate() {
        let u = (y - row(x, i)) / di;
        grad += &u;
        hess += (DMatrix::<f64>::identity(p, p) - &u * u.transpose()) / di;
    }
    let step = hess.cholesky()?.solve(&(-grad));
    let mut scale = 1.0;
    for _ in 0..30 {
        let candidate = y + &step * scale;
        let obj = objective_at(&candidate);
        if obj < current {
            return Some((candidate, obj));
        }
        scale *= 0.5;
    }
    None
}

/// Returns the objective if `z` (a data point) minimizes the sum of
/// distances: the unit vectors towards the remaining points must sum to a
/// vector no longer than the multiplicity of `z`.
fn optimal_at_data_point(x: &DMatrix<f64>, z: &DVector<f64>, coincide: f64) -> Option<f64> {
    let d = distances(x, z);
    let mut pull = DVector::<f64>::zeros(x.ncols());
    let mut eta = 0.0;
    for (i, &di) in d.iter().enumerate() {
        if di <= coincide {
            eta += 1.0;
        } else {
            pull.axpy(1.0 / di, &(row(x, i) - z), 1.0);
        }
    }
    (pull.norm() <= eta).then(|| d.iter().sum())
}

/// Subset size used by the C-step: `floor((n + 1) / 2)`.
pub fn lts_h(n: usize) -> usize {
    (n + 1) / 2
}

/// Indices of the `h` points closest to `center`; ties at the boundary go
/// to the lowest indices. Returned in ascending index order.
fn nearest_subset(x: &DMatrix<f64>, center: &DVector<f64>, h: usize) -> Vec<usize> {
    let d = distances(x, center);
    let mut idx: Vec<usize> = (0..x.nrows()).collect();
    // stable sort keeps lower indices first among equal distances
    idx.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    idx.truncate(h);
    idx.sort_unstable();
    idx
}

fn subset_mean(x: &DMatrix<f64>, subset: &[usize]) -> DVector<f64> {
    let mut m = DVector::<f64>::zeros(x.ncols());
    for &i in subset {
        m.axpy(1.0, &row(x, i), 1.0);
    }
    m / subset.len() as f64
}

/// Sum of the `h = floor((n+1)/2)` smallest squared distances to `center`.
pub fn lts_objective(x: &DMatrix<f64>, center: &DVector<f64>) -> f64 {
    let mut d2: Vec<f64> = distances(x, center).iter().map(|d| d * d).collect();
    d2.sort_by(f64::total_cmp);
    d2[..lts_h(x.nrows())].iter().sum()
}

/// One concentration step: the mean of the `h` points nearest to `t_prev`.
pub fn c_step(x: &DMatrix<f64>, t_prev: &DVector<f64>) -> Result<DVector<f64>> {
    check_nonempty(x)?;
    if t_prev.len() != x.ncols() {
        return Err(Error::DimensionMismatch { expected: x.ncols(), found: t_prev.len() });
    }
    let subset = nearest_subset(x, t_prev, lts_h(x.nrows()));
    Ok(subset_mean(x, &subset))
}

/// k-step LTS: `steps` C-steps started from the spatial median. Zero steps
/// returns the spatial median itself.
pub fn kstep_lts(x: &DMatrix<f64>, steps: CSteps) -> Result<LocationEstimate> {
    let start = spatial_median(x, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    if steps == CSteps::Fixed(0) {
        return Ok(start);
    }
    let h = lts_h(x.nrows());
    let mut center = start.center;
    let mut previous: Option<Vec<usize>> = None;
    let limit = match steps {
        CSteps::Fixed(k) => k,
        CSteps::UntilConvergence => MAX_CONCENTRATION_STEPS,
    };
    for step in 1..=limit {
        let subset = nearest_subset(x, &center, h);
        if steps == CSteps::UntilConvergence && previous.as_ref() == Some(&subset) {
            let objective = lts_objective(x, &center);
            return Ok(LocationEstimate { center, iterations_used: step - 1, objective });
        }
        center = subset_mean(x, &subset);
        previous = Some(subset);
    }
    if steps == CSteps::UntilConvergence {
        return Err(Error::NoConvergence {
            what: "C-steps",
            iterations: limit,
            last: center.iter().copied().collect(),
        });
    }
    let objective = lts_objective(x, &center);
    Ok(LocationEstimate { center, iterations_used: limit, objective })
}

/// Column means.
pub fn mean(x: &DMatrix<f64>) -> Result<DVector<f64>> {
    check_nonempty(x)?;
    Ok(x.row_mean().transpose())
}
