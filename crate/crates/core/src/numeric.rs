//! Power helper and a box-constrained smooth concave maximizer.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `x^e` for `x >= 0`, with `0^0 = 1` and exact products for small integer `e`.
#[inline]
pub(crate) fn pow(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e == 1.0 {
        x
    } else if e.fract() == 0.0 && e.abs() <= 64.0 {
        x.powi(e as i32)
    } else {
        x.powf(e)
    }
}

/// Smooth concave objective over a box.
pub(crate) trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn gradient(&self, x: &[f64], g: &mut [f64]) -> Result<()>;
    /// Writes the row-major Hessian into `h`; returns false when unavailable.
    fn hessian(&self, _x: &[f64], _h: &mut [f64]) -> Result<bool> {
        Ok(false)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BoxSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BoxOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub step_init: f64,
    /// Abort with [`Error::ConjugateInfinite`] once `|x|_inf` exceeds this.
    pub divergence_cap: Option<f64>,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 80;

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].max(lo[i]).min(hi[i]);
    }
}

/// `|x - P(x + g)|_inf`, the projected-gradient residual.
fn residual(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let mut r: f64 = 0.0;
    for i in 0..x.len() {
        let p = (x[i] + g[i]).max(lo[i]).min(hi[i]);
        r = r.max((p - x[i]).abs());
    }
    r
}

/// Cholesky solve of `m d = rhs`, retrying with growing diagonal damping.
fn newton_solve(m: DMatrix<f64>, rhs: DVector<f64>) -> Option<DVector<f64>> {
    let n = m.nrows();
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    for damping in [0.0, 1e-12, 1e-8, 1e-4] {
        let mut md = m.clone();
        for i in 0..n {
            md[(i, i)] += damping * scale;
        }
        if let Some(ch) = md.cholesky() {
            let d = ch.solve(&rhs);
            if d.iter().all(|v| v.is_finite()) {
                return Some(d);
            }
        }
    }
    None
}

/// Maximizes a concave objective over `lo <= x <= hi` (bounds may be infinite).
///
/// Projected Newton on the free variables when a Hessian is available,
/// spectral projected gradient otherwise, both with Armijo backtracking along
/// the projection arc.
pub(crate) fn maximize_box<O: Objective>(
    obj: &O,
    lo: &[f64],
    hi: &[f64],
    x0: &[f64],
    opts: BoxOptions,
) -> Result<BoxSolution> {
    let n = obj.dim();
    let mut x = x0.to_vec();
    project(&mut x, lo, hi);
    let mut fx = obj.value(&x)?;
    let mut g = vec![0.0; n];
    obj.gradient(&x, &mut g)?;
    let mut h = vec![0.0; n * n];
    let mut gstep = opts.step_init;
    let mut trial = vec![0.0; n];
    let mut gtrial = vec![0.0; n];
    let mut res = residual(&x, &g, lo, hi);

    for it in 0..opts.max_iters {
        if res <= opts.tol {
            return Ok(BoxSolution {
                x,
                value: fx,
                iterations: it,
                converged: true,
                residual: res,
            });
        }
        if let Some(cap) = opts.divergence_cap {
            if x.iter().any(|v| v.abs() > cap) || !fx.is_finite() {
                return Err(Error::ConjugateInfinite { lambda: Vec::new() });
            }
        }

        // Variables held at a bound by the gradient.
        let eps = res.min(1e-8);
        let active: Vec<bool> = (0..n)
            .map(|i| (x[i] <= lo[i] + eps && g[i] < 0.0) || (x[i] >= hi[i] - eps && g[i] > 0.0))
            .collect();
        let free: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();

        let mut newton_dir: Option<Vec<f64>> = None;
        if !free.is_empty() && obj.hessian(&x, &mut h)? && h.iter().all(|v| v.is_finite()) {
            let k = free.len();
            let m = DMatrix::from_fn(k, k, |a, b| -h[free[a] * n + free[b]]);
            let rhs = DVector::from_fn(k, |a, _| g[free[a]]);
            if let Some(d) = newton_solve(m, rhs) {
                let mut dir = vec![0.0; n];
                for (a, &i) in free.iter().enumerate() {
                    dir[i] = d[a];
                }
                let slope: f64 = dir.iter().zip(&g).map(|(d, g)| d * g).sum();
                if slope > 0.0 {
                    newton_dir = Some(dir);
                }
            }
        }

        let mut gdir = g.clone();
        for i in 0..n {
            if active[i] {
                gdir[i] = 0.0;
            }
        }
        let mut candidates = Vec::with_capacity(2);
        if let Some(d) = newton_dir {
            candidates.push((d, 1.0));
        }
        candidates.push((gdir, gstep));

        let mut accepted = false;
        'dirs: for (dir, mut s) in candidates {
            for _ in 0..MAX_BACKTRACKS {
                for i in 0..n {
                    trial[i] = x[i] + s * dir[i];
                }
                project(&mut trial, lo, hi);
                let gain: f64 = (0..n).map(|i| g[i] * (trial[i] - x[i])).sum();
                if gain > 0.0 {
                    if let Ok(ft) = obj.value(&trial) {
                        if ft.is_finite()
                            && ft >= fx + ARMIJO * gain
                            && obj.gradient(&trial, &mut gtrial).is_ok()
                            && gtrial.iter().all(|v| v.is_finite())
                        {
                            // Spectral step length for the next gradient move.
                            let mut sy = 0.0;
                            let mut ss = 0.0;
                            for i in 0..n {
                                let si = trial[i] - x[i];
                                sy -= si * (gtrial[i] - g[i]);
                                ss += si * si;
                            }
                            gstep = if sy > 0.0 {
                                (ss / sy).clamp(1e-12, 1e12)
                            } else {
                                (gstep * 2.0).min(1e12)
                            };
                            fx = ft;
                            std::mem::swap(&mut x, &mut trial);
                            std::mem::swap(&mut g, &mut gtrial);
                            accepted = true;
                            break 'dirs;
                        }
                    }
                }
                s *= 0.5;
            }
        }

        res = residual(&x, &g, lo, hi);
        if !accepted {
            // No ascent is representable in floating point from here.
            return Ok(BoxSolution {
                x,
                value: fx,
                iterations: it + 1,
                converged: res <= opts.tol.max(1e-7 * (1.0 + fx.abs())),
                residual: res,
            });
        }
    }
    Ok(BoxSolution {
        converged: res <= opts.tol,
        x,
        value: fx,
        iterations: opts.max_iters,
        residual: res,
    })
}
