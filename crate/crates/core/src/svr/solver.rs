//! Pairwise coordinate descent for the epsilon-SVR dual.
//!
//! The 2N dual variables are stacked as `a = [alpha; alpha*]` with signs
//! `z = [+1; -1]`, giving
//!
//! ```text
//! min 1/2 a' Q a + p' a   s.t.  z' a = 0,  0 <= a <= C
//! Q_ts = z_t z_s K(t mod N, s mod N),  p = [eps - y; eps + y]
//! ```
//!
//! Each iteration picks the maximal violating pair (first index wins ties),
//! solves the two-variable subproblem in closed form and updates the
//! gradient. The bias is the mean over free variables, or the midpoint of
//! the feasible interval when no variable is free.

const TAU: f64 = 1e-12;

/// Dual variables and diagnostics at solver exit.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub alpha: Vec<f64>,
    pub alpha_star: Vec<f64>,
    /// Gradient of the dual objective, stacked like the variables.
    pub gradient: Vec<f64>,
    pub bias: f64,
    /// Maximal KKT violation at exit.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SolverState {
    pub fn beta(&self) -> Vec<f64> {
        self.alpha.iter().zip(&self.alpha_star).map(|(a, s)| a - s).collect()
    }

    /// Primal slacks `(xi, xi*)`: how far each residual lies above / below
    /// the epsilon tube under the solved model.
    pub fn slacks(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.alpha.len();
        let xi = (0..n).map(|i| (-self.gradient[i] - self.bias).max(0.0)).collect();
        let xi_star = (0..n).map(|i| (self.bias - self.gradient[n + i]).max(0.0)).collect();
        (xi, xi_star)
    }
}

struct Problem<'a> {
    kmat: &'a [f64],
    n: usize,
}

impl Problem<'_> {
    #[inline]
    fn sign(&self, t: usize) -> f64 {
        if t < self.n {
            1.0
        } else {
            -1.0
        }
    }

    #[inline]
    fn k(&self, t: usize, s: usize) -> f64 {
        self.kmat[(t % self.n) * self.n + (s % self.n)]
    }
}

#[inline]
fn in_up(z: f64, a: f64, c: f64) -> bool {
    (z > 0.0 && a < c) || (z < 0.0 && a > 0.0)
}

#[inline]
fn in_low(z: f64, a: f64, c: f64) -> bool {
    (z > 0.0 && a > 0.0) || (z < 0.0 && a < c)
}

/// Maximal violating pair `(i, j, gap)` over the stacked variables.
fn select_pair(p: &Problem<'_>, a: &[f64], g: &[f64], c: f64) -> Option<(usize, usize, f64)> {
    let mut up: Option<(usize, f64)> = None;
    let mut low: Option<(usize, f64)> = None;
    for t in 0..a.len() {
        let z = p.sign(t);
        let v = -z * g[t];
        if in_up(z, a[t], c) && up.is_none_or(|(_, m)| v > m) {
            up = Some((t, v));
        }
        if in_low(z, a[t], c) && low.is_none_or(|(_, m)| v < m) {
            low = Some((t, v));
        }
    }
    let ((i, gmax), (j, gmin)) = (up?, low?);
    Some((i, j, gmax - gmin))
}

fn compute_bias(p: &Problem<'_>, a: &[f64], g: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..a.len() {
        let z = p.sign(t);
        let zg = z * g[t];
        if a[t] >= c {
            if z < 0.0 {
                ub = ub.min(zg);
            } else {
                lb = lb.max(zg);
            }
        } else if a[t] <= 0.0 {
            if z > 0.0 {
                ub = ub.min(zg);
            } else {
                lb = lb.max(zg);
            }
        } else {
            n_free += 1;
            sum_free += zg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    -rho
}

/// Solve the dual for a precomputed row-major N x N kernel matrix.
pub fn solve_dual(kmat: &[f64], y: &[f64], c: f64, epsilon: f64, tol: f64, max_iter: usize) -> SolverState {
    let n = y.len();
    assert_eq!(kmat.len(), n * n, "kernel matrix must be N x N");
    let p = Problem { kmat, n };
    let l = 2 * n;
    let mut a = vec![0.0; l];
    let mut g: Vec<f64> = (0..l)
        .map(|t| if t < n { epsilon - y[t] } else { epsilon + y[t - n] })
        .collect();

    let mut iterations = 0;
    let mut gap;
    let mut converged = false;
    loop {
        let Some((i, j, current_gap)) = select_pair(&p, &a, &g, c) else {
            converged = true;
            gap = 0.0;
            break;
        };
        gap = current_gap;
        if gap < tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let (zi, zj) = (p.sign(i), p.sign(j));
        let qij = zi * zj * p.k(i, j);
        let (qii, qjj) = (p.k(i, i), p.k(j, j));
        let (old_ai, old_aj) = (a[i], a[j]);

        if zi != zj {
            let mut quad = qii + qjj + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-g[i] - g[j]) / quad;
            let diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if diff > 0.0 {
                if a[j] < 0.0 {
                    a[j] = 0.0;
                    a[i] = diff;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = -diff;
            }
            if diff > 0.0 {
                if a[i] > c {
                    a[i] = c;
                    a[j] = c - diff;
                }
            } else if a[j] > c {
                a[j] = c;
                a[i] = c + diff;
            }
        } else {
            let mut quad = qii + qjj - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (g[i] - g[j]) / quad;
            let sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if sum > c {
                if a[i] > c {
                    a[i] = c;
                    a[j] = sum - c;
                }
            } else if a[j] < 0.0 {
                a[j] = 0.0;
                a[i] = sum;
            }
            if sum > c {
                if a[j] > c {
                    a[j] = c;
                    a[i] = sum - c;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = sum;
            }
        }

        // K is symmetric, so the kernel rows of i and j give the columns
        let (ci, cj) = (zi * (a[i] - old_ai), zj * (a[j] - old_aj));
        let ki = &kmat[(i % n) * n..(i % n + 1) * n];
        let kj = &kmat[(j % n) * n..(j % n + 1) * n];
        let (g_plus, g_minus) = g.split_at_mut(n);
        for s in 0..n {
            let v = ci * ki[s] + cj * kj[s];
            g_plus[s] += v;
            g_minus[s] -= v;
        }
    }

    let bias = compute_bias(&p, &a, &g, c);
    let alpha_star = a.split_off(n);
    SolverState {
        alpha: a,
        alpha_star,
        gradient: g,
        bias,
        gap,
        iterations,
        converged,
    }
}

/// `1/2 beta' K beta + eps * sum|beta| - y' beta`.
pub(crate) fn objective(kmat: &[f64], beta: &[f64], y: &[f64], epsilon: f64) -> f64 {
    let n = beta.len();
    let mut quad = 0.0;
    for i in 0..n {
        if beta[i] == 0.0 {
            continue;
        }
        let row = &kmat[i * n..(i + 1) * n];
        quad += beta[i] * row.iter().zip(beta).map(|(k, b)| k * b).sum::<f64>();
    }
    0.5 * quad + beta.iter().zip(y).map(|(b, yi)| epsilon * b.abs() - yi * b).sum::<f64>()
}

/// Violation measure used by [`crate::svr::kkt_residual`].
pub(crate) fn kkt_violation(kmat: &[f64], beta: &[f64], y: &[f64], c: f64, epsilon: f64) -> f64 {
    let n = beta.len();
    let p = Problem { kmat, n };
    let a: Vec<f64> = beta.iter().map(|b| b.max(0.0)).chain(beta.iter().map(|b| (-b).max(0.0))).collect();
    let kb: Vec<f64> = (0..n)
        .map(|i| kmat[i * n..(i + 1) * n].iter().zip(beta).map(|(k, b)| k * b).sum())
        .collect();
    let g: Vec<f64> = (0..2 * n)
        .map(|t| if t < n { kb[t] + epsilon - y[t] } else { -kb[t - n] + epsilon + y[t - n] })
        .collect();
    let pair_gap = select_pair(&p, &a, &g, c).map_or(0.0, |(_, _, gap)| gap.max(0.0));
    let equality = beta.iter().sum::<f64>().abs();
    let bound = beta.iter().map(|b| (b.abs() - c).max(0.0)).fold(0.0, f64::max);
    pair_gap.max(equality).max(bound)
}
