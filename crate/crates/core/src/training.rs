//! Empirical minimization over the random-feature classes.
//!
//! Both objectives are averages over the stacked sample-time pairs
//! `(x_t^i, t)` with `x_t^i = t·x1_i + (1−t)·x0_i` on the stratified midpoint
//! grid, so `N = n·T` rows in total:
//!
//! * least squares for a free field, `(1/N) Σ ‖Ẋ_i − v(x_t^i, t)‖² + λ‖Θ‖²`,
//!   solved through one shared Gram matrix;
//! * the matching loss for a potential,
//!   `(1/N) Σ [c*(∇f) − Ẋ_iᵀ∇f + c(Ẋ_i)] + λ‖θ‖²`, solved in closed form
//!   for the quadratic cost and by descent with Armijo backtracking otherwise.
//!
//! Design blocks are generated on the fly in fixed chunks and reduced in a
//! fixed order, so results do not depend on the worker count.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::costs::ConvexCost;
use crate::error::{Result, RiftError};
use crate::fields::{FeatureMap, FreeVectorField, PotentialField};
use crate::synthdata::{time_grid, PairedCoupling};

/// Optimizer and quadrature settings shared by both fits.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub ridge_lambda: f64,
    /// Size `T` of the midpoint time grid.
    pub time_points: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub armijo_backtrack: f64,
    pub init_step: f64,
    /// Precondition descent steps with the quadratic-cost Gram matrix.
    pub precondition: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            ridge_lambda: 1e-6,
            time_points: 16,
            max_iters: 500,
            grad_tol: 1e-7,
            armijo_c: 1e-4,
            armijo_backtrack: 0.5,
            init_step: 1.0,
            precondition: true,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.ridge_lambda >= 0.0
            && self.ridge_lambda.is_finite()
            && self.time_points >= 1
            && self.grad_tol >= 0.0
            && self.armijo_c > 0.0
            && self.armijo_c < 1.0
            && self.armijo_backtrack > 0.0
            && self.armijo_backtrack < 1.0
            && self.init_step > 0.0;
        if ok {
            Ok(())
        } else {
            Err(RiftError::Construction(format!("invalid fit config {self:?}")))
        }
    }
}

/// Outcome of a fit. For potentials `final_loss` is the empirical ℓ̂*.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub final_loss: f64,
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub converged: bool,
    /// Regularized objective after each accepted step (descent only).
    pub loss_trace: Vec<f64>,
}

const BLOCK_ROWS: usize = 256;
const PARTITIONS: usize = 8;
/// Cached descent designs up to this many f64 entries (~384 MB).
const CACHE_LIMIT: usize = 48 << 20;

/// One block of rows: samples `start..end` at time `t`.
#[derive(Debug, Clone, Copy)]
struct Block {
    t: f64,
    start: usize,
    end: usize,
}

struct Stack<'a> {
    cpl: &'a PairedCoupling,
    vel: Array2<f64>,
    blocks: Vec<Block>,
    rows: usize,
}

impl<'a> Stack<'a> {
    fn new(cpl: &'a PairedCoupling, time_points: usize) -> Result<Self> {
        if cpl.is_empty() {
            return Err(RiftError::Construction("coupling is empty".into()));
        }
        let n = cpl.len();
        let mut blocks = Vec::new();
        for t in time_grid(time_points) {
            let mut start = 0;
            while start < n {
                let end = (start + BLOCK_ROWS).min(n);
                blocks.push(Block { t, start, end });
                start = end;
            }
        }
        Ok(Stack {
            cpl,
            vel: cpl.displacements(),
            blocks,
            rows: n * time_points.max(1),
        })
    }

    fn positions(&self, b: Block) -> Array2<f64> {
        let x0 = self.cpl.x0.slice(s![b.start..b.end, ..]);
        let x1 = self.cpl.x1.slice(s![b.start..b.end, ..]);
        &x1 * b.t + &x0 * (1.0 - b.t)
    }

    fn velocities(&self, b: Block) -> ArrayView2<'_, f64> {
        self.vel.slice(s![b.start..b.end, ..])
    }

    /// Reduces `f` over blocks in `PARTITIONS` contiguous groups, summing the
    /// group results in order.
    fn reduce<T, F, G>(&self, init: G, f: F) -> T
    where
        T: Send,
        G: Fn() -> T + Sync,
        F: Fn(&mut T, usize, Block) + Sync,
        T: std::ops::AddAssign<T>,
    {
        let nb = self.blocks.len();
        let per = nb.div_ceil(PARTITIONS).max(1);
        let parts: Vec<T> = (0..nb.div_ceil(per))
            .into_par_iter()
            .map(|p| {
                let mut acc = init();
                for i in p * per..((p + 1) * per).min(nb) {
                    f(&mut acc, i, self.blocks[i]);
                }
                acc
            })
            .collect();
        let mut total = init();
        for p in parts {
            total += p;
        }
        total
    }
}

/// `[√(2/M)·cos(args), 1, x, t]`, one row per sample.
fn free_design(fm: &FeatureMap, x: ArrayView2<'_, f64>, t: f64) -> Array2<f64> {
    let m = fm.num_random();
    let d = fm.dim();
    let sc = fm.scale();
    let args = fm.args_batch(x, t);
    let mut phi = Array2::zeros((x.nrows(), fm.len()));
    phi.slice_mut(s![.., ..m]).assign(&args.mapv(|a| sc * a.cos()));
    if fm.affine {
        phi.column_mut(m).fill(1.0);
        phi.slice_mut(s![.., m + 1..m + 1 + d]).assign(&x);
        phi.column_mut(m + 1 + d).fill(t);
    }
    phi
}

/// Spatial-gradient design: row `r·d + k` holds `∂φ/∂x_k` at sample `r`.
fn gradient_design(fm: &FeatureMap, x: ArrayView2<'_, f64>, t: f64) -> Array2<f64> {
    let m = fm.num_random();
    let d = fm.dim();
    let sc = fm.scale();
    let args = fm.args_batch(x, t);
    let mut g = Array2::zeros((x.nrows() * d, fm.len()));
    for (r, arow) in args.rows().into_iter().enumerate() {
        for (j, a) in arow.iter().enumerate() {
            let sn = -sc * a.sin();
            for k in 0..d {
                g[[r * d + k, j]] = sn * fm.omega[[j, k]];
            }
        }
        if fm.affine {
            for k in 0..d {
                g[[r * d + k, m + 1 + k]] = 1.0;
            }
        }
    }
    g
}

/// Flattens a row block of `d`-vectors into a column matching
/// [`gradient_design`] rows.
fn flat(v: ArrayView2<'_, f64>) -> Array1<f64> {
    Array1::from_iter(v.iter().copied())
}

#[derive(Clone)]
struct Normal {
    gram: Array2<f64>,
    rhs: Array2<f64>,
}

impl std::ops::AddAssign for Normal {
    fn add_assign(&mut self, o: Normal) {
        self.gram += &o.gram;
        self.rhs += &o.rhs;
    }
}

struct Scalar(f64);

impl std::ops::AddAssign for Scalar {
    fn add_assign(&mut self, o: Scalar) {
        self.0 += o.0;
    }
}

fn check_dims(cpl: &PairedCoupling, fm: &FeatureMap) -> Result<()> {
    if cpl.dim() != fm.dim() {
        return Err(RiftError::SizeMismatch(format!(
            "coupling has d = {}, feature map has d = {}",
            cpl.dim(),
            fm.dim()
        )));
    }
    Ok(())
}

/// Relative ridge weight on the affine coefficients. Kept tiny so affine
/// drifts are fitted without shrinkage while the Gram stays definite.
const AFFINE_RIDGE: f64 = 1e-6;

/// Per-coefficient ridge weights. Potential coefficients on `1` and `t`
/// do not enter `∇_x f`, so they keep the full weight and solve to 0.
fn ridge_weights(fm: &FeatureMap, potential: bool) -> Array1<f64> {
    let m = fm.num_random();
    let d = fm.dim();
    let mut w = Array1::ones(fm.len());
    if fm.affine {
        for k in m..fm.len() {
            w[k] = AFFINE_RIDGE;
        }
        if potential {
            w[m] = 1.0;
            w[m + 1 + d] = 1.0;
        }
    }
    w
}

/// Least-squares fit of `v = Θᵀφ` to the displacements on the interpolation.
pub fn fit_free_field(
    cpl: &PairedCoupling,
    fm: &FeatureMap,
    cfg: &FitConfig,
) -> Result<(FreeVectorField, FitReport)> {
    cfg.validate()?;
    check_dims(cpl, fm)?;
    let stack = Stack::new(cpl, cfg.time_points)?;
    let p = fm.len();
    let d = fm.dim();
    let normal = stack.reduce(
        || Normal {
            gram: Array2::zeros((p, p)),
            rhs: Array2::zeros((p, d)),
        },
        |acc, _, b| {
            let x = stack.positions(b);
            let phi = free_design(fm, x.view(), b.t);
            general_mat_mul(1.0, &phi.t(), &phi, 1.0, &mut acc.gram);
            general_mat_mul(1.0, &phi.t(), &stack.velocities(b), 1.0, &mut acc.rhs);
        },
    );
    let inv_n = 1.0 / stack.rows as f64;
    let mut gram = normal.gram * inv_n;
    let rhs = normal.rhs * inv_n;
    let weights = ridge_weights(fm, false);
    for i in 0..p {
        gram[[i, i]] += cfg.ridge_lambda * weights[i];
    }
    let factor = crate::linalg::SpdFactor::new(&gram, cfg.ridge_lambda > 0.0)?;
    let theta = factor.solve(&rhs);
    let field = FreeVectorField::new(fm.clone(), theta)?;

    let residual = stack.reduce(
        || Scalar(0.0),
        |acc, _, b| {
            let x = stack.positions(b);
            let phi = free_design(fm, x.view(), b.t);
            let r = &stack.velocities(b) - &phi.dot(&field.theta);
            acc.0 += r.iter().map(|v| v * v).sum::<f64>();
        },
    );
    // gradient of the regularized objective: 2[(A + λW)Θ − B]
    let grad = (gram.dot(&field.theta) - &rhs) * 2.0;
    let report = FitReport {
        final_loss: residual.0 * inv_n,
        iterations: 1,
        final_grad_norm: grad.iter().map(|v| v * v).sum::<f64>().sqrt(),
        converged: true,
        loss_trace: Vec::new(),
    };
    Ok((field, report))
}

/// Pointwise matching term `c*(u) − vᵀu + c(v)` summed over a block.
fn matching_block(c: &dyn ConvexCost, u: ArrayView2<'_, f64>, v: ArrayView2<'_, f64>) -> f64 {
    u.rows()
        .into_iter()
        .zip(v.rows())
        .map(|(ur, vr)| {
            let ur = ur.to_vec();
            let vr = vr.to_vec();
            c.conjugate(&ur) - crate::costs::dot(&vr, &ur) + c.value(&vr)
        })
        .sum()
}

/// Empirical matching loss `L_{X,c}(f)` on a `T`-point midpoint grid.
pub fn matching_loss(
    cpl: &PairedCoupling,
    pf: &PotentialField,
    c: &dyn ConvexCost,
    time_points: usize,
) -> Result<f64> {
    check_dims(cpl, &pf.features)?;
    let stack = Stack::new(cpl, time_points)?;
    let total = stack.reduce(
        || Scalar(0.0),
        |acc, _, b| {
            let x = stack.positions(b);
            let u = pf.gradient_batch(x.view(), b.t);
            acc.0 += matching_block(c, u.view(), stack.velocities(b));
        },
    );
    Ok(total.0 / stack.rows as f64)
}

struct Vector(Array1<f64>);

impl std::ops::AddAssign for Vector {
    fn add_assign(&mut self, o: Vector) {
        self.0 += &o.0;
    }
}

fn residual_block(
    c: &dyn ConvexCost,
    u: ArrayView2<'_, f64>,
    v: ArrayView2<'_, f64>,
) -> Array2<f64> {
    let mut r = Array2::zeros(u.dim());
    let mut buf = vec![0.0; u.ncols()];
    for ((ur, vr), mut rr) in u.rows().into_iter().zip(v.rows()).zip(r.rows_mut()) {
        c.conjugate_gradient_into(&ur.to_vec(), &mut buf);
        for k in 0..buf.len() {
            rr[k] = buf[k] - vr[k];
        }
    }
    r
}

/// Exact gradient of [`matching_loss`] in `θ`:
/// `(1/N) Σ G(x, t)ᵀ (∇c*(∇f) − Ẋ)`.
pub fn matching_loss_grad(
    cpl: &PairedCoupling,
    pf: &PotentialField,
    c: &dyn ConvexCost,
    time_points: usize,
) -> Result<Array1<f64>> {
    let fm = &pf.features;
    check_dims(cpl, fm)?;
    let stack = Stack::new(cpl, time_points)?;
    let total = stack.reduce(
        || Vector(Array1::zeros(fm.len())),
        |acc, _, b| {
            let x = stack.positions(b);
            let g = gradient_design(fm, x.view(), b.t);
            let u = g.dot(&pf.theta);
            let u = u.into_shape_with_order((b.end - b.start, fm.dim())).expect("shape");
            let r = residual_block(c, u.view(), stack.velocities(b));
            acc.0 += &g.t().dot(&flat(r.view()));
        },
    );
    Ok(total.0 / stack.rows as f64)
}

/// Minimizes the matching loss plus `λθᵀWθ` over potentials on `fm`, where
/// `W` is 1 on the cosine coefficients and tiny on the affine ones.
///
/// Quadratic costs use the closed-form ridge solution; any other cost runs
/// [`fit_potential_descent`].
pub fn fit_potential(
    cpl: &PairedCoupling,
    fm: &FeatureMap,
    c: &dyn ConvexCost,
    cfg: &FitConfig,
) -> Result<(PotentialField, FitReport)> {
    if c.is_quadratic() {
        fit_potential_closed_form(cpl, fm, c, cfg)
    } else {
        fit_potential_descent(cpl, fm, c, cfg)
    }
}

/// Gram matrix `(1/N) Σ GᵀG` and right-hand side `(1/N) Σ GᵀẊ`.
fn gradient_normal(stack: &Stack<'_>, fm: &FeatureMap) -> (Array2<f64>, Array1<f64>) {
    let p = fm.len();
    let normal = stack.reduce(
        || Normal {
            gram: Array2::zeros((p, p)),
            rhs: Array2::zeros((p, 1)),
        },
        |acc, _, b| {
            let x = stack.positions(b);
            let g = gradient_design(fm, x.view(), b.t);
            general_mat_mul(1.0, &g.t(), &g, 1.0, &mut acc.gram);
            let v = flat(stack.velocities(b)).insert_axis(Axis(1));
            general_mat_mul(1.0, &g.t(), &v, 1.0, &mut acc.rhs);
        },
    );
    let inv_n = 1.0 / stack.rows as f64;
    (normal.gram * inv_n, normal.rhs.column(0).to_owned() * inv_n)
}

fn fit_potential_closed_form(
    cpl: &PairedCoupling,
    fm: &FeatureMap,
    c: &dyn ConvexCost,
    cfg: &FitConfig,
) -> Result<(PotentialField, FitReport)> {
    cfg.validate()?;
    check_dims(cpl, fm)?;
    let stack = Stack::new(cpl, cfg.time_points)?;
    let (mut gram, rhs) = gradient_normal(&stack, fm);
    // ½‖Gθ − Ẋ‖² + λθᵀWθ  ⇒  (A + 2λW)θ = b
    let weights = ridge_weights(fm, true);
    for i in 0..fm.len() {
        gram[[i, i]] += 2.0 * cfg.ridge_lambda * weights[i];
    }
    let factor = crate::linalg::SpdFactor::new(&gram, cfg.ridge_lambda > 0.0)?;
    let theta = factor.solve_vec(&rhs);
    let grad = gram.dot(&theta) - &rhs;
    let pf = PotentialField::new(fm.clone(), theta)?;
    let loss = matching_loss(cpl, &pf, c, cfg.time_points)?;
    let report = FitReport {
        final_loss: loss,
        iterations: 1,
        final_grad_norm: grad.dot(&grad).sqrt(),
        converged: true,
        loss_trace: Vec::new(),
    };
    Ok((pf, report))
}

/// Gradient-design rows either cached per block or regenerated per pass.
struct Design<'a> {
    stack: &'a Stack<'a>,
    fm: &'a FeatureMap,
    cache: Option<Vec<Array2<f64>>>,
}

impl<'a> Design<'a> {
    fn new(stack: &'a Stack<'a>, fm: &'a FeatureMap) -> Self {
        let entries = stack.rows * fm.dim() * fm.len();
        let cache = (entries <= CACHE_LIMIT).then(|| {
            stack
                .blocks
                .iter()
                .map(|&b| gradient_design(fm, stack.positions(b).view(), b.t))
                .collect()
        });
        Design { stack, fm, cache }
    }

    fn with_block<R>(&self, i: usize, b: Block, f: impl FnOnce(&Array2<f64>) -> R) -> R {
        match &self.cache {
            Some(c) => f(&c[i]),
            None => f(&gradient_design(self.fm, self.stack.positions(b).view(), b.t)),
        }
    }

    /// Per-row values `Gθ` for every block, flattened.
    fn apply(&self, theta: &Array1<f64>) -> Vec<Array1<f64>> {
        let parts: Vec<(usize, Array1<f64>)> = (0..self.stack.blocks.len())
            .into_par_iter()
            .map(|i| (i, self.with_block(i, self.stack.blocks[i], |g| g.dot(theta))))
            .collect();
        parts.into_iter().map(|(_, v)| v).collect()
    }

    /// `Σ Gᵀ r` over blocks for per-block residual columns `r`.
    fn apply_t(&self, r: &[Array1<f64>]) -> Array1<f64> {
        let p = self.fm.len();
        self.stack
            .reduce(
                || Vector(Array1::zeros(p)),
                |acc, i, b| self.with_block(i, b, |g| acc.0 += &g.t().dot(&r[i])),
            )
            .0
    }

    fn gram(&self) -> Array2<f64> {
        let p = self.fm.len();
        let normal = self.stack.reduce(
            || Normal {
                gram: Array2::zeros((p, p)),
                rhs: Array2::zeros((0, 0)),
            },
            |acc, i, b| {
                self.with_block(i, b, |g| general_mat_mul(1.0, &g.t(), g, 1.0, &mut acc.gram))
            },
        );
        normal.gram / self.stack.rows as f64
    }
}

/// Objective pieces for a given set of per-row gradients `u = Gθ`.
fn descent_loss(stack: &Stack<'_>, c: &dyn ConvexCost, u: &[Array1<f64>], d: usize) -> f64 {
    let mut total = 0.0;
    for (b, ub) in stack.blocks.iter().zip(u) {
        let ub = ub.view().into_shape_with_order((b.end - b.start, d)).expect("shape");
        total += matching_block(c, ub, stack.velocities(*b));
    }
    total / stack.rows as f64
}

fn descent_residual(
    stack: &Stack<'_>,
    c: &dyn ConvexCost,
    u: &[Array1<f64>],
    d: usize,
) -> Vec<Array1<f64>> {
    stack
        .blocks
        .iter()
        .zip(u)
        .map(|(b, ub)| {
            let ub = ub.view().into_shape_with_order((b.end - b.start, d)).expect("shape");
            flat(residual_block(c, ub, stack.velocities(*b)).view())
        })
        .collect()
}

/// Full-batch descent on the matching loss with Armijo backtracking,
/// starting from `θ = 0`. With `cfg.precondition` the search direction is
/// `−(A + 2λW)⁻¹∇`, where `A = (1/N) Σ GᵀG` is the quadratic-cost Hessian.
pub fn fit_potential_descent(
    cpl: &PairedCoupling,
    fm: &FeatureMap,
    c: &dyn ConvexCost,
    cfg: &FitConfig,
) -> Result<(PotentialField, FitReport)> {
    cfg.validate()?;
    check_dims(cpl, fm)?;
    let stack = Stack::new(cpl, cfg.time_points)?;
    let design = Design::new(&stack, fm);
    let p = fm.len();
    let d = fm.dim();
    let lambda = cfg.ridge_lambda;
    let inv_n = 1.0 / stack.rows as f64;
    let weights = ridge_weights(fm, true);

    let precond = if cfg.precondition {
        let mut a = design.gram();
        for i in 0..p {
            a[[i, i]] += 2.0 * lambda * weights[i];
        }
        Some(crate::linalg::SpdFactor::new(&a, true)?)
    } else {
        None
    };

    let mut theta = Array1::<f64>::zeros(p);
    let mut u: Vec<Array1<f64>> = stack
        .blocks
        .iter()
        .map(|b| Array1::zeros((b.end - b.start) * d))
        .collect();
    let objective = |loss: f64, th: &Array1<f64>| loss + lambda * (th * th).dot(&weights);
    let mut loss = descent_loss(&stack, c, &u, d);
    let mut obj = objective(loss, &theta);
    let mut trace = vec![obj];
    let mut converged = false;
    let mut iterations = 0;
    let mut grad_norm;

    loop {
        let r = descent_residual(&stack, c, &u, d);
        let grad = design.apply_t(&r) * inv_n + &(&theta * &weights) * (2.0 * lambda);
        grad_norm = grad.dot(&grad).sqrt();
        if !grad_norm.is_finite() {
            return Err(RiftError::Optimization(format!(
                "non-finite gradient at iteration {iterations}"
            )));
        }
        if grad_norm <= cfg.grad_tol {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iters {
            break;
        }
        let dir = match &precond {
            Some(f) => -f.solve_vec(&grad),
            None => -&grad,
        };
        let slope = grad.dot(&dir);
        let w = design.apply(&dir);
        let mut step = cfg.init_step;
        let mut accepted = None;
        let mut best_trial = f64::INFINITY;
        while step >= 1e-16 {
            let trial_u: Vec<Array1<f64>> =
                u.iter().zip(&w).map(|(a, b)| a + &(b * step)).collect();
            let trial_theta = &theta + &(&dir * step);
            let trial_loss = descent_loss(&stack, c, &trial_u, d);
            let trial_obj = objective(trial_loss, &trial_theta);
            if trial_obj.is_finite() {
                best_trial = best_trial.min(trial_obj);
            }
            if trial_obj <= obj + cfg.armijo_c * step * slope {
                accepted = Some((trial_u, trial_theta, trial_loss, trial_obj));
                break;
            }
            step *= cfg.armijo_backtrack;
        }
        match accepted {
            Some((nu, nt, nl, no)) => {
                u = nu;
                theta = nt;
                loss = nl;
                obj = no;
                trace.push(obj);
                iterations += 1;
            }
            None => {
                // Stalled at the floating-point floor: stop without an error.
                if (best_trial - obj).abs() <= 1e-12 * obj.abs().max(1.0) {
                    break;
                }
                return Err(RiftError::Optimization(format!(
                    "line search failed at iteration {iterations}: objective {obj:.6e}, \
                     gradient norm {grad_norm:.3e}, best trial {best_trial:.6e}"
                )));
            }
        }
    }

    let pf = PotentialField::new(fm.clone(), theta)?;
    let report = FitReport {
        final_loss: loss,
        iterations,
        final_grad_norm: grad_norm,
        converged,
        loss_trace: trace,
    };
    Ok((pf, report))
}
