//! Weighted inner product, Green's function, and the resolvent.
//!
//! The ambient space pairs a function on `[a, c) ∪ (c, b]` with one scalar
//! (the boundary form `(u)'_beta = beta1p u(b) - beta2p u'(b)`). The inner
//! product weights the left integral by `|gamma1*gamma2|`, the right by
//! `|delta1*delta2|`, and the scalar term by `|delta1*delta2|/rho`; with a
//! positive sign class the problem's operator is self-adjoint in it.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::ode::{Deriv, Node, State, Trajectory};
use crate::problem::{ProblemSpec, Side};
use crate::quadrature::adaptive_simpson;
use crate::shooting::{
    char_fn_from_pair, solve_chi, solve_phi, CharFnValue, Grids, PiecewiseTrajectory,
};

/// Quadrature tolerance used by the inner product (absolute or relative).
pub const INNER_QUAD_TOL: f64 = 1e-10;

/// Function component of a two-component vector: either a pair of
/// closed-form expressions or a sampled solution.
#[derive(Debug, Clone)]
pub enum PiecewiseFn {
    Exprs { left: Expr, right: Expr },
    Sampled(PiecewiseTrajectory),
    Zero,
}

impl PiecewiseFn {
    pub fn eval(&self, side: Side, x: f64) -> Result<Complex64> {
        match self {
            PiecewiseFn::Exprs { left, right } => {
                let expr = match side {
                    Side::Left => left,
                    Side::Right => right,
                };
                Ok(Complex64::new(expr.eval(x)?, 0.0))
            }
            PiecewiseFn::Sampled(traj) => Ok(traj.eval(side, x).u),
            PiecewiseFn::Zero => Ok(Complex64::new(0.0, 0.0)),
        }
    }
}

/// Two-component vector `(F_1(x), F_2)` of the weighted space.
#[derive(Debug, Clone)]
pub struct H1Element {
    pub f: PiecewiseFn,
    pub scalar: Complex64,
}

impl H1Element {
    pub fn zero() -> H1Element {
        H1Element {
            f: PiecewiseFn::Zero,
            scalar: Complex64::new(0.0, 0.0),
        }
    }

    pub fn from_exprs(left: &str, right: &str, scalar: impl Into<Complex64>) -> Result<H1Element> {
        Ok(H1Element {
            f: PiecewiseFn::Exprs {
                left: Expr::parse(left)?,
                right: Expr::parse(right)?,
            },
            scalar: scalar.into(),
        })
    }

    pub fn from_trajectory(traj: PiecewiseTrajectory, scalar: impl Into<Complex64>) -> H1Element {
        H1Element {
            f: PiecewiseFn::Sampled(traj),
            scalar: scalar.into(),
        }
    }

    pub fn eval(&self, side: Side, x: f64) -> Result<Complex64> {
        self.f.eval(side, x)
    }
}

/// The weighted inner product
/// `|g| ∫_a^c F_1 conj(G_1) + |d| ∫_c^b F_1 conj(G_1) + (|d|/rho) F_2 conj(G_2)`
/// with `g = gamma1*gamma2`, `d = delta1*delta2`.
pub fn inner_product(spec: &ProblemSpec, f: &H1Element, g: &H1Element) -> Result<Complex64> {
    let gg = (spec.gamma1 * spec.gamma2).abs();
    let dd = (spec.delta1 * spec.delta2).abs();
    let left = adaptive_simpson(
        &|x| Ok(f.eval(Side::Left, x)? * g.eval(Side::Left, x)?.conj()),
        spec.a,
        spec.c,
        INNER_QUAD_TOL,
    )?;
    let right = adaptive_simpson(
        &|x| Ok(f.eval(Side::Right, x)? * g.eval(Side::Right, x)?.conj()),
        spec.c,
        spec.b,
        INNER_QUAD_TOL,
    )?;
    Ok(gg * left + dd * right + (dd / spec.rho) * f.scalar * g.scalar.conj())
}

/// Norm induced by [`inner_product`].
pub fn norm_h1(spec: &ProblemSpec, f: &H1Element) -> Result<f64> {
    Ok(inner_product(spec, f, f)?.re.max(0.0).sqrt())
}

/// Boundary forms at `b`: `((u)_beta, (u)'_beta)` with
/// `(u)_beta = beta1 u(b) - beta2 u'(b)` and
/// `(u)'_beta = beta1p u(b) - beta2p u'(b)`.
pub fn boundary_forms(spec: &ProblemSpec, u: &PiecewiseTrajectory) -> (Complex64, Complex64) {
    let at_b = u.at_b();
    boundary_forms_state(spec, &at_b)
}

pub fn boundary_forms_state(spec: &ProblemSpec, at_b: &State) -> (Complex64, Complex64) {
    (
        spec.beta1 * at_b.u - spec.beta2 * at_b.du,
        spec.beta1p * at_b.u - spec.beta2p * at_b.du,
    )
}

/// Pole threshold: `lambda` counts as numerically an eigenvalue when
/// `|w(lambda)| <= 1e-8 (1 + |lambda|)`.
pub fn is_resolvent_pole(lambda: Complex64, w: Complex64) -> bool {
    w.norm() <= 1e-8 * (1.0 + lambda.norm())
}

/// One Green's function sample `G_1(x, y; lambda)`.
#[derive(Debug, Clone, Copy)]
pub struct GreenEval {
    pub lambda: Complex64,
    pub x: f64,
    pub y: f64,
    pub value: Complex64,
}

fn side_of(spec: &ProblemSpec, x: f64) -> Side {
    if x < spec.c {
        Side::Left
    } else {
        Side::Right
    }
}

struct GreenSampler {
    phi: PiecewiseTrajectory,
    chi: PiecewiseTrajectory,
    w: Complex64,
}

impl GreenSampler {
    fn new(spec: &ProblemSpec, lambda: Complex64, points: &[f64], tol: f64) -> Result<GreenSampler> {
        let mut grids = Grids::coarse();
        for &p in points {
            match side_of(spec, p) {
                Side::Left => grids.left.push(p),
                Side::Right => grids.right.push(p),
            }
        }
        let phi = solve_phi(spec, lambda, &grids, tol)?;
        let chi = solve_chi(spec, lambda, &grids, tol)?;
        let value = char_fn_from_pair(spec, &phi, &chi)?;
        if is_resolvent_pole(lambda, value.w) {
            return Err(Error::ResolventPole {
                lambda: format!("{lambda}"),
                w_abs: value.w.norm(),
            });
        }
        Ok(GreenSampler {
            phi: phi.traj,
            chi: chi.traj,
            w: value.w,
        })
    }

    fn eval(&self, spec: &ProblemSpec, x: f64, y: f64) -> Complex64 {
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        let phi = self.phi.eval(side_of(spec, lo), lo).u;
        let chi = self.chi.eval(side_of(spec, hi), hi).u;
        phi * chi / self.w
    }
}

/// Evaluates `G_1(x, y; lambda) = phi(min) chi(max) / w(lambda)`.
pub fn greens_function(
    spec: &ProblemSpec,
    lambda: Complex64,
    x: f64,
    y: f64,
    tol: f64,
) -> Result<GreenEval> {
    for p in [x, y] {
        if p == spec.c {
            return Err(Error::Config(
                "the Green's function is not defined at the transmission point".into(),
            ));
        }
        if p < spec.a || p > spec.b {
            return Err(Error::Config(format!("point {p} outside [a, b]")));
        }
    }
    let sampler = GreenSampler::new(spec, lambda, &[x, y], tol)?;
    Ok(GreenEval {
        lambda,
        x,
        y,
        value: sampler.eval(spec, x, y),
    })
}

/// Tabulates the Green's function on `xs × ys` with one solve.
pub fn green_table(
    spec: &ProblemSpec,
    lambda: Complex64,
    xs: &[f64],
    ys: &[f64],
    tol: f64,
) -> Result<Vec<GreenEval>> {
    let mut points: Vec<f64> = xs.iter().chain(ys).copied().collect();
    points.retain(|p| *p != spec.c);
    let sampler = GreenSampler::new(spec, lambda, &points, tol)?;
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for &x in xs {
        for &y in ys {
            if x == spec.c || y == spec.c {
                continue;
            }
            out.push(GreenEval {
                lambda,
                x,
                y,
                value: sampler.eval(spec, x, y),
            });
        }
    }
    Ok(out)
}

/// CSV rows `x,y,re_G,im_G` at 17 significant digits.
pub fn write_green_csv<W: Write>(rows: &[GreenEval], out: &mut W) -> Result<()> {
    writeln!(out, "x,y,re_G,im_G")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            crate::fmt_g17(r.x),
            crate::fmt_g17(r.y),
            crate::fmt_g17(r.value.re),
            crate::fmt_g17(r.value.im)
        )?;
    }
    Ok(())
}

/// CSV rows `x,re_u,im_u,re_du,im_du` for a piecewise solution.
pub fn write_solution_csv<W: Write>(u: &PiecewiseTrajectory, out: &mut W) -> Result<()> {
    writeln!(out, "x,re_u,im_u,re_du,im_du")?;
    for traj in [&u.left, &u.right] {
        for node in traj.nodes() {
            writeln!(
                out,
                "{},{},{},{},{}",
                crate::fmt_g17(node.x),
                crate::fmt_g17(node.state.u.re),
                crate::fmt_g17(node.state.u.im),
                crate::fmt_g17(node.state.du.re),
                crate::fmt_g17(node.state.du.im)
            )?;
        }
    }
    Ok(())
}

/// Cumulative integrals of `sol * F_1` on the output nodes `xs`
/// (ascending, spanning one side): entry `j` is the integral from `xs[0]`
/// to `xs[j]`.
fn cumulative(
    sol: &Trajectory,
    side: Side,
    f: &H1Element,
    xs: &[f64],
    tol: f64,
) -> Result<Vec<Complex64>> {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(xs.len());
    out.push(acc);
    for cell in xs.windows(2) {
        acc += adaptive_simpson(
            &|x| Ok(sol.eval(x).u * f.eval(side, x)?),
            cell[0],
            cell[1],
            tol,
        )?;
        out.push(acc);
    }
    Ok(out)
}

fn output_nodes(lo: f64, hi: f64, grid: &[f64]) -> Vec<f64> {
    let mut xs: Vec<f64> = Vec::with_capacity(grid.len() + 2);
    xs.push(lo);
    xs.extend(grid.iter().copied().filter(|x| *x > lo && *x < hi));
    xs.push(hi);
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    xs.dedup();
    xs
}

/// Solves the nonhomogeneous problem `u'' + (lambda - q) u = F_1` with the
/// homogeneous condition at `a`, the data-carrying condition
/// `(u)_beta + lambda (u)'_beta = F_2` at `b`, and both transmission
/// conditions. Assembled from the fundamental pair, so every condition is
/// satisfied to the accuracy of the shooting integrations.
pub fn solve_nonhomogeneous(
    spec: &ProblemSpec,
    lambda: Complex64,
    f: &H1Element,
    grid: &Grids,
    tol: f64,
) -> Result<PiecewiseTrajectory> {
    let phi = solve_phi(spec, lambda, grid, tol)?;
    let chi = solve_chi(spec, lambda, grid, tol)?;
    let CharFnValue { w, w1, w2 } = char_fn_from_pair(spec, &phi, &chi)?;
    if is_resolvent_pole(lambda, w) {
        return Err(Error::ResolventPole {
            lambda: format!("{lambda}"),
            w_abs: w.norm(),
        });
    }

    let gg = spec.gamma1 * spec.gamma2;
    let dd = spec.delta1 * spec.delta2;
    let quad_tol = (tol * 0.1).min(1e-10);

    let xs_left = output_nodes(spec.a, spec.c, &grid.left);
    let xs_right = output_nodes(spec.c, spec.b, &grid.right);

    // Left side: I_phi(x) = ∫_a^x phi F1, I_chi(x) = ∫_x^c chi F1.
    let i_phi = cumulative(&phi.traj.left, Side::Left, f, &xs_left, quad_tol)?;
    let i_chi_fwd = cumulative(&chi.traj.left, Side::Left, f, &xs_left, quad_tol)?;
    let total_left_chi = *i_chi_fwd.last().unwrap();
    // Right side: J_phi(x) = ∫_c^x phi F1, J_chi(x) = ∫_x^b chi F1.
    let j_phi = cumulative(&phi.traj.right, Side::Right, f, &xs_right, quad_tol)?;
    let j_chi_fwd = cumulative(&chi.traj.right, Side::Right, f, &xs_right, quad_tol)?;
    let total_right_chi = *j_chi_fwd.last().unwrap();
    let total_left_phi = *i_phi.last().unwrap();

    let left_const = (dd / gg) * (total_right_chi + f.scalar);
    let right_chi_const = (gg / dd) * total_left_phi;

    let mut left_nodes = Vec::with_capacity(xs_left.len());
    for (j, &x) in xs_left.iter().enumerate() {
        let sp = phi.traj.left.eval(x);
        let sc = chi.traj.left.eval(x);
        let coef_chi = i_phi[j] / w1;
        let coef_phi = (total_left_chi - i_chi_fwd[j] + left_const) / w1;
        let u = sc.u * coef_chi + sp.u * coef_phi;
        let du = sc.du * coef_chi + sp.du * coef_phi;
        let q = spec.q(Side::Left, x)?;
        let f1 = f.eval(Side::Left, x)?;
        left_nodes.push(Node {
            x,
            state: State { u, du },
            deriv: Deriv {
                du,
                ddu: (q - lambda) * u + f1,
            },
        });
    }

    let mut right_nodes = Vec::with_capacity(xs_right.len());
    for (j, &x) in xs_right.iter().enumerate() {
        let sp = phi.traj.right.eval(x);
        let sc = chi.traj.right.eval(x);
        let coef_chi = (right_chi_const + j_phi[j]) / w2;
        let coef_phi = (total_right_chi - j_chi_fwd[j] + f.scalar) / w2;
        let u = sc.u * coef_chi + sp.u * coef_phi;
        let du = sc.du * coef_chi + sp.du * coef_phi;
        let q = spec.q(Side::Right, x)?;
        let f1 = f.eval(Side::Right, x)?;
        right_nodes.push(Node {
            x,
            state: State { u, du },
            deriv: Deriv {
                du,
                ddu: (q - lambda) * u + f1,
            },
        });
    }

    Ok(PiecewiseTrajectory {
        left: Trajectory::from_nodes(Side::Left, lambda, left_nodes)?,
        right: Trajectory::from_nodes(Side::Right, lambda, right_nodes)?,
    })
}

/// Applies the resolvent: returns `(u(., lambda), (u)'_beta)`.
pub fn apply_resolvent(
    spec: &ProblemSpec,
    lambda: Complex64,
    f: &H1Element,
    grid: &Grids,
    tol: f64,
) -> Result<H1Element> {
    let u = solve_nonhomogeneous(spec, lambda, f, grid, tol)?;
    let (_, u_beta_prime) = boundary_forms(spec, &u);
    Ok(H1Element::from_trajectory(u, u_beta_prime))
}
