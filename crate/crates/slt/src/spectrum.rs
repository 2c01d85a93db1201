//! Eigenvalue location and per-eigenvalue quantities.
//!
//! Zeros of the characteristic function are bracketed on a scan, refined
//! by Brent's method (bisection-safe), and post-processed into the
//! quantities the expansion machinery needs: the coupling constant `k_n`
//! with `chi(., lambda_n) = k_n phi(., lambda_n)`, the derivative
//! `w'(lambda_n)`, the squared norm `w'(lambda_n)/k_n` of the eigenelement,
//! and the normalized eigenfunction.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::problem::{ProblemSpec, Side};
use crate::quadrature::adaptive_simpson;
use crate::resolvent::boundary_forms;
use crate::shooting::{
    char_fn, char_fn_value, solve_chi, solve_phi, CharFnTrace, FundamentalSolution, Grids,
    PiecewiseTrajectory, DEFAULT_GRID_PER_SIDE, DEFAULT_TOL,
};

/// One eigenvalue with its derived quantities and normalized eigenfunction.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    /// 1-based index within the computed range.
    pub n: usize,
    pub lambda: f64,
    /// Coupling constant: `chi(., lambda_n) = k_n phi(., lambda_n)`.
    pub k_n: f64,
    /// `w'(lambda_n)`.
    pub omega_prime: f64,
    /// Squared weighted norm of the unnormalized eigenelement,
    /// `w'(lambda_n) / k_n`.
    pub norm_sq: f64,
    /// Normalized eigenfunction `psi_n = phi(., lambda_n) / ||Phi_n||`.
    pub psi: PiecewiseTrajectory,
    /// Boundary entry of the normalized eigenelement,
    /// `(psi_n)'_beta = rho / (k_n ||Phi_n||)`.
    pub psi_beta_prime: f64,
}

/// CSV rows `n,lambda,k_n,omega_prime,norm_sq,psi_beta_prime`.
pub fn write_eigen_csv<W: Write>(eigs: &[Eigenpair], out: &mut W) -> Result<()> {
    writeln!(out, "n,lambda,k_n,omega_prime,norm_sq,psi_beta_prime")?;
    for e in eigs {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            e.n,
            crate::fmt_g17(e.lambda),
            crate::fmt_g17(e.k_n),
            crate::fmt_g17(e.omega_prime),
            crate::fmt_g17(e.norm_sq),
            crate::fmt_g17(e.psi_beta_prime)
        )?;
    }
    Ok(())
}

/// All consecutive sample pairs of a trace with a strict sign change.
pub fn scan_brackets(trace: &CharFnTrace) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 1..trace.len() {
        let (w0, w1) = (trace.values[i - 1], trace.values[i]);
        if w0.signum() * w1.signum() < 0.0 {
            out.push((trace.lambdas[i - 1], trace.lambdas[i]));
        }
    }
    out
}

/// Brent's method on `w(lambda)` over a sign-changing bracket. Always
/// polishes to the machine-precision floor, so the reported root moves by
/// less than any requested `tol_lambda` when the tolerance is tightened.
pub fn refine_root(spec: &ProblemSpec, lo: f64, hi: f64, tol_lambda: f64) -> Result<f64> {
    if !(tol_lambda > 0.0) {
        return Err(Error::Config("tol_lambda must be positive".into()));
    }
    let eval = |l: f64| -> Result<f64> { Ok(char_fn(spec, l.into(), DEFAULT_TOL)?.re) };
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (eval(a)?, eval(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() * fb.signum() > 0.0 {
        return Err(Error::InvalidBracket { lo, hi });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.abs() > fc.abs() {
            // Keep b the best estimate, (a, b) the bracket.
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol_lambda.min(1e-13 * (1.0 + b.abs()));
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Inverse quadratic interpolation, falling back to secant.
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = eval(b)?;
        if fb.signum() * fc.signum() > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Ok(b)
}

/// Central-difference derivative with one Richardson extrapolation step.
/// Returns the extrapolated value and an error estimate.
pub fn richardson_derivative<F>(f: &F, x: f64, h0: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let central = |h: f64| -> Result<f64> { Ok((f(x + h)? - f(x - h)?) / (2.0 * h)) };
    let d1 = central(h0)?;
    let d2 = central(0.5 * h0)?;
    let value = (4.0 * d2 - d1) / 3.0;
    Ok((value, (d2 - d1).abs() / 3.0))
}

/// Default differentiation step for [`char_fn_derivative`].
pub fn default_h0(lambda: f64) -> f64 {
    0.02 * (1.0 + lambda.abs()).sqrt()
}

/// `w'(lambda_n)` by Richardson-extrapolated central differences. Rejects
/// the value when it is negligible against the magnitude of the samples,
/// which signals a non-simple zero (possible only through upstream
/// inaccuracy or an invalid problem).
pub fn char_fn_derivative(spec: &ProblemSpec, lambda_n: f64, h0: f64, tol: f64) -> Result<f64> {
    let f = |l: f64| -> Result<f64> { Ok(char_fn(spec, l.into(), tol)?.re) };
    let (value, _err) = richardson_derivative(&f, lambda_n, h0)?;
    let scale = ((f(lambda_n + h0)?.abs() + f(lambda_n - h0)?.abs()) / (2.0 * h0)).max(1.0);
    if value.abs() < 1e-6 * scale.min(1.0) || value == 0.0 {
        return Err(Error::NonSimpleZero {
            lambda: lambda_n,
            w_prime_abs: value.abs(),
        });
    }
    Ok(value)
}

/// Residual tolerance for the linear-dependence check behind `k_n`.
pub const COUPLING_RESIDUAL_TOL: f64 = 1e-6;

/// Coupling constant `k_n` with `chi = k_n phi` at an eigenvalue. The
/// extraction point maximizes `|phi|` to stay away from nodes, and the
/// dependence residual is verified over both trajectories.
pub fn coupling_constant(
    spec: &ProblemSpec,
    lambda_n: f64,
    phi: &FundamentalSolution,
    chi: &FundamentalSolution,
) -> Result<f64> {
    let _ = spec;
    let (side, x_star, phi_max) = phi.traj.max_abs_u();
    if phi_max == 0.0 {
        return Err(Error::CouplingResidual {
            lambda: lambda_n,
            residual: f64::INFINITY,
        });
    }
    let k = chi.traj.eval(side, x_star).u / phi.traj.eval(side, x_star).u;

    let mut chi_max = 0.0f64;
    for traj in [&chi.traj.left, &chi.traj.right] {
        for node in traj.nodes() {
            chi_max = chi_max.max(node.state.u.norm());
        }
    }
    let mut residual = 0.0f64;
    for (s, phi_traj, chi_traj) in [
        (Side::Left, &phi.traj.left, &chi.traj.left),
        (Side::Right, &phi.traj.right, &chi.traj.right),
    ] {
        for node in phi_traj.nodes() {
            let r = (chi_traj.eval(node.x).u - k * node.state.u).norm();
            residual = residual.max(r);
        }
        let _ = s;
    }
    residual /= chi_max.max(f64::MIN_POSITIVE);
    if residual > COUPLING_RESIDUAL_TOL {
        return Err(Error::CouplingResidual {
            lambda: lambda_n,
            residual,
        });
    }
    Ok(k.re)
}

/// Relative tolerance for the quadrature cross-check of the norm identity.
pub const NORM_CROSS_CHECK_TOL: f64 = 1e-5;

/// Builds the [`Eigenpair`]: `norm_sq = w'(lambda_n)/k_n`, cross-checked
/// against the direct weighted quadrature of `phi` plus the boundary term,
/// then normalizes.
pub fn norm_and_normalize(
    spec: &ProblemSpec,
    n: usize,
    lambda_n: f64,
    phi: &FundamentalSolution,
    k_n: f64,
    omega_prime: f64,
) -> Result<Eigenpair> {
    let norm_sq = omega_prime / k_n;
    if !(norm_sq > 0.0) {
        return Err(Error::NormNotPositive {
            lambda: lambda_n,
            norm_sq,
        });
    }

    // Direct quadrature of the squared weighted norm:
    // gg ∫ phi^2 + dd ∫ phi^2 + (dd/rho) ((phi)'_beta)^2.
    let gg = spec.gamma1 * spec.gamma2;
    let dd = spec.delta1 * spec.delta2;
    let quad_left = adaptive_simpson(
        &|x| {
            let u = phi.traj.left.eval(x).u;
            Ok(u * u)
        },
        spec.a,
        spec.c,
        1e-10,
    )?;
    let quad_right = adaptive_simpson(
        &|x| {
            let u = phi.traj.right.eval(x).u;
            Ok(u * u)
        },
        spec.c,
        spec.b,
        1e-10,
    )?;
    let (_, phi_beta_prime) = boundary_forms(spec, &phi.traj);
    let quad_norm_sq =
        (gg * quad_left + dd * quad_right + (dd / spec.rho) * phi_beta_prime * phi_beta_prime).re;
    if (quad_norm_sq - norm_sq).abs() > NORM_CROSS_CHECK_TOL * norm_sq.abs() {
        return Err(Error::NormCrossCheck {
            lambda: lambda_n,
            norm_sq,
            quadrature: quad_norm_sq,
        });
    }

    let norm = norm_sq.sqrt();
    let psi = phi.traj.scaled(Complex64::new(1.0 / norm, 0.0));
    Ok(Eigenpair {
        n,
        lambda: lambda_n,
        k_n,
        omega_prime,
        norm_sq,
        psi,
        psi_beta_prime: (spec.rho / k_n) / norm,
    })
}

/// Search parameters for [`find_eigenvalues`].
#[derive(Debug, Clone)]
pub struct EigenSearch {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub max_count: usize,
    /// Integration tolerance for the shooting solves.
    pub tol: f64,
    /// Bracket-refinement tolerance on lambda.
    pub tol_lambda: f64,
    /// Baseline number of scan samples (the scan is uniform in
    /// `sign(lambda) sqrt|lambda|`, which tracks the asymptotic root
    /// spacing, and is extended automatically for wide ranges).
    pub n_samples: usize,
    /// Sample points per side for the stored eigenfunctions.
    pub grid_per_side: usize,
    /// Scan even when the sign class is negative (the spectrum may then be
    /// empty and the postprocessing identities are not guaranteed).
    pub allow_sign_indefinite: bool,
}

impl EigenSearch {
    pub fn new(lambda_min: f64, lambda_max: f64, max_count: usize) -> EigenSearch {
        EigenSearch {
            lambda_min,
            lambda_max,
            max_count,
            tol: DEFAULT_TOL,
            tol_lambda: 1e-12,
            n_samples: 201,
            grid_per_side: DEFAULT_GRID_PER_SIDE,
            allow_sign_indefinite: false,
        }
    }
}

fn stretch(lambda: f64) -> f64 {
    lambda.signum() * lambda.abs().sqrt()
}

fn unstretch(t: f64) -> f64 {
    t * t.abs()
}

/// Scans for sign changes of `w` and returns the refined roots in the
/// range, deduplicated.
fn scan_roots(spec: &ProblemSpec, search: &EigenSearch, n_samples: usize) -> Result<Vec<f64>> {
    let t_min = stretch(search.lambda_min);
    let t_max = stretch(search.lambda_max);
    let total_len = spec.b - spec.a;
    // Roots are asymptotically pi / (b - a) apart in the stretched
    // coordinate; sample several times per expected spacing.
    let needed = (4.0 * (t_max - t_min) * total_len / std::f64::consts::PI).ceil() as usize + 8;
    let n = n_samples.max(needed);

    let mut prev_l = search.lambda_min;
    let mut prev_w = char_fn(spec, prev_l.into(), search.tol)?.re;
    let mut values = vec![(prev_l, prev_w)];
    let mut roots = Vec::new();
    for i in 1..n {
        let t = t_min + (t_max - t_min) * (i as f64) / ((n - 1) as f64);
        let l = unstretch(t);
        if l <= prev_l {
            continue;
        }
        let w = char_fn(spec, l.into(), search.tol)?.re;
        values.push((l, w));
        if prev_w.signum() * w.signum() < 0.0 {
            roots.push(refine_root(spec, prev_l, l, search.tol_lambda)?);
        }
        prev_l = l;
        prev_w = w;
    }

    // Grid-minimum heuristic for zeros that touch without crossing; simple
    // zeros are the theoretical case, so a dip is only worth a warning.
    for i in 1..values.len().saturating_sub(1) {
        let (l, w) = values[i];
        let (_, w_before) = values[i - 1];
        let (_, w_after) = values[i + 1];
        let neighbor_mag = w_before.abs().max(w_after.abs());
        if w.abs() < 1e-4 * neighbor_mag
            && w.abs() <= w_before.abs()
            && w.abs() <= w_after.abs()
            && w_before.signum() == w.signum()
            && w_after.signum() == w.signum()
        {
            log::warn!(
                "characteristic function dips to |w| = {:.3e} near lambda = {l} \
                 without a sign change; a double root may have been missed",
                w.abs()
            );
        }
    }
    Ok(roots)
}

/// Locates eigenvalues in `[lambda_min, lambda_max]` and computes every
/// per-eigenvalue quantity. The scan is repeated at doubled density and
/// the root sets merged, which reduces the risk of roots slipping between
/// samples.
pub fn find_eigenvalues(spec: &ProblemSpec, search: &EigenSearch) -> Result<Vec<Eigenpair>> {
    let report = spec.validate();
    if !report.pass {
        return Err(Error::InvalidProblem(
            report
                .errors()
                .map(|f| f.message.clone())
                .collect::<Vec<_>>()
                .join("; "),
        ));
    }
    if !report.self_adjoint && !search.allow_sign_indefinite {
        return Err(Error::NotSelfAdjoint);
    }

    let mut roots = scan_roots(spec, search, search.n_samples)?;
    let denser = scan_roots(spec, search, 2 * search.n_samples)?;
    for r in denser {
        let dup = roots
            .iter()
            .any(|&x| (x - r).abs() <= 10.0 * search.tol_lambda.max(1e-11 * (1.0 + r.abs())));
        if !dup {
            roots.push(r);
        }
    }
    roots.sort_by(|p, q| p.partial_cmp(q).unwrap());
    roots.truncate(search.max_count);

    let grids = Grids::uniform(spec, search.grid_per_side);
    let mut eigs = Vec::with_capacity(roots.len());
    for (idx, &lambda_n) in roots.iter().enumerate() {
        let phi = solve_phi(spec, lambda_n.into(), &grids, search.tol)?;
        let chi = solve_chi(spec, lambda_n.into(), &grids, search.tol)?;
        let k_n = coupling_constant(spec, lambda_n, &phi, &chi)?;
        let omega_prime = char_fn_derivative(spec, lambda_n, default_h0(lambda_n), search.tol)?;
        eigs.push(norm_and_normalize(
            spec,
            idx + 1,
            lambda_n,
            &phi,
            k_n,
            omega_prime,
        )?);
    }
    Ok(eigs)
}

#[cfg(test)]
pub(crate) mod oracles {
    //! Independent scalar oracles used by tests: closed-form characteristic
    //! functions for the zero-potential reference problems, root-found by
    //! plain bisection.

    /// `w(lambda)` for the continuous-limit problem: roots solve
    /// `tan s = 1/s`.
    pub fn w_cont(lambda: f64) -> f64 {
        if lambda >= 0.0 {
            let s = lambda.sqrt();
            s.cos() - s * s.sin()
        } else {
            let t = (-lambda).sqrt();
            t.cosh() + t * t.sinh()
        }
    }

    /// Right-side Wronskian for the jump problem with
    /// `2u(0-) = u(0+)`, `u'(0-) = 2u'(0+)`, derived by hand from the
    /// shooting construction with `q = 0`.
    pub fn w2_trans(lambda: f64) -> f64 {
        if lambda >= 0.0 {
            let s = lambda.sqrt();
            if s < 1e-8 {
                // Limit s -> 0 of the expression below.
                return 0.5 - 2.0 * lambda - 2.5 * lambda;
            }
            -2.5 * s * s.sin() * s.cos() - 2.0 * s.sin() * s.sin() + 0.5 * s.cos() * s.cos()
        } else {
            let t = (-lambda).sqrt();
            2.5 * t * t.sinh() * t.cosh() + 2.0 * t.sinh() * t.sinh() + 0.5 * t.cosh() * t.cosh()
        }
    }

    /// Bisection to near machine precision on a sign-changing bracket.
    pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let mut flo = f(lo);
        assert!(flo * f(hi) < 0.0, "oracle bracket [{lo}, {hi}] invalid");
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            let fm = f(mid);
            if fm == 0.0 {
                return mid;
            }
            if flo * fm < 0.0 {
                hi = mid;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        0.5 * (lo + hi)
    }

    /// First `count` positive roots of a function of `s = sqrt(lambda)`,
    /// found by scan + bisection; returned as lambda values.
    pub fn lambda_roots(f: impl Fn(f64) -> f64 + Copy, s_max: f64, count: usize) -> Vec<f64> {
        let n = 20_000;
        let mut out = Vec::new();
        let mut prev_s = 1e-6;
        let mut prev = f(prev_s);
        for i in 1..=n {
            let s = s_max * (i as f64) / (n as f64);
            let v = f(s);
            if prev * v < 0.0 {
                let root = bisect(f, prev_s, s);
                out.push(root * root);
                if out.len() == count {
                    break;
                }
            }
            prev_s = s;
            prev = v;
        }
        out
    }

    /// Roots of `tan s = 1/s` as lambda values.
    pub fn tan_roots(count: usize) -> Vec<f64> {
        lambda_roots(|s| w_cont(s * s), 40.0, count)
    }
}
