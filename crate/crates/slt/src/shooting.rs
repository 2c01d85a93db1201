//! Fundamental solutions and the characteristic function.
//!
//! `phi` shoots forward from `a` with `u(a) = alpha2`, `u'(a) = -alpha1`
//! (so the condition at `a` holds identically) and crosses the interface
//! by the jump `u(c+0) = (gamma1/delta1) u(c-0)`,
//! `u'(c+0) = (gamma2/delta2) u'(c-0)`. `chi` shoots backward from `b`
//! with `u(b) = beta2p*lambda + beta2`, `u'(b) = beta1p*lambda + beta1`
//! (so the condition at `b` holds identically) and crosses with the
//! inverse jump. Eigenvalues are the zeros of
//! `w(lambda) = gamma1*gamma2*w1 = delta1*delta2*w2`, where `w1`, `w2`
//! are the side Wronskians of the pair.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ode::{integrate, Direction, State, Trajectory};
use crate::problem::{ProblemSpec, Side};

/// Relative tolerance for the built-in `gamma1*gamma2*w1 = delta1*delta2*w2`
/// cross-check; a violation signals integrator inaccuracy.
pub const CHAR_FN_CONSISTENCY_TOL: f64 = 1e-7;

/// Default number of sample abscissae per side when a dense trajectory is
/// wanted.
pub const DEFAULT_GRID_PER_SIDE: usize = 201;

/// Default local error tolerance for the shooting integrations.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Requested sample abscissae for the two sides.
#[derive(Debug, Clone, Default)]
pub struct Grids {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl Grids {
    /// No interior samples; trajectories still carry the subinterval limits
    /// plus every accepted integration step.
    pub fn coarse() -> Grids {
        Grids::default()
    }

    /// `n` uniform points per side, endpoints included.
    pub fn uniform(spec: &ProblemSpec, n: usize) -> Grids {
        let lin = |lo: f64, hi: f64| -> Vec<f64> {
            (0..n)
                .map(|i| lo + (hi - lo) * (i as f64) / ((n - 1).max(1) as f64))
                .collect()
        };
        Grids {
            left: lin(spec.a, spec.c),
            right: lin(spec.c, spec.b),
        }
    }
}

/// A solution defined on both sides of the transmission point.
#[derive(Debug, Clone)]
pub struct PiecewiseTrajectory {
    pub left: Trajectory,
    pub right: Trajectory,
}

impl PiecewiseTrajectory {
    /// Evaluates on the given side; `x` is clamped to that side's span.
    pub fn eval(&self, side: Side, x: f64) -> State {
        match side {
            Side::Left => self.left.eval(x),
            Side::Right => self.right.eval(x),
        }
    }

    /// One-sided value just left of the transmission point.
    pub fn at_c_minus(&self) -> State {
        self.left.end_state()
    }

    /// One-sided value just right of the transmission point.
    pub fn at_c_plus(&self) -> State {
        self.right.start_state()
    }

    pub fn at_a(&self) -> State {
        self.left.start_state()
    }

    pub fn at_b(&self) -> State {
        self.right.end_state()
    }

    /// Pointwise scaling of values and derivatives.
    pub fn scaled(&self, factor: Complex64) -> PiecewiseTrajectory {
        PiecewiseTrajectory {
            left: scale_trajectory(&self.left, factor),
            right: scale_trajectory(&self.right, factor),
        }
    }

    /// Largest `|u|` over the stored nodes of both sides, with its side and
    /// abscissa.
    pub fn max_abs_u(&self) -> (Side, f64, f64) {
        let mut best = (Side::Left, self.left.nodes()[0].x, 0.0);
        for (side, traj) in [(Side::Left, &self.left), (Side::Right, &self.right)] {
            for node in traj.nodes() {
                let mag = node.state.u.norm();
                if mag > best.2 {
                    best = (side, node.x, mag);
                }
            }
        }
        best
    }
}

fn scale_trajectory(traj: &Trajectory, factor: Complex64) -> Trajectory {
    let mut out = traj.clone();
    out.scale_in_place(factor);
    out
}

/// Which fundamental solution a [`FundamentalSolution`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionKind {
    Phi,
    Chi,
}

/// One fundamental solution with its dense trajectories on both sides.
#[derive(Debug, Clone)]
pub struct FundamentalSolution {
    pub kind: SolutionKind,
    pub lambda: Complex64,
    pub traj: PiecewiseTrajectory,
}

impl FundamentalSolution {
    pub fn eval(&self, side: Side, x: f64) -> State {
        self.traj.eval(side, x)
    }
}

/// Builds `phi`: satisfies the condition at `a` identically and both
/// transmission conditions by construction.
pub fn solve_phi(
    spec: &ProblemSpec,
    lambda: Complex64,
    grids: &Grids,
    tol: f64,
) -> Result<FundamentalSolution> {
    let init = State::new(spec.alpha2, -spec.alpha1);
    let left = integrate(
        spec,
        lambda,
        Side::Left,
        Direction::Forward,
        init,
        &grids.left,
        tol,
    )?;
    let at_c = left.end_state();
    let jumped = State {
        u: (spec.gamma1 / spec.delta1) * at_c.u,
        du: (spec.gamma2 / spec.delta2) * at_c.du,
    };
    let right = integrate(
        spec,
        lambda,
        Side::Right,
        Direction::Forward,
        jumped,
        &grids.right,
        tol,
    )?;
    Ok(FundamentalSolution {
        kind: SolutionKind::Phi,
        lambda,
        traj: PiecewiseTrajectory { left, right },
    })
}

/// Builds `chi`: satisfies the eigenparameter-dependent condition at `b`
/// identically and both transmission conditions by construction.
pub fn solve_chi(
    spec: &ProblemSpec,
    lambda: Complex64,
    grids: &Grids,
    tol: f64,
) -> Result<FundamentalSolution> {
    let init = State {
        u: spec.beta2p * lambda + spec.beta2,
        du: spec.beta1p * lambda + spec.beta1,
    };
    let right = integrate(
        spec,
        lambda,
        Side::Right,
        Direction::Backward,
        init,
        &grids.right,
        tol,
    )?;
    let at_c = right.start_state();
    let jumped = State {
        u: (spec.delta1 / spec.gamma1) * at_c.u,
        du: (spec.delta2 / spec.gamma2) * at_c.du,
    };
    let left = integrate(
        spec,
        lambda,
        Side::Left,
        Direction::Backward,
        jumped,
        &grids.left,
        tol,
    )?;
    Ok(FundamentalSolution {
        kind: SolutionKind::Chi,
        lambda,
        traj: PiecewiseTrajectory { left, right },
    })
}

fn wronskian(s1: &State, s2: &State) -> Complex64 {
    s1.u * s2.du - s2.u * s1.du
}

/// Side Wronskians `(w1, w2)` of a `phi`/`chi` pair, evaluated at the
/// interface limits where both trajectories hold exact states.
pub fn wronskians(phi: &FundamentalSolution, chi: &FundamentalSolution) -> (Complex64, Complex64) {
    let w1 = wronskian(&phi.traj.at_c_minus(), &chi.traj.at_c_minus());
    let w2 = wronskian(&phi.traj.at_c_plus(), &chi.traj.at_c_plus());
    (w1, w2)
}

/// Characteristic value at one `lambda`, with both Wronskian routes.
#[derive(Debug, Clone, Copy)]
pub struct CharFnValue {
    /// `delta1*delta2*w2`, the value reported as `w(lambda)`.
    pub w: Complex64,
    pub w1: Complex64,
    pub w2: Complex64,
}

/// Evaluates both Wronskian routes and cross-checks them; the redundancy
/// of the identity `gamma1*gamma2*w1 = delta1*delta2*w2` acts as a
/// built-in accuracy monitor.
pub fn char_fn_value(spec: &ProblemSpec, lambda: Complex64, tol: f64) -> Result<CharFnValue> {
    let grids = Grids::coarse();
    let phi = solve_phi(spec, lambda, &grids, tol)?;
    let chi = solve_chi(spec, lambda, &grids, tol)?;
    char_fn_from_pair(spec, &phi, &chi)
}

/// Same cross-checked evaluation from an existing pair.
pub fn char_fn_from_pair(
    spec: &ProblemSpec,
    phi: &FundamentalSolution,
    chi: &FundamentalSolution,
) -> Result<CharFnValue> {
    let lambda = phi.lambda;
    let (w1, w2) = wronskians(phi, chi);
    let gg = spec.gamma1 * spec.gamma2;
    let dd = spec.delta1 * spec.delta2;
    let left = gg * w1;
    let right = dd * w2;
    // Both routes vanish together at eigenvalues, so the comparison scale
    // must include the cancellation magnitude of the Wronskian at the
    // interface, not just |w| itself.
    let pm = phi.traj.at_c_minus();
    let cm = chi.traj.at_c_minus();
    let cancel = (pm.u.norm() * cm.du.norm() + cm.u.norm() * pm.du.norm()) * gg.abs();
    let scale = left.norm().max(right.norm()).max(cancel).max(f64::MIN_POSITIVE);
    if (left - right).norm() > CHAR_FN_CONSISTENCY_TOL * scale {
        return Err(Error::CharFnInconsistent {
            lambda: format!("{lambda}"),
            w_left: format!("{left}"),
            w_right: format!("{right}"),
        });
    }
    Ok(CharFnValue { w: right, w1, w2 })
}

/// The characteristic function `w(lambda) = delta1*delta2*w2(lambda)`.
pub fn char_fn(spec: &ProblemSpec, lambda: Complex64, tol: f64) -> Result<Complex64> {
    Ok(char_fn_value(spec, lambda, tol)?.w)
}

/// Uniform sampling of `w` over a real interval.
#[derive(Debug, Clone)]
pub struct CharFnTrace {
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    /// SHA-256 of the originating problem's canonical JSON.
    pub fingerprint: String,
}

impl CharFnTrace {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Number of strict sign changes between consecutive samples.
    pub fn sign_changes(&self) -> usize {
        self.values
            .windows(2)
            .filter(|w| w[0].signum() * w[1].signum() < 0.0)
            .count()
    }

    /// CSV rows `lambda,w` at 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "lambda,w")?;
        for (l, w) in self.lambdas.iter().zip(&self.values) {
            writeln!(out, "{},{}", crate::fmt_g17(*l), crate::fmt_g17(*w))?;
        }
        Ok(())
    }
}

/// Samples `w` uniformly on `[lambda_min, lambda_max]`.
pub fn char_fn_trace(
    spec: &ProblemSpec,
    lambda_min: f64,
    lambda_max: f64,
    n_samples: usize,
    tol: f64,
) -> Result<CharFnTrace> {
    if !(lambda_min < lambda_max) || n_samples < 2 {
        return Err(Error::Config(format!(
            "need lambda_min < lambda_max and n_samples >= 2, got [{lambda_min}, {lambda_max}] with {n_samples}"
        )));
    }
    let mut lambdas = Vec::with_capacity(n_samples);
    let mut values = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let l = lambda_min + (lambda_max - lambda_min) * (i as f64) / ((n_samples - 1) as f64);
        let w = char_fn(spec, l.into(), tol)?;
        lambdas.push(l);
        values.push(w.re);
    }
    Ok(CharFnTrace {
        lambdas,
        values,
        fingerprint: spec.fingerprint(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::fixtures::{p_cex, p_cont, p_qpot, p_trans};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Closed form for the continuous-limit problem:
    /// `w(lambda) = cos(s) - s sin(s)` with `s = sqrt(lambda)`.
    fn w_cont(lambda: f64) -> f64 {
        if lambda >= 0.0 {
            let s = lambda.sqrt();
            s.cos() - s * s.sin()
        } else {
            let t = (-lambda).sqrt();
            t.cosh() + t * t.sinh()
        }
    }

    #[test]
    fn phi_on_continuous_problem_is_linear_at_zero() {
        let spec = p_cont();
        let phi = solve_phi(&spec, c(0.0), &Grids::uniform(&spec, 21), 1e-10).unwrap();
        let minus = phi.traj.at_c_minus();
        let plus = phi.traj.at_c_plus();
        assert!((minus.u.re - (-0.5)).abs() < 1e-12);
        assert_eq!(minus.u, plus.u);
        assert_eq!(minus.du, plus.du);
    }

    #[test]
    fn phi_right_piece_on_counterexample() {
        // phi_2(x) = sin(2(x-1))/2 at lambda = 4.
        let spec = p_cex();
        let phi = solve_phi(&spec, c(4.0), &Grids::uniform(&spec, 41), 1e-10).unwrap();
        let at_b = phi.traj.at_b();
        assert!(at_b.u.norm() < 1e-9);
        assert!((at_b.du.re - 1.0).abs() < 1e-9);
        let mid = phi.eval(Side::Right, 0.5);
        assert!((mid.u.re - (2.0 * (0.5f64 - 1.0)).sin() / 2.0).abs() < 1e-9);
    }

    #[test]
    fn phi_jump_arithmetic_on_transmission_problem() {
        let spec = p_trans();
        let phi = solve_phi(&spec, c(4.0), &Grids::coarse(), 1e-10).unwrap();
        let plus = phi.traj.at_c_plus();
        assert!((plus.u.re - (-(2.0f64).sin())).abs() < 1e-9);
        assert!((plus.du.re - (-(2.0f64).cos() / 2.0)).abs() < 1e-9);
    }

    #[test]
    fn chi_on_continuous_problem() {
        let spec = p_cont();
        // lambda = 0: chi starts at (1, 0) and stays constant.
        let chi = solve_chi(&spec, c(0.0), &Grids::uniform(&spec, 21), 1e-10).unwrap();
        assert!((chi.eval(Side::Left, 0.2).u.re - 1.0).abs() < 1e-12);
        assert!((chi.traj.at_b().u.re - 1.0).abs() < 1e-15);
        // lambda = 1: chi(x) = cos(x-1) + sin(x-1).
        let chi = solve_chi(&spec, c(1.0), &Grids::uniform(&spec, 21), 1e-10).unwrap();
        for x in [0.0, 0.3, 0.7, 1.0] {
            let side = if x < 0.5 { Side::Left } else { Side::Right };
            let expect = (x - 1.0f64).cos() + (x - 1.0f64).sin();
            assert!(
                (chi.eval(side, x).u.re - expect).abs() < 1e-9,
                "chi mismatch at x={x}"
            );
        }
    }

    #[test]
    fn chi_initial_state_reads_off_lambda() {
        let spec = p_cex();
        let chi = solve_chi(&spec, c(4.0), &Grids::coarse(), 1e-10).unwrap();
        let at_b = chi.traj.at_b();
        assert_eq!(at_b.u.re, 1.0);
        assert_eq!(at_b.du.re, 4.0);
    }

    #[test]
    fn transmission_residuals_vanish_by_construction() {
        for spec in [p_cont(), p_cex(), p_trans(), p_qpot()] {
            for lambda in [c(-3.0), c(2.0), c(17.0)] {
                let phi = solve_phi(&spec, lambda, &Grids::coarse(), 1e-10).unwrap();
                let chi = solve_chi(&spec, lambda, &Grids::coarse(), 1e-10).unwrap();
                for sol in [&phi, &chi] {
                    let minus = sol.traj.at_c_minus();
                    let plus = sol.traj.at_c_plus();
                    let r_u = spec.gamma1 * minus.u - spec.delta1 * plus.u;
                    let r_du = spec.gamma2 * minus.du - spec.delta2 * plus.du;
                    assert_eq!(r_u.norm(), 0.0, "value residual for {:?}", sol.kind);
                    assert_eq!(r_du.norm(), 0.0, "derivative residual for {:?}", sol.kind);
                }
            }
        }
    }

    #[test]
    fn wronskian_identity_holds() {
        // Eq-level identity: gamma1*gamma2*w1 = delta1*delta2*w2.
        let mut lambda = 0.37;
        for spec in [p_cont(), p_cex(), p_trans(), p_qpot()] {
            for _ in 0..12 {
                lambda = (lambda * 7.13 + 3.7) % 90.0 - 20.0;
                let phi = solve_phi(&spec, c(lambda), &Grids::coarse(), 1e-10).unwrap();
                let chi = solve_chi(&spec, c(lambda), &Grids::coarse(), 1e-10).unwrap();
                let (w1, w2) = wronskians(&phi, &chi);
                let lhs = spec.gamma1 * spec.gamma2 * w1;
                let rhs = spec.delta1 * spec.delta2 * w2;
                let scale = lhs.norm().max(rhs.norm()).max(1e-3);
                assert!(
                    (lhs - rhs).norm() <= 1e-7 * scale,
                    "identity violated at lambda={lambda}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn wronskian_values_on_reference_problems() {
        let spec = p_cont();
        let phi = solve_phi(&spec, c(0.0), &Grids::coarse(), 1e-10).unwrap();
        let chi = solve_chi(&spec, c(0.0), &Grids::coarse(), 1e-10).unwrap();
        let (w1, _) = wronskians(&phi, &chi);
        assert!((w1.re - 1.0).abs() < 1e-10);

        let spec = p_cex();
        let phi = solve_phi(&spec, c(4.0), &Grids::coarse(), 1e-10).unwrap();
        let chi = solve_chi(&spec, c(4.0), &Grids::coarse(), 1e-10).unwrap();
        let (_, w2) = wronskians(&phi, &chi);
        assert!((w2.re - (-1.0)).abs() < 1e-9);
    }

    #[test]
    fn char_fn_matches_closed_form_on_continuous_problem() {
        let spec = p_cont();
        for lambda in [-5.0, 0.0, 0.5, 3.0, 20.0, 77.0] {
            let w = char_fn(&spec, c(lambda), 1e-10).unwrap();
            assert!(
                (w.re - w_cont(lambda)).abs() < 1e-8 * w_cont(lambda).abs().max(1.0),
                "w({lambda}) = {} vs {}",
                w.re,
                w_cont(lambda)
            );
            assert!(w.im.abs() < 1e-12);
        }
        // Near the first root of tan(s) = 1/s.
        let s = 0.8603335890f64;
        let w = char_fn(&spec, c(s * s), 1e-10).unwrap();
        assert!(w.norm() < 1e-6);
    }

    #[test]
    fn counterexample_char_fn_is_identically_one() {
        let spec = p_cex();
        for lambda in [-10.0, 0.0, 25.0, 100.0] {
            let w = char_fn(&spec, c(lambda), 1e-10).unwrap();
            assert!(
                (w.re - 1.0).abs() < 1e-8,
                "w({lambda}) = {} should be 1",
                w.re
            );
        }
    }

    #[test]
    fn trace_counts_sign_changes() {
        let spec = p_cont();
        let trace = char_fn_trace(&spec, -1.0, 120.0, 500, 1e-10).unwrap();
        assert_eq!(trace.len(), 500);
        assert!(trace.lambdas.windows(2).all(|w| w[0] < w[1]));
        assert!(trace.sign_changes() >= 3);

        let spec = p_cex();
        let trace = char_fn_trace(&spec, -50.0, 200.0, 500, 1e-10).unwrap();
        assert_eq!(trace.sign_changes(), 0);
    }

    #[test]
    fn trace_rejects_bad_arguments() {
        let spec = p_cont();
        assert!(char_fn_trace(&spec, 1.0, 1.0, 10, 1e-10).is_err());
        assert!(char_fn_trace(&spec, 0.0, 1.0, 1, 1e-10).is_err());
    }

    #[test]
    fn real_lambda_gives_real_w() {
        for spec in [p_cont(), p_trans(), p_qpot()] {
            for lambda in [-7.0, 1.3, 44.0] {
                let w = char_fn(&spec, c(lambda), 1e-10).unwrap();
                assert!(w.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn char_fn_is_analytic_in_lambda() {
        // Finite-difference Cauchy-Riemann check: dw/d(Im) = i dw/d(Re).
        for spec in [p_cont(), p_trans()] {
            for lambda in [Complex64::new(2.0, 1.0), Complex64::new(15.0, -2.0)] {
                let h = 1e-3 * (1.0 + lambda.norm());
                let tol = 1e-11;
                let w_re = (char_fn(&spec, lambda + h, tol).unwrap()
                    - char_fn(&spec, lambda - h, tol).unwrap())
                    / (2.0 * h);
                let ih = Complex64::new(0.0, h);
                let w_im = (char_fn(&spec, lambda + ih, tol).unwrap()
                    - char_fn(&spec, lambda - ih, tol).unwrap())
                    / (2.0 * h);
                let scale = w_re.norm().max(1.0);
                assert!(
                    (w_im - Complex64::i() * w_re).norm() <= 1e-5 * scale,
                    "Cauchy-Riemann violated at {lambda}"
                );
            }
        }
    }
}
