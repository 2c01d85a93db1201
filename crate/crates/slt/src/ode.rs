//! Second-order ODE integration over one smooth subinterval.
//!
//! Integrates `u'' = (q(x) - lambda) u` as a first-order system in the
//! state `(u, u')` with an embedded Dormand-Prince 5(4) pair, forward or
//! backward. Requested grid abscissae are hit exactly (they bound the
//! adaptive steps); every accepted step is retained so the trajectory can
//! be evaluated densely by cubic Hermite interpolation between nodes.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::problem::{ProblemSpec, Side};

/// Solution value and derivative at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub u: Complex64,
    pub du: Complex64,
}

impl State {
    pub fn new(u: impl Into<Complex64>, du: impl Into<Complex64>) -> State {
        State {
            u: u.into(),
            du: du.into(),
        }
    }

    pub fn zero() -> State {
        State::new(0.0, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.u.re.is_finite()
            && self.u.im.is_finite()
            && self.du.re.is_finite()
            && self.du.im.is_finite()
    }

    fn axpy(&self, h: f64, k: &Deriv) -> State {
        State {
            u: self.u + h * k.du,
            du: self.du + h * k.ddu,
        }
    }
}

/// Derivative of a [`State`]: `(u', u'')`.
#[derive(Debug, Clone, Copy)]
pub struct Deriv {
    pub du: Complex64,
    pub ddu: Complex64,
}

impl Deriv {
    fn zero() -> Deriv {
        Deriv {
            du: Complex64::new(0.0, 0.0),
            ddu: Complex64::new(0.0, 0.0),
        }
    }
}

/// One stored sample: abscissa, state, and state derivative.
#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub x: f64,
    pub state: State,
    pub deriv: Deriv,
}

/// Integration direction along the subinterval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Dense solution samples on one subinterval, ascending in `x`. The first
/// and last nodes always sit on the subinterval limits, so one-sided
/// interface values can be read off directly.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub side: Side,
    pub lambda: Complex64,
    nodes: Vec<Node>,
}

impl Trajectory {
    /// Builds a trajectory from precomputed nodes (used by the
    /// nonhomogeneous solver, which assembles solutions from quadratures
    /// rather than time stepping). Abscissae must be strictly increasing.
    pub fn from_nodes(side: Side, lambda: Complex64, nodes: Vec<Node>) -> Result<Trajectory> {
        if nodes.is_empty() {
            return Err(Error::Config("empty trajectory".into()));
        }
        if !nodes.windows(2).all(|w| w[0].x < w[1].x) {
            return Err(Error::Config(
                "trajectory abscissae must be strictly increasing".into(),
            ));
        }
        Ok(Trajectory {
            side,
            lambda,
            nodes,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// State at the lower subinterval limit (`a` or `c+0`).
    pub fn start_state(&self) -> State {
        self.nodes.first().expect("nonempty trajectory").state
    }

    /// State at the upper subinterval limit (`c-0` or `b`).
    pub fn end_state(&self) -> State {
        self.nodes.last().expect("nonempty trajectory").state
    }

    pub fn span(&self) -> (f64, f64) {
        (
            self.nodes.first().unwrap().x,
            self.nodes.last().unwrap().x,
        )
    }

    /// Multiplies every stored value and derivative by `factor`.
    pub fn scale_in_place(&mut self, factor: Complex64) {
        for node in &mut self.nodes {
            node.state.u *= factor;
            node.state.du *= factor;
            node.deriv.du *= factor;
            node.deriv.ddu *= factor;
        }
    }

    /// Cubic Hermite evaluation between stored nodes. `x` is clamped to the
    /// stored span, so interface limits are the one-sided values.
    pub fn eval(&self, x: f64) -> State {
        let nodes = &self.nodes;
        let (lo, hi) = self.span();
        if x <= lo {
            return nodes.first().unwrap().state;
        }
        if x >= hi {
            return nodes.last().unwrap().state;
        }
        let idx = match nodes.binary_search_by(|n| n.x.partial_cmp(&x).unwrap()) {
            Ok(i) => return nodes[i].state,
            Err(i) => i - 1,
        };
        let n0 = &nodes[idx];
        let n1 = &nodes[idx + 1];
        let h = n1.x - n0.x;
        let t = (x - n0.x) / h;
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        let u = h00 * n0.state.u
            + h10 * h * n0.deriv.du
            + h01 * n1.state.u
            + h11 * h * n1.deriv.du;
        let du = h00 * n0.state.du
            + h10 * h * n0.deriv.ddu
            + h01 * n1.state.du
            + h11 * h * n1.deriv.ddu;
        State { u, du }
    }
}

const MIN_TOL: f64 = 1e-14;

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const ERR: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Rhs<'a> {
    spec: &'a ProblemSpec,
    side: Side,
    lambda: Complex64,
}

impl Rhs<'_> {
    fn eval(&self, x: f64, y: &State) -> Result<Deriv> {
        let q = self.spec.q(self.side, x)?;
        Ok(Deriv {
            du: y.du,
            ddu: (q - self.lambda) * y.u,
        })
    }
}

/// Integrates the equation on one side with the given initial state.
///
/// `grid` lists extra abscissae (within the closed subinterval) that must
/// appear as trajectory nodes; both subinterval limits are always included.
/// `Forward` starts from the lower limit, `Backward` from the upper one,
/// with `init` applied at the starting endpoint.
pub fn integrate(
    spec: &ProblemSpec,
    lambda: Complex64,
    side: Side,
    direction: Direction,
    init: State,
    grid: &[f64],
    tol: f64,
) -> Result<Trajectory> {
    let (lo, hi) = spec.span(side);
    let span = hi - lo;
    if span <= 0.0 {
        return Err(Error::Config(format!(
            "degenerate subinterval [{lo}, {hi}]"
        )));
    }
    let slack = 1e-12 * span.max(1.0);
    let mut forced: Vec<f64> = Vec::with_capacity(grid.len() + 2);
    forced.push(lo);
    for &x in grid {
        if x < lo - slack || x > hi + slack {
            return Err(Error::Config(format!(
                "grid point {x} outside subinterval [{lo}, {hi}]"
            )));
        }
        forced.push(x.clamp(lo, hi));
    }
    forced.push(hi);
    forced.sort_by(|p, q| p.partial_cmp(q).unwrap());
    forced.dedup_by(|p, q| (*p - *q).abs() <= slack);
    if direction == Direction::Backward {
        forced.reverse();
    }

    let tol = tol.max(MIN_TOL);
    let rhs = Rhs { spec, side, lambda };
    if !init.is_finite() {
        return Err(Error::NonFiniteState { x: forced[0] });
    }

    let mut nodes: Vec<Node> = Vec::new();
    let mut y = init;
    let mut k1 = rhs.eval(forced[0], &y)?;
    nodes.push(Node {
        x: forced[0],
        state: y,
        deriv: k1,
    });

    let mut h_prev: Option<f64> = None;
    for seg in forced.windows(2) {
        let (x_from, x_to) = (seg[0], seg[1]);
        let seg_len = x_to - x_from;
        let dir = seg_len.signum();
        let mut x = x_from;
        let mut h = match h_prev {
            Some(h) => h.abs().min(seg_len.abs()) * dir,
            None => seg_len / 16.0,
        };

        while (x_to - x) * dir > 0.0 {
            if h.abs() > (x_to - x).abs() {
                h = x_to - x;
            }
            if h.abs() < 1e-14 * span {
                return Err(Error::StepSizeUnderflow { x });
            }

            let mut k = [Deriv::zero(); 7];
            k[0] = k1;
            for stage in 1..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(stage) {
                    let aij = A[stage][j];
                    if aij != 0.0 {
                        ys = ys.axpy(h * aij, kj);
                    }
                }
                k[stage] = rhs.eval(x + C[stage] * h, &ys)?;
            }
            // Stage 7 state is the 5th-order solution (FSAL).
            let mut y_new = y;
            for (j, kj) in k.iter().enumerate().take(6) {
                let bj = A[6][j];
                if bj != 0.0 {
                    y_new = y_new.axpy(h * bj, kj);
                }
            }
            if !y_new.is_finite() {
                return Err(Error::NonFiniteState { x });
            }

            let mut err_u = Complex64::new(0.0, 0.0);
            let mut err_du = Complex64::new(0.0, 0.0);
            for (j, kj) in k.iter().enumerate() {
                if ERR[j] != 0.0 {
                    err_u += h * ERR[j] * kj.du;
                    err_du += h * ERR[j] * kj.ddu;
                }
            }
            let comps = [
                (err_u.re, y.u.re, y_new.u.re),
                (err_u.im, y.u.im, y_new.u.im),
                (err_du.re, y.du.re, y_new.du.re),
                (err_du.im, y.du.im, y_new.du.im),
            ];
            let mut err = 0.0f64;
            for (e, y0, y1) in comps {
                let sk = tol + tol * y0.abs().max(y1.abs());
                err += (e / sk) * (e / sk);
            }
            err = (err / 4.0).sqrt();

            if err <= 1.0 {
                let k_new = rhs.eval(x + h, &y_new)?;
                x += h;
                y = y_new;
                k1 = k_new;
                nodes.push(Node {
                    x,
                    state: y,
                    deriv: k1,
                });
                let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
                h *= fac;
            } else {
                let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                h *= fac;
            }
            h_prev = Some(h);
        }
    }

    if direction == Direction::Backward {
        nodes.reverse();
    }
    // Accepted steps land exactly on segment boundaries, so abscissae are
    // strictly monotone already; dedup defensively against zero-length steps.
    nodes.dedup_by(|p, q| p.x == q.x);
    Ok(Trajectory {
        side,
        lambda,
        nodes,
    })
}
