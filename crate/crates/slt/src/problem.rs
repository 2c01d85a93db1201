//! Problem definition, JSON loading, and validation.
//!
//! A problem instance is the equation `-u'' + q(x) u = lambda u` on
//! `[a, c) ∪ (c, b]` with
//!
//! * a boundary condition `alpha1 u(a) + alpha2 u'(a) = 0` at `a`,
//! * an eigenparameter-dependent condition
//!   `(beta1p lambda + beta1) u(b) - (beta2p lambda + beta2) u'(b) = 0` at `b`,
//! * transmission conditions `gamma1 u(c-0) = delta1 u(c+0)` and
//!   `gamma2 u'(c-0) = delta2 u'(c+0)` at the interior point `c`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::expr::Expr;

/// Severity of a validation finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Severity {
    Error,
    Warning,
}

/// One validation finding.
#[derive(Debug, Clone, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
}

/// Result of validating a [`ProblemSpec`].
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
    pub pass: bool,
    /// Sign of `gamma1*gamma2*delta1*delta2` (-1, 0, or +1).
    pub sign_class: i8,
    /// True when the sign class is positive, so the underlying operator is
    /// symmetric in the weighted inner product.
    pub self_adjoint: bool,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Warning)
    }
}

/// A fully parsed problem instance.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub a: f64,
    pub c: f64,
    pub b: f64,
    pub q_left_src: String,
    pub q_right_src: String,
    pub q_left: Expr,
    pub q_right: Expr,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta1p: f64,
    pub beta2p: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// `beta1p*beta2 - beta1*beta2p`, computed once at construction.
    pub rho: f64,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct IntervalConfig {
    a: f64,
    c: f64,
    b: f64,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct PotentialConfig {
    left: String,
    right: String,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct BcAConfig {
    alpha1: f64,
    alpha2: f64,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct BcBConfig {
    beta1: f64,
    beta2: f64,
    beta1p: f64,
    beta2p: f64,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct TransmissionConfig {
    gamma1: f64,
    gamma2: f64,
    delta1: f64,
    delta2: f64,
}

/// On-disk JSON schema of a problem file.
#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ProblemConfig {
    interval: IntervalConfig,
    potential: PotentialConfig,
    bc_a: BcAConfig,
    bc_b: BcBConfig,
    transmission: TransmissionConfig,
}

impl ProblemSpec {
    /// Builds a spec from raw coefficients and potential sources.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: f64,
        c: f64,
        b: f64,
        q_left: &str,
        q_right: &str,
        alpha: (f64, f64),
        beta: (f64, f64),
        beta_p: (f64, f64),
        gamma: (f64, f64),
        delta: (f64, f64),
    ) -> Result<ProblemSpec> {
        let q_left_ast = Expr::parse(q_left)?;
        let q_right_ast = Expr::parse(q_right)?;
        let spec = ProblemSpec {
            a,
            c,
            b,
            q_left_src: q_left.to_string(),
            q_right_src: q_right.to_string(),
            q_left: q_left_ast,
            q_right: q_right_ast,
            alpha1: alpha.0,
            alpha2: alpha.1,
            beta1: beta.0,
            beta2: beta.1,
            beta1p: beta_p.0,
            beta2p: beta_p.1,
            gamma1: gamma.0,
            gamma2: gamma.1,
            delta1: delta.0,
            delta2: delta.1,
            rho: beta_p.0 * beta.1 - beta.0 * beta_p.1,
        };
        for v in [
            a, c, b, alpha.0, alpha.1, beta.0, beta.1, beta_p.0, beta_p.1, gamma.0, gamma.1,
            delta.0, delta.1,
        ] {
            if !v.is_finite() {
                return Err(Error::Config("non-finite coefficient".into()));
            }
        }
        Ok(spec)
    }

    /// Parses a problem from its JSON config text.
    pub fn from_json(config_text: &str) -> Result<ProblemSpec> {
        let cfg: ProblemConfig = serde_json::from_str(config_text)
            .map_err(|e| Error::Config(format!("schema violation: {e}")))?;
        let spec = ProblemSpec::new(
            cfg.interval.a,
            cfg.interval.c,
            cfg.interval.b,
            &cfg.potential.left,
            &cfg.potential.right,
            (cfg.bc_a.alpha1, cfg.bc_a.alpha2),
            (cfg.bc_b.beta1, cfg.bc_b.beta2),
            (cfg.bc_b.beta1p, cfg.bc_b.beta2p),
            (cfg.transmission.gamma1, cfg.transmission.gamma2),
            (cfg.transmission.delta1, cfg.transmission.delta2),
        )?;
        let report = spec.validate();
        if !report.pass {
            let msgs: Vec<String> = report.errors().map(|f| f.message.clone()).collect();
            return Err(Error::InvalidProblem(msgs.join("; ")));
        }
        Ok(spec)
    }

    /// Canonical JSON form of the spec (used for fingerprints and manifests).
    pub fn to_json(&self) -> String {
        let cfg = ProblemConfig {
            interval: IntervalConfig {
                a: self.a,
                c: self.c,
                b: self.b,
            },
            potential: PotentialConfig {
                left: self.q_left_src.clone(),
                right: self.q_right_src.clone(),
            },
            bc_a: BcAConfig {
                alpha1: self.alpha1,
                alpha2: self.alpha2,
            },
            bc_b: BcBConfig {
                beta1: self.beta1,
                beta2: self.beta2,
                beta1p: self.beta1p,
                beta2p: self.beta2p,
            },
            transmission: TransmissionConfig {
                gamma1: self.gamma1,
                gamma2: self.gamma2,
                delta1: self.delta1,
                delta2: self.delta2,
            },
        };
        serde_json::to_string(&cfg).expect("problem config serializes")
    }

    /// SHA-256 digest of the canonical JSON form, as lowercase hex.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Sign of `gamma1*gamma2*delta1*delta2`.
    pub fn sign_class(&self) -> i8 {
        let p = self.gamma1 * self.gamma2 * self.delta1 * self.delta2;
        if p > 0.0 {
            1
        } else if p < 0.0 {
            -1
        } else {
            0
        }
    }

    /// Potential value on the given side; `x` is clamped to the closed
    /// subinterval so interface limits use the correct one-sided expression.
    pub fn q(&self, side: Side, x: f64) -> Result<f64> {
        let v = match side {
            Side::Left => self.q_left.eval(x)?,
            Side::Right => self.q_right.eval(x)?,
        };
        Ok(v)
    }

    /// Subinterval endpoints for one side: `[a, c]` or `[c, b]`.
    pub fn span(&self, side: Side) -> (f64, f64) {
        match side {
            Side::Left => (self.a, self.c),
            Side::Right => (self.c, self.b),
        }
    }

    /// Checks every structural invariant and returns the findings.
    pub fn validate(&self) -> ValidationReport {
        let mut findings = Vec::new();
        let error = |code: &'static str, message: String| Finding {
            severity: Severity::Error,
            code,
            message,
        };

        if !(self.a < self.c && self.c < self.b) {
            findings.push(error(
                "interval",
                format!(
                    "require a < c < b strictly, got a={}, c={}, b={}",
                    self.a, self.c, self.b
                ),
            ));
        }
        if self.alpha1 == 0.0 && self.alpha2 == 0.0 {
            findings.push(error(
                "bc_a_trivial",
                "alpha1 = alpha2 = 0 makes the condition at a trivial".into(),
            ));
        }
        if self.beta1 == 0.0 && self.beta2 == 0.0 && self.beta1p == 0.0 && self.beta2p == 0.0 {
            findings.push(error(
                "bc_b_trivial",
                "all beta coefficients are zero; the condition at b is trivial".into(),
            ));
        }
        if self.gamma1 * self.gamma2 == 0.0 {
            findings.push(error(
                "gamma_zero",
                "gamma1*gamma2 must be nonzero".into(),
            ));
        }
        if self.delta1 * self.delta2 == 0.0 {
            findings.push(error(
                "delta_zero",
                "delta1*delta2 must be nonzero".into(),
            ));
        }
        let rho = self.beta1p * self.beta2 - self.beta1 * self.beta2p;
        if !(rho > 0.0) {
            findings.push(error(
                "rho",
                format!("rho = beta1p*beta2 - beta1*beta2p = {rho} must be positive"),
            ));
        }

        // The potentials must evaluate to finite reals on a validation grid
        // over each closed subinterval.
        for (side, expr) in [(Side::Left, &self.q_left), (Side::Right, &self.q_right)] {
            let (lo, hi) = self.span(side);
            if lo < hi {
                for i in 0..=32 {
                    let x = lo + (hi - lo) * (i as f64) / 32.0;
                    if let Err(e) = expr.eval(x) {
                        findings.push(error(
                            "potential_eval",
                            format!("potential on the {side:?} side fails at x={x}: {e}"),
                        ));
                        break;
                    }
                }
            }
        }

        let sign_class = self.sign_class();
        let self_adjoint = sign_class > 0;
        if sign_class < 0 {
            findings.push(Finding {
                severity: Severity::Warning,
                code: "sign_class",
                message: "non-self-adjoint sign class; spectrum may be empty".into(),
            });
        }
        if self_adjoint && (self.gamma1 * self.gamma2 < 0.0 || self.delta1 * self.delta2 < 0.0) {
            findings.push(Finding {
                severity: Severity::Warning,
                code: "sign_convention",
                message: "gamma1*gamma2 and delta1*delta2 are both negative; eigenvalue \
                          post-processing assumes the positive-product normalization"
                    .into(),
            });
        }

        let pass = !findings.iter().any(|f| f.severity == Severity::Error);
        ValidationReport {
            findings,
            pass,
            sign_class,
            self_adjoint,
        }
    }
}

/// Which smooth subinterval a computation lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::ProblemSpec;

    /// Continuous limit: unit jumps, `q = 0`, `u(0)=0`, `lambda u(1) = u'(1)`.
    /// Characteristic function `w(lambda) = cos(s) - s sin(s)`, `s = sqrt(lambda)`.
    pub fn p_cont() -> ProblemSpec {
        ProblemSpec::new(
            0.0,
            0.5,
            1.0,
            "0",
            "0",
            (1.0, 0.0),
            (0.0, 1.0),
            (1.0, 0.0),
            (1.0, 1.0),
            (1.0, 1.0),
        )
        .unwrap()
    }

    /// Sign-indefinite transmission weights; the spectrum is empty and
    /// `w(lambda) = 1` identically.
    pub fn p_cex() -> ProblemSpec {
        ProblemSpec::new(
            -1.0,
            0.0,
            1.0,
            "0",
            "0",
            (1.0, 0.0),
            (0.0, 1.0),
            (1.0, 0.0),
            (1.0, 1.0),
            (1.0, -1.0),
        )
        .unwrap()
    }

    /// Genuine transmission jump (`2u(0-)=u(0+)`, `u'(0-)=2u'(0+)`) with a
    /// closed-form characteristic function for `q = 0`.
    pub fn p_trans() -> ProblemSpec {
        ProblemSpec::new(
            -1.0,
            0.0,
            1.0,
            "0",
            "0",
            (1.0, 0.0),
            (0.0, 1.0),
            (1.0, 0.0),
            (2.0, 1.0),
            (1.0, 2.0),
        )
        .unwrap()
    }

    /// Non-constant potential on both sides; no closed form, used by
    /// property tests.
    pub fn p_qpot() -> ProblemSpec {
        ProblemSpec::new(
            0.0,
            0.5,
            1.0,
            "2*cos(2*x)",
            "x^2 - 1",
            (1.0, 0.0),
            (0.0, 1.0),
            (1.0, 0.0),
            (1.0, 1.0),
            (1.0, 1.0),
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    const P_CONT_JSON: &str = r#"{
        "interval": {"a": 0.0, "c": 0.5, "b": 1.0},
        "potential": {"left": "0", "right": "0"},
        "bc_a": {"alpha1": 1.0, "alpha2": 0.0},
        "bc_b": {"beta1": 0.0, "beta2": 1.0, "beta1p": 1.0, "beta2p": 0.0},
        "transmission": {"gamma1": 1.0, "gamma2": 1.0, "delta1": 1.0, "delta2": 1.0}
    }"#;

    #[test]
    fn loads_continuous_problem_with_rho() {
        let spec = ProblemSpec::from_json(P_CONT_JSON).unwrap();
        assert_eq!(spec.rho, 1.0);
        assert_eq!(spec.sign_class(), 1);
    }

    #[test]
    fn counterexample_has_negative_sign_class() {
        let spec = p_cex();
        assert_eq!(spec.sign_class(), -1);
        let report = spec.validate();
        assert!(report.pass);
        assert!(!report.self_adjoint);
        assert!(report
            .warnings()
            .any(|f| f.message.contains("spectrum may be empty")));
    }

    #[test]
    fn transmission_problem_has_positive_sign_class() {
        let spec = p_trans();
        assert_eq!(spec.sign_class(), 1);
        assert!(spec.validate().self_adjoint);
    }

    #[test]
    fn zero_rho_is_an_error() {
        let spec = ProblemSpec::new(
            0.0,
            0.5,
            1.0,
            "0",
            "0",
            (1.0, 0.0),
            (1.0, 0.0),
            (1.0, 0.0),
            (1.0, 1.0),
            (1.0, 1.0),
        )
        .unwrap();
        let report = spec.validate();
        assert!(!report.pass);
        assert!(report.errors().any(|f| f.code == "rho"));
    }

    #[test]
    fn trivial_conditions_rejected() {
        let spec = ProblemSpec::new(
            0.0,
            0.5,
            1.0,
            "0",
            "0",
            (0.0, 0.0),
            (0.0, 1.0),
            (1.0, 0.0),
            (0.0, 1.0),
            (1.0, 1.0),
        )
        .unwrap();
        let report = spec.validate();
        assert!(!report.pass);
        assert!(report.errors().any(|f| f.code == "bc_a_trivial"));
        assert!(report.errors().any(|f| f.code == "gamma_zero"));
    }

    #[test]
    fn bad_ordering_rejected() {
        let spec = ProblemSpec::new(
            1.0,
            0.5,
            0.0,
            "0",
            "0",
            (1.0, 0.0),
            (0.0, 1.0),
            (1.0, 0.0),
            (1.0, 1.0),
            (1.0, 1.0),
        )
        .unwrap();
        assert!(!spec.validate().pass);
    }

    #[test]
    fn schema_violation_is_config_error() {
        let bad = r#"{"interval": {"a": 0.0, "c": 0.5}}"#;
        assert!(matches!(
            ProblemSpec::from_json(bad),
            Err(Error::Config(_))
        ));
        let unknown = P_CONT_JSON.replace("\"interval\"", "\"domain\"");
        assert!(matches!(
            ProblemSpec::from_json(&unknown),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn validate_is_pure() {
        let spec = p_qpot();
        let r1 = spec.validate();
        let r2 = spec.validate();
        assert_eq!(
            serde_json::to_string(&r1).unwrap(),
            serde_json::to_string(&r2).unwrap()
        );
    }

    #[test]
    fn rho_recomputation_matches_exactly() {
        for spec in [p_cont(), p_cex(), p_trans(), p_qpot()] {
            assert_eq!(spec.rho, spec.beta1p * spec.beta2 - spec.beta1 * spec.beta2p);
        }
    }

    #[test]
    fn fingerprint_is_stable() {
        let spec = p_cont();
        assert_eq!(spec.fingerprint(), spec.fingerprint());
        assert_ne!(spec.fingerprint(), p_trans().fingerprint());
    }
}
