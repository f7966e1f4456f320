//! Per-round losses, the LEARN transform and the constants of the regret bounds.
//!
//! Every round reveals side information `s = (x, y)` and an `m`-strongly convex,
//! non-negative loss `f(s, θ)`. LEARN never descends on `f` directly: it uses the
//! invex transform
//!
//! ```text
//! g(θ) = -a log(exp(-f(θ)/a) + b),      ∇g(θ) = η(f(θ)) ∇f(θ),
//! η(f) = exp(-f/a) / (b + exp(-f/a)) ∈ (0, 1/(1+b)]
//! ```
//!
//! `η` is a redescending gate: rounds with a large loss barely move the iterate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, norm_sq};

/// One round's observation pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideInfo {
    pub x: Vec<f64>,
    pub y: f64,
}

impl SideInfo {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        SideInfo { x, y }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossFamily {
    /// `(λ/2)‖θ‖² + (y − ⟨x, θ⟩)²`
    Ridge,
    /// `(λ/2)‖θ‖² + max(0, 1 − y⟨x, θ⟩)`, labels in {−1, +1}.
    #[serde(alias = "hinge")]
    Svm,
}

/// A regularized per-round loss; `lambda` is also its strong convexity modulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundLoss {
    pub family: LossFamily,
    pub lambda: f64,
}

impl RoundLoss {
    /// `lambda = 0` is accepted for hand-checkable fixtures even though it drops
    /// strong convexity; negative or non-finite values are rejected.
    pub fn new(family: LossFamily, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(RoundLoss { family, lambda })
    }

    pub fn ridge(lambda: f64) -> Result<Self> {
        Self::new(LossFamily::Ridge, lambda)
    }

    pub fn svm(lambda: f64) -> Result<Self> {
        Self::new(LossFamily::Svm, lambda)
    }

    /// Strong convexity modulus `m`.
    pub fn modulus(&self) -> f64 {
        self.lambda
    }

    fn check(&self, s: &SideInfo, theta: &[f64]) -> Result<()> {
        if s.x.len() != theta.len() {
            return Err(Error::DimensionMismatch {
                expected: s.x.len(),
                got: theta.len(),
            });
        }
        if self.family == LossFamily::Svm && s.y != 1.0 && s.y != -1.0 {
            return Err(Error::invalid(format!(
                "svm labels must be +1 or -1, got {}",
                s.y
            )));
        }
        Ok(())
    }

    pub fn eval(&self, s: &SideInfo, theta: &[f64]) -> Result<f64> {
        self.check(s, theta)?;
        Ok(self.eval_unchecked(s, theta))
    }

    pub(crate) fn eval_unchecked(&self, s: &SideInfo, theta: &[f64]) -> f64 {
        let reg = 0.5 * self.lambda * norm_sq(theta);
        let inner = dot(&s.x, theta);
        match self.family {
            LossFamily::Ridge => reg + (s.y - inner) * (s.y - inner),
            LossFamily::Svm => reg + (1.0 - s.y * inner).max(0.0),
        }
    }

    /// Gradient for ridge; for the hinge, the subgradient that drops the hinge
    /// term whenever the margin is at least one (kink included).
    pub fn grad(&self, s: &SideInfo, theta: &[f64]) -> Result<Vec<f64>> {
        self.check(s, theta)?;
        Ok(self.value_and_grad_unchecked(s, theta).1)
    }

    pub fn value_and_grad(&self, s: &SideInfo, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check(s, theta)?;
        Ok(self.value_and_grad_unchecked(s, theta))
    }

    pub(crate) fn value_and_grad_unchecked(&self, s: &SideInfo, theta: &[f64]) -> (f64, Vec<f64>) {
        let inner = dot(&s.x, theta);
        let mut grad: Vec<f64> = theta.iter().map(|t| self.lambda * t).collect();
        let reg = 0.5 * self.lambda * norm_sq(theta);
        match self.family {
            LossFamily::Ridge => {
                let resid = s.y - inner;
                for (g, xi) in grad.iter_mut().zip(&s.x) {
                    *g -= 2.0 * resid * xi;
                }
                (reg + resid * resid, grad)
            }
            LossFamily::Svm => {
                let hinge = 1.0 - s.y * inner;
                if hinge > 0.0 {
                    for (g, xi) in grad.iter_mut().zip(&s.x) {
                        *g -= s.y * xi;
                    }
                    (reg + hinge, grad)
                } else {
                    (reg, grad)
                }
            }
        }
    }

    /// Unconstrained minimizer in closed form.
    ///
    /// Ridge: `2y x / (λ + 2‖x‖²)`. Hinge: `min(1/λ, 1/‖x‖²) y x`.
    pub fn minimizer(&self, s: &SideInfo) -> Result<Vec<f64>> {
        if self.family == LossFamily::Svm && s.y != 1.0 && s.y != -1.0 {
            return Err(Error::invalid(format!(
                "svm labels must be +1 or -1, got {}",
                s.y
            )));
        }
        let xx = norm_sq(&s.x);
        if self.lambda == 0.0 && xx == 0.0 {
            return Err(Error::Degenerate(
                "lambda = 0 and x = 0: every point is a minimizer".into(),
            ));
        }
        let coef = match self.family {
            LossFamily::Ridge => 2.0 * s.y / (self.lambda + 2.0 * xx),
            LossFamily::Svm => {
                if xx == 0.0 {
                    0.0
                } else if self.lambda == 0.0 {
                    s.y / xx
                } else {
                    (1.0 / self.lambda).min(1.0 / xx) * s.y
                }
            }
        };
        Ok(s.x.iter().map(|v| coef * v).collect())
    }

    /// Minimizer over the ball `‖θ‖ ≤ radius`. Both families only penalize the
    /// component orthogonal to `x` through the regularizer, so the constrained
    /// argmin is the closed form clamped along its own ray.
    pub fn minimizer_in_ball(&self, s: &SideInfo, radius: Option<f64>) -> Result<Vec<f64>> {
        let w = self.minimizer(s)?;
        Ok(match radius {
            Some(r) => {
                let n = norm(&w);
                if n > r {
                    w.iter().map(|v| v * (r / n)).collect()
                } else {
                    w
                }
            }
            None => w,
        })
    }
}

/// The `(a, b)` pair of the LEARN transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnParams {
    pub a: f64,
    pub b: f64,
}

impl LearnParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
            return Err(Error::invalid(format!(
                "a and b must be > 0, got a={a}, b={b}"
            )));
        }
        Ok(LearnParams { a, b })
    }

    /// The gate `η(f) = 1 / (1 + b·exp(f/a))`, saturating to 0 when `exp` overflows.
    pub fn eta(&self, f: f64) -> Result<f64> {
        if !(f >= 0.0) {
            return Err(Error::invalid(format!("loss value must be >= 0, got {f}")));
        }
        Ok(self.eta_unchecked(f))
    }

    #[inline]
    pub(crate) fn eta_unchecked(&self, f: f64) -> f64 {
        let e = (f / self.a).exp();
        if e.is_infinite() {
            return 0.0;
        }
        1.0 / (1.0 + self.b * e)
    }

    /// `g` as a function of the loss value `f`.
    pub fn transform(&self, f: f64) -> f64 {
        -self.a * self.b.ln() - self.a * ((-f / self.a).exp() / self.b).ln_1p()
    }

    pub fn eval_g(&self, loss: &RoundLoss, s: &SideInfo, theta: &[f64]) -> Result<f64> {
        Ok(self.transform(loss.eval(s, theta)?))
    }

    pub fn grad_g(&self, loss: &RoundLoss, s: &SideInfo, theta: &[f64]) -> Result<Vec<f64>> {
        let (f, mut grad) = loss.value_and_grad(s, theta)?;
        let eta = self.eta_unchecked(f);
        grad.iter_mut().for_each(|g| *g *= eta);
        Ok(grad)
    }

    /// Lower end of the range of `g` (attained at `f = 0`).
    pub fn g_floor(&self) -> f64 {
        -self.a * (1.0 + self.b).ln()
    }

    /// `(1/b) max(a, 1/a)`, the bound on `η(f) f`.
    pub fn nu(&self) -> f64 {
        self.a.max(1.0 / self.a) / self.b
    }

    /// Asymptote of `g` as `f → ∞`.
    pub fn g_ceiling(&self) -> f64 {
        -self.a * self.b.ln()
    }
}

/// Environment constants `G, L` (gradient growth `‖∇f(θ)‖ ≤ G + L‖θ − ω*‖`),
/// modulus `m`, clean-loss bound `B`, and the derived quantities that appear in
/// the regret bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    pub g: f64,
    pub l: f64,
    pub m: f64,
    pub b_loss: f64,
    /// bound on `η‖∇f‖`
    pub psi: f64,
    /// bound on `η‖θ − ω*‖`
    pub phi: f64,
    /// bound on `η‖θ − ω*‖²`
    pub kappa: f64,
    /// bound on `η f`
    pub nu: f64,
    /// bound on `1/η` over clean rounds
    pub xi: f64,
}

impl ProblemConstants {
    pub fn derive(params: &LearnParams, g: f64, l: f64, m: f64, b_loss: f64) -> Result<Self> {
        let LearnParams { a, b } = *params;
        if !(m > 0.0) {
            return Err(Error::invalid(format!("m must be > 0, got {m}")));
        }
        if !(a > 0.0) || !(b > 0.0) {
            return Err(Error::invalid(format!(
                "a and b must be > 0, got a={a}, b={b}"
            )));
        }
        if !(g >= 0.0) || !(l >= 0.0) || !(b_loss >= 0.0) {
            return Err(Error::invalid("G, L and B must be >= 0"));
        }
        let c = m / (2.0 * a);
        let psi = g + (m * l / (2.0 * a * b)).max(4.0 * a * a * l / (m * m * b));
        let phi = c.max(1.0 / (c * c)) / b;
        let kappa = c.max(1.0 / c) / b;
        let nu = params.nu();
        let xi = 1.0 + b * (b_loss / a).exp();
        Ok(ProblemConstants {
            g,
            l,
            m,
            b_loss,
            psi,
            phi,
            kappa,
            nu,
            xi,
        })
    }
}

/// Classical redescending M-estimator losses, for side-by-side comparison
/// with the LEARN transform of the square loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceLoss {
    Tukey,
    Welsch,
}

impl ReferenceLoss {
    pub fn eval(self, r: f64, c: f64) -> Result<f64> {
        if !(c > 0.0) {
            return Err(Error::invalid(format!("scale c must be > 0, got {c}")));
        }
        Ok(match self {
            ReferenceLoss::Tukey => {
                if r.abs() <= c {
                    let u = 1.0 - (r / c) * (r / c);
                    c * c / 6.0 * (1.0 - u * u * u)
                } else {
                    c * c / 6.0
                }
            }
            ReferenceLoss::Welsch => 1.0 - (-0.5 * (r / c) * (r / c)).exp(),
        })
    }
}
