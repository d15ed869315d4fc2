use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::C64;
use crate::manifold::{inner_raw, CMat};

/// Tangent vector on a product of unitary groups, one matrix per component.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductTangent(pub Vec<CMat>);

impl ProductTangent {
    pub fn zeros_like(other: &ProductTangent) -> Self {
        ProductTangent(other.0.iter().map(|m| CMat::zeros(m.nrows(), m.ncols())).collect())
    }

    /// `Σ_ℓ Re Tr[X_ℓ† Y_ℓ]`.
    pub fn inner(&self, other: &ProductTangent) -> f64 {
        self.0.iter().zip(&other.0).map(|(x, y)| inner_raw(x, y)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// `self += alpha · x`.
    pub fn axpy(&mut self, alpha: f64, x: &ProductTangent) {
        let a = C64::new(alpha, 0.0);
        for (s, v) in self.0.iter_mut().zip(&x.0) {
            *s += v * a;
        }
    }

    pub fn scaled(&self, alpha: f64) -> ProductTangent {
        let a = C64::new(alpha, 0.0);
        ProductTangent(self.0.iter().map(|m| m * a).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|m| m.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    /// Real dimension of the underlying matrices viewed as a vector space.
    pub fn real_len(&self) -> usize {
        self.0.iter().map(|m| 2 * m.len()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TcgParams {
    pub kappa: f64,
    pub theta: f64,
    /// Defaults to the tangent-space dimension when unset.
    pub max_inner: Option<usize>,
}

impl Default for TcgParams {
    fn default() -> Self {
        TcgParams { kappa: 0.1, theta: 1.0, max_inner: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TcgStop {
    ZeroGradient,
    NegativeCurvature,
    ExceededRadius,
    Residual,
    MaxInner,
}

#[derive(Clone, Debug)]
pub struct TcgResult {
    pub step: ProductTangent,
    /// Hessian applied to `step`, accumulated alongside it.
    pub hess_step: ProductTangent,
    pub stop: TcgStop,
    pub inner_iters: usize,
}

impl TcgResult {
    /// `m(η) − f = <g, η> + ½ <η, Hη>`.
    pub fn model_change(&self, grad: &ProductTangent) -> f64 {
        grad.inner(&self.step) + 0.5 * self.step.inner(&self.hess_step)
    }
}

/// Largest `τ ≥ 0` with `‖η + τδ‖ = Δ`.
fn boundary_tau(eta: &ProductTangent, delta: &ProductTangent, radius: f64) -> f64 {
    let ed = eta.inner(delta);
    let dd = delta.inner(delta);
    let ee = eta.inner(eta);
    let disc = (ed * ed + dd * (radius * radius - ee)).max(0.0);
    (-ed + disc.sqrt()) / dd
}

/// Steihaug–Toint truncated conjugate gradients for
/// `min <g, η> + ½ <η, Hη>` subject to `‖η‖ ≤ Δ`, started at `η = 0`.
pub fn truncated_cg(
    hess_apply: &mut dyn FnMut(&ProductTangent) -> Result<ProductTangent>,
    grad: &ProductTangent,
    radius: f64,
    params: &TcgParams,
) -> Result<TcgResult> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!("trust-region radius {radius}")));
    }
    if !grad.is_finite() {
        return Err(Error::NonFinite("gradient"));
    }
    let mut eta = ProductTangent::zeros_like(grad);
    let mut h_eta = ProductTangent::zeros_like(grad);
    let r0 = grad.norm();
    if r0 == 0.0 {
        return Ok(TcgResult { step: eta, hess_step: h_eta, stop: TcgStop::ZeroGradient, inner_iters: 0 });
    }
    let max_inner = params.max_inner.unwrap_or(grad.real_len()).max(1);
    let target = r0 * r0.powf(params.theta).min(params.kappa);
    let mut r = grad.clone();
    let mut rr = r.inner(&r);
    let mut delta = r.scaled(-1.0);
    for it in 1..=max_inner {
        let h_delta = hess_apply(&delta)?;
        if !h_delta.is_finite() {
            return Err(Error::NonFinite("Hessian application"));
        }
        let curvature = delta.inner(&h_delta);
        let alpha = rr / curvature;
        let mut trial = eta.clone();
        trial.axpy(alpha, &delta);
        if curvature <= 0.0 || trial.norm() >= radius {
            let tau = boundary_tau(&eta, &delta, radius);
            eta.axpy(tau, &delta);
            h_eta.axpy(tau, &h_delta);
            let stop = if curvature <= 0.0 { TcgStop::NegativeCurvature } else { TcgStop::ExceededRadius };
            return Ok(TcgResult { step: eta, hess_step: h_eta, stop, inner_iters: it });
        }
        eta = trial;
        h_eta.axpy(alpha, &h_delta);
        r.axpy(alpha, &h_delta);
        let rr_new = r.inner(&r);
        if rr_new.sqrt() <= target {
            return Ok(TcgResult { step: eta, hess_step: h_eta, stop: TcgStop::Residual, inner_iters: it });
        }
        let beta = rr_new / rr;
        rr = rr_new;
        delta = delta.scaled(beta);
        delta.axpy(-1.0, &r);
    }
    Ok(TcgResult { step: eta, hess_step: h_eta, stop: TcgStop::MaxInner, inner_iters: max_inner })
}
