use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Covariance family of the latent Gaussian field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum CovFamily {
    /// `σ² e^{−r/α} e^{−h/β}`.
    SepExp,
    /// `σ²/(1+h/β) · exp(−(r/α)/(1+h/β)^{δ/2})`.
    Gneiting { delta: f64 },
    /// `σ² (1 + (r/α)^{κ₁} + (h/β)^{κ₂})^{−κ₃}`.
    IacoCesare { k1: f64, k2: f64, k3: f64 },
}

impl CovFamily {
    pub fn gneiting() -> Self {
        CovFamily::Gneiting { delta: 1.0 }
    }

    pub fn iaco_cesare() -> Self {
        CovFamily::IacoCesare { k1: 2.0, k2: 2.0, k3: 1.5 }
    }

    /// Parses `sep-exp`, `gneiting` or `iaco-cesare` with default extras.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "sep-exp" | "separable" | "separable-exponential" => Ok(CovFamily::SepExp),
            "gneiting" => Ok(Self::gneiting()),
            "iaco-cesare" => Ok(Self::iaco_cesare()),
            _ => Err(invalid(format!("unknown covariance family `{name}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CovFamily::SepExp => "sep-exp",
            CovFamily::Gneiting { .. } => "gneiting",
            CovFamily::IacoCesare { .. } => "iaco-cesare",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CovFamily::SepExp => Ok(()),
            CovFamily::Gneiting { delta } if (0.0..=1.0).contains(&delta) => Ok(()),
            CovFamily::IacoCesare { k1, k2, k3 }
                if k1 > 0.0 && k1 <= 2.0 && k2 > 0.0 && k2 <= 2.0 && k3 > 0.0 =>
            {
                Ok(())
            }
            _ => Err(invalid(format!("invalid extra parameters for {self:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovParams {
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl CovParams {
    pub fn new(sigma: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = Self { sigma, alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.sigma, self.alpha, self.beta].iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(invalid(format!("covariance parameters must be positive, got {self:?}")))
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.sigma, self.alpha, self.beta]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceModel {
    pub family: CovFamily,
    pub params: CovParams,
}

impl CovarianceModel {
    pub fn new(family: CovFamily, params: CovParams) -> Result<Self> {
        family.validate()?;
        params.validate()?;
        Ok(Self { family, params })
    }

    /// `C(r, h)`; errors on a negative lag.
    pub fn eval(&self, r: f64, h: f64) -> Result<f64> {
        if r < 0.0 || r.is_nan() {
            return Err(Error::NegativeLag(r));
        }
        if h < 0.0 || h.is_nan() {
            return Err(Error::NegativeLag(h));
        }
        Ok(cov_unchecked(self.family, &self.params.as_array(), r, h))
    }

    /// Pair correlation `exp(C(r, h))`.
    pub fn pcf(&self, r: f64, h: f64) -> Result<f64> {
        self.eval(r, h).map(f64::exp)
    }
}

pub fn cov_eval(model: &CovarianceModel, r: f64, h: f64) -> Result<f64> {
    model.eval(r, h)
}

/// `p = [σ, α, β]`; lags assumed nonnegative.
pub(crate) fn cov_unchecked(family: CovFamily, p: &[f64; 3], r: f64, h: f64) -> f64 {
    let [s, a, b] = *p;
    let s2 = s * s;
    match family {
        CovFamily::SepExp => s2 * (-r / a).exp() * (-h / b).exp(),
        CovFamily::Gneiting { delta } => {
            let psi = 1.0 + h / b;
            s2 / psi * (-(r / a) / psi.powf(delta / 2.0)).exp()
        }
        CovFamily::IacoCesare { k1, k2, k3 } => s2 * (1.0 + (r / a).powf(k1) + (h / b).powf(k2)).powf(-k3),
    }
}
