use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model parameters: the nonlinearity exponent `p` and the space dimension `N`.
///
/// Construction enforces `p > 1` and, for `N >= 2`, the conformal bound
/// `p <= 1 + 4/(N-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct Params {
    p: f64,
    n: u32,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    p: f64,
    n: u32,
}

impl TryFrom<RawParams> for Params {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        Params::new(raw.p, raw.n)
    }
}

impl From<Params> for RawParams {
    fn from(params: Params) -> Self {
        RawParams { p: params.p, n: params.n }
    }
}

impl Params {
    pub fn new(p: f64, n: u32) -> Result<Self> {
        if !p.is_finite() || p <= 1.0 {
            return Err(Error::InvalidParams(format!("p must be > 1, got {p}")));
        }
        if n == 0 {
            return Err(Error::InvalidParams("space dimension N must be >= 1".into()));
        }
        if n >= 2 {
            let bound = 1.0 + 4.0 / f64::from(n - 1);
            // Small slack so that p = 3, N = 3 (bound computed as exactly 3) passes.
            if p > bound + 1e-12 {
                return Err(Error::InvalidParams(format!(
                    "p = {p} exceeds the conformal bound 1 + 4/(N-1) = {bound} for N = {n}"
                )));
            }
        }
        Ok(Self { p, n })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// `2/(p-1)`: the self-similar rate exponent and the exponent of the weight.
    pub fn rate_exponent(&self) -> f64 {
        2.0 / (self.p - 1.0)
    }

    /// `2(p+1)/(p-1)^2`, the linear coefficient of the similarity equation.
    pub fn linear_coefficient(&self) -> f64 {
        2.0 * (self.p + 1.0) / ((self.p - 1.0) * (self.p - 1.0))
    }

    /// Amplitude of the constant soliton, `(2(p+1)/(p-1)^2)^{1/(p-1)}`.
    pub fn kappa0(&self) -> f64 {
        self.linear_coefficient().powf(1.0 / (self.p - 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa0_for_cubic_is_sqrt_two() {
        let params = Params::new(3.0, 3).unwrap();
        assert!((params.kappa0() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(params.rate_exponent(), 1.0);
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(Params::new(1.0, 1).is_err());
        assert!(Params::new(0.5, 1).is_err());
        assert!(Params::new(f64::NAN, 1).is_err());
        assert!(Params::new(3.5, 3).is_err());
        assert!(Params::new(5.0, 2).is_ok());
        assert!(Params::new(5.1, 2).is_err());
        // no upper bound in one dimension
        assert!(Params::new(17.0, 1).is_ok());
        assert!(Params::new(2.0, 0).is_err());
    }

    #[test]
    fn kappa0_is_finite_and_positive() {
        for &(p, n) in &[(1.1, 1), (2.0, 3), (3.0, 3), (5.0, 2), (9.0, 1)] {
            let k = Params::new(p, n).unwrap().kappa0();
            assert!(k.is_finite() && k > 0.0, "p = {p}: {k}");
        }
    }

    #[test]
    fn deserialization_validates() {
        let ok: Params = serde_json::from_str(r#"{"p": 3.0, "n": 3}"#).unwrap();
        assert_eq!(ok.p(), 3.0);
        let bad: std::result::Result<Params, _> = serde_json::from_str(r#"{"p": 4.0, "n": 3}"#);
        assert!(bad.is_err());
    }
}
