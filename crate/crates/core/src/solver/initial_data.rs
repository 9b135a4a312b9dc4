use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Params;
use crate::numeric::pow_nonneg;

/// Generator identifiers, as used in configuration files.
pub const GENERATOR_NAMES: &[&str] =
    &["constant-ode", "constant", "zero", "bump", "plateau-pair", "selfsimilar-perturbed", "custom-table"];

/// Initial data `(u(·,0), ∂_t u(·,0))` generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    /// Space-independent data following the exact ODE solution that blows up at `blowup_time`.
    ConstantOde {
        blowup_time: f64,
    },
    /// Space-independent data `(u0, u1)`.
    Constant {
        u0: f64,
        u1: f64,
    },
    Zero,
    /// `amplitude · φ((r - center)/width)` with the C² bump `φ(x) = (1 - x²)³`;
    /// the velocity is `velocity · φ`.
    Bump {
        center: f64,
        width: f64,
        amplitude: f64,
        #[serde(default)]
        velocity: f64,
    },
    /// Two flat plateaus of given heights joined to zero by C² ramps.
    PlateauPair {
        centers: [f64; 2],
        half_widths: [f64; 2],
        heights: [f64; 2],
        join_width: f64,
        #[serde(default)]
        velocities: [f64; 2],
    },
    /// Time slice at `t = 0` of `(T0 - t)^{-2/(p-1)} κ(d*, (r - r0)/(T0 - t))`
    /// plus `epsilon` times a bump added to the position.
    SelfsimilarPerturbed {
        d_star: f64,
        blowup_time: f64,
        center: f64,
        epsilon: f64,
        bump_center: f64,
        bump_width: f64,
    },
    /// Piecewise-linear interpolation of tabulated data.
    CustomTable {
        r: Vec<f64>,
        u0: Vec<f64>,
        u1: Vec<f64>,
    },
}

/// C² compact bump `(1 - x²)³` on `|x| < 1`.
pub fn bump_profile(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - x * x;
        q * q * q
    }
}

/// C² ramp from 0 (x ≤ 0) to 1 (x ≥ 1).
pub fn smoothstep(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        x * x * x * (x * (6.0 * x - 15.0) + 10.0)
    }
}

fn plateau(r: f64, center: f64, half_width: f64, join: f64) -> f64 {
    let dist = (r - center).abs() - half_width;
    1.0 - smoothstep(dist / join)
}

impl InitialData {
    pub fn name(&self) -> &'static str {
        match self {
            InitialData::ConstantOde { .. } => "constant-ode",
            InitialData::Constant { .. } => "constant",
            InitialData::Zero => "zero",
            InitialData::Bump { .. } => "bump",
            InitialData::PlateauPair { .. } => "plateau-pair",
            InitialData::SelfsimilarPerturbed { .. } => "selfsimilar-perturbed",
            InitialData::CustomTable { .. } => "custom-table",
        }
    }

    /// Checks generator parameters that do not depend on the grid.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        match self {
            InitialData::ConstantOde { blowup_time } if !(*blowup_time > 0.0) => {
                bad(format!("constant-ode needs blowup_time > 0, got {blowup_time}"))
            }
            InitialData::Constant { u0, u1 } if !(u0.is_finite() && u1.is_finite()) => {
                bad("constant data must be finite".into())
            }
            InitialData::Bump { width, center, amplitude, velocity } => {
                if !(*width > 0.0) || ![*center, *amplitude, *velocity].iter().all(|x| x.is_finite()) {
                    bad(format!("bump needs width > 0 and finite parameters, got width {width}"))
                } else {
                    Ok(())
                }
            }
            InitialData::PlateauPair { centers, half_widths, heights, join_width, velocities } => {
                if !(*join_width > 0.0) {
                    return bad(format!("plateau join width must be > 0, got {join_width}"));
                }
                if half_widths.iter().any(|w| !(*w > 0.0)) {
                    return bad("plateau half widths must be > 0".into());
                }
                if !(centers[0] < centers[1]) {
                    return bad("plateau centers must satisfy a1 < a2".into());
                }
                if !heights.iter().chain(velocities).all(|x| x.is_finite()) {
                    return bad("plateau heights and velocities must be finite".into());
                }
                let right_edge = centers[0] + half_widths[0] + join_width;
                let left_edge = centers[1] - half_widths[1] - join_width;
                if right_edge > left_edge {
                    return bad(format!(
                        "plateaus overlap: first support ends at {right_edge}, second starts at {left_edge}"
                    ));
                }
                Ok(())
            }
            InitialData::SelfsimilarPerturbed { d_star, blowup_time, bump_width, epsilon, .. } => {
                if !(d_star.abs() < 1.0) {
                    bad(format!("|d*| must be < 1, got {d_star}"))
                } else if !(*blowup_time > 0.0) {
                    bad(format!("blowup_time must be > 0, got {blowup_time}"))
                } else if !(*bump_width > 0.0) || !epsilon.is_finite() {
                    bad("perturbation needs bump_width > 0 and finite epsilon".into())
                } else {
                    Ok(())
                }
            }
            InitialData::CustomTable { r, u0, u1 } => {
                if r.len() < 2 || u0.len() != r.len() || u1.len() != r.len() {
                    return bad("custom table needs at least two rows of (r, u0, u1)".into());
                }
                if r.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("custom table radii must be strictly increasing".into());
                }
                if !u0.iter().chain(u1).all(|x| x.is_finite()) {
                    return bad("custom table values must be finite".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Samples `(u0, u1)` at the given radii.
    pub fn sample(&self, radii: &[f64], params: &Params) -> Result<(Vec<f64>, Vec<f64>)> {
        self.validate()?;
        let a = params.rate_exponent();
        let k0 = params.kappa0();
        let n = radii.len();
        let mut u0 = Vec::with_capacity(n);
        let mut u1 = Vec::with_capacity(n);
        match self {
            InitialData::ConstantOde { blowup_time } => {
                let v0 = k0 * pow_nonneg(*blowup_time, -a);
                let v1 = a * k0 * pow_nonneg(*blowup_time, -a - 1.0);
                u0.resize(n, v0);
                u1.resize(n, v1);
            }
            InitialData::Constant { u0: a0, u1: a1 } => {
                u0.resize(n, *a0);
                u1.resize(n, *a1);
            }
            InitialData::Zero => {
                u0.resize(n, 0.0);
                u1.resize(n, 0.0);
            }
            InitialData::Bump { center, width, amplitude, velocity } => {
                for &r in radii {
                    let phi = bump_profile((r - center) / width);
                    u0.push(amplitude * phi);
                    u1.push(velocity * phi);
                }
            }
            InitialData::PlateauPair { centers, half_widths, heights, join_width, velocities } => {
                for &r in radii {
                    let p1 = plateau(r, centers[0], half_widths[0], *join_width);
                    let p2 = plateau(r, centers[1], half_widths[1], *join_width);
                    u0.push(heights[0] * p1 + heights[1] * p2);
                    u1.push(velocities[0] * p1 + velocities[1] * p2);
                }
            }
            InitialData::SelfsimilarPerturbed { d_star, blowup_time, center, epsilon, bump_center, bump_width } => {
                let tau = *blowup_time;
                for &r in radii {
                    let y = (r - center) / tau;
                    if !(1.0 + d_star * y > 0.0) {
                        return Err(Error::InvalidScenario(format!(
                            "self-similar profile undefined at r = {r}: 1 + d*·y = {}",
                            1.0 + d_star * y
                        )));
                    }
                    // the closed form stays smooth past |y| = 1 while 1 + d y > 0
                    let base = 1.0 + d_star * y;
                    let k = k0 * pow_nonneg(1.0 - d_star * d_star, 0.5 * a) * pow_nonneg(base, -a);
                    let ky = -a * d_star * k / base;
                    let phi = bump_profile((r - bump_center) / bump_width);
                    u0.push(pow_nonneg(tau, -a) * k + epsilon * phi);
                    u1.push(pow_nonneg(tau, -a - 1.0) * (a * k + y * ky));
                }
            }
            InitialData::CustomTable { r: tr, u0: t0, u1: t1 } => {
                for &r in radii {
                    if r < tr[0] - 1e-12 || r > tr[tr.len() - 1] + 1e-12 {
                        return Err(Error::InvalidScenario(format!(
                            "custom table covers [{}, {}], grid needs r = {r}",
                            tr[0],
                            tr[tr.len() - 1]
                        )));
                    }
                    let i = tr.partition_point(|&x| x <= r).clamp(1, tr.len() - 1);
                    let th = ((r - tr[i - 1]) / (tr[i] - tr[i - 1])).clamp(0.0, 1.0);
                    u0.push(t0[i - 1] + th * (t0[i] - t0[i - 1]));
                    u1.push(t1[i - 1] + th * (t1[i] - t1[i - 1]));
                }
            }
        }
        Ok((u0, u1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic() -> Params {
        Params::new(3.0, 3).unwrap()
    }

    fn radii() -> Vec<f64> {
        (0..=300).map(|i| i as f64 * 0.01).collect()
    }

    #[test]
    fn constant_ode_seed() {
        let (u0, u1) = InitialData::ConstantOde { blowup_time: 1.0 }.sample(&radii(), &cubic()).unwrap();
        assert!(u0.iter().all(|&v| (v - 2f64.sqrt()).abs() < 1e-15));
        assert!(u1.iter().all(|&v| (v - 2f64.sqrt()).abs() < 1e-15));
    }

    #[test]
    fn plateau_pair_has_opposite_signs() {
        let data = InitialData::PlateauPair {
            centers: [0.6, 2.4],
            half_widths: [0.6, 0.6],
            heights: [4.0, -4.0],
            join_width: 0.2,
            velocities: [0.0, 0.0],
        };
        let r = radii();
        let (u0, _) = data.sample(&r, &cubic()).unwrap();
        assert_eq!(u0[60], 4.0);
        assert_eq!(u0[240], -4.0);
        assert_eq!(u0[150], 0.0);
        assert!(u0[60] * u0[240] < 0.0);
        // ramp is monotone between the plateau and zero
        assert!(u0[120..=140].windows(2).all(|w| w[1] <= w[0]));
        let overlap = InitialData::PlateauPair {
            centers: [0.6, 1.5],
            half_widths: [0.6, 0.6],
            heights: [4.0, -4.0],
            join_width: 0.2,
            velocities: [0.0, 0.0],
        };
        assert!(matches!(overlap.sample(&r, &cubic()), Err(Error::InvalidScenario(_))));
    }

    #[test]
    fn smoothstep_is_c2_at_the_ends() {
        let h = 1e-5;
        assert!(smoothstep(h) < 1e-13);
        assert!((1.0 - smoothstep(1.0 - h)) < 1e-13);
        assert_eq!(smoothstep(0.5), 0.5);
    }

    #[test]
    fn selfsimilar_without_perturbation_is_constant_ode() {
        let data = InitialData::SelfsimilarPerturbed {
            d_star: 0.0,
            blowup_time: 1.0,
            center: 1.5,
            epsilon: 0.0,
            bump_center: 1.5,
            bump_width: 0.3,
        };
        let (u0, u1) = data.sample(&radii(), &cubic()).unwrap();
        let (c0, c1) = InitialData::ConstantOde { blowup_time: 1.0 }.sample(&radii(), &cubic()).unwrap();
        for j in 0..u0.len() {
            assert!((u0[j] - c0[j]).abs() < 1e-14 && (u1[j] - c1[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn serde_uses_generator_tag() {
        let data: InitialData = serde_json::from_str(r#"{"generator": "constant", "u0": 1.0, "u1": 2.0}"#).unwrap();
        assert_eq!(data, InitialData::Constant { u0: 1.0, u1: 2.0 });
        assert!(serde_json::from_str::<InitialData>(r#"{"generator": "nope"}"#).is_err());
    }

    #[test]
    fn custom_table_interpolates() {
        let data = InitialData::CustomTable { r: vec![0.0, 1.0, 3.0], u0: vec![0.0, 1.0, 0.0], u1: vec![1.0; 3] };
        let (u0, _) = data.sample(&[0.5, 2.0], &cubic()).unwrap();
        assert_eq!(u0, vec![0.5, 0.5]);
        assert!(data.sample(&[3.5], &cubic()).is_err());
    }
}
