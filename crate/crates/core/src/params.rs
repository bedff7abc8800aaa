//! Exponent arithmetic over `(d, m)`: critical exponents, regime tags and
//! the scaling exponents of the equation.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when comparing a floating-point exponent with a critical value.
pub const EXPONENT_TOL: f64 = 1e-12;

/// A diffusion exponent, optionally carried as an exact rational `p/q`.
///
/// Criticality tests are exact when the rational form is present and use
/// [`EXPONENT_TOL`] otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent {
    value: f64,
    exact: Option<Ratio<i64>>,
}

impl Exponent {
    pub fn from_f64(value: f64) -> Self {
        Self { value, exact: None }
    }

    /// Panics when `den == 0`.
    pub fn rational(num: i64, den: i64) -> Self {
        let r = Ratio::new(num, den);
        Self {
            value: *r.numer() as f64 / *r.denom() as f64,
            exact: Some(r),
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> Option<Ratio<i64>> {
        self.exact
    }

    /// Three-way comparison against an exact rational threshold.
    pub fn compare(&self, threshold: Ratio<i64>) -> Ordering {
        match self.exact {
            Some(r) => r.cmp(&threshold),
            None => {
                let t = *threshold.numer() as f64 / *threshold.denom() as f64;
                if (self.value - t).abs() <= EXPONENT_TOL * t.abs().max(1.0) {
                    Ordering::Equal
                } else if self.value < t {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
        }
    }
}

impl From<f64> for Exponent {
    fn from(value: f64) -> Self {
        Self::from_f64(value)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact {
            Some(r) if *r.denom() == 1 => write!(f, "{}", r.numer()),
            Some(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            None => write!(f, "{}", self.value),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    /// Accepts `"p/q"`, plain integers (kept exact) and decimals.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(format!("cannot parse exponent {s:?}"));
        if let Some((p, q)) = s.split_once('/') {
            let p: i64 = p.trim().parse().map_err(|_| bad())?;
            let q: i64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(bad());
            }
            return Ok(Self::rational(p, q));
        }
        if let Ok(k) = s.parse::<i64>() {
            return Ok(Self::rational(k, 1));
        }
        s.parse::<f64>().map(Self::from_f64).map_err(|_| bad())
    }
}

impl Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.exact {
            Some(_) => s.serialize_str(&self.to_string()),
            None => s.serialize_f64(self.value),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(de)? {
            Raw::Num(v) => Ok(Self::from_f64(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Spatial dimension and diffusion exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    d: u32,
    m: Exponent,
}

impl ModelParams {
    pub fn new(d: u32, m: impl Into<Exponent>) -> Result<Self> {
        let m = m.into();
        if d < 3 {
            return Err(Error::InvalidDimension(d));
        }
        if !(m.value().is_finite() && m.value() > 0.0) {
            return Err(Error::InvalidExponent(m.value()));
        }
        Ok(Self { d, m })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn df(&self) -> f64 {
        self.d as f64
    }

    pub fn m(&self) -> f64 {
        self.m.value()
    }

    pub fn exponent(&self) -> Exponent {
        self.m
    }

    /// `1 + 2/d` as an exact rational.
    pub fn mass_critical_exact(&self) -> Ratio<i64> {
        Ratio::new(self.d as i64 + 2, self.d as i64)
    }

    /// `(d+2)/(d-2)` as an exact rational.
    pub fn energy_critical_exact(&self) -> Ratio<i64> {
        Ratio::new(self.d as i64 + 2, self.d as i64 - 2)
    }

    pub fn mass_critical(&self) -> f64 {
        1.0 + 2.0 / self.df()
    }

    pub fn energy_critical(&self) -> f64 {
        (self.df() + 2.0) / (self.df() - 2.0)
    }

    /// GNS exponent `alpha = (d + 2 - (d - 2) m) / (d m)`.
    pub fn alpha(&self) -> f64 {
        let (d, m) = (self.df(), self.m());
        (d + 2.0 - (d - 2.0) * m) / (d * m)
    }

    pub fn vs_mass_critical(&self) -> Ordering {
        self.m.compare(self.mass_critical_exact())
    }

    pub fn vs_energy_critical(&self) -> Ordering {
        self.m.compare(self.energy_critical_exact())
    }

    pub fn is_mass_critical(&self) -> bool {
        self.vs_mass_critical() == Ordering::Equal
    }

    /// `0 < m < (d+2)/(d-2)`, the range with compactly supported steady states.
    pub fn is_energy_subcritical(&self) -> bool {
        self.vs_energy_critical() == Ordering::Less
    }

    pub fn regime(&self) -> Regime {
        match (self.vs_mass_critical(), self.vs_energy_critical()) {
            (Ordering::Less, _) => Regime::Subcritical,
            (Ordering::Equal, _) => Regime::MassCritical,
            (Ordering::Greater, Ordering::Less) => Regime::Supercritical,
            (_, Ordering::Equal) => Regime::EnergyCritical,
            (_, Ordering::Greater) => Regime::SuperEnergyCritical,
        }
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(d={}, m={})", self.d, self.m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Subcritical,
    MassCritical,
    Supercritical,
    EnergyCritical,
    SuperEnergyCritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub d: u32,
    pub m: f64,
    pub mass_critical: f64,
    pub energy_critical: f64,
    pub alpha: f64,
    pub regime: Regime,
}

pub fn classify_regime(params: &ModelParams) -> RegimeReport {
    RegimeReport {
        d: params.d(),
        m: params.m(),
        mass_critical: params.mass_critical(),
        energy_critical: params.energy_critical(),
        alpha: params.alpha(),
        regime: params.regime(),
    }
}

/// Exponents of the invariance `u -> lambda^space u(lambda x, lambda^time t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingExponents {
    pub space: f64,
    pub time: f64,
    /// Lebesgue exponent `d (m - 1) / 2` left unchanged by the rescaling.
    pub invariant_p: f64,
}

pub fn scaling_exponents(params: &ModelParams) -> Result<ScalingExponents> {
    if params.exponent().compare(Ratio::from_integer(1)) == Ordering::Equal {
        return Err(Error::DegenerateScaling);
    }
    let m = params.m();
    Ok(ScalingExponents {
        space: 2.0 / (m - 1.0),
        time: (4.0 * m - 2.0) / (m - 1.0),
        invariant_p: params.df() * (m - 1.0) / 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn classify_reference_cases() {
        let r = classify_regime(&ModelParams::new(3, Exponent::rational(2, 1)).unwrap());
        assert_eq!(r.regime, Regime::Supercritical);
        assert!((r.mass_critical - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.energy_critical, 5.0);
        assert_eq!(r.alpha, 0.5);

        let p = ModelParams::new(4, 1.5).unwrap();
        assert_eq!(p.regime(), Regime::MassCritical);
        let p = ModelParams::new(3, 5.0).unwrap();
        assert_eq!(p.regime(), Regime::EnergyCritical);
        let p = ModelParams::new(3, 6.0).unwrap();
        assert_eq!(p.regime(), Regime::SuperEnergyCritical);
        let p = ModelParams::new(3, 1.0).unwrap();
        assert_eq!(p.regime(), Regime::Subcritical);
    }

    #[test]
    fn rational_ties_are_exact() {
        let p = ModelParams::new(3, Exponent::rational(5, 3)).unwrap();
        assert_eq!(p.regime(), Regime::MassCritical);
        // 5/3 + 1e-10 is a float above the tolerance band
        let p = ModelParams::new(3, 5.0 / 3.0 + 1e-10).unwrap();
        assert_eq!(p.regime(), Regime::Supercritical);
        let p = ModelParams::new(3, 5.0 / 3.0).unwrap();
        assert_eq!(p.regime(), Regime::MassCritical);
        let p = ModelParams::new(5, Exponent::rational(7, 3)).unwrap();
        assert_eq!(p.regime(), Regime::EnergyCritical);
    }

    #[test]
    fn invalid_inputs() {
        assert_eq!(ModelParams::new(2, 1.0), Err(Error::InvalidDimension(2)));
        assert!(matches!(ModelParams::new(3, 0.0), Err(Error::InvalidExponent(_))));
        assert!(matches!(ModelParams::new(3, -1.0), Err(Error::InvalidExponent(_))));
        assert!(ModelParams::new(3, f64::NAN).is_err());
    }

    #[test]
    fn scaling_reference_cases() {
        let s = scaling_exponents(&ModelParams::new(3, 2.0).unwrap()).unwrap();
        assert_eq!((s.space, s.time, s.invariant_p), (2.0, 6.0, 1.5));
        let s = scaling_exponents(&ModelParams::new(4, 1.5).unwrap()).unwrap();
        assert!((s.invariant_p - 1.0).abs() < 1e-15);
        assert_eq!(
            scaling_exponents(&ModelParams::new(3, 1.0).unwrap()),
            Err(Error::DegenerateScaling)
        );
    }

    #[test]
    fn parse_exponents() {
        let e: Exponent = "5/3".parse().unwrap();
        assert_eq!(e.exact(), Some(Ratio::new(5, 3)));
        let e: Exponent = "2".parse().unwrap();
        assert_eq!(e.exact(), Some(Ratio::new(2, 1)));
        let e: Exponent = "1.2".parse().unwrap();
        assert_eq!(e.exact(), None);
        assert!("1/0".parse::<Exponent>().is_err());
        assert!("abc".parse::<Exponent>().is_err());
    }

    proptest! {
        #[test]
        fn critical_exponent_relations(d in 3u32..40) {
            let p = ModelParams::new(d, Exponent::rational(d as i64 + 2, d as i64)).unwrap();
            prop_assert!(p.mass_critical() < p.energy_critical());
            // alpha + 2 = m + 1 at the mass-critical exponent
            prop_assert!((p.alpha() + 2.0 - (p.m() + 1.0)).abs() < 1e-12);
            let s = scaling_exponents(&p).unwrap();
            prop_assert!((s.invariant_p - 1.0).abs() < 1e-12);
        }

        #[test]
        fn alpha_sign_tracks_energy_critical(d in 3u32..12, m in 0.05f64..12.0) {
            let p = ModelParams::new(d, m).unwrap();
            let r = classify_regime(&p);
            if r.regime != Regime::EnergyCritical {
                prop_assert_eq!(r.alpha > 0.0, m < r.energy_critical);
            }
            prop_assert_eq!(classify_regime(&p), r);
            let expected = if m < r.mass_critical { Regime::Subcritical }
                else if m < r.energy_critical { Regime::Supercritical }
                else { Regime::SuperEnergyCritical };
            if p.regime() != Regime::MassCritical && p.regime() != Regime::EnergyCritical {
                prop_assert_eq!(p.regime(), expected);
            }
        }
    }
}
