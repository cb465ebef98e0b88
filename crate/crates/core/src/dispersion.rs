//! Weak-field dispersion phenomenology: effective mass, the nonrelativistic
//! expansion of the fluctuation-corrected mass shell, and bounds on the total
//! momentum variance from tests of Lorentz symmetry.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Particle-physics constants in MeV-based units (CODATA 2018, AME 2020).
pub mod constants {
    /// Planck mass √(ħc/G), MeV/c².
    pub const PLANCK_MASS_MEV: f64 = 1.220_890e22;
    /// Unified atomic mass unit, MeV/c².
    pub const ATOMIC_MASS_UNIT_MEV: f64 = 931.494_102_42;
    /// Atomic mass of ¹³³Cs in u.
    pub const CESIUM_133_U: f64 = 132.905_451_961;
    /// Atomic mass of ¹H in u.
    pub const HYDROGEN_1_U: f64 = 1.007_825_032_23;
    /// Boltzmann constant, MeV/K.
    pub const BOLTZMANN_MEV_PER_K: f64 = 8.617_333_262e-11;

    pub fn cesium_mass_mev() -> f64 {
        CESIUM_133_U * ATOMIC_MASS_UNIT_MEV
    }

    pub fn hydrogen_mass_mev() -> f64 {
        HYDROGEN_1_U * ATOMIC_MASS_UNIT_MEV
    }
}

/// m_eff = √(m² + δ^{ij}Δ(p_i p_j)/c²).
pub fn effective_mass(m: f64, sigma_p_trace: f64, c: f64) -> Result<f64> {
    let r = m * m + sigma_p_trace / (c * c);
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("effective mass radicand {r} is negative")));
    }
    Ok(r.sqrt())
}

/// E = c √(m²c² + |p|² + δ^{ij}Δ(p_i p_j)).
pub fn exact_energy(m: f64, p_squared: f64, sigma_p_trace: f64, c: f64) -> f64 {
    c * (m * m * c * c + p_squared + sigma_p_trace).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionInput {
    pub m: f64,
    pub p_vec: [f64; 3],
    /// δ^{ij}Δ(p_i p_j)
    pub sigma_p_trace: f64,
    pub c: f64,
    pub m_planck: f64,
    pub xi2_max: f64,
}

impl DispersionInput {
    pub fn p_squared(&self) -> f64 {
        self.p_vec.iter().map(|v| v * v).sum()
    }
}

/// Leading terms of the nonrelativistic energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonRelativisticTerms {
    pub rest: f64,
    pub kinetic: f64,
    pub fluctuation: f64,
    /// −|p|² δ^{ij}Δ(p_i p_j) / 4m³c², the mixed term of the square-root expansion.
    pub cross: f64,
    pub sum: f64,
    pub exact: f64,
    /// (|p|² + δ^{ij}Δ(p_i p_j)) / m²c².
    pub expansion_parameter: f64,
}

pub fn nonrel_expansion(input: &DispersionInput) -> Result<NonRelativisticTerms> {
    let DispersionInput { m, sigma_p_trace: tr, c, .. } = *input;
    if !(m > 0.0) || !(tr >= 0.0) || !(c > 0.0) {
        return Err(Error::Domain("need m > 0, a non-negative trace and c > 0".into()));
    }
    let p2 = input.p_squared();
    let expansion_parameter = (p2 + tr) / (m * m * c * c);
    if expansion_parameter > 0.1 {
        log::warn!("nonrelativistic expansion used at (p^2 + trace)/m^2c^2 = {expansion_parameter:.3}");
    }
    let rest = m * c * c;
    let kinetic = p2 / (2.0 * m);
    let fluctuation = tr / (2.0 * m);
    let cross = -p2 * tr / (4.0 * m.powi(3) * c * c);
    Ok(NonRelativisticTerms {
        rest,
        kinetic,
        fluctuation,
        cross,
        sum: rest + kinetic + fluctuation + cross,
        exact: exact_energy(m, p2, tr, c),
        expansion_parameter,
    })
}

/// Largest δ^{ij}Δ(p_i p_j) compatible with |ξ₂| < `xi2_max`:
/// ξ₂ · 2m²c² · m/M_P.
pub fn xi2_fluctuation_bound(m: f64, m_planck: f64, xi2_max: f64, c: f64) -> f64 {
    xi2_max * 2.0 * m * m * c * c * (m / m_planck)
}

/// ξ₂ implied by a given momentum variance; inverse of [`xi2_fluctuation_bound`].
pub fn xi2_from_fluctuations(m: f64, m_planck: f64, sigma_p_trace: f64, c: f64) -> f64 {
    m_planck / m * sigma_p_trace / (2.0 * m * m * c * c)
}

/// The two Lorentz-violating corrections (ξ₁ m|p|c, ξ₂|p|²)/2M_P.
pub fn lorentz_violation_terms(m: f64, p: f64, xi1: f64, xi2: f64, m_planck: f64, c: f64) -> (f64, f64) {
    (xi1 * m * p * c / (2.0 * m_planck), xi2 * p * p / (2.0 * m_planck))
}

/// Thermal momentum variance σ_p² = m k_B T, with `kt` = k_B T.
pub fn thermal_spread(m: f64, kt: f64) -> f64 {
    m * kt
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    /// Mass and k_B T in one consistent unit with c = 1.
    Natural,
    /// Mass in MeV/c², temperature in kelvin, variances in MeV²/c².
    #[default]
    #[serde(rename = "MeV")]
    MeV,
}

impl FromStr for Units {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "natural" => Ok(Units::Natural),
            "MeV" | "mev" => Ok(Units::MeV),
            _ => Err(Error::Config(format!("unknown unit system '{s}', expected natural or MeV"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionReport {
    pub units: Units,
    pub mass: f64,
    pub planck_mass: f64,
    pub planck_to_mass_ratio: f64,
    pub xi2_max: f64,
    /// Upper bound on Δ(p_x²) + Δ(p_y²) + Δ(p_z²).
    pub fluctuation_bound: f64,
    /// Effective mass when the variance saturates the bound.
    pub effective_mass_at_bound: f64,
    pub temperature: Option<f64>,
    pub thermal_spread: Option<f64>,
    /// thermal spread / bound
    pub thermal_to_bound_ratio: Option<f64>,
}

/// Report for a particle of mass `mass`. In MeV units `temperature` is in
/// kelvin and the Planck mass comes from the constants table; in natural
/// units it is k_B T and `planck_mass` must be given.
pub fn dispersion_report(mass: f64, temperature: Option<f64>, xi2_max: f64, units: Units, planck_mass: Option<f64>) -> Result<DispersionReport> {
    if !(mass > 0.0) || !(xi2_max >= 0.0) || temperature.is_some_and(|t| !(t > 0.0)) {
        return Err(Error::Domain("need mass > 0, xi2 >= 0 and a positive temperature".into()));
    }
    let (mp, kt) = match units {
        Units::MeV => (planck_mass.unwrap_or(constants::PLANCK_MASS_MEV), temperature.map(|t| t * constants::BOLTZMANN_MEV_PER_K)),
        Units::Natural => {
            let mp = planck_mass.ok_or_else(|| Error::Config("natural units need an explicit Planck mass".into()))?;
            (mp, temperature)
        }
    };
    if !(mp > 0.0) {
        return Err(Error::Domain(format!("Planck mass must be positive, got {mp}")));
    }
    let bound = xi2_fluctuation_bound(mass, mp, xi2_max, 1.0);
    let thermal = kt.map(|k| thermal_spread(mass, k));
    Ok(DispersionReport {
        units,
        mass,
        planck_mass: mp,
        planck_to_mass_ratio: mp / mass,
        xi2_max,
        fluctuation_bound: bound,
        effective_mass_at_bound: effective_mass(mass, bound, 1.0)?,
        temperature,
        thermal_spread: thermal,
        thermal_to_bound_ratio: thermal.map(|t| t / bound),
    })
}
