//! Composition- and temperature-dependent constants of Al(x)Ga(1-x)N.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUILTIN_TABLE: &str = include_str!("../data/materials.toml");

/// Constants of one composition. For binaries `eg0`, `varshni_a` and
/// `varshni_b` are the tabulated values; for alloys they hold the
/// interpolated `E_g(x, 0)`, `a(x)` and `b(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    #[serde(default)]
    pub x: f64,
    pub effective_mass: f64,
    pub dielectric: f64,
    pub eg0: f64,
    pub varshni_a: f64,
    pub varshni_b: f64,
    pub p_sp: f64,
    pub e31: f64,
    pub e33: f64,
    pub c13: f64,
    pub c33: f64,
    pub a_lattice: f64,
}

impl MaterialParams {
    /// Varshni bandgap `E_g(T) = E_g(0) - a T^2 / (b + T)` in eV.
    pub fn bandgap(&self, temperature: f64) -> f64 {
        self.eg0 - self.varshni_a * temperature * temperature / (self.varshni_b + temperature)
    }

    /// `e31 - e33 c13 / c33`, the piezoelectric response to biaxial strain (C/m^2).
    pub fn biaxial_piezo(&self) -> f64 {
        self.e31 - self.e33 * self.c13 / self.c33
    }

    fn validate(&self, name: &str) -> Result<()> {
        let ok = self.effective_mass > 0.0
            && self.dielectric > 1.0
            && self.c33 > 0.0
            && self.varshni_b > 0.0
            && self.a_lattice > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("unphysical constants for {name}: {self:?}")))
        }
    }

    fn lerp(gan: &Self, aln: &Self, x: f64) -> Self {
        let l = |g: f64, a: f64| x * a + (1.0 - x) * g;
        MaterialParams {
            x,
            effective_mass: l(gan.effective_mass, aln.effective_mass),
            dielectric: l(gan.dielectric, aln.dielectric),
            eg0: l(gan.eg0, aln.eg0),
            varshni_a: l(gan.varshni_a, aln.varshni_a),
            varshni_b: l(gan.varshni_b, aln.varshni_b),
            p_sp: l(gan.p_sp, aln.p_sp),
            e31: l(gan.e31, aln.e31),
            e33: l(gan.e33, aln.e33),
            c13: l(gan.c13, aln.c13),
            c33: l(gan.c33, aln.c33),
            a_lattice: l(gan.a_lattice, aln.a_lattice),
        }
    }
}

/// How alloy polarization is built from the binaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolarizationRule {
    /// Linear interpolation of every constant, then the strain formula.
    #[default]
    Vegard,
    /// `P(x) = P_AlN(x) + (1 - x) P_GaN(x)`, each binary evaluated at the
    /// alloy's strain. Does not reduce to AlN at `x = 1` unless `P_GaN = 0`.
    Literal,
}

/// Binary constants plus the alloy rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryTable {
    pub gan: MaterialParams,
    pub aln: MaterialParams,
    /// Bandgap bowing parameter (eV), entering as `+bowing x (1 - x)`.
    pub bowing: f64,
    /// Fraction of the bandgap difference taken up by the conduction band.
    pub offset_ratio: f64,
    #[serde(default)]
    pub polarization_rule: PolarizationRule,
}

impl Default for BinaryTable {
    fn default() -> Self {
        Self::from_toml_str(BUILTIN_TABLE).expect("built-in material table is valid")
    }
}

fn check_x(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("Al fraction {x} outside [0, 1]")))
    }
}

fn check_t(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("temperature {t} K is negative")))
    }
}

impl BinaryTable {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let mut t: BinaryTable = toml::from_str(s)?;
        t.gan.x = 0.0;
        t.aln.x = 1.0;
        t.gan.validate("GaN")?;
        t.aln.validate("AlN")?;
        Ok(t)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("table serializes")
    }

    /// Constants at Al fraction `x`: linear in `x` except the zero-temperature
    /// bandgap, which carries the bowing term.
    pub fn interpolate(&self, x: f64) -> Result<MaterialParams> {
        check_x(x)?;
        if x == 0.0 {
            return Ok(self.gan);
        }
        if x == 1.0 {
            return Ok(self.aln);
        }
        let mut p = MaterialParams::lerp(&self.gan, &self.aln, x);
        p.eg0 += self.bowing * x * (1.0 - x);
        Ok(p)
    }

    /// `E_g(x, T)` in eV.
    pub fn bandgap(&self, x: f64, temperature: f64) -> Result<f64> {
        check_t(temperature)?;
        Ok(self.interpolate(x)?.bandgap(temperature))
    }

    /// Conduction band offset of `Al(x)Ga(1-x)N` above GaN at temperature `T` (eV).
    pub fn conduction_offset(&self, x: f64, temperature: f64) -> Result<f64> {
        Ok(self.offset_ratio * (self.bandgap(x, temperature)? - self.bandgap(0.0, temperature)?))
    }

    /// Total (spontaneous + piezoelectric) polarization of a layer with Al
    /// fraction `x` pseudomorphically strained to in-plane lattice constant
    /// `substrate_lattice` (nm). C/m^2.
    pub fn polarization(&self, x: f64, substrate_lattice: f64) -> Result<f64> {
        if substrate_lattice <= 0.0 {
            return Err(Error::Domain(format!("substrate lattice {substrate_lattice} nm")));
        }
        let alloy = self.interpolate(x)?;
        match self.polarization_rule {
            PolarizationRule::Vegard => Ok(total_polarization(&alloy, substrate_lattice)),
            PolarizationRule::Literal => {
                let strain = (substrate_lattice - alloy.a_lattice) / alloy.a_lattice;
                let binary = |m: &MaterialParams| m.p_sp + 2.0 * strain * m.biaxial_piezo();
                Ok(binary(&self.aln) + (1.0 - x) * binary(&self.gan))
            }
        }
    }
}

/// `P_sp + 2 [(a_sub - a) / a] (e31 - e33 c13 / c33)` for one set of constants.
pub fn total_polarization(m: &MaterialParams, substrate_lattice: f64) -> f64 {
    let strain = (substrate_lattice - m.a_lattice) / m.a_lattice;
    m.p_sp + 2.0 * strain * m.biaxial_piezo()
}
