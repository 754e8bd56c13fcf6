//! Layer polarizations, the internal fields they induce and the interface
//! sheet charges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::BinaryTable;
use crate::structure::LayerStack;
use crate::units::sheet_to_field;

/// In-plane lattice constant the layers are strained to.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "lattice_nm")]
pub enum Substrate {
    /// The unstressed cladding medium.
    #[default]
    Cladding,
    /// Thickness-weighted mean lattice constant of the stack.
    Average,
    /// Explicit lattice constant (nm).
    Lattice(f64),
}

impl Substrate {
    pub fn lattice(&self, stack: &LayerStack) -> f64 {
        match *self {
            Substrate::Cladding => stack.cladding().a_lattice,
            Substrate::Average => {
                let w: f64 = stack
                    .layers()
                    .iter()
                    .zip(stack.materials())
                    .map(|(l, m)| l.thickness * m.a_lattice)
                    .sum();
                w / stack.total_thickness()
            }
            Substrate::Lattice(a) => a,
        }
    }
}

/// Internal fields and interface charges of a stack.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldProfile {
    /// Field in each layer (V/nm). An electron's potential energy rises
    /// with slope `+e F` along z.
    pub fields: Vec<f64>,
    /// Total polarization of each layer (C/m^2).
    pub polarizations: Vec<f64>,
    /// Polarization of the (unstrained) cladding (C/m^2).
    pub cladding_polarization: f64,
    /// `P^(p+1) - P^(p)` at `z_0 ... z_L` (C/m^2), claddings included.
    pub sheet_charges: Vec<f64>,
    thicknesses: Vec<f64>,
    dielectrics: Vec<f64>,
}

impl FieldProfile {
    /// `sum_p F_p d_p` in V.
    pub fn voltage_sum(&self) -> f64 {
        self.fields.iter().zip(&self.thicknesses).map(|(f, d)| f * d).sum()
    }

    /// Electric displacement `eps0 eps F + P` in each layer, C/m^2.
    pub fn displacements(&self) -> Vec<f64> {
        self.fields
            .iter()
            .zip(&self.dielectrics)
            .zip(&self.polarizations)
            .map(|((f, e), p)| f / sheet_to_field(1.0, *e) + p)
            .collect()
    }
}

/// Polarization of every layer of the stack, strained to `substrate`.
pub fn layer_polarizations(
    stack: &LayerStack,
    table: &BinaryTable,
    substrate: Substrate,
) -> Result<Vec<f64>> {
    let a = substrate.lattice(stack);
    stack.layers().iter().map(|l| table.polarization(l.x, a)).collect()
}

/// `sigma_p = P^(p+1) - P^(p)` over an ordered list that includes both claddings.
pub fn sheet_charges(polarizations: &[f64]) -> Vec<f64> {
    polarizations.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Fields from displacement continuity across every interface together
/// with zero total voltage across the stack.
pub fn internal_fields(stack: &LayerStack, polarizations: &[f64]) -> Result<FieldProfile> {
    if polarizations.len() != stack.len() {
        return Err(Error::Structure(format!(
            "{} polarizations for {} layers",
            polarizations.len(),
            stack.len()
        )));
    }
    let d = stack.thicknesses();
    let eps: Vec<f64> = stack.materials().iter().map(|m| m.dielectric).collect();
    let weights: Vec<f64> = d.iter().zip(&eps).map(|(d, e)| d / e).collect();
    let total: f64 = weights.iter().sum();
    let fields = (0..d.len())
        .map(|p| {
            let num: f64 = (0..d.len())
                .filter(|&k| k != p)
                .map(|k| (polarizations[k] - polarizations[p]) * weights[k])
                .sum();
            sheet_to_field(num / total, eps[p])
        })
        .collect();
    let clad = stack.cladding().p_sp;
    let mut all = Vec::with_capacity(d.len() + 2);
    all.push(clad);
    all.extend_from_slice(polarizations);
    all.push(clad);
    Ok(FieldProfile {
        fields,
        polarizations: polarizations.to_vec(),
        cladding_polarization: clad,
        sheet_charges: sheet_charges(&all),
        thicknesses: d,
        dielectrics: eps,
    })
}
