//! Layered geometry and the position-dependent mass and permittivity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::{BinaryTable, MaterialParams};

/// Layers thinner than this (nm) are dropped when a stack is built.
pub const MIN_LAYER_THICKNESS: f64 = 0.01;

/// Barrier and inner-well thickness of the reference cascade (nm).
pub const BARRIER_WIDTH: f64 = 1.04;
/// Combined width of the input and output wells (nm).
pub const WELL_BUDGET: f64 = 2.60;
/// Input-well width of the fabricated cascade (nm).
pub const DESIGN_D: f64 = 1.56;
/// Al fraction of the alloy wells.
pub const WELL_ALLOY_X: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerRole {
    Barrier,
    Well,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// Al fraction.
    pub x: f64,
    /// nm
    pub thickness: f64,
    pub role: LayerRole,
}

impl Layer {
    pub fn new(x: f64, thickness: f64, role: LayerRole) -> Self {
        Layer { x, thickness, role }
    }
}

/// Where a coordinate falls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    LeftCladding,
    Layer(usize),
    RightCladding,
}

/// Ordered layers between two semi-infinite cladding media. The first
/// layer starts at `z = 0`; regions are half-open `[z_{p-1}, z_p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    layers: Vec<Layer>,
    /// For every layer, the indices of the input layers it was built from.
    origins: Vec<Vec<usize>>,
    materials: Vec<MaterialParams>,
    cladding: MaterialParams,
    boundaries: Vec<f64>,
}

impl LayerStack {
    /// Builds a stack. Layers thinner than [`MIN_LAYER_THICKNESS`] are
    /// dropped and neighbours of equal composition merged.
    pub fn new(layers: Vec<Layer>, cladding_x: f64, table: &BinaryTable) -> Result<Self> {
        let mut kept: Vec<Layer> = Vec::new();
        let mut origins: Vec<Vec<usize>> = Vec::new();
        for (i, l) in layers.into_iter().enumerate() {
            if !(l.thickness.is_finite() && l.thickness >= 0.0) {
                return Err(Error::Structure(format!("layer {i} has thickness {}", l.thickness)));
            }
            if !(0.0..=1.0).contains(&l.x) {
                return Err(Error::Structure(format!("layer {i} has Al fraction {}", l.x)));
            }
            if l.thickness < MIN_LAYER_THICKNESS {
                continue;
            }
            match kept.last_mut() {
                Some(prev) if prev.x == l.x => {
                    prev.thickness += l.thickness;
                    origins.last_mut().unwrap().push(i);
                }
                _ => {
                    kept.push(l);
                    origins.push(vec![i]);
                }
            }
        }
        if kept.is_empty() {
            return Err(Error::Structure("stack has no layers".into()));
        }
        let materials = kept
            .iter()
            .map(|l| table.interpolate(l.x))
            .collect::<Result<Vec<_>>>()?;
        let cladding = table.interpolate(cladding_x)?;
        let mut boundaries = Vec::with_capacity(kept.len() + 1);
        let mut z = 0.0;
        boundaries.push(z);
        for l in &kept {
            z += l.thickness;
            boundaries.push(z);
        }
        Ok(LayerStack {
            layers: kept,
            origins,
            materials,
            cladding,
            boundaries,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn origins(&self, layer: usize) -> &[usize] {
        &self.origins[layer]
    }

    pub fn materials(&self) -> &[MaterialParams] {
        &self.materials
    }

    pub fn material(&self, layer: usize) -> &MaterialParams {
        &self.materials[layer]
    }

    pub fn cladding(&self) -> &MaterialParams {
        &self.cladding
    }

    /// `z_0 ... z_L` in nm, `z_0 = 0`.
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn total_thickness(&self) -> f64 {
        *self.boundaries.last().unwrap()
    }

    pub fn thicknesses(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.thickness).collect()
    }

    pub fn region(&self, z: f64) -> Region {
        if z < 0.0 {
            return Region::LeftCladding;
        }
        if z >= self.total_thickness() {
            return Region::RightCladding;
        }
        // last boundary <= z
        let i = self.boundaries.partition_point(|&b| b <= z);
        Region::Layer(i - 1)
    }

    pub fn material_at(&self, z: f64) -> &MaterialParams {
        match self.region(z) {
            Region::Layer(i) => &self.materials[i],
            _ => &self.cladding,
        }
    }

    /// Effective mass (units of m0) of the region containing `z`.
    pub fn mass_profile(&self, z: f64) -> f64 {
        self.material_at(z).effective_mass
    }

    /// Relative permittivity of the region containing `z`.
    pub fn dielectric_profile(&self, z: f64) -> f64 {
        self.material_at(z).dielectric
    }
}

/// The three-well cascade with input-well width `d` (nm): the inner
/// barrier/well/barrier block moves between the input and output barriers,
/// keeping the input plus output well width at [`WELL_BUDGET`].
pub fn cascade_layers(d: f64) -> Result<Vec<Layer>> {
    if !(0.0..=WELL_BUDGET + 1e-12).contains(&d) {
        return Err(Error::Domain(format!(
            "scan coordinate d = {d} nm outside [0, {WELL_BUDGET}]"
        )));
    }
    let out = (WELL_BUDGET - d).max(0.0);
    use LayerRole::*;
    Ok(vec![
        Layer::new(1.0, BARRIER_WIDTH, Barrier),
        Layer::new(0.0, d, Well),
        Layer::new(1.0, BARRIER_WIDTH, Barrier),
        Layer::new(WELL_ALLOY_X, BARRIER_WIDTH, Well),
        Layer::new(1.0, BARRIER_WIDTH, Barrier),
        Layer::new(WELL_ALLOY_X, out, Well),
        Layer::new(1.0, BARRIER_WIDTH, Barrier),
    ])
}

pub fn cascade_stack(d: f64, table: &BinaryTable) -> Result<LayerStack> {
    LayerStack::new(cascade_layers(d)?, 1.0, table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stack() -> LayerStack {
        cascade_stack(DESIGN_D, &BinaryTable::default()).unwrap()
    }

    #[test]
    fn experimental_geometry() {
        let s = stack();
        assert_eq!(s.len(), 7);
        assert!((s.total_thickness() - 7.80).abs() < 1e-12);
        let t = s.thicknesses();
        assert_eq!(t, vec![1.04, 1.56, 1.04, 1.04, 1.04, 1.04, 1.04]);
        assert!(s.boundaries().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn profiles_are_right_continuous() {
        let s = stack();
        let table = BinaryTable::default();
        let z = s.boundaries();
        assert_eq!(s.mass_profile(0.5 * (z[1] + z[2])), table.gan.effective_mass);
        assert_eq!(s.mass_profile(-1.0), table.aln.effective_mass);
        assert_eq!(s.mass_profile(z[1]), table.gan.effective_mass);
        let alloy = table.interpolate(WELL_ALLOY_X).unwrap();
        assert_eq!(s.dielectric_profile(0.5 * (z[3] + z[4])), alloy.dielectric);
        assert_eq!(s.dielectric_profile(z[7] + 0.1), table.aln.dielectric);
        assert_eq!(s.dielectric_profile(z[3]), alloy.dielectric);
        assert_eq!(s.region(z[7]), Region::RightCladding);
        assert_eq!(s.region(0.0), Region::Layer(0));
    }

    #[test]
    fn scan_endpoints_collapse_wells() {
        let table = BinaryTable::default();
        let s = cascade_stack(0.0, &table).unwrap();
        assert_eq!(s.len(), 5);
        assert!((s.layers()[0].thickness - 2.08).abs() < 1e-12);
        assert_eq!(s.origins(0), &[0, 2]);
        assert!((s.total_thickness() - 7.80).abs() < 1e-12);
        let s = cascade_stack(2.6, &table).unwrap();
        assert_eq!(s.len(), 5);
        assert!(cascade_stack(2.7, &table).is_err());
        assert!(cascade_stack(-0.1, &table).is_err());
    }

    #[test]
    fn thickness_conserved_over_scan() {
        let table = BinaryTable::default();
        for i in 0..=26 {
            let s = cascade_stack(i as f64 * 0.1, &table).unwrap();
            assert!((s.total_thickness() - 7.80).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_layers() {
        let table = BinaryTable::default();
        assert!(LayerStack::new(vec![Layer::new(0.0, -1.0, LayerRole::Well)], 1.0, &table).is_err());
        assert!(LayerStack::new(vec![Layer::new(1.5, 1.0, LayerRole::Well)], 1.0, &table).is_err());
        assert!(LayerStack::new(vec![], 1.0, &table).is_err());
    }
}
