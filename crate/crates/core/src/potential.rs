//! Components of the effective potential and its piecewise-linear form.
//!
//! The effective potential is `dEc + V_E + V_H + V_HL`: band offset,
//! polarization fields, Hartree and Hedin-Lundquist exchange-correlation.
//! Components are sampled on a [`Grid`] that holds every layer boundary
//! once; discontinuous quantities take the value of the region to the
//! right of a boundary, and the left limit of the total is kept
//! separately so the linearization can use one-sided values.

use std::fmt::Write as _;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::BinaryTable;
use crate::polarization::FieldProfile;
use crate::structure::{LayerStack, Region};
use crate::units::{BOHR_RADIUS, E2_OVER_EPS0};

/// Which components enter the effective potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// All four components.
    #[default]
    Full,
    /// Offset, fields and Hartree; no exchange-correlation.
    NoXc,
    /// Offset and polarization fields only.
    FieldOnly,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Full => "full",
            Method::NoXc => "no_xc",
            Method::FieldOnly => "field_only",
        }
    }
}

/// How `V_E` is built from the per-layer fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldConstruction {
    /// Continuous integral `e * int_0^z F`.
    #[default]
    Integral,
    /// Per-layer `(-1)^(p-1) (F_p z - F_(p-1) z_(p-1))`, discontinuous at boundaries.
    Literal,
}

/// Conduction band offset of every layer and of the cladding (eV).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerOffsets {
    pub layers: Vec<f64>,
    pub cladding: f64,
}

impl LayerOffsets {
    pub fn at(&self, stack: &LayerStack, z: f64) -> f64 {
        match stack.region(z) {
            Region::Layer(i) => self.layers[i],
            _ => self.cladding,
        }
    }
}

/// Band offsets relative to the GaN conduction band edge at temperature `T`.
pub fn offset_component(
    stack: &LayerStack,
    table: &BinaryTable,
    temperature: f64,
) -> Result<LayerOffsets> {
    let layers = stack
        .layers()
        .iter()
        .map(|l| table.conduction_offset(l.x, temperature))
        .collect::<Result<Vec<_>>>()?;
    let cladding = table.conduction_offset(stack.cladding().x, temperature)?;
    Ok(LayerOffsets { layers, cladding })
}

/// Potential energy of an electron in the polarization fields (eV).
/// Constant outside the stack.
pub fn field_potential(
    stack: &LayerStack,
    fields: &FieldProfile,
    z: f64,
    construction: FieldConstruction,
) -> f64 {
    let b = stack.boundaries();
    let f = &fields.fields;
    match construction {
        FieldConstruction::Integral => {
            let zc = z.clamp(0.0, stack.total_thickness());
            let mut v = 0.0;
            for p in 0..f.len() {
                if zc <= b[p] {
                    break;
                }
                v += f[p] * (zc.min(b[p + 1]) - b[p]);
            }
            v
        }
        FieldConstruction::Literal => {
            let region = match stack.region(z) {
                Region::LeftCladding => return 0.0,
                Region::Layer(i) => i,
                Region::RightCladding => f.len() - 1,
            };
            let zc = z.min(stack.total_thickness());
            let sign = if region % 2 == 0 { 1.0 } else { -1.0 };
            let prev = if region == 0 { 0.0 } else { f[region - 1] };
            sign * (f[region] * zc - prev * b[region])
        }
    }
}

/// Hedin-Lundquist exchange-correlation potential (eV) for electron
/// density `n` (nm^-3) in a medium of permittivity `eps` and mass `mass`.
pub fn hedin_lundquist(n: f64, eps: f64, mass: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    let a_b = BOHR_RADIUS * eps / mass;
    let rs = (4.0 * PI * a_b.powi(3) * n / 3.0).powf(-1.0 / 3.0);
    let prefactor = (9.0 / (4.0 * PI * PI)).powf(1.0 / 3.0) / (4.0 * PI);
    let bracket = 1.0 + 0.6213 * rs / 21.0 * (1.0 + 21.0 / rs).ln();
    -prefactor * bracket * E2_OVER_EPS0 / (rs * eps * a_b)
}

/// Sample positions: every layer split into the same number of equal
/// intervals. Strictly increasing; each boundary appears once.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub z: Vec<f64>,
    /// Layer to the right of (or containing) each point; the last point
    /// belongs to the last layer.
    pub layer: Vec<usize>,
    /// Intervals per layer.
    pub per_layer: usize,
}

impl Grid {
    pub fn new(stack: &LayerStack, per_layer: usize) -> Self {
        let per_layer = per_layer.max(1);
        let b = stack.boundaries();
        let mut z = Vec::with_capacity(stack.len() * per_layer + 1);
        let mut layer = Vec::with_capacity(z.capacity());
        for p in 0..stack.len() {
            let h = (b[p + 1] - b[p]) / per_layer as f64;
            for j in 0..per_layer {
                z.push(if j == 0 { b[p] } else { b[p] + j as f64 * h });
                layer.push(p);
            }
        }
        z.push(b[stack.len()]);
        layer.push(stack.len() - 1);
        Grid { z, layer, per_layer }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Index of the first point of layer `p`.
    pub fn layer_start(&self, p: usize) -> usize {
        p * self.per_layer
    }
}

/// Sampled effective-potential components.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialComponents {
    pub grid: Grid,
    pub delta_ec: Vec<f64>,
    pub v_e: Vec<f64>,
    pub v_h: Vec<f64>,
    pub v_hl: Vec<f64>,
    /// Left limit of the total at each point (equal to the total except at boundaries).
    pub total_left: Vec<f64>,
    /// Potential of the left and right cladding media.
    pub cladding_levels: (f64, f64),
    pub method: Method,
}

impl PotentialComponents {
    pub fn total(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| self.delta_ec[i] + self.v_e[i] + self.v_h[i] + self.v_hl[i])
            .collect()
    }

    /// Zero Hartree and exchange terms; offsets and fields sampled on `grid`.
    pub fn field_only(
        stack: &LayerStack,
        offsets: &LayerOffsets,
        fields: &FieldProfile,
        construction: FieldConstruction,
        grid: Grid,
    ) -> Self {
        let n = grid.len();
        let zero = vec![0.0; n];
        Self::assemble(stack, offsets, fields, construction, grid, zero.clone(), zero, |_, _| 0.0, Method::FieldOnly)
    }

    /// Builds the components from sampled Hartree and exchange terms.
    /// `v_hl_left(i, layer)` gives the left limit of `V_HL` at boundary point `i`.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        stack: &LayerStack,
        offsets: &LayerOffsets,
        fields: &FieldProfile,
        construction: FieldConstruction,
        grid: Grid,
        v_h: Vec<f64>,
        v_hl: Vec<f64>,
        v_hl_left: impl Fn(usize, usize) -> f64,
        method: Method,
    ) -> Self {
        let n = grid.len();
        let last = n - 1;
        let mut delta_ec = Vec::with_capacity(n);
        let mut v_e = Vec::with_capacity(n);
        let mut total_left = Vec::with_capacity(n);
        for i in 0..n {
            let z = grid.z[i];
            let p = grid.layer[i];
            let right_offset = if i == last { offsets.cladding } else { offsets.layers[p] };
            let ve = field_potential(stack, fields, z, construction);
            delta_ec.push(right_offset);
            v_e.push(ve);
            let left = if i == 0 {
                offsets.cladding + field_potential(stack, fields, -1e-12, construction)
            } else if i == last || grid.layer[i - 1] != p {
                let lp = grid.layer[i - 1];
                let ve_left = match construction {
                    FieldConstruction::Integral => ve,
                    FieldConstruction::Literal => {
                        field_potential(stack, fields, z - 1e-12 * z.abs().max(1.0), construction)
                    }
                };
                offsets.layers[lp] + ve_left + v_h[i] + v_hl_left(i, lp)
            } else {
                right_offset + ve + v_h[i] + v_hl[i]
            };
            total_left.push(left);
        }
        // the right cladding carries no exchange term
        let mut v_hl = v_hl;
        v_hl[last] = 0.0;
        let right_level = offsets.cladding + field_potential(stack, fields, stack.total_thickness() + 1.0, construction);
        let left_level = offsets.cladding;
        PotentialComponents {
            grid,
            delta_ec,
            v_e,
            v_h,
            v_hl,
            total_left,
            cladding_levels: (left_level, right_level),
            method,
        }
    }

    /// CSV with columns `z_nm, delta_ec_eV, v_e_eV, v_h_eV, v_hl_eV, total_eV`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("z_nm,delta_ec_eV,v_e_eV,v_h_eV,v_hl_eV,total_eV\n");
        let total = self.total();
        for i in 0..self.grid.len() {
            writeln!(
                s,
                "{:.6},{:.9},{:.9},{:.9},{:.9},{:.9}",
                self.grid.z[i], self.delta_ec[i], self.v_e[i], self.v_h[i], self.v_hl[i], total[i]
            )
            .unwrap();
        }
        s
    }
}

/// One linear piece of the effective potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearSegment {
    pub z0: f64,
    pub z1: f64,
    /// Potential at `z0` and `z1` (eV).
    pub v0: f64,
    pub v1: f64,
    pub mass: f64,
    pub eps: f64,
    pub layer: usize,
}

impl LinearSegment {
    pub fn width(&self) -> f64 {
        self.z1 - self.z0
    }

    /// Effective field, i.e. slope of the potential (V/nm).
    pub fn field(&self) -> f64 {
        (self.v1 - self.v0) / (self.z1 - self.z0)
    }

    pub fn value_at(&self, z: f64) -> f64 {
        self.v0 + self.field() * (z - self.z0)
    }
}

/// A semi-infinite constant-potential medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cladding {
    pub level: f64,
    pub mass: f64,
}

/// Effective potential as contiguous linear segments between two claddings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseLinearPotential {
    pub segments: Vec<LinearSegment>,
    pub left: Cladding,
    pub right: Cladding,
    /// Sub-segments per layer.
    pub partitions: usize,
}

impl PiecewiseLinearPotential {
    pub fn new(segments: Vec<LinearSegment>, left: Cladding, right: Cladding) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Structure("potential without segments".into()));
        }
        for w in segments.windows(2) {
            if (w[1].z0 - w[0].z1).abs() > 1e-12 {
                return Err(Error::Structure(format!("gap between segments at z = {}", w[0].z1)));
            }
        }
        if segments.iter().any(|s| s.z1 <= s.z0 || s.mass <= 0.0) {
            return Err(Error::Structure("degenerate segment".into()));
        }
        Ok(PiecewiseLinearPotential { segments, left, right, partitions: 0 })
    }

    pub fn start(&self) -> f64 {
        self.segments[0].z0
    }

    pub fn end(&self) -> f64 {
        self.segments.last().unwrap().z1
    }

    /// Node coordinates: the start of every segment and the end of the last.
    pub fn nodes(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.segments.iter().map(|s| s.z0).collect();
        v.push(self.end());
        v
    }

    pub fn eff_fields(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.field()).collect()
    }

    /// Index of the segment containing `z` (half-open), `None` in the claddings.
    pub fn segment_index(&self, z: f64) -> Option<usize> {
        if z < self.start() || z >= self.end() {
            return None;
        }
        let i = self.segments.partition_point(|s| s.z0 <= z);
        Some(i - 1)
    }

    pub fn value_at(&self, z: f64) -> f64 {
        match self.segment_index(z) {
            Some(i) => self.segments[i].value_at(z),
            None if z < self.start() => self.left.level,
            None => self.right.level,
        }
    }

    pub fn mass_at(&self, z: f64) -> f64 {
        match self.segment_index(z) {
            Some(i) => self.segments[i].mass,
            None if z < self.start() => self.left.mass,
            None => self.right.mass,
        }
    }

    /// Lowest potential anywhere, claddings included.
    pub fn min_value(&self) -> f64 {
        self.segments
            .iter()
            .flat_map(|s| [s.v0, s.v1])
            .fold(self.left.level.min(self.right.level), f64::min)
    }

    /// Barrier height that bounds the bound-state window.
    pub fn barrier(&self) -> f64 {
        self.left.level.min(self.right.level)
    }

    /// Largest difference between each segment's end value and the value
    /// reconstructed by integrating the effective fields from its layer's first node.
    pub fn reconstruction_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        let mut running = None;
        let mut layer = usize::MAX;
        for s in &self.segments {
            if s.layer != layer {
                layer = s.layer;
                running = Some(s.v0);
            }
            let v = running.unwrap() + s.field() * s.width();
            err = err.max((v - s.v1).abs());
            running = Some(v);
        }
        err
    }
}

/// Interpolated value of the total potential at `z` inside layer `p`,
/// using one-sided values at the layer's ends.
fn layer_value(c: &PotentialComponents, total: &[f64], p: usize, z: f64) -> f64 {
    let g = &c.grid;
    let start = g.layer_start(p);
    let end = start + g.per_layer;
    let value = |i: usize| if i == end { c.total_left[i] } else { total[i] };
    let zs = &g.z[start..=end];
    let k = zs.partition_point(|&x| x <= z).clamp(1, zs.len() - 1) - 1;
    let (za, zb) = (zs[k], zs[k + 1]);
    if z == za {
        return value(start + k);
    }
    if z == zb {
        return value(start + k + 1);
    }
    let t = (z - za) / (zb - za);
    (1.0 - t) * value(start + k) + t * value(start + k + 1)
}

/// Splits every layer into `partitions` equal sub-segments and joins the
/// sampled total potential at the nodes by straight lines.
pub fn linearize(
    components: &PotentialComponents,
    stack: &LayerStack,
    partitions: usize,
) -> Result<PiecewiseLinearPotential> {
    if partitions == 0 {
        return Err(Error::Config("linearization needs at least one partition per layer".into()));
    }
    let total = components.total();
    let b = stack.boundaries();
    let mut segments = Vec::with_capacity(stack.len() * partitions);
    for p in 0..stack.len() {
        let m = stack.material(p);
        let h = (b[p + 1] - b[p]) / partitions as f64;
        let node = |l: usize| if l == partitions { b[p + 1] } else { b[p] + l as f64 * h };
        for l in 0..partitions {
            let (z0, z1) = (node(l), node(l + 1));
            segments.push(LinearSegment {
                z0,
                z1,
                v0: layer_value(components, &total, p, z0),
                v1: layer_value(components, &total, p, z1),
                mass: m.effective_mass,
                eps: m.dielectric,
                layer: p,
            });
        }
    }
    let clad = stack.cladding().effective_mass;
    let mut pot = PiecewiseLinearPotential::new(
        segments,
        Cladding { level: components.cladding_levels.0, mass: clad },
        Cladding { level: components.cladding_levels.1, mass: clad },
    )?;
    pot.partitions = partitions;
    Ok(pot)
}
