//! Carrier and donor densities, the Fermi level, and the Hartree potential.
//!
//! The Hartree potential energy of an electron obeys
//! `(eps V_H')' = (e^2 / eps0) [N_D+ - n]` with sheet charges entering as
//! jumps of `eps V_H'`. On every segment of the linearized potential the
//! donor density is constant and `n` is a sum of squared Airy (or
//! exponential) solutions, so `V_H` follows in closed form from the first
//! and second antiderivatives of `psi^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::PiecewiseLinearPotential;
use crate::schrodinger::StationaryState;
use crate::structure::LayerStack;
use crate::units::{C_PER_M2, DOS_2D_PER_M0, E2_OVER_EPS0, K_B, PER_CM3};

/// How the Fermi level is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value_ev")]
pub enum FermiLevel {
    /// Global charge neutrality of the stack.
    #[default]
    Neutral,
    /// A given value (eV).
    Fixed(f64),
}

/// Doping and occupation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChargeModel {
    /// Donor concentration in doped layers (cm^-3).
    pub donor_density_cm3: f64,
    /// Indices of the doped layers, counted in the layer list given to the stack.
    pub doped_layers: Vec<usize>,
    /// Donor degeneracy factor.
    pub degeneracy: f64,
    /// Donor level below the local conduction band edge (eV).
    pub donor_binding_ev: f64,
    pub fermi_level: FermiLevel,
    /// Add the polarization sheet charges to the Hartree source. They are
    /// already contained in the internal fields, so the default leaves them out.
    pub include_sheet_charges: bool,
}

impl Default for ChargeModel {
    fn default() -> Self {
        ChargeModel {
            donor_density_cm3: 5e18,
            doped_layers: vec![1],
            degeneracy: 2.0,
            donor_binding_ev: 0.025,
            fermi_level: FermiLevel::Neutral,
            include_sheet_charges: false,
        }
    }
}

impl ChargeModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.donor_density_cm3 >= 0.0 && self.donor_density_cm3.is_finite()) {
            return Err(Error::Config(format!("donor_density_cm3 = {}", self.donor_density_cm3)));
        }
        if !(self.degeneracy > 0.0) {
            return Err(Error::Config(format!("degeneracy = {}", self.degeneracy)));
        }
        if !self.donor_binding_ev.is_finite() {
            return Err(Error::Config("donor_binding_ev is not finite".into()));
        }
        Ok(())
    }

    /// Donor density (nm^-3) of every stack layer.
    pub fn layer_donors(&self, stack: &LayerStack) -> Vec<f64> {
        (0..stack.len())
            .map(|p| {
                let doped = stack.origins(p).iter().any(|o| self.doped_layers.contains(o));
                if doped {
                    self.donor_density_cm3 * PER_CM3
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// `ln(1 + exp(x))` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 35.0 {
        x + (-x).exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Sheet density per unit mass of a subband, `n0/m ln[1 + exp((E_F - E)/kT)]` in nm^-2 (m in m0).
pub fn occupation(energy: f64, fermi: f64, temperature: f64) -> f64 {
    let kt = K_B * temperature;
    DOS_2D_PER_M0 * kt * softplus((fermi - energy) / kt)
}

/// Ionized fraction of donors times `n_d`.
pub fn ionized_donors(n_d: f64, fermi: f64, temperature: f64, donor_level: f64, degeneracy: f64) -> f64 {
    let x = (fermi - donor_level) / (K_B * temperature);
    if x > 700.0 {
        return 0.0;
    }
    n_d / (1.0 + degeneracy * x.exp())
}

/// Electron density `n(z)` (nm^-3) of occupied normalized states.
pub fn electron_density(states: &[StationaryState], fermi: f64, temperature: f64, mass: f64, z: f64) -> f64 {
    states
        .iter()
        .map(|s| occupation(s.energy, fermi, temperature) * s.psi(z).powi(2))
        .sum::<f64>()
        * mass
}

/// Space charge of one iteration: mobile electrons, ionized donors per
/// segment of the linearized potential, and optional sheet charges.
#[derive(Debug, Clone)]
pub struct ChargeDensity {
    pub states: Vec<StationaryState>,
    /// `n0/m ln(...)` of each state (nm^-2).
    pub occupations: Vec<f64>,
    /// Ionized donors on each segment (nm^-3).
    pub donors: Vec<f64>,
    /// Segment bounds and masses copied from the potential.
    pub segments: Vec<(f64, f64, f64)>,
    /// `(z, sigma)` with sigma in e/nm^2, entering as jumps of `eps V_H'` equal to `-C sigma`.
    pub sheets: Vec<(f64, f64)>,
    pub fermi_level: Option<f64>,
}

impl ChargeDensity {
    fn segment(&self, z: f64) -> Option<usize> {
        let (start, end) = (self.segments[0].0, self.segments.last().unwrap().1);
        if z < start || z >= end {
            return None;
        }
        Some(self.segments.partition_point(|s| s.0 <= z) - 1)
    }

    /// Mass-free density `u = n / m` (nm^-3), continuous everywhere.
    pub fn reduced_electrons(&self, z: f64) -> f64 {
        self.states.iter().zip(&self.occupations).map(|(s, c)| c * s.psi(z).powi(2)).sum()
    }

    /// Electron density at `z` (nm^-3), mass of the region containing `z`.
    pub fn electrons(&self, z: f64, mass: f64) -> f64 {
        mass * self.reduced_electrons(z)
    }

    /// `N_D+ - n` at `z` (nm^-3); zero outside the stack.
    pub fn rho(&self, z: f64) -> f64 {
        match self.segment(z) {
            Some(i) => self.donors[i] - self.electrons(z, self.segments[i].2),
            None => 0.0,
        }
    }

    /// Sheet density of electrons inside the stack, `sum_i c_i int m psi_i^2`.
    pub fn electron_sheet(&self) -> f64 {
        self.states
            .iter()
            .zip(&self.occupations)
            .map(|(s, c)| c * mass_weighted_norm(s, &self.segments))
            .sum()
    }

    /// Sheet density of ionized donors.
    pub fn donor_sheet(&self) -> f64 {
        self.donors.iter().zip(&self.segments).map(|(d, s)| d * (s.1 - s.0)).sum()
    }
}

/// `int m psi^2` over the stack (claddings excluded).
fn mass_weighted_norm(s: &StationaryState, segments: &[(f64, f64, f64)]) -> f64 {
    segments
        .iter()
        .enumerate()
        .map(|(i, seg)| seg.2 * s.segment_moments(i, seg.1).0)
        .sum()
}

/// Fermi level from neutrality or the fixed value, and the resulting charge.
#[allow(clippy::too_many_arguments)]
pub fn solve_charge(
    pot: &PiecewiseLinearPotential,
    states: &[StationaryState],
    layer_donors: &[f64],
    model: &ChargeModel,
    temperature: f64,
    sheet_charges: &[f64],
    boundaries: &[f64],
) -> Result<ChargeDensity> {
    if temperature <= 0.0 {
        return Err(Error::Domain(format!("temperature {temperature} K")));
    }
    let segments: Vec<(f64, f64, f64)> = pot.segments.iter().map(|s| (s.z0, s.z1, s.mass)).collect();
    let weights: Vec<f64> = states.iter().map(|s| mass_weighted_norm(s, &segments)).collect();
    // donor level follows the local band edge at each segment midpoint
    let donor_refs: Vec<(f64, f64, f64)> = pot
        .segments
        .iter()
        .map(|s| (layer_donors[s.layer], 0.5 * (s.v0 + s.v1) - model.donor_binding_ev, s.width()))
        .collect();
    let donors_at = |ef: f64| -> Vec<f64> {
        donor_refs
            .iter()
            .map(|&(nd, level, _)| ionized_donors(nd, ef, temperature, level, model.degeneracy))
            .collect()
    };
    let excess = |ef: f64| -> f64 {
        let n: f64 = states
            .iter()
            .zip(&weights)
            .map(|(s, w)| occupation(s.energy, ef, temperature) * w)
            .sum();
        let d: f64 = donors_at(ef).iter().zip(&donor_refs).map(|(d, r)| d * r.2).sum();
        n - d
    };
    let total_donors: f64 = donor_refs.iter().map(|r| r.0 * r.2).sum();
    let fermi = match model.fermi_level {
        FermiLevel::Fixed(v) => Some(v),
        FermiLevel::Neutral if total_donors == 0.0 || states.is_empty() => None,
        FermiLevel::Neutral => {
            let kt = K_B * temperature;
            let mut lo = states[0].energy - 2.0;
            let mut hi = states[0].energy + 2.0;
            while excess(lo) > 0.0 {
                lo -= 2.0;
            }
            while excess(hi) < 0.0 {
                hi += 2.0;
                if hi > states[0].energy + 200.0 {
                    return Err(Error::SingularSystem("no neutral Fermi level".into()));
                }
            }
            while hi - lo > 1e-13 * (1.0 + lo.abs()).max(kt) {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                if excess(mid) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(0.5 * (lo + hi))
        }
    };
    let (occupations, donors) = match fermi {
        Some(ef) => (states.iter().map(|s| occupation(s.energy, ef, temperature)).collect(), donors_at(ef)),
        None => (vec![0.0; states.len()], vec![0.0; donor_refs.len()]),
    };
    let sheets = if model.include_sheet_charges {
        boundaries
            .iter()
            .zip(sheet_charges)
            .map(|(&z, &s)| (z, s * C_PER_M2))
            .collect()
    } else {
        Vec::new()
    };
    Ok(ChargeDensity { states: states.to_vec(), occupations, donors, segments, sheets, fermi_level: fermi })
}

/// Closed-form Hartree potential energy on a linearized stack.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HartreeSolution {
    /// `V_H` at the left end of every segment (eV).
    pub start_values: Vec<f64>,
    /// `eps V_H'` at the right side of the left end of every segment (eV).
    pub start_displacements: Vec<f64>,
    pub segments: Vec<HartreeSegment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HartreeSegment {
    pub z0: f64,
    pub z1: f64,
    pub eps: f64,
    pub mass: f64,
    pub donors: f64,
}

impl HartreeSolution {
    /// Evaluates `V_H` and `eps V_H'` at `z` given the electron moments on
    /// the segment containing it.
    fn local(&self, i: usize, x: f64, moments: (f64, f64)) -> (f64, f64) {
        let s = &self.segments[i];
        let v = self.start_values[i]
            + self.start_displacements[i] * x / s.eps
            + E2_OVER_EPS0 / s.eps * (s.donors * x * x / 2.0 - s.mass * moments.1);
        let d = self.start_displacements[i] + E2_OVER_EPS0 * (s.donors * x - s.mass * moments.0);
        (v, d)
    }
}

fn electron_moments(charge: &ChargeDensity, i: usize, z: f64) -> (f64, f64) {
    charge
        .states
        .iter()
        .zip(&charge.occupations)
        .filter(|(_, c)| **c != 0.0)
        .fold((0.0, 0.0), |acc, (s, c)| {
            let (a, b) = s.segment_moments(i, z);
            (acc.0 + c * a, acc.1 + c * b)
        })
}

/// Solves for `V_H` with `V_H(z_0) = V_H(z_L) = 0`, continuity of `V_H`,
/// and jumps of `eps V_H'` set by the sheet charges.
pub fn hartree_closed_form(pot: &PiecewiseLinearPotential, charge: &ChargeDensity) -> Result<HartreeSolution> {
    let segs: Vec<HartreeSegment> = pot
        .segments
        .iter()
        .zip(&charge.donors)
        .map(|(s, &d)| HartreeSegment { z0: s.z0, z1: s.z1, eps: s.eps, mass: s.mass, donors: d })
        .collect();
    let n = segs.len();
    // particular solution with zero starting displacement, plus the homogeneous ramp
    let mut sol = HartreeSolution {
        start_values: vec![0.0; n],
        start_displacements: vec![0.0; n],
        segments: segs.clone(),
    };
    let mut end_moments = Vec::with_capacity(n);
    for i in 0..n {
        end_moments.push(electron_moments(charge, i, segs[i].z1));
    }
    let sheet_at = |z: f64| -> f64 {
        charge
            .sheets
            .iter()
            .filter(|(zs, _)| (zs - z).abs() < 1e-9)
            .map(|(_, s)| s)
            .sum()
    };
    let mut compliance = 0.0;
    for i in 0..n {
        compliance += segs[i].width() / segs[i].eps;
        let (v, d) = sol.local(i, segs[i].width(), end_moments[i]);
        if i + 1 < n {
            sol.start_values[i + 1] = v;
            sol.start_displacements[i + 1] = d - E2_OVER_EPS0 * sheet_at(segs[i].z1);
        } else {
            if !(compliance > 0.0) {
                return Err(Error::SingularSystem("zero total d/eps".into()));
            }
            let d0 = -v / compliance;
            // add the homogeneous solution with constant displacement d0
            let mut ramp = 0.0;
            for j in 0..n {
                sol.start_values[j] += ramp;
                sol.start_displacements[j] += d0;
                ramp += d0 * segs[j].width() / segs[j].eps;
            }
        }
    }
    Ok(sol)
}

impl HartreeSegment {
    pub fn width(&self) -> f64 {
        self.z1 - self.z0
    }
}

impl HartreeSolution {
    fn index(&self, z: f64) -> Option<usize> {
        let (start, end) = (self.segments[0].z0, self.segments.last().unwrap().z1);
        if z < start || z > end {
            return None;
        }
        Some((self.segments.partition_point(|s| s.z0 <= z).max(1) - 1).min(self.segments.len() - 1))
    }

    /// `(V_H, eps V_H')` at `z`; zero potential outside the stack.
    pub fn eval(&self, charge: &ChargeDensity, z: f64) -> (f64, f64) {
        match self.index(z) {
            Some(i) => self.local(i, z - self.segments[i].z0, electron_moments(charge, i, z)),
            None => (0.0, 0.0),
        }
    }

    pub fn value(&self, charge: &ChargeDensity, z: f64) -> f64 {
        self.eval(charge, z).0
    }

    /// `V_H` at the end of the last segment, zero by construction.
    pub fn end_value(&self, charge: &ChargeDensity) -> f64 {
        let i = self.segments.len() - 1;
        self.local(i, self.segments[i].width(), electron_moments(charge, i, self.segments[i].z1)).0
    }

    /// Largest mismatch of `V_H` and of the `eps V_H'` jump at interior
    /// nodes, relative to the largest magnitude involved.
    pub fn matching_residual(&self, charge: &ChargeDensity) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.segments.len() - 1 {
            let s = &self.segments[i];
            let (v, d) = self.local(i, s.width(), electron_moments(charge, i, s.z1));
            let sheet: f64 = charge.sheets.iter().filter(|(z, _)| (z - s.z1).abs() < 1e-9).map(|x| x.1).sum();
            let dv = (v - self.start_values[i + 1]).abs() / v.abs().max(1e-300).max(self.start_values[i + 1].abs());
            let want = d - E2_OVER_EPS0 * sheet;
            let dd = (want - self.start_displacements[i + 1]).abs() / want.abs().max(d.abs()).max(1e-300);
            worst = worst.max(if v == 0.0 && self.start_values[i + 1] == 0.0 { 0.0 } else { dv });
            worst = worst.max(if want == 0.0 && self.start_displacements[i + 1] == 0.0 { 0.0 } else { dd });
        }
        worst
    }
}

/// Finite-difference oracle for `(eps V')' = C rho` on `[a, b]` with
/// `V(a) = V(b) = 0`. `rho` in nm^-3; sheet charges `(z, sigma)` in e/nm^2
/// are spread over the cell at the nearest node; `rho` is averaged over each control volume. Returns `(z, V)`.
pub fn fd_poisson_oracle(
    rho: &dyn Fn(f64) -> f64,
    eps: &dyn Fn(f64) -> f64,
    sheets: &[(f64, f64)],
    a: f64,
    b: f64,
    h: f64,
) -> (Vec<f64>, Vec<f64>) {
    let cells = ((b - a) / h).ceil().max(2.0) as usize;
    let h = (b - a) / cells as f64;
    let z: Vec<f64> = (0..=cells).map(|i| a + i as f64 * h).collect();
    // harmonic mean of eps over each cell, from 8 sub-samples
    let eps_cell: Vec<f64> = (0..cells)
        .map(|i| {
            let inv: f64 = (0..8).map(|k| 1.0 / eps(z[i] + (k as f64 + 0.5) * h / 8.0)).sum::<f64>() / 8.0;
            1.0 / inv
        })
        .collect();
    let n = cells - 1;
    // control-volume averages over 32 sub-cells; a density jump inside a
    // volume then costs O(h/64) in its average instead of O(h)
    const SUB: usize = 32;
    let mut rhs: Vec<f64> = (1..=n)
        .map(|i| {
            let avg = (0..SUB)
                .map(|k| rho(z[i] + ((k as f64 + 0.5) / SUB as f64 - 0.5) * h))
                .sum::<f64>()
                / SUB as f64;
            E2_OVER_EPS0 * avg * h * h
        })
        .collect();
    for &(zs, s) in sheets {
        let i = ((zs - a) / h).round() as usize;
        if (1..=n).contains(&i) {
            // jump of eps V' equal to -C sigma
            rhs[i - 1] += -E2_OVER_EPS0 * s * h;
        }
    }
    let lower: Vec<f64> = (1..=n).map(|i| eps_cell[i - 1]).collect();
    let upper: Vec<f64> = (1..=n).map(|i| eps_cell[i]).collect();
    let diag: Vec<f64> = (0..n).map(|k| -(lower[k] + upper[k])).collect();
    // Thomas algorithm
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for k in 1..n {
        let m = diag[k] - lower[k] * c[k - 1];
        c[k] = upper[k] / m;
        d[k] = (rhs[k] - lower[k] * d[k - 1]) / m;
    }
    let mut v = vec![0.0; cells + 1];
    v[n] = d[n - 1];
    for k in (0..n - 1).rev() {
        v[k + 1] = d[k] - c[k] * v[k + 2];
    }
    (z, v)
}
