//! Oscillator strengths, the detected transition and the geometry scan.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::BinaryTable;
use crate::poisson::ChargeModel;
use crate::polarization::Substrate;
use crate::potential::FieldConstruction;
use crate::quadrature;
use crate::scf::{run_scf, SCFConfig, Setup};
use crate::schrodinger::StationaryState;
use crate::structure::cascade_stack;
use crate::units::HBAR2_OVER_2M0;

/// How the dipole matrix element enters the oscillator strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OscillatorForm {
    /// `(2 dE / hbar^2) sum_p m_p |int_p z psi psi'|^2`, one term per layer.
    #[default]
    LayerResolved,
    /// `(2 m_w dE / hbar^2) |int z psi psi'|^2` with the mass `m_w` of the
    /// layer holding most of the lower state.
    Dipole,
}

/// Energies, transition energies and oscillator strengths of a spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionTable {
    /// eV
    pub energies: Vec<f64>,
    /// `omega[n][k] = E_n - E_k` (eV).
    pub omega: Vec<Vec<f64>>,
    /// Signed oscillator strengths, `f[n][k] = -f[k][n]`.
    pub f: Vec<Vec<f64>>,
}

/// `int z psi_a psi_b` over each physical layer.
fn layer_dipoles(a: &StationaryState, b: &StationaryState) -> Vec<f64> {
    let layers = a.localization.len();
    let mut out = vec![0.0; layers];
    for seg in &a.bases {
        let g = |z: f64| z * a.psi(z) * b.psi(z);
        out[seg.layer] += quadrature::adaptive(&g, seg.z0, seg.z1, 1e-10);
    }
    out
}

fn layer_masses(s: &StationaryState) -> Vec<f64> {
    let mut m = vec![0.0; s.localization.len()];
    for b in &s.bases {
        m[b.layer] = b.mass;
    }
    m
}

/// Oscillator strength of the transition between `n` and `k`.
pub fn oscillator_strength(n: &StationaryState, k: &StationaryState, form: OscillatorForm) -> f64 {
    let de = n.energy - k.energy;
    if de == 0.0 {
        return 0.0;
    }
    let dip = layer_dipoles(n, k);
    let masses = layer_masses(n);
    match form {
        OscillatorForm::LayerResolved => {
            de / HBAR2_OVER_2M0 * dip.iter().zip(&masses).map(|(d, m)| m * d * d).sum::<f64>()
        }
        OscillatorForm::Dipole => {
            let lower = if n.energy < k.energy { n } else { k };
            let p = lower
                .localization
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(i, _)| i)
                .unwrap();
            let d: f64 = dip.iter().sum();
            de / HBAR2_OVER_2M0 * masses[p] * d * d
        }
    }
}

impl TransitionTable {
    pub fn new(states: &[StationaryState], form: OscillatorForm) -> Self {
        let n = states.len();
        let energies: Vec<f64> = states.iter().map(|s| s.energy).collect();
        let omega = (0..n).map(|i| (0..n).map(|j| energies[i] - energies[j]).collect()).collect();
        let mut f = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let v = oscillator_strength(&states[i], &states[j], form);
                f[i][j] = v;
                f[j][i] = -v;
            }
        }
        TransitionTable { energies, omega, f }
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }
}

/// `Omega_13 = E_3 - E_1` (eV).
pub fn detection_energy(table: &TransitionTable) -> Result<f64> {
    if table.len() < 3 {
        return Err(Error::InsufficientStates { found: table.len(), needed: 3 });
    }
    Ok(table.energies[2] - table.energies[0])
}

/// `(f13 > f1n for every n != 3, f13 > sum of those)` in magnitudes.
/// Transitions to missing states count as zero.
pub fn design_criteria(table: &TransitionTable) -> (bool, bool) {
    if table.len() < 3 {
        return (false, false);
    }
    let f13 = table.f[0][2].abs();
    let others: Vec<f64> = (1..table.len().min(5)).filter(|&k| k != 2).map(|k| table.f[0][k].abs()).collect();
    let c325 = others.iter().all(|&x| f13 > x);
    let c326 = f13 > others.iter().sum::<f64>();
    (c325, c326)
}

/// One geometry of the scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    /// nm
    pub d: f64,
    /// eV, up to five.
    pub energies: Vec<f64>,
    /// `f_12 ... f_15`, signed.
    pub f1: Vec<f64>,
    pub cond_325: bool,
    pub cond_326: bool,
    pub converged: bool,
    pub error: Option<String>,
}

/// Everything a scan needs besides the geometry.
#[derive(Debug, Clone)]
pub struct ScanSettings {
    pub table: BinaryTable,
    pub temperature: f64,
    pub charge: ChargeModel,
    pub scf: SCFConfig,
    pub form: OscillatorForm,
    pub substrate: Substrate,
    pub construction: FieldConstruction,
    /// Layer polarizations (C/m^2) used for every geometry instead of the computed ones.
    pub polarization_overrides: Option<Vec<f64>>,
}

impl ScanSettings {
    pub fn new(table: BinaryTable, temperature: f64, charge: ChargeModel, scf: SCFConfig) -> Self {
        ScanSettings {
            table,
            temperature,
            charge,
            scf,
            form: OscillatorForm::default(),
            substrate: Substrate::default(),
            construction: FieldConstruction::default(),
            polarization_overrides: None,
        }
    }
}

/// Scan coordinates `d_min, d_min + step, ...` not beyond `d_max`.
pub fn scan_points(d_min: f64, d_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(d_max >= d_min) {
        return Err(Error::Config(format!("empty scan range [{d_min}, {d_max}] with step {step}")));
    }
    let n = ((d_max - d_min) / step + 1e-9).floor() as usize;
    // round to the step's decimal grid so rows are reproducible
    Ok((0..=n).map(|i| ((d_min + i as f64 * step) * 1e9).round() / 1e9).collect())
}

/// Solves one geometry of the cascade.
pub fn scan_row(d: f64, settings: &ScanSettings) -> ScanRow {
    let solve = || -> Result<ScanRow> {
        let stack = cascade_stack(d, &settings.table)?;
        let mut setup = Setup::new(stack, settings.table.clone(), settings.temperature);
        setup.substrate = settings.substrate;
        setup.construction = settings.construction;
        setup.polarization_overrides = settings.polarization_overrides.clone();
        let r = run_scf(&setup, &settings.charge, &settings.scf)?;
        let table = TransitionTable::new(&r.states, settings.form);
        let (c325, c326) = design_criteria(&table);
        Ok(ScanRow {
            d,
            energies: table.energies.iter().take(5).copied().collect(),
            f1: (1..table.len().min(5)).map(|k| table.f[0][k]).collect(),
            cond_325: c325,
            cond_326: c326,
            converged: r.converged,
            error: None,
        })
    };
    solve().unwrap_or_else(|e| ScanRow {
        d,
        energies: Vec::new(),
        f1: Vec::new(),
        cond_325: false,
        cond_326: false,
        converged: false,
        error: Some(e.to_string()),
    })
}

/// Solves every geometry in parallel; rows come back in scan order.
pub fn geometry_scan(d_min: f64, d_max: f64, step: f64, settings: &ScanSettings) -> Result<Vec<ScanRow>> {
    let points = scan_points(d_min, d_max, step)?;
    Ok(points.par_iter().map(|&d| scan_row(d, settings)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{Cladding, LinearSegment, PiecewiseLinearPotential};
    use crate::schrodinger::{bound_states, SolverOptions};

    fn states() -> Vec<StationaryState> {
        let segs = vec![
            LinearSegment { z0: 0.0, z1: 1.0, v0: 0.0, v1: 0.2, mass: 0.2, eps: 10.0, layer: 0 },
            LinearSegment { z0: 1.0, z1: 3.0, v0: 0.1, v1: 0.3, mass: 0.25, eps: 10.0, layer: 1 },
        ];
        let c = Cladding { level: 1.2, mass: 0.3 };
        let pot = PiecewiseLinearPotential::new(segs, c, c).unwrap();
        bound_states(&pot, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn antisymmetric_with_zero_diagonal() {
        let s = states();
        assert!(s.len() >= 3);
        let t = TransitionTable::new(&s, OscillatorForm::LayerResolved);
        for i in 0..t.len() {
            assert_eq!(t.f[i][i], 0.0);
            for j in 0..t.len() {
                assert_eq!(t.f[i][j], -t.f[j][i]);
                assert_eq!(t.omega[i][j], -t.omega[j][i]);
            }
        }
        assert!((t.omega[0][2] - (t.omega[0][1] + t.omega[1][2])).abs() < 1e-15);
        assert!(t.f[0][1] < 0.0);
        assert_eq!(oscillator_strength(&s[0], &s[0], OscillatorForm::LayerResolved), 0.0);
        let a = oscillator_strength(&s[0], &s[1], OscillatorForm::Dipole);
        let b = oscillator_strength(&s[1], &s[0], OscillatorForm::Dipole);
        assert_eq!(a, -b);
    }

    #[test]
    fn detection_energy_needs_three_states() {
        let s = states();
        let t = TransitionTable::new(&s[..2], OscillatorForm::default());
        assert!(matches!(detection_energy(&t), Err(Error::InsufficientStates { found: 2, needed: 3 })));
        let t = TransitionTable::new(&s, OscillatorForm::default());
        assert!((detection_energy(&t).unwrap() - (s[2].energy - s[0].energy)).abs() < 1e-15);
    }

    #[test]
    fn criteria_from_hand_tables() {
        let mk = |f1: [f64; 4]| {
            let mut f = vec![vec![0.0; 5]; 5];
            for k in 1..5 {
                f[0][k] = -f1[k - 1];
                f[k][0] = f1[k - 1];
            }
            TransitionTable { energies: vec![0.0, 1.0, 2.0, 3.0, 4.0], omega: vec![vec![0.0; 5]; 5], f }
        };
        assert_eq!(design_criteria(&mk([0.098, 0.782, 0.024, 0.096])), (true, true));
        assert_eq!(design_criteria(&mk([0.3, 0.5, 0.1, 0.2])), (true, false));
        assert_eq!(design_criteria(&mk([0.3, 0.0, 0.1, 0.2])), (false, false));
        assert_eq!(design_criteria(&mk([0.0, 0.0, 0.0, 0.0])), (false, false));
    }

    #[test]
    fn scan_points_cover_range() {
        let p = scan_points(0.6, 1.8, 0.01).unwrap();
        assert_eq!(p.len(), 121);
        assert_eq!(p[0], 0.6);
        assert_eq!(*p.last().unwrap(), 1.8);
        assert_eq!(scan_points(1.0, 1.05, 0.5).unwrap(), vec![1.0]);
        assert!(scan_points(1.0, 0.5, 0.1).is_err());
        assert!(scan_points(1.0, 2.0, 0.0).is_err());
    }
}
