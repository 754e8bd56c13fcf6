//! Self-consistent iteration between the Schrodinger and Poisson solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::BinaryTable;
use crate::poisson::{hartree_closed_form, solve_charge, ChargeDensity, ChargeModel, HartreeSolution};
use crate::polarization::{internal_fields, layer_polarizations, FieldProfile, Substrate};
use crate::potential::{
    hedin_lundquist, linearize, offset_component, FieldConstruction, Grid, LayerOffsets, Method,
    PiecewiseLinearPotential, PotentialComponents,
};
use crate::schrodinger::{bound_states, SolverOptions, StationaryState};
use crate::structure::LayerStack;

/// Iteration settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SCFConfig {
    /// Target for the relative density change.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Weight of the new density in linear mixing; 1 is plain iteration.
    pub mixing: f64,
    pub method: Method,
    /// Sub-segments per layer in the linearized potential.
    pub partitions: usize,
    /// Sample intervals per layer for densities and potentials.
    pub grid_per_layer: usize,
    /// Energy scan step of the root search (eV).
    pub scan_step: f64,
}

impl Default for SCFConfig {
    fn default() -> Self {
        SCFConfig {
            tolerance: 1e-6,
            max_iterations: 60,
            mixing: 0.5,
            method: Method::Full,
            partitions: 16,
            grid_per_layer: 64,
            scan_step: 1e-3,
        }
    }
}

impl SCFConfig {
    pub fn include_xc(&self) -> bool {
        self.method == Method::Full
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mixing > 0.0 && self.mixing <= 1.0) {
            return Err(Error::Config(format!("mixing = {} outside (0, 1]", self.mixing)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!("tolerance = {} must be positive", self.tolerance)));
        }
        if self.partitions == 0 || self.grid_per_layer == 0 {
            return Err(Error::Config("partitions and grid_per_layer must be positive".into()));
        }
        if !(self.scan_step > 0.0) {
            return Err(Error::Config(format!("scan_step = {} must be positive", self.scan_step)));
        }
        Ok(())
    }
}

/// Everything about the structure that stays fixed during the iteration.
#[derive(Debug, Clone)]
pub struct Setup {
    pub stack: LayerStack,
    pub table: BinaryTable,
    /// K
    pub temperature: f64,
    pub substrate: Substrate,
    pub construction: FieldConstruction,
    /// Replaces the computed layer polarizations (C/m^2) when given.
    pub polarization_overrides: Option<Vec<f64>>,
}

impl Setup {
    pub fn new(stack: LayerStack, table: BinaryTable, temperature: f64) -> Self {
        Setup {
            stack,
            table,
            temperature,
            substrate: Substrate::default(),
            construction: FieldConstruction::default(),
            polarization_overrides: None,
        }
    }

    pub fn fields(&self) -> Result<FieldProfile> {
        let p = match &self.polarization_overrides {
            Some(p) => p.clone(),
            None => layer_polarizations(&self.stack, &self.table, self.substrate)?,
        };
        internal_fields(&self.stack, &p)
    }

    pub fn offsets(&self) -> Result<LayerOffsets> {
        offset_component(&self.stack, &self.table, self.temperature)
    }
}

/// Input of an iteration: reduced density `n/m` and Hartree potential on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Seed {
    pub reduced_density: Vec<f64>,
    pub v_h: Vec<f64>,
}

/// What an observer sees after every solve.
pub struct Iteration<'a> {
    /// 0 for the field-only start.
    pub index: usize,
    pub potential: &'a PiecewiseLinearPotential,
    pub states: &'a [StationaryState],
    pub charge: &'a ChargeDensity,
    pub hartree: &'a HartreeSolution,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SCFResult {
    pub states: Vec<StationaryState>,
    pub potential: PotentialComponents,
    pub linearized: PiecewiseLinearPotential,
    pub fields: FieldProfile,
    pub fermi_level: Option<f64>,
    pub delta_history: Vec<f64>,
    pub converged: bool,
    pub iterations_used: usize,
    pub charge: ChargeDensity,
    /// Density that produced the final potential; reusable as a seed.
    pub final_input: Seed,
}

/// Relative change `max |n_curr - n_prev| / n_prev` over points where
/// `n_prev` is at least `1e-12` of its maximum; zero if nothing qualifies.
pub fn convergence_delta(n_prev: &[f64], n_curr: &[f64]) -> f64 {
    let peak = n_prev.iter().fold(0.0f64, |m, x| m.max(*x));
    if !(peak > 0.0) {
        return 0.0;
    }
    n_prev
        .iter()
        .zip(n_curr)
        .filter(|(p, _)| **p >= 1e-12 * peak)
        .map(|(p, c)| (c - p).abs() / p)
        .fold(0.0, f64::max)
}

struct Solved {
    lin: PiecewiseLinearPotential,
    states: Vec<StationaryState>,
    charge: ChargeDensity,
    hartree: HartreeSolution,
    reduced: Vec<f64>,
    v_h: Vec<f64>,
}

fn solve_on(
    setup: &Setup,
    components: &PotentialComponents,
    charge_model: &ChargeModel,
    donors: &[f64],
    fields: &FieldProfile,
    config: &SCFConfig,
) -> Result<Solved> {
    let lin = linearize(components, &setup.stack, config.partitions)?;
    let opts = SolverOptions { scan_step: config.scan_step, ..Default::default() };
    let states = bound_states(&lin, &opts)?;
    let charge = solve_charge(
        &lin,
        &states,
        donors,
        charge_model,
        setup.temperature,
        &fields.sheet_charges,
        setup.stack.boundaries(),
    )?;
    let hartree = hartree_closed_form(&lin, &charge)?;
    let z = &components.grid.z;
    let reduced = z.iter().map(|&x| charge.reduced_electrons(x)).collect();
    let v_h = z.iter().map(|&x| hartree.value(&charge, x)).collect();
    Ok(Solved { lin, states, charge, hartree, reduced, v_h })
}

fn components_from(
    setup: &Setup,
    offsets: &LayerOffsets,
    fields: &FieldProfile,
    grid: &Grid,
    seed: &Seed,
    method: Method,
) -> PotentialComponents {
    let stack = &setup.stack;
    let mats = stack.materials();
    let xc = |u: f64, p: usize| {
        if method == Method::Full {
            let m = &mats[p];
            hedin_lundquist(m.effective_mass * u, m.dielectric, m.effective_mass)
        } else {
            0.0
        }
    };
    let v_hl: Vec<f64> = (0..grid.len()).map(|i| xc(seed.reduced_density[i], grid.layer[i])).collect();
    let v_h = if method == Method::FieldOnly { vec![0.0; grid.len()] } else { seed.v_h.clone() };
    PotentialComponents::assemble(
        stack,
        offsets,
        fields,
        setup.construction,
        grid.clone(),
        v_h,
        v_hl,
        |i, lp| xc(seed.reduced_density[i], lp),
        method,
    )
}

/// Runs the iteration from the field-only potential.
pub fn run_scf(setup: &Setup, charge_model: &ChargeModel, config: &SCFConfig) -> Result<SCFResult> {
    run_scf_observed(setup, charge_model, config, None, &mut |_| {})
}

/// Runs the iteration, optionally from `seed`, reporting every solve to `observer`.
pub fn run_scf_observed(
    setup: &Setup,
    charge_model: &ChargeModel,
    config: &SCFConfig,
    seed: Option<&Seed>,
    observer: &mut dyn FnMut(&Iteration),
) -> Result<SCFResult> {
    config.validate()?;
    charge_model.validate()?;
    let fields = setup.fields()?;
    let offsets = setup.offsets()?;
    let grid = Grid::new(&setup.stack, config.grid_per_layer);
    let donors = charge_model.layer_donors(&setup.stack);
    let zero = Seed { reduced_density: vec![0.0; grid.len()], v_h: vec![0.0; grid.len()] };

    let (mut input, start) = match seed {
        Some(s) => (s.clone(), None),
        None => {
            let comps = components_from(setup, &offsets, &fields, &grid, &zero, Method::FieldOnly);
            let solved = solve_on(setup, &comps, charge_model, &donors, &fields, config)?;
            observer(&Iteration {
                index: 0,
                potential: &solved.lin,
                states: &solved.states,
                charge: &solved.charge,
                hartree: &solved.hartree,
                delta: None,
            });
            let next = Seed { reduced_density: solved.reduced.clone(), v_h: solved.v_h.clone() };
            (next, Some((comps, solved)))
        }
    };

    if config.method == Method::FieldOnly {
        let (comps, solved) = match start {
            Some(s) => s,
            None => {
                let comps = components_from(setup, &offsets, &fields, &grid, &zero, Method::FieldOnly);
                let solved = solve_on(setup, &comps, charge_model, &donors, &fields, config)?;
                (comps, solved)
            }
        };
        return Ok(SCFResult {
            states: solved.states,
            potential: comps,
            linearized: solved.lin,
            fields,
            fermi_level: solved.charge.fermi_level,
            delta_history: Vec::new(),
            converged: true,
            iterations_used: 1,
            charge: solved.charge,
            final_input: zero,
        });
    }

    let mut history = Vec::new();
    let mut last = None;
    for it in 1..=config.max_iterations {
        let comps = components_from(setup, &offsets, &fields, &grid, &input, config.method);
        let solved = solve_on(setup, &comps, charge_model, &donors, &fields, config)?;
        let delta = convergence_delta(&input.reduced_density, &solved.reduced);
        history.push(delta);
        observer(&Iteration {
            index: it,
            potential: &solved.lin,
            states: &solved.states,
            charge: &solved.charge,
            hartree: &solved.hartree,
            delta: Some(delta),
        });
        let used = input.clone();
        let w = config.mixing;
        for (a, b) in input.reduced_density.iter_mut().zip(&solved.reduced) {
            *a = (1.0 - w) * *a + w * b;
        }
        for (a, b) in input.v_h.iter_mut().zip(&solved.v_h) {
            *a = (1.0 - w) * *a + w * b;
        }
        let done = delta <= config.tolerance;
        last = Some((comps, solved, used));
        if done {
            break;
        }
    }
    let (comps, solved, used) = last.ok_or_else(|| Error::Config("max_iterations must be at least 1".into()))?;
    let converged = history.last().is_some_and(|d| *d <= config.tolerance);
    Ok(SCFResult {
        states: solved.states,
        potential: comps,
        linearized: solved.lin,
        fields,
        fermi_level: solved.charge.fermi_level,
        iterations_used: history.len(),
        delta_history: history,
        converged,
        charge: solved.charge,
        final_input: used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_examples() {
        let a = vec![1.0, 2.0, 3.0];
        assert_eq!(convergence_delta(&a, &a), 0.0);
        let b: Vec<f64> = a.iter().map(|x| 1.5 * x).collect();
        assert!((convergence_delta(&a, &b) - 0.5).abs() < 1e-15);
        let tiny = vec![1.0, 1e-14, 0.0];
        let changed = vec![1.0, 5e-14, 3.0];
        assert_eq!(convergence_delta(&tiny, &changed), 0.0);
        assert_eq!(convergence_delta(&[0.0, 0.0], &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn config_validation() {
        let mut c = SCFConfig::default();
        assert!(c.validate().is_ok());
        c.mixing = 0.0;
        assert!(c.validate().is_err());
        c.mixing = 1.5;
        assert!(c.validate().is_err());
        c = SCFConfig { tolerance: -1.0, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
