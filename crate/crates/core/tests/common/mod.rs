#![allow(dead_code)]

use nitride_rts::poisson::{fd_poisson_oracle, hartree_closed_form, solve_charge, ChargeDensity, ChargeModel};
use nitride_rts::potential::{Cladding, LinearSegment, PiecewiseLinearPotential};
use nitride_rts::schrodinger::{bound_states, fd_oracle, SolverOptions, StationaryState};
use nitride_rts::units::PER_CM3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random stack of 2 to 5 layers, each split into 1 to 4 linear pieces,
/// alternating wells and barriers, all below a cladding at 1.0-1.3 eV.
pub fn random_potential(seed: u64) -> PiecewiseLinearPotential {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let level = rng.gen_range(1.0..1.3);
    let layers = rng.gen_range(2..=5);
    let mut segs = Vec::new();
    let mut z = 0.0;
    for p in 0..layers {
        let well = p % 2 == 0;
        let mass = rng.gen_range(0.15..0.35);
        let eps = rng.gen_range(8.0..11.0);
        let pieces = rng.gen_range(1..=4);
        let (lo, hi) = if well { (0.0, 0.35) } else { (0.45, level - 0.1) };
        let mut v = rng.gen_range(lo..hi);
        for _ in 0..pieces {
            let w = rng.gen_range(0.15..0.6);
            let v1 = rng.gen_range(lo..hi);
            segs.push(LinearSegment { z0: z, z1: z + w, v0: v, v1, mass, eps, layer: p });
            z += w;
            v = v1;
        }
    }
    let c = Cladding { level, mass: 0.3 };
    PiecewiseLinearPotential::new(segs, c, c).unwrap()
}

/// Single flat well of `width` nm and `depth` eV between flat barriers of 1 nm.
pub fn square_well(depth: f64, width: f64, mass: f64) -> PiecewiseLinearPotential {
    let seg = |z0: f64, z1: f64, v: f64, layer| LinearSegment { z0, z1, v0: v, v1: v, mass, eps: 10.0, layer };
    let segs = vec![seg(0.0, 1.0, depth, 0), seg(1.0, 1.0 + width, 0.0, 1), seg(1.0 + width, 2.0 + width, depth, 2)];
    let c = Cladding { level: depth, mass };
    PiecewiseLinearPotential::new(segs, c, c).unwrap()
}

/// Largest distance (eV) between transfer-matrix and finite-difference
/// eigenvalues, over states bound by more than `margin` eV. Fails if either
/// set has a state the other lacks. The oracle gets 20 nm of cladding on
/// each side: states just below the barrier decay over several nm and a
/// closer hard wall pushes them up by up to a meV.
pub fn eigen_mismatch(pot: &PiecewiseLinearPotential, margin: f64) -> Result<f64, String> {
    let states = bound_states(pot, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let exact: Vec<f64> = states.iter().map(|s| s.energy).collect();
    let fd = fd_oracle(pot, 0.005, 20.0);
    let cut = pot.barrier() - margin;
    let nearest = |x: f64, set: &[f64]| set.iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min);
    let mut worst: f64 = 0.0;
    for &e in exact.iter().filter(|&&e| e < cut) {
        worst = worst.max(nearest(e, &fd));
    }
    for &e in fd.iter().filter(|&&e| e < cut) {
        worst = worst.max(nearest(e, &exact));
    }
    if exact.iter().filter(|&&e| e < cut).count() == 0 {
        return Err("no deeply bound state".into());
    }
    Ok(worst)
}

/// Donors in `layer` at `nd` cm^-3, neutral Fermi level, T = 300 K.
pub fn doped_charge(pot: &PiecewiseLinearPotential, states: &[StationaryState], nd: f64, layer: usize) -> ChargeDensity {
    let layers = pot.segments.last().unwrap().layer + 1;
    let mut donors = vec![0.0; layers];
    donors[layer] = nd * PER_CM3;
    let model = ChargeModel { donor_density_cm3: nd, ..Default::default() };
    solve_charge(pot, states, &donors, &model, 300.0, &[], &[]).unwrap()
}

/// `max |V_closed - V_fd| / max |V_fd|` on the oracle grid.
pub fn hartree_mismatch(pot: &PiecewiseLinearPotential, charge: &ChargeDensity) -> f64 {
    let h = hartree_closed_form(pot, charge).unwrap();
    let eps = |z: f64| {
        let i = pot.segment_index(z).unwrap_or(pot.segments.len() - 1);
        pot.segments[i].eps
    };
    let (zs, v) = fd_poisson_oracle(&|z| charge.rho(z), &eps, &charge.sheets, pot.start(), pot.end(), 0.002);
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let diff = zs.iter().zip(&v).map(|(z, vf)| (h.value(charge, *z) - vf).abs()).fold(0.0, f64::max);
    if vmax == 0.0 {
        diff
    } else {
        diff / vmax
    }
}
