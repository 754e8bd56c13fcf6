//! Bound states of a piecewise-linear potential.
//!
//! On a segment with slope `s` the equation `psi'' = (m / c)(V - E) psi`,
//! `c = hbar^2 / 2 m0`, is solved by `Ai(zeta)` and `Bi(zeta)` with
//! `zeta = alpha (z - z0) + zeta0`, `alpha = cbrt(m s / c)`. The sign of
//! `alpha` follows the slope so `zeta` always grows with `V - E` and `Ai`
//! is the solution decaying into a classically forbidden region. Segments
//! with negligible slope use exponentials or trigonometric functions.
//!
//! Basis values are carried in scaled form (`f1 exp(-x)`, `f2 exp(+x)`) so
//! that the growing and decaying halves never overflow.


use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::{LinearSegment, PiecewiseLinearPotential};
use crate::quadrature;
use crate::special_fn::airy_scaled;
use crate::units::HBAR2_OVER_2M0;

/// Slopes below this (V/nm) are treated as constant potential.
pub const FLAT_FIELD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Airy,
    /// `exp(-kappa x)`, `exp(kappa x)` with `kappa^2 = q > 0`.
    Evanescent,
    /// `cos(k x)`, `sin(k x)` with `k^2 = -q > 0`.
    Oscillating,
    /// `1`, `x`.
    Free,
}

/// Scaled basis pair at one point, derivatives taken with respect to z.
/// The unscaled functions are `f1 exp(-exponent)` and `f2 exp(exponent)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisValues {
    pub f1: f64,
    pub f1p: f64,
    pub f2: f64,
    pub f2p: f64,
    pub exponent: f64,
}

impl BasisValues {
    pub fn wronskian(&self) -> f64 {
        self.f1 * self.f2p - self.f1p * self.f2
    }
}

/// The two independent solutions on one segment at a fixed energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentBasis {
    pub kind: BasisKind,
    pub z0: f64,
    pub z1: f64,
    pub mass: f64,
    /// Airy scaling factor (1/nm), zero for the other kinds.
    pub alpha: f64,
    /// `zeta` at `z0` for Airy segments.
    pub zeta0: f64,
    /// `(m / c)(V - E)` for constant segments (1/nm^2).
    pub q: f64,
    pub layer: usize,
}

impl SegmentBasis {
    pub fn new(seg: &LinearSegment, energy: f64) -> Self {
        let k = seg.mass / HBAR2_OVER_2M0;
        let s = seg.field();
        let mut b = SegmentBasis {
            kind: BasisKind::Free,
            z0: seg.z0,
            z1: seg.z1,
            mass: seg.mass,
            alpha: 0.0,
            zeta0: 0.0,
            q: 0.0,
            layer: seg.layer,
        };
        if s.abs() >= FLAT_FIELD {
            let alpha = (k * s).cbrt();
            b.kind = BasisKind::Airy;
            b.alpha = alpha;
            b.zeta0 = k * (seg.v0 - energy) / (alpha * alpha);
        } else {
            let mid = 0.5 * (seg.v0 + seg.v1);
            let q = k * (mid - energy);
            b.q = q;
            let l = seg.width();
            b.kind = if q.abs() * l * l < 1e-14 {
                BasisKind::Free
            } else if q > 0.0 {
                BasisKind::Evanescent
            } else {
                BasisKind::Oscillating
            };
        }
        b
    }

    pub fn zeta(&self, z: f64) -> f64 {
        self.alpha * (z - self.z0) + self.zeta0
    }

    pub fn values(&self, z: f64) -> BasisValues {
        let x = z - self.z0;
        match self.kind {
            BasisKind::Airy => {
                let a = airy_scaled(self.zeta(z));
                let v = a.values;
                BasisValues {
                    f1: v.ai,
                    f1p: self.alpha * v.aip,
                    f2: v.bi,
                    f2p: self.alpha * v.bip,
                    exponent: a.exponent,
                }
            }
            BasisKind::Evanescent => {
                let kappa = self.q.sqrt();
                BasisValues { f1: 1.0, f1p: -kappa, f2: 1.0, f2p: kappa, exponent: kappa * x }
            }
            BasisKind::Oscillating => {
                let k = (-self.q).sqrt();
                let (s, c) = (k * x).sin_cos();
                BasisValues { f1: c, f1p: -k * s, f2: s, f2p: k * c, exponent: 0.0 }
            }
            BasisKind::Free => BasisValues { f1: 1.0, f1p: 0.0, f2: x, f2p: 1.0, exponent: 0.0 },
        }
    }

    /// Coefficients `(a, b)` of `(psi, psi')` at `z`, scaled by the basis
    /// exponent at `z`: `psi = a f1 + b f2` with the scaled values.
    pub fn coefficients(&self, z: f64, psi: f64, dpsi: f64) -> Result<(f64, f64)> {
        let v = self.values(z);
        let w = v.wronskian();
        if w.abs() < 1e-300 || !w.is_finite() {
            return Err(Error::SingularBasis { z, wronskian: w });
        }
        Ok(((v.f2p * psi - v.f2 * dpsi) / w, (v.f1 * dpsi - v.f1p * psi) / w))
    }

    /// Carries `(psi, psi')` from `za` to `zb` inside the segment.
    pub fn propagate(&self, za: f64, zb: f64, psi: f64, dpsi: f64) -> Result<(f64, f64)> {
        let va = self.values(za);
        let (a, b) = self.coefficients(za, psi, dpsi)?;
        let vb = self.values(zb);
        let d = vb.exponent - va.exponent;
        if d.abs() > 700.0 {
            return Err(Error::AiryOverflow(self.zeta(zb)));
        }
        let (down, up) = ((-d).exp(), d.exp());
        Ok((
            a * vb.f1 * down + b * vb.f2 * up,
            a * vb.f1p * down + b * vb.f2p * up,
        ))
    }

    /// Antiderivative of `psi^2` in closed form (only meaningful up to a constant).
    fn first_antiderivative(&self, z: f64, psi: f64, dpsi: f64, c0: f64) -> f64 {
        match self.kind {
            BasisKind::Airy => {
                let a = self.alpha;
                (self.zeta(z) * psi * psi - dpsi * dpsi / (a * a)) / a
            }
            _ => (psi * dpsi - c0 * (z - self.z0)) / (2.0 * self.q),
        }
    }

    /// Second antiderivative of `psi^2`, derivative equal to [`Self::first_antiderivative`].
    fn second_antiderivative(&self, z: f64, psi: f64, dpsi: f64, c0: f64) -> f64 {
        match self.kind {
            BasisKind::Airy => {
                let a = self.alpha;
                let zeta = self.zeta(z);
                let g = (2.0 * zeta * zeta * psi * psi
                    - psi * dpsi / a
                    - 2.0 * zeta * dpsi * dpsi / (a * a))
                    / 3.0;
                g / (a * a)
            }
            _ => {
                let x = z - self.z0;
                (psi * psi - c0 * x * x) / (4.0 * self.q)
            }
        }
    }
}

/// Interface matrix mapping scaled coefficients of `left` to those of
/// `right` at boundary `z`, enforcing continuity of `psi` and `psi'/m`.
/// Both coefficient pairs are scaled by their basis exponents at `z`.
pub fn transfer_step(energy: f64, left: &LinearSegment, right: &LinearSegment, z: f64) -> Result<[[f64; 2]; 2]> {
    let bl = SegmentBasis::new(left, energy);
    let br = SegmentBasis::new(right, energy);
    let l = bl.values(z);
    let r = br.values(z);
    let wr = r.wronskian();
    if wr.abs() < 1e-300 || !wr.is_finite() {
        return Err(Error::SingularBasis { z, wronskian: wr });
    }
    // psi'_right = (m_r / m_l) psi'_left
    let ratio = right.mass / left.mass;
    let phi = [[l.f1, l.f2], [ratio * l.f1p, ratio * l.f2p]];
    let inv = [[r.f2p / wr, -r.f2 / wr], [-r.f1p / wr, r.f1 / wr]];
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = inv[i][0] * phi[0][j] + inv[i][1] * phi[1][j];
        }
    }
    Ok(m)
}

/// Decay constant in a cladding of height `level` (1/nm).
fn decay_constant(mass: f64, level: f64, energy: f64) -> f64 {
    (mass * (level - energy) / HBAR2_OVER_2M0).sqrt()
}

/// One point of the transfer sweep: `psi`, `psi'/m` and the log of the
/// scale factor removed so far.
#[derive(Debug, Clone, Copy)]
struct Knot {
    psi: f64,
    phi: f64,
    log_scale: f64,
}

fn renormalize(psi: f64, phi: f64, log_scale: f64) -> Knot {
    let n = psi.hypot(phi);
    Knot { psi: psi / n, phi: phi / n, log_scale: log_scale + n.ln() }
}

fn sweep_forward(pot: &PiecewiseLinearPotential, bases: &[SegmentBasis], energy: f64) -> Result<Vec<Knot>> {
    let chi = decay_constant(pot.left.mass, pot.left.level, energy);
    let mut knots = Vec::with_capacity(bases.len() + 1);
    let mut k = renormalize(1.0, chi / pot.left.mass, 0.0);
    knots.push(k);
    for b in bases {
        let (psi, dpsi) = b.propagate(b.z0, b.z1, k.psi, k.phi * b.mass)?;
        k = renormalize(psi, dpsi / b.mass, k.log_scale);
        knots.push(k);
    }
    Ok(knots)
}

fn sweep_backward(pot: &PiecewiseLinearPotential, bases: &[SegmentBasis], energy: f64) -> Result<Vec<Knot>> {
    let chi = decay_constant(pot.right.mass, pot.right.level, energy);
    let mut knots = vec![Knot { psi: 0.0, phi: 0.0, log_scale: 0.0 }; bases.len() + 1];
    let mut k = renormalize(1.0, -chi / pot.right.mass, 0.0);
    knots[bases.len()] = k;
    for (i, b) in bases.iter().enumerate().rev() {
        let (psi, dpsi) = b.propagate(b.z1, b.z0, k.psi, k.phi * b.mass)?;
        k = renormalize(psi, dpsi / b.mass, k.log_scale);
        knots[i] = k;
    }
    Ok(knots)
}

fn bases_at(pot: &PiecewiseLinearPotential, energy: f64) -> Vec<SegmentBasis> {
    pot.segments.iter().map(|s| SegmentBasis::new(s, energy)).collect()
}

/// Normalized coefficient of the growing exponential in the right
/// cladding after propagating the decaying left-cladding solution.
/// Bounded by `sqrt(2)`; zeros are bound states.
pub fn dispersion_residual(energy: f64, pot: &PiecewiseLinearPotential) -> Result<f64> {
    if !(energy < pot.barrier()) {
        return Err(Error::Domain(format!(
            "energy {energy} eV not below the cladding barrier {} eV",
            pot.barrier()
        )));
    }
    let bases = bases_at(pot, energy);
    let k = *sweep_forward(pot, &bases, energy)?.last().unwrap();
    let chi = decay_constant(pot.right.mass, pot.right.level, energy);
    let a = k.psi * chi / pot.right.mass;
    Ok((a + k.phi) / a.hypot(k.phi))
}

/// Root search settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Sign-scan step (eV).
    pub scan_step: f64,
    /// Bracket width at which refinement stops (eV).
    pub energy_tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { scan_step: 1e-3, energy_tolerance: 1e-12 }
    }
}

/// A normalized bound state.
#[derive(Debug, Clone, Serialize)]
pub struct StationaryState {
    /// eV
    pub energy: f64,
    pub bases: Vec<SegmentBasis>,
    /// `psi` at every node `z_0 ... z_L`.
    pub psi_nodes: Vec<f64>,
    /// `psi'` at every node, taken on the right side (left side for the last node).
    pub dpsi_nodes: Vec<f64>,
    /// Scaled coefficients of every segment relative to its left end.
    pub coefficients: Vec<(f64, f64)>,
    /// Left cladding: `psi = a0 exp(chi_l (z - z_0))`.
    pub a0: f64,
    pub chi_left: f64,
    /// Right cladding: `psi = b_end exp(-chi_r (z - z_L))`.
    pub b_end: f64,
    pub chi_right: f64,
    /// Probability in each physical layer.
    pub localization: Vec<f64>,
    /// Probability in the left and right claddings.
    pub cladding_probability: (f64, f64),
    /// Interior sign changes of `psi`.
    pub node_count: usize,
}

impl StationaryState {
    fn segment(&self, z: f64) -> Option<usize> {
        let start = self.bases[0].z0;
        let end = self.bases.last().unwrap().z1;
        if z < start || z > end {
            return None;
        }
        let i = self.bases.partition_point(|b| b.z0 <= z);
        Some(i.saturating_sub(1).min(self.bases.len() - 1))
    }

    /// `(psi, psi')` at `z`.
    pub fn eval(&self, z: f64) -> (f64, f64) {
        match self.segment(z) {
            Some(i) => self.eval_in(i, z),
            None if z < self.bases[0].z0 => {
                let e = self.a0 * (self.chi_left * (z - self.bases[0].z0)).exp();
                (e, self.chi_left * e)
            }
            None => {
                let e = self.b_end * (-self.chi_right * (z - self.bases.last().unwrap().z1)).exp();
                (e, -self.chi_right * e)
            }
        }
    }

    pub fn psi(&self, z: f64) -> f64 {
        self.eval(z).0
    }

    /// `int_{z0}^{z} psi^2` and `int_{z0}^{z} (z - t) psi(t)^2 dt` on segment
    /// `i`, `z0` its left end. Closed form where well conditioned.
    pub fn segment_moments(&self, i: usize, z: f64) -> (f64, f64) {
        let b = &self.bases[i];
        let x = z - b.z0;
        if x == 0.0 {
            return (0.0, 0.0);
        }
        let (p0, d0) = (self.psi_nodes[i], self.dpsi_nodes[i]);
        let (p, d) = self.eval_in(i, z);
        if b.kind != BasisKind::Free {
            let c0 = d0 * d0 - b.q * p0 * p0;
            let f0 = b.first_antiderivative(b.z0, p0, d0, c0);
            let f = b.first_antiderivative(z, p, d, c0);
            let h0 = b.second_antiderivative(b.z0, p0, d0, c0);
            let h = b.second_antiderivative(z, p, d, c0);
            let i1 = f - f0;
            let i2 = h - h0 - f0 * x;
            let s1 = f.abs().max(f0.abs());
            let s2 = h.abs().max(h0.abs()).max((f0 * x).abs());
            if i1.is_finite() && i2.is_finite() && s1 <= 1e5 * i1.abs() && s2 <= 1e5 * i2.abs() {
                return (i1, i2);
            }
        }
        let f1 = |t: f64| self.eval_in(i, t).0.powi(2);
        let f2 = |t: f64| (z - t) * self.eval_in(i, t).0.powi(2);
        (quadrature::adaptive(&f1, b.z0, z, 1e-12), quadrature::adaptive(&f2, b.z0, z, 1e-12))
    }

    fn eval_in(&self, i: usize, z: f64) -> (f64, f64) {
        let b = &self.bases[i];
        let v = b.values(z);
        let v0 = b.values(b.z0);
        let d = v.exponent - v0.exponent;
        let (a, c) = self.coefficients[i];
        let (down, up) = ((-d).exp(), d.exp());
        (a * v.f1 * down + c * v.f2 * up, a * v.f1p * down + c * v.f2p * up)
    }

    /// Total probability, claddings included.
    pub fn norm(&self) -> f64 {
        self.localization.iter().sum::<f64>() + self.cladding_probability.0 + self.cladding_probability.1
    }
}

/// Finds every bound state in `[min V + 1 meV, U - 1 meV]`.
pub fn bound_states(pot: &PiecewiseLinearPotential, opts: &SolverOptions) -> Result<Vec<StationaryState>> {
    let lo = pot.min_value() + 1e-3;
    let hi = pot.barrier() - 1e-3;
    if hi <= lo {
        return Ok(Vec::new());
    }
    let mut step = opts.scan_step;
    let mut states = Vec::new();
    for _ in 0..3 {
        let roots = scan_roots(pot, lo, hi, step, opts.energy_tolerance)?;
        states = roots
            .into_iter()
            .map(|e| build_state(pot, e))
            .collect::<Result<Vec<_>>>()?;
        if states.iter().enumerate().all(|(i, s)| s.node_count == i) {
            break;
        }
        step /= 8.0;
    }
    Ok(states)
}

fn scan_roots(pot: &PiecewiseLinearPotential, lo: f64, hi: f64, step: f64, tol: f64) -> Result<Vec<f64>> {
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=n).map(|i| if i == n { hi } else { lo + i as f64 * step }).collect();
    let mut roots = Vec::new();
    let mut prev = dispersion_residual(grid[0], pot)?;
    if prev == 0.0 {
        roots.push(grid[0]);
    }
    for w in grid.windows(2) {
        let r = dispersion_residual(w[1], pot)?;
        if r == 0.0 {
            roots.push(w[1]);
        } else if prev != 0.0 && r.signum() != prev.signum() {
            roots.push(refine(pot, w[0], w[1], prev, r, tol)?);
        }
        prev = r;
    }
    Ok(roots)
}

/// Illinois-modified regula falsi on a sign-changing bracket.
fn refine(pot: &PiecewiseLinearPotential, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, tol: f64) -> Result<f64> {
    let mut side = 0;
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let fc = dispersion_residual(c, pot)?;
        if fc == 0.0 {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Ok(if fa.abs() < fb.abs() { a } else { b })
}

fn build_state(pot: &PiecewiseLinearPotential, energy: f64) -> Result<StationaryState> {
    let bases = bases_at(pot, energy);
    let fwd = sweep_forward(pot, &bases, energy)?;
    let bwd = sweep_backward(pot, &bases, energy)?;
    let total = |k: &Knot| k.psi.abs().ln() + k.log_scale;
    let j = (0..fwd.len())
        .max_by(|&a, &b| total(&fwd[a]).partial_cmp(&total(&fwd[b])).unwrap())
        .unwrap();
    // express both sweeps in the forward scale, then remove the peak
    let shift = fwd[j].log_scale - bwd[j].log_scale;
    let ratio = fwd[j].psi / bwd[j].psi;
    let peak = total(&fwd[j]);
    let mut psi = Vec::with_capacity(fwd.len());
    let mut phi = Vec::with_capacity(fwd.len());
    for i in 0..fwd.len() {
        let (k, f) = if i <= j { (fwd[i], 1.0) } else { (bwd[i], ratio) };
        let log = if i <= j { k.log_scale } else { k.log_scale + shift };
        let s = f * (log - peak).exp();
        psi.push(k.psi * s);
        phi.push(k.phi * s);
    }
    let sign = if psi[0] < 0.0 { -1.0 } else { 1.0 };
    let chi_left = decay_constant(pot.left.mass, pot.left.level, energy);
    let chi_right = decay_constant(pot.right.mass, pot.right.level, energy);
    let n = bases.len();
    let mut state = StationaryState {
        energy,
        psi_nodes: psi.iter().map(|p| p * sign).collect(),
        dpsi_nodes: (0..=n)
            .map(|i| sign * phi[i] * if i < n { bases[i].mass } else { bases[n - 1].mass })
            .collect(),
        coefficients: Vec::with_capacity(n),
        a0: sign * psi[0],
        chi_left,
        b_end: sign * psi[n],
        chi_right,
        localization: Vec::new(),
        cladding_probability: (0.0, 0.0),
        node_count: 0,
        bases,
    };
    for i in 0..n {
        let b = &state.bases[i];
        state.coefficients.push(b.coefficients(b.z0, state.psi_nodes[i], state.dpsi_nodes[i])?);
    }
    let layers = state.bases.iter().map(|b| b.layer).max().unwrap() + 1;
    let mut loc = vec![0.0; layers];
    for i in 0..n {
        loc[state.bases[i].layer] += state.segment_moments(i, state.bases[i].z1).0;
    }
    let clad = (state.a0 * state.a0 / (2.0 * chi_left), state.b_end * state.b_end / (2.0 * chi_right));
    let norm: f64 = loc.iter().sum::<f64>() + clad.0 + clad.1;
    let scale = norm.sqrt().recip();
    for v in state.psi_nodes.iter_mut().chain(state.dpsi_nodes.iter_mut()) {
        *v *= scale;
    }
    for c in state.coefficients.iter_mut() {
        c.0 *= scale;
        c.1 *= scale;
    }
    state.a0 *= scale;
    state.b_end *= scale;
    state.localization = loc.into_iter().map(|p| p / norm).collect();
    state.cladding_probability = (clad.0 / norm, clad.1 / norm);
    state.node_count = count_nodes(&state);
    Ok(state)
}

fn count_nodes(state: &StationaryState) -> usize {
    let mut count = 0;
    let mut prev = state.psi_nodes[0];
    for (i, b) in state.bases.iter().enumerate() {
        for k in 1..=8 {
            let z = if k == 8 { b.z1 } else { b.z0 + (b.z1 - b.z0) * k as f64 / 8.0 };
            let v = if k == 8 { state.psi_nodes[i + 1] } else { state.eval_in(i, z).0 };
            if v != 0.0 {
                if prev != 0.0 && v.signum() != prev.signum() {
                    count += 1;
                }
                prev = v;
            }
        }
    }
    count
}

/// Finite-difference oracle: three-point discretization with masses at
/// cell midpoints, Dirichlet walls `pad` nm into the claddings, grid
/// spacing at most `h`. Returns every eigenvalue below the cladding barrier.
pub fn fd_oracle(pot: &PiecewiseLinearPotential, h: f64, pad: f64) -> Vec<f64> {
    let a = pot.start() - pad;
    let b = pot.end() + pad;
    let cells = ((b - a) / h).ceil() as usize;
    let h = (b - a) / cells as f64;
    let n = cells - 1;
    let z = |i: usize| a + i as f64 * h;
    // exact cell averages of V and 1/m for piecewise-linear data
    let avg = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| {
        let mut cuts = vec![lo];
        for node in pot.nodes() {
            if node > lo && node < hi {
                cuts.push(node);
            }
        }
        cuts.push(hi);
        cuts.windows(2)
            .map(|w| {
                let m = 0.5 * (w[0] + w[1]);
                let d = w[1] - w[0];
                // linear on each piece: midpoint rule is exact
                f(m) * d
            })
            .sum::<f64>()
            / (hi - lo)
    };
    let inv_mass = |t: f64| 1.0 / pot.mass_at(t);
    let vf = |t: f64| pot.value_at(t);
    let w: Vec<f64> = (0..cells).map(|i| avg(&inv_mass, z(i), z(i + 1))).collect();
    let c = HBAR2_OVER_2M0 / (h * h);
    let diag: Vec<f64> = (1..=n)
        .map(|i| c * (w[i - 1] + w[i]) + avg(&vf, z(i) - 0.5 * h, z(i) + 0.5 * h))
        .collect();
    let off: Vec<f64> = (1..n).map(|i| -c * w[i]).collect();
    let count_below = |x: f64| -> usize {
        let mut count = 0;
        let mut d = diag[0] - x;
        if d < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let dd = if d == 0.0 { 1e-300 } else { d };
            d = diag[i] - x - off[i - 1] * off[i - 1] / dd;
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    let top = pot.barrier();
    let bottom = diag.iter().zip(0..).fold(f64::INFINITY, |m, (d, i)| {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        m.min(d - r)
    });
    let found = count_below(top);
    (0..found)
        .map(|k| {
            let (mut lo, mut hi) = (bottom, top);
            while hi - lo > 1e-12 * (1.0 + hi.abs()) {
                let mid = 0.5 * (lo + hi);
                if count_below(mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// Solves the square well of depth `depth` (eV), width `width` (nm) and
/// uniform mass by bisection on the even/odd transcendental equations.
pub fn square_well_levels(depth: f64, width: f64, mass: f64) -> Vec<f64> {
    let k_of = |e: f64| (mass * e / HBAR2_OVER_2M0).sqrt();
    let kap = |e: f64| (mass * (depth - e) / HBAR2_OVER_2M0).sqrt();
    let even = |e: f64| k_of(e) * (k_of(e) * width / 2.0).sin() - kap(e) * (k_of(e) * width / 2.0).cos();
    let odd = |e: f64| k_of(e) * (k_of(e) * width / 2.0).cos() + kap(e) * (k_of(e) * width / 2.0).sin();
    let mut out = Vec::new();
    let n = 200_000;
    for f in [&even as &dyn Fn(f64) -> f64, &odd] {
        let mut prev_e = 1e-9;
        let mut prev = f(prev_e);
        for i in 1..=n {
            let e = depth * i as f64 / n as f64 * (1.0 - 1e-12);
            let v = f(e);
            if v.signum() != prev.signum() {
                // reject the sign flips of tan poles: both forms are continuous, so every flip is a root
                let (mut lo, mut hi, mut flo) = (prev_e, e, prev);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    let fm = f(mid);
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                out.push(0.5 * (lo + hi));
            }
            prev = v;
            prev_e = e;
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}
