//! End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero
//! exit status if any criterion fails.

mod common;

use std::time::Instant;

use nitride_rts::materials::BinaryTable;
use nitride_rts::observables::{
    design_criteria, detection_energy, geometry_scan, OscillatorForm, ScanSettings, TransitionTable,
};
use nitride_rts::poisson::{hartree_closed_form, ChargeModel};
use nitride_rts::polarization::{internal_fields, layer_polarizations, Substrate};
use nitride_rts::potential::{linearize, Method};
use nitride_rts::scf::{run_scf, run_scf_observed, SCFConfig, SCFResult, Setup};
use nitride_rts::schrodinger::{bound_states, SolverOptions};
use nitride_rts::special_fn::airy_scaled;
use nitride_rts::structure::{cascade_stack, DESIGN_D};

/// GaN-layer polarization (C/m^2) chosen once so that the full method puts
/// the 1 -> 3 transition at 782.5 meV; every other layer keeps its computed value.
const TUNED_GAN_POLARIZATION: f64 = 0.0558;

type Outcome = Result<(bool, String), String>;

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn mev(x: f64) -> f64 {
    x * 1e3
}

fn cascade_setup() -> Setup {
    let t = BinaryTable::default();
    Setup::new(cascade_stack(DESIGN_D, &t).unwrap(), t, 300.0)
}

struct Baseline {
    result: SCFResult,
    table: TransitionTable,
    seconds: f64,
    hartree_worst: f64,
}

fn baseline() -> Result<Baseline, String> {
    let setup = cascade_setup();
    let start = Instant::now();
    let result = run_scf(&setup, &ChargeModel::default(), &SCFConfig::default()).map_err(|e| e.to_string())?;
    let seconds = start.elapsed().as_secs_f64();
    // the same run again, checking every iteration's Hartree potential
    let mut hartree_worst: f64 = 0.0;
    run_scf_observed(&setup, &ChargeModel::default(), &SCFConfig::default(), None, &mut |it| {
        hartree_worst = hartree_worst.max(common::hartree_mismatch(it.potential, it.charge));
    })
    .map_err(|e| e.to_string())?;
    let table = TransitionTable::new(&result.states, OscillatorForm::LayerResolved);
    Ok(Baseline { result, table, seconds, hartree_worst })
}

fn criterion_1(b: &Baseline) -> Outcome {
    let e = &b.table.energies;
    if e.len() < 3 {
        return Ok((false, format!("only {} bound states", e.len())));
    }
    let w = detection_energy(&b.table).map_err(|e| e.to_string())?;
    let ok_e1 = within(mev(e[0]), 43.9, 15.0);
    let ok_e3 = within(mev(e[2]), 826.4, 30.0);
    let ok_w = within(mev(w), 782.5, 0.03 * 782.5);

    let mut setup = cascade_setup();
    let mut p = layer_polarizations(&setup.stack, &setup.table, Substrate::Cladding).map_err(|e| e.to_string())?;
    p[1] = TUNED_GAN_POLARIZATION;
    setup.polarization_overrides = Some(p);
    let tuned = run_scf(&setup, &ChargeModel::default(), &SCFConfig::default()).map_err(|e| e.to_string())?;
    let tt = TransitionTable::new(&tuned.states, OscillatorForm::LayerResolved);
    let wt = detection_energy(&tt).map_err(|e| e.to_string())?;
    let ok_tuned = within(mev(wt), 782.5, 0.01 * 782.5);
    let ok_time = b.seconds <= 60.0;
    Ok((
        ok_e1 && ok_e3 && ok_w && ok_tuned && ok_time,
        format!(
            "E1 = {:.1} meV [{}], E3 = {:.1} meV [{}], Omega13 = {:.1} meV [{}]; tuned Omega13 = {:.1} meV [{}]; {:.1} s [{}]",
            mev(e[0]),
            tag(ok_e1),
            mev(e[2]),
            tag(ok_e3),
            mev(w),
            tag(ok_w),
            mev(wt),
            tag(ok_tuned),
            b.seconds,
            tag(ok_time)
        ),
    ))
}

fn criterion_2() -> Outcome {
    let cfg = SCFConfig { method: Method::FieldOnly, ..Default::default() };
    let r = run_scf(&cascade_setup(), &ChargeModel::default(), &cfg).map_err(|e| e.to_string())?;
    let t = TransitionTable::new(&r.states, OscillatorForm::LayerResolved);
    let w = detection_energy(&t).map_err(|e| e.to_string())?;
    let ok_e1 = within(mev(t.energies[0]), -104.8, 10.0);
    let ok_w = within(mev(w), 907.0, 20.0);
    Ok((
        ok_e1 && ok_w,
        format!("E1 = {:.1} meV [{}], Omega13 = {:.1} meV [{}]", mev(t.energies[0]), tag(ok_e1), mev(w), tag(ok_w)),
    ))
}

fn criterion_3(b: &Baseline) -> Outcome {
    let t = &b.table;
    if t.len() < 5 {
        return Ok((false, format!("only {} bound states", t.len())));
    }
    let f: Vec<f64> = (0..5).map(|k| t.f[0][k].abs()).collect();
    let ok_f13 = within(f[2], 0.782, 0.08);
    let ok_order = f[2] > f[1] && f[1] > f[4] && f[4] > f[3];
    let (_, c326) = design_criteria(t);
    Ok((
        ok_f13 && ok_order && c326,
        format!(
            "f12 = {:.3}, f13 = {:.3} [{}], f14 = {:.3}, f15 = {:.3}; ordering [{}]; f13 above the sum [{}]",
            f[1],
            f[2],
            tag(ok_f13),
            f[3],
            f[4],
            tag(ok_order),
            tag(c326)
        ),
    ))
}

fn criterion_4() -> Outcome {
    let cfg = SCFConfig { mixing: 1.0, tolerance: f64::MIN_POSITIVE, max_iterations: 30, ..Default::default() };
    let r = run_scf(&cascade_setup(), &ChargeModel::default(), &cfg).map_err(|e| e.to_string())?;
    let mut d = r.delta_history.clone();
    // an exact fixed point repeats itself under plain iteration
    if d.last() == Some(&0.0) {
        d.resize(30, 0.0);
    }
    let reached = d.iter().position(|&x| x <= 1e-6).map(|i| i + 1);
    let ok_reach = reached.is_some_and(|n| n <= 30);
    let ok_tail = d.len() >= 25 && d[24] <= d[9];
    Ok((
        ok_reach && ok_tail,
        format!(
            "delta <= 1e-6 at iteration {} [{}]; delta(10) = {:.3e}, delta(25) = {:.3e} [{}]",
            reached.map_or("never".to_string(), |n| n.to_string()),
            tag(ok_reach),
            d.get(9).copied().unwrap_or(f64::NAN),
            d.get(24).copied().unwrap_or(f64::NAN),
            tag(ok_tail)
        ),
    ))
}

fn criterion_5() -> Outcome {
    let settings = ScanSettings::new(BinaryTable::default(), 300.0, ChargeModel::default(), SCFConfig::default());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let rows = pool.install(|| geometry_scan(0.6, 1.8, 0.01, &settings)).map_err(|e| e.to_string())?;
    let seconds = start.elapsed().as_secs_f64();
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    let mut runs: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<f64> = None;
    for (i, r) in rows.iter().enumerate() {
        let both = r.cond_325 && r.cond_326;
        match (both, open) {
            (true, None) => open = Some(r.d),
            (false, Some(a)) => {
                runs.push((a, rows[i - 1].d));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(a) = open {
        runs.push((a, rows.last().unwrap().d));
    }
    let ok_interval = runs.iter().any(|&(a, b)| within(a, 1.38, 0.1) && within(b, 1.69, 0.1));
    let ok_fail = rows.iter().any(|r| (0.65..=0.91).contains(&r.d) && !r.cond_326);
    let ok_time = seconds <= 1800.0;
    let list: Vec<String> = runs.iter().map(|(a, b)| format!("[{a:.2}, {b:.2}]")).collect();
    Ok((
        ok_interval && ok_fail && ok_time && failed == 0,
        format!(
            "{} rows, {} failed; both conditions on {} [{}]; f13 below the sum inside [0.65, 0.91] [{}]; {:.0} s [{}]",
            rows.len(),
            failed,
            if list.is_empty() { "no interval".to_string() } else { list.join(" ") },
            tag(ok_interval),
            tag(ok_fail),
            seconds,
            tag(ok_time)
        ),
    ))
}

fn criterion_6(b: &Baseline) -> Outcome {
    let square = common::square_well(0.8, 2.0, 0.2);
    let sq = common::eigen_mismatch(&square, 0.005)?;
    let sq_states = bound_states(&square, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let sq_h = common::hartree_mismatch(&square, &common::doped_charge(&square, &sq_states, 1e19, 1));

    let cascade = common::eigen_mismatch(&b.result.linearized, 0.005)?;

    let mut rand_e: f64 = 0.0;
    let mut rand_h: f64 = 0.0;
    for seed in 0..20u64 {
        let pot = common::random_potential(seed);
        rand_e = rand_e.max(common::eigen_mismatch(&pot, 0.02)?);
        let states = bound_states(&pot, &SolverOptions::default()).map_err(|e| e.to_string())?;
        rand_h = rand_h.max(common::hartree_mismatch(&pot, &common::doped_charge(&pot, &states, 1e19, 0)));
    }
    let ok_e = sq.max(cascade).max(rand_e) <= 5e-4;
    let ok_h = sq_h.max(b.hartree_worst).max(rand_h) <= 1e-3;
    Ok((
        ok_e && ok_h,
        format!(
            "eigenvalues: square {:.2e} eV, cascade {:.2e} eV, random {:.2e} eV [{}]; Hartree: square {:.1e}, every SCF iteration {:.1e}, random {:.1e} of max|V_H| [{}]",
            sq,
            cascade,
            rand_e,
            tag(ok_e),
            sq_h,
            b.hartree_worst,
            rand_h,
            tag(ok_h)
        ),
    ))
}

fn criterion_7(b: &Baseline) -> Outcome {
    let setup = cascade_setup();
    let p = layer_polarizations(&setup.stack, &setup.table, Substrate::Cladding).map_err(|e| e.to_string())?;
    let f = internal_fields(&setup.stack, &p).map_err(|e| e.to_string())?;
    let scale: f64 = f.fields.iter().zip(&setup.stack.thicknesses()).map(|(a, d)| (a * d).abs()).sum();
    let ok_sum = f.voltage_sum().abs() <= 1e-12 * scale;
    let d = f.displacements();
    let pmax = p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let ok_disp = d.windows(2).all(|w| (w[0] - w[1]).abs() <= 1e-12 * pmax);

    let norm = b.result.states.iter().map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max);
    let ok_norm = norm <= 1e-8;
    let t = &b.table;
    let ok_anti = (0..t.len()).all(|i| t.f[i][i] == 0.0 && (0..t.len()).all(|j| t.f[i][j] == -t.f[j][i]));
    let wr = (0..=1200)
        .map(|k| {
            let x = -60.0 + 0.1 * k as f64;
            (airy_scaled(x).values.wronskian() * std::f64::consts::PI - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let ok_wr = wr <= 1e-10;
    let h = hartree_closed_form(&b.result.linearized, &b.result.charge).map_err(|e| e.to_string())?;
    let vb = h.value(&b.result.charge, b.result.linearized.start()).abs().max(h.end_value(&b.result.charge).abs());
    let ok_vb = vb <= 1e-12;

    let fine = linearize(&b.result.potential, &setup.stack, 32).map_err(|e| e.to_string())?;
    let doubled = bound_states(&fine, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let shift = if doubled.len() == b.result.states.len() {
        doubled.iter().zip(&b.result.states).map(|(a, s)| (a.energy - s.energy).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let ok_n = shift <= 1e-6;
    Ok((
        ok_sum && ok_disp && ok_norm && ok_anti && ok_wr && ok_vb && ok_n,
        format!(
            "sum F d [{}]; displacement [{}]; normalization {:.1e} [{}]; f antisymmetry [{}]; Wronskian {:.1e} [{}]; V_H ends {:.1e} eV [{}]; N 16 -> 32 shift {:.1e} eV [{}]",
            tag(ok_sum),
            tag(ok_disp),
            norm,
            tag(ok_norm),
            tag(ok_anti),
            wr,
            tag(ok_wr),
            vb,
            tag(ok_vb),
            shift,
            tag(ok_n)
        ),
    ))
}

fn criterion_8(b: &Baseline) -> Outcome {
    let n = b.result.states.len();
    Ok((n == 5, format!("{n} bound states below the AlN barrier")))
}

fn tag(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "miss"
    }
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, title: &str, outcome: Outcome| {
        let (ok, detail) = match outcome {
            Ok(x) => x,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!("{} criterion {n} ({title}): {detail}", if ok { "PASS" } else { "FAIL" });
    };
    match baseline() {
        Ok(b) => {
            report(1, "full-method spectrum", criterion_1(&b));
            report(2, "field-only spectrum", criterion_2());
            report(3, "oscillator strengths at d = 1.56 nm", criterion_3(&b));
            report(4, "plain-iteration convergence", criterion_4());
            report(5, "geometry scan", criterion_5());
            report(6, "oracle equivalence", criterion_6(&b));
            report(7, "invariants", criterion_7(&b));
            report(8, "bound-state count", criterion_8(&b));
        }
        Err(e) => {
            for n in 1..=8 {
                report(n, "baseline solve", Err(e.clone()));
            }
        }
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
