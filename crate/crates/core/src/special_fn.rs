//! Real-argument Airy functions Ai, Bi and their derivatives.
//!
//! Inside `[-10, 10]` values come from a tabulated set of nodes (spacing
//! 1/8) and a short Taylor expansion of the Airy equation `y'' = x y`
//! around the nearest node. The node table is built once:
//!
//! * Bi is stepped forward from the Maclaurin values at the origin (the
//!   dominant direction for Bi on the positive axis).
//! * Ai on the positive axis is stepped backward from the asymptotic
//!   expansion at `x = 10`, where Ai is dominant.
//! * Both functions are stepped from the origin onto the negative axis,
//!   where the solutions oscillate and neither dominates.
//!
//! Outside `[-10, 10]` the classical asymptotic expansions are summed up
//! to their smallest term, which is below `1e-18` relative at the seam.
//!
//! The scaled representation splits off `exp(-xi)` from Ai and `exp(+xi)`
//! from Bi for `x > 0`, `xi = (2/3) x^{3/2}`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Ai(0)
const AI0: f64 = 0.355_028_053_887_817_24;
/// -Ai'(0)
const AIP0: f64 = 0.258_819_403_792_806_8;
const SQRT3: f64 = 1.732_050_807_568_877_2;

const TABLE_MIN: f64 = -10.0;
const TABLE_MAX: f64 = 10.0;
const TABLE_STEP: f64 = 0.125;
const TABLE_LEN: usize = 161;

/// Values of Ai, Ai', Bi, Bi' at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryQuad {
    pub ai: f64,
    pub aip: f64,
    pub bi: f64,
    pub bip: f64,
}

impl AiryQuad {
    /// `Ai Bi' - Ai' Bi`, equal to `1/pi` for exact values (scaled or not).
    pub fn wronskian(&self) -> f64 {
        self.ai * self.bip - self.aip * self.bi
    }
}

/// Scaled Airy values: `Ai = ai * exp(-exponent)`, `Bi = bi * exp(+exponent)`
/// (and likewise for the derivatives). `exponent` is zero for `x <= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledAiry {
    pub values: AiryQuad,
    pub exponent: f64,
}

#[derive(Clone, Copy)]
struct Node {
    ai: f64,
    aip: f64,
    bi: f64,
    bip: f64,
}

fn table() -> &'static [Node; TABLE_LEN] {
    static TABLE: OnceLock<[Node; TABLE_LEN]> = OnceLock::new();
    TABLE.get_or_init(build_table)
}

fn node_x(k: usize) -> f64 {
    TABLE_MIN + k as f64 * TABLE_STEP
}

/// Taylor step of `y'' = x y` from `x0` by `h`. Returns `(y, y')` at `x0 + h`.
fn taylor_step(x0: f64, y: f64, yp: f64, h: f64) -> (f64, f64) {
    // a_{k+2} (k+2)(k+1) = x0 a_k + a_{k-1}
    let mut a_km1 = 0.0;
    let mut a_k = y;
    let mut a_kp1 = yp;
    let mut hk = 1.0;
    let mut val = y + yp * h;
    let mut der = yp;
    let scale = y.abs() + yp.abs() * h.abs();
    let mut small = 0;
    for k in 0..80usize {
        let a_kp2 = (x0 * a_k + a_km1) / ((k + 2) as f64 * (k + 1) as f64);
        // term for power k+2
        let hk2 = hk * h * h;
        let tv = a_kp2 * hk2;
        let td = (k + 2) as f64 * a_kp2 * hk * h;
        val += tv;
        der += td;
        if tv.abs() <= 1e-18 * scale && td.abs() * h.abs() <= 1e-18 * scale {
            small += 1;
            if small >= 3 {
                break;
            }
        } else {
            small = 0;
        }
        a_km1 = a_k;
        a_k = a_kp1;
        a_kp1 = a_kp2;
        hk *= h;
    }
    (val, der)
}

fn build_table() -> [Node; TABLE_LEN] {
    let mut nodes = [Node {
        ai: 0.0,
        aip: 0.0,
        bi: 0.0,
        bip: 0.0,
    }; TABLE_LEN];
    let origin = ((0.0 - TABLE_MIN) / TABLE_STEP).round() as usize;

    // Bi: origin -> +10 and origin -> -10.
    let (mut b, mut bp) = (SQRT3 * AI0, SQRT3 * AIP0);
    nodes[origin].bi = b;
    nodes[origin].bip = bp;
    for k in origin + 1..TABLE_LEN {
        (b, bp) = taylor_step(node_x(k - 1), b, bp, TABLE_STEP);
        nodes[k].bi = b;
        nodes[k].bip = bp;
    }
    let (mut b, mut bp) = (SQRT3 * AI0, SQRT3 * AIP0);
    for k in (0..origin).rev() {
        (b, bp) = taylor_step(node_x(k + 1), b, bp, -TABLE_STEP);
        nodes[k].bi = b;
        nodes[k].bip = bp;
    }

    // Ai: +10 -> origin from the asymptotic values, origin -> -10 from Maclaurin.
    let s = asymptotic_positive(TABLE_MAX);
    let e = (-s.exponent).exp();
    let (mut a, mut ap) = (s.values.ai * e, s.values.aip * e);
    nodes[TABLE_LEN - 1].ai = a;
    nodes[TABLE_LEN - 1].aip = ap;
    for k in (origin..TABLE_LEN - 1).rev() {
        (a, ap) = taylor_step(node_x(k + 1), a, ap, -TABLE_STEP);
        nodes[k].ai = a;
        nodes[k].aip = ap;
    }
    let (mut a, mut ap) = (AI0, -AIP0);
    nodes[origin].ai = a;
    nodes[origin].aip = ap;
    for k in (0..origin).rev() {
        (a, ap) = taylor_step(node_x(k + 1), a, ap, -TABLE_STEP);
        nodes[k].ai = a;
        nodes[k].aip = ap;
    }
    nodes
}

/// Coefficients u_k of the Airy asymptotic series, with v_k = -(6k+1)/(6k-1) u_k.
fn series_terms(xi: f64, mut f: impl FnMut(usize, f64, f64) -> bool) {
    let mut u = 1.0;
    let mut pow = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..60usize {
        if k > 0 {
            let kf = k as f64;
            u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
                / ((2.0 * kf - 1.0) * 216.0 * kf);
            pow *= xi;
        }
        let v = if k == 0 {
            1.0
        } else {
            -(6.0 * k as f64 + 1.0) / (6.0 * k as f64 - 1.0) * u
        };
        let term = u / pow;
        // stop at the smallest term of the divergent series
        if term.abs() > last || term.abs() < 1e-19 {
            break;
        }
        last = term.abs();
        if !f(k, term, v / pow) {
            break;
        }
    }
}

fn asymptotic_positive(x: f64) -> ScaledAiry {
    let xi = 2.0 / 3.0 * x * x.sqrt();
    let (mut su_alt, mut su, mut sv_alt, mut sv) = (0.0, 0.0, 0.0, 0.0);
    series_terms(xi, |k, tu, tv| {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        su_alt += sign * tu;
        su += tu;
        sv_alt += sign * tv;
        sv += tv;
        true
    });
    let q = x.powf(0.25);
    let sp = PI.sqrt();
    ScaledAiry {
        values: AiryQuad {
            ai: su_alt / (2.0 * sp * q),
            aip: -q * sv_alt / (2.0 * sp),
            bi: su / (sp * q),
            bip: q * sv / sp,
        },
        exponent: xi,
    }
}

fn asymptotic_negative(x: f64) -> AiryQuad {
    let t = -x;
    let xi = 2.0 / 3.0 * t * t.sqrt();
    // even/odd parts with alternating signs
    let (mut ue, mut uo, mut ve, mut vo) = (0.0, 0.0, 0.0, 0.0);
    series_terms(xi, |k, tu, tv| {
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            ue += sign * tu;
            ve += sign * tv;
        } else {
            uo += sign * tu;
            vo += sign * tv;
        }
        true
    });
    let (s, c) = (xi - PI / 4.0).sin_cos();
    let q = t.powf(0.25);
    let sp = PI.sqrt();
    AiryQuad {
        ai: (c * ue + s * uo) / (sp * q),
        bi: (-s * ue + c * uo) / (sp * q),
        aip: q * (s * ve - c * vo) / sp,
        bip: q * (c * ve + s * vo) / sp,
    }
}

fn from_table(x: f64) -> AiryQuad {
    let k = (((x - TABLE_MIN) / TABLE_STEP).round() as usize).min(TABLE_LEN - 1);
    let n = &table()[k];
    let x0 = node_x(k);
    let h = x - x0;
    let (ai, aip) = taylor_step(x0, n.ai, n.aip, h);
    let (bi, bip) = taylor_step(x0, n.bi, n.bip, h);
    AiryQuad { ai, aip, bi, bip }
}

/// Scaled Airy values; finite for every finite argument.
pub fn airy_scaled(x: f64) -> ScaledAiry {
    if x > TABLE_MAX {
        asymptotic_positive(x)
    } else if x < TABLE_MIN {
        ScaledAiry {
            values: asymptotic_negative(x),
            exponent: 0.0,
        }
    } else if x > 0.0 {
        let q = from_table(x);
        let xi = 2.0 / 3.0 * x * x.sqrt();
        let (up, down) = (xi.exp(), (-xi).exp());
        ScaledAiry {
            values: AiryQuad {
                ai: q.ai * up,
                aip: q.aip * up,
                bi: q.bi * down,
                bip: q.bip * down,
            },
            exponent: xi,
        }
    } else {
        ScaledAiry {
            values: from_table(x),
            exponent: 0.0,
        }
    }
}

/// Unscaled Ai, Ai', Bi, Bi'. Fails with [`Error::AiryOverflow`] when Bi
/// is not representable; Ai underflows silently to zero.
pub fn airy_quad(x: f64) -> Result<AiryQuad> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("non-finite Airy argument {x}")));
    }
    if (TABLE_MIN..=TABLE_MAX).contains(&x) {
        return Ok(from_table(x));
    }
    let s = airy_scaled(x);
    if s.exponent == 0.0 {
        return Ok(s.values);
    }
    let (up, down) = (s.exponent.exp(), (-s.exponent).exp());
    let q = AiryQuad {
        ai: s.values.ai * down,
        aip: s.values.aip * down,
        bi: s.values.bi * up,
        bip: s.values.bip * up,
    };
    if !q.bi.is_finite() || !q.bip.is_finite() {
        return Err(Error::AiryOverflow(x));
    }
    Ok(q)
}
