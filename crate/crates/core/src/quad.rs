//! Adaptive Gauss–Kronrod (7, 15) quadrature and a bracketing root finder.

#![allow(clippy::excessive_precision)] // nodes and weights as tabulated
use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Settings for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            rel_tol: 1e-12,
            abs_tol: 0.0,
            max_subdivisions: 10_000,
        }
    }
}

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Integrate `f` over each consecutive pair of `breaks`. End points may be
/// infinite; infinite ends are mapped to a finite interval by
/// `t = c ± s/(1-s)`.
pub fn integrate(f: &dyn Fn(f64) -> f64, breaks: &[f64], cfg: QuadConfig) -> Result<f64> {
    let mut heap = BinaryHeap::new();
    #[allow(clippy::type_complexity)]
    let mut pieces: Vec<(f64, f64, Box<dyn Fn(f64) -> f64 + '_>)> = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(a < b) {
            continue;
        }
        match (a.is_finite(), b.is_finite()) {
            (true, true) => pieces.push((a, b, Box::new(f))),
            (true, false) => pieces.push((
                0.0,
                1.0,
                Box::new(move |s: f64| {
                    if s >= 1.0 {
                        return 0.0;
                    }
                    let d = 1.0 - s;
                    f(a + s / d) / (d * d)
                }),
            )),
            (false, true) => pieces.push((
                0.0,
                1.0,
                Box::new(move |s: f64| {
                    if s >= 1.0 {
                        return 0.0;
                    }
                    let d = 1.0 - s;
                    f(b - s / d) / (d * d)
                }),
            )),
            (false, false) => {
                return integrate(f, &[a, 0.0, b], cfg);
            }
        }
    }
    let mut total = 0.0;
    let mut total_err = 0.0;
    for (idx, (a, b, g)) in pieces.iter().enumerate() {
        let (v, e) = gk15(g.as_ref(), *a, *b);
        total += v;
        total_err += e;
        heap.push((Piece { a: *a, b: *b, value: v, err: e }, idx));
    }
    let mut count = heap.len();
    while total_err > cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
        if count >= cfg.max_subdivisions {
            return Err(Error::Numerical {
                what: "adaptive quadrature",
                achieved: total_err / total.abs().max(f64::MIN_POSITIVE),
            });
        }
        let Some((p, idx)) = heap.pop() else { break };
        let g = pieces[idx].2.as_ref();
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // interval can no longer be split; accept what we have
            total_err -= p.err;
            heap.push((Piece { err: 0.0, ..p }, idx));
            if heap.peek().is_some_and(|(q, _)| q.err == 0.0) {
                break;
            }
            continue;
        }
        let (v1, e1) = gk15(g, p.a, m);
        let (v2, e2) = gk15(g, m, p.b);
        total += v1 + v2 - p.value;
        total_err += e1 + e2 - p.err;
        heap.push((Piece { a: p.a, b: m, value: v1, err: e1 }, idx));
        heap.push((Piece { a: m, b: p.b, value: v2, err: e2 }, idx));
        count += 1;
    }
    // recompute the sum to shed accumulated update error
    Ok(heap.iter().map(|(p, _)| p.value).sum())
}

/// Root of an increasing function on a bracket `[lo, hi]` with
/// `f(lo) ≤ 0 ≤ f(hi)`, found by bisection with secant steps.
pub fn find_root(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo > 0.0 || fhi < 0.0 {
        return Err(Error::Numerical {
            what: "root bracketing",
            achieved: hi - lo,
        });
    }
    for iter in 0..400 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        // alternate a secant guess with a bisection step
        let x = if iter % 2 == 0 && flo.is_finite() && fhi.is_finite() && fhi > flo {
            let s = lo - flo * (hi - lo) / (fhi - flo);
            if s > lo && s < hi { s } else { mid }
        } else {
            mid
        };
        let fx = f(x);
        if fx.is_nan() {
            return Err(Error::Numerical {
                what: "root finding",
                achieved: hi - lo,
            });
        }
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
    }
    if hi - lo > tol {
        return Err(Error::Numerical {
            what: "root finding",
            achieved: hi - lo,
        });
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_integral() {
        let f = |t: f64| (-0.5 * t * t).exp();
        let v = integrate(&f, &[f64::NEG_INFINITY, 0.0, f64::INFINITY], QuadConfig::default()).unwrap();
        assert!((v - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn kinked_integrand() {
        let f = |t: f64| (-t.abs()).exp();
        let v = integrate(&f, &[-3.0, 3.0], QuadConfig::default()).unwrap();
        assert!((v - 2.0 * (1.0 - (-3f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn cauchy_tail() {
        let f = |t: f64| 1.0 / (std::f64::consts::PI * (1.0 + t * t));
        let v = integrate(&f, &[f64::NEG_INFINITY, 0.0, f64::INFINITY], QuadConfig::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-11);
    }

    #[test]
    fn root_of_cubic() {
        let r = find_root(&|x| x * x * x - 2.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-11);
        assert!(find_root(&|x| x, 1.0, 2.0, 1e-12).is_err());
    }
}
