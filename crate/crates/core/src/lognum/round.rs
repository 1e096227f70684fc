//! Outward-rounded elementary operations on `f64`.
//!
//! Basic arithmetic is correctly rounded under IEEE 754, so an error-free
//! transformation tells us on which side of the exact result the rounded
//! value fell, and we step at most one representable value. The platform's
//! transcendental functions are not correctly rounded; their results are
//! widened by one representable step, which covers any error below one ULP.

/// Direction of rounding for an end-point computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    Down,
    Up,
}

impl Dir {
    #[inline]
    pub fn flip(self) -> Dir {
        match self {
            Dir::Down => Dir::Up,
            Dir::Up => Dir::Down,
        }
    }

    #[inline]
    fn step(self, x: f64) -> f64 {
        match self {
            Dir::Down => x.next_down(),
            Dir::Up => x.next_up(),
        }
    }
}

/// `a + b` rounded in direction `dir`. Returns NaN only for `inf - inf`.
#[inline]
pub fn add(a: f64, b: f64, dir: Dir) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return s;
    }
    // TwoSum: a + b = s + err exactly.
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    match dir {
        Dir::Down if err < 0.0 => s.next_down(),
        Dir::Up if err > 0.0 => s.next_up(),
        _ => s,
    }
}

#[inline]
pub fn sub(a: f64, b: f64, dir: Dir) -> f64 {
    add(a, -b, dir)
}

/// `a * b` rounded in direction `dir`.
#[inline]
pub fn mul(a: f64, b: f64, dir: Dir) -> f64 {
    let p = a * b;
    if !p.is_finite() || p == 0.0 {
        return p;
    }
    let err = a.mul_add(b, -p);
    match dir {
        Dir::Down if err < 0.0 => p.next_down(),
        Dir::Up if err > 0.0 => p.next_up(),
        _ => p,
    }
}

/// `a / b` rounded in direction `dir` (b finite and nonzero).
#[inline]
pub fn div(a: f64, b: f64, dir: Dir) -> f64 {
    let q = a / b;
    if !q.is_finite() || q == 0.0 {
        return q;
    }
    // residual r = a - q*b exactly (fma); sign of r/b tells the side.
    let r = (-q).mul_add(b, a);
    let above = (r < 0.0) == (b > 0.0) && r != 0.0;
    let below = r != 0.0 && !above;
    match dir {
        Dir::Down if above => q.next_down(),
        Dir::Up if below => q.next_up(),
        _ => q,
    }
}

#[inline]
pub fn exp(x: f64, dir: Dir) -> f64 {
    if x == 0.0 || x.is_infinite() || x.is_nan() {
        return x.exp();
    }
    let r = dir.step(x.exp());
    r.max(0.0)
}

#[inline]
pub fn expm1(x: f64, dir: Dir) -> f64 {
    if x == 0.0 || x.is_infinite() || x.is_nan() {
        return x.exp_m1();
    }
    dir.step(x.exp_m1()).max(-1.0)
}

/// Natural log; `ln(0) = -inf`, `ln(1) = 0` exactly.
#[inline]
pub fn ln(x: f64, dir: Dir) -> f64 {
    if x == 1.0 || x == 0.0 || x.is_infinite() || x.is_nan() {
        return x.ln();
    }
    dir.step(x.ln())
}

#[inline]
pub fn ln_1p(x: f64, dir: Dir) -> f64 {
    if x == 0.0 || x == -1.0 || x.is_infinite() || x.is_nan() {
        return x.ln_1p();
    }
    dir.step(x.ln_1p())
}

#[inline]
pub fn sin(x: f64, dir: Dir) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    dir.step(x.sin()).clamp(-1.0, 1.0)
}

#[inline]
pub fn cos(x: f64, dir: Dir) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    dir.step(x.cos()).clamp(-1.0, 1.0)
}
