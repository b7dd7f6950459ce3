//! Small numerical helpers: log-factorials, rising factorials, compensated
//! summation and adaptive quadrature on the unit interval.

use statrs::function::gamma::ln_gamma;

/// Rising factorial (x)_n = x (x+1) ... (x+n-1).
pub fn pochhammer(x: f64, n: u64) -> f64 {
    (0..n).fold(1.0, |acc, k| acc * (x + k as f64))
}

/// ln (x)_n for x > 0, via log-gamma.
pub fn ln_pochhammer(x: f64, n: u64) -> f64 {
    if n < 32 {
        return pochhammer(x, n).ln();
    }
    ln_gamma(x + n as f64) - ln_gamma(x)
}

pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

pub fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Table of ln k! for k = 0..=n.
pub fn ln_factorial_table(n: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    t.push(0.0);
    for k in 1..=n {
        if k < 4096 {
            acc += (k as f64).ln();
            t.push(acc);
        } else {
            t.push(ln_gamma(k as f64 + 1.0));
        }
    }
    t
}

/// Neumaier's compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Dot product with eight independent accumulators so the loop vectorizes.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    acc.iter().sum::<f64>() + tail
}

// Gauss-Kronrod 7/15 nodes on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (val, err) = gk15(f, a, b);
    if err <= tol.max(1e-15 * val.abs()) || depth == 0 || (b - a) < 1e-15 * a.abs().max(b.abs()) {
        return val;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss-Kronrod quadrature of `f` over a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    adapt(&f, a, b, tol, 48)
}

/// Integrates `f(u, 1-u)` over (0, 1).
///
/// Both endpoints are split dyadically. Pieces near 1 are integrated in the
/// variable w = 1-u so that the complement is exact even when it is tiny,
/// which is what integrands blowing up like (1-u)^(-1) need.
pub fn integrate_unit<F: Fn(f64, f64) -> f64>(f: F, tol: f64) -> f64 {
    let mut total = NeumaierSum::new();
    let piece_tol = tol * 1e-2;
    total.add(integrate(|u| f(u, 1.0 - u), 0.25, 0.75, piece_tol));

    // Left end: u in [2^-(k+1), 2^-k] scaled by 1/2 so the first piece is [1/8, 1/4].
    let sweep = |near_one: bool, total: &mut NeumaierSum| {
        let mut hi = 0.25f64;
        let mut small_run = 0;
        for k in 0..1100 {
            let lo = hi * 0.5;
            if lo <= f64::MIN_POSITIVE {
                break;
            }
            let v = if near_one {
                integrate(|w| f(1.0 - w, w), lo, hi, piece_tol)
            } else {
                integrate(|u| f(u, 1.0 - u), lo, hi, piece_tol)
            };
            total.add(v);
            if v.abs() < piece_tol * 1e-2 {
                small_run += 1;
                if small_run >= 4 && k >= 8 {
                    break;
                }
            } else {
                small_run = 0;
            }
            hi = lo;
        }
    };
    sweep(false, &mut total);
    sweep(true, &mut total);
    total.value()
}

/// Two-sided standard normal quantile for a central coverage `level`.
pub fn normal_central_quantile(level: f64) -> f64 {
    std::f64::consts::SQRT_2 * statrs::function::erf::erf_inv(level)
}
