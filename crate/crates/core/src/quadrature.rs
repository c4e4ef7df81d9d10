//! Gauss–Legendre rules and adaptive Gauss–Kronrod integration.

use std::sync::OnceLock;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// 64-point rule, computed once.
    pub fn gl64() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(64))
    }

    pub fn gl16() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(16))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        let c = 0.5 * (lo + hi);
        let r = 0.5 * (hi - lo);
        if r == 0.0 {
            return 0.0;
        }
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + r * x);
        }
        s * r
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { p0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

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

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> (f64, f64) {
    let c = 0.5 * (lo + hi);
    let r = 0.5 * (hi - lo);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = r * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * r, ((kron - gauss) * r).abs())
}

/// Adaptive G7–K15 quadrature to absolute tolerance `tol`.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    if hi == lo {
        return 0.0;
    }
    let (val, err) = gk15(&mut f, lo, hi);
    if err <= tol {
        return val;
    }
    let mut stack = vec![(lo, hi, val, err, 0u32)];
    let mut total = 0.0;
    while let Some((a, b, v, e, depth)) = stack.pop() {
        if e <= tol * (b - a) / (hi - lo).abs().max(f64::MIN_POSITIVE) || depth >= 40 {
            total += v;
            continue;
        }
        let m = 0.5 * (a + b);
        let (v1, e1) = gk15(&mut f, a, m);
        let (v2, e2) = gk15(&mut f, m, b);
        stack.push((a, m, v1, e1, depth + 1));
        stack.push((m, b, v2, e2, depth + 1));
    }
    total
}

fn gk15_pair<F: FnMut(f64) -> (f64, f64)>(f: &mut F, lo: f64, hi: f64) -> ([f64; 2], f64) {
    let c = 0.5 * (lo + hi);
    let r = 0.5 * (hi - lo);
    let fc = f(c);
    let mut kron = [WGK[7] * fc.0, WGK[7] * fc.1];
    let mut gauss = [WG[3] * fc.0, WG[3] * fc.1];
    for j in 0..7 {
        let dx = r * XGK[j];
        let (l, u) = (f(c - dx), f(c + dx));
        let s = [l.0 + u.0, l.1 + u.1];
        for i in 0..2 {
            kron[i] += WGK[j] * s[i];
            if j % 2 == 1 {
                gauss[i] += WG[j / 2] * s[i];
            }
        }
    }
    let err = ((kron[0] - gauss[0]) * r).abs().max(((kron[1] - gauss[1]) * r).abs());
    ([kron[0] * r, kron[1] * r], err)
}

/// Adaptive G7–K15 for two integrands sharing the abscissae.
pub fn integrate_adaptive_pair<F: FnMut(f64) -> (f64, f64)>(mut f: F, lo: f64, hi: f64, tol: f64) -> [f64; 2] {
    if hi == lo {
        return [0.0, 0.0];
    }
    let (val, err) = gk15_pair(&mut f, lo, hi);
    if err <= tol {
        return val;
    }
    let width = (hi - lo).abs();
    let mut stack = vec![(lo, hi, val, err, 0u32)];
    let mut total = [0.0, 0.0];
    while let Some((a, b, v, e, depth)) = stack.pop() {
        if e <= tol * (b - a).abs() / width || depth >= 40 {
            total[0] += v[0];
            total[1] += v[1];
            continue;
        }
        let m = 0.5 * (a + b);
        let (v1, e1) = gk15_pair(&mut f, a, m);
        let (v2, e2) = gk15_pair(&mut f, m, b);
        stack.push((a, m, v1, e1, depth + 1));
        stack.push((m, b, v2, e2, depth + 1));
    }
    total
}
