//! Adaptive Gauss-Kronrod integration, Gauss-Legendre rules, polynomial
//! extrapolation and Hadamard finite parts of integrals through real poles.

use num_complex::Complex64;

use crate::error::{Error, Result};

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15 tables).
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
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions { abs_tol: 0.0, rel_tol: 1e-10, max_panels: 4000 }
    }
}

#[derive(Clone, Debug)]
pub struct Integral {
    pub value: Vec<f64>,
    pub error: f64,
    pub panels: usize,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// One GK15 panel of a vector-valued integrand: (Kronrod value, |K - G|).
pub fn gk15<F: FnMut(f64) -> Vec<f64>>(f: &mut F, a: f64, b: f64) -> (Vec<f64>, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let n = fc.len();
    let mut k: Vec<f64> = fc.iter().map(|v| v * WGK[7]).collect();
    let mut g: Vec<f64> = fc.iter().map(|v| v * WG[3]).collect();
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for i in 0..n {
            let s = f1[i] + f2[i];
            k[i] += WGK[j] * s;
            if j % 2 == 1 {
                g[i] += WG[j / 2] * s;
            }
        }
    }
    k.iter_mut().for_each(|v| *v *= h);
    g.iter_mut().for_each(|v| *v *= h);
    let diff: Vec<f64> = k.iter().zip(&g).map(|(a, b)| a - b).collect();
    (k, norm(&diff))
}

/// Globally adaptive GK15 over consecutive panels [p0, p1], [p1, p2], ...
///
/// The panel with the largest error estimate is bisected until the summed
/// error meets `max(abs_tol, rel_tol * |I|)`. Subdivision order is fully
/// deterministic.
pub fn integrate<F: FnMut(f64) -> Vec<f64>>(mut f: F, points: &[f64], opts: AdaptiveOptions) -> Result<Integral> {
    if points.len() < 2 {
        return Err(Error::InvalidQuadrature("need at least two panel boundaries".into()));
    }
    let mut panels: Vec<(f64, f64, Vec<f64>, f64)> = Vec::new();
    for w in points.windows(2) {
        let (v, e) = gk15(&mut f, w[0], w[1]);
        panels.push((w[0], w[1], v, e));
    }
    loop {
        let dim = panels[0].2.len();
        let mut total = vec![0.0; dim];
        let mut err = 0.0;
        for p in &panels {
            for i in 0..dim {
                total[i] += p.2[i];
            }
            err += p.3;
        }
        let target = opts.abs_tol.max(opts.rel_tol * norm(&total));
        if err <= target || !err.is_finite() {
            if !err.is_finite() || total.iter().any(|v| !v.is_finite()) {
                return Err(Error::QuadratureNotConverged("non-finite integrand".into()));
            }
            return Ok(Integral { value: total, error: err, panels: panels.len() });
        }
        if panels.len() >= opts.max_panels {
            return Err(Error::QuadratureNotConverged(format!(
                "{} panels, error {err:e} > target {target:e}",
                panels.len()
            )));
        }
        let (worst, _) =
            panels.iter().enumerate().fold((0, -1.0), |(bi, be), (i, p)| if p.3 > be { (i, p.3) } else { (bi, be) });
        let (a, b, _, _) = panels.swap_remove(worst);
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            return Err(Error::QuadratureNotConverged("panel underflow".into()));
        }
        let (v1, e1) = gk15(&mut f, a, m);
        let (v2, e2) = gk15(&mut f, m, b);
        panels.push((a, m, v1, e1));
        panels.push((m, b, v2, e2));
        // keep a canonical order so the summation is reproducible
        panels.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    }
}

pub fn integrate_scalar<F: FnMut(f64) -> f64>(mut f: F, points: &[f64], opts: AdaptiveOptions) -> Result<(f64, f64)> {
    let r = integrate(|x| vec![f(x)], points, opts)?;
    Ok((r.value[0], r.error))
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Neville extrapolation of y(x) to x = 0. Returns the sequence of
/// extrapolants using the first 1, 2, ..., n points.
pub fn neville_to_zero(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut out = Vec::with_capacity(n);
    for m in 1..=n {
        let mut p: Vec<f64> = ys[..m].to_vec();
        for level in 1..m {
            for i in 0..m - level {
                let (xi, xj) = (xs[i], xs[i + level]);
                p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
            }
        }
        out.push(p[0]);
    }
    out
}

/// Laurent data of an analytic function around an isolated pole `a`, from the
/// trapezoid rule on the circle |z - a| = radius.
pub struct LaurentExpansion {
    pub center: f64,
    /// Coefficients of (z - a)^{-n}, n = 1, 2, ...
    pub singular: Vec<Complex64>,
    /// Coefficients of (z - a)^m, m = 0, 1, ...
    pub regular: Vec<Complex64>,
}

pub fn laurent<F: Fn(Complex64) -> Complex64>(
    f: &F,
    center: f64,
    radius: f64,
    n_points: usize,
    n_singular: usize,
    n_regular: usize,
) -> LaurentExpansion {
    let samples: Vec<(Complex64, Complex64)> = (0..n_points)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n_points as f64;
            let u = Complex64::from_polar(radius, theta);
            (u, f(Complex64::new(center, 0.0) + u))
        })
        .collect();
    let coeff = |power: i32| -> Complex64 {
        samples.iter().map(|(u, fu)| fu * u.powi(-power)).sum::<Complex64>() / n_points as f64
    };
    LaurentExpansion {
        center,
        singular: (1..=n_singular as i32).map(|n| coeff(-n)).collect(),
        regular: (0..n_regular as i32).map(coeff).collect(),
    }
}

impl LaurentExpansion {
    /// Hadamard finite part of the integral over [a - h, a + h].
    pub fn window_finite_part(&self, h: f64) -> f64 {
        let mut s = 0.0;
        for (m, g) in self.regular.iter().enumerate() {
            if m % 2 == 0 {
                s += g.re * 2.0 * h.powi(m as i32 + 1) / (m as f64 + 1.0);
            }
        }
        for (k, c) in self.singular.iter().enumerate() {
            let n = k + 1;
            if n % 2 == 0 {
                s += c.re * 2.0 * h.powi(1 - n as i32) / (1.0 - n as f64);
            }
        }
        s
    }
}

/// Hadamard finite part of the integral over [0, inf) of a function analytic
/// in the right half plane except for poles on the positive real axis.
///
/// Each pole is excised with a symmetric window whose contribution comes from
/// the Laurent expansion; the remainder is integrated adaptively, with the
/// tail mapped onto a finite interval.
pub fn finite_part_half_line<F: Fn(Complex64) -> Complex64>(
    f: &F,
    poles: &[f64],
    tail_scale: f64,
    opts: AdaptiveOptions,
) -> Result<f64> {
    let mut poles = poles.to_vec();
    poles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut windows = Vec::new();
    let mut total = 0.0;
    for (i, &a) in poles.iter().enumerate() {
        let mut gap = a;
        if i > 0 {
            gap = gap.min(a - poles[i - 1]);
        }
        if i + 1 < poles.len() {
            gap = gap.min(poles[i + 1] - a);
        }
        let radius = 0.5 * gap;
        let h = 0.25 * gap;
        let lx = laurent(f, a, radius, 256, 12, 48);
        total += lx.window_finite_part(h);
        windows.push((a - h, a + h));
    }
    let real_f = |x: f64| f(Complex64::new(x, 0.0)).re;
    let mut start = 0.0;
    for &(lo, hi) in &windows {
        total += integrate_scalar(real_f, &[start, lo], opts)?.0;
        start = hi;
    }
    // x = start + L t / (1 - t)
    let tail = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let x = start + tail_scale * t / (1.0 - t);
        real_f(x) * tail_scale / ((1.0 - t) * (1.0 - t))
    };
    total += integrate_scalar(tail, &[0.0, 0.5, 0.9, 1.0], opts)?.0;
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exactness() {
        for n in [1usize, 2, 5, 8, 13] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn adaptive_handles_peaks() {
        let opts = AdaptiveOptions { rel_tol: 1e-12, ..Default::default() };
        let (v, _) = integrate_scalar(|x| 1.0 / (1e-4 + (x - 0.3).powi(2)), &[0.0, 1.0], opts).unwrap();
        let exact = 100.0 * ((0.7f64 / 1e-2).atan() + (0.3f64 / 1e-2).atan());
        assert!((v / exact - 1.0).abs() < 1e-11);
    }

    #[test]
    fn neville_recovers_polynomial_limit() {
        let xs = [0.4, 0.2, 0.1, 0.05];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 + 2.0 * x - 5.0 * x * x + x * x * x).collect();
        let ex = neville_to_zero(&xs, &ys);
        assert!((ex[3] - 3.0).abs() < 1e-13);
    }

    #[test]
    fn finite_part_of_known_integrals() {
        // 1/((x-1)^2 (x+2)) = -1/(9(x-1)) + 1/(3(x-1)^2) + 1/(9(x+2))
        let f = |z: Complex64| 1.0 / ((z - 1.0) * (z - 1.0) * (z + 2.0));
        let fp = finite_part_half_line(&f, &[1.0], 1.0, AdaptiveOptions::default()).unwrap();
        let exact = -(2.0f64).ln() / 9.0 - 1.0 / 3.0;
        assert!((fp - exact).abs() < 1e-10, "{fp} vs {exact}");

        // a lone simple pole gives the principal value
        let g = |z: Complex64| 1.0 / ((z - 2.0) * (z + 1.0));
        let pv = finite_part_half_line(&g, &[2.0], 1.0, AdaptiveOptions::default()).unwrap();
        assert!((pv + (2.0f64).ln() / 3.0).abs() < 1e-10, "{pv}");
    }
}
