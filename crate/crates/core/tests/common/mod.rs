#![allow(dead_code)]

use qsdc_core::linalg;
use qsdc_core::synthesis::{CertificateVars, SynthesisContext};
use qsdc_core::{Matrix, PlantSpec, SymmetricMatrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.gen_range(-bound..=bound)).collect();
    Matrix::from_row_major(rows, cols, data).unwrap()
}

pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> SymmetricMatrix {
    let b = random_matrix(rng, n, n, 1.0);
    let mut s = SymmetricMatrix::from_matrix_sym(&(&b.transpose() * &b)).unwrap();
    s.add_identity(floor);
    s
}

pub fn random_plant(rng: &mut ChaCha8Rng, n_p: usize, n_u: usize) -> PlantSpec {
    let a = random_matrix(rng, n_p, n_p, 2.0);
    let b = random_matrix(rng, n_p, n_u, 2.0);
    let delta = (0..n_u).map(|_| rng.gen_range(0.1..2.0)).collect();
    let t = rng.gen_range(0.1..1.0);
    PlantSpec::new(a, b, delta, t).unwrap()
}

pub fn random_vars(rng: &mut ChaCha8Rng, ctx: &SynthesisContext) -> CertificateVars {
    let (n, nu) = (ctx.n(), ctx.n_u());
    CertificateVars {
        p: random_spd(rng, n, 0.1),
        k: random_matrix(rng, nu, n, 2.0),
        s1: (0..nu).map(|_| rng.gen_range(0.01..2.0)).collect(),
        s2: (0..nu).map(|_| rng.gen_range(0.01..2.0)).collect(),
        rho: rng.gen_range(0.01..0.99),
    }
}

/// Relative perturbation of every block of a certificate, keeping `P ≻ 0`
/// and the multipliers positive.
pub fn perturb(rng: &mut ChaCha8Rng, v: &CertificateVars, scale: f64) -> CertificateVars {
    let n = v.p.dim();
    let dp = random_matrix(rng, n, n, scale * v.p.max_abs());
    let p = SymmetricMatrix::from_matrix_sym(&(&v.p.to_matrix() + &dp)).unwrap();
    let dk = random_matrix(rng, v.k.rows(), v.k.cols(), scale * (1.0 + v.k.max_abs()));
    let jitter = |rng: &mut ChaCha8Rng, x: f64| x * (1.0 + rng.gen_range(-scale..=scale)).max(0.5);
    CertificateVars {
        p,
        k: &v.k + &dk,
        s1: v.s1.iter().map(|x| jitter(rng, *x)).collect(),
        s2: v.s2.iter().map(|x| jitter(rng, *x)).collect(),
        rho: jitter(rng, v.rho).clamp(1e-3, 1.0 - 1e-3),
    }
}

/// `Σ_{k≤30} Aᵏ/k!`.
pub fn expm_taylor(a: &Matrix) -> Matrix {
    let n = a.rows();
    let mut term = Matrix::identity(n);
    let mut sum = Matrix::identity(n);
    for k in 1..=30 {
        term = (&term * a).scale(1.0 / k as f64);
        sum = &sum + &term;
    }
    sum
}

/// Composite Simpson rule for `∫₀ᵀ exp(As) ds · B`.
pub fn input_integral(a: &Matrix, b: &Matrix, t: f64, intervals: usize) -> Matrix {
    let h = t / intervals as f64;
    let mut acc = Matrix::zeros(a.rows(), a.cols());
    for i in 0..=intervals {
        let w = if i == 0 || i == intervals {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc = &acc + &expm_taylor(&a.scale(h * i as f64)).scale(w);
    }
    &acc.scale(h / 3.0) * b
}

/// Adaptive Dormand-Prince 5(4) integration of `ẋ = Ax` over `[0, t]`.
pub fn rk45_linear(a: &Matrix, x0: &[f64], t: f64, rtol: f64, atol: f64) -> Vec<f64> {
    const C: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let f = |x: &[f64]| a.mul_vec(x).unwrap();
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut s = 0.0;
    let mut h = (t / 100.0).max(1e-6);
    while s < t {
        if s + h > t {
            h = t - s;
        }
        let mut k: Vec<Vec<f64>> = vec![f(&x)];
        for row in C.iter() {
            let xi: Vec<f64> = (0..n)
                .map(|i| x[i] + h * row.iter().zip(&k).map(|(c, kk)| c * kk[i]).sum::<f64>())
                .collect();
            k.push(f(&xi));
        }
        let x5: Vec<f64> = (0..n)
            .map(|i| x[i] + h * C[5].iter().zip(&k).map(|(c, kk)| c * kk[i]).sum::<f64>())
            .collect();
        let err = (0..n)
            .map(|i| {
                let e = h * E.iter().zip(&k).map(|(c, kk)| c * kk[i]).sum::<f64>();
                let sc = atol + rtol * x[i].abs().max(x5[i].abs());
                (e / sc).powi(2)
            })
            .sum::<f64>();
        let err = (err / n as f64).sqrt();
        if err <= 1.0 {
            s += h;
            x = x5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    x
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = 1.0 + a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

pub fn lmax(s: &SymmetricMatrix) -> f64 {
    linalg::lambda_max(s)
}
