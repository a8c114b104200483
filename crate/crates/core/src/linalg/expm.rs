use super::decomp::Lu;
use super::Matrix;
use crate::error::{Error, Result};
use crate::math;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with the degree-13 Padé
/// approximant.
pub fn expm(a: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::dim("expm of a non-square matrix"));
    }
    if !a.is_finite() {
        return Err(Error::input("expm of a non-finite matrix"));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let norm = a.norm_1();
    let s = if norm > THETA13 {
        math::ceil(math::log2(norm / THETA13)).max(0.0) as i32
    } else {
        0
    };
    let a = a.scale(1.0 / math::powi(2.0, s));

    let b = &PADE13;
    let id = Matrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &(&a6.scale(b[13]) + &a4.scale(b[11])) + &a2.scale(b[9]);
    let u_tail = &(&(&a6.scale(b[7]) + &a4.scale(b[5])) + &a2.scale(b[3])) + &id.scale(b[1]);
    let u = &a * &(&(&a6 * &u_inner) + &u_tail);

    let v_inner = &(&a6.scale(b[12]) + &a4.scale(b[10])) + &a2.scale(b[8]);
    let v_tail = &(&(&a6.scale(b[6]) + &a4.scale(b[4])) + &a2.scale(b[2])) + &id.scale(b[0]);
    let v = &(&a6 * &v_inner) + &v_tail;

    let num = &v + &u;
    let den = &v - &u;
    let mut r = Lu::new(&den)?.solve(&num)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// Zero-order-hold discretization `(e^{AT}, ∫₀ᵀ e^{As} ds B)` read off one
/// exponential of the augmented matrix `[[A, B], [0, 0]]·T`.
pub fn discretize(a: &Matrix, b: &Matrix, t: f64) -> Result<(Matrix, Matrix)> {
    if !a.is_square() || b.rows() != a.rows() {
        return Err(Error::dim("discretize expects A n×n and B n×m"));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::input("sampling period must be positive"));
    }
    let (n, m) = (a.rows(), b.cols());
    let mut aug = Matrix::zeros(n + m, n + m);
    aug.set_block(0, 0, &a.scale(t));
    aug.set_block(0, n, &b.scale(t));
    let e = expm(&aug)?;
    Ok((e.block(0, 0, n, n), e.block(0, n, n, m)))
}
