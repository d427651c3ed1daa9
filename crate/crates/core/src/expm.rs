//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! (Higham 2005 degree selection).


// Unused whenever std is in the build graph (its inherent float methods win).
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
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

/// `exp(a)` for a small dense matrix.
pub fn matrix_exp(a: &Matrix) -> Result<Matrix> {
    if !a.is_finite() {
        return Err(Error::NonFinite("matrix_exp input"));
    }
    let norm = a.one_norm();
    if norm == 0.0 {
        return Ok(Matrix::identity(a.dim()));
    }
    let (u, v, squarings) = if norm <= THETA_3 {
        let (u, v) = pade_low(a, &B3);
        (u, v, 0)
    } else if norm <= THETA_5 {
        let (u, v) = pade_low(a, &B5);
        (u, v, 0)
    } else if norm <= THETA_7 {
        let (u, v) = pade_low(a, &B7);
        (u, v, 0)
    } else if norm <= THETA_9 {
        let (u, v) = pade_low(a, &B9);
        (u, v, 0)
    } else {
        let squarings = (norm / THETA_13).log2().ceil().max(0.0) as i32;
        let scaled = a.scale(2f64.powi(-squarings));
        let (u, v) = pade13(&scaled);
        (u, v, squarings)
    };
    let mut r = (v - u).solve(&(v + u))?;
    for _ in 0..squarings {
        r = r * r;
    }
    if !r.is_finite() {
        return Err(Error::NonFinite("matrix_exp result"));
    }
    Ok(r)
}

/// Odd part `U` and even part `V` of the degree-m Padé numerator for m ≤ 9.
fn pade_low(a: &Matrix, b: &[f64]) -> (Matrix, Matrix) {
    let n = a.dim();
    let a2 = *a * *a;
    let mut power = Matrix::identity(n);
    let mut odd = Matrix::zeros(n);
    let mut even = Matrix::zeros(n);
    for k in 0..b.len() / 2 {
        even = even + power.scale(b[2 * k]);
        odd = odd + power.scale(b[2 * k + 1]);
        power = power * a2;
    }
    (*a * odd, even)
}

fn pade13(a: &Matrix) -> (Matrix, Matrix) {
    let b = &B13;
    let ident = Matrix::identity(a.dim());
    let a2 = *a * *a;
    let a4 = a2 * a2;
    let a6 = a4 * a2;
    let inner_u = a6.scale(b[13]) + a4.scale(b[11]) + a2.scale(b[9]);
    let u = *a
        * (a6 * inner_u
            + a6.scale(b[7])
            + a4.scale(b[5])
            + a2.scale(b[3])
            + ident.scale(b[1]));
    let inner_v = a6.scale(b[12]) + a4.scale(b[10]) + a2.scale(b[8]);
    let v = a6 * inner_v + a6.scale(b[6]) + a4.scale(b[4]) + a2.scale(b[2]) + ident.scale(b[0]);
    (u, v)
}
