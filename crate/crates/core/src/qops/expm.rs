//! Dense matrix exponential by scaling and squaring with diagonal Padé
//! approximants (degrees 3, 5, 7, 9, 13), after Higham (2005).

#![allow(clippy::excessive_precision)]

use nalgebra::{Const, DimMin, SMatrix, ToTypenum};

/// Largest 1-norm for which the degree-m approximant reaches double
/// precision without scaling.
const THETA: [(usize, f64); 5] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_230e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068e0),
    (13, 5.371_920_351_148_152e0),
];

/// Coefficients `b_j = (2m-j)! m! / ((2m)! j! (m-j)!)` of the degree-m Padé
/// numerator.
fn pade_coefficients(m: usize) -> Vec<f64> {
    let mut b = vec![1.0; m + 1];
    for j in 1..=m {
        // b_j / b_{j-1} = (m - j + 1) / (j (2m - j + 1))
        b[j] = b[j - 1] * (m - j + 1) as f64 / (j as f64 * (2 * m - j + 1) as f64);
    }
    b
}

fn one_norm<const N: usize>(a: &SMatrix<f64, N, N>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^{A}` for a small dense real matrix.
pub fn expm_matrix<const N: usize>(a: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N>
where
    Const<N>: ToTypenum + DimMin<Const<N>, Output = Const<N>>,
{
    let norm = one_norm(a);
    if norm == 0.0 {
        return SMatrix::identity();
    }
    if !norm.is_finite() {
        return SMatrix::from_element(f64::NAN);
    }

    let (degree, squarings) = match THETA.iter().find(|(_, th)| norm <= *th) {
        Some(&(m, _)) => (m, 0),
        None => {
            let th = THETA[4].1;
            let s = (norm / th).log2().ceil().max(0.0) as u32;
            (13, s)
        }
    };
    let scaled = a / 2f64.powi(squarings as i32);
    let b = pade_coefficients(degree);

    let ident = SMatrix::<f64, N, N>::identity();
    let a2 = scaled * scaled;
    let (u, v) = if degree < 13 {
        let mut u = ident * b[1];
        let mut v = ident * b[0];
        let mut pow = ident;
        for k in 1..=degree / 2 {
            pow *= a2;
            u += pow * b[2 * k + 1];
            v += pow * b[2 * k];
        }
        (scaled * u, v)
    } else {
        let a4 = a2 * a2;
        let a6 = a4 * a2;
        let u_inner = a6 * (a6 * b[13] + a4 * b[11] + a2 * b[9])
            + a6 * b[7]
            + a4 * b[5]
            + a2 * b[3]
            + ident * b[1];
        let u = scaled * u_inner;
        let v = a6 * (a6 * b[12] + a4 * b[10] + a2 * b[8])
            + a6 * b[6]
            + a4 * b[4]
            + a2 * b[2]
            + ident * b[0];
        (u, v)
    };

    let p = v + u;
    let q = v - u;
    let mut r = q
        .lu()
        .solve(&p)
        .unwrap_or_else(|| SMatrix::from_element(f64::NAN));
    for _ in 0..squarings {
        r = r * r;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix2, Matrix3, Matrix4};

    /// Truncated Taylor series with scaling, as an independent reference.
    fn taylor_expm(a: &Matrix4<f64>) -> Matrix4<f64> {
        let s = 10;
        let x = a / 2f64.powi(s);
        let mut term = Matrix4::identity();
        let mut sum = Matrix4::identity();
        for k in 1..40 {
            term = term * x / k as f64;
            sum += term;
        }
        for _ in 0..s {
            sum = sum * sum;
        }
        sum
    }

    #[test]
    fn pade_coefficients_degree_3() {
        // (120, 60, 12, 1) / 120
        let b = pade_coefficients(3);
        let expect = [1.0, 0.5, 0.1, 1.0 / 120.0];
        for (x, e) in b.iter().zip(expect) {
            assert!((x - e).abs() < 1e-16);
        }
    }

    #[test]
    fn scalar_and_diagonal() {
        let a = Matrix2::new(-0.3, 0.0, 0.0, 2.5);
        let e = expm_matrix(&a);
        assert!((e[(0, 0)] - (-0.3f64).exp()).abs() < 1e-15);
        assert!((e[(1, 1)] - 2.5f64.exp()).abs() < 1e-13 * 2.5f64.exp());
    }

    #[test]
    fn rotation_generator() {
        let th = 7.3;
        let a = Matrix2::new(0.0, -th, th, 0.0);
        let e = expm_matrix(&a);
        let r = Matrix2::new(th.cos(), -th.sin(), th.sin(), th.cos());
        assert!((e - r).abs().max() < 1e-13);
    }

    #[test]
    fn nilpotent() {
        let a = Matrix3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0);
        let e = expm_matrix(&(a * 3.0));
        let expect = Matrix3::new(1.0, 3.0, 4.5, 0.0, 1.0, 3.0, 0.0, 0.0, 1.0);
        assert!((e - expect).abs().max() < 1e-13);
    }

    #[test]
    fn agrees_with_taylor_across_norms() {
        let base = Matrix4::new(
            0.0, 0.0, 0.0, 0.0, //
            0.1, -0.5, 1.3, 0.0, //
            -0.2, -1.3, -0.7, 2.0, //
            -1.0, 0.4, -2.0, -1.0,
        );
        for &scale in &[1e-3, 0.01, 0.2, 0.9, 2.0, 5.0, 20.0] {
            let a = base * scale;
            let e = expm_matrix(&a);
            let t = taylor_expm(&a);
            let err = (e - t).abs().max() / t.abs().max().max(1.0);
            assert!(err < 1e-12, "scale {scale}: {err:e}");
        }
    }
}
