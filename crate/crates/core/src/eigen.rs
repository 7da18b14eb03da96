//! Eigenvalues of small dense real matrices: Householder reduction to upper
//! Hessenberg form followed by Francis double-shift QR iteration.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Reduces `a` in place to upper Hessenberg form by Householder similarity
/// transforms.
pub fn hessenberg(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let norm_x = (k + 1..n).map(|i| a[(i, k)] * a[(i, k)]).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let alpha = if a[(k + 1, k)] > 0.0 { -norm_x } else { norm_x };
        let mut v: Vec<f64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= vnorm);
        // A <- H A
        for j in 0..n {
            let dot: f64 = v.iter().enumerate().map(|(r, vr)| vr * a[(k + 1 + r, j)]).sum();
            for (r, vr) in v.iter().enumerate() {
                a[(k + 1 + r, j)] -= 2.0 * vr * dot;
            }
        }
        // A <- A H
        for i in 0..n {
            let dot: f64 = v.iter().enumerate().map(|(c, vc)| a[(i, k + 1 + c)] * vc).sum();
            for (c, vc) in v.iter().enumerate() {
                a[(i, k + 1 + c)] -= 2.0 * dot * vc;
            }
        }
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// All eigenvalues of a square real matrix, complex pairs adjacent with the
/// positive imaginary part first.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidParameter("matrix is not square".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    let mut h = m.clone();
    hessenberg(&mut h);

    // 1-based working copy keeps the QR sweep close to its textbook form.
    let mut a = vec![vec![0.0f64; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i + 1][j + 1] = h[(i, j)];
        }
    }
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];

    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let budget = 100 * n * n;
    let mut total = 0usize;
    let mut nn = n;
    let mut t = 0.0;
    while nn >= 1 {
        let mut its = 0usize;
        loop {
            // Look for a single small subdiagonal element.
            let mut l = nn;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nn][nn];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[nn - 1][nn - 1];
            let mut w = a[nn][nn - 1] * a[nn - 1][nn];
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != 0.0 {
                        wr[nn] = x - w / z;
                    }
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = z;
                    wi[nn] = -z;
                }
                nn -= 2;
                break;
            }
            if total >= budget {
                return Err(Error::QrNonConvergence(total));
            }
            if its > 0 && its.is_multiple_of(10) {
                // Exceptional shift.
                t += x;
                for i in 1..=nn {
                    a[i][i] -= x;
                }
                let s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total += 1;

            // Look for two consecutive small subdiagonal elements.
            let (mut p, mut q, mut r);
            let mut m_ = nn - 2;
            loop {
                let z = a[m_][m_];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[m_ + 1][m_] + a[m_][m_ + 1];
                q = a[m_ + 1][m_ + 1] - z - rr - ss;
                r = a[m_ + 2][m_ + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m_ == l {
                    break;
                }
                let u = a[m_][m_ - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m_ - 1][m_ - 1].abs() + z.abs() + a[m_ + 1][m_ + 1].abs());
                if u + v == v {
                    break;
                }
                m_ -= 1;
            }
            for i in m_ + 2..=nn {
                a[i][i - 2] = 0.0;
                if i != m_ + 2 {
                    a[i][i - 3] = 0.0;
                }
            }
            // Double QR step on rows l..nn and columns m_..nn.
            let mut k = m_;
            while k < nn {
                if k != m_ {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = 0.0;
                    if k != nn - 1 {
                        r = a[k + 2][k - 1];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m_ {
                        if l != m_ {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        p = a[k][j] + q * a[k + 1][j];
                        if k != nn - 1 {
                            p += r * a[k + 2][j];
                            a[k + 2][j] -= p * z;
                        }
                        a[k + 1][j] -= p * y;
                        a[k][j] -= p * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        p = x * a[i][k] + y * a[i][k + 1];
                        if k != nn - 1 {
                            p += z * a[i][k + 2];
                            a[i][k + 2] -= p * r;
                        }
                        a[i][k + 1] -= p * q;
                        a[i][k] -= p;
                    }
                }
                k += 1;
            }
        }
    }
    let mut out: Vec<Complex64> = (1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect();
    // Deflation order is bottom-up; present eigenvalues top-down.
    out.reverse();
    for pair in 0..out.len().saturating_sub(1) {
        if out[pair].im < 0.0 && out[pair + 1].im > 0.0 && out[pair].re == out[pair + 1].re {
            out.swap(pair, pair + 1);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_re(mut v: Vec<Complex64>) -> Vec<f64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re));
        v.into_iter().map(|c| c.re).collect()
    }

    #[test]
    fn diagonal() {
        let m = DMatrix::from_row_slice(2, 2, &[0.8, 0.0, 0.0, 0.7]);
        let e = eigenvalues(&m).unwrap();
        assert_eq!(sorted_re(e.clone()), vec![0.7, 0.8]);
        assert!(e.iter().all(|c| c.im == 0.0));
    }

    #[test]
    fn rotation_scaling_pair() {
        // Characteristic polynomial λ² - 1.6λ + 0.68: roots 0.8 ± 0.2i.
        let m = DMatrix::from_row_slice(2, 2, &[0.8, 0.2, -0.2, 0.8]);
        let e = eigenvalues(&m).unwrap();
        assert!((e[0] - Complex64::new(0.8, 0.2)).norm() < 1e-14);
        assert!((e[1] - Complex64::new(0.8, -0.2)).norm() < 1e-14);
        assert!((e[0].norm() - 0.68f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn one_by_one_and_empty() {
        let m = DMatrix::from_element(1, 1, -3.5);
        assert_eq!(eigenvalues(&m).unwrap(), vec![Complex64::new(-3.5, 0.0)]);
        assert!(eigenvalues(&DMatrix::zeros(0, 0)).unwrap().is_empty());
    }

    #[test]
    fn companion_matrix_roots() {
        // (λ-1)(λ-2)(λ-3)(λ-4) = λ⁴ - 10λ³ + 35λ² - 50λ + 24
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                10.0, -35.0, 50.0, -24.0, //
                1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0,
            ],
        );
        let e = sorted_re(eigenvalues(&m).unwrap());
        for (got, want) in e.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((got - want).abs() < 1e-9, "{e:?}");
        }
    }

    #[test]
    fn hessenberg_preserves_trace_and_shape() {
        let m = DMatrix::from_fn(5, 5, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.5);
        let mut h = m.clone();
        hessenberg(&mut h);
        assert!((h.trace() - m.trace()).abs() < 1e-12);
        for i in 2..5 {
            for j in 0..i - 1 {
                assert_eq!(h[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn rejects_non_square() {
        assert!(eigenvalues(&DMatrix::zeros(2, 3)).is_err());
    }
}
