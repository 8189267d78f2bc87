//! Small dense least squares for spline and basis fitting.

/// Solves `min ||A c - y||^2 + ridge ||c||^2` through the normal equations.
/// `rows` are the rows of `A`, each of length `n`.
pub fn least_squares(rows: &[Vec<f64>], ys: &[f64], n: usize, ridge: f64) -> Vec<f64> {
    let mut ata = vec![vec![0.0; n]; n];
    let mut aty = vec![0.0; n];
    for (row, y) in rows.iter().zip(ys) {
        for i in 0..n {
            if row[i] == 0.0 {
                continue;
            }
            aty[i] += row[i] * y;
            for j in 0..n {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    for (i, r) in ata.iter_mut().enumerate() {
        r[i] += ridge;
    }
    solve_spd(ata, aty)
}

/// Cholesky solve of a symmetric positive-definite system.
pub fn solve_spd(mut a: Vec<Vec<f64>>, b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= a[j][k] * a[j][k];
        }
        let d = d.max(1e-300).sqrt();
        a[j][j] = d;
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= a[i][k] * a[j][k];
            }
            a[i][j] = s / d;
        }
    }
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i][k] * z[k];
        }
        z[i] = s / a[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s -= a[k][i] * x[k];
        }
        x[i] = s / a[i][i];
    }
    x
}
