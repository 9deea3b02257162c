//! Dense linear algebra helpers on top of LAPACK.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use ndarray_linalg::{Eig, Eigh, Inverse, Norm, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const I: C64 = C64 { re: 0.0, im: 1.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn to_complex(a: &Array2<f64>) -> Array2<C64> {
    a.mapv(|x| C64::new(x, 0.0))
}

pub fn identity(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, ONE)
}

/// Conjugate transpose.
pub fn adjoint(a: &ArrayView2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

pub fn frobenius(a: &ArrayView2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &ArrayView2<C64>) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Largest induced 1-norm (maximum column sum).
pub fn norm_one(a: &ArrayView2<C64>) -> f64 {
    a.axis_iter(Axis(1))
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn is_hermitian(a: &ArrayView2<C64>, tol: f64) -> bool {
    let n = a.nrows();
    (0..n).all(|i| (i..n).all(|j| (a[[i, j]] - a[[j, i]].conj()).norm() <= tol))
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let x = a[[i, j]];
            if x != ZERO {
                out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc])
                    .assign(&b.mapv(|y| x * y));
            }
        }
    }
    out
}

/// Biorthogonal eigendecomposition of a general complex matrix.
#[derive(Clone, Debug)]
pub struct BiorthogonalEig {
    pub values: Array1<C64>,
    /// Right eigenvectors as unit-norm columns.
    pub right: Array2<C64>,
    /// Left eigenvectors as rows, scaled so that `left.dot(right) = 1`.
    pub left: Array2<C64>,
    /// `|<chi|phi>| / (|chi| |phi|)` per mode; small values signal an exceptional point.
    pub overlap_ratio: Vec<f64>,
}

/// Diagonalizes `a`, returning paired left and right eigenvectors.
///
/// Hermitian input goes through `zheev` and returns `left = right^dag`.
pub fn biorthogonal_eig(a: &Array2<C64>) -> Result<BiorthogonalEig> {
    let n = a.nrows();
    if n != a.ncols() || n == 0 {
        return Err(Error::Linalg(format!("expected a non-empty square matrix, got {:?}", a.dim())));
    }
    let scale = max_abs(&a.view()).max(1.0);
    if is_hermitian(&a.view(), 1e-14 * scale) {
        let herm = (a + &adjoint(&a.view())).mapv(|z| z * 0.5);
        let (vals, vecs) = herm.eigh(UPLO::Lower)?;
        let left = adjoint(&vecs.view());
        return Ok(BiorthogonalEig {
            values: vals.mapv(|x| C64::new(x, 0.0)),
            right: vecs,
            left,
            overlap_ratio: vec![1.0; n],
        });
    }
    let (values, mut right) = a.eig()?;
    for mut col in right.axis_iter_mut(Axis(1)) {
        let nrm = col.norm_l2();
        if nrm > 0.0 {
            col.mapv_inplace(|z| z / nrm);
        }
    }
    let left = right.inv()?;
    let overlap_ratio = left
        .axis_iter(Axis(0))
        .map(|row| {
            let nrm = row.norm_l2();
            if nrm.is_finite() && nrm > 0.0 {
                1.0 / nrm
            } else {
                0.0
            }
        })
        .collect();
    Ok(BiorthogonalEig { values, right, left, overlap_ratio })
}

/// Eigenvalues only.
pub fn eigenvalues(a: &Array2<C64>) -> Result<Array1<C64>> {
    let scale = max_abs(&a.view()).max(1.0);
    if is_hermitian(&a.view(), 1e-14 * scale) {
        let herm = (a + &adjoint(&a.view())).mapv(|z| z * 0.5);
        let (vals, _) = herm.eigh(UPLO::Lower)?;
        return Ok(vals.mapv(|x| C64::new(x, 0.0)));
    }
    use ndarray_linalg::EigVals;
    Ok(a.eigvals()?)
}

/// Lexicographic (Re, Im) ordering.
pub fn lex_cmp(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Greedy nearest-neighbour bijection from `a` onto `b`.
///
/// Returns `perm` with `|a[i] - b[perm[i]]| <= tol` for all `i`, or `None`
/// if some element has no unused partner within `tol`.
pub fn match_multisets(a: &[C64], b: &[C64], tol: f64) -> Option<Vec<usize>> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut perm = Vec::with_capacity(a.len());
    for x in a {
        let mut best: Option<(usize, f64)> = None;
        for (j, y) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (x - y).norm();
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        match best {
            Some((j, d)) if d <= tol => {
                used[j] = true;
                perm.push(j);
            }
            _ => return None,
        }
    }
    Some(perm)
}

/// Largest distance in an optimal-ish greedy matching, or infinity when sizes differ.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| lex_cmp(&a[i], &a[j]));
    for i in order {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (a[i] - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("sizes match");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

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

/// Matrix exponential by degree-13 Padé approximation with scaling and squaring.
pub fn expm(a: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    let nrm = norm_one(&a.view());
    let squarings = if nrm > THETA13 { (nrm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a.mapv(|z| z / 2f64.powi(squarings));
    let id = identity(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let b = PADE13;
    let u_inner = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u = a.dot(&(a6.dot(&u_inner) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]));
    let v_inner = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = a6.dot(&v_inner) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.inv()?.dot(&p);
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    Ok(r)
}

/// Principal inverse square root by Denman–Beavers iteration.
///
/// Intended for matrices close to the identity (overlap matrices between
/// neighbouring frames).
pub fn inverse_sqrt(a: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = identity(n);
    for _ in 0..100 {
        let y_inv = y.inv()?;
        let z_inv = z.inv()?;
        let y_next = (&y + &z_inv).mapv(|w| w * 0.5);
        let z_next = (&z + &y_inv).mapv(|w| w * 0.5);
        let change = frobenius(&(&y_next - &y).view());
        y = y_next;
        z = z_next;
        if change <= 1e-15 * frobenius(&y.view()).max(1.0) {
            return Ok(z);
        }
    }
    Err(Error::Linalg("inverse square root iteration did not converge".into()))
}

pub fn vdot(a: &ArrayView1<C64>, b: &ArrayView1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Determinant through LU for small matrices.
pub fn det(a: &Array2<C64>) -> Result<C64> {
    use ndarray_linalg::Determinant;
    Ok(a.det()?)
}
