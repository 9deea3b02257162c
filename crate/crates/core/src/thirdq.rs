//! Lindblad dynamics of the chain in the third-quantized (Majorana) picture.
//!
//! Majorana operators are `w_{2m} = c_m + c_m^dag` and
//! `w_{2m+1} = i (c_m - c_m^dag)` with 0-based site `m`. The shape matrix
//! `A` is `4n x 4n` and antisymmetric; its eigenvalues come in pairs
//! `+-beta` (the rapidities).

use ndarray::{s, Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{hopping_amplitudes, hopping_matrix, Boundary, DisorderRealization, ModelConfig, OccupationProfile, Pattern};
use crate::linalg::{self, c, kron, BiorthogonalEig, I, ONE, ZERO};

/// Absolute pairing tolerance, scaled by `max(1, |A|)`.
pub const PAIRING_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct ShapeMatrix {
    pub dim: usize,
    pub entries: Array2<C64>,
    pub pattern: Pattern,
    pub boundary: Boundary,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RapiditySpectrum {
    /// One member of each `+-beta` pair, `Re beta >= 0`, sorted by (Re, Im).
    pub betas: Vec<C64>,
    /// All `4n` eigenvalues of `A`.
    pub eigenvalues: Vec<C64>,
    /// `pairing_certificate[j] = (p, q)`: `betas[j] = eigenvalues[p]` and
    /// `eigenvalues[q]` is its `-beta` partner.
    pub pairing_certificate: Vec<(usize, usize)>,
    pub unique_ness: bool,
}

impl RapiditySpectrum {
    pub fn min_re(&self) -> f64 {
        self.betas.iter().map(|b| b.re).fold(f64::INFINITY, f64::min)
    }

    /// Slowest exponential relaxation rate of a single normal master mode, `2 min Re beta`.
    pub fn slowest_mode_rate(&self) -> f64 {
        2.0 * self.min_re()
    }

    /// Smallest `|Im beta|`, the Liouvillean analogue of the band gap.
    pub fn min_abs_im(&self) -> f64 {
        self.betas.iter().map(|b| b.im.abs()).fold(f64::INFINITY, f64::min)
    }
}

/// `C_mn = <c_m^dag c_n>` in the steady state.
#[derive(Clone, Debug)]
pub struct CovarianceMatrix {
    pub entries: Array2<C64>,
}

/// Gain and loss rates per site as used by the Lindblad operators
/// `sqrt(g_m) c_m^dag` and `sqrt(l_m) c_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct Reservoirs {
    pub gain: Vec<f64>,
    pub loss: Vec<f64>,
}

impl Reservoirs {
    pub fn from_config(config: &ModelConfig) -> Self {
        Self { gain: config.gain_rates(), loss: config.loss_rates() }
    }
}

/// Antisymmetric `H` with `sum_ij h_ij c_i^dag c_j = sum_ab w_a H_ab w_b + const`.
pub fn majorana_hamiltonian_from_hopping(h: &Array2<C64>) -> Array2<C64> {
    let n = h.nrows();
    let mut q = Array2::<C64>::zeros((2 * n, 2 * n));
    // c_i^dag = (w_2i + i w_2i+1) / 2, c_j = (w_2j - i w_2j+1) / 2
    let cd = [c(0.5, 0.0), c(0.0, 0.5)];
    let cc = [c(0.5, 0.0), c(0.0, -0.5)];
    for i in 0..n {
        for j in 0..n {
            let hij = h[[i, j]];
            if hij == ZERO {
                continue;
            }
            for (p, x) in cd.iter().enumerate() {
                for (r, y) in cc.iter().enumerate() {
                    q[[2 * i + p, 2 * j + r]] += hij * x * y;
                }
            }
        }
    }
    (&q - &q.t()).mapv(|z| z * 0.5)
}

/// Majorana coefficient matrix of the hopping Hamiltonian (dissipation excluded).
pub fn majorana_hamiltonian(config: &ModelConfig, disorder: Option<&DisorderRealization>) -> Result<Array2<C64>> {
    let h = hopping_matrix(config, disorder)?;
    Ok(majorana_hamiltonian_from_hopping(&linalg::to_complex(&h)))
}

/// Majorana coefficients of `sqrt(rate) c_m` (loss) or `sqrt(rate) c_m^dag` (gain).
pub fn site_lindblad_vector(n: usize, site: usize, rate: f64, gain: bool) -> Array1<C64> {
    let mut l = Array1::zeros(2 * n);
    let a = rate.sqrt() * 0.5;
    l[2 * site] = c(a, 0.0);
    l[2 * site + 1] = c(0.0, if gain { a } else { -a });
    l
}

/// Lindblad vectors for explicit per-site rates; sites with zero rate are skipped.
pub fn lindblad_vectors_from_rates(res: &Reservoirs) -> Vec<Array1<C64>> {
    let n = res.gain.len();
    let mut out = Vec::new();
    for m in 0..n {
        if res.gain[m] > 0.0 {
            out.push(site_lindblad_vector(n, m, res.gain[m], true));
        }
        if res.loss[m] > 0.0 {
            out.push(site_lindblad_vector(n, m, res.loss[m], false));
        }
    }
    out
}

/// One vector per reservoir-coupled site of the pattern (zero vectors when `gamma = 0`).
pub fn lindblad_vectors(config: &ModelConfig) -> Vec<Array1<C64>> {
    let n = config.n;
    let g = config.gamma;
    match config.pattern {
        Pattern::None => Vec::new(),
        Pattern::U1 => vec![site_lindblad_vector(n, 0, g, false), site_lindblad_vector(n, n - 1, g, true)],
        Pattern::U2 => (0..n).map(|m| site_lindblad_vector(n, m, g, m % 2 == 0)).collect(),
    }
}

/// Assembles `A` from the Majorana Hamiltonian and the Lindblad vectors.
///
/// With `M_jk = sum_mu conj(l_mu,j) l_mu,k` and 0-based Majorana indices:
/// `A[2j,2k] = -2i H_jk - M_jk + M_kj`, `A[2j,2k+1] = 2i M_kj`,
/// `A[2j+1,2k] = -2i M_jk`, `A[2j+1,2k+1] = -2i H_jk + M_jk - M_kj`.
/// Only the strict lower triangle is computed; the rest is mirrored.
pub fn shape_matrix_from_parts(hm: &Array2<C64>, lvecs: &[Array1<C64>]) -> Array2<C64> {
    let m = hm.nrows();
    let mut mm = Array2::<C64>::zeros((m, m));
    for l in lvecs {
        for j in 0..m {
            if l[j] == ZERO {
                continue;
            }
            for k in 0..m {
                mm[[j, k]] += l[j].conj() * l[k];
            }
        }
    }
    let two_i = c(0.0, 2.0);
    let entry = |r: usize, s: usize| -> C64 {
        let (j, p) = (r / 2, r % 2);
        let (k, q) = (s / 2, s % 2);
        match (p, q) {
            (0, 0) => -two_i * hm[[j, k]] - mm[[j, k]] + mm[[k, j]],
            (0, 1) => two_i * mm[[k, j]],
            (1, 0) => -two_i * mm[[j, k]],
            _ => -two_i * hm[[j, k]] + mm[[j, k]] - mm[[k, j]],
        }
    };
    let dim = 2 * m;
    let mut a = Array2::<C64>::zeros((dim, dim));
    for r in 0..dim {
        for s in 0..r {
            let v = entry(r, s);
            a[[r, s]] = v;
            a[[s, r]] = -v;
        }
    }
    a
}

pub fn build_shape_matrix(config: &ModelConfig, disorder: Option<&DisorderRealization>) -> Result<ShapeMatrix> {
    let hm = majorana_hamiltonian(config, disorder)?;
    let entries = shape_matrix_from_parts(&hm, &lindblad_vectors(config));
    Ok(ShapeMatrix { dim: 4 * config.n, entries, pattern: config.pattern, boundary: config.boundary })
}

fn pauli() -> (Array2<C64>, Array2<C64>, Array2<C64>, Array2<C64>) {
    let id = linalg::identity(2);
    let sx = ndarray::array![[ZERO, ONE], [ONE, ZERO]];
    let sy = ndarray::array![[ZERO, -I], [I, ZERO]];
    let sz = ndarray::array![[ONE, ZERO], [ZERO, -ONE]];
    (id, sx, sy, sz)
}

/// The 4x4 blocks `(Gamma_g, Gamma_l, T)` of the banded alternating-pattern shape matrix:
/// `Gamma_{g,l} = -1 (x) sigma_y -+ sigma_y (x) (i sigma_x + sigma_z)`, `T = -i sigma_y (x) 1`.
pub fn u2_blocks() -> (Array2<C64>, Array2<C64>, Array2<C64>) {
    let (id, sx, sy, sz) = pauli();
    let a = kron(&id.view(), &sy.view()).mapv(|z| -z);
    let b = kron(&sy.view(), &(sx.mapv(|z| z * I) + &sz).view());
    let t = kron(&sy.view(), &id.view()).mapv(|z| -I * z);
    (&a + &b, &a - &b, t)
}

/// Direct block assembly of `A` for the alternating pattern: `gamma Gamma_g / 2`
/// on gain sites, `gamma Gamma_l / 2` on loss sites, `h_ij T / 2` between sites.
pub fn banded_shape_matrix_u2(config: &ModelConfig, disorder: Option<&DisorderRealization>) -> Result<ShapeMatrix> {
    if config.pattern != Pattern::U2 {
        return Err(Error::Unsupported("banded assembly is specific to the alternating pattern".into()));
    }
    let h = hopping_matrix(config, disorder)?;
    let (gg, gl, t) = u2_blocks();
    let n = config.n;
    let mut a = Array2::<C64>::zeros((4 * n, 4 * n));
    for p in 0..n {
        let diag = if p % 2 == 0 { &gg } else { &gl };
        a.slice_mut(s![4 * p..4 * p + 4, 4 * p..4 * p + 4]).assign(&diag.mapv(|z| z * (0.5 * config.gamma)));
        for q in 0..n {
            if h[[p, q]] != 0.0 && p != q {
                a.slice_mut(s![4 * p..4 * p + 4, 4 * q..4 * q + 4]).assign(&t.mapv(|z| z * (0.5 * h[[p, q]])));
            }
        }
    }
    Ok(ShapeMatrix { dim: 4 * n, entries: a, pattern: config.pattern, boundary: config.boundary })
}

/// 8x8 Bloch Liouvillean
/// `(1/2) [[g Gamma_g, -(t1 + t2 e^{ik}) T], [-(t1 + t2 e^{-ik}) T, g Gamma_l]]`.
///
/// This is the cell-diagonal block of `A` in the basis `e^{-ijk}` over unit cells `j`.
pub fn build_bloch_liouvillean(config: &ModelConfig, k: f64) -> Result<Array2<C64>> {
    config.validate()?;
    let g = match config.pattern {
        Pattern::U1 => return Err(Error::Unsupported("the U1 pattern is not translation invariant".into())),
        Pattern::None => 0.0,
        Pattern::U2 => config.gamma,
    };
    let (t1, t2) = hopping_amplitudes(config);
    let (gg, gl, t) = u2_blocks();
    let f = -(c(t1, 0.0) + C64::from_polar(t2, k));
    let mut out = Array2::<C64>::zeros((8, 8));
    out.slice_mut(s![0..4, 0..4]).assign(&gg.mapv(|z| z * (0.5 * g)));
    out.slice_mut(s![4..8, 4..8]).assign(&gl.mapv(|z| z * (0.5 * g)));
    out.slice_mut(s![0..4, 4..8]).assign(&t.mapv(|z| z * f * 0.5));
    out.slice_mut(s![4..8, 0..4]).assign(&t.mapv(|z| z * f.conj() * 0.5));
    Ok(out)
}

fn pair_up(values: &[C64], tol: f64) -> Result<(Vec<C64>, Vec<(usize, usize)>)> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    // Descending real part; runs whose consecutive real parts lie within tol
    // are reordered by descending imaginary part.
    order.sort_by(|&a, &b| values[b].re.total_cmp(&values[a].re));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end - 1]].re - values[order[end]].re <= tol {
            end += 1;
        }
        order[start..end].sort_by(|&a, &b| values[b].im.total_cmp(&values[a].im));
        start = end;
    }
    let mut used = vec![false; n];
    let mut pairs = Vec::with_capacity(n / 2);
    for &p in &order {
        if used[p] {
            continue;
        }
        used[p] = true;
        let target = -values[p];
        let best = (0..n)
            .filter(|&q| !used[q])
            .map(|q| (q, (values[q] - target).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((q, d)) if d <= tol => {
                used[q] = true;
                // Keep the member with Re >= 0; rounding-level real parts fall back to the sort order.
                let eps = 1e-3 * tol;
                if values[q].re - values[p].re > eps {
                    pairs.push((q, p));
                } else {
                    pairs.push((p, q));
                }
            }
            _ => return Err(Error::Pairing { index: p, tol }),
        }
    }
    pairs.sort_by(|a, b| linalg::lex_cmp(&values[a.0], &values[b.0]));
    let betas = pairs.iter().map(|&(p, _)| values[p]).collect();
    Ok((betas, pairs))
}

/// Rapidities of a shape matrix with a `+-beta` pairing certificate.
pub fn rapidities(shape: &ShapeMatrix) -> Result<RapiditySpectrum> {
    rapidities_of(&shape.entries)
}

pub fn rapidities_of(a: &Array2<C64>) -> Result<RapiditySpectrum> {
    let values = linalg::eigenvalues(a)?.to_vec();
    let scale = linalg::frobenius(&a.view()).max(1.0);
    let (betas, pairing_certificate) = pair_up(&values, PAIRING_TOL * scale)?;
    let min_re = betas.iter().map(|b| b.re).fold(f64::INFINITY, f64::min);
    Ok(RapiditySpectrum { betas, eigenvalues: values, pairing_certificate, unique_ness: min_re > 1e-10 * scale })
}

/// Closed-form rapidities of the alternating-pattern ring:
/// `(gamma +- i E(k)) / 2` with `E(k) = |t1 + t2 e^{ik}|`, each listed twice.
pub fn analytic_rapidities_u2_ring(config: &ModelConfig) -> Result<Vec<C64>> {
    config.validate()?;
    if config.pattern != Pattern::U2 || config.boundary != Boundary::Periodic {
        return Err(Error::Unsupported("closed form holds for the alternating pattern on a ring".into()));
    }
    let (t1, t2) = hopping_amplitudes(config);
    let cells = config.n_cells();
    let mut out = Vec::with_capacity(2 * config.n);
    for j in 0..cells {
        let k = 2.0 * std::f64::consts::PI * j as f64 / cells as f64;
        let e = (c(t1, 0.0) + C64::from_polar(t2, k)).norm();
        for sign in [1.0, -1.0] {
            let beta = c(0.5 * config.gamma, 0.5 * sign * e);
            out.push(beta);
            out.push(beta);
        }
    }
    out.sort_by(linalg::lex_cmp);
    Ok(out)
}

/// Solves `X C + C X^dag = 2 G` with `X = D - i h^T`.
///
/// `D = diag(gain + loss)`, `G = diag(gain)`. Uses the eigenbasis of `X`;
/// falls back to a dense solve on the `n^2` unknowns when the eigenbasis is
/// too ill-conditioned to reach the residual target.
pub fn covariance_from_parts(h: &Array2<C64>, res: &Reservoirs) -> Result<CovarianceMatrix> {
    let n = h.nrows();
    let mut x = h.t().mapv(|z| -I * z);
    let mut rhs = Array2::<C64>::zeros((n, n));
    for m in 0..n {
        x[[m, m]] += c(res.gain[m] + res.loss[m], 0.0);
        rhs[[m, m]] = c(2.0 * res.gain[m], 0.0);
    }
    let scale = linalg::max_abs(&x.view()).max(1.0);
    let eig = linalg::biorthogonal_eig(&x)?;
    let lam = &eig.values;
    let min_gap = lam.iter().flat_map(|a| lam.iter().map(move |b| (a + b.conj()).norm())).fold(f64::INFINITY, f64::min);
    if min_gap <= 1e-12 * scale {
        return Err(Error::NonUniqueSteadyState(format!(
            "the covariance equation is singular (min |lambda_a + conj(lambda_b)| = {min_gap:e})"
        )));
    }
    let c_mat = solve_in_eigenbasis(&eig, &rhs);
    let residual = covariance_residual(&x, &c_mat, &rhs);
    let c_mat = if residual <= 1e-11 * scale { c_mat } else { solve_dense(&x, &rhs)? };
    let herm = (&c_mat + &linalg::adjoint(&c_mat.view())).mapv(|z| z * 0.5);
    Ok(CovarianceMatrix { entries: herm })
}

fn solve_in_eigenbasis(eig: &BiorthogonalEig, rhs: &Array2<C64>) -> Array2<C64> {
    // X = V L V^-1, so C = V Ct V^dag with L Ct + Ct conj(L) = V^-1 R V^-dag.
    let v = &eig.right;
    let vinv = &eig.left;
    let rt = vinv.dot(rhs).dot(&linalg::adjoint(&vinv.view()));
    let lam = &eig.values;
    let ct = Array2::from_shape_fn(rt.dim(), |(a, b)| rt[[a, b]] / (lam[a] + lam[b].conj()));
    v.dot(&ct).dot(&linalg::adjoint(&v.view()))
}

fn solve_dense(x: &Array2<C64>, rhs: &Array2<C64>) -> Result<Array2<C64>> {
    use ndarray_linalg::Solve;
    let n = x.nrows();
    let id = linalg::identity(n);
    // Column stacking: vec(XC) = (1 (x) X) vec C, vec(C X^dag) = (conj(X) (x) 1) vec C.
    let op = kron(&id.view(), &x.view()) + kron(&x.mapv(|z| z.conj()).view(), &id.view());
    let b = Array1::from_shape_fn(n * n, |p| rhs[[p % n, p / n]]);
    let sol = op.solve(&b)?;
    Ok(Array2::from_shape_fn((n, n), |(i, j)| sol[j * n + i]))
}

fn covariance_residual(x: &Array2<C64>, cm: &Array2<C64>, rhs: &Array2<C64>) -> f64 {
    let r = x.dot(cm) + cm.dot(&linalg::adjoint(&x.view())) - rhs;
    linalg::max_abs(&r.view())
}

/// Steady-state covariance of the chain.
pub fn ness_covariance(config: &ModelConfig, disorder: Option<&DisorderRealization>) -> Result<CovarianceMatrix> {
    let h = linalg::to_complex(&hopping_matrix(config, disorder)?);
    covariance_from_parts(&h, &Reservoirs::from_config(config))
}

/// Site occupations `Re C_mm`; fails if a diagonal entry is not real or leaves `[0, 1]`.
pub fn ness_occupation(cov: &CovarianceMatrix) -> Result<OccupationProfile> {
    const TOL: f64 = 1e-8;
    let mut sites = Vec::with_capacity(cov.entries.nrows());
    for (m, z) in cov.entries.diag().iter().enumerate() {
        if z.im.abs() > TOL {
            return Err(Error::Linalg(format!("occupation of site {} has imaginary part {:e}", m + 1, z.im)));
        }
        if z.re < -TOL || z.re > 1.0 + TOL {
            return Err(Error::Linalg(format!("occupation of site {} is {} (outside [0, 1])", m + 1, z.re)));
        }
        sites.push(z.re.clamp(0.0, 1.0));
    }
    Ok(OccupationProfile { sites })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::apply_disorder;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn ring(n: usize, theta: f64, gamma: f64) -> ModelConfig {
        ModelConfig::unit(n, theta, gamma, Boundary::Periodic, Pattern::U2).unwrap()
    }

    #[test]
    fn majorana_hamiltonian_structure() {
        let cfg = ModelConfig::with_hoppings(2, 0.5, 1.0, 0.0, Boundary::Open, Pattern::None).unwrap();
        let hm = majorana_hamiltonian(&cfg, None).unwrap();
        assert!(linalg::max_abs(&(&hm + &hm.t()).view()) == 0.0);
        // Only the inter-site Majorana blocks are populated.
        assert_eq!(hm.slice(s![0..2, 0..2]).iter().filter(|z| z.norm() > 0.0).count(), 0);
        assert!(hm.slice(s![0..2, 2..4]).iter().any(|z| z.norm() > 0.0));
        let zero = ModelConfig::with_hoppings(4, 0.0, 0.0 + 1e-300, 0.0, Boundary::Open, Pattern::None);
        if let Ok(zc) = zero {
            let hm = majorana_hamiltonian(&zc, None).unwrap();
            assert!(linalg::max_abs(&hm.view()) < 1e-299);
        }
    }

    #[test]
    fn lindblad_vector_counts() {
        let u1 = ModelConfig::unit(4, 1.0, 0.7, Boundary::Open, Pattern::U1).unwrap();
        let v = lindblad_vectors(&u1);
        assert_eq!(v.len(), 2);
        assert!(v[0][0].norm() > 0.0 && v[1][6].norm() > 0.0);
        let u2 = ModelConfig::unit(4, 1.0, 0.7, Boundary::Open, Pattern::U2).unwrap();
        let v = lindblad_vectors(&u2);
        assert_eq!(v.len(), 4);
        assert!(v[0][1].im > 0.0 && v[1][3].im < 0.0);
        assert!(lindblad_vectors(&u2.with_gamma(0.0)).iter().all(|l| l.iter().all(|z| z.norm() == 0.0)));
    }

    #[test]
    fn shape_matrix_matches_banded_form() {
        for &(n, boundary) in &[(4, Boundary::Periodic), (8, Boundary::Periodic), (6, Boundary::Open)] {
            let cfg = ModelConfig::unit(n, PI / 3.0, 0.7, boundary, Pattern::U2).unwrap();
            let a = build_shape_matrix(&cfg, None).unwrap();
            assert_eq!(linalg::max_abs(&(&a.entries + &a.entries.t()).view()), 0.0);
            let b = banded_shape_matrix_u2(&cfg, None).unwrap();
            assert!(linalg::max_abs(&(&a.entries - &b.entries).view()) < 1e-12);
        }
    }

    #[test]
    fn bloch_liouvillean_is_fourier_block() {
        for n in [8usize, 16] {
            let cfg = ring(n, 1.1, 0.8);
            let a = build_shape_matrix(&cfg, None).unwrap().entries;
            let cells = n / 2;
            for q in 0..cells {
                let k = 2.0 * PI * q as f64 / cells as f64;
                // Columns e^{-ijk} / sqrt(cells) over cells j, tensored with the 8 cell components.
                let mut u = Array2::<C64>::zeros((4 * n, 8));
                for j in 0..cells {
                    let ph = C64::from_polar(1.0 / (cells as f64).sqrt(), -(j as f64) * k);
                    for r in 0..8 {
                        u[[8 * j + r, r]] = ph;
                    }
                }
                let block = linalg::adjoint(&u.view()).dot(&a).dot(&u);
                let bl = build_bloch_liouvillean(&cfg, k).unwrap();
                assert!(linalg::max_abs(&(&block - &bl).view()) < 1e-10);
                // The momentum block is invariant: A u = u B.
                let leak = a.dot(&u) - u.dot(&bl);
                assert!(linalg::max_abs(&leak.view()) < 1e-10);
            }
        }
    }

    #[test]
    fn bloch_liouvillean_examples() {
        let flat = ring(2, PI / 2.0, 0.0);
        let bl = build_bloch_liouvillean(&flat, 0.0).unwrap();
        let ev = linalg::eigenvalues(&bl).unwrap();
        assert!(ev.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12 && z.re.abs() < 1e-12));
        let u1 = ModelConfig::unit(4, 1.0, 0.3, Boundary::Open, Pattern::U1).unwrap();
        assert!(build_bloch_liouvillean(&u1, 0.0).is_err());
        let bl = build_bloch_liouvillean(&ring(2, 1.0, 0.0), 0.4).unwrap();
        assert_eq!(bl.slice(s![0..4, 0..4]).iter().filter(|z| z.norm() > 0.0).count(), 0);
    }

    #[test]
    fn analytic_examples() {
        let cfg = ring(4, PI / 3.0, 1.0);
        let b = analytic_rapidities_u2_ring(&cfg).unwrap();
        assert_eq!(b.len(), 8);
        // k = 0 gives E = 2, k = pi gives E = 1.
        for target in [c(0.5, 1.0), c(0.5, -1.0), c(0.5, 0.5), c(0.5, -0.5)] {
            assert_eq!(b.iter().filter(|z| (**z - target).norm() < 1e-14).count(), 2);
        }
    }

    #[test]
    fn ring_rapidities_match_closed_form() {
        for &theta in &[PI / 6.0, 2.0 * PI / 3.0] {
            for &gamma in &[0.5, 2.0] {
                let cfg = ring(16, theta, gamma);
                let r = rapidities(&build_shape_matrix(&cfg, None).unwrap()).unwrap();
                let exact = analytic_rapidities_u2_ring(&cfg).unwrap();
                assert!(linalg::multiset_distance(&r.betas, &exact) < 1e-9);
                assert!(r.betas.iter().all(|b| (b.re - gamma / 2.0).abs() < 1e-9));
                assert!(r.unique_ness);
            }
        }
    }

    #[test]
    fn hermitian_limit_rapidities() {
        let cfg = ring(12, PI / 3.0, 0.0);
        let r = rapidities(&build_shape_matrix(&cfg, None).unwrap()).unwrap();
        assert!(!r.unique_ness);
        assert!(r.betas.iter().all(|b| b.re.abs() < 1e-10));
        // Without dissipation +-i E / 2 are both "positive" members; compare all eigenvalues.
        let mut exact = analytic_rapidities_u2_ring(&cfg).unwrap();
        exact.extend(exact.clone().iter().map(|z| -z));
        assert!(linalg::multiset_distance(&r.eigenvalues, &exact) < 1e-9);
    }

    #[test]
    fn pairing_failure_is_reported() {
        let a = Array2::from_diag(&Array1::from(vec![c(1.0, 0.0), c(2.0, 0.0)]));
        assert!(matches!(rapidities_of(&a), Err(Error::Pairing { .. })));
    }

    #[test]
    fn decoupled_sites_fill_and_empty() {
        let h = Array2::<C64>::zeros((2, 2));
        let res = Reservoirs { gain: vec![0.8, 0.0], loss: vec![0.0, 0.8] };
        let cov = covariance_from_parts(&h, &res).unwrap();
        assert!((cov.entries[[0, 0]] - ONE).norm() < 1e-14);
        assert!(cov.entries[[1, 1]].norm() < 1e-14);
        assert!(cov.entries[[0, 1]].norm() < 1e-14);
    }

    #[test]
    fn covariance_singular_without_dissipation() {
        let cfg = ring(4, 1.0, 0.0);
        assert!(matches!(ness_covariance(&cfg, None), Err(Error::NonUniqueSteadyState(_))));
    }

    #[test]
    fn eigenbasis_and_dense_solves_agree() {
        let cfg = ModelConfig::unit(10, 2.0 * PI / 3.0, 1.3, Boundary::Open, Pattern::U1).unwrap();
        let h = linalg::to_complex(&hopping_matrix(&cfg, None).unwrap());
        let res = Reservoirs::from_config(&cfg);
        let fast = covariance_from_parts(&h, &res).unwrap();
        let mut x = h.t().mapv(|z| -I * z);
        let mut rhs = Array2::<C64>::zeros((10, 10));
        for m in 0..10 {
            x[[m, m]] += c(res.gain[m] + res.loss[m], 0.0);
            rhs[[m, m]] = c(2.0 * res.gain[m], 0.0);
        }
        let dense = solve_dense(&x, &rhs).unwrap();
        assert!(linalg::max_abs(&(&fast.entries - &dense).view()) < 1e-12);
    }

    #[test]
    fn u2_ness_is_half_filled_and_staggered() {
        let cfg = ModelConfig::unit(64, PI / 3.0, 2.5, Boundary::Open, Pattern::U2).unwrap();
        let occ = ness_occupation(&ness_covariance(&cfg, None).unwrap()).unwrap();
        assert_abs_diff_eq!(occ.total(), 32.0, epsilon = 1e-8);
        // Measured: gain sites >= 0.8598, loss sites <= 0.1402.
        assert!(occ.sublattice_a().all(|x| x > 0.85));
        assert!(occ.sublattice_b().all(|x| x < 0.15));
        let strong = ness_occupation(&ness_covariance(&cfg.with_gamma(25.0), None).unwrap()).unwrap();
        assert!(strong.sublattice_a().all(|x| x > 0.99));
        assert!(strong.sublattice_b().all(|x| x < 0.01));
    }

    #[test]
    fn u1_edges_pinned_at_strong_dissipation() {
        let cfg = ModelConfig::unit(64, 2.0 * PI / 3.0, 4.0, Boundary::Open, Pattern::U1).unwrap();
        let occ = ness_occupation(&ness_covariance(&cfg, None).unwrap()).unwrap();
        assert!(occ.sites[0] < 0.1);
        assert!(occ.sites[63] > 0.9);
    }

    #[test]
    fn disorder_closes_liouvillean_gap_at_half() {
        let cfg = ring(16, PI / 3.0, 0.5);
        let d = apply_disorder(&cfg, 0.5, &[1.0; 8]).unwrap();
        let r = rapidities(&build_shape_matrix(&cfg, Some(&d)).unwrap()).unwrap();
        assert!(r.min_abs_im() < 1e-9);
        let d = apply_disorder(&cfg, 0.3, &[1.0; 8]).unwrap();
        let r = rapidities(&build_shape_matrix(&cfg, Some(&d)).unwrap()).unwrap();
        assert_abs_diff_eq!(r.min_abs_im(), 0.2, epsilon = 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn antisymmetric_and_paired(theta in 0.05f64..3.1, gamma in 0.0f64..3.0, u1 in any::<bool>(), periodic in any::<bool>()) {
            let (pattern, boundary) = if u1 {
                (Pattern::U1, Boundary::Open)
            } else {
                (Pattern::U2, if periodic { Boundary::Periodic } else { Boundary::Open })
            };
            let cfg = ModelConfig::unit(12, theta, gamma, boundary, pattern).unwrap();
            let a = build_shape_matrix(&cfg, None).unwrap();
            prop_assert_eq!(linalg::max_abs(&(&a.entries + &a.entries.t()).view()), 0.0);
            let r = rapidities(&a).unwrap();
            prop_assert_eq!(r.betas.len(), 24);
            prop_assert!(r.betas.iter().all(|b| b.re >= -1e-9));
            if gamma > 0.05 {
                prop_assert!(r.unique_ness);
            }
        }

        #[test]
        fn covariance_is_physical(theta in 0.05f64..3.1, gamma in 0.05f64..4.0, u1 in any::<bool>()) {
            let pattern = if u1 { Pattern::U1 } else { Pattern::U2 };
            let cfg = ModelConfig::unit(16, theta, gamma, Boundary::Open, pattern).unwrap();
            let cov = ness_covariance(&cfg, None).unwrap();
            let herm_err = linalg::max_abs(&(&cov.entries - &linalg::adjoint(&cov.entries.view())).view());
            prop_assert!(herm_err < 1e-12);
            let ev = linalg::eigenvalues(&cov.entries).unwrap();
            prop_assert!(ev.iter().all(|z| z.re > -1e-8 && z.re < 1.0 + 1e-8));
            if !u1 {
                let occ = ness_occupation(&cov).unwrap();
                prop_assert!((occ.total() - 8.0).abs() < 1e-8);
            }
        }
    }
}
