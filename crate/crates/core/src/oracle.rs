//! Brute-force Fock-space reference: many-body Hamiltonians, the dense
//! Liouvillean superoperator, its steady state and time evolution.
//!
//! Jordan–Wigner ordering: site 0 is the leftmost tensor factor and the
//! parity string acts on the sites to the left, `c_i = Z^(i) (x) a (x) 1`
//! with `a = |0><1|`. Basis state `s` has site `i` occupied iff bit
//! `n - 1 - i` of `s` is set. Density matrices are column-stacked:
//! `vec(rho)[a + D b] = rho[a, b]`.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, SVD, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::effective::build_real_space_hamiltonian;
use crate::lattice::{hopping_matrix, ModelConfig};
use crate::linalg::{self, c, ZERO};

pub const MAX_FOCK_SITES: usize = 8;
pub const MAX_LIOUVILLE_SITES: usize = 6;

/// Many-body Hamiltonian plus Lindblad operators.
#[derive(Clone, Debug)]
pub struct FockModel {
    pub n: usize,
    pub hamiltonian: Array2<C64>,
    pub jumps: Vec<Array2<C64>>,
}

#[derive(Clone, Debug)]
pub struct Superoperator {
    pub n: usize,
    pub dim: usize,
    pub entries: Array2<C64>,
}

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    pub dim: usize,
    pub entries: Array2<C64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `occupations[step][site]`.
    pub occupations: Vec<Vec<f64>>,
    pub trace_distance: Vec<f64>,
    /// Decay rate from a log-linear fit over the tail, if enough points lie above the noise floor.
    pub fitted_rate: Option<f64>,
}

fn guard(n: usize, max: usize) -> Result<()> {
    if n == 0 || n > max {
        return Err(Error::SizeGuard(format!("{n} sites exceeds the dense limit of {max}")));
    }
    Ok(())
}

/// Annihilation operators `c_0 .. c_{n-1}` on the `2^n`-dimensional Fock space.
pub fn annihilators(n: usize) -> Result<Vec<Array2<C64>>> {
    guard(n, MAX_FOCK_SITES)?;
    let dim = 1usize << n;
    let mut ops = Vec::with_capacity(n);
    for i in 0..n {
        let bit = 1usize << (n - 1 - i);
        let mut m = Array2::<C64>::zeros((dim, dim));
        for s in 0..dim {
            if s & bit != 0 {
                // Sign from occupied sites to the left of i (higher bits).
                let left = (s >> (n - i)).count_ones();
                let sign = if left % 2 == 0 { 1.0 } else { -1.0 };
                m[[s ^ bit, s]] = c(sign, 0.0);
            }
        }
        ops.push(m);
    }
    Ok(ops)
}

/// `sum_ij h_ij c_i^dag c_j` for an arbitrary single-particle matrix.
pub fn second_quantize(single: &Array2<C64>) -> Result<Array2<C64>> {
    let n = single.nrows();
    let cs = annihilators(n)?;
    let dim = 1usize << n;
    let mut out = Array2::<C64>::zeros((dim, dim));
    for i in 0..n {
        let cd = linalg::adjoint(&cs[i].view());
        for j in 0..n {
            if single[[i, j]] != ZERO {
                out = out + cd.dot(&cs[j]).mapv(|z| z * single[[i, j]]);
            }
        }
    }
    Ok(out)
}

/// Many-body form of the (possibly non-Hermitian) real-space Hamiltonian.
pub fn fock_hamiltonian(config: &ModelConfig) -> Result<Array2<C64>> {
    guard(config.n, MAX_FOCK_SITES)?;
    second_quantize(&build_real_space_hamiltonian(config, None)?.entries)
}

/// Number operator eigenvalue of site `i` in basis state `s`.
pub fn occupied(n: usize, s: usize, i: usize) -> bool {
    s & (1usize << (n - 1 - i)) != 0
}

impl FockModel {
    /// Hopping Hamiltonian with `sqrt(g) c^dag` on gain sites and `sqrt(l) c` on loss sites.
    pub fn from_parts(h: &Array2<C64>, gain: &[f64], loss: &[f64]) -> Result<Self> {
        let n = h.nrows();
        let cs = annihilators(n)?;
        let hamiltonian = second_quantize(h)?;
        let mut jumps = Vec::new();
        for m in 0..n {
            if gain[m] > 0.0 {
                jumps.push(linalg::adjoint(&cs[m].view()).mapv(|z| z * gain[m].sqrt()));
            }
            if loss[m] > 0.0 {
                jumps.push(cs[m].mapv(|z| z * loss[m].sqrt()));
            }
        }
        Ok(Self { n, hamiltonian, jumps })
    }

    pub fn from_config(config: &ModelConfig) -> Result<Self> {
        guard(config.n, MAX_FOCK_SITES)?;
        let h = linalg::to_complex(&hopping_matrix(config, None)?);
        Self::from_parts(&h, &config.gain_rates(), &config.loss_rates())
    }

    /// One site coupled to a gain (`gain = true`) or loss reservoir.
    pub fn single_site(gamma: f64, gain: bool) -> Result<Self> {
        let h = Array2::zeros((1, 1));
        let (g, l) = if gain { (vec![gamma], vec![0.0]) } else { (vec![0.0], vec![gamma]) };
        Self::from_parts(&h, &g, &l)
    }

    pub fn hilbert_dim(&self) -> usize {
        1usize << self.n
    }

    /// `-i[H, rho] + sum (2 L rho L^dag - {L^dag L, rho})`, evaluated directly.
    pub fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        let h = &self.hamiltonian;
        let mut out = (h.dot(rho) - rho.dot(h)).mapv(|z| z * c(0.0, -1.0));
        for l in &self.jumps {
            let ld = linalg::adjoint(&l.view());
            let k = ld.dot(l);
            out = out + l.dot(rho).dot(&ld).mapv(|z| z * 2.0) - k.dot(rho) - rho.dot(&k);
        }
        out
    }

    /// Liouvillean restricted to the basis pairs `(a, b)` listed in `basis`,
    /// which must be closed under the dynamics.
    fn restricted_matrix(&self, basis: &[(usize, usize)]) -> Array2<C64> {
        let d = self.hilbert_dim();
        let mut index = vec![usize::MAX; d * d];
        for (p, &(a, b)) in basis.iter().enumerate() {
            index[a + d * b] = p;
        }
        // J = -i H - sum L^dag L acts from the left; J^dag from the right.
        let mut j = self.hamiltonian.mapv(|z| z * c(0.0, -1.0));
        for l in &self.jumps {
            j = j - linalg::adjoint(&l.view()).dot(l);
        }
        let cols = |m: &Array2<C64>| -> Vec<Vec<(usize, C64)>> {
            (0..d)
                .map(|col| (0..d).filter(|&r| m[[r, col]] != ZERO).map(|r| (r, m[[r, col]])).collect())
                .collect()
        };
        let j_cols = cols(&j);
        let l_cols: Vec<_> = self.jumps.iter().map(cols).collect();
        let mut out = Array2::<C64>::zeros((basis.len(), basis.len()));
        for (p, &(a, b)) in basis.iter().enumerate() {
            let mut add = |a2: usize, b2: usize, v: C64| {
                let q = index[a2 + d * b2];
                debug_assert!(q != usize::MAX, "basis not closed under the Liouvillean");
                out[[q, p]] += v;
            };
            for &(a2, v) in &j_cols[a] {
                add(a2, b, v);
            }
            for &(b2, v) in &j_cols[b] {
                add(a, b2, v.conj());
            }
            for lc in &l_cols {
                for &(a2, va) in &lc[a] {
                    for &(b2, vb) in &lc[b] {
                        add(a2, b2, va * vb.conj() * 2.0);
                    }
                }
            }
        }
        out
    }

    /// Pairs `(a, b)` with equal particle number, the sector holding every steady state.
    fn balanced_sector(&self) -> Vec<(usize, usize)> {
        let d = self.hilbert_dim();
        let mut basis = Vec::new();
        for b in 0..d {
            for a in 0..d {
                if a.count_ones() == b.count_ones() {
                    basis.push((a, b));
                }
            }
        }
        basis
    }

    /// Unique steady state from the null vector of the balanced-sector Liouvillean.
    pub fn steady_state(&self) -> Result<DensityMatrix> {
        guard(self.n, MAX_LIOUVILLE_SITES)?;
        let basis = self.balanced_sector();
        let m = self.restricted_matrix(&basis);
        let d = self.hilbert_dim();
        let rho = null_vector_to_density(&m, &basis, d)?;
        let residual = linalg::max_abs(&self.apply(&rho.entries).view());
        if residual > 1e-10 {
            return Err(Error::Linalg(format!("steady-state residual {residual:e} above 1e-10")));
        }
        Ok(rho)
    }
}

fn null_vector_to_density(m: &Array2<C64>, basis: &[(usize, usize)], d: usize) -> Result<DensityMatrix> {
    let (_, sv, vt) = m.svd(false, true)?;
    let vt = vt.ok_or_else(|| Error::Linalg("SVD returned no right vectors".into()))?;
    let k = sv.len();
    let smax = sv[0].max(f64::MIN_POSITIVE);
    if k >= 2 && sv[k - 2] <= 1e-9 * smax {
        return Err(Error::NonUniqueSteadyState(format!(
            "second smallest singular value {:e} (largest {:e})",
            sv[k - 2], smax
        )));
    }
    let null = vt.row(k - 1).mapv(|z| z.conj());
    let mut rho = Array2::<C64>::zeros((d, d));
    for (p, &(a, b)) in basis.iter().enumerate() {
        rho[[a, b]] = null[p];
    }
    let rho = (&rho + &linalg::adjoint(&rho.view())).mapv(|z| z * 0.5);
    let tr: C64 = rho.diag().sum();
    if tr.norm() < 1e-14 {
        return Err(Error::Linalg("steady-state null vector is traceless".into()));
    }
    Ok(DensityMatrix { dim: d, entries: rho.mapv(|z| z / tr) })
}

/// Full column-stacked Liouvillean of the chain.
pub fn dense_liouvillean(config: &ModelConfig) -> Result<Superoperator> {
    guard(config.n, MAX_LIOUVILLE_SITES)?;
    dense_liouvillean_of(&FockModel::from_config(config)?)
}

pub fn dense_liouvillean_of(model: &FockModel) -> Result<Superoperator> {
    guard(model.n, MAX_LIOUVILLE_SITES)?;
    let d = model.hilbert_dim();
    let basis: Vec<(usize, usize)> = (0..d * d).map(|p| (p % d, p / d)).collect();
    Ok(Superoperator { n: model.n, dim: d * d, entries: model.restricted_matrix(&basis) })
}

impl Superoperator {
    pub fn hilbert_dim(&self) -> usize {
        1usize << self.n
    }

    pub fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        let d = self.hilbert_dim();
        let v = Array1::from_shape_fn(d * d, |p| rho[[p % d, p / d]]);
        let w = self.entries.dot(&v);
        Array2::from_shape_fn((d, d), |(a, b)| w[a + d * b])
    }

    /// `|vec(1)^T L|`, zero for a trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let d = self.hilbert_dim();
        let mut worst: f64 = 0.0;
        for col in 0..self.dim {
            let s: C64 = (0..d).map(|a| self.entries[[a + d * a, col]]).sum();
            worst = worst.max(s.norm());
        }
        worst
    }
}

/// Null-space steady state of a dense superoperator.
pub fn oracle_steady_state(superop: &Superoperator) -> Result<DensityMatrix> {
    let d = superop.hilbert_dim();
    let basis: Vec<(usize, usize)> =
        (0..d * d).map(|p| (p % d, p / d)).filter(|(a, b)| a.count_ones() == b.count_ones()).collect();
    let idx: Vec<usize> = basis.iter().map(|&(a, b)| a + d * b).collect();
    let sub = Array2::from_shape_fn((idx.len(), idx.len()), |(i, j)| superop.entries[[idx[i], idx[j]]]);
    let rho = null_vector_to_density(&sub, &basis, d)?;
    let residual = linalg::max_abs(&superop.apply(&rho.entries).view());
    if residual > 1e-10 {
        return Err(Error::Linalg(format!("steady-state residual {residual:e} above 1e-10")));
    }
    Ok(rho)
}

impl DensityMatrix {
    pub fn n_sites(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn site_occupations(&self) -> Vec<f64> {
        let n = self.n_sites();
        (0..n)
            .map(|i| (0..self.dim).filter(|&s| occupied(n, s, i)).map(|s| self.entries[[s, s]].re).sum())
            .collect()
    }

    pub fn trace(&self) -> C64 {
        self.entries.diag().sum()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let (vals, _) = self.entries.eigh(UPLO::Lower)?;
        Ok(vals.iter().copied().fold(f64::INFINITY, f64::min))
    }

    /// Density matrix of a single Fock basis state.
    pub fn basis_state(n: usize, s: usize) -> Self {
        let dim = 1usize << n;
        let mut entries = Array2::zeros((dim, dim));
        entries[[s, s]] = c(1.0, 0.0);
        Self { dim, entries }
    }
}

/// `(1/2) |a - b|_1` for Hermitian matrices.
pub fn trace_distance(a: &Array2<C64>, b: &Array2<C64>) -> Result<f64> {
    let diff = a - b;
    let herm = (&diff + &linalg::adjoint(&diff.view())).mapv(|z| z * 0.5);
    let (vals, _) = herm.eigh(UPLO::Lower)?;
    Ok(0.5 * vals.iter().map(|x| x.abs()).sum::<f64>())
}

/// Evolves `rho0` for `steps` equal steps up to time `t_final` with the exact
/// propagator `exp(L dt)`.
pub fn oracle_time_evolution(
    superop: &Superoperator,
    rho0: &DensityMatrix,
    t_final: f64,
    steps: usize,
) -> Result<Trajectory> {
    if steps == 0 || !(t_final > 0.0) {
        return Err(Error::InvalidConfig("time evolution needs steps >= 1 and T > 0".into()));
    }
    let d = superop.hilbert_dim();
    let dt = t_final / steps as f64;
    let prop = linalg::expm(&superop.entries.mapv(|z| z * dt))?;
    let ness = oracle_steady_state(superop).ok();
    let mut v = Array1::from_shape_fn(d * d, |p| rho0.entries[[p % d, p / d]]);
    let mut traj = Trajectory { times: Vec::new(), occupations: Vec::new(), trace_distance: Vec::new(), fitted_rate: None };
    for step in 0..=steps {
        if step > 0 {
            v = prop.dot(&v);
        }
        let rho = DensityMatrix { dim: d, entries: Array2::from_shape_fn((d, d), |(a, b)| v[a + d * b]) };
        traj.times.push(step as f64 * dt);
        traj.occupations.push(rho.site_occupations());
        let dist = match &ness {
            Some(ness) => trace_distance(&rho.entries, &ness.entries)?,
            None => f64::NAN,
        };
        traj.trace_distance.push(dist);
    }
    traj.fitted_rate = fit_decay_rate(&traj.times, &traj.trace_distance);
    Ok(traj)
}

/// Least-squares slope of `-log(y)` against `t` over the second half of the
/// samples that lie above `1e-11`.
pub fn fit_decay_rate(t: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = t.iter().zip(y).filter(|(_, y)| **y > 1e-11 && y.is_finite()).map(|(t, y)| (*t, y.ln())).collect();
    let tail = &pts[pts.len() / 2..];
    if tail.len() < 3 {
        return None;
    }
    let m = tail.len() as f64;
    let (st, sy) = tail.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
    let (mt, my) = (st / m, sy / m);
    let (num, den) = tail.iter().fold((0.0, 0.0), |(n, d), (t, y)| (n + (t - mt) * (y - my), d + (t - mt) * (t - mt)));
    if den == 0.0 {
        return None;
    }
    Some(-num / den)
}
