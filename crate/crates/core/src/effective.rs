//! PT-symmetric effective Hamiltonians of the dissipative chain.
//!
//! Gain and loss enter as imaginary on-site potentials `+i gamma` and
//! `-i gamma`. Spectra are biorthogonal: right vectors are the columns of
//! [`SpectrumResult::right_vectors`], left vectors the rows of
//! [`SpectrumResult::left_vectors`], paired so that `<chi_m|phi_l> = delta_ml`.

use ndarray::{Array1, Array2, Axis};
use ndarray_linalg::Norm;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{hopping_amplitudes, hopping_matrix, DisorderRealization, ModelConfig, OccupationProfile, Pattern};
use crate::linalg::{self, biorthogonal_eig, c, lex_cmp, match_multisets, max_abs};

/// Default PT tolerance, relative to `max(1, spectral radius)`.
pub const PT_TOL: f64 = 1e-10;
/// Overlap ratio below which a biorthogonal pair counts as self-orthogonal.
pub const DEFECTIVE_RATIO: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorLabel {
    #[serde(rename = "realspace_H")]
    RealspaceH,
    #[serde(rename = "bloch_H")]
    BlochH,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexOperator {
    pub dim: usize,
    pub entries: Array2<C64>,
    pub label: OperatorLabel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PtClass {
    Real,
    GainBroken,
    LossBroken,
}

impl PtClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            PtClass::Real => "real",
            PtClass::GainBroken => "gain_broken",
            PtClass::LossBroken => "loss_broken",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    /// Sorted lexicographically by (Re, Im).
    pub eigenvalues: Vec<C64>,
    /// Unit-norm right eigenvectors, one per column.
    pub right_vectors: Array2<C64>,
    /// Left eigenvectors, one per row, with `<chi_m|phi_m> = 1`.
    pub left_vectors: Array2<C64>,
    pub pt_class: Vec<PtClass>,
    /// `|<chi|phi>| / (|chi| |phi|)` before normalization.
    pub overlap_ratio: Vec<f64>,
    /// Largest `|H phi - E phi| / |H|` over all modes.
    pub max_residual: f64,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn is_defective(&self, m: usize) -> bool {
        self.overlap_ratio[m] < DEFECTIVE_RATIO
    }

    /// Fails on the first self-orthogonal pair.
    pub fn require_nondefective(&self) -> Result<()> {
        match (0..self.len()).find(|&m| self.is_defective(m)) {
            Some(index) => Err(Error::Defective { index, ratio: self.overlap_ratio[index] }),
            None => Ok(()),
        }
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Real-space single-particle Hamiltonian, optionally with disordered hoppings.
pub fn build_real_space_hamiltonian(
    config: &ModelConfig,
    disorder: Option<&DisorderRealization>,
) -> Result<ComplexOperator> {
    let h = hopping_matrix(config, disorder)?;
    let mut entries = linalg::to_complex(&h);
    for (i, v) in config.onsite_imaginary().into_iter().enumerate() {
        entries[[i, i]] += c(0.0, v);
    }
    Ok(ComplexOperator { dim: config.n, entries, label: OperatorLabel::RealspaceH })
}

/// 2x2 Bloch Hamiltonian `[[i g, -t1 - t2 e^{ik}], [-t1 - t2 e^{-ik}, -i g]]`.
pub fn build_bloch_hamiltonian(config: &ModelConfig, k: f64) -> Result<ComplexOperator> {
    config.validate()?;
    let g = match config.pattern {
        Pattern::U1 => return Err(Error::Unsupported("the U1 pattern is not translation invariant".into())),
        Pattern::None => 0.0,
        Pattern::U2 => config.gamma,
    };
    let (t1, t2) = hopping_amplitudes(config);
    let off = -(c(t1, 0.0) + C64::from_polar(t2, k));
    let entries = ndarray::array![[c(0.0, g), off], [off.conj(), c(0.0, -g)]];
    Ok(ComplexOperator { dim: 2, entries, label: OperatorLabel::BlochH })
}

/// Closed-form Bloch bands `+-sqrt(t1^2 + t2^2 + 2 t1 t2 cos k - g^2)` (principal root).
pub fn bloch_band_energies(config: &ModelConfig, k: f64) -> Result<(C64, C64)> {
    config.validate()?;
    let g = match config.pattern {
        Pattern::U1 => return Err(Error::Unsupported("the U1 pattern is not translation invariant".into())),
        Pattern::None => 0.0,
        Pattern::U2 => config.gamma,
    };
    let (t1, t2) = hopping_amplitudes(config);
    let e = c(t1 * t1 + t2 * t2 + 2.0 * t1 * t2 * k.cos() - g * g, 0.0).sqrt();
    Ok((e, -e))
}

/// Full biorthogonal eigendecomposition, sorted by (Re, Im).
///
/// Self-orthogonal pairs are reported through `overlap_ratio`; the other
/// modes are returned normally.
pub fn complex_spectrum(op: &ComplexOperator) -> Result<SpectrumResult> {
    if op.dim < 1 {
        return Err(Error::Linalg("empty operator".into()));
    }
    let eig = biorthogonal_eig(&op.entries)?;
    let mut order: Vec<usize> = (0..op.dim).collect();
    order.sort_by(|&a, &b| lex_cmp(&eig.values[a], &eig.values[b]));
    let eigenvalues: Vec<C64> = order.iter().map(|&m| eig.values[m]).collect();
    let right_vectors = eig.right.select(Axis(1), &order);
    let left_vectors = eig.left.select(Axis(0), &order);
    let overlap_ratio: Vec<f64> = order.iter().map(|&m| eig.overlap_ratio[m]).collect();

    let h_norm = linalg::frobenius(&op.entries.view()).max(f64::MIN_POSITIVE);
    let mut max_residual: f64 = 0.0;
    for (m, e) in eigenvalues.iter().enumerate() {
        let phi = right_vectors.column(m);
        let r = op.entries.dot(&phi) - phi.mapv(|z| z * e);
        max_residual = max_residual.max(r.norm_l2() / h_norm);
    }
    let scale = eigenvalues.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let pt_class = eigenvalues.iter().map(|e| pt_class_of(*e, PT_TOL * scale)).collect();
    Ok(SpectrumResult { eigenvalues, right_vectors, left_vectors, pt_class, overlap_ratio, max_residual })
}

/// `Real` iff `|Im E| <= tol`, otherwise the sign of `Im E` picks gain or loss.
pub fn pt_class_of(e: C64, tol: f64) -> PtClass {
    if e.im > tol {
        PtClass::GainBroken
    } else if e.im < -tol {
        PtClass::LossBroken
    } else {
        PtClass::Real
    }
}

/// `Lambda = Sigma_x Sigma_z`: anti-diagonal with entries `(-1)^i` in row `i`.
pub fn lambda_operator(n: usize) -> Array2<C64> {
    let mut l = Array2::zeros((n, n));
    for i in 0..n {
        l[[i, n - 1 - i]] = c(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
    }
    l
}

/// Checks `Lambda^dag H Lambda = -H` entrywise and that the spectrum is
/// symmetric under `E -> -E`, both within `tol`.
pub fn check_lambda_symmetry(op: &ComplexOperator, spectrum: &SpectrumResult, tol: f64) -> bool {
    let l = lambda_operator(op.dim);
    let conj = linalg::adjoint(&l.view()).dot(&op.entries).dot(&l);
    if max_abs(&(&conj + &op.entries).view()) > tol {
        return false;
    }
    let neg: Vec<C64> = spectrum.eigenvalues.iter().map(|z| -z).collect();
    match_multisets(&spectrum.eigenvalues, &neg, tol).is_some()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtClassification {
    pub classes: Vec<PtClass>,
    pub unbroken: bool,
}

/// A mode is real iff `|Im E| <= tol_im * max(1, spectral radius)`.
pub fn classify_pt(spectrum: &SpectrumResult, tol_im: f64) -> PtClassification {
    let tol = tol_im * spectrum.spectral_radius().max(1.0);
    let classes: Vec<PtClass> = spectrum.eigenvalues.iter().map(|e| pt_class_of(*e, tol)).collect();
    let unbroken = classes.iter().all(|c| *c == PtClass::Real);
    PtClassification { classes, unbroken }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeRationale {
    NegativeRealEnergy,
    GainFilled,
    LossEmptied,
    Unoccupied,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSelection {
    pub occupied: Vec<usize>,
    pub rationale: Vec<ModeRationale>,
    /// Set when some mode has `|E| <= tol`, so the filling is ambiguous.
    pub non_unique: bool,
}

/// Maximally PT-broken ground state: fill modes with `Im E > 0`, empty those
/// with `Im E < 0`, and fill real modes with `Re E <= 0`.
pub fn construct_mbs(spectrum: &SpectrumResult, tol: f64) -> ModeSelection {
    let mut occupied = Vec::new();
    let mut rationale = Vec::with_capacity(spectrum.len());
    for (m, e) in spectrum.eigenvalues.iter().enumerate() {
        let r = if e.im > tol {
            ModeRationale::GainFilled
        } else if e.im < -tol {
            ModeRationale::LossEmptied
        } else if e.re <= tol {
            ModeRationale::NegativeRealEnergy
        } else {
            ModeRationale::Unoccupied
        };
        if matches!(r, ModeRationale::GainFilled | ModeRationale::NegativeRealEnergy) {
            occupied.push(m);
        }
        rationale.push(r);
    }
    let non_unique = spectrum.eigenvalues.iter().any(|e| e.norm() <= tol);
    ModeSelection { occupied, rationale, non_unique }
}

/// How each occupied mode is spread over the sites.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OccupationWeights {
    /// Diagonal of the orthogonal projector onto the span of the occupied
    /// right eigenvectors, i.e. `<n_i>` in the Slater determinant built from them.
    #[default]
    Projector,
    /// `|phi_i|^2 / |phi|^2` summed mode by mode, ignoring their overlaps.
    RightNorm,
    /// `Re(chi_i phi_i)` from the biorthogonal pair.
    Biorthogonal,
}

/// Site occupations of the MBS.
pub fn mbs_occupation(spectrum: &SpectrumResult, selection: &ModeSelection, weights: OccupationWeights) -> OccupationProfile {
    let n = spectrum.right_vectors.nrows();
    let mut sites = vec![0.0; n];
    if weights == OccupationWeights::Projector {
        if selection.occupied.is_empty() {
            return OccupationProfile { sites };
        }
        let phi = spectrum.right_vectors.select(Axis(1), &selection.occupied);
        // Orthonormal basis of the occupied span via modified Gram-Schmidt,
        // repeated once for stability.
        let basis = orthonormal_columns(&phi);
        for (i, s) in sites.iter_mut().enumerate() {
            *s = basis.row(i).iter().map(|z| z.norm_sqr()).sum();
        }
        return OccupationProfile { sites };
    }
    for &m in &selection.occupied {
        let phi = spectrum.right_vectors.column(m);
        match weights {
            OccupationWeights::RightNorm => {
                let nrm = phi.iter().map(|z| z.norm_sqr()).sum::<f64>();
                for (s, z) in sites.iter_mut().zip(phi.iter()) {
                    *s += z.norm_sqr() / nrm;
                }
            }
            OccupationWeights::Projector => unreachable!(),
            OccupationWeights::Biorthogonal => {
                let chi = spectrum.left_vectors.row(m);
                for (i, s) in sites.iter_mut().enumerate() {
                    *s += (chi[i] * phi[i]).re;
                }
            }
        }
    }
    OccupationProfile { sites }
}

fn orthonormal_columns(a: &Array2<C64>) -> Array2<C64> {
    let mut q = a.clone();
    let k = q.ncols();
    for j in 0..k {
        for _ in 0..2 {
            for p in 0..j {
                let proj = linalg::vdot(&q.column(p), &q.column(j));
                let col_p = q.column(p).to_owned();
                q.column_mut(j).zip_mut_with(&col_p, |x, y| *x -= proj * y);
            }
        }
        let nrm = q.column(j).norm_l2();
        q.column_mut(j).mapv_inplace(|z| z / nrm);
    }
    q
}

/// Matches the modes of `next` to those of `prev` by maximal right-vector
/// overlap. Returns `perm` with `next` mode `perm[m]` continuing `prev` mode `m`.
pub fn continue_modes(prev: &SpectrumResult, next: &SpectrumResult) -> Vec<usize> {
    let n = prev.len();
    let overlaps: Array2<f64> = Array2::from_shape_fn((n, n), |(a, b)| {
        linalg::vdot(&prev.right_vectors.column(a), &next.right_vectors.column(b)).norm()
    });
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
    pairs.sort_by(|p, q| {
        overlaps[[q.0, q.1]]
            .total_cmp(&overlaps[[p.0, p.1]])
            .then_with(|| p.cmp(q))
    });
    let mut perm = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for (a, b) in pairs {
        if perm[a] == usize::MAX && !taken[b] {
            perm[a] = b;
            taken[b] = true;
        }
    }
    perm
}

/// Eigenvalues of the real-space Hamiltonian along a `gamma` sweep, each row
/// continued from the previous one by eigenvector overlap.
pub fn spectrum_sweep(
    config: &ModelConfig,
    gammas: &[f64],
    disorder: Option<&DisorderRealization>,
) -> Result<Vec<Array1<C64>>> {
    let mut rows = Vec::with_capacity(gammas.len());
    // Previous spectrum with its modes already in output-column order.
    let mut prev: Option<SpectrumResult> = None;
    for &g in gammas {
        let spec = complex_spectrum(&build_real_space_hamiltonian(&config.with_gamma(g), disorder)?)?;
        let perm: Vec<usize> = match &prev {
            None => (0..config.n).collect(),
            Some(p) => continue_modes(p, &spec),
        };
        let mut reordered = spec.clone();
        reordered.eigenvalues = perm.iter().map(|&m| spec.eigenvalues[m]).collect();
        reordered.right_vectors = spec.right_vectors.select(Axis(1), &perm);
        reordered.left_vectors = spec.left_vectors.select(Axis(0), &perm);
        rows.push(Array1::from(reordered.eigenvalues.clone()));
        prev = Some(reordered);
    }
    Ok(rows)
}
