//! Complex Zak phases from biorthogonal Wilson loops.
//!
//! A band is tracked around the Brillouin zone `k in [0, 2 pi]` on `N_k`
//! intervals; the frame at `k = 2 pi` is the `k = 0` frame itself. Links are
//! `O_j = L_j R_{j+1}` between neighbouring frames. Each link is divided by
//! the square root of its round trip `L_{j+1} R_j L_j R_{j+1}`, which leaves
//! the loop gauge invariant and makes Hermitian links pure phases.
//! Degenerate bands (the two-fold Liouvillean bands) are handled as a whole
//! subspace: the loop is a `d x d` matrix and the result is built from its
//! eigenphases.

use std::f64::consts::PI;

use ndarray::{Array2, Axis};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::effective::{build_bloch_hamiltonian, complex_spectrum, classify_pt, PT_TOL};
use crate::error::{Error, Result};
use crate::lattice::{hopping_amplitudes, ModelConfig, Pattern};
use crate::linalg::{self, c, lex_cmp};
use crate::thirdq::build_bloch_liouvillean;

pub const DEFAULT_NK: usize = 2000;
pub const QUANTIZATION_TOL: f64 = 1e-6;
/// Eigenvalues closer than this (relative to the matrix scale) form one degenerate band.
const CLUSTER_TOL: f64 = 1e-7;
const GAP_TOL: f64 = 1e-9;
const EP_RATIO: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZakClass {
    Zero,
    Pi,
    Unquantized,
    UndefinedBroken,
    UndefinedGapless,
}

impl ZakClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ZakClass::Zero => "zero",
            ZakClass::Pi => "pi",
            ZakClass::Unquantized => "unquantized",
            ZakClass::UndefinedBroken => "undefined_broken",
            ZakClass::UndefinedGapless => "undefined_gapless",
        }
    }
}

/// Eigenvectors of one band (or degenerate band group) at one momentum.
#[derive(Clone, Debug)]
pub struct Frame {
    pub eigenvalues: Vec<C64>,
    /// `dim x d`, right eigenvectors as columns.
    pub right: Array2<C64>,
    /// `d x dim`, left eigenvectors as rows, `left . right = 1`.
    pub left: Array2<C64>,
}

#[derive(Clone, Debug)]
pub struct BlochBand {
    /// `N_k + 1` momenta from 0 to `2 pi`.
    pub k_grid: Vec<f64>,
    /// One frame per momentum; the last frame is a copy of the first.
    pub frames: Vec<Frame>,
    pub band_index: usize,
    pub degeneracy: usize,
}

impl BlochBand {
    pub fn n_k(&self) -> usize {
        self.k_grid.len() - 1
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZakPhaseResult {
    /// Complex phase; `Re nu` is reported in `(-pi/2, 3pi/2]`.
    pub nu: C64,
    pub real_class: ZakClass,
    pub n_k: usize,
    /// `|nu(N_k) - nu(N_k / 2)|`, a proxy for the discretization error.
    pub richardson_estimate: f64,
    /// Eigenphases of the subspace Wilson loop (one entry for a simple band).
    pub subspace_phases: Vec<C64>,
}

/// Groups eigenvalues into degenerate clusters sorted by (Re, Im) of their mean.
pub fn band_clusters(values: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b] = a;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_slot[r]].push(i);
    }
    let mean = |g: &Vec<usize>| g.iter().map(|&i| values[i]).sum::<C64>() / g.len() as f64;
    groups.sort_by(|a, b| lex_cmp(&mean(a), &mean(b)));
    groups
}

struct Diag {
    values: Vec<C64>,
    right: Array2<C64>,
    left: Array2<C64>,
    ratio: Vec<f64>,
    scale: f64,
}

fn diagonalize(m: &Array2<C64>) -> Result<Diag> {
    let e = linalg::biorthogonal_eig(m)?;
    let scale = linalg::max_abs(&m.view()).max(1.0);
    Ok(Diag { values: e.values.to_vec(), right: e.right, left: e.left, ratio: e.overlap_ratio, scale })
}

fn frame_of(d: &Diag, idx: &[usize]) -> Frame {
    Frame {
        eigenvalues: idx.iter().map(|&i| d.values[i]).collect(),
        right: d.right.select(Axis(1), idx),
        left: d.left.select(Axis(0), idx),
    }
}

fn mean(v: &[C64]) -> C64 {
    v.iter().sum::<C64>() / v.len() as f64
}

fn gap_of(d: &Diag, idx: &[usize]) -> f64 {
    let mut gap = f64::INFINITY;
    for (m, v) in d.values.iter().enumerate() {
        if idx.contains(&m) {
            continue;
        }
        for &i in idx {
            gap = gap.min((d.values[i] - v).norm());
        }
    }
    gap
}

/// Smallest real part among the eigenvalues of the round trip `(L_b R_a)(L_a R_b)`.
fn round_trip(a: &Frame, b: &Frame) -> Result<f64> {
    let s = b.left.dot(&a.right).dot(&a.left.dot(&b.right));
    let ev = linalg::eigenvalues(&s)?;
    Ok(ev.iter().map(|z| z.re).fold(f64::INFINITY, f64::min))
}

/// Tracks the band (or degenerate band group) `band_index` of the `k = 0`
/// spectrum once around the Brillouin zone.
///
/// Band indices follow [`band_clusters`] at `k = 0`. At each step the cluster
/// of the same size with the largest `|det L_prev R|` is taken, and its basis
/// is aligned to the previous frame (a phase for simple bands, the full
/// overlap matrix for degenerate ones).
pub fn track_band<F>(builder: F, band_index: usize, n_k: usize) -> Result<BlochBand>
where
    F: Fn(f64) -> Result<Array2<C64>>,
{
    if n_k < 4 {
        return Err(Error::InvalidConfig(format!("N_k must be at least 4, got {n_k}")));
    }
    let dk = 2.0 * PI / n_k as f64;
    let d0 = diagonalize(&builder(0.0)?)?;
    let clusters0 = band_clusters(&d0.values, CLUSTER_TOL * d0.scale);
    let idx0 = clusters0
        .get(band_index)
        .ok_or_else(|| Error::InvalidConfig(format!("band {band_index} does not exist ({} bands)", clusters0.len())))?
        .clone();
    let deg = idx0.len();
    let gap0 = gap_of(&d0, &idx0);
    if gap0 < GAP_TOL * d0.scale {
        return Err(Error::Gapless { k: 0.0, gap: gap0 });
    }
    if idx0.iter().any(|&i| d0.ratio[i] < EP_RATIO) {
        return Err(Error::ExceptionalPoint { k: 0.0 });
    }
    let first = frame_of(&d0, &idx0);
    let mut frames = vec![first.clone()];
    let mut k_grid = vec![0.0];
    for j in 1..n_k {
        let k = j as f64 * dk;
        let d = diagonalize(&builder(k)?)?;
        let prev = frames.last().expect("non-empty");
        let clusters = band_clusters(&d.values, CLUSTER_TOL * d.scale);
        let mut best: Option<(f64, Vec<usize>)> = None;
        for cl in clusters.iter().filter(|cl| cl.len() == deg) {
            let o = prev.left.dot(&d.right.select(Axis(1), cl));
            let score = linalg::det(&o)?.norm();
            if best.as_ref().map_or(true, |(s, _)| score > *s) {
                best = Some((score, cl.clone()));
            }
        }
        let idx = match best {
            Some((_, idx)) => idx,
            None => {
                // The tracked group merged with another band.
                let gap = clusters.iter().map(|cl| gap_of(&d, cl)).fold(f64::INFINITY, f64::min);
                return Err(Error::Gapless { k, gap });
            }
        };
        let gap = gap_of(&d, &idx);
        if gap < GAP_TOL * d.scale {
            return Err(Error::Gapless { k, gap });
        }
        let min_ratio = idx.iter().map(|&i| d.ratio[i]).fold(f64::INFINITY, f64::min);
        if min_ratio < EP_RATIO {
            return Err(Error::ExceptionalPoint { k });
        }
        let mut frame = frame_of(&d, &idx);
        let step = (mean(&frame.eigenvalues) - mean(&prev.eigenvalues)).norm();
        if gap < 10.0 * step {
            return Err(if min_ratio > 0.5 { Error::Gapless { k, gap } } else { Error::ExceptionalPoint { k } });
        }
        if round_trip(prev, &frame)? <= 0.5 {
            return Err(Error::Discontinuous { k });
        }
        align_to(prev, &mut frame)?;
        frames.push(frame);
        k_grid.push(k);
    }
    let last = frames.last().expect("non-empty");
    if round_trip(last, &first)? <= 0.5 {
        return Err(Error::Discontinuous { k: 2.0 * PI });
    }
    frames.push(first);
    k_grid.push(2.0 * PI);
    Ok(BlochBand { k_grid, frames, band_index, degeneracy: deg })
}

/// Parallel transport of `frame` relative to `prev`.
fn align_to(prev: &Frame, frame: &mut Frame) -> Result<()> {
    let o = prev.left.dot(&frame.right);
    if o.nrows() == 1 {
        let z = o[[0, 0]];
        let phase = C64::from_polar(1.0, -z.arg());
        frame.right.mapv_inplace(|v| v * phase);
        frame.left.mapv_inplace(|v| v / phase);
    } else {
        use ndarray_linalg::Inverse;
        let inv = o.inv()?;
        frame.right = frame.right.dot(&inv);
        frame.left = o.dot(&frame.left);
    }
    Ok(())
}

/// Normalized links `O_j (O'_j O_j)^{-1/2}` around the loop.
fn normalized_links(band: &BlochBand) -> Result<Vec<Array2<C64>>> {
    let n = band.n_k();
    let mut links = Vec::with_capacity(n);
    for j in 0..n {
        let (a, b) = (&band.frames[j], &band.frames[j + 1]);
        let o = a.left.dot(&b.right);
        let back = b.left.dot(&a.right);
        let rt = back.dot(&o);
        let link = if o.nrows() == 1 {
            let s = rt[[0, 0]];
            if s.re <= 0.5 {
                return Err(Error::Discontinuous { k: band.k_grid[j] });
            }
            o.mapv(|z| z / s.sqrt())
        } else {
            let ev = linalg::eigenvalues(&rt)?;
            if ev.iter().any(|z| z.re <= 0.5) {
                return Err(Error::Discontinuous { k: band.k_grid[j] });
            }
            o.dot(&linalg::inverse_sqrt(&rt)?)
        };
        links.push(link);
    }
    Ok(links)
}

/// Brings `Re nu` into `(-pi/2, 3pi/2]`.
pub fn normalize_phase(nu: C64) -> C64 {
    let mut r = nu.re.rem_euclid(2.0 * PI);
    if r > 1.5 * PI {
        r -= 2.0 * PI;
    }
    c(r, nu.im)
}

fn circular_mean(phases: &[C64]) -> C64 {
    let anchor = phases[0].re;
    let sum: C64 = phases
        .iter()
        .map(|p| {
            let shift = ((p.re - anchor) / (2.0 * PI)).round() * 2.0 * PI;
            c(p.re - shift, p.im)
        })
        .sum();
    sum / phases.len() as f64
}

/// Complex Zak phase of a tracked band, before classification.
pub fn wilson_loop_phase(band: &BlochBand) -> Result<(C64, Vec<C64>)> {
    let links = normalized_links(band)?;
    if band.degeneracy == 1 {
        // nu = i sum_j Log(link_j)
        let sum: C64 = links.iter().map(|l| l[[0, 0]].ln()).sum();
        let nu = normalize_phase(c(0.0, 1.0) * sum);
        return Ok((nu, vec![nu]));
    }
    let mut w = linalg::identity(band.degeneracy);
    for l in &links {
        w = w.dot(l);
    }
    let ev = linalg::eigenvalues(&w)?;
    let mut phases: Vec<C64> = ev.iter().map(|z| normalize_phase(c(0.0, 1.0) * z.ln())).collect();
    phases.sort_by(lex_cmp);
    Ok((normalize_phase(circular_mean(&phases)), phases))
}

/// `Re nu mod 2 pi` against `{0, pi}` within `tol`.
pub fn quantize_real_part(nu: C64, tol: f64) -> ZakClass {
    let r = nu.re.rem_euclid(2.0 * PI);
    if r.min(2.0 * PI - r) <= tol {
        ZakClass::Zero
    } else if (r - PI).abs() <= tol {
        ZakClass::Pi
    } else {
        ZakClass::Unquantized
    }
}

fn phase_distance(a: C64, b: C64) -> f64 {
    let dr = (a.re - b.re).rem_euclid(2.0 * PI);
    c(dr.min(2.0 * PI - dr), a.im - b.im).norm()
}

/// Zak phase at `N_k` with a Richardson-style error proxy from `N_k / 2`.
pub fn discrete_zak_phase<F>(builder: F, band_index: usize, n_k: usize) -> Result<ZakPhaseResult>
where
    F: Fn(f64) -> Result<Array2<C64>>,
{
    let band = track_band(&builder, band_index, n_k)?;
    let (nu, subspace_phases) = wilson_loop_phase(&band)?;
    let coarse = track_band(&builder, band_index, (n_k / 2).max(4))?;
    let (nu_coarse, _) = wilson_loop_phase(&coarse)?;
    Ok(ZakPhaseResult {
        nu,
        real_class: quantize_real_part(nu, QUANTIZATION_TOL),
        n_k,
        richardson_estimate: phase_distance(nu, nu_coarse) + 1e-13,
        subspace_phases,
    })
}

/// Zak phase of an already tracked band (no Richardson estimate).
pub fn zak_phase_of_band(band: &BlochBand) -> Result<ZakPhaseResult> {
    let (nu, subspace_phases) = wilson_loop_phase(band)?;
    Ok(ZakPhaseResult {
        nu,
        real_class: quantize_real_part(nu, QUANTIZATION_TOL),
        n_k: band.n_k(),
        richardson_estimate: f64::NAN,
        subspace_phases,
    })
}

/// Compares the centred finite-difference connection
/// `i <chi_j|(phi_{j+1} - phi_{j-1})> / (2 dk)` with the link-log estimate
/// `i (Log<chi_j|phi_{j+1}> - Log<chi_j|phi_{j-1}>) / (2 dk)` at interior index `j`.
pub fn finite_difference_connection_check(band: &BlochBand, j: usize) -> Result<f64> {
    if band.degeneracy != 1 {
        return Err(Error::Unsupported("connection check is defined for simple bands".into()));
    }
    let n = band.n_k();
    if j == 0 || j >= n {
        return Err(Error::InvalidConfig(format!("index {j} is not interior (1..{n})")));
    }
    let dk = band.k_grid[j + 1] - band.k_grid[j];
    let chi = band.frames[j].left.row(0);
    let fwd = band.frames[j + 1].right.column(0);
    let bwd = band.frames[j - 1].right.column(0);
    let of: C64 = chi.iter().zip(fwd.iter()).map(|(a, b)| a * b).sum();
    let ob: C64 = chi.iter().zip(bwd.iter()).map(|(a, b)| a * b).sum();
    let fd = c(0.0, 1.0) * (of - ob) / (2.0 * dk);
    let lg = c(0.0, 1.0) * (of.ln() - ob.ln()) / (2.0 * dk);
    Ok((fd - lg).norm())
}

/// Which description a phase diagram is computed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Description {
    Effective,
    Liouvillean,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhaseCell {
    pub theta: f64,
    pub gamma: f64,
    pub class: ZakClass,
    /// `None` for undefined cells.
    pub nu: Option<C64>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub theta_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub which: Description,
    pub n_k: usize,
    /// `cells[i][j]` belongs to `theta_grid[i]`, `gamma_grid[j]`.
    pub cells: Vec<Vec<PhaseCell>>,
}

/// Index of the Liouvillean band reported in phase diagrams: largest `|Im beta|`
/// at `k = 0`, ties broken by larger `Re`, then larger `Im`.
pub fn reported_liouvillean_band(config: &ModelConfig) -> Result<usize> {
    let d = diagonalize(&build_bloch_liouvillean(config, 0.0)?)?;
    let clusters = band_clusters(&d.values, CLUSTER_TOL * d.scale);
    let means: Vec<C64> = clusters.iter().map(|cl| mean(&cl.iter().map(|&i| d.values[i]).collect::<Vec<_>>())).collect();
    let best = (0..means.len())
        .max_by(|&a, &b| {
            let (x, y) = (means[a], means[b]);
            let key = |z: C64| (z.im.abs(), z.re, z.im);
            let (kx, ky) = (key(x), key(y));
            if (kx.0 - ky.0).abs() > 1e-9 {
                kx.0.total_cmp(&ky.0)
            } else if (kx.1 - ky.1).abs() > 1e-9 {
                kx.1.total_cmp(&ky.1)
            } else {
                kx.2.total_cmp(&ky.2)
            }
        })
        .expect("non-empty spectrum");
    Ok(best)
}

/// Number of degenerate band groups of the Bloch Liouvillean at `k = 0`.
pub fn liouvillean_band_count(config: &ModelConfig) -> Result<usize> {
    let d = diagonalize(&build_bloch_liouvillean(config, 0.0)?)?;
    Ok(band_clusters(&d.values, CLUSTER_TOL * d.scale).len())
}

/// Zak phase of band `band` of the effective Bloch Hamiltonian.
pub fn effective_zak(config: &ModelConfig, band: usize, n_k: usize) -> Result<ZakPhaseResult> {
    let cfg = *config;
    discrete_zak_phase(move |k| Ok(build_bloch_hamiltonian(&cfg, k)?.entries), band, n_k)
}

/// Zak phase of Liouvillean band group `band`.
pub fn liouvillean_zak(config: &ModelConfig, band: usize, n_k: usize) -> Result<ZakPhaseResult> {
    let cfg = *config;
    discrete_zak_phase(move |k| build_bloch_liouvillean(&cfg, k), band, n_k)
}

fn undefined(theta: f64, gamma: f64, class: ZakClass, note: String) -> PhaseCell {
    PhaseCell { theta, gamma, class, nu: None, note: Some(note) }
}

fn error_cell(theta: f64, gamma: f64, e: Error, which: Description) -> PhaseCell {
    let class = match (&e, which) {
        (Error::Gapless { .. }, _) => ZakClass::UndefinedGapless,
        // Liouvillean bands (+-gamma +- iE)/2 can only meet where E closes.
        (Error::ExceptionalPoint { .. } | Error::Defective { .. }, Description::Liouvillean) => ZakClass::UndefinedGapless,
        (Error::ExceptionalPoint { .. } | Error::Defective { .. }, Description::Effective) => ZakClass::UndefinedBroken,
        _ => ZakClass::Unquantized,
    };
    undefined(theta, gamma, class, e.to_string())
}

fn effective_cell(template: &ModelConfig, theta: f64, gamma: f64, n_k: usize) -> PhaseCell {
    let cfg = ModelConfig { theta, gamma, pattern: Pattern::U2, ..*template };
    if let Err(e) = cfg.validate() {
        return undefined(theta, gamma, ZakClass::Unquantized, e.to_string());
    }
    let (t1, t2) = hopping_amplitudes(&cfg);
    if gamma >= (t1 - t2).abs() {
        return undefined(theta, gamma, ZakClass::UndefinedBroken, "gamma >= |t1 - t2|".into());
    }
    // Numerical PT check on the grid as well, for cells right at the threshold.
    for j in 0..64 {
        let k = 2.0 * PI * j as f64 / 64.0;
        match build_bloch_hamiltonian(&cfg, k).and_then(|op| complex_spectrum(&op)) {
            Ok(s) if classify_pt(&s, PT_TOL).unbroken => {}
            Ok(_) => return undefined(theta, gamma, ZakClass::UndefinedBroken, format!("complex bands at k = {k}")),
            Err(e) => return error_cell(theta, gamma, e, Description::Effective),
        }
    }
    match effective_zak(&cfg, 0, n_k) {
        Ok(r) => PhaseCell { theta, gamma, class: r.real_class, nu: Some(r.nu), note: None },
        Err(e) => error_cell(theta, gamma, e, Description::Effective),
    }
}

fn liouvillean_cell(template: &ModelConfig, theta: f64, gamma: f64, n_k: usize) -> PhaseCell {
    let cfg = ModelConfig { theta, gamma, pattern: Pattern::U2, ..*template };
    if let Err(e) = cfg.validate() {
        return undefined(theta, gamma, ZakClass::Unquantized, e.to_string());
    }
    let band = match reported_liouvillean_band(&cfg) {
        Ok(b) => b,
        Err(e) => return error_cell(theta, gamma, e, Description::Liouvillean),
    };
    match liouvillean_zak(&cfg, band, n_k) {
        Ok(r) => PhaseCell { theta, gamma, class: r.real_class, nu: Some(r.nu), note: None },
        Err(e) => error_cell(theta, gamma, e, Description::Liouvillean),
    }
}

/// Zak-phase classes over a `(theta, gamma)` grid; cells are computed in
/// parallel and returned in grid order. Per-cell failures become undefined classes.
pub fn phase_diagram(
    template: &ModelConfig,
    theta_grid: &[f64],
    gamma_grid: &[f64],
    which: Description,
    n_k: usize,
) -> PhaseDiagram {
    let pairs: Vec<(usize, usize)> =
        (0..theta_grid.len()).flat_map(|i| (0..gamma_grid.len()).map(move |j| (i, j))).collect();
    let flat: Vec<PhaseCell> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (theta, gamma) = (theta_grid[i], gamma_grid[j]);
            match which {
                Description::Effective => effective_cell(template, theta, gamma, n_k),
                Description::Liouvillean => liouvillean_cell(template, theta, gamma, n_k),
            }
        })
        .collect();
    let mut it = flat.into_iter();
    let cells = (0..theta_grid.len()).map(|_| (0..gamma_grid.len()).map(|_| it.next().expect("grid size")).collect()).collect();
    PhaseDiagram { theta_grid: theta_grid.to_vec(), gamma_grid: gamma_grid.to_vec(), which, n_k, cells }
}

/// Applies `phi -> s phi`, `chi -> chi / s` per frame (the closing frame
/// follows the first), for gauge-invariance checks.
pub fn rescale_band(band: &BlochBand, scales: &[C64]) -> BlochBand {
    let mut out = band.clone();
    let n = band.n_k();
    for j in 0..n {
        let s = scales[j % scales.len()];
        out.frames[j].right.mapv_inplace(|z| z * s);
        out.frames[j].left.mapv_inplace(|z| z / s);
    }
    out.frames[n] = out.frames[0].clone();
    out
}
