//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::time::Instant;

use dissipative_ssh::effective::{
    bloch_band_energies, build_bloch_hamiltonian, build_real_space_hamiltonian, complex_spectrum, construct_mbs,
    mbs_occupation, OccupationWeights, PT_TOL,
};
use dissipative_ssh::lattice::{apply_disorder, hopping_amplitudes};
use dissipative_ssh::linalg::{max_abs, multiset_distance};
use dissipative_ssh::oracle::{dense_liouvillean, dense_liouvillean_of, oracle_time_evolution, DensityMatrix, FockModel};
use dissipative_ssh::thirdq::{analytic_rapidities_u2_ring, build_shape_matrix, ness_covariance, ness_occupation, rapidities};
use dissipative_ssh::zak::{
    effective_zak, liouvillean_band_count, liouvillean_zak, rescale_band, track_band, wilson_loop_phase, ZakClass,
};
use dissipative_ssh::thirdq::build_bloch_liouvillean;
use dissipative_ssh::{Boundary, ModelConfig, Pattern, Result};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NK: usize = 2000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn hermitian_class(theta: f64) -> ZakClass {
    if theta < PI / 2.0 {
        ZakClass::Pi
    } else {
        ZakClass::Zero
    }
}

/// Distance of `Re nu mod 2 pi` from `target`.
fn phase_error(nu: C64, target: f64) -> f64 {
    let d = (nu.re - target).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

fn c1_hermitian_zak() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for (theta, target) in [(PI / 3.0, PI), (2.0 * PI / 3.0, 0.0)] {
        let cfg = ModelConfig::unit(2, theta, 0.0, Boundary::Periodic, Pattern::U2)?;
        let r = effective_zak(&cfg, 0, NK)?;
        worst = worst.max(phase_error(r.nu, target));
    }
    outcome(worst < 1e-6, format!("max |Re nu - target| = {worst:.2e} (N_k = {NK})"))
}

fn max_im_over_bz(cfg: &ModelConfig) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for j in 0..=NK {
        let k = 2.0 * PI * j as f64 / NK as f64;
        let (a, b) = bloch_band_energies(cfg, k)?;
        worst = worst.max(a.im.abs()).max(b.im.abs());
    }
    Ok(worst)
}

fn c2_pt_threshold() -> Result<Outcome> {
    let (mut below, mut above) = (0.0f64, f64::INFINITY);
    for theta in [PI / 6.0, PI / 3.0, 2.0 * PI / 3.0, 5.0 * PI / 6.0] {
        let base = ModelConfig::unit(2, theta, 0.0, Boundary::Periodic, Pattern::U2)?;
        let (t1, t2) = hopping_amplitudes(&base);
        let gap = (t1 - t2).abs();
        for f in [0.0, 0.5, 0.9, 0.99] {
            below = below.max(max_im_over_bz(&base.with_gamma(f * gap))?);
        }
        for f in [1.01, 1.2, 2.0] {
            above = above.min(max_im_over_bz(&base.with_gamma(f * gap))?);
        }
    }
    outcome(
        below < 1e-10 && above > 0.01,
        format!("max|Im E| below threshold {below:.2e}, above threshold >= {above:.3}"),
    )
}

fn c3_ring_closed_form() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut degeneracy_ok = true;
    for theta in [PI / 6.0, PI / 3.0, 2.0 * PI / 3.0] {
        for gamma in [0.5, 1.0, 2.0] {
            let cfg = ModelConfig::unit(64, theta, gamma, Boundary::Periodic, Pattern::U2)?;
            let betas = rapidities(&build_shape_matrix(&cfg, None)?)?.betas;
            worst = worst.max(multiset_distance(&betas, &analytic_rapidities_u2_ring(&cfg)?));
            for (i, b) in betas.iter().enumerate() {
                let partners = betas.iter().enumerate().filter(|(j, x)| *j != i && (*x - b).norm() < 1e-9).count();
                degeneracy_ok &= partners >= 1;
            }
        }
    }
    outcome(worst < 1e-9 && degeneracy_ok, format!("multiset distance {worst:.2e}, two-fold degeneracy {degeneracy_ok}"))
}

fn c4_oracle_equivalence() -> Result<Outcome> {
    let (mut occ, mut residual) = (0.0f64, 0.0f64);
    for n in [2, 4, 6] {
        for (pattern, boundary) in [(Pattern::U1, Boundary::Open), (Pattern::U2, Boundary::Open), (Pattern::U2, Boundary::Periodic)] {
            for gamma in [0.5, 1.4, 2.5] {
                let cfg = ModelConfig::unit(n, PI / 3.0, gamma, boundary, pattern)?;
                let fast = ness_occupation(&ness_covariance(&cfg, None)?)?.sites;
                let model = FockModel::from_config(&cfg)?;
                let rho = model.steady_state()?;
                residual = residual.max(max_abs(&model.apply(&rho.entries).view()));
                for (a, b) in fast.iter().zip(rho.site_occupations()) {
                    occ = occ.max((a - b).abs());
                }
            }
        }
    }
    outcome(occ < 1e-8 && residual < 1e-10, format!("max occupation diff {occ:.2e}, max |L rho| {residual:.2e}"))
}

fn c5_single_site_decay() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for gamma in [0.25, 1.0, 3.0] {
        let superop = dense_liouvillean_of(&FockModel::single_site(gamma, false)?)?;
        let traj = oracle_time_evolution(&superop, &DensityMatrix::basis_state(1, 1), 3.0 / gamma, 300)?;
        for (t, o) in traj.times.iter().zip(&traj.occupations) {
            worst = worst.max((o[0] - (-2.0 * gamma * t).exp()).abs());
        }
    }
    outcome(worst < 1e-8, format!("max |n(t) - exp(-2 gamma t)| = {worst:.2e}"))
}

fn c6_edge_modes() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut counts = Vec::new();
    for gamma in [0.25, 0.5, 1.0] {
        let cfg = ModelConfig::unit(64, PI / 3.0, gamma, Boundary::Open, Pattern::U2)?;
        let spec = complex_spectrum(&build_real_space_hamiltonian(&cfg, None)?)?;
        let zero: Vec<C64> = spec.eigenvalues.iter().copied().filter(|e| e.re.abs() < 1e-8).collect();
        counts.push(zero.len());
        let mut ims: Vec<f64> = zero.iter().map(|e| e.im).collect();
        ims.sort_by(f64::total_cmp);
        if ims.len() == 2 {
            worst = worst.max((ims[0] + gamma).abs()).max((ims[1] - gamma).abs());
        } else {
            worst = f64::INFINITY;
        }
    }
    outcome(worst < 1e-8, format!("zero-Re counts {counts:?}, max |Im E -+ gamma| = {worst:.2e}"))
}

fn c7_lambda_pairing() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for pattern in [Pattern::U1, Pattern::U2] {
        for _ in 0..5 {
            let theta = rng.gen_range(0.1..PI - 0.1);
            let gamma = rng.gen_range(0.05..3.0);
            let cfg = ModelConfig::unit(64, theta, gamma, Boundary::Open, pattern)?;
            let e = complex_spectrum(&build_real_space_hamiltonian(&cfg, None)?)?.eigenvalues;
            let neg: Vec<C64> = e.iter().map(|z| -z).collect();
            worst = worst.max(multiset_distance(&e, &neg));
        }
    }
    outcome(worst < 1e-10, format!("max |spectrum - (-spectrum)| = {worst:.2e}"))
}

fn c8_quantization_grid() -> Result<Outcome> {
    let (mut cells, mut worst, mut wrong, mut failures) = (0, 0.0f64, 0, Vec::new());
    for i in 0..21 {
        let theta = PI * i as f64 / 20.0;
        for j in 0..21 {
            let gamma = 1.5 * j as f64 / 20.0;
            let cfg = ModelConfig::unit(2, theta, gamma, Boundary::Periodic, Pattern::U2)?;
            let (t1, t2) = hopping_amplitudes(&cfg);
            let gap = (t1 - t2).abs();
            if gap < 1e-9 || gamma >= gap * (1.0 - 1e-9) {
                continue;
            }
            cells += 1;
            match effective_zak(&cfg, 0, NK) {
                Ok(r) => {
                    let expect = hermitian_class(theta);
                    let target = if expect == ZakClass::Pi { PI } else { 0.0 };
                    worst = worst.max(phase_error(r.nu, target));
                    if r.real_class != expect {
                        wrong += 1;
                    }
                }
                Err(e) => failures.push(format!("({theta:.3}, {gamma:.3}): {e}")),
            }
        }
    }
    let detail = format!(
        "{cells} unbroken cells, max |Re nu - class| = {worst:.2e}, wrong class {wrong}, failed {}{}",
        failures.len(),
        failures.first().map(|f| format!(" e.g. {f}")).unwrap_or_default()
    );
    outcome(worst < 1e-6 && wrong == 0 && failures.is_empty(), detail)
}

fn c9_liouvillean_zak() -> Result<Outcome> {
    let (mut checked, mut wrong, mut max_im) = (0, 0, 0.0f64);
    for theta in [PI / 6.0, PI / 3.0, 2.0 * PI / 3.0, 5.0 * PI / 6.0] {
        for gamma in [0.1, 0.5, 1.0, 2.0, 3.0] {
            let cfg = ModelConfig::unit(2, theta, gamma, Boundary::Periodic, Pattern::U2)?;
            for band in 0..liouvillean_band_count(&cfg)? {
                let r = liouvillean_zak(&cfg, band, NK)?;
                checked += 1;
                max_im = max_im.max(r.nu.im.abs());
                if r.real_class != hermitian_class(theta) {
                    wrong += 1;
                }
            }
        }
    }
    outcome(wrong == 0, format!("{checked} band phases, {wrong} differ from the Hermitian class, max |Im nu| = {max_im:.1e}"))
}

fn c10_half_filling() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for theta in [PI / 3.0, 2.0 * PI / 3.0] {
        for gamma in [0.5, 1.4, 2.5] {
            let cfg = ModelConfig::unit(64, theta, gamma, Boundary::Open, Pattern::U2)?;
            let ness = ness_occupation(&ness_covariance(&cfg, None)?)?;
            let spec = complex_spectrum(&build_real_space_hamiltonian(&cfg, None)?)?;
            let sel = construct_mbs(&spec, PT_TOL * spec.spectral_radius().max(1.0));
            let mbs = mbs_occupation(&spec, &sel, OccupationWeights::default());
            worst = worst.max((ness.total() - 32.0).abs()).max((mbs.total() - 32.0).abs());
        }
    }
    outcome(worst < 1e-8, format!("max |total - n/2| = {worst:.2e}"))
}

fn c11_strong_dissipation() -> Result<Outcome> {
    let (mut gain_min, mut loss_max) = (f64::INFINITY, 0.0f64);
    for theta in [PI / 3.0, 2.0 * PI / 3.0] {
        let cfg = ModelConfig::unit(64, theta, 25.0, Boundary::Open, Pattern::U2)?;
        let occ = ness_occupation(&ness_covariance(&cfg, None)?)?;
        gain_min = occ.sublattice_a().into_iter().fold(gain_min, f64::min);
        loss_max = occ.sublattice_b().into_iter().fold(loss_max, f64::max);
    }
    outcome(gain_min > 0.99 && loss_max < 0.01, format!("min gain-site {gain_min:.5}, max loss-site {loss_max:.5}"))
}

fn c12_disorder_extremes() -> Result<Outcome> {
    let cfg = ModelConfig::unit(64, PI / 3.0, 0.5, Boundary::Periodic, Pattern::U2)?;
    let xi = vec![1.0; cfg.n_cells()];
    let rs: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let mut max_im = Vec::new();
    let mut liouville_gap = Vec::new();
    let mut hermitian_gap = Vec::new();
    for &r in &rs {
        let dis = apply_disorder(&cfg, r, &xi)?;
        let spec = complex_spectrum(&build_real_space_hamiltonian(&cfg, Some(&dis))?)?;
        max_im.push(spec.eigenvalues.iter().map(|e| e.im.abs()).fold(0.0, f64::max));
        let herm = complex_spectrum(&build_real_space_hamiltonian(&cfg.with_gamma(0.0), Some(&dis))?)?;
        hermitian_gap.push(herm.eigenvalues.iter().map(|e| e.norm()).fold(f64::INFINITY, f64::min));
        liouville_gap.push(rapidities(&build_shape_matrix(&cfg, Some(&dis))?)?.min_abs_im());
    }
    let tol = 1e-8;
    let onset = rs.iter().zip(&max_im).find(|(_, m)| **m > tol).map(|(r, _)| *r);
    // The gap |t1' - t2'| is symmetric about R = 1/2, so PT symmetry is restored
    // past R = 1 - Rc2. Only the first crossing is checked.
    let mismatched: Vec<f64> = rs
        .iter()
        .zip(&max_im)
        .filter(|(r, m)| if **r <= 0.24 + 1e-12 { **m > tol } else if (0.26 - 1e-12..=0.5).contains(*r) { **m <= tol } else { false })
        .map(|(r, _)| *r)
        .collect();
    let pt_ok = mismatched.is_empty();
    let argmin = |v: &[f64]| {
        let i = (0..v.len()).min_by(|&a, &b| v[a].total_cmp(&v[b])).expect("non-empty");
        (rs[i], v[i])
    };
    let (rl, gl) = argmin(&liouville_gap);
    let (rh, gh) = argmin(&hermitian_gap);
    let gap_ok = (rl - 0.5).abs() < 1e-12 && gl < tol && (rh - 0.5).abs() < 1e-12 && gh < tol;
    outcome(
        pt_ok && gap_ok,
        format!(
            "Im E onset at R = {}, off-pattern R {mismatched:?}, Liouvillean min|Im beta| = {gl:.1e} at R = {rl}, Hermitian gap {gh:.1e} at R = {rh}",
            onset.map_or("none".into(), |r| format!("{r:.2}"))
        ),
    )
}

fn c13_relaxation_rate() -> Result<Outcome> {
    let mut worst_ratio = f64::INFINITY;
    let mut runs = 0;
    for (pattern, boundary) in [(Pattern::U2, Boundary::Open), (Pattern::U2, Boundary::Periodic), (Pattern::U1, Boundary::Open)] {
        for gamma in [0.5, 1.4] {
            let cfg = ModelConfig::unit(4, PI / 3.0, gamma, boundary, pattern)?;
            let bound = rapidities(&build_shape_matrix(&cfg, None)?)?.slowest_mode_rate();
            let superop = dense_liouvillean(&cfg)?;
            for s in [0b0000, 0b1010, 0b1111] {
                let t_final = 22.0 / bound;
                let traj = oracle_time_evolution(&superop, &DensityMatrix::basis_state(4, s), t_final, 400)?;
                let rate = traj.fitted_rate.ok_or_else(|| dissipative_ssh::Error::Linalg("no decay fit".into()))?;
                worst_ratio = worst_ratio.min(rate / bound);
                runs += 1;
            }
        }
    }
    outcome(worst_ratio >= 0.99, format!("{runs} trajectories, min fitted rate / (2 min Re beta) = {worst_ratio:.4}"))
}

fn c14_gauge_invariance() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut worst: f64 = 0.0;
    let mut bands = Vec::new();
    for (theta, gamma) in [(PI / 3.0, 0.0), (PI / 3.0, 0.5), (2.0 * PI / 3.0, 0.3)] {
        let cfg = ModelConfig::unit(2, theta, gamma, Boundary::Periodic, Pattern::U2)?;
        for b in 0..2 {
            bands.push(track_band(|k| Ok(build_bloch_hamiltonian(&cfg, k)?.entries), b, NK)?);
        }
    }
    let cfg = ModelConfig::unit(2, PI / 3.0, 1.0, Boundary::Periodic, Pattern::U2)?;
    for b in 0..liouvillean_band_count(&cfg)? {
        bands.push(track_band(|k| build_bloch_liouvillean(&cfg, k), b, NK)?);
    }
    for band in &bands {
        let (nu, _) = wilson_loop_phase(band)?;
        for _ in 0..100 {
            let scales: Vec<C64> =
                (0..NK).map(|_| C64::from_polar(rng.gen_range(0.1..10.0), rng.gen_range(-PI..PI))).collect();
            let (nu2, _) = wilson_loop_phase(&rescale_band(band, &scales))?;
            worst = worst.max(phase_error(nu2, nu.re).max((nu2.im - nu.im).abs()));
        }
    }
    outcome(worst < 1e-12, format!("{} bands x 100 rescalings, max |delta nu| = {worst:.2e}", bands.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 14] = [
        ("hermitian_zak_phases", c1_hermitian_zak),
        ("pt_threshold", c2_pt_threshold),
        ("ring_rapidities_closed_form", c3_ring_closed_form),
        ("oracle_equivalence", c4_oracle_equivalence),
        ("single_site_decay", c5_single_site_decay),
        ("edge_modes", c6_edge_modes),
        ("lambda_pairing", c7_lambda_pairing),
        ("zak_quantization_grid", c8_quantization_grid),
        ("liouvillean_zak_gamma_independence", c9_liouvillean_zak),
        ("half_filling", c10_half_filling),
        ("strong_dissipation_staggering", c11_strong_dissipation),
        ("disorder_extremes", c12_disorder_extremes),
        ("relaxation_rate", c13_relaxation_rate),
        ("zak_gauge_invariance", c14_gauge_invariance),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
