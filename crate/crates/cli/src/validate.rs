//! Cross-validation report: covariance solve against the dense oracle, the
//! closed-form ring rapidities, the decay convention, spectral symmetry,
//! half filling and Zak quantization.

use std::f64::consts::PI;

use dissipative_ssh::effective::{
    build_real_space_hamiltonian, complex_spectrum, construct_mbs, mbs_occupation, OccupationWeights, PT_TOL,
};
use dissipative_ssh::linalg::multiset_distance;
use dissipative_ssh::oracle::{dense_liouvillean_of, oracle_time_evolution, DensityMatrix, FockModel};
use dissipative_ssh::thirdq::{analytic_rapidities_u2_ring, build_shape_matrix, ness_covariance, ness_occupation, rapidities};
use dissipative_ssh::zak::{effective_zak, liouvillean_band_count, liouvillean_zak, ZakClass};
use dissipative_ssh::{Boundary, ModelConfig, Pattern, Result};
use num_complex::Complex64 as C64;

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub max_residual: f64,
    pub tol: f64,
    pub detail: Option<String>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.detail.is_none() && self.max_residual <= self.tol
    }

    pub fn line(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let mut s = format!("{status} {} max_residual={:.3e} tol={:.0e}", self.name, self.max_residual, self.tol);
        if let Some(d) = &self.detail {
            s.push_str(" error=");
            s.push_str(d);
        }
        s
    }
}

fn run(name: &'static str, tol: f64, f: impl FnOnce() -> Result<f64>) -> Check {
    match f() {
        Ok(r) => Check { name, max_residual: r, tol, detail: None },
        Err(e) => Check { name, max_residual: f64::INFINITY, tol, detail: Some(e.to_string()) },
    }
}

/// Site occupations of the NESS from the covariance solve.
pub type OccupationSolver = dyn Fn(&ModelConfig) -> Result<Vec<f64>>;

pub fn covariance_occupations(cfg: &ModelConfig) -> Result<Vec<f64>> {
    Ok(ness_occupation(&ness_covariance(cfg, None)?)?.sites)
}

pub fn oracle_equivalence(solver: &OccupationSolver) -> Check {
    run("oracle_equivalence", 1e-8, || {
        let mut worst: f64 = 0.0;
        for n in [2, 4] {
            for (pattern, boundary) in [(Pattern::U1, Boundary::Open), (Pattern::U2, Boundary::Open), (Pattern::U2, Boundary::Periodic)] {
                for gamma in [0.5, 1.4, 2.5] {
                    let cfg = ModelConfig::unit(n, PI / 3.0, gamma, boundary, pattern)?;
                    let fast = solver(&cfg)?;
                    let exact = FockModel::from_config(&cfg)?.steady_state()?.site_occupations();
                    for (a, b) in fast.iter().zip(&exact) {
                        worst = worst.max((a - b).abs());
                    }
                }
            }
        }
        Ok(worst)
    })
}

fn single_site_decay() -> Check {
    run("single_site_decay", 1e-8, || {
        let gamma = 0.7;
        let model = FockModel::single_site(gamma, false)?;
        let superop = dense_liouvillean_of(&model)?;
        let traj = oracle_time_evolution(&superop, &DensityMatrix::basis_state(1, 1), 3.0 / gamma, 60)?;
        Ok(traj
            .times
            .iter()
            .zip(&traj.occupations)
            .map(|(t, occ)| (occ[0] - (-2.0 * gamma * t).exp()).abs())
            .fold(0.0, f64::max))
    })
}

fn ring_closed_form() -> Check {
    run("ring_closed_form", 1e-9, || {
        let mut worst: f64 = 0.0;
        for theta in [PI / 6.0, PI / 3.0, 2.0 * PI / 3.0] {
            for gamma in [0.5, 1.0, 2.0] {
                let cfg = ModelConfig::unit(16, theta, gamma, Boundary::Periodic, Pattern::U2)?;
                let numeric = rapidities(&build_shape_matrix(&cfg, None)?)?.betas;
                worst = worst.max(multiset_distance(&numeric, &analytic_rapidities_u2_ring(&cfg)?));
            }
        }
        Ok(worst)
    })
}

fn lambda_symmetry() -> Check {
    run("lambda_symmetry", 1e-10, || {
        let mut worst: f64 = 0.0;
        for pattern in [Pattern::U1, Pattern::U2] {
            for (theta, gamma) in [(0.4, 0.3), (1.9, 1.1), (PI / 3.0, 2.5)] {
                let cfg = ModelConfig::unit(12, theta, gamma, Boundary::Open, pattern)?;
                let e = complex_spectrum(&build_real_space_hamiltonian(&cfg, None)?)?.eigenvalues;
                let neg: Vec<C64> = e.iter().map(|z| -z).collect();
                let scale = e.iter().map(|z| z.norm()).fold(1.0, f64::max);
                worst = worst.max(multiset_distance(&e, &neg) / scale);
            }
        }
        Ok(worst)
    })
}

fn half_filling() -> Check {
    run("half_filling", 1e-8, || {
        let mut worst: f64 = 0.0;
        for theta in [PI / 3.0, 2.0 * PI / 3.0] {
            for gamma in [0.5, 1.4, 2.5] {
                let cfg = ModelConfig::unit(16, theta, gamma, Boundary::Open, Pattern::U2)?;
                let ness = ness_occupation(&ness_covariance(&cfg, None)?)?;
                let spec = complex_spectrum(&build_real_space_hamiltonian(&cfg, None)?)?;
                let sel = construct_mbs(&spec, PT_TOL * spec.spectral_radius().max(1.0));
                let mbs = mbs_occupation(&spec, &sel, OccupationWeights::default());
                worst = worst.max((ness.total() - 8.0).abs()).max((mbs.total() - 8.0).abs());
            }
        }
        Ok(worst)
    })
}

fn hermitian_class(theta: f64) -> ZakClass {
    if theta < PI / 2.0 {
        ZakClass::Pi
    } else {
        ZakClass::Zero
    }
}

fn zak_quantization() -> Check {
    run("zak_quantization", 1e-6, || {
        let mut worst: f64 = 0.0;
        for i in 1..8 {
            let theta = PI * i as f64 / 8.0;
            if (theta - PI / 2.0).abs() < 1e-9 {
                continue;
            }
            let base = ModelConfig::unit(2, theta, 0.0, Boundary::Periodic, Pattern::U2)?;
            let (t1, t2) = base.hoppings();
            for frac in [0.0, 0.3, 0.6, 0.9] {
                let r = effective_zak(&base.with_gamma(frac * (t1 - t2).abs()), 0, 400)?;
                let target = if hermitian_class(theta) == ZakClass::Pi { PI } else { 0.0 };
                let d = (r.nu.re - target).rem_euclid(2.0 * PI);
                worst = worst.max(d.min(2.0 * PI - d));
            }
        }
        Ok(worst)
    })
}

fn liouvillean_zak_classes() -> Check {
    run("liouvillean_zak_classes", 0.0, || {
        let mut mismatches = 0.0;
        for theta in [PI / 3.0, 2.0 * PI / 3.0] {
            for gamma in [0.5, 2.0] {
                let cfg = ModelConfig::unit(2, theta, gamma, Boundary::Periodic, Pattern::U2)?;
                for band in 0..liouvillean_band_count(&cfg)? {
                    if liouvillean_zak(&cfg, band, 400)?.real_class != hermitian_class(theta) {
                        mismatches += 1.0;
                    }
                }
            }
        }
        Ok(mismatches)
    })
}

pub fn run_all() -> Vec<Check> {
    vec![
        oracle_equivalence(&covariance_occupations),
        single_site_decay(),
        ring_closed_form(),
        lambda_symmetry(),
        half_filling(),
        zak_quantization(),
        liouvillean_zak_classes(),
    ]
}

pub fn report(checks: &[Check]) -> String {
    let mut out: String = checks.iter().map(|c| c.line() + "\n").collect();
    let failed = checks.iter().filter(|c| !c.passed()).count();
    out.push_str(&format!("{} checks, {} failed\n", checks.len(), failed));
    out
}
