//! One function per subcommand. Each returns the files to write; nothing
//! touches the disk until every computation has succeeded.

use std::path::PathBuf;

use dissipative_ssh::effective::{
    build_real_space_hamiltonian, complex_spectrum, construct_mbs, mbs_occupation, pt_class_of, spectrum_sweep,
    OccupationWeights, PT_TOL,
};
use dissipative_ssh::export::{self, Cell, Table};
use dissipative_ssh::lattice::{apply_disorder, critical_disorder_strengths, sample_symmetric_disorder};
use dissipative_ssh::oracle::{dense_liouvillean, oracle_time_evolution, DensityMatrix, MAX_LIOUVILLE_SITES};
use dissipative_ssh::thirdq::{analytic_rapidities_u2_ring, build_shape_matrix, ness_covariance, ness_occupation, rapidities};
use dissipative_ssh::zak::{phase_diagram, Description};
use dissipative_ssh::{Boundary, ModelConfig, Pattern};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::settings::{Axis, DisorderMode, RunSetup, WeightsArg, Which};
use crate::CliError;

/// A rendered file; `None` means standard output.
pub struct Artifact {
    pub path: Option<PathBuf>,
    pub contents: String,
}

fn compute<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Compute(e.to_string())
}

fn with_config(table: Table, cfg: &ModelConfig) -> Table {
    table
        .meta("n", cfg.n)
        .meta("t", cfg.t)
        .meta("delta", cfg.delta)
        .meta("theta", cfg.theta)
        .meta("gamma", cfg.gamma)
        .meta("pattern", cfg.pattern)
        .meta("boundary", cfg.boundary)
}

fn main_output(setup: &RunSetup, table: &Table) -> Artifact {
    Artifact { path: setup.output.clone(), contents: table.render(setup.format) }
}

fn prepend(mut table: Table, name: &str, value: f64) -> Table {
    table.columns.insert(0, name.to_string());
    for row in &mut table.rows {
        row.insert(0, value.into());
    }
    table
}

pub fn spectrum(setup: &RunSetup, eigenvectors: Option<PathBuf>) -> Result<Vec<Artifact>, CliError> {
    let cfg = &setup.config;
    match setup.sweep.gamma {
        None => {
            let spec = complex_spectrum(&build_real_space_hamiltonian(cfg, None).map_err(compute)?).map_err(compute)?;
            let table = with_config(export::spectrum_table(&spec), cfg);
            let mut out = vec![main_output(setup, &table)];
            if let Some(p) = eigenvectors {
                out.push(Artifact { path: Some(p), contents: export::eigenvectors_json(&spec) });
            }
            Ok(out)
        }
        Some(axis) => {
            if eigenvectors.is_some() {
                return Err(CliError::Usage("--eigenvectors needs a single gamma, not a sweep".into()));
            }
            let gammas = axis.points();
            let rows = spectrum_sweep(cfg, &gammas, None).map_err(compute)?;
            let mut table = with_config(Table::new(&["gamma", "index", "re_E", "im_E", "pt_class"]), cfg)
                .meta("ordering", "continued by eigenvector overlap across gamma");
            for (g, row) in gammas.iter().zip(&rows) {
                let scale = row.iter().map(|z| z.norm()).fold(1.0, f64::max);
                for (i, e) in row.iter().enumerate() {
                    let cls = pt_class_of(*e, PT_TOL * scale);
                    table.push(vec![(*g).into(), i.into(), e.re.into(), e.im.into(), cls.as_str().into()]);
                }
            }
            Ok(vec![main_output(setup, &table)])
        }
    }
}

fn rapidity_rows(cfg: &ModelConfig, oracle: bool) -> Result<Table, CliError> {
    let spec = rapidities(&build_shape_matrix(cfg, None).map_err(compute)?).map_err(compute)?;
    let mut table = export::rapidity_table(&spec);
    if oracle {
        let exact = analytic_rapidities_u2_ring(cfg).map_err(|e| CliError::Usage(e.to_string()))?;
        // At gamma = 0 the partner of each beta is equally valid, so match
        // against the closed form together with its negation.
        let candidates: Vec<C64> = exact.iter().flat_map(|b| [*b, -*b]).collect();
        let scale = exact.iter().map(|b| b.norm()).fold(1.0, f64::max);
        let listed: Vec<C64> = table
            .rows
            .iter()
            .map(|r| match (&r[1], &r[2]) {
                (Cell::Float(re), Cell::Float(im)) => C64::new(*re, *im),
                _ => unreachable!("rapidity columns are floats"),
            })
            .collect();
        let perm = inject(&listed, &candidates, 1e-6 * scale)
            .ok_or_else(|| CliError::Compute("numeric rapidities do not match the closed form".into()))?;
        let exact = candidates;
        table.columns.push("oracle_re_beta".into());
        table.columns.push("oracle_im_beta".into());
        for (row, &j) in table.rows.iter_mut().zip(&perm) {
            row.push(exact[j].re.into());
            row.push(exact[j].im.into());
        }
    }
    Ok(table)
}

/// Greedy nearest injection of `a` into `b` within `tol`.
fn inject(a: &[C64], b: &[C64], tol: f64) -> Option<Vec<usize>> {
    let mut used = vec![false; b.len()];
    a.iter()
        .map(|x| {
            let (j, d) = b
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, y)| (j, (x - y).norm()))
                .min_by(|p, q| p.1.total_cmp(&q.1))?;
            if d > tol {
                return None;
            }
            used[j] = true;
            Some(j)
        })
        .collect()
}

pub fn rapidities_cmd(setup: &RunSetup, covariance: Option<PathBuf>) -> Result<Vec<Artifact>, CliError> {
    let cfg = &setup.config;
    let oracle = setup.sweep.oracle.unwrap_or(false);
    if oracle && (cfg.pattern != Pattern::U2 || cfg.boundary != Boundary::Periodic) {
        return Err(CliError::Usage("--oracle needs --pattern u2 --boundary periodic".into()));
    }
    let note = "raw rapidities beta; populations relax at 2 Re beta";
    let (thetas, gammas) = (setup.sweep.theta.map(|a| a.points()), setup.sweep.gamma.map(|a| a.points()));
    if thetas.is_none() && gammas.is_none() {
        let table = with_config(rapidity_rows(cfg, oracle)?, cfg).meta("scaling", note);
        let mut out = vec![main_output(setup, &table)];
        if let Some(p) = covariance {
            let cov = ness_covariance(cfg, None).map_err(compute)?;
            out.push(Artifact { path: Some(p), contents: export::covariance_json(&cov) });
        }
        return Ok(out);
    }
    if covariance.is_some() {
        return Err(CliError::Usage("--covariance needs a single parameter point, not a sweep".into()));
    }
    // theta outer, gamma inner; swept parameters become leading columns.
    let mut points = Vec::new();
    for &th in thetas.as_deref().unwrap_or(&[cfg.theta]) {
        for &g in gammas.as_deref().unwrap_or(&[cfg.gamma]) {
            points.push(ModelConfig { theta: th, gamma: g, ..*cfg });
        }
    }
    for p in &points {
        p.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let tables: Vec<Result<Table, CliError>> = points
        .par_iter()
        .map(|p| {
            let mut t = rapidity_rows(p, oracle)?;
            if gammas.is_some() {
                t = prepend(t, "gamma", p.gamma);
            }
            if thetas.is_some() {
                t = prepend(t, "theta", p.theta);
            }
            Ok(t)
        })
        .collect();
    let mut iter = tables.into_iter();
    let mut table = with_config(iter.next().expect("non-empty sweep")?, cfg).meta("scaling", note);
    for t in iter {
        table.extend(t?);
    }
    Ok(vec![main_output(setup, &table)])
}

fn weights_of(w: Option<WeightsArg>) -> OccupationWeights {
    match w {
        None | Some(WeightsArg::Projector) => OccupationWeights::Projector,
        Some(WeightsArg::RightNorm) => OccupationWeights::RightNorm,
        Some(WeightsArg::Biorthogonal) => OccupationWeights::Biorthogonal,
    }
}

pub fn occupations(setup: &RunSetup) -> Result<Vec<Artifact>, CliError> {
    let cfg = &setup.config;
    if let Some(t_final) = setup.sweep.evolve {
        return trajectory(setup, t_final);
    }
    if cfg.gamma <= 0.0 || cfg.pattern == Pattern::None {
        return Err(CliError::Usage("the NESS is not unique without reservoirs; use gamma > 0 and a gain/loss pattern".into()));
    }
    let ness = ness_occupation(&ness_covariance(cfg, None).map_err(compute)?).map_err(compute)?;
    let spec = complex_spectrum(&build_real_space_hamiltonian(cfg, None).map_err(compute)?).map_err(compute)?;
    let scale = spec.spectral_radius().max(1.0);
    let selection = construct_mbs(&spec, PT_TOL * scale);
    let weights = weights_of(setup.sweep.weights);
    let mbs = mbs_occupation(&spec, &selection, weights);
    let mut table = with_config(export::occupation_table(&ness.sites, &mbs.sites), cfg)
        .meta("mbs_weights", format!("{weights:?}").to_lowercase())
        .meta("ness_total", ness.total())
        .meta("mbs_total", mbs.total());
    if selection.non_unique {
        table = table.meta("warning", "a zero mode makes the MBS filling ambiguous");
    }
    Ok(vec![main_output(setup, &table)])
}

fn trajectory(setup: &RunSetup, t_final: f64) -> Result<Vec<Artifact>, CliError> {
    let cfg = &setup.config;
    if cfg.n > MAX_LIOUVILLE_SITES {
        return Err(CliError::Usage(format!("--evolve uses the dense oracle and needs n <= {MAX_LIOUVILLE_SITES}")));
    }
    let s = match &setup.sweep.initial {
        None => 0,
        Some(bits) => {
            if bits.len() != cfg.n || bits.chars().any(|ch| ch != '0' && ch != '1') {
                return Err(CliError::Usage(format!("--initial must be {} characters of 0/1", cfg.n)));
            }
            usize::from_str_radix(bits, 2).expect("checked digits")
        }
    };
    let steps = setup.sweep.steps.unwrap_or(200);
    let superop = dense_liouvillean(cfg).map_err(compute)?;
    let traj = oracle_time_evolution(&superop, &DensityMatrix::basis_state(cfg.n, s), t_final, steps).map_err(compute)?;
    let table = with_config(export::trajectory_table(&traj), cfg)
        .meta("initial", setup.sweep.initial.clone().unwrap_or_else(|| "0".repeat(cfg.n)));
    Ok(vec![main_output(setup, &table)])
}

pub fn zak(setup: &RunSetup) -> Result<Vec<Artifact>, CliError> {
    let cfg = &setup.config;
    let which = match setup.sweep.which.unwrap_or(Which::Effective) {
        Which::Effective => Description::Effective,
        Which::Liouvillean => Description::Liouvillean,
    };
    let thetas = setup.sweep.theta.map_or(vec![cfg.theta], |a| a.points());
    let gammas = setup.sweep.gamma.map_or(vec![cfg.gamma], |a| a.points());
    let n_k = setup.n_k();
    if n_k < 4 {
        return Err(CliError::Usage("--nk must be at least 4".into()));
    }
    let pd = phase_diagram(cfg, &thetas, &gammas, which, n_k);
    let table = export::phase_diagram_table(&pd).meta("t", cfg.t).meta("delta", cfg.delta);
    Ok(vec![main_output(setup, &table)])
}

/// Seed of realization `index` (and grid point `r_index` in resample mode).
fn realization_seed(seed: u64, index: usize, r_index: Option<usize>) -> u64 {
    let mut x = seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    if let Some(j) = r_index {
        x ^= (j as u64 + 1).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    }
    x
}

pub fn disorder(setup: &RunSetup) -> Result<Vec<Artifact>, CliError> {
    let cfg = &setup.config;
    let which = setup.sweep.which.unwrap_or(Which::Effective);
    let realizations = setup.sweep.realizations.unwrap_or(if setup.sweep.extreme == Some(true) { 0 } else { 100 });
    let extreme = setup.sweep.extreme.unwrap_or(false);
    let mode = setup.sweep.disorder_mode.unwrap_or(DisorderMode::Reuse);
    let axis = setup.sweep.r.unwrap_or(Axis { min: 0.0, max: 1.0, steps: 101 });
    if axis.min < 0.0 {
        return Err(CliError::Usage("disorder strength R must be non-negative".into()));
    }
    if realizations == 0 && !extreme {
        return Err(CliError::Usage("nothing to compute: give --realizations > 0 or --extreme".into()));
    }
    let cells = cfg.n_cells();
    let rs = axis.points();

    // (label, r index) jobs in output order: extreme first, then realizations.
    let mut jobs: Vec<(Option<usize>, usize)> = Vec::new();
    for ri in 0..rs.len() {
        if extreme {
            jobs.push((None, ri));
        }
    }
    for i in 0..realizations {
        for ri in 0..rs.len() {
            jobs.push((Some(i), ri));
        }
    }
    let blocks: Vec<Result<Vec<Vec<Cell>>, CliError>> = jobs
        .par_iter()
        .map(|&(label, ri)| {
            let xi = match label {
                None => vec![1.0; cells],
                Some(i) => {
                    let r_index = (mode == DisorderMode::Resample).then_some(ri);
                    sample_symmetric_disorder(cells, realization_seed(setup.seed, i, r_index))
                }
            };
            let dis = apply_disorder(cfg, rs[ri], &xi).map_err(compute)?;
            let values: Vec<C64> = match which {
                Which::Effective => {
                    complex_spectrum(&build_real_space_hamiltonian(cfg, Some(&dis)).map_err(compute)?)
                        .map_err(compute)?
                        .eigenvalues
                }
                Which::Liouvillean => {
                    rapidities(&build_shape_matrix(cfg, Some(&dis)).map_err(compute)?).map_err(compute)?.betas
                }
            };
            let tag = match label {
                None => Cell::Text("extreme".into()),
                Some(i) => Cell::from(i),
            };
            Ok(values
                .iter()
                .enumerate()
                .map(|(m, z)| vec![tag.clone(), rs[ri].into(), m.into(), z.re.into(), z.im.into()])
                .collect())
        })
        .collect();
    let columns = match which {
        Which::Effective => ["realization", "r", "index", "re_E", "im_E"],
        Which::Liouvillean => ["realization", "r", "index", "re_beta", "im_beta"],
    };
    let mut table = with_config(Table::new(&columns), cfg)
        .meta("which", format!("{which:?}").to_lowercase())
        .meta("seed", setup.seed)
        .meta("realizations", realizations)
        .meta("disorder_mode", format!("{mode:?}").to_lowercase())
        .meta("prng", "ChaCha8 seeded per realization");
    if let Ok((rc1, rc2)) = critical_disorder_strengths(cfg) {
        table = table.meta("rc1", rc1);
        table = table.meta("rc2", rc2.map_or("undefined".to_string(), |v| v.to_string()));
    }
    for b in blocks {
        for row in b? {
            table.push(row);
        }
    }
    Ok(vec![main_output(setup, &table)])
}

/// Convenience for tests: the primary output rendered in `format`.
#[cfg(test)]
pub fn render_first(artifacts: &[Artifact]) -> &str {
    &artifacts[0].contents
}
