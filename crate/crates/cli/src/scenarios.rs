//! One function per subcommand. Each produces CSV artifacts plus a
//! manifest.json recording the resolved configuration, the regime, the rate
//! variants and the sign-convention resolutions in effect.

use std::path::Path;
use std::time::Instant;

use serde_json::{json, Value};

use qfp_core::covariance::{covariance, covariance_quadrature, state_covariance};
use qfp_core::dispersion::{dispersion_case, lp_decay_envelope, rate_rn, rate_rw, DispersionCase};
use qfp_core::entropy::{decay_rates, verify_entropy_decay, EntropyGenerator};
use qfp_core::equilibrium::{no_steady_state_certificate, stationarity_residual, steady_state};
use qfp_core::fd_oracle::{fd_solve, FdConfig};
use qfp_core::flow::{flow_coefficients, jacobian_determinant, regime, FlowRegime};
use qfp_core::grid::{GaussianSpec, PhaseGrid, WignerField};
use qfp_core::kernel::GaussianKernel;
use qfp_core::params::{ModelParams, PhasePoint};
use qfp_core::propagator::{moments, propagate_to_grid, suggest_grid};
use qfp_core::verify::run_battery;

use crate::config::{CliError, CliResult, ResolvedModel, RunConfig};
use crate::io::{
    ensure_dir, fmt_f64, fmt_time, read_field, read_manifest, write_field, write_gnuplot_stub,
    write_manifest, CsvWriter,
};

fn regime_name(p: &ModelParams) -> &'static str {
    match regime(p) {
        FlowRegime::Underdamped { .. } => "underdamped",
        FlowRegime::Overdamped { .. } => "overdamped",
        FlowRegime::Critical => "critical",
    }
}

fn case_name(p: &ModelParams) -> &'static str {
    if p.is_confined() {
        return "confined";
    }
    match dispersion_case(p).expect("unconfined") {
        DispersionCase::OscillatorNoFriction => "oscillator-no-friction",
        DispersionCase::FrictionFree => "friction-free",
        DispersionCase::FreeStreaming => "free-streaming",
    }
}

fn base_manifest(command: &str, cfg: &RunConfig, model: &ResolvedModel) -> Value {
    let p = &model.params;
    let mut m = json!({
        "command": command,
        "seed": cfg.seed,
        "model": {
            "gamma": p.gamma,
            "omega0": p.omega0,
            "dpp": p.dpp,
            "dqq": p.dqq,
            "dpq": p.dpq,
            "dim": p.dim,
            "hbar": p.hbar,
            "mass": p.mass,
            "regime": regime_name(p),
            "case": case_name(p),
        },
        "frame": {
            "x_shift": model.x_shift,
            "note": "outputs are reported in the shifted frame where the potential is omega0^2 |x|^2 / 2",
        },
        "conventions": {
            "kernel_real_space_cross_term": "+mu (x.xi)",
            "kernel_fourier_cross_term": "-mu (k.eta)",
            "density_rate_cross_term": "-mu (state-covariance form)",
            "steady_state_normalization": "unit mass: (gamma omega0 / (pi sqrt(Q)))^d",
            "kappa_variant": cfg.entropy.kappa_variant,
        },
    });
    if p.is_confined() {
        if let Ok(r) = decay_rates(p) {
            m["kappa"] = json!({
                "kappa1": r.kappa1,
                "delta": r.delta,
                "product": r.kappa_product,
                "optimal": r.kappa_optimal,
            });
        }
    }
    m
}

fn require_1d(p: &ModelParams) -> CliResult<()> {
    if p.dim != 1 {
        return Err(CliError::Config(
            "gridded scenarios are implemented for dim = 1".into(),
        ));
    }
    Ok(())
}

fn build_initial(cfg: &RunConfig, grid: PhaseGrid) -> CliResult<WignerField> {
    let block = &cfg.initial;
    let field = match block.kind.as_str() {
        "gaussian" => WignerField::gaussian_mixture(
            grid,
            0.0,
            &[GaussianSpec {
                weight: 1.0,
                center_x: block.center_x.unwrap_or(1.0),
                center_v: block.center_v.unwrap_or(0.5),
                sigma_x: block.sigma_x.unwrap_or(0.9),
                sigma_v: block.sigma_v.unwrap_or(0.8),
            }],
        ),
        "gaussian-mixture" | "signed-mixture" => {
            let comps = block.components.as_ref().ok_or_else(|| {
                CliError::Config("initial.components required for mixtures".into())
            })?;
            let mut specs = Vec::new();
            for (k, row) in comps.iter().enumerate() {
                if row.len() != 5 {
                    return Err(CliError::Config(format!(
                        "initial.components[{k}] must be [weight, cx, cv, sx, sv]"
                    )));
                }
                if block.kind == "gaussian-mixture" && row[0] < 0.0 {
                    return Err(CliError::Config(
                        "negative weights need kind = \"signed-mixture\"".into(),
                    ));
                }
                specs.push(GaussianSpec {
                    weight: row[0],
                    center_x: row[1],
                    center_v: row[2],
                    sigma_x: row[3],
                    sigma_v: row[4],
                });
            }
            WignerField::gaussian_mixture(grid, 0.0, &specs)
        }
        "csv" => {
            let path = block
                .path
                .as_ref()
                .ok_or_else(|| CliError::Config("initial.path required for kind = csv".into()))?;
            let f = read_field(Path::new(path), 0.0)?;
            if *f.grid() != grid {
                return Err(CliError::Config(format!(
                    "csv grid ({} x {}) does not match the configured grid",
                    f.grid().nx(),
                    f.grid().nv()
                )));
            }
            f
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown initial.kind `{other}` (gaussian | gaussian-mixture | signed-mixture | csv)"
            )))
        }
    };
    if block.normalize {
        field.normalized_to_unit_mass().map_err(CliError::from)
    } else {
        Ok(field)
    }
}

/// Initial-data spread estimate for auto-sized grids.
fn initial_sigma(cfg: &RunConfig) -> (f64, f64) {
    let block = &cfg.initial;
    match block.kind.as_str() {
        "gaussian" => {
            let sx = block.sigma_x.unwrap_or(0.9).abs() + block.center_x.unwrap_or(1.0).abs();
            let sv = block.sigma_v.unwrap_or(0.8).abs() + block.center_v.unwrap_or(0.5).abs();
            (sx, sv)
        }
        "gaussian-mixture" | "signed-mixture" => block
            .components
            .as_ref()
            .map(|comps| {
                comps.iter().fold((0.5, 0.5), |acc, row| {
                    if row.len() == 5 {
                        (acc.0.max(row[3].abs() + row[1].abs()), acc.1.max(row[4].abs() + row[2].abs()))
                    } else {
                        acc
                    }
                })
            })
            .unwrap_or((1.5, 1.5)),
        _ => (1.5, 1.5),
    }
}

fn resolve_grid(cfg: &RunConfig, p: &ModelParams, t_max: f64) -> CliResult<PhaseGrid> {
    let g = cfg.grid;
    if g.lx > 0.0 && g.lv > 0.0 {
        return PhaseGrid::new(g.nx, g.nv, g.lx, g.lv).map_err(CliError::from);
    }
    let sigma = initial_sigma(cfg);
    let auto = suggest_grid(p, sigma, t_max, g.nx.max(g.nv)).map_err(CliError::from)?;
    PhaseGrid::new(
        g.nx,
        g.nv,
        if g.lx > 0.0 { g.lx } else { auto.lx() },
        if g.lv > 0.0 { g.lv } else { auto.lv() },
    )
    .map_err(CliError::from)
}

fn norm_table(field: &WignerField) -> Value {
    json!({
        "mass": field.mass(),
        "l1": field.lp_norm(1.0),
        "l2": field.lp_norm(2.0),
        "linf": field.lp_norm(f64::INFINITY),
    })
}

pub fn run_flow(cfg: &RunConfig, model: &ResolvedModel, out: &Path, gnuplot: bool) -> CliResult<()> {
    let start = Instant::now();
    ensure_dir(out)?;
    let times = cfg.time.resolve()?;
    let mut w = CsvWriter::create(
        &out.join("flow.csv"),
        &[
            "t",
            "alpha",
            "beta",
            "alpha_dot",
            "beta_dot",
            "alpha_tilde",
            "beta_tilde",
            "jacobian",
        ],
    )?;
    for &t in &times {
        let c = flow_coefficients(&model.params, t);
        w.write_row(&[
            t,
            c.alpha,
            c.beta,
            c.alpha_dot,
            c.beta_dot,
            c.alpha_fwd,
            c.beta_fwd,
            jacobian_determinant(&model.params, t),
        ])?;
    }
    if gnuplot {
        write_gnuplot_stub(out, "flow.csv", &[(2, "alpha"), (3, "beta"), (8, "jacobian")])?;
    }
    let mut manifest = base_manifest("flow", cfg, model);
    manifest["times"] = json!(times);
    manifest["runtime_ms"] = json!(start.elapsed().as_millis() as u64);
    write_manifest(out, &manifest)
}

pub fn run_kernel(cfg: &RunConfig, model: &ResolvedModel, out: &Path, gnuplot: bool) -> CliResult<()> {
    let start = Instant::now();
    ensure_dir(out)?;
    require_1d(&model.params)?;
    let times = cfg.time.resolve()?;
    let p = &model.params;
    let mut header = vec!["t", "lambda", "nu", "mu", "disc"];
    if cfg.kernel.quadrature {
        header.extend_from_slice(&["lambda_quad", "nu_quad", "mu_quad"]);
    }
    let mut w = CsvWriter::create(&out.join("kernel.csv"), &header)?;
    for &t in &times {
        let c = covariance(p, t).map_err(CliError::from)?;
        let mut row = vec![t, c.lambda, c.nu, c.mu, c.disc()];
        if cfg.kernel.quadrature {
            let q = covariance_quadrature(p, t, 1e-12).map_err(CliError::from)?;
            row.extend_from_slice(&[q.lambda, q.nu, q.mu]);
        }
        w.write_row(&row)?;
    }
    // kernel slices on kernel-adapted grids
    for &t in &times {
        let k = GaussianKernel::new(p, t).map_err(CliError::from)?;
        let sx = (2.0 * k.covariance().lambda).sqrt();
        let sv = (2.0 * k.covariance().nu).sqrt();
        let grid = PhaseGrid::new(cfg.grid.nx, cfg.grid.nv, 7.0 * sx, 7.0 * sv)
            .map_err(CliError::from)?;
        let field = WignerField::from_fn(grid, t, |x, v| k.eval_f(&PhasePoint::new_1d(x, v)));
        write_field(out, &format!("kernel_t{}.csv", fmt_time(t)), &field)?;
    }
    if gnuplot {
        write_gnuplot_stub(
            out,
            "kernel.csv",
            &[(2, "lambda"), (3, "nu"), (4, "mu"), (5, "disc")],
        )?;
    }
    let mut manifest = base_manifest("kernel", cfg, model);
    manifest["times"] = json!(times);
    manifest["quadrature_cross_check"] = json!(cfg.kernel.quadrature);
    manifest["runtime_ms"] = json!(start.elapsed().as_millis() as u64);
    write_manifest(out, &manifest)
}

pub fn run_propagate(
    cfg: &RunConfig,
    model: &ResolvedModel,
    out: &Path,
    gnuplot: bool,
) -> CliResult<()> {
    let start = Instant::now();
    ensure_dir(out)?;
    require_1d(&model.params)?;
    let p = &model.params;
    let times = cfg.time.resolve()?;
    let t_max = *times.last().expect("nonempty");
    let grid = resolve_grid(cfg, p, t_max)?;
    let w0 = build_initial(cfg, grid)?;
    write_field(out, "w_t0.csv", &w0)?;

    let mut per_time = serde_json::Map::new();
    per_time.insert("0".into(), norm_table(&w0));
    for &t in &times {
        // unconfined runs re-grid with the spreading kernel
        let out_grid = if p.is_confined() {
            grid
        } else {
            let state = state_covariance(p, t).map_err(CliError::from)?;
            let sigma0 = initial_sigma(cfg);
            PhaseGrid::new(
                grid.nx(),
                grid.nv(),
                6.0 * (state.xx + sigma0.0 * sigma0.0).sqrt(),
                6.0 * (state.vv + sigma0.1 * sigma0.1).sqrt(),
            )
            .map_err(CliError::from)?
        };
        let wt = propagate_to_grid(p, &w0, t, out_grid).map_err(CliError::from)?;
        write_field(out, &format!("w_t{}.csv", fmt_time(t)), &wt)?;
        let m = moments(p, &wt);
        let mut csv = CsvWriter::create(
            &out.join(format!("n_t{}.csv", fmt_time(t))),
            &["x", "n", "j", "flux"],
        )?;
        for i in 0..m.x.len() {
            csv.write_row(&[m.x[i], m.n[i], m.j[i], m.flux[i]])?;
        }
        per_time.insert(fmt_time(t), norm_table(&wt));
    }
    if gnuplot {
        write_gnuplot_stub(
            out,
            &format!("n_t{}.csv", fmt_time(times[0])),
            &[(2, "n"), (4, "flux")],
        )?;
    }
    let mut manifest = base_manifest("propagate", cfg, model);
    manifest["times"] = json!(times);
    manifest["grid"] = json!({"nx": grid.nx(), "nv": grid.nv(), "lx": grid.lx(), "lv": grid.lv()});
    manifest["per_time"] = Value::Object(per_time);
    manifest["runtime_ms"] = json!(start.elapsed().as_millis() as u64);
    write_manifest(out, &manifest)
}

pub fn run_steady(cfg: &RunConfig, model: &ResolvedModel, out: &Path, gnuplot: bool) -> CliResult<()> {
    let start = Instant::now();
    ensure_dir(out)?;
    require_1d(&model.params)?;
    let p = &model.params;
    let ss = steady_state(p).map_err(CliError::from)?;
    let cov = ss.covariance_block();
    let grid = if cfg.grid.lx > 0.0 && cfg.grid.lv > 0.0 {
        PhaseGrid::new(cfg.grid.nx, cfg.grid.nv, cfg.grid.lx, cfg.grid.lv).map_err(CliError::from)?
    } else {
        PhaseGrid::new(
            cfg.grid.nx,
            cfg.grid.nv,
            6.5 * cov.xx.sqrt(),
            6.5 * cov.vv.sqrt(),
        )
        .map_err(CliError::from)?
    };
    let field = ss.sample(grid, 1.0);
    write_field(out, "steady.csv", &field)?;
    let m = moments(p, &field);
    let mut csv = CsvWriter::create(&out.join("n_inf.csv"), &["x", "n", "j", "flux"])?;
    for i in 0..m.x.len() {
        csv.write_row(&[m.x[i], m.n[i], m.j[i], m.flux[i]])?;
    }
    // scalar diagnostics
    let rgrid = PhaseGrid::new(33, 33, grid.lx(), grid.lv()).map_err(CliError::from)?;
    let resid = stationarity_residual(p, &rgrid).map_err(CliError::from)?;
    let fine = PhaseGrid::new(4097, 1025, grid.lx(), grid.lv()).map_err(CliError::from)?;
    let mfine = moments(p, &ss.sample(fine, 1.0));
    let flux_inf = mfine.flux.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let pot = qfp_core::params::equilibrium_potential(p).map_err(CliError::from)?;
    let qc = ss.q_coefficients();

    if gnuplot {
        write_gnuplot_stub(out, "n_inf.csv", &[(2, "n"), (4, "flux")])?;
    }
    let mut manifest = base_manifest("steady", cfg, model);
    manifest["grid"] = json!({"nx": grid.nx(), "nv": grid.nv(), "lx": grid.lx(), "lv": grid.lv()});
    manifest["steady"] = json!({
        "q11": qc.q11,
        "q12": qc.q12,
        "q22": qc.q22,
        "q": qc.q,
        "normalization_per_dim": ss.normalization_per_dim(),
        "kappa1": pot.kappa1(),
        "mass": field.mass(),
        "stationarity_residual": resid,
        "max_flux": flux_inf,
    });
    manifest["runtime_ms"] = json!(start.elapsed().as_millis() as u64);
    write_manifest(out, &manifest)
}

pub fn run_entropy(
    cfg: &RunConfig,
    model: &ResolvedModel,
    out: &Path,
    gnuplot: bool,
) -> CliResult<()> {
    let start = Instant::now();
    ensure_dir(out)?;
    require_1d(&model.params)?;
    let p = &model.params;
    let times = cfg.time.resolve()?;
    let gen = match cfg.entropy.generator.as_str() {
        "log" => EntropyGenerator::Log,
        "quadratic" => EntropyGenerator::quadratic(),
        other => {
            return Err(CliError::Config(format!(
                "unknown entropy.generator `{other}` (log | quadratic)"
            )))
        }
    };
    let variant = cfg.entropy.kappa_variant.as_str();
    if !matches!(variant, "product" | "optimal" | "both") {
        return Err(CliError::Config(format!(
            "unknown entropy.kappa_variant `{variant}` (product | optimal | both)"
        )));
    }
    let grid = resolve_grid(cfg, p, *times.last().expect("nonempty"))?;
    let w0 = build_initial(cfg, grid)?;
    let report = verify_entropy_decay(p, &w0, gen, &times).map_err(CliError::from)?;

    let mut header = vec!["time", "entropy_plus", "entropy_minus", "bound", "l1_distance"];
    if variant == "both" {
        header.push("bound_optimal");
    }
    let mut csv = CsvWriter::create(&out.join("entropy.csv"), &header)?;
    let e0 = report.entropy_plus_initial + report.entropy_minus_initial;
    for (k, &t) in report.times.iter().enumerate() {
        let bound_product = e0 * (-2.0 * report.rates.kappa_product * t).exp();
        let bound_optimal = e0 * (-2.0 * report.rates.kappa_optimal * t).exp();
        let bound = match variant {
            "optimal" => bound_optimal,
            _ => bound_product,
        };
        let mut row = vec![
            t,
            report.entropy_plus[k],
            report.entropy_minus[k],
            bound,
            report.l1_distance[k],
        ];
        if variant == "both" {
            row.push(bound_optimal);
        }
        csv.write_row(&row)?;
    }
    if gnuplot {
        write_gnuplot_stub(
            out,
            "entropy.csv",
            &[(2, "entropy_plus"), (4, "bound"), (5, "l1_distance")],
        )?;
    }
    let mut manifest = base_manifest("entropy", cfg, model);
    manifest["times"] = json!(times);
    manifest["generator"] = json!(cfg.entropy.generator);
    manifest["entropy"] = json!({
        "initial_plus": report.entropy_plus_initial,
        "initial_minus": report.entropy_minus_initial,
        "mass_plus": report.mass_plus,
        "mass_minus": report.mass_minus,
        "fitted_rate_plus": report.fitted_rate_plus,
        "fitted_rate_minus": report.fitted_rate_minus,
        "fitted_rate_l1": report.fitted_rate_l1,
        "degenerate": report.degenerate,
    });
    manifest["runtime_ms"] = json!(start.elapsed().as_millis() as u64);
    write_manifest(out, &manifest)
}

pub fn run_dispersion(
    cfg: &RunConfig,
    model: &ResolvedModel,
    out: &Path,
    gnuplot: bool,
) -> CliResult<()> {
    let start = Instant::now();
    ensure_dir(out)?;
    let p = &model.params;
    dispersion_case(p).map_err(CliError::from)?;
    let times = cfg.time.resolve()?;
    let norms = cfg.dispersion.norms()?;

    let mut header: Vec<String> = vec!["t".into(), "r_w".into(), "r_n".into()];
    for s in &cfg.dispersion.p_list {
        header.push(format!("envelope_p{s}"));
    }
    if cfg.dispersion.measure {
        require_1d(p)?;
        for s in &cfg.dispersion.p_list {
            header.push(format!("measured_p{s}"));
        }
        header.push("measured_n_inf".into());
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = CsvWriter::create(&out.join("dispersion.csv"), &header_refs)?;

    // measured norms propagate the configured data on spreading grids
    let w0 = if cfg.dispersion.measure {
        let grid = resolve_grid(cfg, p, 0.0)?;
        Some(build_initial(cfg, grid)?)
    } else {
        None
    };
    for &t in &times {
        let mut row = vec![t, rate_rw(p, t).map_err(CliError::from)?, rate_rn(p, t).map_err(CliError::from)?];
        for &pn in &norms {
            row.push(lp_decay_envelope(p, t, pn, 1.0).map_err(CliError::from)?);
        }
        if let Some(w0) = &w0 {
            let state = state_covariance(p, t).map_err(CliError::from)?;
            let sigma0 = initial_sigma(cfg);
            let out_grid = PhaseGrid::new(
                cfg.grid.nx,
                cfg.grid.nv,
                6.0 * (state.xx + sigma0.0 * sigma0.0).sqrt(),
                6.0 * (state.vv + sigma0.1 * sigma0.1).sqrt(),
            )
            .map_err(CliError::from)?;
            let wt = propagate_to_grid(p, w0, t, out_grid).map_err(CliError::from)?;
            for &pn in &norms {
                row.push(wt.lp_norm(pn));
            }
            let m = moments(p, &wt);
            row.push(m.n.iter().fold(0.0f64, |a, b| a.max(b.abs())));
        }
        csv.write_row(&row)?;
    }
    if gnuplot {
        write_gnuplot_stub(out, "dispersion.csv", &[(2, "r_w"), (3, "r_n")])?;
    }
    let cert = no_steady_state_certificate(p).map_err(CliError::from)?;
    let mut manifest = base_manifest("dispersion", cfg, model);
    manifest["times"] = json!(times);
    manifest["asymptotic_orders"] = {
        let (ow, on) = qfp_core::dispersion::asymptotic_orders(p).map_err(CliError::from)?;
        json!({"r_w": ow, "r_n": on})
    };
    manifest["certificate"] = json!({
        "k0": cert.k0,
        "eta0": cert.eta0,
        "s": cert.s,
        "exponent": cert.exponent,
        "witness": cert.witness,
    });
    manifest["runtime_ms"] = json!(start.elapsed().as_millis() as u64);
    write_manifest(out, &manifest)
}

pub fn run_oracle(cfg: &RunConfig, model: &ResolvedModel, out: &Path, gnuplot: bool) -> CliResult<()> {
    let start = Instant::now();
    ensure_dir(out)?;
    require_1d(&model.params)?;
    let p = &model.params;
    let times = cfg.time.resolve()?;
    let grid = resolve_grid(cfg, p, *times.last().expect("nonempty"))?;
    let w0 = build_initial(cfg, grid)?;
    write_field(out, "w_t0.csv", &w0)?;
    let fd_cfg = FdConfig {
        dt: cfg.oracle.dt,
        damping_band: cfg.oracle.damping_band,
        damping_strength: cfg.oracle.damping_strength,
    };

    let mut per_time = serde_json::Map::new();
    per_time.insert("0".into(), norm_table(&w0));
    let mut field = w0;
    let mut t_prev = 0.0;
    let mut boundary_loss = 0.0;
    let mut scheme_drift = 0.0;
    let mut steps = 0usize;
    for &t in &times {
        let run = fd_solve(&fd_cfg, p, &field, t - t_prev).map_err(CliError::from)?;
        field = run.field;
        boundary_loss += run.boundary_loss;
        scheme_drift += run.scheme_drift;
        steps += run.steps;
        t_prev = t;
        write_field(out, &format!("w_t{}.csv", fmt_time(t)), &field)?;
        let m = moments(p, &field);
        let mut csv = CsvWriter::create(
            &out.join(format!("n_t{}.csv", fmt_time(t))),
            &["x", "n", "j", "flux"],
        )?;
        for i in 0..m.x.len() {
            csv.write_row(&[m.x[i], m.n[i], m.j[i], m.flux[i]])?;
        }
        let mut table = norm_table(&field);
        table["boundary_loss"] = json!(boundary_loss);
        table["scheme_drift"] = json!(scheme_drift);
        per_time.insert(fmt_time(t), table);
    }
    if gnuplot {
        write_gnuplot_stub(
            out,
            &format!("n_t{}.csv", fmt_time(times[0])),
            &[(2, "n"), (4, "flux")],
        )?;
    }
    let mut manifest = base_manifest("oracle", cfg, model);
    manifest["times"] = json!(times);
    manifest["grid"] = json!({"nx": grid.nx(), "nv": grid.nv(), "lx": grid.lx(), "lv": grid.lv()});
    manifest["per_time"] = Value::Object(per_time);
    manifest["oracle"] = json!({
        "dt": cfg.oracle.dt,
        "damping_band": cfg.oracle.damping_band,
        "damping_strength": cfg.oracle.damping_strength,
        "total_steps": steps,
        "boundary_loss": boundary_loss,
        "scheme_drift": scheme_drift,
    });
    manifest["runtime_ms"] = json!(start.elapsed().as_millis() as u64);
    write_manifest(out, &manifest)
}

pub fn run_verify(cfg: &RunConfig, model: &ResolvedModel, out: &Path) -> CliResult<bool> {
    let start = Instant::now();
    ensure_dir(out)?;
    let checks = run_battery(&model.params, cfg.seed).map_err(CliError::from)?;
    let mut csv = CsvWriter::create(
        &out.join("verify.csv"),
        &["name", "status", "value", "threshold", "detail"],
    )?;
    println!("{:<34} {:<8} {:>12}  {:>12}", "check", "status", "value", "threshold");
    let mut all_ok = true;
    for c in &checks {
        let status = if c.skipped {
            "skipped"
        } else if c.passed {
            "pass"
        } else {
            "FAIL"
        };
        all_ok &= c.passed;
        println!(
            "{:<34} {:<8} {:>12.3e}  {:>12.3e}",
            c.name, status, c.value, c.threshold
        );
        csv.write_mixed(&[
            c.name.to_string(),
            status.to_string(),
            fmt_f64(c.value),
            fmt_f64(c.threshold),
            format!("\"{}\"", c.detail),
        ])?;
    }
    println!(
        "{} checks, {} skipped, {}",
        checks.len(),
        checks.iter().filter(|c| c.skipped).count(),
        if all_ok { "all passed" } else { "FAILURES present" }
    );
    let mut manifest = base_manifest("verify", cfg, model);
    manifest["passed"] = json!(all_ok);
    manifest["runtime_ms"] = json!(start.elapsed().as_millis() as u64);
    write_manifest(out, &manifest)?;
    Ok(all_ok)
}

pub fn run_compare(dir_a: &Path, dir_b: &Path, out: &Path) -> CliResult<()> {
    let man_a = read_manifest(dir_a)?;
    let man_b = read_manifest(dir_b)?;
    // grids and time lists must agree
    if man_a.get("grid") != man_b.get("grid") {
        return Err(CliError::Config(format!(
            "grid blocks differ: {} vs {}",
            man_a.get("grid").unwrap_or(&Value::Null),
            man_b.get("grid").unwrap_or(&Value::Null)
        )));
    }
    if man_a.get("times") != man_b.get("times") {
        return Err(CliError::Config("time lists differ".into()));
    }
    let times: Vec<f64> = man_a
        .get("times")
        .and_then(|t| t.as_array())
        .ok_or_else(|| CliError::Config("manifest lacks a times list".into()))?
        .iter()
        .filter_map(|v| v.as_f64())
        .collect();
    ensure_dir(out)?;
    let mut csv = CsvWriter::create(&out.join("compare.csv"), &["t", "l1", "l2", "linf"])?;
    println!("{:>8} {:>14} {:>14} {:>14}", "t", "L1", "L2", "Linf");
    for &t in &times {
        let name = format!("w_t{}.csv", fmt_time(t));
        let fa = read_field(&dir_a.join(&name), t)?;
        let fb = read_field(&dir_b.join(&name), t)?;
        if fa.grid() != fb.grid() {
            return Err(CliError::Config(format!("{name}: grids differ")));
        }
        let l1 = fa.lp_distance(&fb, 1.0).map_err(CliError::from)?;
        let l2 = fa.lp_distance(&fb, 2.0).map_err(CliError::from)?;
        let li = fa.lp_distance(&fb, f64::INFINITY).map_err(CliError::from)?;
        println!("{t:>8} {l1:>14.6e} {l2:>14.6e} {li:>14.6e}");
        csv.write_row(&[t, l1, l2, li])?;
    }
    let manifest = json!({
        "command": "compare",
        "run_a": dir_a.display().to_string(),
        "run_b": dir_b.display().to_string(),
        "times": times,
    });
    write_manifest(out, &manifest)
}
