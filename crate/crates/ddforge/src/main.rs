use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ddforge::config::ExperimentConfig;
use ddforge::filter::{
    chi_closed_form_free, chi_frequency_domain, chi_time_domain, gamma_inst, modulation,
    window_transform, CoherencePair,
};
use ddforge::metrics::crossing_time;
use ddforge::noise::OUNoiseParams;
use ddforge::optimize::{
    compare_protocols, optimize, NelderMeadConfig, OptimizationProblem,
};
use ddforge::pmme::{
    chi_pm, lindblad_eigenrates, pmme_evolve_analytic, pmme_evolve_volterra,
    DephasingLindbladian, MemoryKernel,
};
use ddforge::qmath::DensityMatrix4;
use ddforge::sequence::{cpmg, custom_symmetric, free_evolution, udd, xy8, PulseSequence};
use ddforge::swap::evolve_swap;
use ddforge::trajectory::{extract_traces, run_with_errors, PulseErrorModel};
use ddforge::DdError;

#[derive(Parser)]
#[command(name = "ddforge", about = "Correlated-dephasing and dynamical-decoupling toolkit")]
struct Cli {
    /// JSON experiment configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    n_traj: Option<usize>,
    /// Restrict to one protocol: no-dd | cpmg | udd | xy8 | tls-opt.
    #[arg(long, global = true)]
    protocol: Option<String>,
    #[arg(long, global = true)]
    n_pulses: Option<usize>,
    #[arg(long, global = true)]
    t_star_us: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exchange oscillations of the detuned pair: writes fig1b.csv.
    Swap,
    /// Free-evolution Bell decay across noise correlations: fig2.csv.
    Decay,
    /// Filter functions and spectral overlaps per protocol: filters.csv.
    Filters,
    /// Pulse-time optimization and protocol comparison table.
    Optimize,
    /// Monte-Carlo lifetime vs control-error sweep: fig4c.csv.
    Robustness,
    /// Post-Markovian solver comparison: pmme.csv and a residual report.
    Pmme,
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("DDFORGE_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: DDFORGE_THREADS must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = Some(out.clone());
    }
    if let Some(seed) = cli.seed {
        cfg.mc.seed = seed;
    }
    if let Some(n) = cli.n_traj {
        cfg.mc.n_traj = n;
    }
    if let Some(p) = &cli.protocol {
        cfg.dd.protocol = p.clone();
    }
    if let Some(n) = cli.n_pulses {
        cfg.dd.n_pulses = n;
    }
    if let Some(t) = cli.t_star_us {
        cfg.dd.t_star_us = t;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let restrict = cli.protocol.clone();
    let result = match cli.command {
        Command::Swap => cmd_swap(&cfg),
        Command::Decay => cmd_decay(&cfg),
        Command::Filters => cmd_filters(&cfg),
        Command::Optimize => cmd_optimize(&cfg),
        Command::Robustness => cmd_robustness(&cfg, restrict.as_deref()),
        Command::Pmme => cmd_pmme(&cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                DdError::Quadrature(_) | DdError::Numerical(_) | DdError::NoCrossing { .. } => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn out_path(cfg: &ExperimentConfig, name: &str) -> Result<PathBuf, DdError> {
    let dir = cfg
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    Ok(dir.join(name))
}

fn write_csv(
    path: &PathBuf,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<(), DdError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.12e}")
    } else {
        String::new()
    }
}

fn protocol_sequence(
    name: &str,
    n: usize,
    t: f64,
    noise: &OUNoiseParams,
    seed: u64,
) -> Result<PulseSequence, DdError> {
    match name {
        "no-dd" => free_evolution(t),
        "cpmg" => cpmg(n, t),
        "udd" => udd(n, t),
        "xy8" => xy8(t, 1),
        "tls-opt" => {
            let problem = OptimizationProblem::new(n, t, noise.clone())?;
            let report = optimize(&problem, &NelderMeadConfig::default(), seed)?;
            custom_symmetric(&report.times, t)
        }
        other => Err(DdError::Config(format!("unknown protocol '{other}'"))),
    }
}

fn cmd_swap(cfg: &ExperimentConfig) -> Result<(), DdError> {
    let model = cfg.swap.model()?;
    let n = cfg.swap.n_points;
    let grid: Vec<f64> = (0..=n)
        .map(|k| k as f64 * cfg.swap.t_max_ns / n as f64)
        .collect();
    let rho0 = DensityMatrix4::basis_state(2); // |10>
    let trace = evolve_swap(&model, &rho0, &grid)?;
    let path = out_path(cfg, "fig1b.csv")?;
    write_csv(
        &path,
        &["t_ns", "concurrence", "bell_fidelity"],
        trace
            .times_ns
            .iter()
            .zip(trace.concurrence.iter().zip(&trace.bell_fidelity))
            .map(|(t, (c, f))| vec![fmt(*t), fmt(*c), fmt(*f)]),
    )?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_decay(cfg: &ExperimentConfig) -> Result<(), DdError> {
    let lambda = cfg.noise.lambda();
    let tau_c = cfg.noise.tau_c_us;
    let rhos = [0.0, 0.4, 0.8, 1.0];
    let t_max = 5.0_f64.max(8.0 * tau_c);
    let n_points = 100usize;
    let pair = CoherencePair::bell();
    let mut rows = Vec::new();
    for &rho in &rhos {
        let params = OUNoiseParams::symmetric(lambda, tau_c, rho)?;
        let seq = free_evolution(t_max)?;
        let markov_rate = 2.0 * (1.0 - rho) * params.gamma_phi(0);
        for k in 0..=n_points {
            let t = k as f64 * t_max / n_points as f64;
            let closed = chi_closed_form_free(&params, t).chi_bell;
            let quad = if t == 0.0 {
                0.0
            } else {
                chi_frequency_domain(&params, &seq, &pair, t)?
            };
            let c = (-closed).exp();
            rows.push(vec![
                fmt(rho),
                fmt(t),
                fmt(closed),
                fmt(quad),
                fmt(c),
                fmt(0.5 * (1.0 + c)),
                fmt(gamma_inst(&params, t)),
                fmt((-markov_rate * t).exp()),
            ]);
        }
    }
    let path = out_path(cfg, "fig2.csv")?;
    write_csv(
        &path,
        &[
            "rho",
            "t_us",
            "chi_closed_form",
            "chi_quadrature",
            "concurrence",
            "bell_fidelity",
            "gamma_inst_per_us",
            "markov_coherence",
        ],
        rows,
    )?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_filters(cfg: &ExperimentConfig) -> Result<(), DdError> {
    let params = cfg.noise.params()?;
    let t = cfg.dd.t_star_us;
    let n = cfg.dd.n_pulses;
    let pair = CoherencePair::bell();
    let protocols = ["no-dd", "cpmg", "udd", "xy8", "tls-opt"];
    let n_omega = 500usize;
    let omega_max = 20.0 / params.tau_c;
    let mut rows = Vec::new();
    for name in protocols {
        let seq = protocol_sequence(name, n, t, &params, cfg.mc.seed)?;
        let y: Vec<_> = (0..2).map(|q| modulation(&seq, q)).collect();
        for k in 0..=n_omega {
            let omega = k as f64 * omega_max / n_omega as f64;
            let yw: Vec<_> = y.iter().map(|m| window_transform(m, omega)).collect();
            let filter = yw[0].norm_sqr();
            let mut overlap = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    overlap += pair.s[i]
                        * pair.s[j]
                        * params.spectral_density(i, j, omega)
                        * (yw[i] * yw[j].conj()).re;
                }
            }
            rows.push(vec![fmt(omega), name.to_string(), fmt(filter), fmt(overlap)]);
        }
    }
    let path = out_path(cfg, "filters.csv")?;
    write_csv(
        &path,
        &[
            "omega_rad_per_us",
            "protocol",
            "filter_abs_y_sq_us2",
            "spectral_overlap_us",
        ],
        rows,
    )?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_optimize(cfg: &ExperimentConfig) -> Result<(), DdError> {
    let params = cfg.noise.params()?;
    let problem = OptimizationProblem::new(cfg.dd.n_pulses, cfg.dd.t_star_us, params.clone())?;
    let report = optimize(&problem, &NelderMeadConfig::default(), cfg.mc.seed)?;
    let seq = custom_symmetric(&report.times, cfg.dd.t_star_us)?;

    let seq_path = out_path(cfg, "tls_opt_sequence.json")?;
    std::fs::write(
        &seq_path,
        format!("{:#}\n", seq.to_json()),
    )?;
    let trace_path = out_path(cfg, "optimize_trace.csv")?;
    write_csv(
        &trace_path,
        &["iteration", "cost"],
        report
            .trace
            .iter()
            .enumerate()
            .map(|(i, j)| vec![i.to_string(), fmt(*j)]),
    )?;

    let summaries = compare_protocols(cfg.dd.t_star_us, cfg.dd.n_pulses, &params)?;
    let cmp_path = out_path(cfg, "comparison.csv")?;
    write_csv(
        &cmp_path,
        &[
            "protocol",
            "chi_at_t_star",
            "concurrence_at_t_star",
            "bell_fidelity_at_t_star",
            "tau_c_us",
            "t_0999_us",
        ],
        summaries.iter().map(|s| {
            vec![
                s.name.clone(),
                fmt(s.chi_at_t_star),
                fmt(s.concurrence_at_t_star),
                fmt(s.fidelity_at_t_star),
                s.lifetime.tau_c_us.map(fmt).unwrap_or_default(),
                s.lifetime.t_0999_us.map(fmt).unwrap_or_default(),
            ]
        }),
    )?;
    println!(
        "wrote {}, {}, {}",
        seq_path.display(),
        trace_path.display(),
        cmp_path.display()
    );
    println!(
        "optimized cost {:.6e} (equally spaced {:.6e}) in {} iterations",
        report.cost, report.initial_cost, report.iterations
    );
    if !report.converged {
        return Err(DdError::Numerical(
            "Nelder-Mead did not converge; best-effort outputs were written".into(),
        ));
    }
    Ok(())
}

fn mc_tau_c(
    params: &OUNoiseParams,
    base_seq: &PulseSequence,
    err: &PulseErrorModel,
    t_grid: &[f64],
    n_traj: usize,
    seed: u64,
) -> Result<(Option<f64>, Option<f64>), DdError> {
    let rho0 = DensityMatrix4::bell_psi_plus();
    let mut times = Vec::new();
    let mut conc = Vec::new();
    let mut stderrs = Vec::new();
    for &t in t_grid {
        let seq = base_seq.stretched(t)?;
        let res = match run_with_errors(params, &seq, err, &rho0, &[t], n_traj, seed) {
            Ok(r) => r,
            // Stretched spacing can fall below tau_p at the short end.
            Err(DdError::InvalidSequence(_)) => continue,
            Err(e) => return Err(e),
        };
        let rep = extract_traces(&res)?;
        times.push(t);
        conc.push(rep.concurrence[0]);
        stderrs.push(rep.concurrence_stderr[0]);
    }
    if times.len() < 2 {
        return Ok((None, None));
    }
    let threshold = (-1.0f64).exp();
    let tau = crossing_time(&times, &conc, threshold)?;
    let Some(tau) = tau else {
        return Ok((None, None));
    };
    // Error bar: statistical spread of C at the crossing divided by the
    // local slope of the concurrence curve.
    let k = times.partition_point(|&t| t < tau).clamp(1, times.len() - 1);
    let slope = (conc[k] - conc[k - 1]) / (times[k] - times[k - 1]);
    let se = 0.5 * (stderrs[k] + stderrs[k - 1]);
    let tau_se = if slope.abs() > 1e-12 {
        (se / slope).abs()
    } else {
        f64::NAN
    };
    Ok((Some(tau), Some(tau_se)))
}

fn cmd_robustness(cfg: &ExperimentConfig, restrict: Option<&str>) -> Result<(), DdError> {
    let params = cfg.noise.params()?;
    let n = cfg.dd.n_pulses;
    let t_star = cfg.dd.t_star_us;
    let all = ["no-dd", "cpmg", "xy8", "tls-opt"];
    let protocols: Vec<&str> = match restrict {
        Some(p) => vec![p],
        None => all.to_vec(),
    };
    let pair = CoherencePair::bell();
    let mut rows = Vec::new();
    for name in &protocols {
        let base = protocol_sequence(name, n, t_star, &params, cfg.mc.seed)?;
        // Predict the zero-error lifetime from the analytic exponent to
        // center the Monte-Carlo grid.
        let predicted = predict_tau_c(&params, &base, &pair)?;
        let lo = 0.2 * predicted;
        let hi = 3.0 * predicted;
        let n_grid = 14usize;
        let t_grid: Vec<f64> = (0..n_grid)
            .map(|k| lo * (hi / lo).powf(k as f64 / (n_grid - 1) as f64))
            .collect();
        for &sigma_eps in &cfg.mc.sigma_eps_list {
            let err = PulseErrorModel {
                tau_p_ns: cfg.mc.tau_p_ns,
                sigma_eps,
                per_sequence: false,
                freeze_noise_in_pulse: false,
            };
            let (tau, se) = mc_tau_c(&params, &base, &err, &t_grid, cfg.mc.n_traj, cfg.mc.seed)?;
            rows.push(vec![
                fmt(sigma_eps),
                name.to_string(),
                tau.map(fmt).unwrap_or_default(),
                se.map(fmt).unwrap_or_default(),
            ]);
        }
    }
    let path = out_path(cfg, "fig4c.csv")?;
    write_csv(
        &path,
        &["sigma_eps", "protocol", "tau_c_us", "stderr_us"],
        rows,
    )?;
    println!("wrote {}", path.display());
    Ok(())
}

fn predict_tau_c(
    params: &OUNoiseParams,
    base: &PulseSequence,
    pair: &CoherencePair,
) -> Result<f64, DdError> {
    let mut t = base.total_time;
    for _ in 0..80 {
        let seq = base.stretched(t)?;
        let chi = chi_time_domain(params, &seq, pair, t);
        if chi >= 1.0 {
            return Ok(t);
        }
        t *= 1.3;
    }
    Err(DdError::Numerical(
        "no analytic 1/e crossing within the scanned horizon".into(),
    ))
}

fn cmd_pmme(cfg: &ExperimentConfig) -> Result<(), DdError> {
    let params = cfg.noise.params()?;
    // Calibration: the generator rate equals the motional-narrowed
    // dephasing rate of the OU model.
    let gamma0 = params.gamma_phi(0);
    let l = DephasingLindbladian::new(gamma0, params.rho())?;
    let k = MemoryKernel::new(params.tau_c)?;
    let rho0 = DensityMatrix4::bell_psi_plus();
    let t_max = 5.0_f64.max(10.0 * params.tau_c);
    let dt = params.tau_c / 200.0;
    let (times, volterra) = pmme_evolve_volterra(&l, &k, &rho0, dt, t_max)?;
    let analytic = pmme_evolve_analytic(&l, &k, &rho0, &times)?;

    let coh_a: Vec<_> = analytic.iter().map(|r| r.matrix()[1][2]).collect();
    let coh_v: Vec<_> = volterra.iter().map(|r| r.matrix()[1][2]).collect();
    let (chi_curve, gamma) = chi_pm(&times, &coh_a)?;

    let stride = (times.len() / 500).max(1);
    let mut rows = Vec::new();
    let mut max_solver_diff = 0.0f64;
    let mut max_chi_residual = 0.0f64;
    for (idx, &t) in times.iter().enumerate() {
        let diff = (coh_a[idx] - coh_v[idx]).norm();
        max_solver_diff = max_solver_diff.max(diff);
        if idx >= chi_curve.times.len() {
            break;
        }
        let chi_filter = chi_closed_form_free(&params, t).chi_bell;
        let residual = chi_curve.chi[idx] - chi_filter;
        max_chi_residual = max_chi_residual.max(residual.abs());
        if idx % stride == 0 {
            rows.push(vec![
                fmt(t),
                fmt(coh_a[idx].re),
                fmt(coh_a[idx].im),
                fmt(coh_v[idx].re),
                fmt(coh_v[idx].im),
                fmt(chi_curve.chi[idx]),
                fmt(gamma[idx]),
                fmt(chi_filter),
                fmt(residual),
            ]);
        }
    }
    let path = out_path(cfg, "pmme.csv")?;
    write_csv(
        &path,
        &[
            "t_us",
            "re_coherence_analytic",
            "im_coherence_analytic",
            "re_coherence_volterra",
            "im_coherence_volterra",
            "chi_pm",
            "gamma_inst_pm_per_us",
            "chi_filter_function",
            "chi_residual",
        ],
        rows,
    )?;
    let mu = lindblad_eigenrates(&l)[1][2];
    let report = format!(
        "max |analytic - volterra| coherence difference: {max_solver_diff:.3e}\n\
         max |chi_pm - chi_filter| over [0, {t_max}] us: {max_chi_residual:.3e}\n\
         tracked coherence eigenrate mu = {mu:.6e} per us\n"
    );
    let report_path = out_path(cfg, "pmme_report.txt")?;
    std::fs::write(&report_path, &report)?;
    print!("{report}");
    println!("wrote {} and {}", path.display(), report_path.display());
    Ok(())
}
