use std::path::{Path, PathBuf};

use kintraffic::dynamics::DENSITY_SLACK;
use kintraffic::output::{
    bruteforce_json, diagram_csv, diagram_json, diagram_svg, equilibrium_json, fmt_num,
    integrated_equilibrium_json, to_json_string, trajectory_csv, write_file,
};
use kintraffic::sampling::{rng, simplex_point};
use kintraffic::verify::{run_verify, VerifyOptions};
use kintraffic::{
    classify_state, default_grid, detect_sigma, equilibrium_bruteforce, equilibrium_recursive,
    rescale_dimensional, sweep, Error, IntegrationConfig, KineticModel, KineticState, Method,
    ModelParams, SweepOptions,
};

use crate::args::{
    DiagramArgs, EquilibriumArgs, EquilibriumMethod, IntegrationArgs, ModelArgs, SimulateArgs,
    SweepMethod, UnitsArg, VerifyArgs,
};

/// Failure of a command, carrying the process exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidParameter(_) | Error::DensityOutOfRange(_) => Failure::Usage(msg),
            Error::Io { .. } => Failure::Io(msg),
            _ => Failure::Numerical(msg),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn distinct_outputs(paths: &[&Option<PathBuf>]) -> Outcome {
    let given: Vec<&PathBuf> = paths.iter().filter_map(|p| p.as_ref()).collect();
    for (i, a) in given.iter().enumerate() {
        if given[i + 1..].contains(a) {
            return Err(Failure::Usage(format!(
                "output path {} given more than once",
                a.display()
            )));
        }
    }
    Ok(())
}

fn params(model: &ModelArgs) -> Result<ModelParams, Error> {
    ModelParams::new(model.n)?.with_eta0(model.eta0)
}

fn config(args: &IntegrationArgs) -> Result<IntegrationConfig, Error> {
    let c = IntegrationConfig {
        dt: args.dt,
        t_final: args.t_final,
        steady_tol: args.steady_tol,
        ..Default::default()
    };
    c.validate()?;
    Ok(c)
}

fn initial_state(n: usize, rho: f64, seed: Option<u64>) -> Result<KineticState, Error> {
    match seed {
        Some(s) => simplex_point(&mut rng(s), n, rho),
        None => KineticState::uniform(n, rho),
    }
}

fn vector(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|&x| fmt_num(x)).collect();
    format!("[{}]", parts.join(", "))
}

fn write(path: &Path, contents: &str) -> Outcome {
    write_file(path, contents)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Outcome {
    distinct_outputs(&[&args.out_csv, &args.out_json])?;
    let params = params(&args.model)?;
    let config = config(&args.integration)?;
    let model = KineticModel::new(params)?;
    let f0 = initial_state(params.n, args.rho, args.seed)?;

    let (rows, out) = model.trajectory(&f0, &config, args.record_stride)?;
    let obs = model.observables(&out.state);
    let status = if out.converged {
        "converged"
    } else {
        "not converged"
    };
    println!(
        "{status} after {} steps: t = {}, ||rhs||_1 = {}",
        out.steps,
        fmt_num(out.state.t),
        fmt_num(out.residual)
    );
    println!("f = {}", vector(&out.state.f));
    println!(
        "rho = {}  q = {}  u = {}",
        fmt_num(obs.rho),
        fmt_num(obs.q),
        fmt_num(obs.u)
    );

    if let Some(path) = &args.out_csv {
        write(path, &trajectory_csv(&rows, model.lattice()))?;
    }
    if let Some(path) = &args.out_json {
        let stability = classify_state(&model, &out.state.f);
        let json = integrated_equilibrium_json(&model, args.rho, &out, &stability, &config);
        write(path, &to_json_string(&json))?;
    }
    Ok(())
}

pub fn equilibrium(args: &EquilibriumArgs) -> Outcome {
    let params = params(&args.model)?;
    let json = match args.method {
        EquilibriumMethod::Recursive => {
            let eq = equilibrium_recursive(params.n, args.rho)?;
            equilibrium_json(&eq)
        }
        EquilibriumMethod::Bruteforce => {
            let report = equilibrium_bruteforce(params.n, args.rho)?;
            let eq = equilibrium_recursive(params.n, args.rho)?;
            let stable: Vec<_> = report.stable().collect();
            let matches = stable.len() == 1
                && stable[0]
                    .f
                    .iter()
                    .zip(&eq.f_inf)
                    .all(|(a, b)| (a - b).abs() <= DENSITY_SLACK);
            if !matches {
                return Err(Failure::Numerical(format!(
                    "expected exactly one stable equilibrium matching the recursive one, found {} stable among {} candidates",
                    stable.len(),
                    report.candidates.len()
                )));
            }
            bruteforce_json(&eq, &report)
        }
        EquilibriumMethod::Integrate => {
            let config = config(&args.integration)?;
            let model = KineticModel::new(params)?;
            let f0 = initial_state(params.n, args.rho, args.seed)?;
            let out = model.integrate_to_steady(&f0, &config)?;
            if !out.converged {
                eprintln!(
                    "warning: not converged by t = {} (||rhs||_1 = {})",
                    fmt_num(out.state.t),
                    fmt_num(out.residual)
                );
            }
            let stability = classify_state(&model, &out.state.f);
            integrated_equilibrium_json(&model, args.rho, &out, &stability, &config)
        }
    };
    let text = to_json_string(&json);
    match &args.out_json {
        Some(path) => write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn diagram(args: &DiagramArgs) -> Outcome {
    distinct_outputs(&[&args.out_csv, &args.out_json, &args.out_svg])?;
    if args.rho_steps < 2 {
        return Err(Failure::Usage("--rho-steps must be at least 2".into()));
    }
    if args.jobs == 0 {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }
    let params = params(&args.model)?;
    let opts = SweepOptions {
        method: match args.method {
            SweepMethod::Recursive => Method::Recursive,
            SweepMethod::Integrate => Method::Integrate,
        },
        eta0: params.eta0,
        integration: config(&args.integration)?,
        jobs: args.jobs,
    };
    let mut d = sweep(params.n, &default_grid(args.rho_steps), &opts)?;
    let unconverged: Vec<String> = d.unconverged().map(|p| fmt_num(p.rho)).collect();
    if !unconverged.is_empty() {
        eprintln!(
            "warning: integration did not settle at rho = {}",
            unconverged.join(", ")
        );
    }
    let sigma_error = detect_sigma(&d).err();
    let (density_unit, flux_unit) = match args.units {
        UnitsArg::Dimensionless => ("", ""),
        UnitsArg::Physical => {
            d = rescale_dimensional(&d, &params);
            (" veh/km", " veh/h")
        }
    };
    match d.sigma {
        Some(s) => println!("sigma = {}{density_unit}", fmt_num(s)),
        None => {
            let reason = sigma_error.map(|e| e.to_string()).unwrap_or_default();
            println!("sigma = not detected ({reason})");
        }
    }
    println!("q_max = {}{flux_unit}", fmt_num(d.q_max));

    if let Some(path) = &args.out_csv {
        write(path, &diagram_csv(&d))?;
    }
    if let Some(path) = &args.out_json {
        write(path, &to_json_string(&diagram_json(&d)))?;
    }
    if let Some(path) = &args.out_svg {
        write(path, &diagram_svg(&d))?;
    }
    Ok(())
}

pub fn verify(args: &VerifyArgs) -> Outcome {
    if args.n_max < 2 {
        return Err(Failure::Usage("--n-max must be at least 2".into()));
    }
    let report = run_verify(&VerifyOptions {
        n_max: args.n_max,
        seed: args.seed,
        corrupt_table: args.inject_corrupt_table,
    });
    for g in &report.groups {
        println!("{g}");
    }
    let failed = report.failures().count();
    if failed == 0 {
        println!("all {} groups passed", report.groups.len());
        Ok(())
    } else {
        Err(Failure::Numerical(format!(
            "{failed} of {} groups failed",
            report.groups.len()
        )))
    }
}
