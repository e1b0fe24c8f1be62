use std::fs::File;
use std::io::BufReader;

use halfspace_core::asymptotics::io::{
    fit_records, fit_summary, fmt_f64, fmt_opt, read_points_csv, sweep_json, sweep_records,
    ConfigEcho, Records,
};
use halfspace_core::asymptotics::{
    fit_power_law, solve_hydrogen, sweep_w, window, FitResult, FIT_WINDOW,
};
use halfspace_core::config::ConfigFile;
use halfspace_core::eigensolver::{feshbach_trials, EigOptions, GridSpec};
use halfspace_core::model::{Vec3, E_ELECTRON_PLATE, E_H};
use halfspace_core::multipole::{compute_cv, GroundBasis};
use halfspace_core::spectra::{
    binding_condition, electron_plate_energy, helium_energies, helium_variational_energy, hvz_gap,
    ThresholdStatus,
};
use halfspace_core::{Error, Result};
use serde_json::json;

use crate::output::{destination, emit, Report};
use crate::{
    Cli, Command, CvArgs, EplateArgs, FeshbachArgs, FitArgs, GridArgs, HydrogenArgs, MoleculeName,
    SolverArgs, SweepArgs, EXIT_NUMERICAL,
};

/// Relative deviation from `-1/64` above which an `eplate` result is flagged.
const EPLATE_FLAG: f64 = 1e-5;

/// Largest acceptable gap between fixed point and dense eigenvalue.
const FESHBACH_TOL: f64 = 1e-10;

/// Builds the resolved configuration echo one entry at a time.
#[derive(Default)]
struct Echo(ConfigEcho);

impl Echo {
    fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.set(key, fmt_f64(value))
    }

    fn list<T: ToString>(&mut self, key: &str, values: &[T]) -> &mut Self {
        let joined: Vec<String> = values.iter().map(T::to_string).collect();
        self.set(key, joined.join(","))
    }
}

/// Parses the configuration file and runs the selected command. Returns the
/// process exit code for outcomes that still produced output.
pub fn run(cli: &Cli) -> Result<u8> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let mut echo = Echo::default();
    echo.set("command", command_name(&cli.command));
    if let Some(p) = &cli.config {
        echo.set("config_file", p.display());
    }
    let (report, code) = match &cli.command {
        Command::Eplate(a) => eplate(a, &file, echo)?,
        Command::Hydrogen(a) => hydrogen(a, &file, echo)?,
        Command::Sweep(a) => sweep(a, &file, echo)?,
        Command::Fit(a) => fit(a, echo)?,
        Command::Cv(a) => cv(a, &file, echo)?,
        Command::Helium => helium(echo)?,
        Command::FeshbachDemo(a) => feshbach_demo(a, echo)?,
    };
    let dest = destination(
        cli.output.as_deref(),
        command_name(&cli.command),
        cli.format,
    );
    emit(&report, cli.format, dest.as_deref())?;
    Ok(code)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Eplate(_) => "eplate",
        Command::Hydrogen(_) => "hydrogen",
        Command::Sweep(_) => "sweep",
        Command::Fit(_) => "fit",
        Command::Cv(_) => "cv",
        Command::Helium => "helium",
        Command::FeshbachDemo(_) => "feshbach-demo",
    }
}

fn solver_options(a: &SolverArgs, file: &ConfigFile, echo: &mut Echo) -> EigOptions {
    let d = EigOptions::default();
    let opts = EigOptions {
        tol: a.tol.or(file.tol).unwrap_or(d.tol),
        max_iter: a.max_iter.or(file.max_iter).unwrap_or(d.max_iter),
        seed: a.seed.or(file.seed).unwrap_or(d.seed),
        ..d
    };
    echo.num("tol", opts.tol)
        .set("max_iter", opts.max_iter)
        .set("seed", opts.seed);
    opts
}

fn grid_spec(a: &GridArgs, file: &ConfigFile, echo: &mut Echo) -> Result<GridSpec> {
    let p = GridSpec::PRODUCTION;
    let l_xi = a.l_xi.or(file.l_xi).unwrap_or(p.l_xi);
    let l_rho = a.l_rho.or(file.l_rho).unwrap_or(p.l_rho);
    let axis = |name: &str, h: Option<f64>, n: Option<usize>, l: f64, default: f64| match (h, n) {
        (Some(_), Some(_)) => Err(Error::InvalidInput(format!(
            "set either h_{name} or n_{name}, not both"
        ))),
        (Some(h), None) => Ok(h),
        (None, Some(0)) => Err(Error::InvalidInput(format!("n_{name} must be positive"))),
        (None, Some(n)) => Ok(l / n as f64),
        (None, None) => Ok(default),
    };
    let h_xi = axis(
        "xi",
        a.h_xi.or(file.h_xi),
        a.n_xi.or(file.n_xi),
        l_xi,
        p.h_xi,
    )?;
    let h_rho = axis(
        "rho",
        a.h_rho.or(file.h_rho),
        a.n_rho.or(file.n_rho),
        l_rho,
        p.h_rho,
    )?;
    let spec = GridSpec::new(h_xi, h_rho, l_xi, l_rho)?;
    echo.num("h_xi", spec.h_xi)
        .num("h_rho", spec.h_rho)
        .num("L_xi", spec.l_xi)
        .num("L_rho", spec.l_rho);
    Ok(spec)
}

fn fit_window(w: &Option<Vec<f64>>) -> Result<(f64, f64)> {
    match w.as_deref() {
        None => Ok(FIT_WINDOW),
        Some([lo, hi]) if lo < hi => Ok((*lo, *hi)),
        Some(w) => Err(Error::InvalidInput(format!("invalid fit window {w:?}"))),
    }
}

fn eplate(a: &EplateArgs, file: &ConfigFile, mut echo: Echo) -> Result<(Report, u8)> {
    let n = a.n.or(file.n).unwrap_or(4096);
    let l = a.l.or(file.l).unwrap_or(400.0);
    echo.set("n", n).num("L", l);
    let opts = solver_options(&a.solver, file, &mut echo);
    let e = electron_plate_energy(n, l, &opts)?;
    let flagged = e.relative_error > EPLATE_FLAG;
    if flagged {
        eprintln!(
            "warning: relative deviation {:.3e} from -1/64 exceeds {EPLATE_FLAG:e}; refine n or L",
            e.relative_error
        );
    }
    let records = Records {
        columns: vec![
            "n",
            "L",
            "E_raw",
            "E_refined",
            "E",
            "E_expected",
            "relative_error",
            "deviation",
            "iterations",
            "residual",
            "flagged",
        ],
        rows: vec![vec![
            n.to_string(),
            fmt_f64(l),
            fmt_f64(e.raw),
            fmt_f64(e.refined),
            fmt_f64(e.extrapolated),
            fmt_f64(E_ELECTRON_PLATE),
            fmt_f64(e.relative_error),
            fmt_f64(e.deviation),
            (e.solve.iterations + e.refined_solve.iterations).to_string(),
            fmt_f64(e.solve.residual.max(e.refined_solve.residual)),
            flagged.to_string(),
        ]],
    };
    let mut report = Report::new(echo.0, records);
    report.rows = Some(json!([{
        "energy": e,
        "expected": E_ELECTRON_PLATE,
        "flagged": flagged,
    }]));
    Ok((report, 0))
}

fn hydrogen(a: &HydrogenArgs, file: &ConfigFile, mut echo: Echo) -> Result<(Report, u8)> {
    let r =
        a.r.or(file.r)
            .ok_or_else(|| Error::InvalidInput("missing plate distance, pass --r".into()))?;
    let m = a.m.or(file.m).unwrap_or(1.0);
    echo.num("r", r).num("m", m);
    let spec = grid_spec(&a.grid, file, &mut echo)?;
    let opts = solver_options(&a.solver, file, &mut echo);
    let row = solve_hydrogen(r, m, &spec, &opts)?;
    let energy = row.energy.unwrap_or(f64::NAN);
    let hvz = hvz_gap(energy, r)?;
    let status = match hvz.status {
        ThresholdStatus::Bound => "bound",
        ThresholdStatus::Marginal => "marginal",
        ThresholdStatus::NotCertified => "not_certified",
    };
    let records = Records {
        columns: vec![
            "r",
            "m",
            "E",
            "E_h_grid",
            "W",
            "E_h",
            "threshold",
            "gap",
            "hvz",
            "iterations",
            "residual",
            "n_xi",
            "n_rho",
            "h_xi",
            "h_rho",
        ],
        rows: vec![vec![
            fmt_f64(r),
            fmt_f64(m),
            fmt_f64(energy),
            fmt_opt(row.reference),
            fmt_opt(row.w),
            fmt_f64(E_H),
            fmt_f64(hvz.bottom),
            fmt_f64(hvz.gap),
            status.into(),
            row.iterations.to_string(),
            fmt_f64(row.residual),
            row.n_xi.to_string(),
            row.n_rho.to_string(),
            fmt_f64(row.h_xi),
            fmt_f64(row.h_rho),
        ]],
    };
    let mut report = Report::new(echo.0, records);
    report.rows = Some(json!([{ "row": row, "hvz": hvz }]));
    report.grid = Some(serde_json::to_value(spec)?);
    Ok((report, 0))
}

fn sweep(a: &SweepArgs, file: &ConfigFile, mut echo: Echo) -> Result<(Report, u8)> {
    let m = a.m.or(file.m).unwrap_or(1.0);
    let jobs = a
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    echo.list("r_values", &a.r_values)
        .num("m", m)
        .set("jobs", jobs);
    let spec = grid_spec(&a.grid, file, &mut echo)?;
    let opts = solver_options(&a.solver, file, &mut echo);
    let table = sweep_w(&a.r_values, m, &spec, &opts, jobs)?;
    let failures = table.failures();
    let fit = if a.fit {
        let win = fit_window(&a.window)?;
        echo.list("exponents", &a.exponents)
            .num("window_lo", win.0)
            .num("window_hi", win.1);
        match fit_power_law(&window(&table.points(), win), &a.exponents) {
            Ok(f) => Some(f),
            Err(e) if failures > 0 => {
                eprintln!("warning: fit skipped: {e}");
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    if let Some(f) = &fit {
        echo.0.extend(fit_summary(f));
    }
    let mut report = Report::new(echo.0.clone(), sweep_records(&table));
    let doc = sweep_json(&echo.0, &table, fit.as_ref())?;
    report.rows = Some(doc["rows"].clone());
    report.grid = Some(doc["grid"].clone());
    report.fit = fit;
    let code = if failures > 0 {
        eprintln!("error: {failures} of {} rows failed", table.rows.len());
        EXIT_NUMERICAL
    } else {
        0
    };
    Ok((report, code))
}

fn fit(a: &FitArgs, mut echo: Echo) -> Result<(Report, u8)> {
    let win = fit_window(&a.window)?;
    echo.set("input", a.input.display())
        .list("exponents", &a.exponents)
        .num("window_lo", win.0)
        .num("window_hi", win.1);
    let points = window(
        &read_points_csv(BufReader::new(File::open(&a.input)?))?,
        win,
    );
    let fit: FitResult = fit_power_law(&points, &a.exponents)?;
    echo.0.extend(fit_summary(&fit));
    let mut report = Report::new(echo.0, fit_records(&points, &fit));
    report.fit = Some(fit);
    Ok((report, 0))
}

fn cv(a: &CvArgs, file: &ConfigFile, mut echo: Echo) -> Result<(Report, u8)> {
    let v = a.v.or(file.v).unwrap_or(Vec3::E1);
    let (name, basis) = match a.molecule {
        MoleculeName::Hydrogen => ("hydrogen", GroundBasis::hydrogen()?),
        MoleculeName::Helium => ("helium", GroundBasis::helium()?),
    };
    echo.set("molecule", name)
        .num("v_x", v.x)
        .num("v_y", v.y)
        .num("v_z", v.z);
    let c = compute_cv(&basis, v)?;
    let base = |r: String, w: String| {
        vec![
            name.to_string(),
            fmt_f64(v.x),
            fmt_f64(v.y),
            fmt_f64(v.z),
            fmt_f64(c),
            r,
            w,
        ]
    };
    let rows = match &a.r_values {
        Some(rs) => {
            echo.list("r_values", rs);
            halfspace_core::asymptotics::predicted_w_molecule(&basis, v, rs)?
                .into_iter()
                .map(|(r, w)| base(fmt_f64(r), fmt_f64(w)))
                .collect()
        }
        None => vec![base(String::new(), String::new())],
    };
    let records = Records {
        columns: vec!["molecule", "v_x", "v_y", "v_z", "C", "r", "W_predicted"],
        rows,
    };
    Ok((Report::new(echo.0, records), 0))
}

fn helium(echo: Echo) -> Result<(Report, u8)> {
    let he = helium_variational_energy()?;
    let mut rows = vec![
        ("kinetic", fmt_f64(he.kinetic)),
        ("attraction", fmt_f64(he.attraction)),
        ("repulsion", fmt_f64(he.repulsion)),
        ("total", fmt_f64(he.total)),
        ("total_over_E_h", fmt_f64(he.total / E_H)),
    ];
    let verdicts = binding_condition(&helium_energies()?, 2)?;
    let labels = ["binding_k1", "binding_k2"];
    for (label, v) in labels.iter().zip(&verdicts) {
        rows.push((
            label,
            if v.certified {
                "certified"
            } else {
                "not_certified"
            }
            .into(),
        ));
    }
    let records = Records {
        columns: vec!["quantity", "value"],
        rows: rows
            .into_iter()
            .map(|(k, v)| vec![k.to_string(), v])
            .collect(),
    };
    let mut report = Report::new(echo.0, records);
    report.rows = Some(json!({ "energy": he, "binding": verdicts }));
    Ok((report, 0))
}

fn feshbach_demo(a: &FeshbachArgs, mut echo: Echo) -> Result<(Report, u8)> {
    echo.set("trials", a.trials)
        .set("n", a.n)
        .set("seed", a.seed)
        .num("perturbation", a.perturbation);
    let trials = feshbach_trials(a.trials, a.n, a.seed, a.perturbation)?;
    let worst = trials.iter().map(|t| t.error).fold(0.0, f64::max);
    let monotone = trials.iter().all(|t| t.monotone);
    echo.num("max_error", worst).set("all_monotone", monotone);
    if worst > FESHBACH_TOL || !monotone {
        eprintln!("warning: max error {worst:e}, monotone in every trial: {monotone}");
    }
    let records = Records {
        columns: vec![
            "trial",
            "fixed_point",
            "direct",
            "error",
            "evaluations",
            "monotone",
        ],
        rows: trials
            .iter()
            .map(|t| {
                vec![
                    t.trial.to_string(),
                    fmt_f64(t.fixed_point),
                    fmt_f64(t.direct),
                    fmt_f64(t.error),
                    t.evaluations.to_string(),
                    t.monotone.to_string(),
                ]
            })
            .collect(),
    };
    let mut report = Report::new(echo.0, records);
    report.rows = Some(serde_json::to_value(&trials)?);
    Ok((report, 0))
}
