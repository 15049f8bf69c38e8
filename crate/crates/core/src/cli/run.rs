//! Mode dispatch: builds models from a [`RunConfig`] and writes CSV tables.

use std::fs;
use std::path::{Path, PathBuf};

use crate::atomic::zeeman_splitting;
use crate::cli::config::{Mode, RunConfig};
use crate::cli::table::{read_experiment, Table, COL_DENSITY, COL_SLOPE, COL_TRANSMISSION};
use crate::error::{Error, Result};
use crate::inference::{
    extract_gamma0, trapping_curve_analytic, trapping_curve_simulation, FitReport, ObservablePoint,
};
use crate::lambda::{analytic_profile, doppler_free_predicate, forward_observables, MediumParams, PropagationProfile};
use crate::multilevel::{observables_vs_density, DecaySchedule, MultilevelForward, Propagator};
use crate::trapping::{
    f_of_n, optical_thickness_threshold, rb_temperature_for_density, spin_exchange_decay, thermal_relative_speed,
    threshold_density,
};

/// Files written by a run and any non-fatal warnings.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

struct Writer<'a> {
    dir: &'a Path,
    hash: String,
    mode: &'static str,
    out: RunOutput,
}

impl Writer<'_> {
    fn table(&self, columns: &[&str]) -> Table {
        Table::with_header(columns, &self.hash, self.mode)
    }

    fn emit(&mut self, name: &str, table: &Table) -> Result<()> {
        let path = self.dir.join(name);
        table.write(&path)?;
        self.out.files.push(path);
        Ok(())
    }
}

/// Runs the configured mode, writing results into `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutput> {
    fs::create_dir_all(out_dir).map_err(|source| Error::Io { path: out_dir.to_path_buf(), source })?;
    let config_path = out_dir.join("config.resolved");
    fs::write(&config_path, cfg.to_text(true)).map_err(|source| Error::Io { path: config_path.clone(), source })?;
    let mut w = Writer { dir: out_dir, hash: cfg.hash(), mode: cfg.mode().as_str(), out: RunOutput::default() };
    w.out.files.push(config_path);
    match cfg.mode() {
        Mode::SimulateAnalytic => simulate_analytic(cfg, &mut w)?,
        Mode::SimulateMultilevel => simulate_multilevel(cfg, &mut w)?,
        Mode::ScanDensity => scan_density(cfg, &mut w)?,
        Mode::Fit => fit(cfg, &mut w)?,
        Mode::ThresholdReport => threshold_report(cfg, &mut w)?,
    }
    Ok(w.out)
}

const OBSERVABLE_COLUMNS: [&str; 4] = [COL_DENSITY, COL_TRANSMISSION, COL_SLOPE, "gamma_eff_gamma_r"];

fn observable_table(w: &Writer, points: &[ObservablePoint<f64>]) -> Table {
    let mut t = w.table(&OBSERVABLE_COLUMNS);
    for p in points {
        t.push_row(vec![p.n, p.transmission, p.slope, p.gamma_eff.unwrap_or(f64::NAN)]);
    }
    t
}

fn profile_table(w: &Writer, profile: &PropagationProfile<f64>, b: f64) -> Table {
    let mut t = w.table(&["z_cm", "intensity_gamma_r2", "phase_rad"]);
    t.push_meta("field_G", b);
    t.push_meta("transmission", profile.transmission);
    t.push_meta("dphi_dB_rad_per_G", profile.dphi_db);
    for &(z, i, phi) in &profile.samples {
        t.push_row(vec![z, i, phi]);
    }
    t
}

fn analytic_points(cfg: &RunConfig, medium: &MediumParams<f64>, densities: &[f64], trapping: bool) -> Result<Vec<ObservablePoint<f64>>> {
    let i0 = cfg.input_field().intensity();
    let model = cfg.trapping();
    densities
        .iter()
        .map(|&n| {
            let f = if trapping { f_of_n(n, &model)? } else { 0.0 };
            forward_observables(&medium.with_density(n)?, i0, f)
        })
        .collect()
}

fn simulate_analytic(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let medium = cfg.medium()?;
    let i0 = cfg.input_field().intensity();
    let model = cfg.trapping();
    let margin = cfg.num("validity.margin");

    let mut scan = w.table(&[COL_DENSITY, "f", COL_TRANSMISSION, COL_SLOPE, "gamma_eff_gamma_r", "doppler_free_ratio", "doppler_free"]);
    for n in cfg.densities() {
        let f = f_of_n(n, &model)?;
        let m = medium.with_density(n)?;
        let p = forward_observables(&m, i0, f)?;
        let check = doppler_free_predicate(&m, p.transmission * i0, margin);
        if !check.holds {
            w.out.warnings.push(format!("Doppler-free condition fails at N = {n:.3e} cm^-3 (ratio {:.3})", check.ratio));
        } else if check.marginal {
            w.out.warnings.push(format!("Doppler-free condition marginal at N = {n:.3e} cm^-3 (ratio {:.3})", check.ratio));
        }
        let holds = if check.holds { 1.0 } else { 0.0 };
        scan.push_row(vec![n, f, p.transmission, p.slope, p.gamma_eff.unwrap_or(f64::NAN), check.ratio, holds]);
    }
    w.emit("analytic_scan.csv", &scan)?;

    let b = cfg.num("beam.field");
    let f = f_of_n(medium.density(), &model)?;
    let zeeman = zeeman_splitting(b, medium.units());
    let profile = analytic_profile(&medium, i0, f, &zeeman, cfg.count("io.samples") as usize)?;
    let table = profile_table(w, &profile, b);
    w.emit("analytic_profile.csv", &table)
}

fn propagator(cfg: &RunConfig) -> Result<Propagator<f64>> {
    Propagator::new(cfg.scheme()?, cfg.medium()?, cfg.solver()?)
}

fn simulate_multilevel(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let prop = propagator(cfg)?;
    let b = cfg.num("beam.field");
    let profile = prop.propagate(&cfg.input_field(), b)?;
    let table = profile_table(w, &profile, b);
    w.emit("multilevel_profile.csv", &table)
}

fn scan_density(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let densities = cfg.densities();
    let medium = cfg.medium()?;
    let gamma_0 = medium.gamma_0();
    let schedule = cfg.schedule();
    let model = cfg.trapping();
    // The constant-γ₀ reference also runs at N(1 + f(N)), which has the same
    // absorption, so both curves span the same transmission range.
    let mut ref_densities = densities.clone();
    if !matches!(schedule, DecaySchedule::Constant) {
        for &n in &densities {
            ref_densities.push(n * (1.0 + f_of_n(n, &model)?));
        }
        ref_densities.sort_by(f64::total_cmp);
        ref_densities.dedup();
    }
    let (points, reference) = match cfg.text("scan.model") {
        "multilevel" => {
            let prop = propagator(cfg)?;
            let input = cfg.input_field();
            let points = observables_vs_density(&densities, &prop, &input, &schedule)?;
            let mut base = prop.config().clone();
            base.gamma_eff = gamma_0;
            base.pumping_rate = 0.0;
            let reference =
                observables_vs_density(&ref_densities, &prop.with_config(base)?, &input, &DecaySchedule::Constant)?;
            (points, reference)
        }
        _ => {
            let trapping = !matches!(schedule, DecaySchedule::Constant);
            (analytic_points(cfg, &medium, &densities, trapping)?, analytic_points(cfg, &medium, &ref_densities, false)?)
        }
    };
    let table = observable_table(w, &points);
    w.emit("scan_observables.csv", &table)?;
    let table = observable_table(w, &reference);
    w.emit("scan_reference.csv", &table)?;

    let inferred = if gamma_0 > 0.0 {
        trapping_curve_analytic(&points, gamma_0, medium.units(), cfg.num("fit.clamp"))?
    } else {
        densities.iter().map(|&n| (n, f64::NAN)).collect()
    };
    let mut t = w.table(&[COL_DENSITY, "R_over_gamma0_injected", "R_over_gamma0_inferred"]);
    for (&n, (_, r)) in densities.iter().zip(&inferred) {
        let injected = match schedule {
            DecaySchedule::Constant => 0.0,
            _ => f_of_n(n, &model)?,
        };
        t.push_row(vec![n, injected, *r]);
    }
    w.emit("scan_trapping.csv", &t)
}

fn fit(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let input = cfg.text("io.input");
    if input.is_empty() {
        return Err(Error::Config("fit mode needs `io.input`".into()));
    }
    let rows = read_experiment(Path::new(input))?;
    let points: Vec<ObservablePoint<f64>> = rows
        .iter()
        .map(|r| ObservablePoint { n: r.n, transmission: r.transmission, slope: r.slope, gamma_eff: None })
        .collect();
    let units = cfg.units();
    let gamma_0 = extract_gamma0(&points, cfg.num("fit.low_density_transmission"), &units)?;
    let r_points = trapping_curve_analytic(&points, gamma_0.gamma_0, &units, cfg.num("fit.clamp"))?;
    let r_curve = if cfg.flag("fit.simulation") {
        let forward = MultilevelForward { template: propagator(cfg)?, input: cfg.input_field() };
        trapping_curve_simulation(&points, &forward, gamma_0.gamma_0, &cfg.root_options())?
    } else {
        Vec::new()
    };
    let report = FitReport { gamma_0, r_points, r_curve };

    let mut t = w.table(&["gamma_0_gamma_r", "dispersion_gamma_r", "points_used"]);
    t.push_row(vec![report.gamma_0.gamma_0, report.gamma_0.dispersion, report.gamma_0.used as f64]);
    w.emit("fit_gamma0.csv", &t)?;

    let mut t = w.table(&[COL_DENSITY, "gamma_eff_gamma_r", "R_over_gamma0"]);
    for &(n, r) in &report.r_points {
        t.push_row(vec![n, report.gamma_0.gamma_0 * (1.0 + r), r]);
    }
    w.emit("fit_analytic.csv", &t)?;

    if !report.r_curve.is_empty() {
        let mut t = w.table(&[COL_DENSITY, "gamma_eff_gamma_r", "R_over_gamma0", "misfit_ln_transmission", "misfit_slope"]);
        for m in &report.r_curve {
            t.push_row(vec![m.n, m.gamma_eff, m.r_over_gamma0, m.misfit.0, m.misfit.1]);
        }
        w.emit("fit_simulation.csv", &t)?;
    }
    Ok(())
}

fn threshold_report(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let medium = cfg.medium()?;
    let boundary = threshold_density(&medium);
    let mut densities = cfg.densities();
    densities.push(boundary);
    densities.sort_by(f64::total_cmp);
    densities.dedup();
    let model = cfg.trapping();
    let sigma = cfg.num("trapping.cross_section");
    let fixed_temperature = cfg.num_or_auto("trapping.temperature");

    let mut t = w.table(&[COL_DENSITY, "optical_depth", "trapped", "boundary", "f", "temperature_K", "spin_exchange_gamma_r"]);
    t.push_meta("threshold_density_cm3", boundary);
    for n in densities {
        let r = optical_thickness_threshold(&medium.with_density(n)?);
        let kelvin = match fixed_temperature {
            Some(k) => k,
            None => rb_temperature_for_density(n)?,
        };
        let se = spin_exchange_decay(n, sigma, thermal_relative_speed(kelvin), medium.units().gamma_r);
        t.push_row(vec![
            n,
            r.optical_depth,
            if r.trapped { 1.0 } else { 0.0 },
            if n == boundary { 1.0 } else { 0.0 },
            f_of_n(n, &model)?,
            kelvin,
            se,
        ]);
    }
    w.emit("threshold_report.csv", &t)
}
