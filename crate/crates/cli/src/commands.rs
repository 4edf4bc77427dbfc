use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use magwake::dataset::{
    build_dataset, load_dataset, save_dataset, write_csv as write_dataset_csv, Dataset, ParamGrid, SampleConfig,
    TrainingSample,
};
use magwake::emfield::{geomagnetic_vector, EnvParams};
use magwake::hydro::{HullModel, KochinMethod, VesselParams, DEFAULT_HULL_RATIO};
use magwake::neural::{load_checkpoint, save_checkpoint, Checkpoint};
use magwake::seed::derive_seed;
use magwake::train::{
    angle_sweep, depth_sweep, eval_length_error, length_scatter, train, train_from, training_indices,
    write_history_csv, write_scatter_csv, write_sweep_csv, AlphaFilter, LossKind, PhysicsContext, SweepConfig,
    TrainConfig,
};
use magwake::wake::{add_noise, sensor_series, wake_field_2d, GridAxis, QuadratureConfig, Scenario, SensorParams};

use crate::config::RunConfig;
use crate::error::{CliError, EXIT_DIVERGED};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Profile {
    Desk,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum LossArg {
    Drnn,
    Pirnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FilterArg {
    None,
    Below15,
    Above15,
}

impl std::str::FromStr for Profile {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        clap::ValueEnum::from_str(s, true).map_err(|_| ())
    }
}

impl std::str::FromStr for LossArg {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        clap::ValueEnum::from_str(s, true).map_err(|_| ())
    }
}

impl std::str::FromStr for FilterArg {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        clap::ValueEnum::from_str(s, true).map_err(|_| ())
    }
}

/// Writes `bytes` through a `.partial` sibling so a failed run leaves no
/// truncated output behind.
fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let res = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path));
    res.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::io(format!("cannot write {}: {e}", path.display()))
    })
}

fn csv_to(path: &Path, fill: impl FnOnce(&mut Vec<u8>) -> magwake::Result<()>) -> Result<(), CliError> {
    let mut buf = Vec::new();
    fill(&mut buf)?;
    write_file(path, &buf)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn hull(cfg: &RunConfig) -> Result<HullModel, CliError> {
    cfg.or("vessel.hull", HullModel::Wigley)
}

fn env(cfg: &RunConfig, depth: f64) -> Result<EnvParams, CliError> {
    let mut e = EnvParams::with_depth(depth);
    e.geomagnetic = geomagnetic_vector(
        cfg.or("env.field_strength", EnvParams::FIELD_STRENGTH)?,
        cfg.or("env.dip_deg", EnvParams::DIP_DEG)?,
        cfg.or("env.declination_deg", EnvParams::DECLINATION_DEG)?,
    );
    Ok(e)
}

fn sensor(cfg: &RunConfig) -> Result<SensorParams, CliError> {
    let d = SensorParams::default();
    let s = SensorParams {
        speed: cfg.or("sensor.speed", d.speed)?,
        sample_rate: cfg.or("sensor.sample_rate", d.sample_rate)?,
        altitude: cfg.or("sensor.altitude", d.altitude)?,
        x0: cfg.or("sensor.x0", d.x0)?,
        y0: cfg.or("sensor.y0", d.y0)?,
        samples: cfg.or("sensor.samples", d.samples)?,
    };
    s.validate()?;
    Ok(s)
}

fn quad(cfg: &RunConfig) -> Result<QuadratureConfig, CliError> {
    let d = QuadratureConfig::default();
    let q = QuadratureConfig {
        nodes: cfg.or("quad.nodes", d.nodes)?,
        clip: cfg.or("quad.clip", d.clip)?,
        ..d
    };
    q.validate()?;
    Ok(q)
}

fn sample_config(cfg: &RunConfig, snr_key: &str) -> Result<SampleConfig, CliError> {
    let snr = match cfg.get(snr_key)? {
        Some(v) => v,
        None => cfg.or("dataset.snr_db", SampleConfig::default().snr_db)?,
    };
    Ok(SampleConfig {
        env: env(cfg, 1000.0)?,
        sensor: sensor(cfg)?,
        quad: quad(cfg)?,
        hull: hull(cfg)?,
        hull_ratio: cfg.or("vessel.hull_ratio", DEFAULT_HULL_RATIO)?,
        snr_db: snr,
    })
}

pub fn simulate(cfg: &RunConfig, out: &Path, map: bool) -> Result<(), CliError> {
    let vessel = VesselParams::with_hull_ratio(
        cfg.require("vessel.length")?,
        cfg.or("vessel.hull_ratio", DEFAULT_HULL_RATIO)?,
        cfg.require("vessel.beam_coeff")?,
        cfg.require("vessel.speed")?,
        cfg.or("vessel.track_angle_deg", 0.0f64)?.to_radians(),
    )?;
    let env = env(cfg, cfg.require("env.depth")?)?;
    let sensor = sensor(cfg)?;
    let hull = hull(cfg)?;
    let quad = quad(cfg)?;
    let seed = cfg.seed()?;
    let sc = Scenario::new(vessel, env, sensor, hull);
    sc.validate()?;
    let mut series = sensor_series(&sc, &quad)?;
    if let Some(snr) = cfg.get::<f64>("noise.snr_db")? {
        series = add_noise(&series, snr, derive_seed(seed, 0))?;
    }
    csv_to(&out.join("series.csv"), |w| {
        writeln!(w, "t,magnitude")?;
        for (t, m) in sensor.times().zip(&series.samples) {
            writeln!(w, "{t},{m}")?;
        }
        Ok(())
    })?;
    if map {
        let xs = GridAxis::new(
            cfg.or("map.x_min", 0.0)?,
            cfg.or("map.x_max", 1000.0)?,
            cfg.or("map.x_count", 101)?,
        )?;
        let ys = GridAxis::new(
            cfg.or("map.y_min", -400.0)?,
            cfg.or("map.y_max", 400.0)?,
            cfg.or("map.y_count", 81)?,
        )?;
        let altitude = cfg.or("map.altitude", sensor.altitude)?;
        let t = cfg.or("map.time", 0.0)?;
        let m = wake_field_2d(
            &vessel,
            &env,
            hull,
            &KochinMethod::default(),
            altitude,
            t,
            xs,
            ys,
            &quad,
        )?;
        match m.wedge_half_angle() {
            Some(a) => log::info!("peak {:.4e} A/m, wedge half-angle {a:.2} deg", m.peak),
            None => log::info!("peak {:.4e} A/m, no wedge edge inside the window", m.peak),
        }
        csv_to(&out.join("map.csv"), |w| m.write_csv(w))?;
    }
    Ok(())
}

pub fn gen_dataset(
    cfg: &RunConfig,
    profile: Option<Profile>,
    out: &Path,
    csv: Option<&Path>,
    confirmed: bool,
) -> Result<Dataset, CliError> {
    let profile = match profile {
        Some(p) => p,
        None => cfg.or("dataset.profile", Profile::Desk)?,
    };
    let sc = sample_config(cfg, "dataset.snr_db")?;
    let mut grid = match profile {
        Profile::Desk => ParamGrid::desk(),
        Profile::Full => ParamGrid::full(),
    };
    grid.sensor = sc.sensor;
    grid.hull_ratio = sc.hull_ratio;
    let size = grid.size();
    println!("{size} tuples to synthesise");
    if profile == Profile::Full && !confirmed {
        return Err(CliError::config(format!(
            "the full grid has {size} tuples; pass --yes to build it"
        )));
    }
    let (ds, skipped) = build_dataset(&grid, &sc, cfg.seed()?)?;
    for s in &skipped {
        log::warn!("skipped tuple {:?}: {}", s.tuple.index, s.reason);
    }
    println!("{} samples, {} skipped", ds.samples.len(), skipped.len());
    save_dataset(out, &ds)?;
    log::info!("wrote {}", out.display());
    if let Some(p) = csv {
        csv_to(p, |w| write_dataset_csv(w, &ds))?;
    }
    Ok(ds)
}

fn load_existing_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    if !path.exists() {
        return Err(CliError::config(format!(
            "checkpoint {} does not exist",
            path.display()
        )));
    }
    Ok(load_checkpoint(path)?)
}

fn load_existing_dataset(path: &Path) -> Result<Dataset, CliError> {
    if !path.exists() {
        return Err(CliError::config(format!("dataset {} does not exist", path.display())));
    }
    Ok(load_dataset(path, None)?)
}

pub struct TrainArgs<'a> {
    pub dataset: &'a Path,
    pub checkpoint: &'a Path,
    pub history: &'a Path,
    pub resume: Option<&'a Path>,
    pub loss: Option<LossArg>,
    pub filter: Option<FilterArg>,
    pub iterations: Option<usize>,
}

pub fn train_cmd(cfg: &RunConfig, args: &TrainArgs) -> Result<(), CliError> {
    let ds = load_existing_dataset(args.dataset)?;
    let defaults = TrainConfig::default();
    let loss = match args.loss {
        Some(l) => l,
        None => cfg.or("train.loss", LossArg::Drnn)?,
    };
    let filter = match args.filter {
        Some(f) => f,
        None => cfg.or("train.alpha_filter", FilterArg::None)?,
    };
    let tc = TrainConfig {
        iterations: match args.iterations {
            Some(n) => n,
            None => cfg.or("train.iterations", defaults.iterations)?,
        },
        batch: cfg.or("train.batch", defaults.batch)?,
        lr: cfg.or("train.lr", defaults.lr)?,
        seed: cfg.seed()?,
        loss: match loss {
            LossArg::Drnn => LossKind::Drnn,
            LossArg::Pirnn => LossKind::Pirnn {
                n_mc: cfg.or("train.n_mc", 64)?,
            },
        },
        filter: match filter {
            FilterArg::None => AlphaFilter::None,
            FilterArg::Below15 => AlphaFilter::below_15(),
            FilterArg::Above15 => AlphaFilter::above_15(),
        },
    };
    let ctx = PhysicsContext {
        env: env(cfg, 1000.0)?,
        sensor: ds.sensor,
        hull: ds.hull,
        hull_ratio: cfg.or("vessel.hull_ratio", DEFAULT_HULL_RATIO)?,
        clip: quad(cfg)?.clip,
        bounds: ds.norm,
    };
    let out = match args.resume {
        Some(p) => {
            let ck = load_existing_checkpoint(p)?;
            let tc = TrainConfig { seed: ck.seed, ..tc };
            log::info!("resuming at step {}", ck.adam.t);
            train_from(ck, &ds, &training_indices(&ds, tc.filter), &tc, &ctx)?
        }
        None => train(&ds, &tc, &ctx)?,
    };
    save_checkpoint(args.checkpoint, &out.checkpoint)?;
    log::info!("wrote {}", args.checkpoint.display());
    csv_to(args.history, |w| write_history_csv(w, &out.history))?;
    if let Some(it) = out.diverged {
        return Err(CliError {
            code: EXIT_DIVERGED,
            message: format!("training diverged at iteration {it}; last finite state saved"),
        });
    }
    if let Some(last) = out.history.last() {
        println!(
            "step {}: loss {:.6e}, mini-batch length error {:.2}%",
            out.checkpoint.adam.t, last.loss, last.length_error_pct
        );
    }
    Ok(())
}

pub fn evaluate(checkpoint: &Path, dataset: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let ck = load_existing_checkpoint(checkpoint)?;
    let ds = load_existing_dataset(dataset)?;
    let (train_idx, test_idx) = ds.split();
    let pick = |idx: &[usize], min_len: f64| -> Vec<&TrainingSample> {
        idx.iter()
            .map(|&i| &ds.samples[i])
            .filter(|s| s.y[0] >= min_len)
            .collect()
    };
    let subsets = [
        ("held_out", pick(&test_idx, 0.0)),
        ("held_out_length_ge_100", pick(&test_idx, 100.0)),
        ("train", pick(&train_idx, 0.0)),
    ];
    let mut text = String::from("subset,count,mean_error_pct,mean_sq_error\n");
    for (name, s) in &subsets {
        if s.is_empty() {
            continue;
        }
        let e = eval_length_error(&ck, s)?;
        text += &format!("{name},{},{},{}\n", e.count, e.l1_pct, e.sq);
    }
    match out {
        Some(p) => {
            write_file(p, text.as_bytes())?;
            log::info!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

pub fn sweep(cfg: &RunConfig, checkpoint: &Path, out: &Path) -> Result<(), CliError> {
    let ck = load_existing_checkpoint(checkpoint)?;
    let sc = SweepConfig {
        draws: cfg.or("sweep.draws", 100)?,
        sample: sample_config(cfg, "sweep.snr_db")?,
        bounds: ck.norm,
        seed: cfg.seed()?,
        ..SweepConfig::default()
    };
    let angles: Vec<f64> = cfg
        .list("sweep.angles_deg", &(0..10).map(|i| 2.0 * i as f64).collect::<Vec<_>>())?
        .iter()
        .map(|d| d.to_radians())
        .collect();
    let speeds = cfg.list("sweep.speeds", &[2.0, 5.0, 8.0])?;
    let depths = cfg.list(
        "sweep.depths",
        &[100.0, 250.0, 500.0, 750.0, 1000.0, 1500.0, 2000.0, 2500.0, 3000.0],
    )?;
    let lengths = cfg.list("sweep.lengths", &(1..=11).map(|i| 30.0 * i as f64).collect::<Vec<_>>())?;
    let per_length = cfg.or("sweep.per_length", 10)?;

    let rows = angle_sweep(&ck, &angles, &speeds, &sc)?;
    csv_to(&out.join("angle.csv"), |w| write_sweep_csv(w, "track_angle_deg", &rows))?;
    let rows = depth_sweep(&ck, &depths, &speeds, &sc)?;
    csv_to(&out.join("depth.csv"), |w| write_sweep_csv(w, "depth", &rows))?;
    let rows = length_scatter(&ck, &lengths, per_length, &sc)?;
    csv_to(&out.join("scatter.csv"), |w| write_scatter_csv(w, &rows))?;
    Ok(())
}
