use std::path::Path;

use fddet_core::augment::{apply_bboxmixup, MixParams};
use fddet_core::cgpc::{run_cgpc, CgpcConfig, ExternalFeatures, FeatureProvider};
use fddet_core::io::write_atomic;
use fddet_core::raster::{load_raster_dir, save_raster_dir};
use fddet_core::sslsim::{
    gen_synthetic_stream, run_labeled_only_baseline, run_ssl_simulation, Scenario,
    SimulationSummary,
};
use fddet_core::synth::gen_synthetic_dataset;
use fddet_core::{compute_stats, load_dataset, save_dataset, split_dataset, Seed};
use log::{info, warn};
use serde::Serialize;

use crate::args::{AugmentArgs, CalibrateArgs, GenSynthArgs, SimulateArgs, SplitArgs, StatsArgs};
use crate::config::FileConfig;
use crate::error::{CliError, Context};

const DEFAULT_TRAIN_FRACTION: f64 = 0.7;

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::usage(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes).context(format!("writing {}", path.display()))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn stats(a: &StatsArgs) -> Result<(), CliError> {
    let d = load_dataset(&a.input).context(format!("loading {}", a.input.display()))?;
    let s = compute_stats(&d);
    let json = to_json(&s)?;
    match &a.output {
        Some(out) => {
            write(out, &json)?;
            print!("{}", s.to_table());
        }
        None => print!("{}", String::from_utf8_lossy(&json)),
    }
    Ok(())
}

pub fn split(a: &SplitArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let fraction = a
        .train_fraction
        .or(cfg.train_fraction)
        .unwrap_or(DEFAULT_TRAIN_FRACTION);
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CliError::usage(format!(
            "--train-fraction {fraction} must lie in (0, 1)"
        )));
    }
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let d = load_dataset(&a.input).context(format!("loading {}", a.input.display()))?;
    let (train, test) = split_dataset(&d, fraction, Seed(seed))?;
    save_dataset(&train, &a.train_output)
        .context(format!("writing {}", a.train_output.display()))?;
    save_dataset(&test, &a.test_output).context(format!("writing {}", a.test_output.display()))?;
    println!(
        "train: {} images, {} boxes; test: {} images, {} boxes",
        train.images.len(),
        train.annotations.len(),
        test.images.len(),
        test.annotations.len()
    );
    Ok(())
}

pub fn augment(a: &AugmentArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let base = cfg.mix.clone().unwrap_or_default();
    let params = MixParams {
        alpha: a.alpha.unwrap_or(base.alpha),
        beta: a.beta.unwrap_or(base.beta),
        apply_prob: a.apply_prob.unwrap_or(base.apply_prob),
        seed: a.seed.or(cfg.seed).unwrap_or(base.seed),
        defects_only: a.defects_only || base.defects_only,
        fixed_ratio: base.fixed_ratio,
    };
    params.validate()?;
    let d = load_dataset(&a.input).context(format!("loading {}", a.input.display()))?;
    let rasters = load_raster_dir(&d, &a.images)
        .context(format!("reading rasters from {}", a.images.display()))?;
    let out = apply_bboxmixup(&d, &rasters, &params)?;
    create_dir(&a.output_dir)?;
    save_raster_dir(&d, &out.rasters, &a.output_dir)
        .context(format!("writing rasters to {}", a.output_dir.display()))?;
    write(&a.output_dir.join("mixes.json"), &to_json(&out.mixes)?)?;
    println!(
        "mixed {} of {} boxes across {} images",
        out.mixes.len(),
        d.annotations.len(),
        d.images.len()
    );
    Ok(())
}

pub fn calibrate(a: &CalibrateArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let base = cfg.cgpc.clone().unwrap_or_default();
    let cgpc = CgpcConfig {
        confidence_threshold: a.tau.unwrap_or(base.confidence_threshold),
        similarity_threshold: a.sim_threshold.unwrap_or(base.similarity_threshold),
        iou_threshold: a.iou_threshold.unwrap_or(base.iou_threshold),
    };
    cgpc.validate()?;
    let d = load_dataset(&a.input).context(format!("loading {}", a.input.display()))?;
    let preds = d
        .pseudo_labels()
        .context(format!("reading predictions from {}", a.input.display()))?;

    let out = match (&a.images, &a.features) {
        (Some(dir), _) => {
            let rasters = load_raster_dir(&d, dir)
                .context(format!("reading rasters from {}", dir.display()))?;
            run_cgpc(
                &preds,
                &FeatureProvider::Builtin(&rasters),
                &d.registry,
                &cgpc,
            )?
        }
        (None, Some(path)) => {
            let features =
                ExternalFeatures::load(path).context(format!("loading {}", path.display()))?;
            run_cgpc(
                &preds,
                &FeatureProvider::External(&features),
                &d.registry,
                &cgpc,
            )?
        }
        (None, None) => return Err(CliError::usage("one of --images or --features is required")),
    };
    for r in &out.remaps {
        warn!(
            "image {}: {} is not registered, using {}",
            r.image_id, r.from, r.to
        );
    }
    let calibrated = d.with_pseudo_labels(out.all_labels())?;
    save_dataset(&calibrated, &a.output).context(format!("writing {}", a.output.display()))?;
    if let Some(t) = &a.trace {
        write(t, out.trace_jsonl().as_bytes())?;
    }
    println!(
        "kept {} of {} predictions across {} images",
        out.len(),
        preds.len(),
        out.labels.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct SummaryOut<'a> {
    #[serde(flatten)]
    summary: &'a SimulationSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline_accuracy: Option<f64>,
}

fn resolve_scenario(path: Option<&Path>, cfg: &FileConfig) -> Result<Scenario, CliError> {
    let mut s = match path {
        Some(p) => read_json(p)?,
        None => cfg.scenario.clone().unwrap_or_default(),
    };
    if let Some(e) = cfg.ema {
        s.ema = e;
    }
    if let Some(c) = &cfg.cgpc {
        s.cgpc = c.clone();
    }
    if let Some(seed) = cfg.seed {
        s.seed = seed;
    }
    Ok(s)
}

pub fn simulate(a: &SimulateArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let mut s = resolve_scenario(a.scenario.as_deref(), cfg)?;
    if let Some(v) = a.seed {
        s.seed = v;
    }
    if let Some(v) = a.iterations {
        s.iterations = v;
    }
    if let Some(v) = a.momentum {
        s.ema.momentum = v;
    }
    if let Some(v) = a.buffer_ema {
        s.ema.update_buffers = v;
    }
    if let Some(v) = a.tau {
        s.cgpc.confidence_threshold = v;
    }
    s.use_cgpc |= a.use_cgpc;
    s.validate()?;

    let report = run_ssl_simulation(&s)?;
    let baseline = if a.baseline {
        Some(run_labeled_only_baseline(&s)?)
    } else {
        None
    };
    write(&a.output, report.to_jsonl().as_bytes())?;
    if let Some(p) = &a.summary {
        let out = SummaryOut {
            summary: &report.summary,
            baseline_accuracy: baseline,
        };
        write(p, &to_json(&out)?)?;
    }

    let sm = &report.summary;
    match sm.collapse_iteration {
        Some(i) => println!(
            "collapsed at iteration {i} (buffer EMA {})",
            on_off(sm.update_buffers)
        ),
        None => println!(
            "no collapse in {} iterations (buffer EMA {})",
            sm.iterations,
            on_off(sm.update_buffers)
        ),
    }
    if let Some(acc) = sm.final_student_accuracy {
        println!("final student accuracy {acc:.4}");
    }
    if let Some(b) = baseline {
        println!("labeled-only baseline accuracy {b:.4}");
    }
    println!("pseudo-labels used {}", sm.total_pseudo_labels);
    Ok(())
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

pub fn gen_synth(a: &GenSynthArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let mut s = resolve_scenario(a.scenario.as_deref(), cfg)?;
    if let Some(v) = a.seed {
        s.seed = v;
    }
    s.validate()?;

    let mut synth = cfg.synth.clone().unwrap_or_default();
    let want_dataset = a.dataset_images.is_some() || cfg.synth.is_some();
    if want_dataset {
        if let Some(v) = a.dataset_images {
            synth.images = v;
        }
        if let Some(v) = a.dataset_instances {
            synth.instances = v;
        }
        match a.defect_images {
            Some(v) => synth.defect_images = v,
            // an inherited default must not exceed the images that hold boxes
            None => {
                synth.defect_images = synth.defect_images.min(synth.images.min(synth.instances))
            }
        }
        if let Some(v) = a.seed.or(cfg.seed) {
            synth.seed = v;
        }
        synth.validate()?;
    } else if a.dataset_instances.is_some() || a.defect_images.is_some() {
        return Err(CliError::usage(
            "--dataset-instances and --defect-images need --dataset-images",
        ));
    }

    let streams = gen_synthetic_stream(&s.stream, Seed(s.seed))?;
    let dataset = if want_dataset {
        Some(gen_synthetic_dataset(&synth, !a.no_rasters)?)
    } else {
        None
    };

    create_dir(&a.output_dir)?;
    write(&a.output_dir.join("scenario.json"), &to_json(&s)?)?;
    write(&a.output_dir.join("streams.json"), &to_json(&streams)?)?;
    println!(
        "scenario with {} labeled, {} unlabeled, {} held-out scenes",
        streams.labeled.len(),
        streams.unlabeled.len(),
        streams.heldout.len()
    );
    if let Some((d, rasters)) = dataset {
        save_dataset(&d, a.output_dir.join("dataset.json")).context("writing dataset.json")?;
        if !rasters.is_empty() {
            let dir = a.output_dir.join("images");
            create_dir(&dir)?;
            save_raster_dir(&d, &rasters, &dir)
                .context(format!("writing rasters to {}", dir.display()))?;
        }
        info!("synthetic dataset spec: {synth:?}");
        println!(
            "dataset with {} images and {} boxes",
            d.images.len(),
            d.annotations.len()
        );
    }
    Ok(())
}
