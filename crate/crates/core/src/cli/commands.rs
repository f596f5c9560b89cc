use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::manifest::{sha256_file, RunManifest};
use super::{
    CliError, Command, DegradeArgs, EvaluateArgs, FeaturesArgs, RerunArgs, RestoreArgs,
    RestorerArgs, SynthArgs, TrainArgs,
};
use crate::committee::{build_preset, committee_spread, run_committee, CommitteeName, InputStats};
use crate::degrade::{add_awgn, make_sisr_input, NoiseSpec, ScaleSpec};
use crate::image::{load_any, save_pgm, save_raw_f32, Image};
use crate::metrics::{ipsnr, psnr, psnr_u8};
use crate::restorer::{ConvFilterRestorer, IdentityRestorer, Restorer};
use crate::textures::texture_set;
use crate::tinynet::{dump_features, load_weights, save_weights, TinyCnnRestorer};
use crate::trainer::{train, TrainConfig};
use crate::transforms::{apply_affine, AffineParams};

pub(super) fn dispatch(command: Command, argv: &[String]) -> Result<(), CliError> {
    let cwd = std::env::current_dir()?;
    let name = argv.first().map(String::as_str).unwrap_or("");
    let mut manifest = RunManifest::new(name, argv, &cwd);
    match command {
        Command::Degrade(a) => degrade(a, &mut manifest),
        Command::Train(a) => train_cmd(a, &mut manifest),
        Command::Restore(a) => restore(a, &mut manifest),
        Command::Evaluate(a) => evaluate(a, &mut manifest),
        Command::Features(a) => features(a, &mut manifest),
        Command::Synth(a) => synth(a, &mut manifest),
        Command::Rerun(a) => rerun(a),
    }
}

fn manifest_path_for(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

fn preview_path_for(output: &Path) -> Result<PathBuf, CliError> {
    if output
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
    {
        return Err(CliError::Usage(format!(
            "{}: raw output must not use the .pgm extension (reserved for previews)",
            output.display()
        )));
    }
    Ok(output.with_extension("pgm"))
}

fn with_path(path: &Path, e: CliError) -> CliError {
    match e {
        CliError::Io(m) => CliError::Io(format!("{}: {m}", path.display())),
        CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
        usage => usage,
    }
}

fn load_model(path: &Path) -> Result<crate::tinynet::NetworkWeights, CliError> {
    load_weights(path).map_err(|e| with_path(path, e.into()))
}

fn load_input(path: &Path, manifest: &mut RunManifest) -> Result<Image, CliError> {
    let img = load_any(path).map_err(|e| with_path(path, e.into()))?;
    manifest.add_input(path)?;
    Ok(img)
}

fn make_restorer(
    base: &RestorerArgs,
    manifest: &mut RunManifest,
) -> Result<Box<dyn Restorer>, CliError> {
    match (&base.model, &base.filter) {
        (Some(model), None) => {
            let w = load_model(model)?;
            manifest.set("model.path", model.display().to_string());
            manifest.set("model.sha256", sha256_file(model)?);
            Ok(Box::new(TinyCnnRestorer::new(w)?))
        }
        (None, Some(filter)) => {
            manifest.set("filter", filter.as_str());
            let r: Box<dyn Restorer> = match filter.as_str() {
                "identity" => Box::new(IdentityRestorer),
                "gaussian" => Box::new(ConvFilterRestorer::gaussian3()),
                "box" => Box::new(ConvFilterRestorer::box3()),
                "shift" => Box::new(ConvFilterRestorer::shift_left()),
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown filter {other:?} (identity, gaussian, box, shift)"
                    )))
                }
            };
            Ok(r)
        }
        _ => Err(CliError::Usage(
            "exactly one of --model or --filter is required".into(),
        )),
    }
}

fn parse_committee(name: &str) -> Result<CommitteeName, CliError> {
    name.parse()
        .map_err(|e: crate::committee::CommitteeError| CliError::Usage(e.to_string()))
}

/// Image files in `dir` keyed by file stem, restricted to `exts`.
fn list_images(dir: &Path, exts: &[&str]) -> Result<BTreeMap<String, PathBuf>, CliError> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))? {
        let path = entry?.path();
        let Some(ext) = path.extension().and_then(|e| e.to_str()) else {
            continue;
        };
        if !path.is_file() || !exts.iter().any(|x| ext.eq_ignore_ascii_case(x)) {
            continue;
        }
        let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
        if let Some(prev) = out.insert(stem.clone(), path.clone()) {
            return Err(CliError::Validation(format!(
                "both {} and {} provide image {stem:?}",
                prev.display(),
                path.display()
            )));
        }
    }
    Ok(out)
}

fn degrade(a: DegradeArgs, manifest: &mut RunManifest) -> Result<(), CliError> {
    let preview = preview_path_for(&a.output)?;
    let img = load_input(&a.input, manifest)?;
    let out = match (a.sigma, a.scale) {
        (Some(sigma), None) => {
            manifest.set("seed", a.seed.to_string());
            manifest.set("sigma", sigma.to_string());
            add_awgn(&img, NoiseSpec::new(sigma, a.seed)?)
        }
        (None, Some(factor)) => {
            manifest.set("scale", factor.to_string());
            make_sisr_input(&img, ScaleSpec::new(factor)?)?
        }
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --sigma or --scale".into(),
            ))
        }
    };
    save_raw_f32(&out, &a.output)?;
    save_pgm(&out, &preview)?;
    manifest.add_output(&a.output)?;
    manifest.add_output(&preview)?;
    manifest.write(&manifest_path_for(&a.output))?;
    Ok(())
}

fn train_cmd(a: TrainArgs, manifest: &mut RunManifest) -> Result<(), CliError> {
    let files = list_images(&a.data_dir, &["pgm", "scnr"])?;
    if files.is_empty() {
        return Err(CliError::Validation(format!(
            "no .pgm or .scnr images in {}",
            a.data_dir.display()
        )));
    }
    let mut images = Vec::with_capacity(files.len());
    for path in files.values() {
        images.push(load_input(path, manifest)?);
    }
    let config = TrainConfig {
        patch_size: a.patch_size,
        patches_per_epoch: a.patches_per_epoch,
        epochs: a.epochs,
        learning_rate: a.learning_rate,
        sigma: a.sigma,
        seed: a.seed,
        augment_fr: a.augment_fr,
        ..TrainConfig::default()
    };
    manifest.set("seed", a.seed.to_string());
    manifest.set("sigma", a.sigma.to_string());
    let outcome = train(&config, &images)?;
    for (e, loss) in outcome.epoch_losses.iter().enumerate() {
        println!("epoch {:>3}  mse {loss:.6e}", e + 1);
    }
    save_weights(&outcome.weights, &a.out_model)?;
    manifest.add_output(&a.out_model)?;
    manifest.write(&manifest_path_for(&a.out_model))?;
    Ok(())
}

fn restore(a: RestoreArgs, manifest: &mut RunManifest) -> Result<(), CliError> {
    let preview = preview_path_for(&a.output)?;
    let name = parse_committee(&a.committee)?;
    let img = load_input(&a.input, manifest)?;
    let restorer = make_restorer(&a.base, manifest)?;
    let preset = build_preset(name, Some(InputStats::of(&img)))?;
    if let Some(w) = &preset.warning {
        eprintln!("scn: warning: {w}");
        manifest.set("warning", w.as_str());
    }
    manifest.set("committee", name.as_str());
    manifest.set("members", preset.spec.members.len().to_string());
    let result = run_committee(&preset.spec, restorer.as_ref(), &img)?;
    save_raw_f32(&result.output, &a.output)?;
    save_pgm(&result.output, &preview)?;
    manifest.add_output(&a.output)?;
    manifest.add_output(&preview)?;
    if let Some(dir) = &a.dump_members {
        fs::create_dir_all(dir)?;
        for (i, (m, member)) in result.members.iter().zip(&preset.spec.members).enumerate() {
            let path = dir.join(format!("member_{:02}.scnr", i + 1));
            save_raw_f32(m, &path)?;
            manifest.add_output(&path)?;
            manifest.set(&format!("member.{}", i + 1), member.to_string());
        }
    }
    let spread = committee_spread(&result.members)?;
    println!(
        "{}: {} members, spread {spread:.6}",
        name,
        result.members.len()
    );
    manifest.write(&manifest_path_for(&a.output))?;
    Ok(())
}

struct EvalRow {
    image: String,
    committee: CommitteeName,
    psnr_f32: f64,
    psnr_u8: f64,
    ipsnr_u8: f64,
}

fn evaluate(a: EvaluateArgs, manifest: &mut RunManifest) -> Result<(), CliError> {
    let committees = a
        .committees
        .iter()
        .map(|c| parse_committee(c))
        .collect::<Result<Vec<_>, _>>()?;
    if committees.is_empty() {
        return Err(CliError::Usage("no committees given".into()));
    }
    let clean = list_images(&a.clean_dir, &["pgm", "scnr"])?;
    let degraded = list_images(&a.degraded_dir, &["scnr"])?;
    let missing: Vec<&String> = clean
        .keys()
        .filter(|k| !degraded.contains_key(*k))
        .chain(degraded.keys().filter(|k| !clean.contains_key(*k)))
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Validation(format!(
            "image names differ between directories: {missing:?}"
        )));
    }
    if clean.is_empty() {
        return Err(CliError::Validation("no images to evaluate".into()));
    }
    let restorer = make_restorer(&a.base, manifest)?;
    let mut pairs = Vec::new();
    for (name, cpath) in &clean {
        let dpath = &degraded[name];
        let c = load_input(cpath, manifest)?;
        let d = load_input(dpath, manifest)?;
        pairs.push((name.clone(), c, d));
    }

    let per_image: Vec<Result<Vec<EvalRow>, CliError>> = pairs
        .par_iter()
        .map(|(name, clean, degraded)| {
            // SISR inputs are cropped to a multiple of the scale factor
            let clean = if clean.dims() != degraded.dims() {
                if clean.height() < degraded.height() || clean.width() < degraded.width() {
                    return Err(CliError::Validation(format!(
                        "{name}: degraded image larger than clean image"
                    )));
                }
                clean.crop(0, 0, degraded.height(), degraded.width())?
            } else {
                clean.clone()
            };
            let stats = Some(InputStats::of(degraded));
            let base_spec = build_preset(CommitteeName::None, None)?.spec;
            let base = run_committee(&base_spec, restorer.as_ref(), degraded)?.output;
            let base_u8 = psnr_u8(&base, &clean)?;
            committees
                .iter()
                .map(|&committee| {
                    let spec = build_preset(committee, stats)?.spec;
                    let out = run_committee(&spec, restorer.as_ref(), degraded)?.output;
                    let p_u8 = psnr_u8(&out, &clean)?;
                    Ok(EvalRow {
                        image: name.clone(),
                        committee,
                        psnr_f32: psnr(&out, &clean)?,
                        psnr_u8: p_u8,
                        ipsnr_u8: ipsnr(p_u8, base_u8)?,
                    })
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_image {
        rows.extend(r?);
    }

    let mut csv = String::from("image,setting,committee,psnr_f32,psnr_u8,ipsnr_u8\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{:.6},{:.6},{:.6}",
            r.image, a.setting, r.committee, r.psnr_f32, r.psnr_u8, r.ipsnr_u8
        );
    }
    let n = pairs.len() as f64;
    for &committee in &committees {
        let sel = rows.iter().filter(|r| r.committee == committee);
        let (f, u, i) = sel.fold((0.0, 0.0, 0.0), |acc, r| {
            (acc.0 + r.psnr_f32, acc.1 + r.psnr_u8, acc.2 + r.ipsnr_u8)
        });
        let _ = writeln!(
            csv,
            "average,{},{},{:.6},{:.6},{:.6}",
            a.setting,
            committee,
            f / n,
            u / n,
            i / n
        );
    }

    match &a.output {
        Some(path) => {
            fs::write(path, &csv)?;
            manifest.set(
                "committees",
                committees
                    .iter()
                    .map(|c| c.as_str())
                    .collect::<Vec<_>>()
                    .join(","),
            );
            manifest.add_output(path)?;
            manifest.write(&manifest_path_for(path))?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn features(a: FeaturesArgs, manifest: &mut RunManifest) -> Result<(), CliError> {
    let img = load_input(&a.input, manifest)?;
    let weights = load_model(&a.model)?;
    manifest.set("model.sha256", sha256_file(&a.model)?);
    let fed = if a.invert {
        apply_affine(AffineParams::INVERSION, &img)
    } else {
        img
    };
    let maps = dump_features(&weights, &fed, a.layer)?;
    fs::create_dir_all(&a.outdir)?;
    let input_path = a.outdir.join("input.scnr");
    save_raw_f32(&fed, &input_path)?;
    manifest.add_output(&input_path)?;
    let mut table = String::from("channel,min,max\n");
    for (c, m) in maps.iter().enumerate() {
        let pgm = a.outdir.join(format!("feature_c{:02}.pgm", c + 1));
        let raw = a.outdir.join(format!("feature_c{:02}.scnr", c + 1));
        save_pgm(&m.normalized, &pgm)?;
        save_raw_f32(&m.raw, &raw)?;
        manifest.add_output(&pgm)?;
        manifest.add_output(&raw)?;
        let _ = writeln!(table, "{},{},{}", c + 1, m.min, m.max);
    }
    let table_path = a.outdir.join("features.csv");
    fs::write(&table_path, table)?;
    manifest.add_output(&table_path)?;
    manifest.write(&a.outdir.join("manifest.txt"))?;
    println!("layer {}: {} channels", a.layer, maps.len());
    Ok(())
}

fn synth(a: SynthArgs, manifest: &mut RunManifest) -> Result<(), CliError> {
    if a.size == 0 || a.count == 0 {
        return Err(CliError::Usage(
            "--count and --size must be positive".into(),
        ));
    }
    fs::create_dir_all(&a.outdir)?;
    manifest.set("seed", a.seed.to_string());
    for (i, img) in texture_set(a.seed, a.count, a.size, a.size)
        .iter()
        .enumerate()
    {
        let path = a.outdir.join(format!("tex_{:02}.pgm", i + 1));
        save_pgm(img, &path)?;
        manifest.add_output(&path)?;
    }
    manifest.write(&a.outdir.join("manifest.txt"))?;
    Ok(())
}

fn rerun(a: RerunArgs) -> Result<(), CliError> {
    let recorded = RunManifest::read(&a.manifest).map_err(CliError::Validation)?;
    let argv = recorded.argv();
    if argv.is_empty() {
        return Err(CliError::Validation(
            "manifest has no recorded arguments".into(),
        ));
    }
    if argv[0] == "rerun" {
        return Err(CliError::Validation("manifest records a rerun".into()));
    }
    if let Some(cwd) = recorded.get("cwd") {
        std::env::set_current_dir(cwd).map_err(|e| CliError::Io(format!("{cwd}: {e}")))?;
    }
    let expected = recorded.outputs();
    super::run_args(&argv)?;
    let mut mismatched = Vec::new();
    for (path, hash) in &expected {
        if sha256_file(path)? != *hash {
            mismatched.push(path.display().to_string());
        }
    }
    if !mismatched.is_empty() {
        return Err(CliError::Validation(format!(
            "outputs differ from manifest: {}",
            mismatched.join(", ")
        )));
    }
    println!("reproduced {} outputs", expected.len());
    Ok(())
}
