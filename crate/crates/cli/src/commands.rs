use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, info};
use rayon::prelude::*;
use texlat::archive::FeatureArchive;
use texlat::eval::{evaluate_model, EvalReport, LabeledImage};
use texlat::hppca::{fit_hierarchy, load_model, save_model};
use texlat::image::{load_image, save_pgm};
use texlat::pss::PssExtractor;
use texlat::synthesis::synthesize;
use texlat::{HppcaModel, Pyramid, PssParams, PssVector, SynthesisConfig};

use crate::dataset::{Dataset, Preprocess, Split};
use crate::error::{io_error, CliError, CliResult};
use crate::{DataArgs, SynthArgs};

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    let f = fs::File::create(path).map_err(|e| io_error(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

fn record(prefix: &[&str], values: &[f64]) -> Vec<String> {
    prefix
        .iter()
        .map(|s| s.to_string())
        .chain(values.iter().map(|v| v.to_string()))
        .collect()
}

pub fn extract(data: &DataArgs, params: PssParams, split: Split, out: &Path) -> CliResult<()> {
    let ds = Dataset::open(data.data.as_deref(), data.manifest.as_deref(), data.size)?;
    let entries = ds.entries(split)?;
    let extractor = PssExtractor::new(ds.preprocess.size, params)?;
    info!("extracting {} images at {}x{}", entries.len(), ds.preprocess.size, ds.preprocess.size);
    let results: Vec<texlat::Result<PssVector>> = entries
        .par_iter()
        .map(|e| {
            let v = ds.preprocess.load(&e.path).and_then(|img| extractor.extract(&img));
            debug!("{}: done", e.id);
            v
        })
        .collect();
    let mut archive = FeatureArchive::new(params)?;
    let mut failed = 0;
    for (e, r) in entries.iter().zip(results) {
        match r {
            Ok(v) => archive.push(&e.class, &e.id, v)?,
            Err(err) => {
                failed += 1;
                eprintln!("{}: {err}", e.path.display());
            }
        }
    }
    archive.save(out)?;
    eprintln!(
        "extracted {} of {} images, D = {}, into {}",
        archive.len(),
        entries.len(),
        archive.layout().dim(),
        out.display()
    );
    if failed > 0 {
        return Err(CliError::Data(format!("{failed} of {} images failed", entries.len())));
    }
    Ok(())
}

fn load_archive(path: &Path) -> CliResult<FeatureArchive> {
    let archive = FeatureArchive::load(path)?;
    if archive.is_empty() {
        return Err(CliError::Data(format!("{}: archive has no records", path.display())));
    }
    Ok(archive)
}

pub fn train(archive: &Path, ccr: f64, dim: usize, out: &Path, spectrum: Option<&Path>) -> CliResult<()> {
    let archive = load_archive(archive)?;
    let model = fit_hierarchy(&archive.vectors(), ccr, dim)?;
    save_model(&model, out)?;
    let spectrum = spectrum.map(Path::to_path_buf).unwrap_or_else(|| with_suffix(out, ".spectrum.csv"));
    write_file(&spectrum, model.spectrum_csv())?;
    let dims: Vec<String> = model.group_dims().iter().map(|d| d.to_string()).collect();
    println!("training vectors: {}", archive.len());
    println!("group dimensions: {}", dims.join(" "));
    println!("intermediate dimension: {}", model.intermediate_dim());
    println!("output dimension: {}", model.output_dim());
    println!(
        "reduction rate: {:.1}% ({} -> {})",
        100.0 * model.reduction_rate(),
        model.layout().dim(),
        model.output_dim()
    );
    Ok(())
}

pub fn encode(model: &Path, archive: Option<&Path>, images: &[PathBuf], size: usize, out: &Path) -> CliResult<()> {
    let model = load_model(model)?;
    let rows: Vec<(String, String, PssVector)> = match archive {
        Some(path) => load_archive(path)?
            .records()
            .iter()
            .map(|r| (r.id.clone(), r.class.clone(), r.vector.clone()))
            .collect(),
        None => {
            if images.is_empty() {
                return Err(CliError::Usage("give images or --archive".into()));
            }
            let pre = Preprocess { size, ..Preprocess::default() };
            let extractor = PssExtractor::new(size, model.params())?;
            images
                .par_iter()
                .map(|p| {
                    let v = extractor.extract(&pre.load(p)?)?;
                    Ok((p.display().to_string(), String::new(), v))
                })
                .collect::<texlat::Result<_>>()?
        }
    };
    let mut w = csv_writer(out)?;
    let mut header = vec!["id".to_string(), "class".to_string()];
    header.extend((1..=model.output_dim()).map(|i| format!("z{i}")));
    w.write_record(&header)?;
    for (id, class, v) in &rows {
        w.write_record(record(&[id, class], &model.encode(v)?))?;
    }
    w.flush().map_err(|e| io_error(out, e))?;
    Ok(())
}

struct CodeRow {
    id: String,
    class: String,
    code: Vec<f64>,
}

fn read_codes(path: &Path, dim: usize) -> CliResult<Vec<CodeRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let width = r.headers()?.len();
    if width != dim + 2 {
        return Err(CliError::Data(format!(
            "{}: {} code columns, model expects {dim}",
            path.display(),
            width.saturating_sub(2)
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let code = rec
            .iter()
            .skip(2)
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Data(format!("{} row {}: {e}", path.display(), line + 1)))?;
        rows.push(CodeRow {
            id: rec[0].to_string(),
            class: rec[1].to_string(),
            code,
        });
    }
    Ok(rows)
}

pub fn decode(model: &Path, codes: &Path, out: &Path) -> CliResult<()> {
    let model = load_model(model)?;
    let rows = read_codes(codes, model.output_dim())?;
    let mut w = csv_writer(out)?;
    let mut header = vec!["id".to_string(), "class".to_string()];
    header.extend(model.layout().column_names());
    w.write_record(&header)?;
    for row in &rows {
        let v = model.decode(&row.code)?;
        w.write_record(record(&[&row.id, &row.class], v.values()))?;
    }
    w.flush().map_err(|e| io_error(out, e))?;
    Ok(())
}

pub enum SynthSource {
    Image(PathBuf),
    Code(PathBuf, String),
}

fn target_statistic(model: &HppcaModel, source: &SynthSource, size: usize) -> CliResult<PssVector> {
    match source {
        SynthSource::Image(path) => {
            let pre = Preprocess { size, ..Preprocess::default() };
            let v = PssExtractor::new(size, model.params())?.extract(&pre.load(path)?)?;
            Ok(model.decode(&model.encode(&v)?)?)
        }
        SynthSource::Code(path, row) => {
            let rows = read_codes(path, model.output_dim())?;
            let hit = rows
                .iter()
                .find(|r| &r.id == row)
                .or_else(|| row.parse::<usize>().ok().and_then(|i| rows.get(i)))
                .ok_or_else(|| CliError::Usage(format!("{}: no row {row:?}", path.display())))?;
            Ok(model.decode(&hit.code)?)
        }
    }
}

pub fn synth(model: &Path, source: SynthSource, size: usize, args: &SynthArgs, out: &Path, trace: Option<&Path>) -> CliResult<()> {
    let model = load_model(model)?;
    let target = target_statistic(&model, &source, size)?;
    let cfg = SynthesisConfig {
        iterations: args.iterations,
        seed: args.seed,
        side: size,
        ..SynthesisConfig::default()
    };
    let result = synthesize(&target, &cfg)?;
    save_pgm(&result.image, out)?;
    let trace = trace.map(Path::to_path_buf).unwrap_or_else(|| with_suffix(out, ".trace.csv"));
    let mut w = csv_writer(&trace)?;
    w.write_record(["iteration", "distance"])?;
    for (i, d) in result.trace.iter().enumerate() {
        w.write_record([i.to_string(), d.to_string()])?;
    }
    w.flush().map_err(|e| io_error(&trace, e))?;
    let (first, last) = (result.trace[0], result.trace[result.trace.len() - 1]);
    eprintln!("distance {first:.6e} -> {last:.6e} after {} iterations", args.iterations);
    Ok(())
}

pub enum EvalPlan {
    Models(Vec<PathBuf>),
    SweepDim { archive: PathBuf, ccr: f64, dims: Vec<usize> },
    SweepCcr { archive: PathBuf, dim: usize, ccrs: Vec<f64> },
}

enum Run {
    Loaded(Box<HppcaModel>),
    Fit(f64, usize),
}

pub fn eval(data: &DataArgs, plan: EvalPlan, args: &SynthArgs, patch: usize, out: &Path, rows_out: Option<&Path>) -> CliResult<()> {
    let ds = Dataset::open(data.data.as_deref(), data.manifest.as_deref(), data.size)?;
    let entries = ds.entries(Split::Eval)?;
    if entries.is_empty() {
        return Err(CliError::Data("eval split is empty".into()));
    }
    let images = entries
        .par_iter()
        .map(|e| {
            let image = ds.preprocess.load(&e.path).map_err(|err| CliError::Data(format!("{}: {err}", e.path.display())))?;
            Ok(LabeledImage {
                class: e.class.clone(),
                id: e.id.clone(),
                image,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let cfg = SynthesisConfig {
        iterations: args.iterations,
        seed: args.seed,
        ..SynthesisConfig::default()
    };

    let (vectors, runs) = match plan {
        EvalPlan::Models(paths) => {
            let runs = paths
                .iter()
                .map(|p| {
                    let model = load_model(p)?;
                    Ok(("dim", model.output_dim().to_string(), Run::Loaded(Box::new(model))))
                })
                .collect::<CliResult<Vec<_>>>()?;
            (Vec::new(), runs)
        }
        EvalPlan::SweepDim { archive, ccr, dims } => (
            load_archive(&archive)?.vectors(),
            dims.into_iter().map(|d| ("dim", d.to_string(), Run::Fit(ccr, d))).collect(),
        ),
        EvalPlan::SweepCcr { archive, dim, ccrs } => (
            load_archive(&archive)?.vectors(),
            ccrs.into_iter().map(|r| ("ccr", r.to_string(), Run::Fit(r, dim))).collect(),
        ),
    };

    let classes = ds.class_names();
    let mut summary = csv_writer(out)?;
    let mut header = vec!["parameter".to_string(), "value".to_string()];
    header.extend(classes.iter().cloned());
    header.push("mean".to_string());
    summary.write_record(&header)?;
    let mut per_image = rows_out.map(csv_writer).transpose()?;
    if let Some(w) = per_image.as_mut() {
        w.write_record(["parameter", "value", "class", "id", "tss", "pss_error", "final_distance"])?;
    }

    for (name, value, run) in runs {
        let model = match run {
            Run::Loaded(m) => *m,
            Run::Fit(r, d) => fit_hierarchy(&vectors, r, d)?,
        };
        info!("evaluating {name} = {value} on {} images", images.len());
        let report: EvalReport = evaluate_model(&model, &images, &cfg, patch)?;
        let means = report.class_means();
        let mut rec = vec![name.to_string(), value.clone()];
        for c in &classes {
            let m = means.iter().find(|(n, _)| n == c).map(|(_, m)| m.to_string()).unwrap_or_default();
            rec.push(m);
        }
        rec.push(report.mean_tss().to_string());
        summary.write_record(&rec)?;
        if let Some(w) = per_image.as_mut() {
            for r in &report.rows {
                w.write_record(record(&[name, &value, &r.class, &r.id], &[r.tss, r.pss_error, r.final_distance]))?;
            }
        }
        eprintln!("{name} = {value}: mean TSS {:.6}", report.mean_tss());
    }
    summary.flush().map_err(|e| io_error(out, e))?;
    if let (Some(w), Some(p)) = (per_image.as_mut(), rows_out) {
        w.flush().map_err(|e| io_error(p, e))?;
    }
    Ok(())
}

pub fn info(path: &Path, dump_bands: Option<&Path>, params: PssParams) -> CliResult<()> {
    let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
    let show = |p: PssParams, d: usize| println!("statistic: N={} K={} M={} D={d}", p.n_scales, p.n_orientations, p.neighborhood);
    match bytes.get(..4) {
        Some(b"PSSA") => {
            let a = FeatureArchive::from_bytes(&bytes)?;
            println!("feature archive, {} records", a.len());
            show(a.params(), a.layout().dim());
            let mut counts: Vec<(String, usize)> = Vec::new();
            for r in a.records() {
                match counts.iter_mut().find(|(c, _)| c == &r.class) {
                    Some((_, n)) => *n += 1,
                    None => counts.push((r.class.clone(), 1)),
                }
            }
            for (c, n) in counts {
                println!("  {c}: {n}");
            }
        }
        Some(b"HPCA") => {
            let m = HppcaModel::from_bytes(&bytes)?;
            println!("hierarchical model, threshold {}", m.threshold());
            show(m.params(), m.layout().dim());
            let dims: Vec<String> = m.group_dims().iter().map(|d| d.to_string()).collect();
            println!("group dimensions: {}", dims.join(" "));
            println!("intermediate dimension: {}", m.intermediate_dim());
            println!("output dimension: {}", m.output_dim());
            println!("reduction rate: {:.1}%", 100.0 * m.reduction_rate());
        }
        Some(b"PSSV") => {
            let v = PssVector::from_bytes(&bytes)?;
            println!("statistic vector");
            show(v.params(), v.len());
        }
        _ => {
            let img = load_image(path)?;
            println!("image {}x{}, mean {:.3}, std {:.3}", img.width(), img.height(), img.mean(), img.std_dev());
            if let Some(dir) = dump_bands {
                fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
                let pyr = Pyramid::build(&img, params.pyramid())?;
                for s in 0..params.n_scales {
                    for k in 0..params.n_orientations {
                        save_pgm(&pyr.band_magnitude_image(s, k)?, dir.join(format!("band_s{}_o{k}.pgm", s + 1)))?;
                    }
                }
                println!("wrote {} band maps to {}", params.n_scales * params.n_orientations, dir.display());
            }
        }
    }
    Ok(())
}
