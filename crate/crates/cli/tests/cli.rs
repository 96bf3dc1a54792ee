use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use texlat::archive::FeatureArchive;
use texlat::image::{normalize, parse_pgm, save_pgm};
use texlat::synthesis::initial_noise;
use texlat::{PssLayout, PssParams, PssVector};

const SMALL: [&str; 6] = ["--scales", "2", "--orients", "2", "--neighbor", "3"];

fn texlat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_texlat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = texlat(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// `classes x per_class` procedural images of side `side`.
fn dataset(root: &Path, classes: &[&str], per_class: usize, side: usize) {
    for (c, name) in classes.iter().enumerate() {
        let dir = root.join(name);
        fs::create_dir_all(&dir).unwrap();
        for i in 0..per_class {
            let img = texlat::procedural::sample(c, side, (10 * c + i) as u64).unwrap();
            let img = normalize(&img, 127.0, 40.0).unwrap();
            save_pgm(&img, dir.join(format!("img{i:02}.pgm"))).unwrap();
        }
    }
}

struct Fixture {
    _tmp: tempfile::TempDir,
    dir: PathBuf,
}

impl Fixture {
    fn new(per_class: usize) -> Fixture {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().to_path_buf();
        dataset(&dir.join("data"), &["grating", "streaks"], per_class, 32);
        Fixture { _tmp: tmp, dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Extracted archive and a model with output dimension `dim`.
    fn trained(&self, dim: usize) -> (PathBuf, PathBuf) {
        let (data, archive, model) = (self.path("data"), self.path("train.pssa"), self.path("model.hpca"));
        let mut args = vec!["extract", "--data", s(&data), "--size", "32", "-o", s(&archive)];
        args.extend(SMALL);
        ok(&args);
        let d = dim.to_string();
        ok(&["train", s(&archive), "--ccr", "0.9999", "--dim", &d, "-o", s(&model)]);
        (archive, model)
    }
}

#[test]
fn extract_default_statistic() {
    let tmp = tempfile::tempdir().unwrap();
    dataset(&tmp.path().join("data"), &["a", "b"], 3, 64);
    let archive = tmp.path().join("out.pssa");
    let data = tmp.path().join("data");
    ok(&["extract", "--data", s(&data), "--size", "64", "-o", s(&archive)]);
    let a = FeatureArchive::load(&archive).unwrap();
    assert_eq!(a.len(), 6);
    assert!(a.records().iter().all(|r| r.vector.len() == 1784));
    let info = ok(&["info", s(&archive)]);
    assert!(info.contains("6 records") && info.contains("D=1784"), "{info}");

    let again = tmp.path().join("again.pssa");
    ok(&["extract", "--data", s(&data), "--size", "64", "-o", s(&again), "--jobs", "1"]);
    assert_eq!(fs::read(&archive).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn empty_class_fails_with_its_name() {
    let f = Fixture::new(2);
    fs::create_dir_all(f.path("data/hollow")).unwrap();
    let out = texlat(&["extract", "--data", s(&f.path("data")), "-o", s(&f.path("x.pssa"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hollow"));
}

#[test]
fn unreadable_image_is_counted() {
    let f = Fixture::new(2);
    fs::write(f.path("data/grating/broken.pgm"), b"P5\n4 4\n255\n").unwrap();
    let (archive, data) = (f.path("x.pssa"), f.path("data"));
    let mut args = vec!["extract", "--data", s(&data), "--size", "32", "-o", s(&archive)];
    args.extend(SMALL);
    let out = texlat(&args);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("broken.pgm") && err.contains("1 of 5"), "{err}");
    assert_eq!(FeatureArchive::load(&archive).unwrap().len(), 4);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(texlat(&["extract"]).status.code(), Some(1));
    assert_eq!(texlat(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(texlat(&["--help"]).status.code(), Some(0));
}

#[test]
fn train_reports_dimensions() {
    // rank two in every group, so each group keeps min(size, 2) directions
    let params = PssParams::new(1, 1, 3);
    let layout = PssLayout::new(params).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut archive = FeatureArchive::new(params).unwrap();
    let bases: Vec<[Vec<f64>; 2]> = layout
        .ranges()
        .iter()
        .map(|r| std::array::from_fn(|_| (0..r.len()).map(|_| rng.random_range(-1.0..1.0)).collect()))
        .collect();
    for i in 0..30 {
        let mut v = Vec::new();
        for b in &bases {
            let (z0, z1): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            v.extend(b[0].iter().zip(&b[1]).map(|(x, y)| z0 * x + z1 * y));
        }
        archive.push("c", &format!("{i}"), PssVector::new(v, layout.clone()).unwrap()).unwrap();
    }
    let tmp = tempfile::tempdir().unwrap();
    let (a, m) = (tmp.path().join("a.pssa"), tmp.path().join("m.hpca"));
    archive.save(&a).unwrap();
    let expected: usize = layout.ranges().iter().map(|r| r.len().min(2)).sum();
    assert_eq!(expected, 17);
    let out = ok(&["train", s(&a), "--dim", "5", "-o", s(&m)]);
    assert!(out.contains("intermediate dimension: 17"), "{out}");
    assert!(out.contains("reduction rate: 89.4% (47 -> 5)"), "{out}");
    let spectrum = fs::read_to_string(tmp.path().join("m.hpca.spectrum.csv")).unwrap();
    assert!(spectrum.starts_with("stage,index,eigenvalue,ccr\n"));

    let out = texlat(&["train", s(&a), "--dim", "18", "-o", s(&m)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("18") && err.contains("17"), "{err}");
}

#[test]
fn encode_decode_round_trip() {
    let f = Fixture::new(3);
    let (archive, model) = f.trained(4);
    let (codes, stats) = (f.path("codes.csv"), f.path("stats.csv"));
    ok(&["encode", "--model", s(&model), "--archive", s(&archive), "-o", s(&codes)]);
    let text = fs::read_to_string(&codes).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "id,class,z1,z2,z3,z4");
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("grating/img00.pgm,grating,"));
    assert!(!text.contains('\r'));

    ok(&["decode", "--model", s(&model), s(&codes), "-o", s(&stats)]);
    let text = fs::read_to_string(&stats).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 2 + PssParams::new(2, 2, 3).dim());
    assert_eq!(header[2], "C1.mean");

    let img = f.path("data/streaks/img01.pgm");
    let single = f.path("one.csv");
    ok(&["encode", "--model", s(&model), "--size", "32", s(&img), "-o", s(&single)]);
    let a = fs::read_to_string(&single).unwrap();
    let b = fs::read_to_string(&codes).unwrap();
    let code_of = |t: &str, n: usize| t.lines().nth(n).unwrap().splitn(3, ',').nth(2).unwrap().to_string();
    assert_eq!(code_of(&a, 1), code_of(&b, 5));
}

#[test]
fn synth_is_seeded_and_descends() {
    let f = Fixture::new(3);
    let (archive, model) = f.trained(4);
    let codes = f.path("codes.csv");
    ok(&["encode", "--model", s(&model), "--archive", s(&archive), "-o", s(&codes)]);
    let run = |seed: &str, iters: &str, out: &Path| {
        ok(&[
            "synth", "--model", s(&model), "--codes", s(&codes), "--row", "grating/img01.pgm", "--size", "32",
            "--seed", seed, "--iterations", iters, "-o", s(out),
        ]);
    };
    let (a, b) = (f.path("a.pgm"), f.path("b.pgm"));
    run("7", "8", &a);
    run("7", "8", &b);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let trace = fs::read_to_string(f.path("a.pgm.trace.csv")).unwrap();
    let dist: Vec<f64> = trace.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(trace.lines().next(), Some("iteration,distance"));
    assert_eq!(dist.len(), 9);
    assert!(dist.windows(2).all(|w| w[1] <= w[0]));

    let zero = f.path("zero.pgm");
    run("3", "0", &zero);
    let m = texlat::hppca::load_model(&model).unwrap();
    let code: Vec<f64> = fs::read_to_string(&codes).unwrap().lines().nth(2).unwrap().split(',').skip(2).map(|v| v.parse().unwrap()).collect();
    let target = m.decode(&code).unwrap();
    let expect = texlat::image::encode_pgm(&initial_noise(&target, 32, 3).unwrap());
    assert_eq!(fs::read(&zero).unwrap(), expect);
    assert_eq!(parse_pgm(&fs::read(&zero).unwrap()).unwrap().width(), 32);
}

#[test]
fn eval_sweep_and_single_model() {
    let f = Fixture::new(3);
    let (archive, model) = f.trained(3);
    let out = f.path("sweep.csv");
    let rows = f.path("rows.csv");
    let data = f.path("data");
    ok(&[
        "eval", "--data", s(&data), "--size", "32", "--archive", s(&archive), "--sweep-dim", "1,3", "--ccr", "0.9999",
        "--iterations", "3", "--patch-size", "9", "-o", s(&out), "--rows", s(&rows),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "parameter,value,grating,streaks,mean");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("dim,1,") && lines[2].starts_with("dim,3,"));
    assert_eq!(fs::read_to_string(&rows).unwrap().lines().count(), 1 + 2 * 6);

    let single = f.path("single.csv");
    ok(&[
        "eval", "--data", s(&data), "--size", "32", "--model", s(&model), "--iterations", "2", "--patch-size", "9",
        "-o", s(&single),
    ]);
    assert_eq!(fs::read_to_string(&single).unwrap().lines().count(), 2);
}

#[test]
fn empty_eval_split_fails() {
    let f = Fixture::new(3);
    let (_, model) = f.trained(2);
    let manifest = f.path("set.toml");
    fs::write(
        &manifest,
        "root = \"data\"\n[preprocess]\nsize = 32\n[[class]]\nname = \"grating\"\ntrain = 3\neval = 0\n",
    )
    .unwrap();
    let out = texlat(&["eval", "--manifest", s(&manifest), "--model", s(&model), "-o", s(&f.path("e.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));
}

#[test]
fn info_and_band_dump() {
    let f = Fixture::new(1);
    let (_, model) = f.trained(1);
    let info = ok(&["info", s(&model)]);
    assert!(info.contains("output dimension: 1"), "{info}");
    let img = f.path("data/grating/img00.pgm");
    let bands = f.path("bands");
    let mut args = vec!["info", s(&img), "--dump-bands", s(&bands)];
    args.extend(SMALL);
    let out = ok(&args);
    assert!(out.contains("image 32x32"), "{out}");
    assert!(bands.join("band_s2_o1.pgm").exists());

    let mut bytes = fs::read(&model).unwrap();
    bytes[4] = 99;
    let bad = f.path("bad.hpca");
    fs::write(&bad, bytes).unwrap();
    let out = texlat(&["info", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("version"));
}
