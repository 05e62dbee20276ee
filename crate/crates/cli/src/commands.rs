use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use serde_json::json;

use strokesense::decode::{correct_word, word_accuracy, Dictionary, DEFAULT_MAX_EDIT};
use strokesense::ingest::{
    read_dataset, scan_stream, segment_sessions, sessions_to_stream, write_dataset, CalibrationScale,
    DEFAULT_MIN_SESSION_FRAMES,
};
use strokesense::nn::{
    grad_check_coords, init_params, load_checkpoint, save_checkpoint, ModelShape, ParamGroup, TrainSample,
};
use strokesense::preprocess::{augment as augment_dataset, stratified_holdout, AugmentConfig, Protocol, SplitSpec};
use strokesense::rng;
use strokesense::synth::{alphabet_index, default_glyphs, generate_dataset, WriterStyle};
use strokesense::train_eval::{
    evaluate, evaluation_view, run_protocol, sweep_classes as run_sweep_classes, sweep_train_size, train_model,
    write_confusion_csv, write_sweep_csv, EvalReport, SweepPoint, TrainedModel,
};
use strokesense::types::{Alphabet, CharacterLabel, Dataset, LabeledSequence, Origin};

use crate::{data_path, load_config, CmdResult, Common, Failure};

pub const MODEL_FILE: &str = "model.ssnn";
pub const CLASSES_FILE: &str = "classes.txt";
pub const PREPROCESS_FILE: &str = "augment.json";
pub const HISTORY_FILE: &str = "history.csv";

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Data(anyhow::Error::new(e).context(format!("writing {}", path.display())))
}

fn load_data(p: &Path) -> Result<Dataset, Failure> {
    Ok(read_dataset(&data_path(p))?)
}

fn emit(common: &Common, summary: serde_json::Value, human: impl FnOnce() -> String) {
    if common.json {
        println!("{summary}");
    } else {
        let text = human();
        if !text.is_empty() {
            println!("{text}");
        }
    }
}

fn parse_alphabet(s: &str) -> Result<Alphabet, Failure> {
    s.parse().map_err(|_| usage(format!("unknown alphabet {s:?}")))
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "latin")]
    pub alphabet: String,
    /// Number of classes, taken in template order.
    #[arg(long, default_value_t = 8)]
    pub classes: usize,
    /// Explicit glyphs instead of `--classes` (e.g. "abcd").
    #[arg(long)]
    pub glyphs: Option<String>,
    #[arg(long, default_value_t = 6)]
    pub writers: usize,
    /// Samples per class per writer.
    #[arg(long, default_value_t = 20)]
    pub per_class: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the sequences as a framed byte stream (one press per item).
    #[arg(long)]
    pub stream_out: Option<PathBuf>,
}

pub fn synth(a: SynthArgs) -> CmdResult {
    let (_, seed) = load_config(&a.common)?;
    let alphabet = parse_alphabet(&a.alphabet)?;
    let glyphs: Vec<char> = match &a.glyphs {
        Some(g) => g.chars().collect(),
        None => default_glyphs(alphabet, a.classes),
    };
    if glyphs.len() < 2 || a.glyphs.is_none() && glyphs.len() < a.classes {
        return Err(usage(format!("need at least 2 and at most the available classes, got {}", glyphs.len())));
    }
    if a.writers == 0 || a.per_class == 0 {
        return Err(usage("--writers and --per-class must be positive"));
    }
    let writers = WriterStyle::population(a.writers, rng::derive_seed_str(seed, "population"));
    let ds = generate_dataset(alphabet, &glyphs, &writers, a.per_class, seed)?;
    let out = data_path(&a.out);
    let manifest = write_dataset(&ds, &out)?;
    if let Some(s) = &a.stream_out {
        let path = data_path(s);
        let seqs: Vec<_> = ds.items.iter().map(|it| it.sequence.clone()).collect();
        let bytes = sessions_to_stream(&seqs, &CalibrationScale::default(), 20);
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
    }
    emit(
        &a.common,
        json!({"command": "synth", "items": ds.len(), "classes": ds.num_classes(),
               "writers": a.writers, "manifest": manifest}),
        || format!("wrote {} items to {}", ds.len(), manifest.display()),
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[command(flatten)]
    pub common: Common,
    /// Byte stream file, or `-` for standard input.
    #[arg(long, conflicts_with = "connect")]
    pub input: Option<PathBuf>,
    /// Read the stream from a TCP address until the peer closes.
    #[arg(long)]
    pub connect: Option<String>,
    /// One glyph per button-press session, in order.
    #[arg(long)]
    pub labels: String,
    #[arg(long, default_value = "latin")]
    pub alphabet: String,
    #[arg(long)]
    pub writer: String,
    #[arg(long, default_value_t = DEFAULT_MIN_SESSION_FRAMES)]
    pub min_frames: usize,
    #[arg(long, default_value_t = 16384.0)]
    pub accel_lsb_per_g: f64,
    #[arg(long, default_value_t = 131.0)]
    pub gyro_lsb_per_dps: f64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn ingest(a: IngestArgs) -> CmdResult {
    load_config(&a.common)?;
    let alphabet = parse_alphabet(&a.alphabet)?;
    let cal = CalibrationScale::new(a.accel_lsb_per_g, a.gyro_lsb_per_dps)?;
    let mut bytes = Vec::new();
    match (&a.input, &a.connect) {
        (Some(p), _) if p == Path::new("-") => {
            std::io::stdin().read_to_end(&mut bytes).context("reading standard input")?;
        }
        (Some(p), _) => {
            let p = data_path(p);
            bytes = fs::read(&p).with_context(|| format!("reading {}", p.display()))?;
        }
        (None, Some(addr)) => {
            std::net::TcpStream::connect(addr)
                .and_then(|mut s| s.read_to_end(&mut bytes))
                .with_context(|| format!("reading from {addr}"))?;
        }
        (None, None) => return Err(usage("one of --input or --connect is required")),
    }
    let frames = scan_stream(&bytes);
    let sessions = segment_sessions(&frames, &cal, a.min_frames);
    let labels: Vec<char> = a.labels.chars().filter(|c| !c.is_whitespace()).collect();
    if labels.len() != sessions.len() {
        return Err(Failure::Data(anyhow::anyhow!(
            "stream holds {} sessions but {} labels were given",
            sessions.len(),
            labels.len()
        )));
    }
    let mut class_list: Vec<CharacterLabel> = Vec::new();
    let mut items = Vec::new();
    for (k, (seq, &g)) in sessions.into_iter().zip(&labels).enumerate() {
        let idx = alphabet_index(alphabet, g).ok_or_else(|| usage(format!("{g:?} is not a {alphabet} letter")))?;
        let label = CharacterLabel::new(alphabet, idx, g);
        if !class_list.contains(&label) {
            class_list.push(label);
        }
        items.push(LabeledSequence {
            id: format!("{}_{k:05}", a.writer),
            sequence: seq,
            label,
            writer_id: a.writer.clone(),
            origin: Origin::Recorded,
            parent_id: None,
        });
    }
    let ds = Dataset::new(items, class_list)?;
    let manifest = write_dataset(&ds, &data_path(&a.out))?;
    emit(
        &a.common,
        json!({"command": "ingest", "frames": frames.len(), "items": ds.len(), "manifest": manifest}),
        || format!("{} frames → {} sessions in {}", frames.len(), ds.len(), manifest.display()),
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn augment(a: AugmentArgs) -> CmdResult {
    let (cfg, seed) = load_config(&a.common)?;
    let ds = load_data(&a.data)?;
    let aug = AugmentConfig { rng_seed: seed, ..cfg.augment };
    let out = augment_dataset(&ds, &aug)?;
    let manifest = write_dataset(&out, &data_path(&a.out))?;
    emit(
        &a.common,
        json!({"command": "augment", "input_items": ds.len(), "items": out.len(), "manifest": manifest}),
        || format!("{} → {} items in {}", ds.len(), out.len(), manifest.display()),
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for the checkpoint and its sidecar files.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Hard sigmoid in the candidate and cell-output paths too.
    #[arg(long)]
    pub hard_sigmoid_everywhere: bool,
}

pub fn train(a: TrainArgs) -> CmdResult {
    let (mut cfg, seed) = load_config(&a.common)?;
    if let Some(e) = a.max_epochs {
        cfg.train.max_epochs = e;
    }
    cfg.model.hard_sigmoid_everywhere |= a.hard_sigmoid_everywhere;
    cfg.validate()?;
    let ds = load_data(&a.data)?;
    let hyper = cfg.train_hyper();
    let (val, rest) = stratified_holdout(&ds, hyper.val_fraction, rng::derive_seed_str(seed, "val"));
    let aug = AugmentConfig { rng_seed: rng::derive_seed_str(seed, "augment"), ..cfg.augment.clone() };
    let fitted_on = augment_dataset(&rest, &aug)?;
    let val = evaluation_view(&val, &aug)?;
    let outcome = train_model(&fitted_on, &val, &hyper, seed)?;

    let dir = data_path(&a.out);
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let model_path = dir.join(MODEL_FILE);
    save_checkpoint(&model_path, &outcome.model.params, None)?;
    write_text(&dir.join(CLASSES_FILE), &class_lines(&outcome.model.class_list))?;
    let pre = serde_json::to_string_pretty(&aug).expect("config serializes");
    write_text(&dir.join(PREPROCESS_FILE), &(pre + "\n"))?;
    let mut hist = String::from("epoch,loss,train_accuracy,val_accuracy\n");
    for (k, h) in outcome.history.iter().enumerate() {
        hist.push_str(&format!("{k},{:.9},{:.6},{:.6}\n", h.loss, h.train_accuracy, h.val_accuracy));
    }
    write_text(&dir.join(HISTORY_FILE), &hist)?;
    let last = outcome.history.last().copied();
    emit(
        &a.common,
        json!({"command": "train", "epochs": outcome.history.len(), "best_epoch": outcome.best_epoch,
               "restarts": outcome.restarts, "final": last, "model": model_path}),
        || {
            format!(
                "trained {} epochs (best {}), checkpoint {}",
                outcome.history.len(),
                outcome.best_epoch,
                model_path.display()
            )
        },
    );
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn class_lines(classes: &[CharacterLabel]) -> String {
    classes.iter().map(|c| format!("{c}\n")).collect()
}

fn load_model(dir: &Path) -> Result<(TrainedModel, AugmentConfig), Failure> {
    let (params, _) = load_checkpoint(&dir.join(MODEL_FILE), None)?;
    let classes_path = dir.join(CLASSES_FILE);
    let text = fs::read_to_string(&classes_path).with_context(|| format!("reading {}", classes_path.display()))?;
    let class_list = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<CharacterLabel>())
        .collect::<strokesense::Result<Vec<_>>>()?;
    let pre_path = dir.join(PREPROCESS_FILE);
    let aug = match fs::read_to_string(&pre_path) {
        Ok(t) => serde_json::from_str(&t).with_context(|| format!("parsing {}", pre_path.display()))?,
        Err(_) => AugmentConfig::none(),
    };
    Ok((TrainedModel { params, class_list }, aug))
}

fn report_json(r: &EvalReport) -> serde_json::Value {
    json!({
        "accuracy": r.accuracy,
        "n_test": r.n_test,
        "per_class_accuracy": r.per_class_accuracy,
        "confusion": r.confusion,
        "classes": r.class_list.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "protocol": r.protocol.as_ref().map(|p| p.protocol.to_string()),
        "epochs": r.train_history.len(),
    })
}

fn write_report(dir: Option<&PathBuf>, r: &EvalReport) -> Result<(), Failure> {
    if let Some(d) = dir {
        let d = data_path(d);
        fs::create_dir_all(&d).map_err(|e| io_err(&d, e))?;
        write_confusion_csv(r, &d.join("confusion.csv"))?;
        let text = serde_json::to_string_pretty(&report_json(r)).expect("report serializes");
        write_text(&d.join("report.json"), &(text + "\n"))?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: PathBuf,
    /// Directory written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Directory for `confusion.csv` and `report.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn eval(a: EvalArgs) -> CmdResult {
    load_config(&a.common)?;
    let ds = load_data(&a.data)?;
    let (model, aug) = load_model(&data_path(&a.model))?;
    let view = evaluation_view(&ds, &aug)?;
    let r = evaluate(&model, &view)?;
    write_report(a.out.as_ref(), &r)?;
    emit(&a.common, report_json(&r), || format!("accuracy {:.4} on {} items", r.accuracy, r.n_test));
    Ok(())
}

#[derive(Args, Debug)]
pub struct ProtocolArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: PathBuf,
    /// pooled, writer-disjoint or mixed (default from config).
    #[arg(long)]
    pub protocol: Option<String>,
    /// Number of known writers (first in sorted order).
    #[arg(long)]
    pub train_writers: Option<usize>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn protocol(a: ProtocolArgs) -> CmdResult {
    let (mut cfg, seed) = load_config(&a.common)?;
    if let Some(p) = &a.protocol {
        cfg.split.protocol = p.parse::<Protocol>().map_err(|e| usage(e.to_string()))?;
    }
    if let Some(n) = a.train_writers {
        cfg.split.train_writers = n;
    }
    if let Some(f) = a.test_fraction {
        cfg.split.test_fraction = f;
    }
    cfg.validate()?;
    let ds = load_data(&a.data)?;
    let spec = SplitSpec::for_writers(
        cfg.split.protocol,
        &ds.writers(),
        cfg.split.train_writers,
        cfg.split.test_fraction,
        rng::derive_seed_str(seed, "split"),
    )?;
    let r = run_protocol(&ds, &spec, &cfg.settings(), seed)?;
    write_report(a.out.as_ref(), &r)?;
    emit(&a.common, report_json(&r), || format!("{}: accuracy {:.4} on {} items", spec.protocol, r.accuracy, r.n_test));
    Ok(())
}

fn sweep_json(name: &str, points: &[SweepPoint]) -> serde_json::Value {
    json!({"command": name, "points": points})
}

fn sweep_text(points: &[SweepPoint]) -> String {
    points
        .iter()
        .map(|p| format!("{}\t{:.4} ± {:.4} (n={})", p.x, p.mean_accuracy, p.std_accuracy, p.n_repeats))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Args, Debug)]
pub struct SweepClassesArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub samples_per_class: usize,
    /// Comma-separated class counts.
    #[arg(long, value_delimiter = ',', required = true)]
    pub counts: Vec<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// CSV output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn sweep_classes(a: SweepClassesArgs) -> CmdResult {
    let (mut cfg, seed) = load_config(&a.common)?;
    if let Some(r) = a.repeats {
        cfg.sweep.repeats = r;
    }
    cfg.validate()?;
    let ds = load_data(&a.data)?;
    let pts = run_sweep_classes(&ds, a.samples_per_class, &a.counts, &cfg.sweep, &cfg.settings(), seed)?;
    if let Some(o) = &a.out {
        write_sweep_csv(&pts, &data_path(o))?;
    }
    emit(&a.common, sweep_json("sweep-classes", &pts), || sweep_text(&pts));
    Ok(())
}

#[derive(Args, Debug)]
pub struct SweepSizeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated per-class training sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn sweep_size(a: SweepSizeArgs) -> CmdResult {
    let (mut cfg, seed) = load_config(&a.common)?;
    if let Some(r) = a.repeats {
        cfg.sweep.repeats = r;
    }
    cfg.validate()?;
    let ds = load_data(&a.data)?;
    let pts = sweep_train_size(&ds, &a.sizes, &cfg.sweep, &cfg.settings(), seed)?;
    if let Some(o) = &a.out {
        write_sweep_csv(&pts, &data_path(o))?;
    }
    emit(&a.common, sweep_json("sweep-size", &pts), || sweep_text(&pts));
    Ok(())
}

#[derive(Args, Debug)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Dictionary, one word per line.
    #[arg(long)]
    pub dict: PathBuf,
    /// Recognized words separated by whitespace; `-` reads standard input.
    #[arg(long, default_value = "-")]
    pub input: PathBuf,
    /// Reference words, for word accuracy.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_EDIT)]
    pub max_edit: usize,
}

fn read_words(p: &Path) -> Result<Vec<String>, Failure> {
    let mut text = String::new();
    if p == Path::new("-") {
        std::io::stdin().read_to_string(&mut text).context("reading standard input")?;
    } else {
        let p = data_path(p);
        text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
    }
    Ok(text.split_whitespace().map(str::to_lowercase).collect())
}

pub fn decode(a: DecodeArgs) -> CmdResult {
    load_config(&a.common)?;
    let dict = Dictionary::load(&data_path(&a.dict), a.max_edit)?;
    let words = read_words(&a.input)?;
    let corrected: Vec<(String, i64)> = words.iter().map(|w| correct_word(w, &dict)).collect();
    let out: Vec<&str> = corrected.iter().map(|(w, _)| w.as_str()).collect();
    let accuracy = match &a.truth {
        Some(t) => {
            let truth = read_words(t)?;
            Some((word_accuracy(&words, &truth)?, word_accuracy(&out, &truth)?))
        }
        None => None,
    };
    let summary = json!({
        "command": "decode",
        "words": out,
        "distances": corrected.iter().map(|(_, d)| *d).collect::<Vec<_>>(),
        "raw_word_accuracy": accuracy.map(|a| a.0),
        "word_accuracy": accuracy.map(|a| a.1),
    });
    if a.common.json {
        println!("{summary}");
    } else {
        let mut stdout = std::io::stdout().lock();
        writeln!(stdout, "{}", out.join(" ")).context("writing output")?;
        if let Some((raw, fixed)) = accuracy {
            eprintln!("word accuracy {raw:.4} → {fixed:.4}");
        }
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 12)]
    pub steps: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub h: f64,
    /// all, lstm or dense.
    #[arg(long, default_value = "all")]
    pub group: String,
    #[arg(long)]
    pub hard_sigmoid_everywhere: bool,
    #[arg(long)]
    pub extra_dense: bool,
}

pub fn gradcheck(a: GradcheckArgs) -> CmdResult {
    let (_, seed) = load_config(&a.common)?;
    let group = match a.group.as_str() {
        "all" => ParamGroup::All,
        "lstm" => ParamGroup::Lstm,
        "dense" => ParamGroup::Dense,
        other => return Err(usage(format!("unknown parameter group {other:?}"))),
    };
    if a.classes < 2 || a.steps == 0 || !(a.h > 0.0) {
        return Err(usage("need --classes >= 2, --steps >= 1 and --h > 0"));
    }
    let shape = ModelShape {
        dense_layers: if a.extra_dense { 2 } else { 1 },
        hard_sigmoid_everywhere: a.hard_sigmoid_everywhere,
        ..ModelShape::paper(a.classes)
    };
    let p = init_params(&shape, seed);
    let mut r = rng::stream(rng::derive_seed_str(seed, "input"));
    let x: Vec<f64> = (0..a.steps * shape.input_dim).map(|_| rng::uniform(&mut r, -1.0, 1.0)).collect();
    let sample = TrainSample { id: "gradcheck".into(), x, steps: a.steps, target: (seed % a.classes as u64) as usize };
    let rep = grad_check_coords(&p, &sample, a.h, group)?;
    emit(
        &a.common,
        json!({"command": "gradcheck", "max_rel_error": rep.max_rel_error, "worst_index": rep.worst_index,
               "checked": rep.checked, "skipped": rep.skipped}),
        || {
            format!(
                "max relative error {:.3e} over {} parameters ({} skipped at kinks)",
                rep.max_rel_error, rep.checked, rep.skipped
            )
        },
    );
    Ok(())
}
