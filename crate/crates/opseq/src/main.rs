use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use opseq::error::{Error, Result};
use opseq::features::{train_embeddings, train_hmms};
use opseq::harness::{grid_search, robustness_presets, robustness_study, Corpus, ExperimentConfig, GridSpec};
use opseq::io::{self, EmbeddingFile, FeatureRow, ModelFile};
use opseq::report::{emit, ClassifyReport, Format, PartitionSizes, Timing};
use opseq::synth::{write_synthetic_corpus, SynthSpec};
use opseq_core::classify::{knn_operating_k, ClassifierParams, Dataset, TrainedClassifier};
use opseq_core::corpus::{build_vocabulary, parse_disassembly, scramble, ParseOptions, RawListing, Vocabulary};
use opseq_core::embed::{word2vec_features, Word2VecParams};
use opseq_core::eval::ConfusionMatrix;
use opseq_core::hmm::{hmm2vec, BaumWelchConfig, RestartPolicy, StateOrdering};

#[derive(Parser)]
#[command(name = "opseq", version, about = "Opcode-sequence malware classification")]
struct Cli {
    /// Worker threads for per-sample training (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log verbosity: -v info, -vv debug.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
    Text,
}

#[derive(Args)]
struct Output {
    /// Report file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format; inferred from the --out extension by default.
    #[arg(long, value_enum)]
    format: Option<OutFormat>,
}

impl Output {
    fn format(&self) -> Format {
        match self.format {
            Some(OutFormat::Json) => Format::Json,
            Some(OutFormat::Csv) => Format::Csv,
            Some(OutFormat::Text) => Format::Text,
            None => self.out.as_deref().map(Format::from_path).unwrap_or(Format::Text),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Knn,
    Svm,
    Rf,
    Nn,
}

#[derive(Subcommand)]
enum Command {
    /// Parse disassembly listings into opcode files plus a manifest.
    Extract {
        #[arg(required = true)]
        listings: Vec<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Family label for every listing.
        #[arg(long, default_value = "unlabeled")]
        family: String,
        /// Tolerated fraction of instruction lines without a mnemonic.
        #[arg(long, default_value_t = 0.0)]
        max_malformed: f64,
    },
    /// Build the top-M opcode vocabulary of a corpus.
    Vocab {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(short = 'M', default_value_t = 31)]
        m: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shuffle one contiguous block of an opcode file.
    Scramble {
        /// Opcode file; stdin when omitted.
        input: Option<PathBuf>,
        #[arg(long)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one HMM per sample (best of several restarts).
    HmmTrain {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(short = 'N', default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fixed restart count instead of the length-based policy.
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long, default_value_t = BaumWelchConfig::default().max_iters)]
        max_iters: usize,
        #[arg(long, default_value_t = BaumWelchConfig::default().tol)]
        tol: f64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Flatten trained HMMs into HMM2Vec feature vectors.
    Hmm2vec {
        #[arg(long)]
        models: PathBuf,
        /// Accept models with more than two hidden states.
        #[arg(long)]
        any_n: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one Word2Vec embedding per sample.
    W2vTrain {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(short = 'N', default_value_t = 31)]
        n: usize,
        #[arg(short = 'W', default_value_t = 1)]
        w: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = Word2VecParams::default().epochs)]
        epochs: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Concatenate per-sample embeddings into feature vectors.
    W2vFeatures {
        #[arg(long)]
        emb: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier on one feature CSV and score another.
    Classify {
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Validation features (neural network curves only).
        #[arg(long)]
        validation: Option<PathBuf>,
        /// JSON object of classifier parameters.
        #[arg(long)]
        params: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Run one experiment config end to end.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Run a parameter grid or preset on one shared split.
    Grid {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Accuracy versus scramble fraction.
    Robustness {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4")]
        fractions: Vec<f64>,
        /// JSON list of classifier parameters; the built-in presets otherwise.
        #[arg(long)]
        classifiers: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Generate a synthetic labeled corpus.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn file_stem(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .ok_or_else(|| Error::format(path, "file name is not valid UTF-8"))
}

fn extract(listings: &[PathBuf], out_dir: &Path, family: &str, max_malformed: f64) -> Result<()> {
    let options = ParseOptions {
        max_malformed_fraction: max_malformed,
    };
    let mut seqs = Vec::with_capacity(listings.len());
    for path in listings {
        let listing = RawListing {
            sample_id: file_stem(path)?,
            family: family.to_string(),
            text: io::read_text(path)?,
        };
        let seq = parse_disassembly(&listing, &options).map_err(|e| Error::format(path, e))?;
        seqs.push(seq);
    }
    io::write_corpus(out_dir, &[family.to_string()], &seqs)?;
    Ok(())
}

fn scramble_file(input: Option<&Path>, fraction: f64, seed: u64, out: Option<&Path>) -> Result<()> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Config(format!("fraction {fraction} not in [0, 1]")));
    }
    let (kind, tokens) = match input {
        Some(p) => io::read_opcode_file(p)?,
        None => {
            let text = std::io::read_to_string(std::io::stdin()).map_err(|e| Error::io("<stdin>", e))?;
            io::parse_opcode_text(&text, Path::new("<stdin>"))?
        }
    };
    emit(out, &io::render_opcode_text(&scramble(&tokens, fraction, seed), kind))
}

fn load_filtered(manifest: &Path, vocab: &Vocabulary) -> Result<Vec<opseq_core::corpus::OpcodeSequence>> {
    let corpus = Corpus::load(manifest)?;
    let mut out = Vec::with_capacity(corpus.sequences.len());
    for seq in &corpus.sequences {
        match opseq_core::corpus::filter_sequence(seq, vocab) {
            Ok(f) if f.len() >= opseq_core::corpus::MIN_ADMITTED_LEN => out.push(f),
            Ok(_) | Err(opseq_core::Error::EmptyAfterFilter { .. }) => {
                warn!("skipping {}: too few opcodes after filtering", seq.sample_id)
            }
            Err(e) => {
                return Err(Error::Stage {
                    stage: "filter",
                    sample: Some(seq.sample_id.clone()),
                    source: e,
                })
            }
        }
    }
    Ok(out)
}

fn models_to_features(dir: &Path, any_n: bool, out: &Path) -> Result<()> {
    let ordering = if any_n {
        StateOrdering::AnyN
    } else {
        StateOrdering::TwoState
    };
    let files: Vec<ModelFile> = io::read_json_dir(dir)?;
    let mut rows = Vec::with_capacity(files.len());
    for f in &files {
        let stage = |e| Error::Stage {
            stage: "hmm2vec",
            sample: Some(f.sample_id.clone()),
            source: e,
        };
        let model = f.model().map_err(stage)?;
        // Only the alphabet size matters for vectorizing.
        let vocab =
            Vocabulary::from_ranked((0..f.m).map(|i| i.to_string()).collect(), vec![0.0; f.m]).map_err(stage)?;
        let fv = hmm2vec(&model, &vocab, ordering, f.sample_id.clone(), f.family.clone()).map_err(stage)?;
        rows.push(FeatureRow::from(&fv));
    }
    io::write_features_csv(out, &rows)
}

fn embeddings_to_features(dir: &Path, out: &Path) -> Result<()> {
    let files: Vec<EmbeddingFile> = io::read_json_dir(dir)?;
    let mut rows = Vec::with_capacity(files.len());
    for f in &files {
        let stage = |e| Error::Stage {
            stage: "w2v-features",
            sample: Some(f.sample_id.clone()),
            source: e,
        };
        let emb = f.embedding().map_err(stage)?;
        let vocab =
            Vocabulary::from_ranked((0..f.m).map(|i| i.to_string()).collect(), vec![0.0; f.m]).map_err(stage)?;
        rows.push(FeatureRow::from(
            &word2vec_features(&emb, &vocab, f.sample_id.clone(), f.family.clone()).map_err(stage)?,
        ));
    }
    io::write_features_csv(out, &rows)
}

fn to_dataset(rows: &[FeatureRow], families: &[String], path: &Path) -> Result<Dataset> {
    let labels = rows
        .iter()
        .map(|r| {
            families
                .iter()
                .position(|f| *f == r.family)
                .expect("families collected from rows")
        })
        .collect();
    let values: Vec<Vec<f64>> = rows.iter().map(|r| r.values.clone()).collect();
    Dataset::new(&values, labels, families.len()).map_err(|e| Error::format(path, e))
}

fn classifier_params(algo: Algo, params: Option<&Path>, train_size: usize) -> Result<ClassifierParams> {
    let name = match algo {
        Algo::Knn => "knn",
        Algo::Svm => "svm",
        Algo::Rf => "rf",
        Algo::Nn => "nn",
    };
    let mut value = match params {
        Some(p) => io::read_json::<serde_json::Value>(p)?,
        None => serde_json::json!({}),
    };
    let object = value
        .as_object_mut()
        .ok_or_else(|| Error::Config("classifier parameters must be a JSON object".into()))?;
    object.insert("algo".into(), name.into());
    if matches!(algo, Algo::Knn) && !object.contains_key("k") {
        object.insert("k".into(), knn_operating_k(train_size).into());
    }
    serde_json::from_value(value).map_err(|e| Error::Config(format!("classifier parameters: {e}")))
}

fn classify(
    algo: Algo,
    train_path: &Path,
    test_path: &Path,
    validation_path: Option<&Path>,
    params: Option<&Path>,
    output: &Output,
) -> Result<()> {
    let total = Instant::now();
    let train_rows = io::read_features_csv(train_path)?;
    let test_rows = io::read_features_csv(test_path)?;
    let val_rows = validation_path.map(io::read_features_csv).transpose()?;
    let mut families: Vec<String> = train_rows
        .iter()
        .chain(&test_rows)
        .chain(val_rows.iter().flatten())
        .map(|r| r.family.clone())
        .collect();
    families.sort();
    families.dedup();
    let train = to_dataset(&train_rows, &families, train_path)?;
    let test = to_dataset(&test_rows, &families, test_path)?;
    let validation = match (&val_rows, validation_path) {
        (Some(rows), Some(p)) => Some(to_dataset(rows, &families, p)?),
        _ => None,
    };
    let classifier = classifier_params(algo, params, train.len())?;

    let started = Instant::now();
    let model = TrainedClassifier::train(&classifier, &train, validation.as_ref()).map_err(|e| Error::Stage {
        stage: "train",
        sample: None,
        source: e,
    })?;
    let train_secs = started.elapsed().as_secs_f64();
    let started = Instant::now();
    let mut confusion = ConfusionMatrix::new(families.len());
    for i in 0..test.len() {
        let predicted = model.predict(test.row(i)).map_err(|e| Error::Stage {
            stage: "predict",
            sample: Some(test_rows[i].sample_id.clone()),
            source: e,
        })?;
        confusion.record(test.label(i), predicted);
    }
    let report = ClassifyReport {
        classifier,
        feature_dim: train.dim(),
        partitions: PartitionSizes {
            train: train.len(),
            validation: validation.as_ref().map_or(0, Dataset::len),
            test: test.len(),
        },
        accuracy: confusion.accuracy(),
        per_class_accuracy: confusion.per_class_accuracy(),
        confusion,
        curves: match &model {
            TrainedClassifier::Nn(net) => Some(net.curves.clone()),
            _ => None,
        },
        families,
        timing: Timing {
            train_secs,
            evaluate_secs: started.elapsed().as_secs_f64(),
            total_secs: total.elapsed().as_secs_f64(),
            ..Timing::default()
        },
    };
    emit(output.out.as_deref(), &report.render(output.format()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Extract {
            listings,
            out_dir,
            family,
            max_malformed,
        } => extract(&listings, &out_dir, &family, max_malformed),
        Command::Vocab { manifest, m, out } => {
            let corpus = Corpus::load(&manifest)?;
            let vocab = build_vocabulary(&corpus.sequences, m).map_err(|e| Error::Stage {
                stage: "vocabulary",
                sample: None,
                source: e,
            })?;
            io::write_vocab(&out, &vocab)
        }
        Command::Scramble {
            input,
            fraction,
            seed,
            out,
        } => scramble_file(input.as_deref(), fraction, seed, out.as_deref()),
        Command::HmmTrain {
            manifest,
            vocab,
            n,
            seed,
            restarts,
            max_iters,
            tol,
            out_dir,
        } => {
            let vocab = io::read_vocab(&vocab)?;
            let seqs = load_filtered(&manifest, &vocab)?;
            let policy = restarts.map_or_else(RestartPolicy::default, RestartPolicy::fixed);
            let config = BaumWelchConfig {
                max_iters,
                tol,
                ..BaumWelchConfig::default()
            };
            let models = train_hmms(&seqs, &vocab, n, &policy, &config, seed)?;
            for (seq, (model, s)) in seqs.iter().zip(&models) {
                let file = ModelFile::new(&seq.sample_id, &seq.family, model, *s);
                io::write_json(&out_dir.join(format!("{}.json", seq.sample_id)), &file)?;
            }
            Ok(())
        }
        Command::Hmm2vec { models, any_n, out } => models_to_features(&models, any_n, &out),
        Command::W2vTrain {
            manifest,
            vocab,
            n,
            w,
            seed,
            epochs,
            out_dir,
        } => {
            let vocab = io::read_vocab(&vocab)?;
            let seqs = load_filtered(&manifest, &vocab)?;
            let params = Word2VecParams {
                epochs,
                ..Word2VecParams::default()
            };
            let embeddings = train_embeddings(&seqs, &vocab, n, w, &params, seed)?;
            for (seq, emb) in seqs.iter().zip(&embeddings) {
                let file = EmbeddingFile::new(&seq.sample_id, &seq.family, emb);
                io::write_json(&out_dir.join(format!("{}.json", seq.sample_id)), &file)?;
            }
            Ok(())
        }
        Command::W2vFeatures { emb, out } => embeddings_to_features(&emb, &out),
        Command::Classify {
            algo,
            train,
            test,
            validation,
            params,
            output,
        } => classify(algo, &train, &test, validation.as_deref(), params.as_deref(), &output),
        Command::Experiment { config, output } => {
            let config = ExperimentConfig::load(&config)?;
            let report = opseq::harness::run_experiment(&config)?;
            emit(output.out.as_deref(), &report.render(output.format()))
        }
        Command::Grid { config, grid, output } => {
            let config = ExperimentConfig::load(&config)?;
            let spec: GridSpec = io::read_json(&grid)?;
            let report = grid_search(&config, &spec)?;
            emit(output.out.as_deref(), &report.render(output.format()))
        }
        Command::Robustness {
            config,
            fractions,
            classifiers,
            output,
        } => {
            let config = ExperimentConfig::load(&config)?;
            let classifiers = match classifiers {
                Some(p) => io::read_json(&p)?,
                None => {
                    let corpus = Corpus::load(&config.manifest)?;
                    let train = opseq::harness::split_corpus(&corpus, &config.split, config.seed)?[0].len();
                    robustness_presets(train)
                }
            };
            let report = robustness_study(&config, &fractions, &classifiers)?;
            emit(output.out.as_deref(), &report.render(output.format()))
        }
        Command::Synth { spec, out_dir } => {
            let spec: SynthSpec = io::read_json(&spec)?;
            write_synthetic_corpus(&spec, &out_dir)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
