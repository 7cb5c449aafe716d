use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use textovision::io::{self as tio, load_features, load_pairs, load_sentences};
use textovision::metrics::evaluate as score;
use textovision::neuralnet::{train as fit, StopCriterion};
use textovision::pipeline::{build_vectorizer, pair_sentences, Pairing};
use textovision::retrieval::{rank_all_with, Similarity};
use textovision::textvec::WordEmbeddingTable;
use textovision::videofeat::{concat_visual_audio, group_frames, mean_pool, AudioFeature};
use textovision::{Error, GroundTruth, Metric, Model, NetworkConfig, OptimizerConfig, VectorizerKind, VisualFeature};

use crate::{
    BuildVocabArgs, EncodeArgs, EvaluateArgs, PoolArgs, RankArgs, SimilarityArg, StopArg, TrainArgs, VectorizerArg,
};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or unreadable inputs; exit code 1.
    Usage(String),
    /// Malformed or inconsistent data; exit code 2.
    Data(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Data(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => CliError::Usage(m),
            other => CliError::Data(other),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn require(path: &Path, flag: &str) -> CliResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{flag}: no such file {}", path.display())))
    }
}

fn kind_of(arg: VectorizerArg) -> VectorizerKind {
    match arg {
        VectorizerArg::Bow => VectorizerKind::Bow,
        VectorizerArg::Hashing => VectorizerKind::Hashing,
        VectorizerArg::Word2vec => VectorizerKind::Word2Vec,
    }
}

/// Input dimension, hidden sizes, output dimension.
pub fn network_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(hidden.len() + 2);
    sizes.push(input);
    sizes.extend_from_slice(hidden);
    sizes.push(output);
    sizes
}

pub fn format_sizes(sizes: &[usize]) -> String {
    sizes.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
}

pub fn build_vocab(args: &BuildVocabArgs) -> CliResult {
    require(&args.sentences, "--sentences")?;
    let sentences = load_sentences(&args.sentences)?;
    let kind = kind_of(args.vectorizer);
    if kind == VectorizerKind::Word2Vec {
        return Err(CliError::Usage("build-vocab supports bow and hashing only".into()));
    }
    let vectorizer = build_vectorizer(kind, &sentences, None)?;
    let entries = match &vectorizer {
        textovision::Vectorizer::Bow(v) => v.words(),
        textovision::Vectorizer::Hashing(t) => t.trigrams(),
        textovision::Vectorizer::Word2Vec(_) => unreachable!("rejected above"),
    };
    tio::write_entries(tio::create(&args.out)?, entries)?;
    println!("{}", entries.len());
    Ok(())
}

pub fn train(args: &TrainArgs) -> CliResult {
    require(&args.sentences, "--sentences")?;
    require(&args.features, "--features")?;
    require(&args.val_sentences, "--val-sentences")?;
    require(&args.val_features, "--val-features")?;
    let kind = kind_of(args.vectorizer);
    let embeddings = match (&args.embeddings, kind) {
        (Some(path), VectorizerKind::Word2Vec) => {
            require(path, "--embeddings")?;
            Some(WordEmbeddingTable::load(tio::open(path)?, &path.display().to_string())?)
        }
        (None, VectorizerKind::Word2Vec) => {
            return Err(CliError::Usage("--vectorizer word2vec requires --embeddings".into()))
        }
        (Some(_), _) => return Err(CliError::Usage("--embeddings only applies to word2vec".into())),
        (None, _) => None,
    };
    let pairing = match &args.pairs {
        Some(path) => {
            require(path, "--pairs")?;
            Pairing::from_pairs(load_pairs(path)?)?
        }
        None => Pairing::Prefix,
    };

    let sentences = load_sentences(&args.sentences)?;
    let features = load_features(&args.features)?;
    let val_sentences = load_sentences(&args.val_sentences)?;
    let val_features = load_features(&args.val_features)?;

    let vectorizer = build_vectorizer(kind, &sentences, embeddings)?;
    let train_set = pair_sentences(&sentences, &features, &pairing, &vectorizer)?;
    let val_set = pair_sentences(&val_sentences, &val_features, &pairing, &vectorizer)?;
    for id in train_set.skipped.iter().chain(&val_set.skipped) {
        eprintln!("warning: skipped {id}: no known tokens");
    }
    let output_dim = features
        .first()
        .map(VisualFeature::dim)
        .ok_or_else(|| CliError::Data(Error::Empty("training feature file has no rows".into())))?;

    let sizes = network_sizes(vectorizer.dim(), &args.layers, output_dim);
    let net = NetworkConfig::with_dropout(sizes.clone(), args.dropout)?;
    let opt = OptimizerConfig {
        learning_rate: args.lr,
        decay: args.gamma,
        epsilon: args.epsilon,
        batch_size: args.batch_size,
        max_epochs: args.max_epochs,
        patience: args.patience,
        seed: args.seed,
        stop_on: match args.stop_on {
            StopArg::ValLoss => StopCriterion::ValLoss,
            StopArg::ValR1 => StopCriterion::ValRecallAt1,
        },
    };
    println!(
        "network {} ({} vectorizer, {} training / {} validation pairs)",
        format_sizes(&sizes),
        vectorizer.kind(),
        train_set.pairs.len(),
        val_set.pairs.len()
    );
    let outcome = fit(&train_set.pairs, &val_set.pairs, &net, &opt)?;
    let best = outcome.best_stats();

    let model = Model::new(vectorizer, outcome.params.clone())?;
    model.save(&args.out)?;
    let history = args.history.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".history.tsv");
        PathBuf::from(p)
    });
    tio::write_history(tio::create(&history)?, &outcome.history)?;

    println!(
        "epochs {} best {} val_loss {:.6} (initial {:.6}){}",
        outcome.history.len(),
        outcome.best_epoch,
        best.val_loss,
        outcome.initial_val_loss,
        if outcome.stopped_early { " stopped early" } else { "" }
    );
    Ok(())
}

pub fn encode(args: &EncodeArgs) -> CliResult {
    require(&args.model, "--model")?;
    require(&args.sentences, "--sentences")?;
    let model = Model::load(&args.model)?;
    let sentences = load_sentences(&args.sentences)?;
    let mut rows = Vec::with_capacity(sentences.len());
    let mut skipped = 0usize;
    for s in &sentences {
        match model.encode(s) {
            Ok(values) => {
                if values.iter().all(|&v| v == 0.0) {
                    eprintln!(
                        "warning: {} encodes to the zero vector and cannot be ranked by cosine",
                        s.id
                    );
                }
                rows.push(VisualFeature::new(s.id.clone(), values));
            }
            Err(Error::Unencodable(id)) => {
                eprintln!("warning: skipped {id}: no known tokens");
                skipped += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
    if rows.is_empty() {
        return Err(CliError::Data(Error::Empty("no sentence could be encoded".into())));
    }
    tio::save_features(&args.out, &rows)?;
    println!("encoded {} sentences, skipped {skipped}", rows.len());
    Ok(())
}

pub fn rank(args: &RankArgs) -> CliResult {
    require(&args.queries, "--queries")?;
    require(&args.items, "--items")?;
    if args.top == Some(0) {
        return Err(CliError::Usage("--top must be positive".into()));
    }
    let queries = load_features(&args.queries)?;
    let items = load_features(&args.items)?;
    let similarity = match args.similarity {
        SimilarityArg::Cosine => Similarity::Cosine,
        SimilarityArg::Dot => Similarity::Dot,
    };
    let rankings = rank_all_with(&queries, &items, similarity)?;
    tio::write_rankings(tio::create(&args.out)?, &rankings, args.top)?;
    println!("ranked {} items for {} queries", items.len(), queries.len());
    Ok(())
}

pub fn pool(args: &PoolArgs) -> CliResult {
    require(&args.features, "--features")?;
    let sets = group_frames(load_features(&args.features)?)?;
    let mut pooled: Vec<VisualFeature> = sets.iter().map(mean_pool).collect::<Result<_, _>>()?;
    if let Some(path) = &args.audio {
        require(path, "--audio")?;
        let audio: HashMap<String, Vec<f64>> = load_features(path)?.into_iter().map(|f| (f.id, f.values)).collect();
        pooled = pooled
            .iter()
            .map(|v| {
                let values = audio
                    .get(&v.id)
                    .ok_or_else(|| Error::Missing(format!("video {:?} has no audio feature", v.id)))?;
                concat_visual_audio(
                    v,
                    &AudioFeature {
                        video_id: v.id.clone(),
                        values: values.clone(),
                    },
                )
            })
            .collect::<Result<_, _>>()?;
    }
    tio::save_features(&args.out, &pooled)?;
    println!(
        "pooled {} videos, dim {}",
        pooled.len(),
        pooled.first().map_or(0, VisualFeature::dim)
    );
    Ok(())
}

pub fn parse_metrics(names: &[String]) -> CliResult<Vec<Metric>> {
    let metrics = names
        .iter()
        .filter(|n| !n.trim().is_empty())
        .map(|n| n.parse::<Metric>().map_err(|e| CliError::Usage(e.to_string())))
        .collect::<CliResult<Vec<_>>>()?;
    if metrics.is_empty() {
        return Err(CliError::Usage("--metrics is empty".into()));
    }
    Ok(metrics)
}

pub fn evaluate(args: &EvaluateArgs) -> CliResult {
    require(&args.rankings, "--rankings")?;
    let metrics = parse_metrics(&args.metrics)?;
    let rankings = tio::load_rankings(&args.rankings)?;
    let truth = match &args.pairs {
        Some(path) => {
            require(path, "--pairs")?;
            GroundTruth::from_pairs(load_pairs(path)?)?
        }
        None => GroundTruth::from_prefix_rule(&rankings),
    };
    let ks: Vec<usize> = metrics
        .iter()
        .filter_map(|m| match m {
            Metric::RecallAt(k) => Some(*k),
            _ => None,
        })
        .collect();
    let report = score(&rankings, &truth, &ks)?;
    let values: Vec<(Metric, f64)> = metrics
        .iter()
        .map(|&m| (m, report.value(m).expect("every requested metric is computed")))
        .collect();

    let line = values
        .iter()
        .map(|(m, v)| format!("{m}={v:.6}"))
        .collect::<Vec<_>>()
        .join("\t");
    if let Some(out) = &args.out {
        let mut w = tio::create(out)?;
        writeln!(w, "{line}").map_err(Error::from)?;
        w.flush().map_err(Error::from)?;
    }
    println!("{line}");
    println!("{:<8} {:>12}", "metric", "value");
    for (m, v) in &values {
        println!("{:<8} {:>12.4}", m.to_string(), v);
    }
    println!("{:<8} {:>12}", "queries", report.num_queries);
    Ok(())
}
