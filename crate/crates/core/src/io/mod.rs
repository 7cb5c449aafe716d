//! Text formats for sentences, feature vectors, rankings and relevance
//! pairs, plus the binary model file.
//!
//! | file        | line format                                        |
//! |-------------|----------------------------------------------------|
//! | sentences   | `<sentence_id>\t<text>`                            |
//! | features    | header `<count> <dim>`, then `<item_id> v1 … v_dim` |
//! | entries     | one vocabulary word or trigram per line             |
//! | rankings    | `<query_id>\t<item_id>\t<rank>\t<score>`            |
//! | pairs       | `<query_or_sentence_id>\t<item_id>`                 |
//! | history     | `epoch\ttrain_loss\tval_loss`                       |

mod model;

pub use model::{Model, MODEL_MAGIC, MODEL_VERSION};

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::neuralnet::EpochStats;
use crate::retrieval::{Ranking, VisualFeature};
use crate::textvec::Sentence;

/// The item an id refers to: the prefix before the last `#`, or the id
/// itself when it has none. `img7#3` → `img7`.
pub fn item_key(id: &str) -> &str {
    id.rsplit_once('#').map_or(id, |(prefix, _)| prefix)
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn name_of(path: &Path) -> String {
    path.display().to_string()
}

/// Writes a float so that parsing it back yields the same bits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn read_sentences<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<Sentence>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let (id, text) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(source_name, lineno, "expected <id>\\t<text>"))?;
        if text.contains('\t') {
            return Err(Error::parse(source_name, lineno, "text field contains a tab"));
        }
        let sentence = Sentence::new(id, text).map_err(|e| Error::parse(source_name, lineno, e.to_string()))?;
        if !seen.insert(sentence.id.clone()) {
            return Err(Error::parse(source_name, lineno, format!("duplicate id {id:?}")));
        }
        out.push(sentence);
    }
    Ok(out)
}

pub fn load_sentences(path: &Path) -> Result<Vec<Sentence>> {
    read_sentences(open(path)?, &name_of(path))
}

pub fn write_sentences<W: Write>(mut w: W, sentences: &[Sentence]) -> Result<()> {
    for s in sentences {
        writeln!(w, "{}\t{}", s.id, s.text)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_features<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<VisualFeature>> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::parse(source_name, 1, "missing header"))?;
    let mut parts = header.split_whitespace();
    let (count, dim) = match (
        parts.next().and_then(|p| p.parse::<usize>().ok()),
        parts.next().and_then(|p| p.parse::<usize>().ok()),
        parts.next(),
    ) {
        (Some(c), Some(d), None) => (c, d),
        _ => return Err(Error::parse(source_name, 1, "expected header \"<count> <dim>\"")),
    };
    let mut out = Vec::with_capacity(count);
    let mut seen = HashSet::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(' ').filter(|f| !f.is_empty());
        let id = fields.next().unwrap().to_string();
        let values = fields
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(source_name, lineno, format!("bad value: {e}")))?;
        if values.len() != dim {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("{id:?} has {} values, header declares {dim}", values.len()),
            ));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::parse(source_name, lineno, format!("non-finite value {bad}")));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::parse(source_name, lineno, format!("duplicate id {id:?}")));
        }
        out.push(VisualFeature::new(id, values));
    }
    if out.len() != count {
        return Err(Error::parse(
            source_name,
            1,
            format!("header declares {count} rows, found {}", out.len()),
        ));
    }
    Ok(out)
}

pub fn load_features(path: &Path) -> Result<Vec<VisualFeature>> {
    read_features(open(path)?, &name_of(path))
}

/// Writes a feature file. All rows must share one dimension.
pub fn write_features<W: Write>(mut w: W, rows: &[VisualFeature]) -> Result<()> {
    let dim = rows.first().map_or(0, VisualFeature::dim);
    if let Some(bad) = rows.iter().find(|r| r.dim() != dim) {
        return Err(Error::dims(format!("feature row {:?}", bad.id), dim, bad.dim()));
    }
    writeln!(w, "{} {}", rows.len(), dim)?;
    for row in rows {
        w.write_all(row.id.as_bytes())?;
        for v in &row.values {
            write!(w, " {}", format_f64(*v))?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_features(path: &Path, rows: &[VisualFeature]) -> Result<()> {
    write_features(create(path)?, rows)
}

/// One entry per line, in index order.
pub fn write_entries<W: Write>(mut w: W, entries: &[String]) -> Result<()> {
    for e in entries {
        writeln!(w, "{e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_entries<R: BufRead>(reader: R) -> Result<Vec<String>> {
    reader
        .lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.is_empty()))
        .map(|l| l.map_err(Error::from))
        .collect()
}

/// The ranking file; `top` keeps only the first entries of each ranking.
pub fn write_rankings<W: Write>(mut w: W, rankings: &[Ranking], top: Option<usize>) -> Result<()> {
    for r in rankings {
        let n = top.map_or(r.len(), |t| t.min(r.len()));
        for (rank, (item, score)) in r.entries[..n].iter().enumerate() {
            writeln!(w, "{}\t{}\t{}\t{:.6}", r.query_id, item, rank + 1, score)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_rankings<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<Ranking>> {
    let mut out: Vec<Ranking> = Vec::new();
    let mut seen_queries = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [query, item, rank, score] = fields[..] else {
            return Err(Error::parse(source_name, lineno, "expected 4 tab-separated fields"));
        };
        let rank: usize = rank
            .parse()
            .map_err(|_| Error::parse(source_name, lineno, format!("bad rank {rank:?}")))?;
        let score: f64 = score
            .parse()
            .map_err(|_| Error::parse(source_name, lineno, format!("bad score {score:?}")))?;
        let continues = out.last().is_some_and(|r| r.query_id == query);
        if !continues {
            if !seen_queries.insert(query.to_string()) {
                return Err(Error::parse(
                    source_name,
                    lineno,
                    format!("lines of query {query:?} are not grouped"),
                ));
            }
            out.push(Ranking {
                query_id: query.to_string(),
                entries: Vec::new(),
            });
        }
        let current = out.last_mut().unwrap();
        if rank != current.entries.len() + 1 {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("expected rank {}, found {rank}", current.entries.len() + 1),
            ));
        }
        current.entries.push((item.to_string(), score));
    }
    Ok(out)
}

pub fn load_rankings(path: &Path) -> Result<Vec<Ranking>> {
    read_rankings(open(path)?, &name_of(path))
}

/// Reads `<a>\t<b>` pairs (sentence → item for training, query → relevant
/// item for evaluation).
pub fn read_pairs<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        match line.split('\t').collect::<Vec<_>>()[..] {
            [a, b] if !a.is_empty() && !b.is_empty() => out.push((a.to_string(), b.to_string())),
            _ => return Err(Error::parse(source_name, i + 1, "expected <id>\\t<item_id>")),
        }
    }
    Ok(out)
}

pub fn load_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    read_pairs(open(path)?, &name_of(path))
}

pub fn write_history<W: Write>(mut w: W, history: &[EpochStats]) -> Result<()> {
    writeln!(w, "epoch\ttrain_loss\tval_loss")?;
    for h in history {
        writeln!(
            w,
            "{}\t{}\t{}",
            h.epoch,
            format_f64(h.train_loss),
            format_f64(h.val_loss)
        )?;
    }
    w.flush()?;
    Ok(())
}
