use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use semnorm::detect::{self, DetectOptions};
use semnorm::embstore::{self, Format, StreamReader};
use semnorm::instances::{self, InstanceQuery, WordInstances};
use semnorm::simulate::{self, SimulationConfig};
use semnorm::{aggregate, stability, Error, LogBase};

pub const EXIT_IO: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DECODE: u8 = 3;
pub const EXIT_VALIDATION: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    Io { path: PathBuf, source: io::Error },
    Decode { path: PathBuf, source: Error },
    Validation(String),
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Decode { .. } => EXIT_DECODE,
            CliError::Validation(_) => EXIT_VALIDATION,
        }
    }

    fn from_lib(path: &Path, err: Error) -> Self {
        match err {
            Error::Io(source) => CliError::Io {
                path: path.to_path_buf(),
                source,
            },
            e if e.is_decode() => CliError::Decode {
                path: path.to_path_buf(),
                source: e,
            },
            e => CliError::Validation(e.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io { path, source } => {
                write!(f, "{}: {source} (check the path and permissions)", path.display())
            }
            CliError::Decode { path, source } => write!(
                f,
                "{}: {source} (is this an embedding stream in binary or jsonl format?)",
                path.display()
            ),
            CliError::Validation(msg) => f.write_str(msg),
            CliError::Usage(msg) => write!(f, "{msg} (see --help)"),
        }
    }
}

fn validation(err: Error) -> CliError {
    CliError::Validation(err.to_string())
}

fn open_stream(path: &Path) -> Result<StreamReader<BufReader<File>>, CliError> {
    StreamReader::open_path(path).map_err(|e| CliError::from_lib(path, e))
}

fn corpus_stats(path: &Path) -> Result<aggregate::CorpusStats, CliError> {
    aggregate::accumulate(open_stream(path)?).map_err(|e| CliError::from_lib(path, e))
}

/// Write through `report` to `--out` or stdout.
fn emit<F>(out: Option<&Path>, report: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let (result, path) = match out {
        Some(path) => {
            let file = File::create(path).map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            let mut w = BufWriter::new(file);
            (report(&mut w).and_then(|_| w.flush()), path.to_path_buf())
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            (report(&mut w).and_then(|_| w.flush()), PathBuf::from("<stdout>"))
        }
    };
    result.map_err(|source| CliError::Io { path, source })
}

pub fn stats(source: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let stats = corpus_stats(source)?;
    emit(out, |w| stats.write_tsv(w))
}

pub fn detect(
    source: &Path,
    target: &Path,
    min_freq: u64,
    exclude: Option<&Path>,
    log_base: LogBase,
    json: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let exclude = match exclude {
        Some(path) => {
            let file = File::open(path).map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            detect::read_exclude_list(BufReader::new(file)).map_err(|e| CliError::from_lib(path, e))?
        }
        None => Default::default(),
    };
    let opts = DetectOptions {
        min_freq,
        exclude,
        log_base,
    };
    let s = corpus_stats(source)?;
    let t = corpus_stats(target)?;
    let scored = detect::detect(&s, &t, &opts).map_err(validation)?;
    if let Some(path) = json {
        let file = File::create(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut w = BufWriter::new(file);
        detect::write_json(&s, &t, &opts, &scored, &mut w).map_err(|e| CliError::from_lib(path, e))?;
        w.flush().map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    }
    emit(out, |w| detect::write_tsv(&scored, w))
}

pub fn instances(
    source: &Path,
    target: &Path,
    word: &str,
    query: InstanceQuery,
    width: usize,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let word = word.to_lowercase();
    let s = WordInstances::collect(open_stream(source)?, &word).map_err(|e| CliError::from_lib(source, e))?;
    let t = WordInstances::collect(open_stream(target)?, &word).map_err(|e| CliError::from_lib(target, e))?;
    let ranked = instances::typical_instances(&s, &t, &query).map_err(validation)?;
    emit(out, |w| instances::write_tsv(&ranked, width, w))
}

pub fn stability(source: &Path, max_n: usize, out: Option<&Path>) -> Result<(), CliError> {
    if max_n < 2 {
        return Err(CliError::Usage(format!("--max-n must be at least 2, got {max_n}")));
    }
    let reader = open_stream(source)?;
    let dim = reader.header().dim();
    let curve = stability::stability_curve(dim, reader, max_n).map_err(|e| CliError::from_lib(source, e))?;
    emit(out, |w| curve.write_tsv(w))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

pub fn simulate(prefix: &Path, format: Format, config: &SimulationConfig) -> Result<(), CliError> {
    let pair = simulate::simulate(config).map_err(|e| CliError::Usage(e.to_string()))?;
    for corpus in [&pair.source, &pair.target] {
        let path = with_suffix(
            prefix,
            &format!(".{}.{}", corpus.header.corpus_label, format.extension()),
        );
        embstore::write_path(&path, &corpus.header, &corpus.records, format)
            .map_err(|e| CliError::from_lib(&path, e))?;
    }
    let truth = with_suffix(prefix, ".truth.tsv");
    emit(Some(&truth), |w| simulate::write_truth_tsv(&pair.truth, w))
}
