//! CSV readers and writers for domains, predictions and mastery exports.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use zsdiag_core::corpus::{Catalog, CorpusError, Domain, ResponseRecord};
use zsdiag_core::metrics::MasteryMatrix;

pub const RECORDS_FILE: &str = "records.csv";
pub const QMATRIX_FILE: &str = "qmatrix.csv";
pub const NAMES_FILE: &str = "names.csv";

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    MalformedRow {
        path: PathBuf,
        line: u64,
        reason: String,
    },
    #[error("dangling reference: {0}")]
    DanglingReference(String),
    #[error("domain `{0}` has no records")]
    EmptyDomain(String),
    #[error(transparent)]
    Corpus(CorpusError),
}

impl From<CorpusError> for DataError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::DanglingReference(m) => DataError::DanglingReference(m),
            CorpusError::EmptyDomain(d) => DataError::EmptyDomain(d),
            other => DataError::Corpus(other),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// The three files describing one domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainFiles {
    pub records: PathBuf,
    pub qmatrix: PathBuf,
    pub names: PathBuf,
}

impl DomainFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            records: dir.join(RECORDS_FILE),
            qmatrix: dir.join(QMATRIX_FILE),
            names: dir.join(NAMES_FILE),
        }
    }

    pub fn all(&self) -> [&Path; 3] {
        [&self.records, &self.qmatrix, &self.names]
    }
}

struct Rows {
    path: PathBuf,
    reader: csv::Reader<File>,
}

impl Rows {
    fn open(path: &Path, expected: &[&str]) -> Result<(Self, csv::StringRecord), DataError> {
        let file = File::open(path).map_err(io_err(path))?;
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(file);
        let header = reader
            .headers()
            .map_err(|e| malformed(path, 1, e.to_string()))?
            .clone();
        let got: Vec<&str> = header.iter().collect();
        if got.len() < expected.len() || got[..expected.len()] != *expected {
            return Err(malformed(
                path,
                1,
                format!("expected header `{}`, got `{}`", expected.join(","), got.join(",")),
            ));
        }
        Ok((
            Self {
                path: path.to_path_buf(),
                reader,
            },
            header,
        ))
    }

    /// Rows with their 1-based line numbers; `width` fields required per row.
    fn each(
        &mut self,
        width: usize,
        mut f: impl FnMut(u64, &csv::StringRecord) -> Result<(), String>,
    ) -> Result<(), DataError> {
        let mut row = csv::StringRecord::new();
        loop {
            let ok = self
                .reader
                .read_record(&mut row)
                .map_err(|e| malformed(&self.path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
            if !ok {
                return Ok(());
            }
            let line = row.position().map_or(0, |p| p.line());
            if row.len() != width {
                return Err(malformed(
                    &self.path,
                    line,
                    format!("expected {width} fields, got {}", row.len()),
                ));
            }
            f(line, &row).map_err(|reason| malformed(&self.path, line, reason))?;
        }
    }
}

fn malformed(path: &Path, line: u64, reason: String) -> DataError {
    DataError::MalformedRow {
        path: path.to_path_buf(),
        line,
        reason,
    }
}

fn non_empty<'a>(field: &'a str, what: &str) -> Result<&'a str, String> {
    if field.is_empty() {
        Err(format!("empty {what}"))
    } else {
        Ok(field)
    }
}

/// Reads `student_id,exercise_id,score[,timestamp]`. Without a timestamp column the
/// row position is the order index.
pub fn read_records(path: &Path) -> Result<Vec<ResponseRecord>, DataError> {
    let (mut rows, header) = Rows::open(path, &["student_id", "exercise_id", "score"])?;
    let timestamped = match header.len() {
        3 => false,
        4 if &header[3] == "timestamp" => true,
        _ => {
            return Err(malformed(
                path,
                1,
                "only an optional `timestamp` column may follow `score`".into(),
            ))
        }
    };
    let mut records = Vec::new();
    rows.each(header.len(), |_, row| {
        let score = match &row[2] {
            "0" => 0,
            "1" => 1,
            other => return Err(format!("score must be 0 or 1, got `{other}`")),
        };
        let order_index = if timestamped {
            row[3]
                .parse::<u64>()
                .map_err(|_| format!("timestamp must be a non-negative integer, got `{}`", &row[3]))?
        } else {
            records.len() as u64
        };
        records.push(ResponseRecord::new(
            non_empty(&row[0], "student_id")?,
            non_empty(&row[1], "exercise_id")?,
            score,
            order_index,
        ));
        Ok(())
    })?;
    Ok(records)
}

pub fn read_qmatrix(path: &Path) -> Result<Vec<(String, String)>, DataError> {
    let (mut rows, _) = Rows::open(path, &["exercise_id", "concept_id"])?;
    let mut links = Vec::new();
    rows.each(2, |_, row| {
        links.push((
            non_empty(&row[0], "exercise_id")?.to_string(),
            non_empty(&row[1], "concept_id")?.to_string(),
        ));
        Ok(())
    })?;
    Ok(links)
}

pub fn read_names(path: &Path) -> Result<Vec<(String, String)>, DataError> {
    let (mut rows, _) = Rows::open(path, &["concept_id", "concept_name"])?;
    let mut names = Vec::new();
    rows.each(2, |_, row| {
        names.push((
            non_empty(&row[0], "concept_id")?.to_string(),
            non_empty(&row[1], "concept_name")?.to_string(),
        ));
        Ok(())
    })?;
    Ok(names)
}

pub fn load_domain(name: &str, files: &DomainFiles) -> Result<Domain, DataError> {
    let records = read_records(&files.records)?;
    let catalog = Catalog::from_pairs(read_qmatrix(&files.qmatrix)?, read_names(&files.names)?);
    Ok(Domain::new(name, records, catalog)?)
}

/// Loads `records.csv`, `qmatrix.csv` and `names.csv` from `dir`; the domain is
/// named after the directory.
pub fn load_domain_dir(dir: &Path) -> Result<Domain, DataError> {
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "domain".into());
    load_domain(&name, &DomainFiles::in_dir(dir))
}

fn create(path: &Path) -> Result<csv::Writer<BufWriter<File>>, DataError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let file = File::create(path).map_err(io_err(path))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn finish(path: &Path, w: csv::Writer<BufWriter<File>>) -> Result<(), DataError> {
    w.into_inner()
        .map_err(|e| DataError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e.to_string()),
        })?
        .flush()
        .map_err(io_err(path))
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), DataError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = create(path)?;
    let csv_err = |e: csv::Error| DataError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    };
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    finish(path, w)
}

/// Writes the three domain files into `dir`, with the order index as timestamp.
pub fn write_domain(dir: &Path, domain: &Domain) -> Result<DomainFiles, DataError> {
    let files = DomainFiles::in_dir(dir);
    write_rows(
        &files.records,
        &["student_id", "exercise_id", "score", "timestamp"],
        domain.records().iter().map(|r| {
            [
                r.student_id.clone(),
                r.exercise_id.clone(),
                r.score.to_string(),
                r.order_index.to_string(),
            ]
        }),
    )?;
    let catalog = domain.catalog();
    write_rows(
        &files.qmatrix,
        &["exercise_id", "concept_id"],
        catalog
            .q_links
            .iter()
            .flat_map(|(e, cs)| cs.iter().map(move |c| [e.clone(), c.clone()])),
    )?;
    write_rows(
        &files.names,
        &["concept_id", "concept_name"],
        catalog.concept_names.iter().map(|(c, n)| [c.clone(), n.clone()]),
    )?;
    Ok(files)
}

/// One row of a predictions file.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub student_id: String,
    pub exercise_id: String,
    pub y_true: u8,
    pub p_hat: f64,
}

pub fn write_predictions(path: &Path, rows: &[PredictionRow]) -> Result<(), DataError> {
    write_rows(
        path,
        &["student_id", "exercise_id", "y_true", "p_hat"],
        rows.iter().map(|r| {
            [
                r.student_id.clone(),
                r.exercise_id.clone(),
                r.y_true.to_string(),
                r.p_hat.to_string(),
            ]
        }),
    )
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>, DataError> {
    let (mut rows, _) = Rows::open(path, &["student_id", "exercise_id", "y_true", "p_hat"])?;
    let mut out = Vec::new();
    rows.each(4, |_, row| {
        let y_true = match &row[2] {
            "0" => 0,
            "1" => 1,
            other => return Err(format!("y_true must be 0 or 1, got `{other}`")),
        };
        let p_hat: f64 = row[3].parse().map_err(|_| format!("bad probability `{}`", &row[3]))?;
        out.push(PredictionRow {
            student_id: row[0].to_string(),
            exercise_id: row[1].to_string(),
            y_true,
            p_hat,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Writes `student_id,concept_id,mastery` in student then concept index order.
pub fn write_mastery(path: &Path, domain: &Domain, mastery: &MasteryMatrix) -> Result<(), DataError> {
    let students = domain.students().ids();
    let concepts = domain.concepts().ids();
    write_rows(
        path,
        &["student_id", "concept_id", "mastery"],
        (0..mastery.n_students).flat_map(|s| {
            (0..mastery.n_concepts).map(move |k| {
                [
                    students[s].clone(),
                    concepts[k].clone(),
                    mastery.get(s, k).to_string(),
                ]
            })
        }),
    )
}

/// Reads a mastery export back into a matrix aligned with `domain`'s indices.
/// Students or concepts unknown to `domain` are rejected; missing cells are NaN.
pub fn read_mastery(path: &Path, domain: &Domain) -> Result<MasteryMatrix, DataError> {
    let (mut rows, _) = Rows::open(path, &["student_id", "concept_id", "mastery"])?;
    let n_concepts = domain.n_concepts();
    let mut values = vec![f64::NAN; domain.n_students() * n_concepts];
    rows.each(3, |_, row| {
        let s = domain
            .students()
            .get(&row[0])
            .ok_or_else(|| format!("unknown student `{}`", &row[0]))?;
        let k = domain
            .concepts()
            .get(&row[1])
            .ok_or_else(|| format!("unknown concept `{}`", &row[1]))?;
        let v: f64 = row[2].parse().map_err(|_| format!("bad mastery `{}`", &row[2]))?;
        values[s * n_concepts + k] = v;
        Ok(())
    })?;
    Ok(MasteryMatrix {
        n_students: domain.n_students(),
        n_concepts,
        values,
    })
}

pub fn sha256_file(path: &Path) -> Result<String, DataError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(zsdiag_core::model::to_hex(&Sha256::digest(&bytes)))
}

/// SHA-256 of every file, keyed by path.
pub fn digest_files<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<BTreeMap<String, String>, DataError> {
    paths
        .into_iter()
        .map(|p| Ok((p.display().to_string(), sha256_file(p)?)))
        .collect()
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), DataError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, DataError> {
    fs::read(path).map_err(io_err(path))
}
