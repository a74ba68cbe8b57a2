use std::path::Path;

use super::number::format_number;
use super::{read_text, write_text, IoError};
use crate::case_space::{CaseSet, CaseVector, WeightSumTable};
use crate::density::{GaussianMixture, KernelDensity};
use crate::explain::{attribute_pair_supports, attribute_supports, FormalContext};
use crate::scores::{case_id, Approach, ApproachScores, ScoreRow, ScoreTable};

/// Evenly spaced points over `[0, 1]` in the density sample export.
pub const DENSITY_SAMPLE_POINTS: usize = 1001;

const TRAILING_COLUMNS: [&str; 6] = [
    "raw_sum",
    "normalized_sum",
    "p_gmm_cdf",
    "p_kde_cdf",
    "p_posterior",
    "category",
];

fn finish(writer: csv::Writer<Vec<u8>>) -> Result<String, IoError> {
    let bytes = writer.into_inner().expect("flushing into memory cannot fail");
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

/// Score table as CSV: `case_id`, one 0/1 column per answer, the sums, the
/// three scores and the category.
pub fn scores_csv(table: &ScoreTable) -> Result<String, IoError> {
    let mut w = writer();
    let mut header = vec!["case_id"];
    header.extend(table.answer_ids.iter().map(String::as_str));
    header.extend(TRAILING_COLUMNS);
    w.write_record(&header)?;
    for row in &table.rows {
        let mut record = Vec::with_capacity(header.len());
        record.push(row.case_id());
        record.extend(
            row.answers
                .answers()
                .iter()
                .map(|&b| if b { "1" } else { "0" }.to_owned()),
        );
        record.push(format_number(row.raw_sum));
        record.push(format_number(row.normalized_sum));
        for a in Approach::ALL {
            record.push(format_number(row.scores.get(a)));
        }
        record.push(row.category.to_string());
        w.write_record(&record)?;
    }
    finish(w)
}

pub fn export_scores_csv(table: &ScoreTable, path: &Path) -> Result<(), IoError> {
    write_text(path, &scores_csv(table)?)
}

fn parse_float(text: &str, line: usize, column: &str) -> Result<f64, IoError> {
    text.parse()
        .map_err(|_| IoError::format(line, format!("{column}: not a number: {text:?}")))
}

/// Inverse of [`scores_csv`].
pub fn parse_scores_csv(text: &str) -> Result<ScoreTable, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(IoError::format(1, "missing header")),
    };
    let n = header.len();
    if n < 1 + TRAILING_COLUMNS.len()
        || &header[0] != "case_id"
        || header.iter().skip(n - TRAILING_COLUMNS.len()).ne(TRAILING_COLUMNS)
    {
        return Err(IoError::format(1, "unexpected header"));
    }
    let answer_ids: Vec<String> = header
        .iter()
        .skip(1)
        .take(n - 1 - TRAILING_COLUMNS.len())
        .map(str::to_owned)
        .collect();
    let m = answer_ids.len();

    let mut rows = Vec::new();
    for (i, record) in records.enumerate() {
        let record = record?;
        let line = i + 2;
        if record.len() != n {
            return Err(IoError::format(line, format!("{} fields, expected {n}", record.len())));
        }
        let case_index = record[0]
            .strip_prefix('c')
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| IoError::format(line, format!("bad case id {:?}", &record[0])))?;
        let answers = (1..=m)
            .map(|j| match &record[j] {
                "1" => Ok(true),
                "0" => Ok(false),
                other => Err(IoError::format(line, format!("answer cell {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let value = |k: usize| parse_float(&record[m + 1 + k], line, TRAILING_COLUMNS[k]);
        rows.push(ScoreRow {
            case_index,
            answers: CaseVector::new(answers),
            raw_sum: value(0)?,
            normalized_sum: value(1)?,
            scores: ApproachScores {
                gmm_cdf: value(2)?,
                kde_cdf: value(3)?,
                posterior: value(4)?,
            },
            category: record[m + 6]
                .parse()
                .map_err(|e: crate::explain::CategoryError| IoError::format(line, e.to_string()))?,
        });
    }
    Ok(ScoreTable { answer_ids, rows })
}

pub fn read_scores_csv(path: &Path) -> Result<ScoreTable, IoError> {
    parse_scores_csv(&read_text(path)?)
}

/// Enumerated cases with their raw and normalized weight sums.
pub fn cases_csv(
    cases: &CaseSet,
    answer_ids: &[String],
    sums: &WeightSumTable,
) -> Result<String, IoError> {
    let mut w = writer();
    let mut header = vec!["case_id"];
    header.extend(answer_ids.iter().map(String::as_str));
    header.extend(&TRAILING_COLUMNS[..2]);
    w.write_record(&header)?;
    for (i, case) in cases.iter().enumerate() {
        let mut record = vec![case_id(i)];
        record.extend(case.answers().iter().map(|&b| u8::from(b).to_string()));
        record.push(format_number(sums.raw()[i]));
        record.push(format_number(sums.normalized()[i]));
        w.write_record(&record)?;
    }
    finish(w)
}

/// Mixture, component, kernel density and score curves on `points` evenly
/// spaced values of `[0, 1]`.
pub fn density_samples_csv(
    gmm: &GaussianMixture,
    kde: &KernelDensity,
    points: usize,
) -> Result<String, IoError> {
    let mut w = writer();
    let mut header = vec!["x".to_owned(), "pdf_gmm".to_owned()];
    header.extend((1..=gmm.len()).map(|k| format!("pdf_component_{k}")));
    header.push("pdf_kde".into());
    header.extend(Approach::ALL.iter().map(|a| a.column_name().to_owned()));
    w.write_record(&header)?;
    let last = points.saturating_sub(1).max(1) as f64;
    for i in 0..points {
        let x = i as f64 / last;
        let mut record = vec![format_number(x), format_number(gmm.pdf(x))];
        record.extend((0..gmm.len()).map(|k| format_number(gmm.component_pdf(k, x))));
        record.push(format_number(kde.pdf(x)));
        let scores = ApproachScores::evaluate(x, gmm, kde);
        record.extend(Approach::ALL.iter().map(|&a| format_number(scores.get(a))));
        w.write_record(&record)?;
    }
    finish(w)
}

/// Object counts of every attribute and attribute pair. Single attributes
/// leave `attribute_2` empty.
pub fn supports_csv(ctx: &FormalContext) -> Result<String, IoError> {
    let names = ctx.attributes();
    let mut w = writer();
    w.write_record(["attribute_1", "attribute_2", "support"])?;
    for (j, n) in attribute_supports(ctx).into_iter().enumerate() {
        w.write_record([names[j].as_str(), "", &n.to_string()])?;
    }
    for (i, j, n) in attribute_pair_supports(ctx) {
        w.write_record([names[i].as_str(), names[j].as_str(), &n.to_string()])?;
    }
    finish(w)
}
