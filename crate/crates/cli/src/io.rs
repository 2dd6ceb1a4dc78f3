//! File readers and record writers shared by the subcommands.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use ctxreward::context::ingest_context;
use ctxreward::model::{AuxiliaryContext, ContextKind, Manuscript, Review};
use ctxreward::records::{from_line, read_records, to_line, Record};

use crate::error::CliError;

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Reads every record of a JSONL file.
pub fn read_record_file<T: Record>(path: &Path) -> Result<Vec<T>, CliError> {
    read_records(BufReader::new(open(path)?))
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Reads a manuscript file holding exactly one `manuscript/v1` record.
pub fn read_manuscript(path: &Path) -> Result<Manuscript, CliError> {
    let mut records: Vec<Manuscript> = read_record_file(path)?;
    if records.len() != 1 {
        return Err(CliError::Input(format!(
            "{}: expected one manuscript record, found {}",
            path.display(),
            records.len()
        )));
    }
    let manuscript = records.remove(0);
    manuscript.validate()?;
    Ok(manuscript)
}

/// Reads a context file. A file whose first line is an
/// `auxiliary_context/v1` record is taken as that record; anything else is
/// ingested as plain text.
pub fn read_context(kind: ContextKind, path: &Path) -> Result<AuxiliaryContext, CliError> {
    let text = read_string(path).ok();
    let first_line = text.as_deref().and_then(|t| t.lines().find(|l| !l.trim().is_empty()));
    if let Some(context) = first_line.and_then(|l| from_line::<AuxiliaryContext>(l).ok()) {
        if context.kind != kind {
            return Err(CliError::Input(format!(
                "{}: expected a {} context, found {}",
                path.display(),
                kind.as_str(),
                context.kind.as_str()
            )));
        }
        return Ok(AuxiliaryContext::new(context.kind, context.text, context.provenance)?);
    }
    Ok(ingest_context(kind, path)?)
}

/// Reads a context when a path is given; with `required` set, a missing
/// path is an input error.
pub fn optional_context(
    kind: ContextKind,
    path: Option<&Path>,
    required: bool,
) -> Result<Option<AuxiliaryContext>, CliError> {
    match path {
        Some(path) => read_context(kind, path).map(Some),
        None if required => Err(CliError::Input(format!(
            "the {} context is required but no file was given",
            kind.as_str()
        ))),
        None => Ok(None),
    }
}

/// Reads a raw review text file; a `<think>` block without a closing tag is
/// an input error.
pub fn read_review(path: &Path) -> Result<Review, CliError> {
    let raw = read_string(path)?;
    Review::from_raw(raw).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Serializes records to lines.
pub fn lines<T: Record>(records: &[T]) -> Result<Vec<String>, CliError> {
    records
        .iter()
        .map(|r| to_line(r).map_err(|e| CliError::Input(format!("serializing output: {e}"))))
        .collect()
}

/// Writes record lines to `path`, or to `stdout` when no path is given.
pub fn emit_lines(path: Option<&Path>, stdout: &mut dyn Write, lines: &[String]) -> Result<(), CliError> {
    let mut text = String::new();
    for line in lines {
        text.push_str(line);
        text.push('\n');
    }
    match path {
        Some(path) => write_text(path, &text),
        None => stdout
            .write_all(text.as_bytes())
            .and_then(|()| stdout.flush())
            .map_err(|e| CliError::Input(format!("writing output: {e}"))),
    }
}

/// Writes records to `path`, or to `stdout` when no path is given.
pub fn emit<T: Record>(path: Option<&Path>, stdout: &mut dyn Write, records: &[T]) -> Result<(), CliError> {
    emit_lines(path, stdout, &lines(records)?)
}

/// Writes plain text to a file, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::Input(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ctxreward::model::Provenance;

    #[test]
    fn context_files_may_be_text_or_records() {
        let dir = tempfile::tempdir().unwrap();
        let text = dir.path().join("fig.txt");
        std::fs::write(&text, "Figure 1 rises.\r\n").unwrap();
        let ctx = read_context(ContextKind::FigureDetails, &text).unwrap();
        assert_eq!((ctx.text.as_str(), ctx.provenance), ("Figure 1 rises.\n", Provenance::Ingested));

        let record = dir.path().join("nov.jsonl");
        let stored = AuxiliaryContext::new(ContextKind::NoveltyAssessment, "New idea.", Provenance::PipelineGenerated).unwrap();
        std::fs::write(&record, to_line(&stored).unwrap() + "\n").unwrap();
        assert_eq!(read_context(ContextKind::NoveltyAssessment, &record).unwrap(), stored);
        assert!(read_context(ContextKind::FigureDetails, &record).is_err());
    }

    #[test]
    fn missing_context_handling() {
        assert_eq!(optional_context(ContextKind::FigureDetails, None, false).unwrap(), None);
        let err = optional_context(ContextKind::FigureDetails, None, true).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = optional_context(ContextKind::FigureDetails, Some(Path::new("/no/such/file")), false).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
