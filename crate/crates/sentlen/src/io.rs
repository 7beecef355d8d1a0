//! Reading corpora and length tables.
//!
//! Two input formats are understood: plain UTF-8 text with one sentence per
//! line (length = whitespace tokens), and `length<TAB>count` tables. Both can
//! be read as a histogram or as an ordered stream of record lengths; a table
//! expands each row into `count` records in row order. A table may open with
//! a `length<TAB>count` header, as the tables this crate writes do.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use sentlen_core::histogram::{
    parse_tsv_row, HistogramError, IngestStats, LengthHistogram, TextIngest,
};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum InputFormat {
    /// `.tsv` files are tables, everything else is text.
    Auto,
    Text,
    Tsv,
}

#[derive(Debug, Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{path}: {source}")]
    Histogram {
        path: PathBuf,
        #[source]
        source: HistogramError,
    },
}

impl InputFormat {
    pub fn resolve(self, path: &Path) -> InputFormat {
        match self {
            InputFormat::Auto
                if path
                    .extension()
                    .is_some_and(|e| e.eq_ignore_ascii_case("tsv")) =>
            {
                InputFormat::Tsv
            }
            InputFormat::Auto => InputFormat::Text,
            f => f,
        }
    }
}

fn open(path: &Path) -> Result<Box<dyn BufRead>, InputError> {
    let io = |source| InputError::Io {
        path: path.to_owned(),
        source,
    };
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufReader::new(std::io::stdin())));
    }
    Ok(Box::new(BufReader::new(File::open(path).map_err(io)?)))
}

/// Calls `f(line_number, line)` for every line, 1-based.
fn for_each_line(
    path: &Path,
    mut f: impl FnMut(usize, &str) -> Result<(), InputError>,
) -> Result<(), InputError> {
    let mut reader = open(path)?;
    let mut buf = Vec::new();
    let mut line = 0;
    loop {
        buf.clear();
        let n = reader
            .read_until(b'\n', &mut buf)
            .map_err(|source| InputError::Io {
                path: path.to_owned(),
                source,
            })?;
        if n == 0 {
            return Ok(());
        }
        line += 1;
        let text = std::str::from_utf8(&buf).map_err(|_| InputError::Parse {
            path: path.to_owned(),
            line,
            reason: "not valid UTF-8".into(),
        })?;
        f(line, text.trim_end_matches(['\n', '\r']))?;
    }
}

fn tsv_row(path: &Path, line: usize, text: &str) -> Result<Option<(u32, u64)>, InputError> {
    let header = line == 1 && text.starts_with("length");
    if header || text.trim().is_empty() || text.starts_with('#') {
        return Ok(None);
    }
    parse_tsv_row(line, text)
        .map(Some)
        .map_err(|e| InputError::Parse {
            path: path.to_owned(),
            line,
            reason: match e {
                HistogramError::MalformedRow { reason, .. } => reason.to_string(),
                other => other.to_string(),
            },
        })
}

fn hist_err(path: &Path) -> impl Fn(HistogramError) -> InputError + '_ {
    move |source| InputError::Histogram {
        path: path.to_owned(),
        source,
    }
}

/// Histogram of a corpus or table; lengths above `cutoff` are tallied in the
/// returned stats.
pub fn read_histogram(
    path: &Path,
    format: InputFormat,
    cutoff: u32,
) -> Result<(LengthHistogram, IngestStats), InputError> {
    match format.resolve(path) {
        InputFormat::Tsv => {
            let mut hist = LengthHistogram::new(cutoff).map_err(hist_err(path))?;
            let mut stats = IngestStats::default();
            for_each_line(path, |line, text| {
                if let Some((len, count)) = tsv_row(path, line, text)? {
                    if !hist.add(len, count) {
                        stats.skipped_long += count;
                        stats.skipped_long_tokens += len as u64 * count;
                    }
                }
                Ok(())
            })?;
            Ok((hist, stats))
        }
        _ => {
            let mut ing = TextIngest::new(cutoff).map_err(hist_err(path))?;
            for_each_line(path, |_, text| {
                ing.push_line(text);
                Ok(())
            })?;
            Ok(ing.finish())
        }
    }
}

/// Record lengths in input order, without those above `cutoff` or empty.
pub fn read_lengths(path: &Path, format: InputFormat, cutoff: u32) -> Result<Vec<u32>, InputError> {
    let mut out = Vec::new();
    match format.resolve(path) {
        InputFormat::Tsv => for_each_line(path, |line, text| {
            if let Some((len, count)) = tsv_row(path, line, text)? {
                if len <= cutoff {
                    out.extend(std::iter::repeat_n(len, count as usize));
                }
            }
            Ok(())
        })?,
        _ => for_each_line(path, |_, text| {
            let n = sentlen_core::histogram::token_count(text);
            if n > 0 && n <= cutoff as usize {
                out.push(n as u32);
            }
            Ok(())
        })?,
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp(name: &str, body: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("sentlen-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join(name);
        File::create(&p)
            .unwrap()
            .write_all(body.as_bytes())
            .unwrap();
        p
    }

    #[test]
    fn text_and_table_agree() {
        let t = temp("a.txt", "a b c\n\nx y\na b c\n");
        let s = temp("a.tsv", "length\tcount\n3\t2\n2\t1\n");
        let (h1, st) = read_histogram(&t, InputFormat::Auto, 1000).unwrap();
        let (h2, _) = read_histogram(&s, InputFormat::Auto, 1000).unwrap();
        assert_eq!(h1, h2);
        assert_eq!(st.skipped_empty, 1);
        assert_eq!(
            read_lengths(&t, InputFormat::Auto, 1000).unwrap(),
            vec![3, 2, 3]
        );
        assert_eq!(
            read_lengths(&s, InputFormat::Auto, 1000).unwrap(),
            vec![3, 3, 2]
        );
    }

    #[test]
    fn table_errors_name_the_line() {
        let s = temp("bad.tsv", "5\t10\n\n0\t4\n");
        let e = read_histogram(&s, InputFormat::Tsv, 1000).unwrap_err();
        assert!(matches!(e, InputError::Parse { line: 3, .. }), "{e}");
        assert!(e.to_string().contains(":3:"));
    }

    #[test]
    fn missing_file() {
        let e = read_histogram(Path::new("/nonexistent/x.txt"), InputFormat::Auto, 10).unwrap_err();
        assert!(matches!(e, InputError::Io { .. }));
    }
}
