//! Reading and writing sparse binary matrices in the alist text format.
//!
//! Layout (MacKay's convention, 1-based indices, zero padding):
//!
//! ```text
//! n m
//! max_col_weight max_row_weight
//! <n column weights>
//! <m row weights>
//! n lines: row indices of each column, padded with 0 to max_col_weight
//! m lines: column indices of each row, padded with 0 to max_row_weight
//! ```

use super::SparseBlock;
use crate::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Serialize `block` to `path` in alist format.
pub fn write_alist(block: &SparseBlock, path: &Path) -> Result<()> {
    let max_col = block.col_rows.iter().map(|c| c.len()).max().unwrap_or(0);
    let max_row = block.row_cols.iter().map(|r| r.len()).max().unwrap_or(0);

    let mut out = String::new();
    let _ = writeln!(out, "{} {}", block.cols, block.rows);
    let _ = writeln!(out, "{max_col} {max_row}");
    let weights = |lists: &[Vec<u32>]| {
        lists
            .iter()
            .map(|l| l.len().to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(out, "{}", weights(&block.col_rows));
    let _ = writeln!(out, "{}", weights(&block.row_cols));
    let padded = |list: &Vec<u32>, width: usize| {
        let mut items: Vec<String> = list.iter().map(|&i| (i + 1).to_string()).collect();
        items.resize(width, "0".to_string());
        items.join(" ")
    };
    for col in &block.col_rows {
        let _ = writeln!(out, "{}", padded(col, max_col));
    }
    for row in &block.row_cols {
        let _ = writeln!(out, "{}", padded(row, max_row));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Parse an alist file into a [`SparseBlock`].
pub fn read_alist(path: &Path) -> Result<SparseBlock> {
    let text = std::fs::read_to_string(path)?;
    let mut tokens = text.split_ascii_whitespace().map(|t| {
        t.parse::<usize>()
            .map_err(|_| Error::BadAlist(format!("{}: non-integer token {t:?}", path.display())))
    });
    let mut next = |what: &str| {
        tokens
            .next()
            .unwrap_or_else(|| Err(Error::BadAlist(format!("{}: missing {what}", path.display()))))
    };

    let cols = next("column count")?;
    let rows = next("row count")?;
    let max_col = next("max column weight")?;
    let max_row = next("max row weight")?;

    let col_weights: Vec<usize> = (0..cols)
        .map(|_| next("column weight"))
        .collect::<Result<_>>()?;
    let row_weights: Vec<usize> = (0..rows)
        .map(|_| next("row weight"))
        .collect::<Result<_>>()?;
    if col_weights.iter().any(|&w| w > max_col) || row_weights.iter().any(|&w| w > max_row) {
        return Err(Error::BadAlist(format!(
            "{}: weight exceeds declared maximum",
            path.display()
        )));
    }

    let mut entries = Vec::new();
    for (c, &w) in col_weights.iter().enumerate() {
        for k in 0..max_col {
            let v = next("column entry")?;
            if k < w {
                if v == 0 || v > rows {
                    return Err(Error::BadAlist(format!(
                        "{}: row index {v} out of range in column {c}",
                        path.display()
                    )));
                }
                entries.push(((v - 1) as u32, c as u32));
            } else if v != 0 {
                return Err(Error::BadAlist(format!(
                    "{}: expected 0 padding in column {c}",
                    path.display()
                )));
            }
        }
    }

    let block = SparseBlock::from_entries(rows, cols, &entries);

    // The row section is redundant; verify it agrees with the column section.
    for (r, &w) in row_weights.iter().enumerate() {
        let mut listed = Vec::new();
        for k in 0..max_row {
            let v = next("row entry")?;
            if k < w {
                if v == 0 || v > cols {
                    return Err(Error::BadAlist(format!(
                        "{}: column index {v} out of range in row {r}",
                        path.display()
                    )));
                }
                listed.push((v - 1) as u32);
            }
        }
        listed.sort_unstable();
        if listed != block.row_cols[r] {
            return Err(Error::BadAlist(format!(
                "{}: row {r} disagrees with the column section",
                path.display()
            )));
        }
    }
    Ok(block)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_block() -> SparseBlock {
        SparseBlock::from_entries(3, 4, &[(0, 0), (0, 2), (1, 1), (1, 3), (2, 0), (2, 3)])
    }

    #[test]
    fn round_trip() {
        let block = sample_block();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.alist");
        write_alist(&block, &path).unwrap();
        let loaded = read_alist(&path).unwrap();
        assert_eq!(loaded, block);
    }

    #[test]
    fn detects_inconsistent_row_section() {
        let block = sample_block();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.alist");
        write_alist(&block, &path).unwrap();
        let mut text = std::fs::read_to_string(&path).unwrap();
        // Corrupt the final row line (row section comes last).
        text = text.trim_end().rsplit_once('\n').map(|(head, _)| format!("{head}\n2 3\n")).unwrap();
        std::fs::write(&path, text).unwrap();
        assert!(matches!(read_alist(&path), Err(Error::BadAlist(_))));
    }

    #[test]
    fn rejects_truncated_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.alist");
        std::fs::write(&path, "4 3\n2 2\n").unwrap();
        assert!(matches!(read_alist(&path), Err(Error::BadAlist(_))));
    }
}
