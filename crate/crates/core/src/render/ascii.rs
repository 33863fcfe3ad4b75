use serde::{Deserialize, Serialize};

use super::RenderError;

/// A rectangular block of printable ASCII text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharGrid {
    rows: Vec<String>,
}

impl CharGrid {
    /// Accepts rows of equal length made of printable ASCII (space through
    /// `~`).
    pub fn new(rows: Vec<String>) -> Result<Self, RenderError> {
        let Some(first) = rows.first() else {
            return Err(RenderError::EmptyGrid);
        };
        let width = first.len();
        if width == 0 {
            return Err(RenderError::EmptyGrid);
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(RenderError::RaggedGrid { row: i, expected: width, found: row.len() });
            }
            if let Some(ch) = row.chars().find(|c| !(' '..='~').contains(c)) {
                return Err(RenderError::NonPrintable(ch));
            }
        }
        Ok(Self { rows })
    }

    /// Pads every row with trailing spaces to the longest row's length.
    pub fn padded(rows: Vec<String>) -> Result<Self, RenderError> {
        let width = rows.iter().map(String::len).max().unwrap_or(0);
        Self::new(rows.into_iter().map(|r| format!("{r:<width$}")).collect())
    }

    pub fn rows(&self) -> &[String] {
        &self.rows
    }

    pub fn width(&self) -> usize {
        self.rows[0].len()
    }

    pub fn height(&self) -> usize {
        self.rows.len()
    }

    pub fn at(&self, row: usize, col: usize) -> char {
        self.rows[row].as_bytes()[col] as char
    }
}

/// Joins grid rows with `\n`. Rows are emitted exactly, including trailing
/// spaces.
pub fn ascii_frame(grid: &CharGrid) -> String {
    grid.rows.join("\n")
}

/// Splits a frame back into rows, validating shape.
pub fn parse_frame(text: &str) -> Result<CharGrid, RenderError> {
    CharGrid::new(text.split('\n').map(str::to_string).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let g = CharGrid::new(vec!["##".into(), "##".into()]).unwrap();
        assert_eq!(ascii_frame(&g), "##\n##");
    }

    #[test]
    fn empty_and_ragged_are_errors() {
        assert_eq!(CharGrid::new(vec![]), Err(RenderError::EmptyGrid));
        assert!(matches!(CharGrid::new(vec!["###".into(), "#".into()]), Err(RenderError::RaggedGrid { row: 1, .. })));
        assert!(matches!(CharGrid::new(vec!["a\tb".into()]), Err(RenderError::NonPrintable('\t'))));
    }

    #[test]
    fn trailing_spaces_survive() {
        let g = CharGrid::padded(vec!["ab".into(), "a".into()]).unwrap();
        assert_eq!(ascii_frame(&g), "ab\na ");
        assert_eq!(parse_frame(&ascii_frame(&g)).unwrap(), g);
    }
}
