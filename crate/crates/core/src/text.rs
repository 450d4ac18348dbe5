//! Small text helpers shared by retrieval, scoring and corpus filtering.

/// Lowercased alphanumeric tokens. Any non-alphanumeric character is a
/// separator and empty pieces are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Number of maximal whitespace-delimited runs.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Joins the whitespace-delimited words of `text` with single spaces.
pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
