/// Split text into lowercase terms.
///
/// Every maximal run of letters and digits becomes one term; everything else
/// separates terms. There is no stemming and no stopword list, and
/// single-character terms are kept.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}
