//! Text normalisation shared by matching, deduplication and scoring.

/// Curly quotes stripped alongside ASCII punctuation.
const CURLY_QUOTES: [char; 4] = ['\u{201C}', '\u{201D}', '\u{2018}', '\u{2019}'];

/// Whether `c` belongs to the fixed punctuation set removed by [`normalize_text`].
pub fn is_stripped_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || CURLY_QUOTES.contains(&c)
}

/// Lower-cases, replaces punctuation/quotes with spaces, collapses whitespace
/// runs and trims.
///
/// ```
/// use musekg::normalize_text;
/// assert_eq!(
///     normalize_text("Walden Precision Apparatus Limited (WPA Ltd)"),
///     "walden precision apparatus limited wpa ltd"
/// );
/// ```
pub fn normalize_text(s: &str) -> String {
    let replaced: String = s
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if is_stripped_punctuation(c) { ' ' } else { c })
        .collect();
    let mut out = String::with_capacity(replaced.len());
    for token in replaced.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(token);
    }
    out
}

/// Tokens of the normalized form of `s`.
pub fn tokens(s: &str) -> Vec<String> {
    normalize_text(s)
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Byte offset of the first token-aligned occurrence of `needle` in
/// `haystack`. Both must already be normalized.
pub(crate) fn find_token_aligned(haystack: &str, needle: &str) -> Option<usize> {
    token_aligned_occurrences(haystack, needle).into_iter().next()
}

/// Byte offsets of every token-aligned occurrence of `needle`.
pub(crate) fn token_aligned_occurrences(haystack: &str, needle: &str) -> Vec<usize> {
    let mut out = Vec::new();
    if needle.is_empty() {
        return out;
    }
    let bytes = haystack.as_bytes();
    let mut start = 0;
    while let Some(pos) = haystack[start..].find(needle) {
        let at = start + pos;
        let end = at + needle.len();
        let left_ok = at == 0 || bytes[at - 1] == b' ';
        let right_ok = end == haystack.len() || bytes[end] == b' ';
        if left_ok && right_ok {
            out.push(at);
        }
        start = at + haystack[at..].chars().next().map_or(1, char::len_utf8);
    }
    out
}
