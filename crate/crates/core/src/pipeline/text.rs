//! Sentence splitting and tokenization for plain-text corpora.

const ABBREVIATIONS: &[&str] = &[
    "mt", "mr", "mrs", "ms", "dr", "st", "jr", "sr", "prof", "vs", "etc", "inc", "ltd", "co",
    "corp", "no", "fig", "approx", "gen", "gov", "sen", "rep", "jan", "feb", "mar", "apr", "jun",
    "jul", "aug", "sep", "sept", "oct", "nov", "dec", "e.g", "i.e", "a.m", "p.m", "u.s",
];

fn is_sentence_end(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '”' | '’')
}

/// Word that ends right before byte offset `end` (exclusive of the punctuation).
fn preceding_word(text: &str, end: usize) -> &str {
    let start = text[..end]
        .rfind(char::is_whitespace)
        .map(|i| i + text[i..].chars().next().map_or(1, char::len_utf8))
        .unwrap_or(0);
    text[start..end].trim_start_matches(|c: char| !c.is_alphanumeric())
}

fn is_abbreviation(word: &str) -> bool {
    let lower = word.to_lowercase();
    let mut chars = word.chars();
    let single_initial =
        matches!((chars.next(), chars.next()), (Some(c), None) if c.is_uppercase());
    single_initial || ABBREVIATIONS.contains(&lower.as_str())
}

fn split_paragraph(text: &str, out: &mut Vec<String>) {
    let mut start = 0;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if !is_sentence_end(c) {
            i += 1;
            continue;
        }
        // absorb runs like "?!" and closing quotes
        let mut j = i + 1;
        while j < chars.len() && (is_sentence_end(chars[j].1) || is_closer(chars[j].1)) {
            j += 1;
        }
        let mut k = j;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        let boundary = k > j
            && k < chars.len()
            && (chars[k].1.is_uppercase() || matches!(chars[k].1, '"' | '“' | '\'' | '('))
            && !(c == '.' && is_abbreviation(preceding_word(text, pos)));
        if boundary {
            let end = chars.get(j).map_or(text.len(), |&(p, _)| p);
            let sentence = text[start..end].trim();
            if !sentence.is_empty() {
                out.push(sentence.to_string());
            }
            start = chars[k].0;
            i = k;
        } else {
            i = j;
        }
    }
    let rest = text[start..].trim();
    if !rest.is_empty() {
        out.push(rest.to_string());
    }
}

/// Splits on sentence-final punctuation followed by whitespace and a capital.
/// Blank lines always end a sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut paragraph = String::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            split_paragraph(&paragraph, &mut out);
            paragraph.clear();
        } else {
            if !paragraph.is_empty() {
                paragraph.push(' ');
            }
            paragraph.push_str(line.trim());
        }
    }
    split_paragraph(&paragraph, &mut out);
    out
}

fn is_minus(c: char) -> bool {
    matches!(c, '-' | '−')
}

fn is_degree(c: char) -> bool {
    matches!(c, '°' | 'º')
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '’')
}

fn is_possessive(chars: &[char], i: usize) -> bool {
    is_apostrophe(chars[i])
        && matches!(chars.get(i + 1), Some('s' | 'S'))
        && chars.get(i + 2).is_none_or(|c| !c.is_alphanumeric())
}

/// Whitespace tokenization with punctuation detached.
///
/// Numbers keep their decimal points, comma grouping and clock colons; a leading
/// minus stays attached. Units glued to numbers (`50cm`) are split off, a degree
/// sign fuses with the letters after it (`°F`), and possessive `'s` becomes its
/// own token.
pub fn tokenize(sentence: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in sentence.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let n = chars.len();
        let mut i = 0;
        while i < n {
            let c = chars[i];
            let next = chars.get(i + 1).copied();
            let next_digit = next.is_some_and(|d| d.is_ascii_digit());
            let start = i;
            if c.is_ascii_digit() || (i == 0 && (is_minus(c) || c == '.') && next_digit) {
                i += 1;
                while i < n {
                    if chars[i].is_ascii_digit() {
                        i += 1;
                    } else if matches!(chars[i], ',' | '.' | ':')
                        && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())
                    {
                        i += 2;
                    } else {
                        break;
                    }
                }
            } else if is_degree(c) && next.is_some_and(char::is_alphabetic) {
                i += 1;
                while i < n && chars[i].is_alphabetic() {
                    i += 1;
                }
            } else if c.is_alphanumeric() {
                i += 1;
                while i < n {
                    if chars[i].is_alphanumeric() {
                        i += 1;
                    } else if matches!(chars[i], '\'' | '’' | '-' | '/')
                        && chars.get(i + 1).is_some_and(|d| d.is_alphanumeric())
                        && !is_possessive(&chars, i)
                    {
                        i += 2;
                    } else {
                        break;
                    }
                }
            } else if i > 0 && is_possessive(&chars, i) {
                i += 2;
            } else {
                i += 1;
            }
            out.push(chars[start..i].iter().collect());
        }
    }
    out
}
