//! Text normalization, tokenization, and rule-based lemmatization.
//!
//! Normalization folds non-ASCII to ASCII, then replaces code spans, HTML
//! tags, URLs, email addresses, and version numbers with the placeholder
//! tokens `[CODE]`, `[HTML]`, `[URL]`, `[EMAIL]`, `[ID]`. Replacement is
//! whole-span and single-pass: all matches are located on the folded input
//! before any substitution, with earlier pattern classes claiming spans
//! first, so the function is idempotent.

use regex::Regex;
use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

/// The five placeholder tokens, in replacement-priority order.
pub const PLACEHOLDERS: [&str; 5] = ["[CODE]", "[HTML]", "[URL]", "[EMAIL]", "[ID]"];

/// How many spans each placeholder class replaced.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PlaceholderCounts {
    pub code: usize,
    pub html: usize,
    pub url: usize,
    pub email: usize,
    pub id: usize,
}

impl PlaceholderCounts {
    pub fn add(&mut self, other: &PlaceholderCounts) {
        self.code += other.code;
        self.html += other.html;
        self.url += other.url;
        self.email += other.email;
        self.id += other.id;
    }

    pub fn total(&self) -> usize {
        self.code + self.html + self.url + self.email + self.id
    }
}

struct Patterns {
    fenced_code: Regex,
    inline_code: Regex,
    html: Regex,
    url: Regex,
    email: Regex,
    version: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| Patterns {
        fenced_code: Regex::new(r"(?s)```.*?```").unwrap(),
        inline_code: Regex::new(r"`[^`\n]+`").unwrap(),
        // Tag name must start with a letter and attributes may not contain
        // brackets, so spans that already hold a placeholder ("<a [CODE]>")
        // never re-match as tags.
        html: Regex::new(r"</?[A-Za-z][A-Za-z0-9]*(\s[^<>\[\]]*)?/?>").unwrap(),
        url: Regex::new(r"(https?://[^\s<>]+|www\.[^\s<>]+)").unwrap(),
        email: Regex::new(r"[A-Za-z0-9][A-Za-z0-9._%+-]*@[A-Za-z0-9.-]+\.[A-Za-z]{2,}").unwrap(),
        version: Regex::new(r"\bv?[0-9]+(\.[0-9]+)+\b").unwrap(),
    })
}

/// Maps non-ASCII characters to nearest-ASCII equivalents or drops them.
fn ascii_fold(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for ch in raw.chars() {
        if ch.is_ascii() {
            out.push(ch);
            continue;
        }
        match ch {
            'à' | 'á' | 'â' | 'ã' | 'ä' | 'å' => out.push('a'),
            'À' | 'Á' | 'Â' | 'Ã' | 'Ä' | 'Å' => out.push('A'),
            'è' | 'é' | 'ê' | 'ë' => out.push('e'),
            'È' | 'É' | 'Ê' | 'Ë' => out.push('E'),
            'ì' | 'í' | 'î' | 'ï' => out.push('i'),
            'Ì' | 'Í' | 'Î' | 'Ï' => out.push('I'),
            'ò' | 'ó' | 'ô' | 'õ' | 'ö' => out.push('o'),
            'Ò' | 'Ó' | 'Ô' | 'Õ' | 'Ö' => out.push('O'),
            'ù' | 'ú' | 'û' | 'ü' => out.push('u'),
            'Ù' | 'Ú' | 'Û' | 'Ü' => out.push('U'),
            'ñ' => out.push('n'),
            'Ñ' => out.push('N'),
            'ç' => out.push('c'),
            'Ç' => out.push('C'),
            'ý' | 'ÿ' => out.push('y'),
            'ß' => out.push_str("ss"),
            '\u{2018}' | '\u{2019}' | '\u{201A}' | '\u{2032}' => out.push('\''),
            '\u{201C}' | '\u{201D}' | '\u{201E}' | '\u{2033}' => out.push('"'),
            '\u{2010}'..='\u{2015}' | '\u{2212}' => out.push('-'),
            '\u{2026}' => out.push_str("..."),
            '\u{00A0}' | '\u{2000}'..='\u{200B}' | '\u{3000}' => out.push(' '),
            '\u{00D7}' => out.push('x'),
            '\u{00F7}' => out.push('/'),
            // Emojis and everything else without a close ASCII form.
            _ => {}
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum SpanClass {
    Code,
    Html,
    Url,
    Email,
    Id,
}

impl SpanClass {
    fn token(self) -> &'static str {
        match self {
            SpanClass::Code => "[CODE]",
            SpanClass::Html => "[HTML]",
            SpanClass::Url => "[URL]",
            SpanClass::Email => "[EMAIL]",
            SpanClass::Id => "[ID]",
        }
    }
}

/// Normalizes raw chat text, returning the result and per-class replacement
/// counts.
pub fn normalize_text_counted(raw: &str) -> (String, PlaceholderCounts) {
    let folded = ascii_fold(raw);
    let p = patterns();

    // Claim spans class by class; a lower-priority match that overlaps a
    // claimed span is skipped.
    let mut claimed: Vec<(usize, usize, SpanClass)> = Vec::new();
    let overlaps = |claimed: &[(usize, usize, SpanClass)], s: usize, e: usize| {
        claimed.iter().any(|&(cs, ce, _)| s < ce && cs < e)
    };
    let passes: [(&Regex, SpanClass); 6] = [
        (&p.fenced_code, SpanClass::Code),
        (&p.inline_code, SpanClass::Code),
        (&p.html, SpanClass::Html),
        (&p.url, SpanClass::Url),
        (&p.email, SpanClass::Email),
        (&p.version, SpanClass::Id),
    ];
    for (re, class) in passes {
        for m in re.find_iter(&folded) {
            let (mut start, mut end) = (m.start(), m.end());
            if class == SpanClass::Url {
                // Trim sentence punctuation that the greedy match swallowed.
                while end > start {
                    let last = folded.as_bytes()[end - 1];
                    if matches!(last, b'.' | b',' | b';' | b':' | b'!' | b'?' | b')' | b'\'' | b'"')
                    {
                        end -= 1;
                    } else {
                        break;
                    }
                }
                if end == start {
                    continue;
                }
            }
            if !overlaps(&claimed, start, end) {
                claimed.push((start, end, class));
            }
            let _ = &mut start;
        }
    }
    claimed.sort_by_key(|&(s, _, _)| s);

    let mut counts = PlaceholderCounts::default();
    let mut out = String::with_capacity(folded.len());
    let mut cursor = 0;
    for (start, end, class) in claimed {
        out.push_str(&folded[cursor..start]);
        out.push_str(class.token());
        cursor = end;
        match class {
            SpanClass::Code => counts.code += 1,
            SpanClass::Html => counts.html += 1,
            SpanClass::Url => counts.url += 1,
            SpanClass::Email => counts.email += 1,
            SpanClass::Id => counts.id += 1,
        }
    }
    out.push_str(&folded[cursor..]);
    (out, counts)
}

/// Normalizes raw chat text. Total and idempotent.
pub fn normalize_text(raw: &str) -> String {
    normalize_text_counted(raw).0
}

/// Rule-based English suffix lemmatizer with an exception dictionary.
///
/// The default dictionary is compiled in; [`Lemmatizer::from_file`] loads a
/// replacement from a `surface<TAB>lemma` file.
#[derive(Debug, Clone)]
pub struct Lemmatizer {
    exceptions: HashMap<String, String>,
}

impl Default for Lemmatizer {
    fn default() -> Self {
        Self::parse(include_str!("../../data/lemma_exceptions.tsv"))
            .expect("bundled exception dictionary is well-formed")
    }
}

impl Lemmatizer {
    pub fn from_file(path: &Path) -> Result<Self, std::io::Error> {
        let content = std::fs::read_to_string(path)?;
        Self::parse(&content).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    fn parse(content: &str) -> Result<Self, String> {
        let mut exceptions = HashMap::new();
        for (i, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (surface, lemma) = line
                .split_once('\t')
                .ok_or_else(|| format!("line {}: expected surface<TAB>lemma", i + 1))?;
            exceptions.insert(surface.to_lowercase(), lemma.to_lowercase());
        }
        Ok(Self { exceptions })
    }

    /// Lemmatizes one lowercase alphabetic token.
    pub fn lemma(&self, token: &str) -> String {
        if let Some(l) = self.exceptions.get(token) {
            return l.clone();
        }
        if !token.chars().all(|c| c.is_ascii_lowercase()) {
            return token.to_string();
        }
        let n = token.len();
        if n >= 5 && token.ends_with("ies") {
            return format!("{}y", &token[..n - 3]);
        }
        if n >= 5 && token.ends_with("ied") {
            return format!("{}y", &token[..n - 3]);
        }
        if token.ends_with("sses")
            || token.ends_with("xes")
            || token.ends_with("zes")
            || token.ends_with("ches")
            || token.ends_with("shes")
        {
            return token[..n - 2].to_string();
        }
        if n >= 6 && token.ends_with("ing") {
            return dedouble(&token[..n - 3]);
        }
        if n >= 5 && token.ends_with("ed") && !token.ends_with("eed") {
            return dedouble(&token[..n - 2]);
        }
        if n >= 4
            && token.ends_with('s')
            && !token.ends_with("ss")
            && !token.ends_with("us")
            && !token.ends_with("is")
        {
            return token[..n - 1].to_string();
        }
        token.to_string()
    }
}

/// Collapses a trailing doubled consonant left by -ing/-ed stripping
/// ("runn" -> "run"), leaving ll/ss/ff and vowel pairs alone.
fn dedouble(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 2 && b[n - 1] == b[n - 2] && matches!(b[n - 1], b'b' | b'd' | b'g' | b'm' | b'n' | b'p' | b'r' | b't')
    {
        return stem[..n - 1].to_string();
    }
    stem.to_string()
}

/// Splits normalized text into tokens and lemmatizes them.
///
/// Placeholder tokens stay atomic and uppercase; words are lowercased and
/// passed through the lemmatizer; each punctuation character is its own
/// token. An apostrophe between letters stays inside its word.
pub fn tokenize_and_lemmatize(norm: &str, lemmatizer: &Lemmatizer) -> Vec<String> {
    let bytes = norm.as_bytes();
    let n = bytes.len();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < n {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == '[' {
            if let Some(ph) = PLACEHOLDERS
                .iter()
                .find(|p| norm[i..].starts_with(**p))
            {
                tokens.push((*ph).to_string());
                i += ph.len();
                continue;
            }
        }
        if c.is_ascii_alphanumeric() {
            let start = i;
            while i < n {
                let b = bytes[i] as char;
                if b.is_ascii_alphanumeric() {
                    i += 1;
                } else if b == '\''
                    && i > start
                    && i + 1 < n
                    && (bytes[i + 1] as char).is_ascii_alphanumeric()
                {
                    i += 1;
                } else {
                    break;
                }
            }
            let word = norm[start..i].to_lowercase();
            tokens.push(lemmatizer.lemma(&word));
            continue;
        }
        // Any other character is a single-char token.
        let ch_len = c.len_utf8();
        tokens.push(norm[i..i + ch_len].to_string());
        i += ch_len;
    }
    tokens
}
