//! Category lexicon with literal and prefix (`word*`) patterns.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::ProxyError;

/// Categories the beauty model reads.
pub const POSITIVE_CATEGORY: &str = "posemo";
pub const NEGATIVE_CATEGORIES: [&str; 5] = ["negemo", "swear", "anx", "sad", "anger"];

/// Small open lexicon covering the positive and negative emotion categories,
/// in the `category<TAB>pattern` format.
pub const DEFAULT_LEXICON_TSV: &str = include_str!("../../data/lexicon.tsv");

/// English stopwords, one per line.
pub const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

#[derive(Debug, Clone, PartialEq)]
pub struct LiwcLexicon {
    /// Category name to its patterns, in file order.
    categories: BTreeMap<String, Vec<String>>,
    names: Vec<String>,
    literal: HashMap<String, Vec<usize>>,
    prefix: HashMap<String, Vec<usize>>,
    max_prefix_len: usize,
}

/// Per-category match counts for a batch of tokens.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CategoryCounts {
    /// Indexed like [`LiwcLexicon::category_names`].
    pub per_category: Vec<u64>,
    /// Tokens that matched at least one category.
    pub classified: u64,
    pub unclassified: u64,
}

impl CategoryCounts {
    pub fn add(&mut self, other: &CategoryCounts) {
        if self.per_category.len() < other.per_category.len() {
            self.per_category.resize(other.per_category.len(), 0);
        }
        for (a, b) in self.per_category.iter_mut().zip(&other.per_category) {
            *a += b;
        }
        self.classified += other.classified;
        self.unclassified += other.unclassified;
    }
}

impl LiwcLexicon {
    pub fn from_patterns<I, C, P>(entries: I) -> Result<Self, ProxyError>
    where
        I: IntoIterator<Item = (C, P)>,
        C: Into<String>,
        P: Into<String>,
    {
        let mut categories: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (c, p) in entries {
            let c = c.into();
            let p = p.into().trim().to_lowercase();
            if c.trim().is_empty() || p.is_empty() || p == "*" {
                return Err(ProxyError::Lexicon(format!("bad entry {c:?} / {p:?}")));
            }
            categories.entry(c.trim().to_string()).or_default().push(p);
        }
        if categories.is_empty() {
            return Err(ProxyError::Lexicon("no categories".into()));
        }
        let names: Vec<String> = categories.keys().cloned().collect();
        let mut literal: HashMap<String, Vec<usize>> = HashMap::new();
        let mut prefix: HashMap<String, Vec<usize>> = HashMap::new();
        for (idx, patterns) in categories.values().enumerate() {
            for p in patterns {
                let (map, key) = match p.strip_suffix('*') {
                    Some(stem) => (&mut prefix, stem),
                    None => (&mut literal, p.as_str()),
                };
                let cats = map.entry(key.to_string()).or_default();
                if !cats.contains(&idx) {
                    cats.push(idx);
                }
            }
        }
        let max_prefix_len = prefix.keys().map(|k| k.chars().count()).max().unwrap_or(0);
        Ok(Self {
            categories,
            names,
            literal,
            prefix,
            max_prefix_len,
        })
    }

    /// Parses `category<TAB>pattern` lines; blank lines and `#` comments are
    /// skipped.
    pub fn parse_tsv(text: &str) -> Result<Self, ProxyError> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let Some((cat, pat)) = line.split_once('\t') else {
                return Err(ProxyError::Lexicon(format!("line {}: expected category<TAB>pattern", n + 1)));
            };
            entries.push((cat.to_string(), pat.to_string()));
        }
        Self::from_patterns(entries)
    }

    pub fn default_lexicon() -> Self {
        Self::parse_tsv(DEFAULT_LEXICON_TSV).expect("bundled lexicon parses")
    }

    pub fn category_names(&self) -> &[String] {
        &self.names
    }

    pub fn category_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn patterns(&self, category: &str) -> Option<&[String]> {
        self.categories.get(category).map(Vec::as_slice)
    }

    /// Every category with a pattern matching `token`, ascending.
    pub fn categories_of(&self, token: &str) -> BTreeSet<usize> {
        let mut hits: BTreeSet<usize> = BTreeSet::new();
        if let Some(c) = self.literal.get(token) {
            hits.extend(c);
        }
        // every char-boundary prefix of the token, including the token itself
        for (end, ch) in token.char_indices().take(self.max_prefix_len) {
            let stem = &token[..end + ch.len_utf8()];
            if let Some(c) = self.prefix.get(stem) {
                hits.extend(c);
            }
        }
        hits
    }

    /// A token counts once for every category it matches.
    pub fn classify_tags<S: AsRef<str>>(&self, tokens: &[S]) -> CategoryCounts {
        let mut counts = CategoryCounts {
            per_category: vec![0; self.names.len()],
            ..Default::default()
        };
        for t in tokens {
            let hits = self.categories_of(t.as_ref());
            if hits.is_empty() {
                counts.unclassified += 1;
            } else {
                counts.classified += 1;
                for c in hits {
                    counts.per_category[c] += 1;
                }
            }
        }
        counts
    }

    /// Fails unless every category the beauty model needs is present.
    pub fn require_model_categories(&self) -> Result<(), ProxyError> {
        for c in std::iter::once(POSITIVE_CATEGORY).chain(NEGATIVE_CATEGORIES) {
            if self.category_index(c).is_none() {
                return Err(ProxyError::Lexicon(format!("missing category {c:?}")));
            }
        }
        Ok(())
    }
}

pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

/// Lowercases tags and drops stopwords and empty strings, keeping order.
pub fn clean_tags<S: AsRef<str>>(tags: &[S], stopwords: &HashSet<String>) -> Vec<String> {
    tags.iter()
        .map(|t| t.as_ref().trim().to_lowercase())
        .filter(|t| !t.is_empty() && !stopwords.contains(t))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lex() -> LiwcLexicon {
        LiwcLexicon::from_patterns([
            ("affect", "hostil*"),
            ("negemo", "hostil*"),
            ("anger", "hostil*"),
            ("posemo", "happy"),
            ("posemo", "happi*"),
            ("affect", "happy"),
        ])
        .unwrap()
    }

    #[test]
    fn cleaning() {
        let stop: HashSet<String> = ["the".to_string()].into();
        assert_eq!(clean_tags(&["Happy", "THE", "london"], &stop), vec!["happy", "london"]);
        assert!(clean_tags::<&str>(&[], &stop).is_empty());
        assert!(clean_tags(&["The", "the", ""], &stop).is_empty());
    }

    #[test]
    fn prefix_pattern_hits_every_category() {
        let l = lex();
        let c = l.classify_tags(&["hostility"]);
        for name in ["affect", "negemo", "anger"] {
            assert_eq!(c.per_category[l.category_index(name).unwrap()], 1, "{name}");
        }
        assert_eq!(c.per_category[l.category_index("posemo").unwrap()], 0);
        assert_eq!((c.classified, c.unclassified), (1, 0));
    }

    #[test]
    fn unmatched_and_literal() {
        let l = LiwcLexicon::from_patterns([("posemo", "happy"), ("negemo", "sad")]).unwrap();
        let c = l.classify_tags(&["zzz"]);
        assert_eq!((c.classified, c.unclassified), (0, 1));
        let c = l.classify_tags(&["happy"]);
        assert_eq!(c.per_category, vec![0, 1]);
        // a literal never matches as a prefix
        assert_eq!(l.classify_tags(&["happyish"]).unclassified, 1);
    }

    #[test]
    fn one_count_per_category_even_with_two_patterns() {
        let l = lex();
        let c = l.classify_tags(&["happy"]);
        assert_eq!(c.per_category[l.category_index("posemo").unwrap()], 1);
        assert_eq!(c.per_category[l.category_index("affect").unwrap()], 1);
    }

    #[test]
    fn tsv_parsing() {
        let l = LiwcLexicon::parse_tsv("# comment\nposemo\tgood\n\nnegemo\tbad*\n").unwrap();
        assert_eq!(l.category_names(), ["negemo", "posemo"]);
        assert!(LiwcLexicon::parse_tsv("posemo good").is_err());
        assert!(LiwcLexicon::parse_tsv("").is_err());
    }

    #[test]
    fn bundled_lexicon_has_model_categories() {
        let l = LiwcLexicon::default_lexicon();
        l.require_model_categories().unwrap();
        let c = l.classify_tags(&["hostility"]);
        for name in ["affect", "negemo", "anger"] {
            assert_eq!(c.per_category[l.category_index(name).unwrap()], 1);
        }
        let stop = parse_stopwords(DEFAULT_STOPWORDS);
        assert!(stop.contains("the"));
    }

    proptest! {
        #[test]
        fn classification_ignores_letter_case(tags in prop::collection::vec("[a-zA-Z]{1,10}", 0..12), flips in any::<u64>()) {
            let l = LiwcLexicon::default_lexicon();
            let stop = parse_stopwords(DEFAULT_STOPWORDS);
            let flipped: Vec<String> = tags
                .iter()
                .enumerate()
                .map(|(i, t)| if flips >> (i % 64) & 1 == 1 { t.to_uppercase() } else { t.to_lowercase() })
                .collect();
            prop_assert_eq!(
                l.classify_tags(&clean_tags(&tags, &stop)),
                l.classify_tags(&clean_tags(&flipped, &stop))
            );
        }
    }
}
