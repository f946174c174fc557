//! Grade buckets and the free-text grade mapper.
//!
//! Advertised grades are free text ("Grade 7", "SEO", "Higher Executive
//! Officer / HEO", ...). The mapper tokenises the raw text, scans it left to
//! right taking the longest alias at each position, and resolves to a bucket
//! only when every alias hit agrees. Text naming several buckets ("AO / EO")
//! or none at all maps to [`GradeBucket::Unmapped`].

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

/// Responsibility tier used for joins against workforce statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GradeBucket {
    AaAo,
    Eo,
    HeoSeo,
    G6G7,
    Scs,
    Unmapped,
}

impl GradeBucket {
    pub const MAPPED: [GradeBucket; 5] = [
        GradeBucket::AaAo,
        GradeBucket::Eo,
        GradeBucket::HeoSeo,
        GradeBucket::G6G7,
        GradeBucket::Scs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GradeBucket::AaAo => "AA/AO",
            GradeBucket::Eo => "EO",
            GradeBucket::HeoSeo => "HEO/SEO",
            GradeBucket::G6G7 => "G6/G7",
            GradeBucket::Scs => "SCS",
            GradeBucket::Unmapped => "Unmapped",
        }
    }

    pub fn is_mapped(self) -> bool {
        self != GradeBucket::Unmapped
    }
}

impl fmt::Display for GradeBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown grade bucket `{0}`")]
pub struct UnknownGradeBucket(pub String);

impl FromStr for GradeBucket {
    type Err = UnknownGradeBucket;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim();
        for b in GradeBucket::MAPPED.iter().chain(core::iter::once(&GradeBucket::Unmapped)) {
            if b.as_str().eq_ignore_ascii_case(key) {
                return Ok(*b);
            }
        }
        Err(UnknownGradeBucket(key.to_string()))
    }
}

const DEFAULT_ALIASES: &[(&str, GradeBucket)] = &[
    ("aa/ao", GradeBucket::AaAo),
    ("aa", GradeBucket::AaAo),
    ("ao", GradeBucket::AaAo),
    ("administrative assistant", GradeBucket::AaAo),
    ("administrative officer", GradeBucket::AaAo),
    ("admin assistant", GradeBucket::AaAo),
    ("admin officer", GradeBucket::AaAo),
    ("eo", GradeBucket::Eo),
    ("executive officer", GradeBucket::Eo),
    ("heo/seo", GradeBucket::HeoSeo),
    ("heo", GradeBucket::HeoSeo),
    ("seo", GradeBucket::HeoSeo),
    ("higher executive officer", GradeBucket::HeoSeo),
    ("senior executive officer", GradeBucket::HeoSeo),
    ("g6/g7", GradeBucket::G6G7),
    ("g6", GradeBucket::G6G7),
    ("g7", GradeBucket::G6G7),
    ("grade 6", GradeBucket::G6G7),
    ("grade 7", GradeBucket::G6G7),
    ("grade 6/7", GradeBucket::G6G7),
    ("grade 7/6", GradeBucket::G6G7),
    ("scs", GradeBucket::Scs),
    ("senior civil service", GradeBucket::Scs),
    ("deputy director", GradeBucket::Scs),
    ("director general", GradeBucket::Scs),
    ("unmapped", GradeBucket::Unmapped),
];

fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Alias table mapping free-text grades onto buckets.
#[derive(Debug, Clone, PartialEq)]
pub struct GradeMap {
    // (alias tokens, bucket), kept sorted by descending token count.
    aliases: Vec<(Vec<String>, GradeBucket)>,
}

impl Default for GradeMap {
    fn default() -> Self {
        let mut map = GradeMap { aliases: Vec::new() };
        for (alias, bucket) in DEFAULT_ALIASES {
            map.insert(alias, *bucket);
        }
        map
    }
}

impl GradeMap {
    /// A map with no aliases at all; everything maps to `Unmapped`.
    pub fn empty() -> Self {
        GradeMap { aliases: Vec::new() }
    }

    /// Add (or re-point) an alias. Aliases are matched on alphanumeric tokens,
    /// so punctuation and case in `alias` are ignored.
    pub fn insert(&mut self, alias: &str, bucket: GradeBucket) {
        let toks = tokens(alias);
        if toks.is_empty() {
            return;
        }
        if let Some(slot) = self.aliases.iter_mut().find(|(t, _)| *t == toks) {
            slot.1 = bucket;
            return;
        }
        self.aliases.push((toks, bucket));
        // stable: equal-length aliases keep insertion order
        self.aliases.sort_by(|a, b| b.0.len().cmp(&a.0.len()));
    }

    pub fn len(&self) -> usize {
        self.aliases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aliases.is_empty()
    }

    /// Map raw grade text to a bucket. Total: unknown or ambiguous text is
    /// `Unmapped`.
    pub fn map(&self, grade_raw: &str) -> GradeBucket {
        let toks = tokens(grade_raw);
        let mut found: Option<GradeBucket> = None;
        let mut i = 0;
        while i < toks.len() {
            let hit = self.aliases.iter().find(|(alias, _)| {
                alias.len() <= toks.len() - i && toks[i..i + alias.len()] == alias[..]
            });
            match hit {
                Some((alias, bucket)) => {
                    match found {
                        None => found = Some(*bucket),
                        Some(prev) if prev == *bucket => {}
                        Some(_) => return GradeBucket::Unmapped,
                    }
                    i += alias.len();
                }
                None => i += 1,
            }
        }
        found.unwrap_or(GradeBucket::Unmapped)
    }
}

/// Map with the shipped default alias table.
pub fn map_grade(grade_raw: &str) -> GradeBucket {
    GradeMap::default().map(grade_raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_examples() {
        assert_eq!(map_grade("Senior Executive Officer"), GradeBucket::HeoSeo);
        assert_eq!(map_grade(""), GradeBucket::Unmapped);
        assert_eq!(map_grade("grade 7"), GradeBucket::G6G7);
    }

    #[test]
    fn case_and_whitespace_insensitive() {
        assert_eq!(map_grade("  GRADE   7 "), GradeBucket::G6G7);
        assert_eq!(map_grade("Higher Executive Officer (HEO)"), GradeBucket::HeoSeo);
        assert_eq!(map_grade("Executive Officer"), GradeBucket::Eo);
        assert_eq!(map_grade("SCS Pay Band 1"), GradeBucket::Scs);
    }

    #[test]
    fn several_buckets_are_ambiguous() {
        assert_eq!(map_grade("AO, EO, HEO"), GradeBucket::Unmapped);
        assert_eq!(map_grade("Industrial"), GradeBucket::Unmapped);
        assert_eq!(map_grade("Other"), GradeBucket::Unmapped);
    }

    #[test]
    fn idempotent_on_bucket_names() {
        for b in GradeBucket::MAPPED.iter().chain([GradeBucket::Unmapped].iter()) {
            assert_eq!(map_grade(b.as_str()), *b);
            assert_eq!(b.as_str().parse::<GradeBucket>().unwrap(), *b);
        }
    }

    #[test]
    fn custom_aliases_override_defaults() {
        let mut map = GradeMap::default();
        map.insert("Band B", GradeBucket::Eo);
        map.insert("eo", GradeBucket::HeoSeo);
        assert_eq!(map.map("band b"), GradeBucket::Eo);
        assert_eq!(map.map("EO"), GradeBucket::HeoSeo);
    }
}
