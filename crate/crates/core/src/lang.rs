//! Programming-language identifiers and display metadata.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A programming-language identifier.
///
/// Stored lowercase so that `"CPP"`, `"Cpp"` and `"cpp"` compare equal. The
/// identifier doubles as the fenced-code-block tag for languages in the
/// built-in descriptor table.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Language(String);

impl Language {
    pub fn new(id: impl AsRef<str>) -> Self {
        Language(id.as_ref().trim().to_ascii_lowercase())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Descriptor from the built-in table, or a synthesized one whose long
    /// name is the identifier itself.
    pub fn descriptor(&self) -> LanguageDescriptor {
        builtin_descriptors()
            .iter()
            .find(|d| d.short_name == self.0)
            .cloned()
            .unwrap_or_else(|| LanguageDescriptor {
                long_name: self.0.clone(),
                short_name: self.0.clone(),
            })
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Language {
    fn from(s: &str) -> Self {
        Language::new(s)
    }
}

/// Human-readable name plus fenced-block tag for one programming language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageDescriptor {
    /// Fills `{lg_long}` in prompt templates, e.g. `C++`.
    pub long_name: String,
    /// Fills `{lg_short}`: the Markdown fence tag, e.g. `cpp`. Never empty,
    /// never contains whitespace.
    pub short_name: String,
}

impl LanguageDescriptor {
    pub fn new(long_name: impl Into<String>, short_name: impl Into<String>) -> Self {
        let short_name = short_name.into();
        debug_assert!(!short_name.is_empty() && !short_name.contains(char::is_whitespace));
        LanguageDescriptor {
            long_name: long_name.into(),
            short_name,
        }
    }

    pub fn language(&self) -> Language {
        Language::new(&self.short_name)
    }
}

/// The built-in (long, short) descriptor table: the eight SFT training
/// languages plus the three transfer-target languages.
pub fn builtin_descriptors() -> &'static [LanguageDescriptor] {
    use std::sync::OnceLock;
    static TABLE: OnceLock<Vec<LanguageDescriptor>> = OnceLock::new();
    TABLE.get_or_init(|| {
        [
            ("Python", "python"),
            ("C", "c"),
            ("C++", "cpp"),
            ("Java", "java"),
            ("C#", "csharp"),
            ("JavaScript", "javascript"),
            ("Bash", "bash"),
            ("Lua", "lua"),
            ("Go", "go"),
            ("PHP", "php"),
            ("Ruby", "ruby"),
        ]
        .iter()
        .map(|(l, s)| LanguageDescriptor::new(*l, *s))
        .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifiers_normalize_to_lowercase() {
        assert_eq!(Language::new("CPP"), Language::new("cpp"));
        assert_eq!(Language::new(" Go "), Language::new("go"));
    }

    #[test]
    fn builtin_table_has_eleven_languages() {
        let table = builtin_descriptors();
        assert_eq!(table.len(), 11);
        for d in table {
            assert!(!d.short_name.is_empty());
            assert!(!d.short_name.contains(char::is_whitespace));
        }
    }

    #[test]
    fn descriptor_lookup_and_fallback() {
        assert_eq!(Language::new("cpp").descriptor().long_name, "C++");
        assert_eq!(Language::new("csharp").descriptor().long_name, "C#");
        let odd = Language::new("zig");
        assert_eq!(odd.descriptor().long_name, "zig");
    }
}
