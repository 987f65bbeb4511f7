//! Flat `key: value` text files, used for project and pool configuration
//! and for emitted stats reports. Lines starting with `#` and blank lines
//! are ignored.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

pub fn parse_kv(content: &str, path: &Path) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in content.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed.split_once(':').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            reason: "expected `key: value`".to_string(),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                reason: "empty key".to_string(),
            });
        }
        if map
            .insert(key.to_string(), value.trim().to_string())
            .is_some()
        {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                reason: format!("duplicate key `{key}`"),
            });
        }
    }
    Ok(map)
}

pub fn read_kv_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let content = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_kv(&content, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_skips_comments() {
        let text = "# comment\noverlap: 7\n\nexam_size: 10\n";
        let map = parse_kv(text, Path::new("test")).unwrap();
        assert_eq!(map["overlap"], "7");
        assert_eq!(map["exam_size"], "10");
        assert_eq!(map.len(), 2);
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse_kv("ok: 1\nbroken line\n", Path::new("f")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_duplicates() {
        assert!(parse_kv("a: 1\na: 2\n", Path::new("f")).is_err());
    }
}
