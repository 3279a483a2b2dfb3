//! Built-in example specs, loaded from the committed fixture documents.

use crate::error::{Error, Result};
use crate::spec_model::{parse_spec, DiffusionSpec};

const FIXTURES: [(&str, &str); 5] = [
    ("bm", include_str!("../fixtures/bm.json")),
    ("drift", include_str!("../fixtures/drift.json")),
    ("exa1", include_str!("../fixtures/exa1.json")),
    ("exa2", include_str!("../fixtures/exa2.json")),
    ("bessel-glue", include_str!("../fixtures/bessel-glue.json")),
];

pub fn builtin_names() -> Vec<&'static str> {
    FIXTURES.iter().map(|(n, _)| *n).collect()
}

/// The fixture document for `name`, verbatim.
pub fn builtin_document(name: &str) -> Result<&'static str> {
    FIXTURES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, doc)| *doc)
        .ok_or_else(|| Error::UnknownExample(name.to_string()))
}

pub fn builtin_example(name: &str) -> Result<DiffusionSpec> {
    parse_spec(builtin_document(name)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec_model::{Direction, Piece};

    #[test]
    fn fixtures_are_canonical() {
        for name in builtin_names() {
            let spec = builtin_example(name).unwrap();
            assert_eq!(spec.name, name);
            assert_eq!(spec.to_json(), builtin_document(name).unwrap().trim_end(), "{name}");
        }
    }

    #[test]
    fn shapes() {
        let drift = builtin_example("drift").unwrap();
        match &drift.pieces[..] {
            [Piece::ShuntSegment(s)] => assert_eq!(s.direction, Direction::Right),
            other => panic!("{other:?}"),
        }
        assert_eq!(builtin_example("exa1").unwrap().pieces.len(), 3);
        assert!(matches!(builtin_example("nope"), Err(Error::UnknownExample(_))));
    }
}
