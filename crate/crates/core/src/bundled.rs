//! Worlds, lexicon and fixtures shipped with the repository, embedded so the
//! binaries work from any directory.

use crate::oracle::LexiconRules;
use crate::world::WorldSpec;

pub const CELLAR_JSON: &str = include_str!("../../../worlds/cellar.world.json");
pub const HOUSE_JSON: &str = include_str!("../../../worlds/house.world.json");
pub const LEXICON_JSON: &str = include_str!("../../../lexicon/default.lexicon.json");
pub const REFERENCE_SCORES_CSV: &str = include_str!("../../../fixtures/reference_scores.csv");

pub fn cellar() -> WorldSpec {
    WorldSpec::from_json(CELLAR_JSON).expect("bundled cellar world is valid")
}

pub fn house() -> WorldSpec {
    WorldSpec::from_json(HOUSE_JSON).expect("bundled house world is valid")
}

pub fn worlds() -> Vec<WorldSpec> {
    vec![cellar(), house()]
}

pub fn world(id: &str) -> Option<WorldSpec> {
    worlds().into_iter().find(|w| w.id == id)
}

pub fn lexicon() -> LexiconRules {
    LexiconRules::from_json(LEXICON_JSON).expect("bundled lexicon is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::personality::TraitId;
    use crate::world::replay_walkthrough;

    #[test]
    fn cellar_shape() {
        let w = cellar();
        assert_eq!(w.places.len(), 15);
        assert_eq!(w.max_score, 10);
        assert_eq!(replay_walkthrough(&w).unwrap().0, 10);
    }

    #[test]
    fn lexicon_covers_all_traits() {
        let l = lexicon();
        assert_eq!(l.traits.len(), 8);
        for t in TraitId::ALL {
            assert!(!l.traits[&t].is_empty());
        }
    }
}
