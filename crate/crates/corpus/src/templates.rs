use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CorpusError, Result};

/// Which headline register an article draws from. Satire headlines pair
/// ordinary entities with ridiculous contexts; regular ones stay mundane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Mundane,
    Absurd,
}

/// Skeletons with `{0}`/`{1}` slots plus the word lists that fill them.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateSets {
    #[serde(default = "default_mundane")]
    pub mundane: Vec<String>,
    #[serde(default = "default_mundane_fillers")]
    pub mundane_fillers: [Vec<String>; 2],
    #[serde(default = "default_absurd")]
    pub absurd: Vec<String>,
    #[serde(default = "default_absurd_fillers")]
    pub absurd_fillers: [Vec<String>; 2],
}

impl Default for TemplateSets {
    fn default() -> Self {
        TemplateSets {
            mundane: default_mundane(),
            mundane_fillers: default_mundane_fillers(),
            absurd: default_absurd(),
            absurd_fillers: default_absurd_fillers(),
        }
    }
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn default_mundane() -> Vec<String> {
    strings(&[
        "council approves {0} budget for {1} district",
        "local {1} library extends {0} weekend hours",
        "city planners review {0} proposal for {1} road",
        "regional {0} report shows steady growth in {1}",
        "school board schedules {0} meeting on {1} repairs",
        "transit agency adds {0} service to {1} line",
        "committee publishes {0} findings on {1} maintenance",
        "mayor opens {0} community center near {1} park",
    ])
}

fn default_mundane_fillers() -> [Vec<String>; 2] {
    [
        strings(&[
            "annual",
            "quarterly",
            "revised",
            "updated",
            "preliminary",
            "joint",
            "municipal",
            "final",
        ]),
        strings(&[
            "riverside",
            "harbor",
            "downtown",
            "northern",
            "elmwood",
            "central",
            "western",
            "lakeview",
        ]),
    ]
}

fn default_absurd() -> Vec<String> {
    strings(&[
        "area {0} declares himself {1} emperor after lunch",
        "local {0} demands recount of {1} stars",
        "{0} union insists gravity is {1} propaganda",
        "town {0} announces plan to outlaw {1} tuesdays",
        "experts warn of {0} shortage caused by {1} ghosts",
        "nations leading {0} vows to marry {1} weather",
        "report finds every {0} secretly governed by {1} pigeons",
        "breaking {0} elects {1} sandwich as spokesperson",
    ])
}

fn default_absurd_fillers() -> [Vec<String>; 2] {
    [
        strings(&[
            "man",
            "grandmother",
            "toddler",
            "accountant",
            "barista",
            "mascot",
            "intern",
            "senator",
        ]),
        strings(&[
            "invisible",
            "furious",
            "haunted",
            "municipal",
            "imaginary",
            "sentient",
            "patriotic",
            "bureaucratic",
        ]),
    ]
}

fn fill(skeleton: &str, first: &str, second: &str) -> String {
    skeleton.replace("{0}", first).replace("{1}", second)
}

impl TemplateSets {
    pub fn validate(&self) -> Result<()> {
        for (name, list) in [
            ("mundane templates", &self.mundane),
            ("absurd templates", &self.absurd),
            ("mundane filler list 0", &self.mundane_fillers[0]),
            ("mundane filler list 1", &self.mundane_fillers[1]),
            ("absurd filler list 0", &self.absurd_fillers[0]),
            ("absurd filler list 1", &self.absurd_fillers[1]),
        ] {
            if list.is_empty() {
                return Err(CorpusError::Config(format!("{name} set is empty")));
            }
            if list.iter().any(|s| s.trim().is_empty()) {
                return Err(CorpusError::Config(format!("{name} set has a blank entry")));
            }
        }
        Ok(())
    }

    fn parts(&self, family: Family) -> (&[String], &[Vec<String>; 2]) {
        match family {
            Family::Mundane => (&self.mundane, &self.mundane_fillers),
            Family::Absurd => (&self.absurd, &self.absurd_fillers),
        }
    }

    /// Draw one headline from the family's template and filler lists.
    pub fn headline<R: Rng>(&self, family: Family, rng: &mut R) -> String {
        let (skeletons, fillers) = self.parts(family);
        let skeleton = &skeletons[rng.gen_range(0..skeletons.len())];
        let first = &fillers[0][rng.gen_range(0..fillers[0].len())];
        let second = &fillers[1][rng.gen_range(0..fillers[1].len())];
        fill(skeleton, first, second)
    }

    /// Every headline the family can produce, deduplicated and sorted.
    pub fn all_headlines(&self, family: Family) -> Vec<String> {
        let (skeletons, fillers) = self.parts(family);
        let mut set = BTreeSet::new();
        for skeleton in skeletons {
            for first in &fillers[0] {
                for second in &fillers[1] {
                    set.insert(fill(skeleton, first, second));
                }
            }
        }
        set.into_iter().collect()
    }
}
