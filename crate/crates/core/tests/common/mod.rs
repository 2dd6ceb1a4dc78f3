#![allow(dead_code)]

use std::path::PathBuf;

use ctxreward::correspondence::{ClassifierBackend, RuleClassifier};
use ctxreward::model::{AuxiliaryContext, ContextKind, Manuscript, Provenance};
use ctxreward::quality::{AspectScorerBackend, LexiconScorer, MeteorReference};
use ctxreward::records::{read_records, Record};
use ctxreward::reward::{Contexts, ScoringBackends};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn read_text(path: PathBuf) -> String {
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn records<T: Record>(name: &str) -> Vec<T> {
    let file = std::fs::File::open(fixture(name)).unwrap();
    read_records(std::io::BufReader::new(file)).unwrap()
}

pub fn manuscript() -> Manuscript {
    records::<Manuscript>("manuscript.jsonl").remove(0)
}

pub fn contexts() -> Contexts {
    Contexts::both(
        AuxiliaryContext::new(ContextKind::FigureDetails, read_text(fixture("figure_details.txt")), Provenance::Fixture).unwrap(),
        AuxiliaryContext::new(ContextKind::NoveltyAssessment, read_text(fixture("novelty_assessment.txt")), Provenance::Fixture).unwrap(),
    )
}

pub fn rule_backends() -> ScoringBackends {
    ScoringBackends {
        aspects: AspectScorerBackend::Lexicon(LexiconScorer::default()),
        figure: ClassifierBackend::RuleBased(RuleClassifier::default()),
        novelty: ClassifierBackend::RuleBased(RuleClassifier::default()),
        meteor_reference: MeteorReference::Body,
    }
}
