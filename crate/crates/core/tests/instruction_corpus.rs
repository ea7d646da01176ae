use serde::Deserialize;
use zsnav_core::instruction::{
    decompose, keyphrases_by_preposition, tokenize, DecomposeMode, DecomposerConfig,
    DecompositionSource, Instruction,
};

#[derive(Deserialize)]
struct Case {
    instruction: String,
    nc_keyphrases: Vec<String>,
    ac_phrase: String,
}

fn corpus() -> Vec<Case> {
    serde_json::from_str(include_str!("fixtures/instruction_corpus.json")).unwrap()
}

#[test]
fn corpus_matches_golden_file() {
    let cases = corpus();
    assert_eq!(cases.len(), 20);
    for case in cases {
        let d = decompose(
            &Instruction::new(case.instruction.as_str()).unwrap(),
            DecomposeMode::Preposition,
            None,
            &DecomposerConfig::default(),
        )
        .unwrap();
        assert_eq!(d.nc_keyphrases, case.nc_keyphrases, "{}", case.instruction);
        assert_eq!(d.ac_phrase, case.ac_phrase, "{}", case.instruction);
        assert_eq!(d.source, DecompositionSource::Preposition);
    }
}

#[test]
fn keyphrases_respect_word_limit() {
    for case in corpus() {
        for max_words in 1..=8 {
            for phrase in keyphrases_by_preposition(&case.instruction, max_words) {
                let n = tokenize(&phrase).len();
                assert!(n >= 1 && n <= max_words, "{phrase:?} has {n} words");
            }
        }
    }
}

#[test]
fn keyphrases_keep_textual_order() {
    for case in corpus() {
        let phrases = keyphrases_by_preposition(&case.instruction, usize::MAX);
        let lower = case.instruction.to_lowercase();
        let mut cursor = 0;
        for phrase in &phrases {
            let first = tokenize(phrase).remove(0);
            let at = lower[cursor..]
                .find(&first)
                .unwrap_or_else(|| panic!("{first:?} out of order in {:?}", case.instruction));
            cursor += at + first.len();
        }
        let rejoined: Vec<String> = phrases.iter().flat_map(|p| tokenize(p)).collect();
        assert_eq!(rejoined, tokenize(&case.instruction));
    }
}
