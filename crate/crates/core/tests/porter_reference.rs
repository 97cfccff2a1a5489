use gqeprf_core::analysis::porter::stem;

// Reference stems produced by NLTK's PorterStemmer in MARTIN_EXTENSIONS mode,
// which follows Martin Porter's own C implementation.
#[test]
fn matches_reference_vocabulary() {
    let data = include_str!("fixtures/porter_reference.tsv");
    let mut mismatches = Vec::new();
    let mut total = 0;
    for line in data.lines().filter(|l| !l.is_empty()) {
        let (word, want) = line.split_once('\t').expect("word<TAB>stem");
        total += 1;
        let got = stem(word);
        if got != want {
            mismatches.push(format!("{word}: got {got}, want {want}"));
        }
    }
    assert!(total > 7000, "fixture too small: {total}");
    assert!(mismatches.is_empty(), "{} of {total} differ:\n{}", mismatches.len(), mismatches.join("\n"));
}
