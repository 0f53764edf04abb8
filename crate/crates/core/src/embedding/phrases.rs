use std::collections::HashMap;

use super::EmbeddingConfig;

/// Separator placed between the parts of a merged phrase token.
pub const PHRASE_JOINER: char = '_';

/// Bigram score used for phrase merging:
/// `(count(a,b) - min_count) * total_tokens / (count(a) * count(b))`.
pub fn bigram_score(pair_count: u64, count_a: u64, count_b: u64, total: u64, min_count: u64) -> f64 {
    if count_a == 0 || count_b == 0 {
        return 0.0;
    }
    (pair_count as f64 - min_count as f64) * total as f64 / (count_a as f64 * count_b as f64)
}

/// Merges frequent, strongly associated bigrams into single `a_b` tokens.
///
/// One left-to-right greedy pass per note: once `(a, b)` merges, scanning
/// resumes after `b`. Bigrams never span notes.
pub fn detect_phrases(corpus: &[Vec<String>], config: &EmbeddingConfig) -> Vec<Vec<String>> {
    let mut unigrams: HashMap<&str, u64> = HashMap::new();
    let mut bigrams: HashMap<(&str, &str), u64> = HashMap::new();
    let mut total = 0u64;
    for note in corpus {
        for t in note {
            *unigrams.entry(t.as_str()).or_default() += 1;
            total += 1;
        }
        for w in note.windows(2) {
            *bigrams.entry((w[0].as_str(), w[1].as_str())).or_default() += 1;
        }
    }

    let min_count = config.phrase_min_count;
    let qualifies = |a: &str, b: &str| -> bool {
        let pair = bigrams.get(&(a, b)).copied().unwrap_or(0);
        if pair < min_count {
            return false;
        }
        let score = bigram_score(pair, unigrams[a], unigrams[b], total, min_count);
        score > config.phrase_score_threshold
    };

    corpus
        .iter()
        .map(|note| {
            let mut out = Vec::with_capacity(note.len());
            let mut i = 0;
            while i < note.len() {
                if i + 1 < note.len() && qualifies(&note[i], &note[i + 1]) {
                    out.push(format!("{}{}{}", note[i], PHRASE_JOINER, note[i + 1]));
                    i += 2;
                } else {
                    out.push(note[i].clone());
                    i += 1;
                }
            }
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn frequent_rare_parts_bigram_merges() {
        // "gait instability" ten times, parts never alone; fillers f0..f4 and
        // g0..g4 occur twice each, so their bigrams stay below min_count.
        let mut corpus = Vec::new();
        for i in 0..10 {
            corpus.push(words(&format!(
                "patient has gait instability f{} g{}",
                i % 5,
                i % 5
            )));
        }
        let cfg = EmbeddingConfig::default();
        // Hand count: N = 10 notes * 6 tokens = 60; count(gait)=count(instability)=10,
        // count(gait instability)=10 -> score = (10-3)*60/(10*10) = 4.2.
        assert!((bigram_score(10, 10, 10, 60, 3) - 4.2).abs() < 1e-12);
        // 4.2 is below the default threshold of 10, so nothing merges here.
        let out = detect_phrases(&corpus, &cfg);
        assert!(out.iter().all(|n| !n.iter().any(|t| t.contains('_'))));

        // Dilute with 40 notes of unrelated vocabulary: N = 60 + 40*4 = 220,
        // score = 7*220/100 = 15.4 > 10 for gait/instability. "patient has"
        // scores (10-3)*220/(10*10) = 15.4 too, so it merges first and the
        // merge of "gait instability" is unaffected because it starts later.
        for i in 0..40 {
            corpus.push(words(&format!("w{i} x{i} y{i} z{i}")));
        }
        assert!((bigram_score(10, 10, 10, 220, 3) - 15.4).abs() < 1e-12);
        let out = detect_phrases(&corpus, &cfg);
        assert_eq!(out[0][0], "patient_has");
        assert_eq!(out[0][1], "gait_instability");
        assert_eq!(out[0].len(), 4);
    }

    #[test]
    fn single_occurrence_never_merges() {
        let corpus = vec![words("rare pair here"), words("a b c d e f g h i j k")];
        let out = detect_phrases(&corpus, &EmbeddingConfig::default());
        assert_eq!(out, corpus);
    }

    #[test]
    fn empty_corpus() {
        assert!(detect_phrases(&[], &EmbeddingConfig::default()).is_empty());
    }

    #[test]
    fn greedy_left_to_right() {
        // a b c repeated, with both (a,b) and (b,c) qualifying: only a_b merges.
        let mut corpus: Vec<Vec<String>> = (0..10).map(|_| words("a b c")).collect();
        // N = 30 + 200 = 230, score(a,b) = score(b,c) = 7*230/100 = 16.1
        for i in 0..200 {
            corpus.push(words(&format!("u{i}")));
        }
        let out = detect_phrases(&corpus, &EmbeddingConfig::default());
        assert_eq!(out[0], vec!["a_b".to_string(), "c".to_string()]);
    }
}
