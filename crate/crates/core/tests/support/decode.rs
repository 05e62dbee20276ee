use strokesense::decode::{correct_word, edit_distance, word_accuracy, Dictionary};
use strokesense::rng::{self, SplitMix64};

/// Full-matrix Wagner-Fischer over chars.
pub fn dp_distance(a: &str, b: &str) -> usize {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

pub const MIXED: [char; 6] = ['a', 'b', 'c', 'ა', 'ბ', 'z'];

pub const LETTERS: [char; 26] = [
    'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'j', 'k', 'l', 'm', 'n', 'o', 'p', 'q', 'r', 's', 't', 'u', 'v', 'w',
    'x', 'y', 'z',
];

pub fn random_string(r: &mut SplitMix64, max_len: usize, letters: &[char]) -> String {
    let len = (rng::unit_f64(r) * (max_len + 1) as f64) as usize;
    (0..len).map(|_| letters[(rng::unit_f64(r) * letters.len() as f64) as usize]).collect()
}

/// `n` random pairs of length ≤ 8 against the DP, with symmetry and the
/// triangle inequality on a third string.
pub fn levenshtein_pairs(n: usize) {
    let mut r = rng::stream(1);
    for _ in 0..n {
        let a = random_string(&mut r, 8, &MIXED);
        let b = random_string(&mut r, 8, &MIXED);
        let c = random_string(&mut r, 8, &MIXED);
        let ab = edit_distance(&a, &b);
        assert_eq!(ab, dp_distance(&a, &b), "{a:?} {b:?}");
        assert_eq!(ab, edit_distance(&b, &a));
        assert!(edit_distance(&a, &c) <= ab + edit_distance(&b, &c));
        assert_eq!(ab == 0, a == b);
    }
}

/// 100 words of length 4-8, pairwise at least `min_gap` edits apart.
pub fn spaced_words(seed: u64, min_gap: usize) -> Vec<String> {
    let mut r = rng::stream(seed);
    let mut words: Vec<String> = Vec::new();
    while words.len() < 100 {
        let w = random_string(&mut r, 8, &LETTERS);
        if w.chars().count() >= 4 && words.iter().all(|o| dp_distance(o, &w) >= min_gap) {
            words.push(w);
        }
    }
    words
}

pub fn substitute(word: &str, at: usize, r: &mut SplitMix64) -> String {
    word.chars()
        .enumerate()
        .map(|(i, ch)| {
            if i != at {
                return ch;
            }
            loop {
                let c = LETTERS[(rng::unit_f64(r) * 26.0) as usize];
                if c != ch {
                    return c;
                }
            }
        })
        .collect()
}

/// Each letter of a dictionary word is substituted with probability 0.1 over
/// 1000 trials. Returns (raw, corrected) word accuracy.
pub fn corruption_trials() -> (f64, f64) {
    // Plain random words: neighbours may collide, as in real vocabularies.
    let words = spaced_words(7, 1);
    let dict = Dictionary::new(&words, 2).unwrap();
    let mut r = rng::stream(8);
    let (mut truth, mut raw, mut fixed) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..1000 {
        let w = words[(rng::unit_f64(&mut r) * 100.0) as usize].clone();
        let mut noisy = w.clone();
        for at in 0..w.chars().count() {
            if rng::unit_f64(&mut r) < 0.1 {
                noisy = substitute(&noisy, at, &mut r);
            }
        }
        fixed.push(correct_word(&noisy, &dict).0);
        raw.push(noisy);
        truth.push(w);
    }
    (word_accuracy(&raw, &truth).unwrap(), word_accuracy(&fixed, &truth).unwrap())
}
